#pragma once

#include <string>
#include <string_view>

namespace kickwell {

// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

// Exact, locale-independent text form of a double (hex float).
std::string exact_double(double x);

}  // namespace kickwell
