#ifndef CROSSTAG_COMMON_HPP
#define CROSSTAG_COMMON_HPP

#include <charconv>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace crosstag {

// Malformed or inconsistent input data (bad corpus lines, unknown tags,
// mismatched feature spaces). Mapped to exit code 2 by the CLI.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failure during training (NaN objective, line-search breakdown).
// Mapped to exit code 3 by the CLI.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Shortest decimal representation that round-trips through from_chars.
std::string fmt_double(double value);

double parse_double(std::string_view text, const std::string& context);
long parse_long(std::string_view text, const std::string& context);

std::vector<std::string_view> split(std::string_view line, char sep);
std::vector<std::string_view> split_ws(std::string_view line);

// splitmix64; used to derive independent sub-seeds from a master seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace crosstag

#endif
