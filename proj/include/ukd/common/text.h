#ifndef UKD_COMMON_TEXT_H_
#define UKD_COMMON_TEXT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ukd {

std::vector<std::string_view> Split(std::string_view s, char sep);
std::string_view Trim(std::string_view s);

// Strict numeric parsing: the whole token must be consumed.
std::optional<double> ParseDouble(std::string_view s);
std::optional<std::int64_t> ParseInt(std::string_view s);

// Shortest representation that round-trips exactly.
std::string FormatExact(double v);
// Fixed number of significant digits, for human-facing tables.
std::string FormatSig(double v, int digits = 6);
// "absent" for missing values.
std::string FormatOptional(const std::optional<double>& v, int digits = 6);

}  // namespace ukd

#endif  // UKD_COMMON_TEXT_H_
