#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace fewts {

/// Shortest decimal form that parses back to the identical double
/// (std::to_chars round-trip guarantee). Used for every number we persist.
std::string fmt_double(double v);

/// Strict parse of a full token; `context` prefixes the error message.
double parse_double(std::string_view token, const std::string& context);
long parse_long(std::string_view token, const std::string& context);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Splits on `delim`, keeping empty fields ("a,,b" -> {"a","","b"}).
std::vector<std::string> split(std::string_view s, char delim);
std::string_view trim(std::string_view s);

}  // namespace fewts
