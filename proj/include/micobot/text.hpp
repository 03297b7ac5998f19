#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace micobot::text {

std::string_view trim(std::string_view s);
std::string lower(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
/// Lowercased alphanumeric words; apostrophes are kept inside words ("i'll").
std::vector<std::string> words(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);
std::string join(const std::vector<std::string>& parts, std::string_view sep);
/// Replaces every "{key}" in `tmpl` by the value for that key.
std::string substitute(std::string tmpl, const std::vector<std::pair<std::string, std::string>>& vars);
/// Underscored identifier as prose: "coffee_table" -> "coffee table".
std::string humanize(std::string_view ident);
/// Strict numeric parse of the whole token; throws ParseError with `line`.
double parse_double(std::string_view token, int line = 0);
long long parse_int(std::string_view token, int line = 0);

}  // namespace micobot::text
