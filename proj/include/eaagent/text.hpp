#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace eaagent {

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

// Splits on '\t' only; empty fields are preserved.
std::vector<std::string_view> split_tabs(std::string_view line);

// Decodes %XX hex escapes; malformed escapes are passed through unchanged.
std::string percent_decode(std::string_view s);

bool is_valid_utf8(std::string_view s);

// Fixed two-decimal rendering used in prompts ("0.91", "-0.55").
std::string format_fixed2(double value);

}  // namespace eaagent
