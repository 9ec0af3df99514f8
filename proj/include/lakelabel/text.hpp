#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lakelabel {

std::string_view trim(std::string_view s);

// ASCII-only case folding; non-ASCII bytes pass through untouched.
std::string ascii_lower(std::string_view s);

// Tokens are maximal runs of characters that are neither whitespace nor
// ASCII punctuation. Non-ASCII bytes count as token characters.
std::vector<std::string> tokenize(std::string_view s);

// A cell is numeric iff, after trimming, it is a decimal number with
// optional sign, optional exponent, and optional comma thousands
// separators in strict groups of three ("1,234,567.5"). "inf"/"nan"
// are not numbers.
std::optional<double> parse_numeric(std::string_view cell);

bool contains_ci(std::string_view haystack, std::string_view needle);

} // namespace lakelabel
