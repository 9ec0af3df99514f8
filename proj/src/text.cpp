#include "lakelabel/text.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

namespace lakelabel {

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

bool is_token_char(char c) {
    unsigned char u = static_cast<unsigned char>(c);
    if (u >= 0x80) return true;
    return !is_space(c) && !std::ispunct(u);
}

// Validates "d{1,3}(,ddd)+" grouping and strips the commas.
bool strip_thousands(std::string_view digits, std::string& out) {
    std::size_t first_comma = digits.find(',');
    if (first_comma == 0 || first_comma > 3) return false;
    std::size_t i = 0;
    for (; i < first_comma; ++i)
        if (!std::isdigit(static_cast<unsigned char>(digits[i]))) return false;
    out.assign(digits.substr(0, first_comma));
    while (i < digits.size()) {
        if (digits[i] != ',') return false;
        if (digits.size() - i < 4) return false;
        for (std::size_t k = 1; k <= 3; ++k) {
            if (!std::isdigit(static_cast<unsigned char>(digits[i + k]))) return false;
            out.push_back(digits[i + k]);
        }
        i += 4;
    }
    return true;
}

} // namespace

std::string_view trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return s.substr(b, e - b);
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && !is_token_char(s[i])) ++i;
        std::size_t start = i;
        while (i < s.size() && is_token_char(s[i])) ++i;
        if (i > start) tokens.emplace_back(s.substr(start, i - start));
    }
    return tokens;
}

std::optional<double> parse_numeric(std::string_view cell) {
    std::string_view s = trim(cell);
    if (s.empty()) return std::nullopt;

    bool negative = false;
    if (s.front() == '+' || s.front() == '-') {
        negative = s.front() == '-';
        s.remove_prefix(1);
        if (s.empty()) return std::nullopt;
    }

    std::string buf;
    if (s.find(',') != std::string_view::npos) {
        std::size_t int_end = s.find_first_not_of("0123456789,");
        std::string_view int_part = s.substr(0, int_end);
        std::string_view rest = int_end == std::string_view::npos ? std::string_view{} : s.substr(int_end);
        if (!rest.empty() && rest.front() != '.') return std::nullopt;
        if (!strip_thousands(int_part, buf)) return std::nullopt;
        buf.append(rest);
        s = buf;
    }

    for (char c : s) {
        bool ok = (c >= '0' && c <= '9') || c == '.' || c == 'e' || c == 'E' || c == '+' || c == '-';
        if (!ok) return std::nullopt;
    }

    double value = 0.0;
    auto result = std::from_chars(s.data(), s.data() + s.size(), value);
    if (result.ec != std::errc{} || result.ptr != s.data() + s.size()) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return negative ? -value : value;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    std::string h = ascii_lower(haystack);
    std::string n = ascii_lower(needle);
    return h.find(n) != std::string::npos;
}

} // namespace lakelabel
