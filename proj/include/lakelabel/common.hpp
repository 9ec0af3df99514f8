#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lakelabel {

// Vote value used by labeling functions and matrices for "no opinion".
inline constexpr int kAbstain = -1;

/// Error type thrown by every module; the message carries the context
/// (line number, field name, stage) the spec-level contracts require.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// 64-bit FNV-1a. Used for prompt hashes and input-manifest digests.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string to_hex(std::uint64_t v);

// Whole-file IO helpers. Throw Error with the path on failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

// %.17g formatting for the textual model-parameter files.
std::string format_g17(double v);

} // namespace lakelabel
