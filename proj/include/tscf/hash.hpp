#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace tscf {

// 64-bit FNV-1a. Used for checkpoint blob integrity, frozen-model assertions
// and artifact hashes in run.json. Not cryptographic.
constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = kFnvOffset) {
    return fnv1a64(s.data(), s.size(), h);
}

std::string to_hex(std::uint64_t value);

// Hash of a whole file's bytes, formatted as "fnv1a64:<16 hex digits>".
// Throws IoError if the file cannot be read.
std::string hash_file(const std::string& path);

}  // namespace tscf
