#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace vlseg {

// Every recoverable failure in the library throws this (or a subclass).
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

using Rng = std::mt19937_64;

// Stable 64-bit hash for strings (FNV-1a). Used for vocabulary bucketing
// and for deriving per-sample seeds from sample ids.
inline uint64_t fnv1a(std::string_view s) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Derives an independent seed from a base seed and a stream tag, so that
// different consumers (shuffling, bank selection, init) never share a stream.
inline uint64_t derive_seed(uint64_t base, std::string_view tag) {
    uint64_t h = fnv1a(tag);
    h ^= base + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return h;
}

}  // namespace vlseg
