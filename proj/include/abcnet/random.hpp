#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace abcnet {

using Rng = std::mt19937_64;

/// Derives an independent 64-bit seed from a base seed and a list of stream
/// tags (chain id, replicate index, retry counter, ...). The mapping is a
/// pure function of its inputs, so substreams are stable across runs and
/// thread schedules.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
    std::vector<std::uint32_t> words;
    words.reserve(2 * (tags.size() + 1));
    auto push = [&words](std::uint64_t v) {
        words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
        words.push_back(static_cast<std::uint32_t>(v >> 32));
    };
    push(base);
    for (auto t : tags) push(t);
    std::seed_seq seq(words.begin(), words.end());
    std::uint32_t out[2];
    seq.generate(out, out + 2);
    return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

inline Rng make_rng(std::uint64_t base, std::initializer_list<std::uint64_t> tags = {}) {
    return Rng(derive_seed(base, tags));
}

}  // namespace abcnet
