#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace driftguard {

using Rng = std::mt19937_64;

// Stable 64-bit FNV-1a of a stream label; std::hash is not portable across
// builds.
constexpr std::uint64_t stream_tag(std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Independent generator for (seed, label, indices...). Substreams depend only
// on their coordinates, never on the order in which they are requested.
inline Rng substream(std::uint64_t seed, std::string_view label,
                     std::initializer_list<std::uint64_t> indices = {}) {
  std::vector<std::uint32_t> words;
  auto push64 = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffULL));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push64(seed);
  push64(stream_tag(label));
  for (auto v : indices) push64(v);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

}  // namespace driftguard
