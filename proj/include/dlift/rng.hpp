#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace dlift {

// Philox4x32-10 counter-based generator (Salmon et al., Random123). The key is
// the 64-bit seed and the 128-bit counter indexes the output block, so the
// k-th draw for a seed is a pure function of (seed, k).
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit Philox4x32(std::uint64_t seed = 0) noexcept;

  static Block generate(Block counter, Key key) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  // Uniform integer in [0, bound). bound must be nonzero.
  std::uint64_t below(std::uint64_t bound) noexcept;
  // Uniform double in [0, 1) with 53 random bits.
  double unit() noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  // Number of 64-bit values drawn so far.
  std::uint64_t position() const noexcept { return drawn_; }

 private:
  std::uint64_t seed_;
  std::uint64_t block_index_ = 0;
  Block buffer_{};
  int buffered_ = 0;
  std::uint64_t drawn_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Stable seed derivation; never depends on scheduling or platform.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag) noexcept;
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

}  // namespace dlift
