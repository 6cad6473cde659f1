#pragma once

#include <array>
#include <cstdint>

namespace ssaa {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as easy
// as 1, 2, 3", SC'11). Pure function of (counter, key).
PhiloxCounter philox4x32_10(PhiloxCounter counter, PhiloxKey key);

/// Deterministic random stream identified by (seed, stream index).
///
/// The 64-bit seed is the Philox key. Each 128-bit counter block is laid out as
/// (block lo, block hi, stream lo, stream hi), so streams derived from the same
/// seed never share a block. Words are consumed in order; a double takes two
/// words (53 significant bits). Gaussian variates use the Box-Muller transform
/// on (open-interval uniform, uniform) pairs and hand out the sine branch on
/// the following call.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on [0, 1).
  double uniform();
  // Uniform on (0, 1).
  double uniform_open();
  // Standard normal.
  double normal();
  // Uniform integer in [0, bound), by rejection on 64-bit words.
  std::uint64_t below(std::uint64_t bound);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  PhiloxCounter buffer_{};
  int next_word_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace ssaa
