#pragma once

#include "ssaa/types.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace ssaa {

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Parses an IDX image/label pair (big-endian header, unsigned-byte payload).
/// Pixels are scaled to [0, 1] by dividing by 255; images get shape (1, rows, cols).
LabeledDataset parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels);
LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

// Quantises values to round(255 v) bytes. Inputs must share one shape.
std::vector<std::uint8_t> encode_idx_images(const LabeledDataset& dataset);
std::vector<std::uint8_t> encode_idx_labels(const LabeledDataset& dataset);
void write_idx(const LabeledDataset& dataset, const std::filesystem::path& images,
               const std::filesystem::path& labels);

struct SyntheticSpec {
  std::size_t classes = 4;
  std::size_t per_class = 100;
  std::size_t dim = 64;
  std::uint64_t seed = 1;

  bool operator==(const SyntheticSpec&) const = default;
};

// Within-class standard deviation of the synthetic generator.
inline constexpr double kSyntheticSigma = 0.03;
// Minimum distance between class means, in within-class standard deviations.
inline constexpr double kSyntheticSeparation = 6.0;

/// Deterministic class-conditional blobs in [0, 1]^dim. Sample k belongs to
/// class k % classes, so any prefix is class-balanced.
///
/// Each class gets a prototype on a light background: every component is
/// dim (uniform in [0.45, 0.6]) with probability 0.3, bright ([0.95, 0.99])
/// with probability 0.25 and background ([0.82, 0.9]) otherwise. Prototypes
/// are redrawn until all pairs are at least kSyntheticSeparation *
/// kSyntheticSigma apart. Samples add isotropic Gaussian noise of sd
/// kSyntheticSigma and clip to [0, 1].
LabeledDataset gen_synthetic(const SyntheticSpec& spec);

// First `limit` samples, in order.
LabeledDataset take_first(const LabeledDataset& dataset, std::size_t limit);

}  // namespace ssaa
