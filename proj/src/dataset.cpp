#include "ssaa/dataset.hpp"

#include "ssaa/error.hpp"
#include "ssaa/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

namespace ssaa {
namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset, const char* what) {
  if (offset + 4 > bytes.size()) {
    throw FormatError(std::string("IDX ") + what + ": truncated header at offset " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(v >> shift));
}

std::string hex(std::uint32_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s = "0x";
  for (int shift = 28; shift >= 0; shift -= 4) s += digits[(v >> shift) & 0xF];
  return s;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

LabeledDataset parse_idx(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels) {
  const std::uint32_t image_magic = read_be32(images, 0, "images");
  if (image_magic != kIdxImageMagic) {
    throw FormatError("IDX images: magic " + hex(image_magic) + " at offset 0, expected " + hex(kIdxImageMagic));
  }
  const std::uint32_t label_magic = read_be32(labels, 0, "labels");
  if (label_magic != kIdxLabelMagic) {
    throw FormatError("IDX labels: magic " + hex(label_magic) + " at offset 0, expected " + hex(kIdxLabelMagic));
  }
  const std::size_t count = read_be32(images, 4, "images");
  const std::size_t rows = read_be32(images, 8, "images");
  const std::size_t cols = read_be32(images, 12, "images");
  const std::size_t label_count = read_be32(labels, 4, "labels");
  if (count != label_count) {
    throw FormatError("IDX: image count " + std::to_string(count) + " (offset 4) does not match label count " +
                      std::to_string(label_count) + " (offset 4)");
  }
  constexpr std::size_t image_header = 16;
  constexpr std::size_t label_header = 8;
  const std::size_t pixels = rows * cols;
  if (images.size() < image_header + count * pixels) {
    throw FormatError("IDX images: payload truncated at offset " + std::to_string(images.size()) + ", expected " +
                      std::to_string(image_header + count * pixels) + " bytes");
  }
  if (labels.size() < label_header + count) {
    throw FormatError("IDX labels: payload truncated at offset " + std::to_string(labels.size()) + ", expected " +
                      std::to_string(label_header + count) + " bytes");
  }

  LabeledDataset out;
  out.provenance = "idx";
  out.inputs.reserve(count);
  out.labels.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> values(pixels);
    const std::size_t base = image_header + k * pixels;
    for (std::size_t p = 0; p < pixels; ++p) values[p] = static_cast<double>(images[base + p]) / 255.0;
    out.inputs.emplace_back(Shape::image(1, rows, cols), std::move(values));
    const ClassLabel l = labels[label_header + k];
    out.labels.push_back(l);
    out.num_classes = std::max(out.num_classes, l + 1);
  }
  return out;
}

LabeledDataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto image_bytes = read_file(images);
  const auto label_bytes = read_file(labels);
  auto out = parse_idx(image_bytes, label_bytes);
  out.provenance = "idx:" + images.string() + "," + labels.string();
  return out;
}

std::vector<std::uint8_t> encode_idx_images(const LabeledDataset& dataset) {
  std::size_t rows = 1;
  std::size_t cols = dataset.input_size();
  if (!dataset.inputs.empty() && dataset.inputs.front().shape.is_image()) {
    const auto& s = dataset.inputs.front().shape;
    if (s.channels() != 1) throw DimensionError("IDX images hold a single channel");
    rows = s.dims[1];
    cols = s.dims[2];
  }
  std::vector<std::uint8_t> out;
  put_be32(out, kIdxImageMagic);
  put_be32(out, static_cast<std::uint32_t>(dataset.size()));
  put_be32(out, static_cast<std::uint32_t>(rows));
  put_be32(out, static_cast<std::uint32_t>(cols));
  for (const auto& x : dataset.inputs) {
    if (x.size() != rows * cols) throw DimensionError("IDX images must share one shape");
    for (double v : x.values) out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(const LabeledDataset& dataset) {
  std::vector<std::uint8_t> out;
  put_be32(out, kIdxLabelMagic);
  put_be32(out, static_cast<std::uint32_t>(dataset.size()));
  for (ClassLabel l : dataset.labels) {
    if (l > 255) throw RangeError("IDX labels are single bytes; label " + std::to_string(l) + " does not fit");
    out.push_back(static_cast<std::uint8_t>(l));
  }
  return out;
}

void write_idx(const LabeledDataset& dataset, const std::filesystem::path& images,
               const std::filesystem::path& labels) {
  write_file(images, encode_idx_images(dataset));
  write_file(labels, encode_idx_labels(dataset));
}

LabeledDataset gen_synthetic(const SyntheticSpec& spec) {
  if (spec.classes < 1 || spec.per_class < 1 || spec.dim < 1) {
    throw ConfigError("synthetic dataset needs at least one class, sample and dimension");
  }
  RngStream proto_rng(spec.seed, 0);
  const double min_gap = kSyntheticSeparation * kSyntheticSigma;
  std::vector<std::vector<double>> prototypes;
  while (prototypes.size() < spec.classes) {
    std::vector<double> m(spec.dim);
    for (auto& v : m) {
      const double kind = proto_rng.uniform();
      const double level = proto_rng.uniform();
      if (kind < 0.3) {
        v = 0.45 + 0.15 * level;
      } else if (kind < 0.55) {
        v = 0.95 + 0.04 * level;
      } else {
        v = 0.82 + 0.08 * level;
      }
    }
    const bool separated = std::all_of(prototypes.begin(), prototypes.end(), [&](const auto& other) {
      double d2 = 0.0;
      for (std::size_t i = 0; i < spec.dim; ++i) d2 += (m[i] - other[i]) * (m[i] - other[i]);
      return std::sqrt(d2) >= min_gap;
    });
    if (separated) prototypes.push_back(std::move(m));
  }

  LabeledDataset out;
  out.num_classes = spec.classes;
  out.provenance = "synthetic:classes=" + std::to_string(spec.classes) + ",per_class=" +
                   std::to_string(spec.per_class) + ",dim=" + std::to_string(spec.dim) +
                   ",seed=" + std::to_string(spec.seed);
  RngStream noise_rng(spec.seed, 1);
  const std::size_t total = spec.classes * spec.per_class;
  for (std::size_t k = 0; k < total; ++k) {
    const ClassLabel c = k % spec.classes;
    std::vector<double> x(spec.dim);
    for (std::size_t i = 0; i < spec.dim; ++i) {
      x[i] = std::clamp(prototypes[c][i] + kSyntheticSigma * noise_rng.normal(), 0.0, 1.0);
    }
    out.inputs.emplace_back(std::move(x));
    out.labels.push_back(c);
  }
  return out;
}

LabeledDataset take_first(const LabeledDataset& dataset, std::size_t limit) {
  LabeledDataset out;
  out.num_classes = dataset.num_classes;
  out.provenance = dataset.provenance;
  const std::size_t n = std::min(limit, dataset.size());
  out.inputs.assign(dataset.inputs.begin(), dataset.inputs.begin() + static_cast<std::ptrdiff_t>(n));
  out.labels.assign(dataset.labels.begin(), dataset.labels.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

}  // namespace ssaa
