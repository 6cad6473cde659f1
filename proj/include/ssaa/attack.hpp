#pragma once

#include "ssaa/model.hpp"
#include "ssaa/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ssaa {

enum class Variant { fga_inc, fga_dec, vfga, ua };
enum class Mode { targeted, untargeted };

std::string to_string(Variant variant);
std::string to_string(Mode mode);
Variant variant_from_string(const std::string& name);
Mode mode_from_string(const std::string& name);

struct AttackConfig {
  Variant variant = Variant::vfga;
  Mode mode = Mode::untargeted;
  std::optional<ClassLabel> target;      // required iff targeted
  std::size_t n_samples = 10;            // N_S
  std::optional<std::size_t> max_iter;   // defaults to dim(x)
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;              // per-sample stream index
  bool record_history = false;

  bool operator==(const AttackConfig&) const = default;
};

// Ascending set of still-eligible component indices.
using IndexSet = std::vector<std::size_t>;

// Which way a selected component moves.
enum class Direction { increase, decrease };

/// One iteration of an attack, kept when AttackConfig::record_history is set.
struct IterationRecord {
  std::size_t iteration = 0;
  std::size_t index = 0;               // component removed from the index set
  Direction direction = Direction::increase;
  std::size_t index_increase = 0;      // i+ (VFGA) or i0
  std::size_t index_decrease = 0;      // i- (VFGA) or i0
  double theta = 0.0;                  // noise parameter at the winning index
  double old_value = 0.0;
  double new_value = 0.0;
  double objective = 0.0;              // F_c of the chosen candidate
  std::vector<double> candidate_scores;
  std::size_t best_candidate = 0;
  std::size_t gamma_size_after = 0;
  ClassLabel label_after = 0;
};

struct AttackResult {
  bool success = false;
  InputVector x_adv;
  ClassLabel original_label = 0;
  ClassLabel final_label = 0;
  std::optional<ClassLabel> target;
  std::size_t iterations = 0;
  std::uint64_t mp = 0;
  std::size_t l0_components = 0;
  std::size_t l0_pixels = 0;
  std::size_t gamma_initial = 0;
  std::int64_t wall_time_ns = 0;
  std::vector<IterationRecord> history;
};

// Which extreme of the score the selection takes.
enum class Extremum { max, min };

/// Lowest-index argmax/argmin over gamma of the headroom-weighted gradient:
/// (1 - x_i) g_i when increasing, x_i g_i when decreasing.
std::size_t select_component(std::span<const double> x_adv, const IndexSet& gamma, std::span<const double> grad,
                             Direction direction, Extremum extremum);

// argmax over gamma of (1 - x_i) g_i.
std::size_t select_fga_inc(std::span<const double> x_adv, const IndexSet& gamma, std::span<const double> grad);
// argmin over gamma of x_i g_i.
std::size_t select_fga_dec(std::span<const double> x_adv, const IndexSet& gamma, std::span<const double> grad);

/// Copies of x_adv with component `index` replaced by clip(x_adv[index] + s, 0, 1)
/// for each sample s.
std::vector<std::vector<double>> make_candidates(std::span<const double> x_adv, std::size_t index,
                                                 std::span<const double> samples);

struct BestCandidate {
  std::size_t index = 0;
  double objective = 0.0;
  std::vector<double> scores;  // F_c for every candidate
};

/// Batch-evaluates the candidates and returns the one maximising (targeted)
/// or minimising (untargeted) F_c; ties resolve to the lowest candidate index.
BestCandidate pick_best(MeteredClassifier& model, std::span<const std::vector<double>> candidates,
                        ClassLabel objective_class, Mode mode);

/// Initial eligible set: all indices, minus those already at the bound the
/// variant pushes towards ({x_i = 1} for fga-inc/ua/vfga, {x_i = 0} for fga-dec).
IndexSet initial_gamma(std::span<const double> x, Variant variant);

/// One-sided attack: increasing or decreasing folded-Gaussian (FGA), or the
/// uniform-noise baseline (UA). `reference_label` is the label the attack moves
/// away from; it defaults to the model's prediction on x.
AttackResult run_fga(const Classifier& model, const InputVector& x, const AttackConfig& config,
                     std::optional<ClassLabel> reference_label = std::nullopt);

/// Two-sided voting attack (VFGA).
AttackResult run_vfga(const Classifier& model, const InputVector& x, const AttackConfig& config,
                      std::optional<ClassLabel> reference_label = std::nullopt);

// Dispatches on config.variant.
AttackResult run_attack(const Classifier& model, const InputVector& x, const AttackConfig& config,
                        std::optional<ClassLabel> reference_label = std::nullopt);

}  // namespace ssaa
