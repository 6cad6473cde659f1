#include "ssaa/attack.hpp"

#include "ssaa/error.hpp"
#include "ssaa/metrics.hpp"
#include "ssaa/noise.hpp"
#include "ssaa/rng.hpp"

#include <algorithm>
#include <chrono>

namespace ssaa {

std::string to_string(Variant variant) {
  switch (variant) {
    case Variant::fga_inc: return "fga-inc";
    case Variant::fga_dec: return "fga-dec";
    case Variant::vfga: return "vfga";
    case Variant::ua: return "ua";
  }
  return "unknown";
}

std::string to_string(Mode mode) { return mode == Mode::targeted ? "targeted" : "untargeted"; }

Variant variant_from_string(const std::string& name) {
  if (name == "fga-inc" || name == "fga") return Variant::fga_inc;
  if (name == "fga-dec") return Variant::fga_dec;
  if (name == "vfga") return Variant::vfga;
  if (name == "ua") return Variant::ua;
  throw ConfigError("unknown attack variant '" + name + "' (expected fga-inc, fga-dec, vfga or ua)");
}

Mode mode_from_string(const std::string& name) {
  if (name == "targeted") return Mode::targeted;
  if (name == "untargeted") return Mode::untargeted;
  throw ConfigError("unknown attack mode '" + name + "' (expected targeted or untargeted)");
}

std::size_t select_component(std::span<const double> x_adv, const IndexSet& gamma, std::span<const double> grad,
                             Direction direction, Extremum extremum) {
  if (gamma.empty()) throw ExhaustedError("no eligible component left to select");
  if (grad.size() != x_adv.size()) {
    throw DimensionError("gradient length " + std::to_string(grad.size()) + " does not match input length " +
                         std::to_string(x_adv.size()));
  }
  auto score = [&](std::size_t i) {
    if (i >= x_adv.size()) throw RangeError("index " + std::to_string(i) + " out of range");
    const double headroom = direction == Direction::increase ? 1.0 - x_adv[i] : x_adv[i];
    return headroom * grad[i];
  };
  std::size_t best = gamma.front();
  double best_score = score(best);
  for (std::size_t k = 1; k < gamma.size(); ++k) {
    const std::size_t i = gamma[k];
    const double s = score(i);
    if (extremum == Extremum::max ? s > best_score : s < best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

std::size_t select_fga_inc(std::span<const double> x_adv, const IndexSet& gamma, std::span<const double> grad) {
  return select_component(x_adv, gamma, grad, Direction::increase, Extremum::max);
}

std::size_t select_fga_dec(std::span<const double> x_adv, const IndexSet& gamma, std::span<const double> grad) {
  return select_component(x_adv, gamma, grad, Direction::decrease, Extremum::min);
}

std::vector<std::vector<double>> make_candidates(std::span<const double> x_adv, std::size_t index,
                                                 std::span<const double> samples) {
  if (index >= x_adv.size()) {
    throw RangeError("candidate index " + std::to_string(index) + " out of range for input length " +
                     std::to_string(x_adv.size()));
  }
  std::vector<std::vector<double>> out;
  out.reserve(samples.size());
  for (double s : samples) {
    auto& y = out.emplace_back(x_adv.begin(), x_adv.end());
    y[index] = std::clamp(x_adv[index] + s, 0.0, 1.0);
  }
  return out;
}

BestCandidate pick_best(MeteredClassifier& model, std::span<const std::vector<double>> candidates,
                        ClassLabel objective_class, Mode mode) {
  if (candidates.empty()) throw ExhaustedError("pick_best called without candidates");
  if (objective_class >= model.model().num_classes()) {
    throw RangeError("objective class " + std::to_string(objective_class) + " out of range");
  }
  const auto probs = model.forward_batch(candidates);
  BestCandidate best;
  best.scores.reserve(probs.size());
  for (const auto& p : probs) best.scores.push_back(p[objective_class]);
  for (std::size_t h = 1; h < best.scores.size(); ++h) {
    const double s = best.scores[h];
    if (mode == Mode::targeted ? s > best.scores[best.index] : s < best.scores[best.index]) best.index = h;
  }
  best.objective = best.scores[best.index];
  return best;
}

IndexSet initial_gamma(std::span<const double> x, Variant variant) {
  const double blocked = variant == Variant::fga_dec ? 0.0 : 1.0;
  IndexSet gamma;
  gamma.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] != blocked) gamma.push_back(i);
  }
  return gamma;
}

namespace {

struct StepContext {
  MeteredClassifier& meter;
  const AttackConfig& config;
  ClassLabel objective_class;
  RngStream& rng;
};

void erase_index(IndexSet& gamma, std::size_t index) {
  const auto it = std::lower_bound(gamma.begin(), gamma.end(), index);
  if (it != gamma.end() && *it == index) gamma.erase(it);
}

// Targeted attacks push F_c up, untargeted ones push it down; moving a
// component down flips the sign of its first-order effect.
Extremum selection_extremum(Mode mode, Direction direction) {
  const bool raise_objective = mode == Mode::targeted;
  const bool increasing = direction == Direction::increase;
  return raise_objective == increasing ? Extremum::max : Extremum::min;
}

IterationRecord one_sided_step(StepContext& ctx, std::vector<double>& x_adv, IndexSet& gamma, const Gradient& grad) {
  const Variant variant = ctx.config.variant;
  const Direction direction = variant == Variant::fga_dec ? Direction::decrease : Direction::increase;
  const std::size_t i0 =
      select_component(x_adv, gamma, grad, direction, selection_extremum(ctx.config.mode, direction));

  const double headroom = direction == Direction::increase ? 1.0 - x_adv[i0] : x_adv[i0];
  NoiseSpec noise;
  switch (variant) {
    case Variant::fga_inc: noise = {NoiseFamily::folded_gaussian, headroom * headroom}; break;
    case Variant::fga_dec: noise = {NoiseFamily::neg_folded_gaussian, headroom * headroom}; break;
    case Variant::ua: noise = {NoiseFamily::uniform, headroom}; break;
    case Variant::vfga: throw ConfigError("vfga is not a one-sided variant");
  }
  const auto samples = sample(noise, ctx.config.n_samples, ctx.rng);
  auto candidates = make_candidates(x_adv, i0, samples);
  auto best = pick_best(ctx.meter, candidates, ctx.objective_class, ctx.config.mode);

  IterationRecord rec;
  rec.index = rec.index_increase = rec.index_decrease = i0;
  rec.direction = direction;
  rec.theta = noise.theta;
  rec.old_value = x_adv[i0];
  x_adv = std::move(candidates[best.index]);
  rec.new_value = x_adv[i0];
  rec.objective = best.objective;
  rec.best_candidate = best.index;
  rec.candidate_scores = std::move(best.scores);
  erase_index(gamma, i0);
  return rec;
}

IterationRecord voting_step(StepContext& ctx, std::vector<double>& x_adv, IndexSet& gamma, const Gradient& grad) {
  const Mode mode = ctx.config.mode;
  const std::size_t n = ctx.config.n_samples;
  const std::size_t up = select_component(x_adv, gamma, grad, Direction::increase,
                                          selection_extremum(mode, Direction::increase));
  const std::size_t down = select_component(x_adv, gamma, grad, Direction::decrease,
                                            selection_extremum(mode, Direction::decrease));

  const double theta_up = (1.0 - x_adv[up]) * (1.0 - x_adv[up]);
  const double theta_down = x_adv[down] * x_adv[down];
  const auto up_samples = sample_folded_gaussian(theta_up, n, ctx.rng);
  const auto down_samples = sample_neg_folded_gaussian(theta_down, n, ctx.rng);

  auto candidates = make_candidates(x_adv, up, up_samples);
  auto lowered = make_candidates(x_adv, down, down_samples);
  candidates.insert(candidates.end(), std::make_move_iterator(lowered.begin()),
                    std::make_move_iterator(lowered.end()));
  auto best = pick_best(ctx.meter, candidates, ctx.objective_class, mode);

  IterationRecord rec;
  const bool raised = best.index < n;
  rec.index = raised ? up : down;
  rec.index_increase = up;
  rec.index_decrease = down;
  rec.direction = raised ? Direction::increase : Direction::decrease;
  rec.theta = raised ? theta_up : theta_down;
  rec.old_value = x_adv[rec.index];
  x_adv = std::move(candidates[best.index]);
  rec.new_value = x_adv[rec.index];
  rec.objective = best.objective;
  rec.best_candidate = best.index;
  rec.candidate_scores = std::move(best.scores);
  erase_index(gamma, rec.index);
  return rec;
}

template <class Step>
AttackResult drive(const Classifier& model, const InputVector& x, const AttackConfig& config,
                   std::optional<ClassLabel> reference_label, Step step) {
  const auto start = std::chrono::steady_clock::now();
  x.validate();
  if (x.size() != model.input_size()) {
    throw DimensionError("attack input has " + std::to_string(x.size()) + " components, model expects " +
                         std::to_string(model.input_size()));
  }
  if (config.n_samples == 0) throw ConfigError("n_samples must be at least 1");
  if (config.max_iter && *config.max_iter == 0) throw ConfigError("max_iter must be at least 1");
  if (config.mode == Mode::targeted && !config.target) throw ConfigError("targeted attack without a target class");
  if (config.mode == Mode::untargeted && config.target) throw ConfigError("untargeted attack given a target class");
  if (config.target && *config.target >= model.num_classes()) {
    throw RangeError("target class " + std::to_string(*config.target) + " out of range");
  }
  if (reference_label && *reference_label >= model.num_classes()) {
    throw RangeError("reference label " + std::to_string(*reference_label) + " out of range");
  }

  MeteredClassifier meter(model);
  ClassLabel current = meter.label(x.values);
  const ClassLabel reference = reference_label.value_or(current);
  if (config.mode == Mode::targeted && *config.target == reference) {
    throw ConfigError("target class " + std::to_string(reference) + " equals the original label");
  }
  const ClassLabel objective_class = config.mode == Mode::targeted ? *config.target : reference;
  auto satisfied = [&](ClassLabel l) { return config.mode == Mode::targeted ? l == *config.target : l != reference; };

  RngStream rng(config.seed, config.stream);
  StepContext ctx{meter, config, objective_class, rng};
  std::vector<double> x_adv = x.values;
  IndexSet gamma = initial_gamma(x.values, config.variant);

  AttackResult result;
  result.original_label = reference;
  result.target = config.target;
  result.gamma_initial = gamma.size();
  const std::size_t max_iter = config.max_iter.value_or(x.size());

  while (!gamma.empty() && !satisfied(current) && result.iterations < max_iter) {
    const Gradient grad = meter.grad_class(x_adv, objective_class);
    IterationRecord rec = step(ctx, x_adv, gamma, grad);
    current = meter.label(x_adv);
    if (config.record_history) {
      rec.iteration = result.iterations;
      rec.gamma_size_after = gamma.size();
      rec.label_after = current;
      result.history.push_back(std::move(rec));
    }
    ++result.iterations;
  }

  result.final_label = current;
  result.success = satisfied(current);
  result.mp = meter.mp();
  result.l0_components = l0_components(x.values, x_adv);
  result.l0_pixels = l0_pixels(x.values, x_adv, x.shape);
  result.x_adv = InputVector(x.shape, std::move(x_adv));
  result.wall_time_ns =
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace

AttackResult run_fga(const Classifier& model, const InputVector& x, const AttackConfig& config,
                     std::optional<ClassLabel> reference_label) {
  if (config.variant == Variant::vfga) throw ConfigError("run_fga does not handle the vfga variant");
  return drive(model, x, config, reference_label, one_sided_step);
}

AttackResult run_vfga(const Classifier& model, const InputVector& x, const AttackConfig& config,
                      std::optional<ClassLabel> reference_label) {
  if (config.variant != Variant::vfga) throw ConfigError("run_vfga requires the vfga variant");
  return drive(model, x, config, reference_label, voting_step);
}

AttackResult run_attack(const Classifier& model, const InputVector& x, const AttackConfig& config,
                        std::optional<ClassLabel> reference_label) {
  return config.variant == Variant::vfga ? run_vfga(model, x, config, reference_label)
                                         : run_fga(model, x, config, reference_label);
}

}  // namespace ssaa
