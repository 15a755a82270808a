#pragma once

// One search trial: parallel priority dynamics over all items running
// concurrently with serial selection (Luce choice), covert or overt attention
// shifts and strict scrutiny of the attended item.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "casper/classification.hpp"
#include "casper/error.hpp"
#include "casper/items.hpp"
#include "casper/rng.hpp"
#include "casper/stimuli.hpp"

namespace casper {

struct EngineParams {
  double delta = 0.5;                 // priority decay
  double tau = 3.0;                   // parallel match strength
  double p_min = 0.001;               // parallel rejection threshold
  double d_max = 4.0;                 // distance (visual-field radii) where processing stops
  double w_present = 3.0;             // template has the feature
  double w_absent = 0.1;              // only the item has the feature
  double p_sample_relevant = 0.85;
  double p_sample_irrelevant = 0.15;
  std::int64_t eye_cost = 30;         // iterations, parallel processing frozen
  std::int64_t covert_cost = 2;       // iterations
  bool eyes_enabled = true;
  double init_jitter = 0.1;           // initial priority is 1 + U(-jitter, jitter)
  std::int64_t iteration_cap = 100000;

  static constexpr std::array<std::string_view, 13> kKeys{
      "delta",           "tau",        "p_min",          "d_max",
      "w_present",       "w_absent",   "p_sample_relevant", "p_sample_irrelevant",
      "eye_cost",        "covert_cost", "eyes_enabled",  "init_jitter",
      "iteration_cap"};

  void set(std::string_view key, double value) {
    auto as_count = [&](std::int64_t& dst) {
      if (value != std::floor(value)) throw Error("parameter '" + std::string(key) + "' must be an integer");
      dst = static_cast<std::int64_t>(value);
    };
    if (key == "delta") delta = value;
    else if (key == "tau") tau = value;
    else if (key == "p_min") p_min = value;
    else if (key == "d_max") d_max = value;
    else if (key == "w_present") w_present = value;
    else if (key == "w_absent") w_absent = value;
    else if (key == "p_sample_relevant") p_sample_relevant = value;
    else if (key == "p_sample_irrelevant") p_sample_irrelevant = value;
    else if (key == "eye_cost") as_count(eye_cost);
    else if (key == "covert_cost") as_count(covert_cost);
    else if (key == "eyes_enabled") eyes_enabled = value != 0.0;
    else if (key == "init_jitter") init_jitter = value;
    else if (key == "iteration_cap") as_count(iteration_cap);
    else throw UnknownName("engine parameter", std::string(key));
  }

  double get(std::string_view key) const {
    if (key == "delta") return delta;
    if (key == "tau") return tau;
    if (key == "p_min") return p_min;
    if (key == "d_max") return d_max;
    if (key == "w_present") return w_present;
    if (key == "w_absent") return w_absent;
    if (key == "p_sample_relevant") return p_sample_relevant;
    if (key == "p_sample_irrelevant") return p_sample_irrelevant;
    if (key == "eye_cost") return static_cast<double>(eye_cost);
    if (key == "covert_cost") return static_cast<double>(covert_cost);
    if (key == "eyes_enabled") return eyes_enabled ? 1.0 : 0.0;
    if (key == "init_jitter") return init_jitter;
    if (key == "iteration_cap") return static_cast<double>(iteration_cap);
    throw UnknownName("engine parameter", std::string(key));
  }

  void validate() const {
    auto fail = [](const std::string& msg) { throw Error("invalid engine parameters: " + msg); };
    if (!(delta > 0.0 && delta < 1.0)) fail("delta must be in (0, 1)");
    if (!(tau >= 0.0)) fail("tau must be nonnegative");
    if (!(p_min > 0.0)) fail("p_min must be positive");
    if (!(d_max > 0.0)) fail("d_max must be positive");
    if (!(w_present >= 0.0 && w_absent >= 0.0)) fail("match weights must be nonnegative");
    if (!(p_sample_relevant >= 0.0 && p_sample_relevant <= 1.0)) fail("p_sample_relevant must be in [0, 1]");
    if (!(p_sample_irrelevant >= 0.0 && p_sample_irrelevant <= 1.0)) fail("p_sample_irrelevant must be in [0, 1]");
    if (eye_cost < 1 || covert_cost < 1) fail("shift costs must be at least one iteration");
    if (!(init_jitter >= 0.0 && init_jitter < 1.0)) fail("init_jitter must be in [0, 1)");
    if (iteration_cap < 1) fail("iteration_cap must be positive");
  }
};

inline EngineParams resolve_params(const std::map<std::string, double>& overrides) {
  EngineParams p;
  for (const auto& [key, value] : overrides) p.set(key, value);
  p.validate();
  return p;
}

// ---------------------------------------------------------------------------
// Elementary operations

/// 1 - D / D_max, floored at zero.
inline double distance_weight(Point item, Point fixation, double d_max) noexcept {
  const double w = 1.0 - distance(item, fixation) / d_max;
  return w > 0.0 ? w : 0.0;
}

using SampledSet = std::vector<std::size_t>;

/// Draws one Bernoulli per non-absent dimension, in dimension order.
inline SampledSet sample_dimensions(const FeatureClassification& classification, const EngineParams& params,
                                    Rng& rng) {
  SampledSet sampled;
  for (std::size_t k = 0; k < classification.size(); ++k) {
    switch (classification[k]) {
      case FeatureClass::Relevant:
        if (rng.bernoulli(params.p_sample_relevant)) sampled.push_back(k);
        break;
      case FeatureClass::Irrelevant:
        if (rng.bernoulli(params.p_sample_irrelevant)) sampled.push_back(k);
        break;
      case FeatureClass::Absent:
        break;
    }
  }
  return sampled;
}

// Signed contribution of one dimension before the tau / sum(r) scaling.
inline double match_term(bool equal, bool template_present, double eta, const EngineParams& params) noexcept {
  const double m = equal ? 1.0 : -1.0;
  const double w = template_present ? params.w_present : params.w_absent;
  return m * w * eta;
}

/// Parallel match of an item against the template over the sampled
/// dimensions, normalised by the total salience of the relevant dimensions.
/// Both sides are role-pooled, so role bindings are invisible here.
inline double parallel_match(const PooledFeatures& item, const PooledFeatures& tmpl,
                             const FeatureClassification& classification, const SalienceMap& salience,
                             const SampledSet& sampled, const EngineParams& params) {
  require_same_layout(item.layout(), tmpl.layout());
  if (item.role_count() != tmpl.role_count()) throw LayoutMismatch("item and template have different role counts");
  const double denom = classification.relevant_salience(salience);
  if (!(denom > 0.0)) throw DegenerateDisplay("no salient relevant dimensions in the display");
  double sum = 0.0;
  for (std::size_t k : sampled) sum += match_term(item.same_at(k, tmpl), tmpl.present(k), salience[k], params);
  return params.tau * sum / denom;
}

inline double parallel_match(const SearchItem& item, const TargetTemplate& tmpl,
                             const FeatureClassification& classification, const SampledSet& sampled,
                             const EngineParams& params) {
  return parallel_match(pool_roles(item), pool_roles(tmpl), classification, tmpl.salience, sampled, params);
}

/// Replaces the priority with p(1 - delta) + eps * phi * rho; the right-hand
/// side is the new value, not an increment.
inline double next_priority(double p, double eps, double phi, double rho, const EngineParams& params) noexcept {
  return p * (1.0 - params.delta) + eps * phi * rho;
}

/// Draws rho ~ U(0, 1), updates the item and rejects it below p_min.
/// Returns the new priority.
inline double update_priority(SearchItem& item, double eps, double phi, Rng& rng, const EngineParams& params) {
  const double rho = rng.uniform();
  item.priority = next_priority(item.priority, eps, phi, rho, params);
  if (item.priority < params.p_min) item.state = ItemState::RejectedParallel;
  return item.priority;
}

/// Luce choice over active items with weight p * eps. Returns nothing when no
/// item carries positive weight.
inline std::optional<std::size_t> luce_select(std::span<const SearchItem> items, Point fixation,
                                              const EngineParams& params, Rng& rng) {
  double total = 0.0;
  std::size_t last = items.size();
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].state != ItemState::Active) continue;
    const double w = items[i].priority * distance_weight(items[i].position, fixation, params.d_max);
    if (w > 0.0) {
      total += w;
      last = i;
    }
  }
  if (!(total > 0.0)) return std::nullopt;
  const double target = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].state != ItemState::Active) continue;
    const double w = items[i].priority * distance_weight(items[i].position, fixation, params.d_max);
    if (w <= 0.0) continue;
    acc += w;
    if (target < acc) return i;
  }
  return last;
}

enum class Shift { Covert, Overt };

/// Overt with probability eps of the chosen item when eye movements are
/// enabled; no draw is made when they are disabled.
inline Shift maybe_move_eyes(const SearchItem& chosen, Point fixation, const EngineParams& params, Rng& rng) {
  if (!params.eyes_enabled) return Shift::Covert;
  const double eps = distance_weight(chosen.position, fixation, params.d_max);
  return rng.uniform() < eps ? Shift::Overt : Shift::Covert;
}

enum class Verdict { Accept, Reject };

// Exact match of every role-bound vector, role tags included.
inline Verdict scrutinize(const SearchItem& item, const TargetTemplate& tmpl) {
  return item.roles == tmpl.roles ? Verdict::Accept : Verdict::Reject;
}

// ---------------------------------------------------------------------------
// Trial

enum class Phase { Selecting, Shifting, MovingEyes, Scrutinizing };

inline std::string_view phase_name(Phase p) noexcept {
  switch (p) {
    case Phase::Selecting: return "selecting";
    case Phase::Shifting: return "shifting";
    case Phase::MovingEyes: return "moving_eyes";
    case Phase::Scrutinizing: return "scrutinizing";
  }
  return "?";
}

struct TrialState {
  std::int64_t clock = 0;
  Point fixation{};
  std::optional<std::size_t> attended;
  Phase phase = Phase::Selecting;
  std::int64_t remaining = 0;  // countdown for Shifting / MovingEyes
  bool frozen = false;         // no parallel pass ran this iteration
  FeatureClassification classification;
};

enum class Outcome { TargetFound, AllRejected, IterationCap };

inline std::string_view outcome_name(Outcome o) noexcept {
  switch (o) {
    case Outcome::TargetFound: return "target_found";
    case Outcome::AllRejected: return "all_rejected";
    case Outcome::IterationCap: return "iteration_cap";
  }
  return "?";
}

struct TrialResult {
  std::int64_t rt_iterations = 0;
  Outcome outcome = Outcome::AllRejected;
  std::int64_t n_serial_inspections = 0;
  std::int64_t n_parallel_rejections = 0;
  std::optional<std::size_t> accepted;
  std::vector<Point> fixation_trace;  // starts at the initial fixation
};

// Called once at the end of every iteration, before the clock advances.
using TrialObserver = std::function<void(const TrialState&, std::span<const SearchItem>)>;

/// Parallel match evaluated per distinct pooled item. Items that pool
/// identically share one evaluation per iteration; the result equals
/// parallel_match() item by item.
class MatchKernel {
 public:
  MatchKernel(const Display& display, const FeatureClassification& classification, const EngineParams& params) {
    const PooledFeatures tmpl = pool_roles(display.target);
    const SalienceMap& salience = display.target.salience;
    if (salience.size() != tmpl.size()) throw LayoutMismatch("salience map does not match template layout");
    std::vector<PooledFeatures> types;
    for (const auto& item : display.items) {
      PooledFeatures v = pool_roles(item);
      if (v.role_count() != tmpl.role_count()) throw LayoutMismatch("item and template have different role counts");
      std::size_t t = 0;
      while (t < types.size() && !(types[t] == v)) ++t;
      if (t == types.size()) types.push_back(std::move(v));
      type_of_.push_back(t);
    }
    terms_.resize(types.size());
    for (std::size_t t = 0; t < types.size(); ++t) {
      terms_[t].resize(tmpl.size());
      for (std::size_t k = 0; k < tmpl.size(); ++k) {
        terms_[t][k] = match_term(types[t].same_at(k, tmpl), tmpl.present(k), salience[k], params);
      }
    }
    // A display without relevant dimensions (every item equals the template)
    // gives the parallel process nothing to weigh: priorities only decay.
    if (classification.count(FeatureClass::Relevant) > 0) {
      const double denom = classification.relevant_salience(salience);
      if (!(denom > 0.0)) throw DegenerateDisplay("relevant dimensions carry zero total salience");
      scale_ = params.tau / denom;
    }
  }

  std::size_t type_of(std::size_t item) const noexcept { return type_of_[item]; }
  std::size_t type_count() const noexcept { return terms_.size(); }

  void evaluate(const SampledSet& sampled, std::vector<double>& phi_by_type) const {
    phi_by_type.assign(terms_.size(), 0.0);
    if (scale_ == 0.0) return;
    for (std::size_t t = 0; t < terms_.size(); ++t) {
      double sum = 0.0;
      for (std::size_t k : sampled) sum += terms_[t][k];
      phi_by_type[t] = scale_ * sum;
    }
  }

 private:
  std::vector<std::vector<double>> terms_;
  std::vector<std::size_t> type_of_;
  double scale_ = 0.0;
};

/// Runs one trial to completion, mutating the display's items.
///
/// Each iteration: (1) unless the eyes are moving, one parallel pass samples
/// dimensions once and updates every active item; (2) the serial process
/// either selects an item by Luce choice and starts a covert shift or an eye
/// movement, advances the shift countdown, or scrutinizes the attended item.
/// The selection iteration is the first iteration of the shift, so a one-item
/// display resolves in shift cost + 1 iterations.
/// If the attended item is rejected by the parallel pass before scrutiny, the
/// serial process returns to selection.
inline TrialResult run_trial(Display& display, const EngineParams& params, Rng& rng,
                             const TrialObserver& observer = {}) {
  params.validate();
  auto& items = display.items;
  if (items.empty()) throw Error("display has no items");
  for (const auto& item : items) {
    if (!item.is_target && scrutinize(item, display.target) == Verdict::Accept) {
      throw Error("a distractor is identical to the target");
    }
  }

  TrialState state;
  state.fixation = display.fixation;
  state.classification = classify_features(display.target, items);
  const MatchKernel kernel(display, state.classification, params);

  for (auto& item : items) {
    item.priority = 1.0 + rng.uniform(-params.init_jitter, params.init_jitter);
    item.state = ItemState::Active;
  }

  TrialResult result;
  result.fixation_trace.push_back(state.fixation);
  std::vector<double> phi;
  bool finished = false;

  while (!finished) {
    if (state.clock >= params.iteration_cap) {
      result.outcome = Outcome::IterationCap;
      break;
    }

    state.frozen = state.phase == Phase::MovingEyes;
    if (!state.frozen) {
      const SampledSet sampled = sample_dimensions(state.classification, params, rng);
      kernel.evaluate(sampled, phi);
      for (std::size_t i = 0; i < items.size(); ++i) {
        SearchItem& item = items[i];
        if (item.state != ItemState::Active) continue;
        const double eps = distance_weight(item.position, state.fixation, params.d_max);
        update_priority(item, eps, phi[kernel.type_of(i)], rng, params);
        if (item.state == ItemState::RejectedParallel) ++result.n_parallel_rejections;
      }
    }

    switch (state.phase) {
      case Phase::Selecting: {
        const auto chosen = luce_select(items, state.fixation, params, rng);
        if (!chosen) {
          result.outcome = Outcome::AllRejected;
          finished = true;
          break;
        }
        state.attended = *chosen;
        ++result.n_serial_inspections;
        if (maybe_move_eyes(items[*chosen], state.fixation, params, rng) == Shift::Overt) {
          state.phase = Phase::MovingEyes;
          state.remaining = params.eye_cost;
        } else {
          state.phase = Phase::Shifting;
          state.remaining = params.covert_cost;
        }
        [[fallthrough]];
      }
      case Phase::Shifting:
      case Phase::MovingEyes:
        if (--state.remaining == 0) {
          if (state.phase == Phase::MovingEyes) {
            state.fixation = items[*state.attended].position;
            result.fixation_trace.push_back(state.fixation);
          }
          state.phase = Phase::Scrutinizing;
        }
        break;
      case Phase::Scrutinizing: {
        SearchItem& item = items[*state.attended];
        if (item.state == ItemState::Active) {
          if (scrutinize(item, display.target) == Verdict::Accept) {
            item.state = ItemState::Accepted;
            result.accepted = *state.attended;
            result.outcome = Outcome::TargetFound;
            finished = true;
          } else {
            item.state = ItemState::RejectedSerial;
          }
        }
        state.attended.reset();
        state.phase = Phase::Selecting;
        break;
      }
    }

    if (observer) observer(state, items);
    ++state.clock;
  }

  result.rt_iterations = state.clock;
  return result;
}

}  // namespace casper
