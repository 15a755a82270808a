#pragma once

// Preset simulations and the multi-subject experiment runner.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "casper/engine.hpp"
#include "casper/error.hpp"
#include "casper/experiment_spec.hpp"
#include "casper/grammar.hpp"
#include "casper/rng.hpp"
#include "casper/stimuli.hpp"

namespace casper {

namespace presets {

inline constexpr std::string_view kSim1 = R"(experiment sim1
seed 1
subjects 100
trials 52
set_sizes 1, 5, 15, 30
condition feature {
  target = blue X
  distractor = dark-green X
  distractor = brown T1
}
condition conjunction {
  target = dark-green T1
  distractor = dark-green X
  distractor = brown T1
}
)";

inline constexpr std::string_view kSim2 = R"(experiment sim2
seed 1
subjects 100
trials 52
set_sizes 1, 3, 5, 9, 17, 25, 37
condition conjunction {
  target = green horizontal
  distractor = green vertical
  distractor = red horizontal
}
condition feature {
  target = green horizontal
  distractor = red vertical
}
)";

inline constexpr std::string_view kSim3 = R"(experiment sim3
seed 1
subjects 100
trials 52
set_sizes 1, 2, 5, 10, 20, 32
condition low_similarity {
  target = red vertical
  distractor = light-blue horizontal
  salience shape 1.5
}
condition intermediate_similarity {
  target = red vertical
  distractor = yellow vertical
  salience shape 1.5
}
condition high_similarity {
  target = red vertical
  distractor = orange vertical
  salience shape 1.5
}
)";

inline constexpr std::string_view kSim4 = R"(experiment sim4
seed 1
subjects 100
trials 52
set_sizes 1, 6, 12
condition q_among_o {
  target = white Q
  distractor = white O
}
condition o_among_q {
  target = white O
  distractor = white Q
}
)";

// Higher-order segments hold 2n units; a ratio of r higher-order units per
// low-level unit pair uses n = r / 2.
inline constexpr std::string_view kSim5 = R"(experiment sim5
seed 1
subjects 64
trials 100
set_sizes 1, 2, 4, 6
condition none {
  target = none diag-45
  distractor = none diag-135
}
condition good_r32 {
  target = none G1
  distractor = none G2
  higher_order target arrow 16
  higher_order distractor triangle 16
}
condition good_r64 {
  target = none G1
  distractor = none G2
  higher_order target arrow 32
  higher_order distractor triangle 32
}
condition good_r128 {
  target = none G1
  distractor = none G2
  higher_order target arrow 64
  higher_order distractor triangle 64
}
condition good_r256 {
  target = none G1
  distractor = none G2
  higher_order target arrow 128
  higher_order distractor triangle 128
}
condition poor_r32 {
  target = none P1
  distractor = none P2
  higher_order triangle 16
}
condition poor_r64 {
  target = none P1
  distractor = none P2
  higher_order triangle 32
}
condition poor_r128 {
  target = none P1
  distractor = none P2
  higher_order triangle 64
}
condition poor_r256 {
  target = none P1
  distractor = none P2
  higher_order triangle 128
}
)";

inline constexpr std::string_view kSim6 = R"(experiment sim6
seed 1
subjects 32
trials 52
set_sizes 1, 2, 4, 8, 16
condition relation_only {
  target = above(red X, green O)
  distractor = above(green O, red X)
}
condition feature_only {
  target = above(red X, green O)
  distractor = above(orange X, green O)
}
condition relation_feature {
  target = above(red X, green O)
  distractor = above(green O, orange X)
}
)";

inline constexpr std::string_view kSim7 = R"(experiment sim7
seed 1
subjects 32
trials 52
set_sizes 1, 2, 4, 8, 16
condition relation_only {
  target = above(red X, red O)
  distractor = above(red O, red X)
}
condition feature_only {
  target = above(red X, red O)
  distractor = above(orange X, orange O)
}
condition relation_feature {
  target = above(red X, red O)
  distractor = above(orange O, orange X)
}
)";

inline constexpr std::string_view kSim8 = R"(experiment sim8
seed 1
subjects 32
trials 52
set_sizes 1, 2, 4, 8, 16
condition relation_only_eta1 {
  target = above(red X, green O)
  distractor = above(green O, red X)
  emergent 1
}
condition feature_only_eta1 {
  target = above(red X, green O)
  distractor = above(orange X, green O)
  emergent 1
}
condition relation_feature_eta1 {
  target = above(red X, green O)
  distractor = above(green O, orange X)
  emergent 1
}
condition relation_only_eta033 {
  target = above(red X, green O)
  distractor = above(green O, red X)
  emergent 0.33
}
condition feature_only_eta033 {
  target = above(red X, green O)
  distractor = above(orange X, green O)
  emergent 0.33
}
condition relation_feature_eta033 {
  target = above(red X, green O)
  distractor = above(green O, orange X)
  emergent 0.33
}
)";

inline constexpr std::string_view kSim9 = R"(experiment sim9
seed 1
subjects 32
trials 52
set_sizes 1, 2, 4, 8, 16
condition relation_only_all {
  target = above(red X, red O)
  distractor = above(red O, red X)
  emergent 1
}
condition feature_only_all {
  target = above(red X, red O)
  distractor = above(orange X, orange O)
  emergent 1
}
condition relation_feature_all {
  target = above(red X, red O)
  distractor = above(orange O, orange X)
  emergent 1
}
condition relation_only_restricted {
  target = above(red X, red O)
  distractor = above(red O, red X)
  emergent 1
}
condition feature_only_restricted {
  target = above(red X, red O)
  distractor = above(orange X, orange O)
}
condition relation_feature_restricted {
  target = above(red X, red O)
  distractor = above(orange O, orange X)
}
)";

inline constexpr std::string_view kSim10 = R"(experiment sim10
seed 1
subjects 32
trials 52
set_sizes 1, 2, 4, 8, 16
param p_sample_relevant 0.95
condition relation_only {
  target = above(red X, green O)
  distractor = above(green O, red X)
  emergent 0.33
}
condition feature_only {
  target = above(red X, green O)
  distractor = above(orange X, green O)
  emergent 0.33
}
condition relation_feature {
  target = above(red X, green O)
  distractor = above(green O, orange X)
  emergent 0.33
}
)";

struct Entry {
  std::string_view id;
  std::string_view text;
  bool include_target_only;  // default for slope and fit analysis
};

inline constexpr std::array<Entry, 10> kAll{{
    {"sim1", kSim1, false},
    {"sim2", kSim2, false},
    {"sim3", kSim3, false},
    {"sim4", kSim4, true},
    {"sim5", kSim5, false},
    {"sim6", kSim6, false},
    {"sim7", kSim7, false},
    {"sim8", kSim8, false},
    {"sim9", kSim9, false},
    {"sim10", kSim10, false},
}};

}  // namespace presets

inline std::vector<std::string> preset_ids() {
  std::vector<std::string> out;
  for (const auto& e : presets::kAll) out.emplace_back(e.id);
  return out;
}

inline const presets::Entry& preset_entry(std::string_view id) {
  for (const auto& e : presets::kAll) {
    if (e.id == id) return e;
  }
  throw UnknownName("preset", std::string(id));
}

inline ExperimentSpec preset(std::string_view id) { return parse_experiment(preset_entry(id).text); }

/// Whether slope and fit analysis includes set size 1 by default. Presets
/// carry their own default; other experiments exclude it.
inline bool include_target_only_by_default(std::string_view experiment_name) {
  for (const auto& e : presets::kAll) {
    if (e.id == experiment_name) return e.include_target_only;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Runner

struct TrialRecord {
  std::int64_t rt_iterations = 0;
  Outcome outcome = Outcome::AllRejected;
};

struct CellResult {
  std::string condition;
  std::size_t condition_index = 0;
  std::size_t set_size = 0;
  std::size_t set_size_index = 0;
  std::size_t subject = 0;
  std::vector<TrialRecord> trials;
  double mean_rt = std::nan("");  // over TargetFound trials
  std::size_t n_found = 0;
  std::size_t n_errors = 0;    // AllRejected
  std::size_t n_timeouts = 0;  // IterationCap
};

struct ExperimentResult {
  ExperimentSpec spec;
  EngineParams params;
  std::vector<CellResult> cells;  // sorted by (condition, set size, subject)

  std::size_t total_timeouts() const {
    std::size_t n = 0;
    for (const auto& c : cells) n += c.n_timeouts;
    return n;
  }

  std::vector<const CellResult*> cells_for(const std::string& condition, std::size_t set_size) const {
    std::vector<const CellResult*> out;
    for (const auto& c : cells) {
      if (c.condition == condition && c.set_size == set_size) out.push_back(&c);
    }
    return out;
  }
};

// Receives each finished cell with the running completion count. Calls are
// serialized but arrive in schedule order, not result order.
using ProgressSink = std::function<void(const CellResult&, std::size_t done, std::size_t total)>;

struct RunOptions {
  unsigned threads = 0;  // 0 selects the hardware concurrency
  ProgressSink progress;
};

/// Private stream of one trial.
inline std::uint64_t trial_seed(std::uint64_t master, std::size_t subject, std::size_t condition_index,
                                std::size_t set_size_index, std::size_t trial) {
  return derive_stream(master, {subject, condition_index, set_size_index, trial});
}

struct TrialReplay {
  Display display;  // final item states
  TrialResult result;
};

/// Re-runs one trial from its coordinates; identical to the trial executed
/// inside run_experiment().
inline TrialReplay replay_trial(const ExperimentSpec& spec, const EngineParams& params, std::size_t condition_index,
                                std::size_t set_size_index, std::size_t subject, std::size_t trial,
                                const TrialObserver& observer = {}) {
  const ConditionSpec& cond = spec.conditions.at(condition_index);
  Rng rng(trial_seed(spec.seed, subject, condition_index, set_size_index, trial));
  TrialReplay out{build_display(cond, spec.set_sizes.at(set_size_index), rng), {}};
  out.result = run_trial(out.display, params, rng, observer);
  return out;
}

inline CellResult run_cell(const ExperimentSpec& spec, const EngineParams& params, std::size_t condition_index,
                           std::size_t set_size_index, std::size_t subject) {
  CellResult cell;
  cell.condition = spec.conditions.at(condition_index).name;
  cell.condition_index = condition_index;
  cell.set_size = spec.set_sizes.at(set_size_index);
  cell.set_size_index = set_size_index;
  cell.subject = subject;
  cell.trials.reserve(spec.trials);
  double sum = 0.0;
  for (std::size_t t = 0; t < spec.trials; ++t) {
    const TrialReplay run = replay_trial(spec, params, condition_index, set_size_index, subject, t);
    cell.trials.push_back({run.result.rt_iterations, run.result.outcome});
    switch (run.result.outcome) {
      case Outcome::TargetFound:
        ++cell.n_found;
        sum += static_cast<double>(run.result.rt_iterations);
        break;
      case Outcome::AllRejected: ++cell.n_errors; break;
      case Outcome::IterationCap: ++cell.n_timeouts; break;
    }
  }
  if (cell.n_found > 0) cell.mean_rt = sum / static_cast<double>(cell.n_found);
  return cell;
}

/// Runs every (condition, set size, subject) cell. The result depends only
/// on the experiment definition; thread count and scheduling do not affect it.
inline ExperimentResult run_experiment(const ExperimentSpec& spec, const RunOptions& options = {}) {
  spec.validate();
  ExperimentResult result;
  result.spec = spec;
  result.params = resolve_params(spec.params);
  for (const auto& cond : spec.conditions) make_template(cond);

  const std::size_t n_sizes = spec.set_sizes.size();
  const std::size_t total = spec.conditions.size() * n_sizes * spec.subjects;
  result.cells.resize(total);

  unsigned threads = options.threads != 0 ? options.threads : std::max(1U, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, total));

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex mutex;
  std::size_t done = 0;

  auto worker = [&] {
    for (;;) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= total || failed.load()) return;
      const std::size_t ci = idx / (n_sizes * spec.subjects);
      const std::size_t si = (idx / spec.subjects) % n_sizes;
      const std::size_t subject = idx % spec.subjects;
      try {
        result.cells[idx] = run_cell(spec, result.params, ci, si, subject);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!error) error = std::current_exception();
        failed = true;
        return;
      }
      if (options.progress) {
        std::lock_guard lock(mutex);
        options.progress(result.cells[idx], ++done, total);
      }
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return result;
}

/// One row per trial.
inline std::string results_csv(const ExperimentResult& result) {
  std::string out = "experiment,condition,set_size,subject,trial,rt_iterations,outcome\n";
  for (const auto& cell : result.cells) {
    for (std::size_t t = 0; t < cell.trials.size(); ++t) {
      out += result.spec.name;
      out += ',';
      out += cell.condition;
      out += ',' + std::to_string(cell.set_size) + ',' + std::to_string(cell.subject) + ',' + std::to_string(t) +
             ',' + std::to_string(cell.trials[t].rt_iterations) + ',';
      out += outcome_name(cell.trials[t].outcome);
      out += '\n';
    }
  }
  return out;
}

}  // namespace casper
