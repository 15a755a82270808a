#pragma once

// Iteration-by-iteration trial trace as CSV.

#include <cstddef>
#include <span>
#include <string>

#include "casper/engine.hpp"
#include "casper/grammar.hpp"

namespace casper {

inline std::string_view item_state_name(ItemState s) noexcept {
  switch (s) {
    case ItemState::Active: return "active";
    case ItemState::RejectedParallel: return "rejected_parallel";
    case ItemState::RejectedSerial: return "rejected_serial";
    case ItemState::Accepted: return "accepted";
  }
  return "?";
}

/// Observer that records one row per item per iteration, stamped with the
/// serial phase and fixation at the end of that iteration.
class TraceRecorder {
 public:
  static constexpr std::string_view kHeader =
      "iteration,phase,frozen,attended,fixation_x,fixation_y,item,is_target,priority,state\n";

  TraceRecorder() : csv_(kHeader) {}

  TrialObserver observer() {
    return [this](const TrialState& state, std::span<const SearchItem> items) { record(state, items); };
  }

  void record(const TrialState& state, std::span<const SearchItem> items) {
    const std::string prefix = std::to_string(state.clock) + ',' + std::string(phase_name(state.phase)) + ',' +
                               (state.frozen ? "1" : "0") + ',' +
                               (state.attended ? std::to_string(*state.attended) : std::string()) + ',' +
                               format_double(state.fixation.x) + ',' + format_double(state.fixation.y) + ',';
    for (std::size_t i = 0; i < items.size(); ++i) {
      csv_ += prefix + std::to_string(i) + ',' + (items[i].is_target ? "1" : "0") + ',' +
              format_double(items[i].priority) + ',' + std::string(item_state_name(items[i].state)) + '\n';
    }
  }

  const std::string& csv() const noexcept { return csv_; }

 private:
  std::string csv_;
};

}  // namespace casper
