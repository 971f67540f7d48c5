#pragma once

// Typical worst-case analysis under the single-error model: busy windows and
// response times with one recovery burst from a higher-or-equal priority task,
// and the resulting bound on deadline misses per window of activations.

#include <cstdint>
#include <optional>
#include <vector>

#include "whft/model.hpp"

namespace whft::twca {

struct BusyWindow {
  Tick length = 0;               // BW_i
  std::uint64_t activations = 0;  // K_i
};

struct ConstraintBound {
  WeaklyHardConstraint constraint;
  std::uint32_t dmm = 0;
  bool satisfied = false;
};

struct TaskReport {
  std::size_t task = 0;
  bool converged = false;
  // Response time without any overload stays within the deadline.
  bool typical_feasible = false;
  Tick wcrt = 0;
  BusyWindow busy;
  std::vector<Tick> busy_demands;  // B(q) for q = 1..K
  std::vector<std::uint64_t> miss_candidates;
  std::vector<ConstraintBound> bounds;
  bool schedulable = false;
};

struct TwcaReport {
  std::vector<TaskReport> tasks;
  bool schedulable = true;
};

// Least fixed point of the q-activation busy demand; nullopt when it exceeds
// twice the hyper-period. `with_overload` = false drops the recovery term.
std::optional<Tick> busy_demand(const TaskSet& ts, const SystemConfig& cfg, std::size_t task,
                                std::uint64_t q, bool with_overload = true);

std::optional<BusyWindow> busy_window(const TaskSet& ts, const SystemConfig& cfg,
                                      std::size_t task, bool with_overload = true);

std::optional<Tick> wcrt(const TaskSet& ts, const SystemConfig& cfg, std::size_t task,
                         bool with_overload = true);

std::vector<std::uint64_t> miss_candidates(const TaskSet& ts, const SystemConfig& cfg,
                                           std::size_t task);

// Bound on misses in any `window` consecutive activations, capped at `window`.
// Falls back to the cap when the busy window diverges or the task already
// misses deadlines without errors (outside the analysis' premise).
std::uint32_t dmm_bound(const TaskSet& ts, const SystemConfig& cfg, std::size_t task,
                        std::uint32_t window);

TaskReport analyze_task(const TaskSet& ts, const SystemConfig& cfg, std::size_t task);
TwcaReport twca_verdict(const TaskSet& ts, const SystemConfig& cfg);

}  // namespace whft::twca
