#pragma once

// Exact event-driven simulation of static-priority preemptive scheduling on
// each CPU over one hyper-period, with a single injected soft error. A struck
// job, once its detection-augmented budget completes, releases a recovery job
// at the same priority; its deadline verdict uses the recovery completion.
// If work spills past the hyper-period, further error-free hyper-periods are
// simulated until the CPU is idle at a hyper-period boundary.

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "whft/model.hpp"

namespace whft::sim {

struct ErrorScenario {
  std::optional<std::size_t> task;  // nullopt: error-free run
  std::size_t instance = 0;

  static ErrorScenario none() { return {}; }
  bool is_none() const { return !task.has_value(); }
  bool operator==(const ErrorScenario&) const = default;
};

enum class TraceEvent { release, start, preempt, complete, recovery_release, deadline_miss };
std::string_view to_string(TraceEvent e);

struct TraceRecord {
  Tick time = 0;
  std::size_t cpu = 0;
  std::size_t task = 0;
  std::size_t instance = 0;
  bool recovery = false;
  TraceEvent event = TraceEvent::release;
};

struct JobRecord {
  std::size_t task = 0;
  std::size_t instance = 0;
  Tick release = 0;
  Tick absolute_deadline = 0;
  Tick completion = 0;  // of the primary execution
  std::optional<Tick> recovery_completion;
  bool miss = false;
};

struct SimOutcome {
  std::size_t cpu = 0;
  ErrorScenario scenario;
  // Indexed like TaskSet::tasks; tasks on other CPUs have empty patterns.
  // Length is hyperperiods * H / t.
  std::vector<MissPattern> patterns;
  std::vector<JobRecord> jobs;
  std::size_t hyperperiods = 1;
  bool quiescent = true;  // idle at the final hyper-period boundary
  Tick busy_time = 0;
  Tick idle_time = 0;
  std::vector<TraceRecord> trace;
};

struct SimOptions {
  bool trace = false;
  std::size_t max_hyperperiods = 16;
};

SimOutcome simulate_scenario(const TaskSet& ts, const SystemConfig& cfg, std::size_t cpu,
                             const ErrorScenario& scenario, const SimOptions& opts = {});

// The error-free scenario plus one per (protected task, instance) on the CPU.
std::vector<ErrorScenario> enumerate_scenarios(const TaskSet& ts, const SystemConfig& cfg,
                                               std::size_t cpu);

// Outcomes for every scenario of enumerate_scenarios(), in that order. Each
// error scenario resumes from the error-free run at the struck job's
// completion and, once the CPU idles again, reuses the error-free remainder.
std::vector<SimOutcome> simulate_all_scenarios(const TaskSet& ts, const SystemConfig& cfg,
                                               std::size_t cpu, const SimOptions& opts = {});

// Worse patterns score higher; the default scores by miss count.
using PatternScore = std::function<double(std::size_t task, const MissPattern& pattern)>;

struct EventSimResult {
  bool schedulable = true;
  bool shortcut = false;  // decided by the analytic response-time bound alone
  std::size_t scenarios_simulated = 0;
  // Per task: whether every scenario met all its constraints.
  std::vector<bool> task_ok;
  // Per task: the highest-scoring scenario pattern.
  std::vector<MissPattern> worst_patterns;
  // Per task: every distinct scenario pattern observed.
  std::vector<std::vector<MissPattern>> distinct_patterns;
  // Per task: error-free pattern (one hyper-period).
  std::vector<MissPattern> error_free;
};

EventSimResult event_sim_verdict(const TaskSet& ts, const SystemConfig& cfg,
                                 const PatternScore& score = {});

}  // namespace whft::sim
