#pragma once

// Core domain types shared by every analysis: tasks, the fault model, the
// platform, per-task deadline hit/miss patterns and the mutable system
// configuration (allocation, priorities, detection choices).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace whft {

// Abstract time unit; every period, deadline and WCET in one model shares it.
using Tick = std::uint64_t;

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// At most `misses` deadline misses in any `window` consecutive activations.
struct WeaklyHardConstraint {
  std::uint32_t misses = 0;
  std::uint32_t window = 1;

  static constexpr WeaklyHardConstraint hard() { return {0, 1}; }
  bool operator==(const WeaklyHardConstraint&) const = default;
};

enum class Detection { none, eed, eoc };

std::string_view to_string(Detection d);
Detection parse_detection(std::string_view text);
// None -> EED -> EOC, saturating.
Detection escalate(Detection d);
// None -> EED -> EOC -> None.
Detection cycle(Detection d);

struct ControlBinding {
  std::string plant;
  double weight = 1.0;
  // Desired cost J^des; zero means "derive from the all-hit pattern".
  double desired_cost = 0.0;

  bool operator==(const ControlBinding&) const = default;
};

struct Task {
  std::string id;
  Tick period = 1;
  Tick deadline = 1;
  Tick wcet = 1;
  Tick comparison_overhead = 0;  // output comparison time for EOC
  Tick eed_overhead = 0;         // per-execution overhead for EED
  Detection detection = Detection::none;
  std::vector<WeaklyHardConstraint> constraints{WeaklyHardConstraint::hard()};
  std::optional<ControlBinding> control;

  bool operator==(const Task&) const = default;
};

struct FaultModel {
  // Minimum distance between two soft errors; defaults to the hyper-period.
  std::optional<Tick> min_error_distance;
  std::uint32_t errors_per_hyperperiod = 1;

  bool operator==(const FaultModel&) const = default;
};

struct Platform {
  std::vector<std::string> cpus{"cpu0"};

  bool operator==(const Platform&) const = default;
};

struct TaskSet {
  Platform platform;
  FaultModel fault;
  std::vector<Task> tasks;

  Tick hyperperiod() const;
  Tick error_distance() const;
  std::optional<std::size_t> find(std::string_view id) const;

  bool operator==(const TaskSet&) const = default;
};

// Per-task deadline miss sequence; entry i is job base_index + i.
struct MissPattern {
  std::string task;
  std::size_t base_index = 0;
  std::vector<std::uint8_t> misses;

  static MissPattern all_hit(std::string task, std::size_t length);
  static MissPattern parse(std::string_view hm, std::string task = {});

  std::size_t size() const { return misses.size(); }
  bool miss(std::size_t i) const { return misses[i] != 0; }
  std::size_t miss_count() const;
  std::string to_string() const;  // "HHM..." rendering

  bool operator==(const MissPattern&) const = default;
};

// Allocation, priority (smaller value = higher priority, unique per CPU) and
// detection choice per task, indexed like TaskSet::tasks.
struct SystemConfig {
  std::vector<std::size_t> cpu;
  std::vector<int> priority;
  std::vector<Detection> detection;

  std::vector<std::size_t> tasks_on(std::size_t cpu_index) const;
  bool operator==(const SystemConfig&) const = default;
};

// Throws ModelError on bad tasks, unknown CPUs or priority collisions.
void validate(const TaskSet& ts);
void validate(const TaskSet& ts, const SystemConfig& cfg);

// Execution time including detection overhead, C = c + rho(o(c + Lambda) + (1 - o) dc).
Tick effective_wcet(const Task& task, Detection d);
inline Tick effective_wcet(const Task& task) { return effective_wcet(task, task.detection); }

// Re-execution budget after a detected error, CR = rho(c + (1 - o) dc).
Tick recovery_wcet(const Task& task, Detection d);
inline Tick recovery_wcet(const Task& task) { return recovery_wcet(task, task.detection); }

enum class EventClass { typical, overload };
enum class Bound { lower, upper };

// Number of activations in any window of the given length. Periodic
// activation makes the lower and upper bounds coincide.
std::uint64_t event_bound(const Task& task, Detection d, Tick error_distance, Tick window,
                          EventClass cls, Bound bound = Bound::upper);

// Service demand of n consecutive activations of the given class.
Tick demand(const Task& task, Detection d, std::uint64_t n, EventClass cls);

// Minimum/maximum distance between the first and q-th typical activation.
Tick event_distance(const Task& task, std::uint64_t q, Bound bound = Bound::lower);

// Least common multiple of the periods; ModelError on overflow or empty input.
Tick hyperperiod(std::span<const Tick> periods);
Tick hyperperiod(std::span<const Task> tasks);

// Max misses in any `window` consecutive entries of seq (total if window >= size).
std::size_t max_misses_in_window(std::span<const std::uint8_t> seq, std::size_t window);

// Max misses in any `window` consecutive activations of `scenario` embedded
// between error-free repetitions on both sides (enough copies that every
// window touching the scenario is complete).
std::size_t sliding_window_misses(const MissPattern& scenario, std::size_t window,
                                  const MissPattern& error_free);
// Same with an all-hit error-free context.
std::size_t sliding_window_misses(const MissPattern& scenario, std::size_t window);

}  // namespace whft
