#pragma once

// Design-space exploration over allocation, priorities and detection choice:
// the utilization-ordered escalation + first-fit-decreasing initial solution,
// penalized objective evaluation on either schedulability backend, and
// simulated annealing.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "whft/control.hpp"
#include "whft/coverage.hpp"
#include "whft/model.hpp"
#include "whft/twca.hpp"

namespace whft::explore {

// Task set plus the plants its control tasks are bound to.
struct Design {
  TaskSet taskset;
  std::vector<control::LtiPlant> plants;
  double tick_seconds = 1e-3;

  const control::LtiPlant* plant_for(std::size_t task) const;
  bool operator==(const Design&) const = default;
};

// Checks the task set, plant matrices and task/plant bindings.
void validate(const Design& design);

enum class Backend { twca, simulate };
std::string_view to_string(Backend b);
Backend parse_backend(std::string_view text);

// What the annealer minimizes on feasible configurations; max_coverage uses
// the uncovered share in percent.
enum class Goal { min_cost, max_coverage };

struct Penalties {
  double sched = 1e3;
  double coverage = 1e3;
  double stability = 1e3;
};

struct EvalParams {
  Backend backend = Backend::simulate;
  double threshold = 0.0;
  coverage::DetectionRates rates;
  coverage::Aggregation aggregation = coverage::Aggregation::average;
  Penalties penalties;
  Goal goal = Goal::min_cost;
};

struct SystemCost {
  double value = 0.0;
  bool feasible = true;  // false if any controller is unstable
  std::size_t unstable = 0;
};

// sum over control tasks of weight * J / J_des; unstable costs are skipped
// and counted.
SystemCost system_cost(std::span<const control::ControlCost> costs,
                       std::span<const double> weights, std::span<const double> desired);

struct Objective {
  double system_cost = 0.0;
  std::vector<std::optional<control::ControlCost>> task_costs;  // nullopt for non-control tasks
  bool schedulable = false;
  double coverage = 0.0;
  bool coverage_ok = false;
  bool stable = false;
  std::size_t violating_tasks = 0;
  std::size_t unstable_controllers = 0;
  double penalized = 0.0;

  bool feasible() const { return schedulable && coverage_ok && stable; }
};

// Caches discretized plants and pattern costs across evaluations of one design.
class Evaluator {
 public:
  Evaluator(const Design& design, EvalParams params);
  ~Evaluator();
  Evaluator(Evaluator&&) noexcept;
  Evaluator& operator=(Evaluator&&) noexcept;

  Objective evaluate(const SystemConfig& cfg);
  const EvalParams& params() const { return params_; }
  std::size_t evaluations() const { return evaluations_; }

 private:
  struct Caches;
  const Design* design_;
  EvalParams params_;
  std::unique_ptr<Caches> caches_;
  std::size_t evaluations_ = 0;
};

Objective evaluate(const Design& design, const SystemConfig& cfg, const EvalParams& params);

// Detection, allocation and priorities as given in the task set: detection
// from each task, first-fit-decreasing allocation, deadline-monotonic priorities.
SystemConfig first_fit_decreasing(const TaskSet& ts, std::span<const Detection> detection);
void assign_deadline_monotonic(const TaskSet& ts, SystemConfig& cfg);

struct InitialSolution {
  SystemConfig config;
  double coverage = 0.0;
  bool coverage_met = false;
};

InitialSolution initial_solution(const TaskSet& ts, double threshold,
                                 const coverage::DetectionRates& rates = {},
                                 coverage::Aggregation agg = coverage::Aggregation::average);

struct MoveProbabilities {
  double swap_priority = 0.4;
  double change_detection = 0.4;
  double migrate = 0.2;
};

enum class MoveKind { swap_priority, change_detection, migrate };

SystemConfig random_move(const TaskSet& ts, const SystemConfig& cfg, std::mt19937_64& rng,
                         const MoveProbabilities& probs = {}, MoveKind* applied = nullptr);

struct SaParams {
  double initial_temperature = 100.0;
  double stop_temperature = 0.1;
  double cooling_factor = 0.95;
  std::size_t iterations_per_temperature = 100;
  MoveProbabilities moves;
  std::uint64_t seed = 1;
};

void validate(const SaParams& params);

struct SaProgress {
  double temperature = 0.0;
  double current = 0.0;
  double best = 0.0;
  bool best_feasible = false;
};

struct SaResult {
  SystemConfig initial;
  Objective initial_objective;
  SystemConfig best;
  Objective best_objective;
  bool feasible = false;
  std::vector<double> best_history;  // best penalized objective after each temperature
  std::size_t evaluations = 0;
};

// Starts from `start` when given, otherwise from initial_solution().
SaResult sa_optimize(const Design& design, const SaParams& sa, const EvalParams& eval,
                     const std::optional<SystemConfig>& start = std::nullopt,
                     const std::function<void(const SaProgress&)>& progress = {});

}  // namespace whft::explore
