#pragma once

// Error coverage: the probability that a transient error is either detected
// or strikes while the CPU is idle.

#include <cstdint>

#include "whft/model.hpp"

namespace whft::coverage {

struct DetectionRates {
  double eed = 0.7;  // alpha
  double eoc = 1.0;  // beta
};

enum class Aggregation {
  average,     // mean of per-CPU coverage (error lands on a uniformly random CPU)
  global_sum,  // one sum over every task regardless of CPU
};

struct CoverageInputs {
  Tick t_eed = 0;
  Tick t_eoc = 0;
  Tick t_none = 0;
  Tick t_idle = 0;
  DetectionRates rates;

  Tick hyperperiod() const { return t_eed + t_eoc + t_none + t_idle; }
};

double detection_rate(Detection d, const DetectionRates& rates = {});

// 1 - sum (1 - eps_i) C_i / t_i per CPU, aggregated, clamped to [0, 1].
double coverage_single_error(const TaskSet& ts, const SystemConfig& cfg,
                             const DetectionRates& rates = {},
                             Aggregation agg = Aggregation::average);

// Per-CPU value before clamping.
double coverage_single_error_unclamped(const TaskSet& ts, const SystemConfig& cfg,
                                       std::size_t cpu, const DetectionRates& rates = {});

// K uniformly distributed errors per hyper-period.
double coverage_general(const CoverageInputs& in, std::uint32_t errors);

// Time shares on one CPU over one hyper-period; idle time comes from the
// error-free simulation.
CoverageInputs coverage_inputs(const TaskSet& ts, const SystemConfig& cfg, std::size_t cpu,
                               const DetectionRates& rates = {});

}  // namespace whft::coverage
