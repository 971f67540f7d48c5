#pragma once

// Synthetic workloads: UUniFast utilizations, periods from a pool, control
// tasks bound to the bundled demo plants.

#include <cstdint>
#include <vector>

#include "whft/io.hpp"

namespace whft::synth {

struct SynthParams {
  std::size_t control_tasks = 4;
  std::size_t other_tasks = 4;
  double utilization = 0.7;
  // 1 ms ticks.
  std::vector<Tick> period_pool{30, 50, 60, 100, 150, 200, 300};
  std::uint32_t k_min = 0;
  std::uint32_t k_max = 4;
  std::uint32_t window_min = 10;
  std::uint32_t window_max = 20;
  std::uint32_t control_window = 10;
  // Detection overheads as fractions of the WCET.
  double eed_overhead = 0.1;
  double comparison_overhead = 0.0;
  std::size_t cpus = 1;
  double tolerance = 0.01;  // on the rounded total utilization
  std::size_t max_retries = 1000;
  std::uint64_t seed = 1;
};

// Cruise control, DC motor, third-order servo and inverted pendulum.
std::vector<control::LtiPlant> demo_plants();

// n utilizations summing to `total`, uniform on the simplex.
std::vector<double> uunifast(std::size_t n, double total, std::uint64_t seed);

// Control task i is bound to plant i mod |plants| and runs at its sampling period.
io::Model generate_synthetic(const SynthParams& params,
                             const std::vector<control::LtiPlant>& plants = demo_plants());

double total_utilization(const TaskSet& ts);

}  // namespace whft::synth
