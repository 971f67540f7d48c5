#include "whft/coverage.hpp"

#include <algorithm>
#include <cmath>

#include "whft/simkit.hpp"

namespace whft::coverage {

double detection_rate(Detection d, const DetectionRates& rates) {
  switch (d) {
    case Detection::none:
      return 0.0;
    case Detection::eed:
      return rates.eed;
    case Detection::eoc:
      return rates.eoc;
  }
  return 0.0;
}

double coverage_single_error_unclamped(const TaskSet& ts, const SystemConfig& cfg,
                                       std::size_t cpu, const DetectionRates& rates) {
  const auto on_cpu = cfg.tasks_on(cpu);
  if (on_cpu.empty()) return 1.0;
  // Accumulate exposed time over the hyper-period and divide once, so
  // integral shares come out correctly rounded.
  std::vector<Tick> periods;
  for (std::size_t i : on_cpu) periods.push_back(ts.tasks[i].period);
  const Tick hyper = hyperperiod(std::span<const Tick>(periods));
  double exposed = 0.0;
  for (std::size_t i : on_cpu) {
    const Task& t = ts.tasks[i];
    const double work = static_cast<double>(effective_wcet(t, cfg.detection[i]) * (hyper / t.period));
    exposed += (1.0 - detection_rate(cfg.detection[i], rates)) * work;
  }
  const double h = static_cast<double>(hyper);
  return (h - exposed) / h;
}

double coverage_single_error(const TaskSet& ts, const SystemConfig& cfg,
                             const DetectionRates& rates, Aggregation agg) {
  if (ts.tasks.empty()) return 1.0;
  double p = 0.0;
  if (agg == Aggregation::average) {
    for (std::size_t cpu = 0; cpu < ts.platform.cpus.size(); ++cpu) {
      p += coverage_single_error_unclamped(ts, cfg, cpu, rates);
    }
    p /= static_cast<double>(ts.platform.cpus.size());
  } else {
    double exposed = 0.0;
    for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
      const Task& t = ts.tasks[i];
      exposed += (1.0 - detection_rate(cfg.detection[i], rates)) *
                 static_cast<double>(effective_wcet(t, cfg.detection[i])) /
                 static_cast<double>(t.period);
    }
    p = 1.0 - exposed;
  }
  return std::clamp(p, 0.0, 1.0);
}

double coverage_general(const CoverageInputs& in, std::uint32_t errors) {
  const double total = static_cast<double>(in.hyperperiod());
  if (total <= 0.0) return 1.0;
  const double a = in.rates.eed * static_cast<double>(in.t_eed) / total;
  const double b = in.rates.eoc * static_cast<double>(in.t_eoc) / total;
  const double idle = static_cast<double>(in.t_idle) / total;
  // sum_i sum_j C(K,i) C(i,j) a^j b^(i-j) idle^(K-i)
  double p = 0.0;
  double k_choose_i = 1.0;
  for (std::uint32_t i = 0; i <= errors; ++i) {
    double i_choose_j = 1.0;
    for (std::uint32_t j = 0; j <= i; ++j) {
      p += k_choose_i * i_choose_j * std::pow(a, j) * std::pow(b, i - j) *
           std::pow(idle, errors - i);
      i_choose_j = i_choose_j * (i - j) / (j + 1);
    }
    k_choose_i = k_choose_i * (errors - i) / (i + 1);
  }
  return p;
}

CoverageInputs coverage_inputs(const TaskSet& ts, const SystemConfig& cfg, std::size_t cpu,
                               const DetectionRates& rates) {
  CoverageInputs in;
  in.rates = rates;
  if (ts.tasks.empty()) return in;
  const Tick hyper = ts.hyperperiod();
  for (std::size_t i : cfg.tasks_on(cpu)) {
    const Task& t = ts.tasks[i];
    const Tick work = effective_wcet(t, cfg.detection[i]) * (hyper / t.period);
    switch (cfg.detection[i]) {
      case Detection::none:
        in.t_none += work;
        break;
      case Detection::eed:
        in.t_eed += work;
        break;
      case Detection::eoc:
        in.t_eoc += work;
        break;
    }
  }
  const auto run = sim::simulate_scenario(ts, cfg, cpu, sim::ErrorScenario::none());
  // Only the first hyper-period counts; an overloaded CPU has no idle time.
  const Tick busy = in.t_eed + in.t_eoc + in.t_none;
  in.t_idle = (run.quiescent && run.hyperperiods == 1 && busy <= hyper) ? run.idle_time : 0;
  return in;
}

}  // namespace whft::coverage
