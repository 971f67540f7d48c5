#include "whft/synth.hpp"

#include <cmath>
#include <random>

namespace whft::synth {

namespace {

control::LtiPlant make_plant(std::string id, std::vector<std::vector<double>> a,
                             std::vector<std::vector<double>> b, double h,
                             std::vector<std::vector<double>> k) {
  control::LtiPlant p;
  p.id = std::move(id);
  p.a = Matrix::from_rows(a);
  p.b = Matrix::from_rows(b);
  std::vector<double> c(a.size(), 0.0);
  c[0] = 1.0;
  p.c_out = Matrix::from_rows({c});
  p.sampling_period = h;
  p.let_deadline = h;
  p.gain = Matrix::from_rows(k);
  p.cost_threshold = 0.05;
  p.horizon_cap = control::kDefaultHorizon;
  return p;
}

}  // namespace

std::vector<control::LtiPlant> demo_plants() {
  // Gains place the closed-loop poles of the one-period-delay loop.
  return {
      make_plant("cruise", {{-0.05}}, {{0.001}}, 0.1,
                 {{1960.253542705296, -0.10498752080731766}}),
      make_plant("dcmotor", {{-10.0, 1.0}, {-0.02, -2.0}}, {{0.0}, {2.0}}, 0.05,
                 {{0.009733480009353777, 1.54046220626122, -0.13866921044124253}}),
      make_plant("servo3", {{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {0.0, 0.0, -5.0}},
                 {{0.0}, {0.0}, {5.0}}, 0.06,
                 {{22.50672616217948, 13.052344082623511, 1.717420179934987, 0.290818220682323}}),
      make_plant("pendulum", {{0.0, 1.0}, {2.0, 0.0}}, {{0.0}, {1.0}}, 0.03,
                 {{18.167767431681725, 5.997433666573482, -0.2481997299838163}}),
  };
}

std::vector<double> uunifast(std::size_t n, double total, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> u;
  double sum = total;
  for (std::size_t i = 1; i < n; ++i) {
    const double next = sum * std::pow(unit(rng), 1.0 / static_cast<double>(n - i));
    u.push_back(sum - next);
    sum = next;
  }
  if (n > 0) u.push_back(sum);
  return u;
}

double total_utilization(const TaskSet& ts) {
  double u = 0.0;
  for (const auto& t : ts.tasks) u += static_cast<double>(t.wcet) / static_cast<double>(t.period);
  return u;
}

io::Model generate_synthetic(const SynthParams& p, const std::vector<control::LtiPlant>& plants) {
  if (!(p.utilization > 0.0 && p.utilization <= 1.0)) {
    throw ModelError("target utilization must lie in (0, 1]");
  }
  if (p.period_pool.empty()) throw ModelError("period pool is empty");
  if (p.control_tasks > 0 && plants.empty()) throw ModelError("control tasks need plants");
  if (p.k_min > p.k_max || p.window_min > p.window_max || p.window_min == 0) {
    throw ModelError("invalid weakly-hard ranges");
  }
  if (p.cpus == 0) throw ModelError("at least one CPU is required");

  const std::size_t n = p.control_tasks + p.other_tasks;
  std::mt19937_64 rng(p.seed);

  // Control constraints depend only on the plant.
  std::vector<WeaklyHardConstraint> plant_wh;
  for (const auto& plant : plants) {
    const auto k = control::synthesize_wh(control::discretize(plant), p.control_window);
    plant_wh.push_back({k.value_or(0), p.control_window});
  }

  for (std::size_t attempt = 0; attempt < p.max_retries; ++attempt) {
    io::Model model;
    TaskSet& ts = model.design.taskset;
    ts.platform.cpus.clear();
    for (std::size_t c = 0; c < p.cpus; ++c) ts.platform.cpus.push_back("cpu" + std::to_string(c));
    model.design.tick_seconds = 1e-3;

    const auto u = uunifast(n, p.utilization, rng());
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i) {
      Task t;
      if (i < p.control_tasks) {
        const auto& plant = plants[i % plants.size()];
        t.id = "ctrl" + std::to_string(i);
        t.period = static_cast<Tick>(std::llround(plant.sampling_period / model.design.tick_seconds));
        t.control = ControlBinding{plant.id, 1.0, 0.0};
        t.constraints = {plant_wh[i % plants.size()]};
      } else {
        t.id = "task" + std::to_string(i - p.control_tasks);
        t.period = p.period_pool[std::uniform_int_distribution<std::size_t>(
            0, p.period_pool.size() - 1)(rng)];
        const auto k = std::uniform_int_distribution<std::uint32_t>(p.k_min, p.k_max)(rng);
        const auto w = std::uniform_int_distribution<std::uint32_t>(p.window_min, p.window_max)(rng);
        t.constraints = {{std::min(k, w), w}};
      }
      t.deadline = t.period;
      t.wcet = std::max<Tick>(1, static_cast<Tick>(std::llround(u[i] * static_cast<double>(t.period))));
      t.eed_overhead = static_cast<Tick>(std::llround(p.eed_overhead * static_cast<double>(t.wcet)));
      t.comparison_overhead =
          static_cast<Tick>(std::llround(p.comparison_overhead * static_cast<double>(t.wcet)));
      if (t.wcet > t.deadline) ok = false;
      ts.tasks.push_back(std::move(t));
    }
    if (!ok || std::abs(total_utilization(ts) - p.utilization) > p.tolerance) continue;

    for (const auto& t : ts.tasks) {
      if (!t.control) continue;
      for (const auto& plant : plants) {
        if (plant.id == t.control->plant &&
            std::none_of(model.design.plants.begin(), model.design.plants.end(),
                         [&](const auto& q) { return q.id == plant.id; })) {
          model.design.plants.push_back(plant);
        }
      }
    }
    explore::validate(model.design);
    return model;
  }
  throw ModelError("could not draw a task set within the utilization tolerance after " +
                   std::to_string(p.max_retries) + " attempts");
}

}  // namespace whft::synth
