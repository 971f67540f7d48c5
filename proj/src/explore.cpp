#include "whft/explore.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>
#include <unordered_map>

#include "whft/simkit.hpp"

namespace whft::explore {

const control::LtiPlant* Design::plant_for(std::size_t task) const {
  const auto& binding = taskset.tasks.at(task).control;
  if (!binding) return nullptr;
  for (const auto& p : plants) {
    if (p.id == binding->plant) return &p;
  }
  return nullptr;
}

void validate(const Design& design) {
  validate(design.taskset);
  for (std::size_t i = 0; i < design.plants.size(); ++i) {
    control::validate(design.plants[i]);
    for (std::size_t j = 0; j < i; ++j) {
      if (design.plants[j].id == design.plants[i].id) {
        throw ModelError("duplicate plant id '" + design.plants[i].id + "'");
      }
    }
  }
  for (std::size_t i = 0; i < design.taskset.tasks.size(); ++i) {
    const Task& t = design.taskset.tasks[i];
    if (!t.control) continue;
    if (!design.plant_for(i)) {
      throw ModelError("task '" + t.id + "': unknown plant '" + t.control->plant + "'");
    }
    if (!(t.control->weight >= 0.0) || !std::isfinite(t.control->weight)) {
      throw ModelError("task '" + t.id + "': control weight must be non-negative");
    }
    if (!(t.control->desired_cost >= 0.0) || !std::isfinite(t.control->desired_cost)) {
      throw ModelError("task '" + t.id + "': j_des must be non-negative");
    }
  }
  if (!(design.tick_seconds > 0.0)) throw ModelError("tick_seconds must be positive");
}

std::string_view to_string(Backend b) { return b == Backend::twca ? "twca" : "sim"; }

Backend parse_backend(std::string_view text) {
  if (text == "twca") return Backend::twca;
  if (text == "sim" || text == "simulate") return Backend::simulate;
  throw ModelError("unknown backend '" + std::string(text) + "'");
}

SystemCost system_cost(std::span<const control::ControlCost> costs,
                       std::span<const double> weights, std::span<const double> desired) {
  if (costs.size() != weights.size() || costs.size() != desired.size()) {
    throw ModelError("system_cost: mismatched input sizes");
  }
  SystemCost out;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (!(desired[i] > 0.0)) throw ModelError("system_cost: desired cost must be positive");
    if (!costs[i]) {
      out.feasible = false;
      ++out.unstable;
      continue;
    }
    out.value += weights[i] * static_cast<double>(*costs[i]) / desired[i];
  }
  return out;
}

namespace {

std::string config_key(const SystemConfig& cfg) {
  std::string key;
  key.reserve(cfg.cpu.size() * 6);
  for (std::size_t i = 0; i < cfg.cpu.size(); ++i) {
    key += std::to_string(cfg.cpu[i]);
    key += ':';
    key += std::to_string(cfg.priority[i]);
    key += ':';
    key += static_cast<char>('0' + static_cast<int>(cfg.detection[i]));
    key += ';';
  }
  return key;
}

// Controller window for the analytic backend: the declared constraint with the
// largest window within the enumeration guard (ties: fewest misses).
WeaklyHardConstraint control_window(const Task& t) {
  WeaklyHardConstraint best = WeaklyHardConstraint::hard();
  bool found = false;
  for (const auto& c : t.constraints) {
    if (c.window > control::kMaxEnumerationWindow) continue;
    if (!found || c.window > best.window ||
        (c.window == best.window && c.misses < best.misses)) {
      best = c;
      found = true;
    }
  }
  return best;
}

}  // namespace

struct Evaluator::Caches {
  std::vector<std::optional<std::size_t>> plant_of;  // per task
  std::vector<control::DiscretePlant> discrete;      // per plant
  std::vector<double> desired;                        // per task
  std::map<std::pair<std::size_t, std::vector<std::uint8_t>>, control::ControlCost> pattern_cost;
  std::map<std::tuple<std::size_t, std::uint32_t, std::uint32_t>, control::ControlCost> approx;
  std::unordered_map<std::string, Objective> objectives;

  control::ControlCost exact(std::size_t plant, const MissPattern& p) {
    auto key = std::make_pair(plant, p.misses);
    if (auto it = pattern_cost.find(key); it != pattern_cost.end()) return it->second;
    const auto c = control::control_cost(discrete[plant], p);
    pattern_cost.emplace(std::move(key), c);
    return c;
  }

  control::ControlCost bounded(std::size_t plant, std::uint32_t k, std::uint32_t n) {
    const auto key = std::make_tuple(plant, k, n);
    if (auto it = approx.find(key); it != approx.end()) return it->second;
    const auto c = control::approx_worst_cost(discrete[plant], {k, n});
    approx.emplace(key, c);
    return c;
  }
};

Evaluator::Evaluator(const Design& design, EvalParams params)
    : design_(&design), params_(params), caches_(std::make_unique<Caches>()) {
  const auto& tasks = design.taskset.tasks;
  // The staleness slots beyond the first only ever hold copies of the most
  // recent input, so one slot yields the same costs at a smaller dimension.
  for (const auto& p : design.plants) caches_->discrete.push_back(control::discretize(p, 1));
  caches_->plant_of.resize(tasks.size());
  caches_->desired.assign(tasks.size(), 1.0);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const control::LtiPlant* p = design.plant_for(i);
    if (!p) continue;
    const auto idx = static_cast<std::size_t>(p - design.plants.data());
    caches_->plant_of[i] = idx;
    if (tasks[i].control->desired_cost > 0.0) {
      caches_->desired[i] = tasks[i].control->desired_cost;
    } else {
      const auto base = control::all_hit_cost(caches_->discrete[idx]);
      caches_->desired[i] = (base && *base > 0) ? static_cast<double>(*base) : 1.0;
    }
  }
}

Evaluator::~Evaluator() = default;
Evaluator::Evaluator(Evaluator&&) noexcept = default;
Evaluator& Evaluator::operator=(Evaluator&&) noexcept = default;

Objective Evaluator::evaluate(const SystemConfig& cfg) {
  const std::string key = config_key(cfg);
  if (auto it = caches_->objectives.find(key); it != caches_->objectives.end()) return it->second;
  ++evaluations_;

  const TaskSet& ts = design_->taskset;
  const std::size_t n = ts.tasks.size();
  Objective obj;
  obj.task_costs.assign(n, std::nullopt);
  obj.coverage = coverage::coverage_single_error(ts, cfg, params_.rates, params_.aggregation);
  obj.coverage_ok = obj.coverage >= params_.threshold - 1e-12;

  if (params_.backend == Backend::twca) {
    const auto report = twca::twca_verdict(ts, cfg);
    for (const auto& r : report.tasks) {
      if (!r.schedulable) ++obj.violating_tasks;
      const auto plant = caches_->plant_of[r.task];
      if (!plant) continue;
      const WeaklyHardConstraint w = control_window(ts.tasks[r.task]);
      std::uint32_t dmm = w.window;
      for (const auto& b : r.bounds) {
        if (b.constraint == w) dmm = b.dmm;
      }
      obj.task_costs[r.task] = caches_->bounded(*plant, std::min(dmm, w.window), w.window);
    }
  } else {
    auto score = [&](std::size_t task, const MissPattern& p) {
      const auto plant = caches_->plant_of[task];
      if (!plant) return static_cast<double>(p.miss_count());
      const auto c = caches_->exact(*plant, p);
      return c ? static_cast<double>(*c) : 1e18;
    };
    const auto res = sim::event_sim_verdict(ts, cfg, score);
    for (std::size_t i = 0; i < n; ++i) {
      if (!res.task_ok[i]) ++obj.violating_tasks;
      const auto plant = caches_->plant_of[i];
      if (!plant) continue;
      const MissPattern& worst = res.worst_patterns[i];
      obj.task_costs[i] = worst.size() == 0 ? control::all_hit_cost(caches_->discrete[*plant])
                                            : caches_->exact(*plant, worst);
    }
  }
  obj.schedulable = obj.violating_tasks == 0;

  std::vector<control::ControlCost> costs;
  std::vector<double> weights;
  std::vector<double> desired;
  for (std::size_t i = 0; i < n; ++i) {
    if (!obj.task_costs[i]) continue;
    costs.push_back(*obj.task_costs[i]);
    weights.push_back(ts.tasks[i].control->weight);
    desired.push_back(caches_->desired[i]);
  }
  const SystemCost sc = system_cost(costs, weights, desired);
  obj.system_cost = sc.value;
  obj.stable = sc.feasible;
  obj.unstable_controllers = sc.unstable;

  const Penalties& pen = params_.penalties;
  const double base =
      params_.goal == Goal::min_cost ? obj.system_cost : 100.0 * (1.0 - obj.coverage);
  obj.penalized = base;
  if (!obj.feasible()) {
    obj.penalized += pen.sched * static_cast<double>(obj.violating_tasks) +
                     pen.coverage * std::max(0.0, params_.threshold - obj.coverage) * 100.0 +
                     pen.stability * static_cast<double>(obj.unstable_controllers);
  }
  caches_->objectives.emplace(key, obj);
  return obj;
}

Objective evaluate(const Design& design, const SystemConfig& cfg, const EvalParams& params) {
  Evaluator ev(design, params);
  return ev.evaluate(cfg);
}

namespace {

double utilization(const Task& t, Detection d) {
  return static_cast<double>(effective_wcet(t, d)) / static_cast<double>(t.period);
}

}  // namespace

SystemConfig first_fit_decreasing(const TaskSet& ts, std::span<const Detection> detection) {
  const std::size_t n = ts.tasks.size();
  const std::size_t cpus = ts.platform.cpus.size();
  SystemConfig cfg;
  cfg.cpu.assign(n, 0);
  cfg.priority.assign(n, 0);
  cfg.detection.assign(detection.begin(), detection.end());

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return utilization(ts.tasks[a], detection[a]) > utilization(ts.tasks[b], detection[b]);
  });
  std::vector<double> load(cpus, 0.0);
  for (std::size_t i : order) {
    const double u = utilization(ts.tasks[i], detection[i]);
    std::size_t target = cpus;
    for (std::size_t c = 0; c < cpus; ++c) {
      if (load[c] + u <= 1.0 + 1e-12) {
        target = c;
        break;
      }
    }
    if (target == cpus) {
      target = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    }
    cfg.cpu[i] = target;
    load[target] += u;
  }
  assign_deadline_monotonic(ts, cfg);
  return cfg;
}

void assign_deadline_monotonic(const TaskSet& ts, SystemConfig& cfg) {
  for (std::size_t c = 0; c < ts.platform.cpus.size(); ++c) {
    auto on = cfg.tasks_on(c);
    std::stable_sort(on.begin(), on.end(), [&](std::size_t a, std::size_t b) {
      const Task& ta = ts.tasks[a];
      const Task& tb = ts.tasks[b];
      if (ta.deadline != tb.deadline) return ta.deadline < tb.deadline;
      return ta.id < tb.id;
    });
    for (std::size_t r = 0; r < on.size(); ++r) cfg.priority[on[r]] = static_cast<int>(r);
  }
}

InitialSolution initial_solution(const TaskSet& ts, double threshold,
                                 const coverage::DetectionRates& rates, coverage::Aggregation agg) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ModelError("threshold must lie in [0, 1]");
  const std::size_t n = ts.tasks.size();
  std::vector<Detection> det(n, Detection::none);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return utilization(ts.tasks[a], Detection::none) < utilization(ts.tasks[b], Detection::none);
  });

  InitialSolution out;
  out.config = first_fit_decreasing(ts, det);
  out.coverage = coverage::coverage_single_error(ts, out.config, rates, agg);
  auto all_eoc = [&] {
    return std::all_of(det.begin(), det.end(), [](Detection d) { return d == Detection::eoc; });
  };
  while (out.coverage < threshold && n > 0 && !all_eoc()) {
    for (std::size_t i : order) {
      if (out.coverage >= threshold) break;
      if (det[i] == Detection::eoc) continue;
      det[i] = escalate(det[i]);
      out.config = first_fit_decreasing(ts, det);
      out.coverage = coverage::coverage_single_error(ts, out.config, rates, agg);
    }
  }
  out.coverage_met = out.coverage >= threshold;
  return out;
}

SystemConfig random_move(const TaskSet& ts, const SystemConfig& cfg, std::mt19937_64& rng,
                         const MoveProbabilities& probs, MoveKind* applied) {
  const std::size_t n = ts.tasks.size();
  const std::size_t cpus = ts.platform.cpus.size();
  SystemConfig next = cfg;
  if (n == 0) return next;

  std::vector<std::size_t> swappable;
  for (std::size_t c = 0; c < cpus; ++c) {
    if (cfg.tasks_on(c).size() >= 2) swappable.push_back(c);
  }
  const double w_swap = swappable.empty() ? 0.0 : probs.swap_priority;
  const double w_det = probs.change_detection;
  const double w_mig = cpus < 2 ? 0.0 : probs.migrate;
  const double total = w_swap + w_det + w_mig;
  if (!(total > 0.0)) return next;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double draw = unit(rng) * total;
  MoveKind kind = MoveKind::change_detection;
  if (draw < w_swap) {
    kind = MoveKind::swap_priority;
  } else if (draw < w_swap + w_det || w_mig == 0.0) {
    kind = MoveKind::change_detection;
  } else {
    kind = MoveKind::migrate;
  }

  switch (kind) {
    case MoveKind::swap_priority: {
      const std::size_t c =
          swappable[std::uniform_int_distribution<std::size_t>(0, swappable.size() - 1)(rng)];
      const auto on = cfg.tasks_on(c);
      std::uniform_int_distribution<std::size_t> pick(0, on.size() - 1);
      const std::size_t a = pick(rng);
      std::size_t b = std::uniform_int_distribution<std::size_t>(0, on.size() - 2)(rng);
      if (b >= a) ++b;
      std::swap(next.priority[on[a]], next.priority[on[b]]);
      break;
    }
    case MoveKind::change_detection: {
      const std::size_t t = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      next.detection[t] = cycle(next.detection[t]);
      break;
    }
    case MoveKind::migrate: {
      const std::size_t t = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      std::size_t target = std::uniform_int_distribution<std::size_t>(0, cpus - 2)(rng);
      if (target >= cfg.cpu[t]) ++target;
      int lowest = -1;
      for (std::size_t j : cfg.tasks_on(target)) lowest = std::max(lowest, cfg.priority[j]);
      next.cpu[t] = target;
      next.priority[t] = lowest + 1;
      break;
    }
  }
  if (applied) *applied = kind;
  return next;
}

void validate(const SaParams& p) {
  if (!(p.stop_temperature > 0.0)) throw ModelError("stop temperature must be positive");
  if (!(p.initial_temperature > 0.0)) throw ModelError("initial temperature must be positive");
  if (!(p.cooling_factor > 0.0 && p.cooling_factor < 1.0)) {
    throw ModelError("cooling factor must lie in (0, 1)");
  }
  const MoveProbabilities& m = p.moves;
  if (m.swap_priority < 0.0 || m.change_detection < 0.0 || m.migrate < 0.0) {
    throw ModelError("move probabilities must be non-negative");
  }
  if (std::abs(m.swap_priority + m.change_detection + m.migrate - 1.0) > 1e-9) {
    throw ModelError("move probabilities must sum to 1");
  }
}

SaResult sa_optimize(const Design& design, const SaParams& sa, const EvalParams& eval,
                     const std::optional<SystemConfig>& start,
                     const std::function<void(const SaProgress&)>& progress) {
  validate(sa);
  const TaskSet& ts = design.taskset;
  Evaluator ev(design, eval);
  std::mt19937_64 rng(sa.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SaResult out;
  out.initial = start ? *start
                      : initial_solution(ts, eval.threshold, eval.rates, eval.aggregation).config;
  validate(ts, out.initial);
  out.initial_objective = ev.evaluate(out.initial);
  out.best = out.initial;
  out.best_objective = out.initial_objective;
  out.feasible = out.initial_objective.feasible();

  SystemConfig current = out.initial;
  double eta = out.initial_objective.penalized;
  for (double temp = sa.initial_temperature; temp > sa.stop_temperature;
       temp *= sa.cooling_factor) {
    for (std::size_t it = 0; it < sa.iterations_per_temperature; ++it) {
      SystemConfig cand = random_move(ts, current, rng, sa.moves);
      const Objective obj = ev.evaluate(cand);
      const double delta = obj.penalized - eta;
      const bool accept = delta < 0.0 || std::exp(-delta / temp) > unit(rng);
      if (!accept) continue;
      current = std::move(cand);
      eta = obj.penalized;
      if (obj.feasible() && (!out.feasible || obj.penalized < out.best_objective.penalized)) {
        out.best = current;
        out.best_objective = obj;
        out.feasible = true;
      }
    }
    out.best_history.push_back(out.best_objective.penalized);
    if (progress) progress({temp, eta, out.best_objective.penalized, out.feasible});
  }
  out.evaluations = ev.evaluations();
  return out;
}

}  // namespace whft::explore
