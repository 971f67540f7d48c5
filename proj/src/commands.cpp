#include "whft/commands.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <thread>

#include "whft/coverage.hpp"
#include "whft/simkit.hpp"
#include "whft/twca.hpp"

namespace whft::cli {

namespace {

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

const char* flag(bool b) { return b ? "1" : "0"; }

}  // namespace

io::Model scale_wcet(io::Model model, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw ModelError("scale must be positive");
  if (factor == 1.0) return model;
  for (auto& t : model.design.taskset.tasks) {
    t.wcet = std::max<Tick>(1, static_cast<Tick>(std::llround(static_cast<double>(t.wcet) * factor)));
  }
  validate(model.design.taskset);
  return model;
}

TaskSet harden(TaskSet ts) {
  for (auto& t : ts.tasks) t.constraints = {WeaklyHardConstraint::hard()};
  return ts;
}

int run_analyze(const io::Model& model, const Options&, std::ostream& out) {
  const TaskSet& ts = model.design.taskset;
  const SystemConfig cfg = io::config_or_default(model);
  const auto report = twca::twca_verdict(ts, cfg);
  out << "#schema whft-analyze/1\n"
      << "task,cpu,priority,detection,C,CR,converged,wcrt,deadline,busy_window,activations,"
         "miss_candidates,k,N,dmm,satisfied\n";
  for (const auto& r : report.tasks) {
    const Task& t = ts.tasks[r.task];
    std::string cands;
    for (std::size_t j = 0; j < r.miss_candidates.size(); ++j) {
      cands += (j ? " " : "") + std::to_string(r.miss_candidates[j]);
    }
    for (const auto& b : r.bounds) {
      out << t.id << ',' << ts.platform.cpus[cfg.cpu[r.task]] << ',' << cfg.priority[r.task] << ','
          << to_string(cfg.detection[r.task]) << ',' << effective_wcet(t, cfg.detection[r.task])
          << ',' << recovery_wcet(t, cfg.detection[r.task]) << ',' << flag(r.converged) << ','
          << (r.converged ? std::to_string(r.wcrt) : std::string("inf")) << ',' << t.deadline
          << ',' << r.busy.length << ',' << r.busy.activations << ',' << cands << ','
          << b.constraint.misses << ',' << b.constraint.window << ',' << b.dmm << ','
          << flag(b.satisfied) << '\n';
    }
  }
  return report.schedulable ? kOk : kInfeasible;
}

int run_simulate(const io::Model& model, const Options& opts, std::ostream& out,
                 std::ostream* trace) {
  const TaskSet& ts = model.design.taskset;
  const SystemConfig cfg = io::config_or_default(model);
  validate(ts, cfg);
  sim::SimOptions so;
  so.trace = opts.trace && trace != nullptr;

  out << "#schema whft-simulate/1\n"
      << "kind,cpu,error_task,error_instance,task,instance,release,deadline,completion,"
         "recovery_completion,miss,pattern\n";
  if (so.trace) *trace << "#schema whft-trace/1\ncpu,error_task,error_instance,time,task,instance,recovery,event\n";

  for (std::size_t cpu = 0; cpu < ts.platform.cpus.size(); ++cpu) {
    if (cfg.tasks_on(cpu).empty()) continue;
    const std::string cpu_name = ts.platform.cpus[cpu];
    for (const auto& outcome : sim::simulate_all_scenarios(ts, cfg, cpu, so)) {
      const auto& sc = outcome.scenario;
      const std::string err_task = sc.is_none() ? "" : ts.tasks[*sc.task].id;
      const std::string err_inst = sc.is_none() ? "" : std::to_string(sc.instance);
      const std::string prefix = cpu_name + ',' + err_task + ',' + err_inst + ',';
      for (const auto& j : outcome.jobs) {
        out << "job," << prefix << ts.tasks[j.task].id << ',' << j.instance << ',' << j.release
            << ',' << j.absolute_deadline << ',' << j.completion << ','
            << (j.recovery_completion ? std::to_string(*j.recovery_completion) : std::string())
            << ',' << flag(j.miss) << ",\n";
      }
      for (std::size_t i : cfg.tasks_on(cpu)) {
        out << "pattern," << prefix << ts.tasks[i].id << ",,,,,,,"
            << outcome.patterns[i].to_string() << '\n';
      }
      if (so.trace) {
        for (const auto& r : outcome.trace) {
          *trace << cpu_name << ',' << err_task << ',' << err_inst << ',' << r.time << ','
                 << ts.tasks[r.task].id << ',' << r.instance << ',' << flag(r.recovery) << ','
                 << sim::to_string(r.event) << '\n';
        }
      }
    }
  }
  const auto verdict = sim::event_sim_verdict(ts, cfg);
  for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
    out << "worst," << ts.platform.cpus[cfg.cpu[i]] << ",,," << ts.tasks[i].id << ",,,,,,"
        << flag(!verdict.task_ok[i]) << ',' << verdict.worst_patterns[i].to_string() << '\n';
  }
  return verdict.schedulable ? kOk : kInfeasible;
}

explore::Objective exact_objective(const explore::Design& design, const SystemConfig& cfg,
                                   double threshold, coverage::Aggregation agg) {
  explore::EvalParams p;
  p.backend = explore::Backend::simulate;
  p.threshold = threshold;
  p.aggregation = agg;
  return explore::evaluate(design, cfg, p);
}

int run_optimize(const io::Model& model, const Options& opts, std::ostream& out,
                 std::ostream* log, io::Model* optimized) {
  explore::EvalParams ep;
  ep.backend = opts.backend;
  ep.threshold = opts.threshold;
  ep.aggregation = opts.aggregation;
  explore::SaParams sa = opts.sa;
  sa.seed = opts.seed;

  std::function<void(const explore::SaProgress&)> progress;
  if (log) {
    progress = [log](const explore::SaProgress& p) {
      *log << "T=" << fmt(p.temperature) << " current=" << fmt(p.current)
           << " best=" << fmt(p.best) << " feasible=" << flag(p.best_feasible) << '\n';
    };
  }
  const auto res = explore::sa_optimize(model.design, sa, ep, std::nullopt, progress);
  const TaskSet& ts = model.design.taskset;
  const auto& obj = res.best_objective;

  out << "#schema whft-optimize/1\n"
      << "task,cpu,priority,detection,control_cost\n";
  for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
    out << ts.tasks[i].id << ',' << ts.platform.cpus[res.best.cpu[i]] << ','
        << res.best.priority[i] << ',' << to_string(res.best.detection[i]) << ','
        << (obj.task_costs[i] ? control::to_string(*obj.task_costs[i]) : std::string()) << '\n';
  }
  if (log) {
    *log << "backend=" << explore::to_string(opts.backend) << " system_cost=" << fmt(obj.system_cost)
         << " coverage=" << fmt(obj.coverage) << " schedulable=" << flag(obj.schedulable)
         << " stable=" << flag(obj.stable) << " feasible=" << flag(res.feasible)
         << " evaluations=" << res.evaluations << '\n';
  }
  if (optimized) {
    *optimized = model;
    for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
      optimized->design.taskset.tasks[i].detection = res.best.detection[i];
    }
    optimized->config = res.best;
  }
  return res.feasible ? kOk : kInfeasible;
}

SweepMode parse_sweep_mode(std::string_view text) {
  if (text == "coverage") return SweepMode::coverage;
  if (text == "cost") return SweepMode::cost;
  if (text == "threshold") return SweepMode::threshold;
  throw ModelError("unknown sweep mode '" + std::string(text) + "'");
}

std::string_view to_string(SweepMode m) {
  switch (m) {
    case SweepMode::coverage: return "coverage";
    case SweepMode::cost: return "cost";
    case SweepMode::threshold: return "threshold";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

SweepRow make_row(SweepMode mode, double u, double thr, std::uint64_t seed, std::string variant,
                  const explore::Objective& obj, bool feasible, std::size_t evals,
                  Clock::time_point start) {
  SweepRow row;
  row.mode = std::string(to_string(mode));
  row.utilization = u;
  row.threshold = thr;
  row.seed = seed;
  row.variant = std::move(variant);
  row.coverage = obj.coverage;
  row.system_cost = obj.system_cost;
  row.feasible = feasible;
  row.evaluations = evals;
  row.runtime_ms = elapsed_ms(start);
  return row;
}

explore::EvalParams eval_params(const Options& opts, explore::Backend backend, double threshold,
                                explore::Goal goal = explore::Goal::min_cost) {
  explore::EvalParams ep;
  ep.backend = backend;
  ep.threshold = threshold;
  ep.aggregation = opts.aggregation;
  ep.goal = goal;
  return ep;
}

std::vector<SweepRow> coverage_cell(const Options& opts, const synth::SynthParams& sp,
                                    std::uint64_t seed) {
  const io::Model model = synth::generate_synthetic(sp);
  explore::Design hard = model.design;
  hard.taskset = harden(hard.taskset);
  explore::SaParams sa = opts.sa;
  sa.seed = seed;
  const auto ep = eval_params(opts, opts.backend, 0.0, explore::Goal::max_coverage);

  std::vector<SweepRow> rows;
  auto start = Clock::now();
  const auto h = explore::sa_optimize(hard, sa, ep);
  explore::Objective hard_obj = h.best_objective;
  if (!h.feasible) hard_obj.coverage = 0.0;
  rows.push_back(make_row(SweepMode::coverage, sp.utilization, 0.0, seed, "hard", hard_obj,
                          h.feasible, h.evaluations, start));

  // A hard-feasible configuration also meets every weakly-hard constraint.
  start = Clock::now();
  const auto w = explore::sa_optimize(model.design, sa, ep,
                                      h.feasible ? std::optional(h.best) : std::nullopt);
  explore::Objective wh_obj = w.best_objective;
  if (!w.feasible) wh_obj.coverage = 0.0;
  rows.push_back(make_row(SweepMode::coverage, sp.utilization, 0.0, seed, "weakly-hard", wh_obj,
                          w.feasible, w.evaluations, start));
  return rows;
}

std::vector<SweepRow> cost_cell(const Options& opts, const explore::Design& design, double u,
                                double thr, std::uint64_t seed, bool all_variants) {
  std::vector<SweepRow> rows;
  explore::SaParams sa = opts.sa;
  sa.seed = seed;

  if (all_variants) {
    auto start = Clock::now();
    const auto init = explore::initial_solution(design.taskset, thr, {}, opts.aggregation);
    const auto obj = exact_objective(design, init.config, thr, opts.aggregation);
    rows.push_back(make_row(SweepMode::cost, u, thr, seed, "initial", obj, obj.feasible(), 1, start));
  }
  std::vector<explore::Backend> backends;
  if (all_variants) {
    backends = {explore::Backend::twca, explore::Backend::simulate};
  } else {
    backends = {opts.backend};
  }
  for (auto backend : backends) {
    const auto start = Clock::now();
    const auto res = explore::sa_optimize(design, sa, eval_params(opts, backend, thr));
    const auto obj = exact_objective(design, res.best, thr, opts.aggregation);
    rows.push_back(make_row(all_variants ? SweepMode::cost : SweepMode::threshold, u, thr, seed,
                            std::string(explore::to_string(backend)), obj,
                            res.feasible && obj.feasible(), res.evaluations, start));
  }
  return rows;
}

std::uint64_t cell_seed(std::uint64_t base, std::size_t s) { return base + s; }

}  // namespace

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const Options& opts) {
  if (spec.seeds == 0) throw ModelError("sweep needs at least one seed");
  std::vector<std::function<std::vector<SweepRow>()>> cells;

  if (spec.mode == SweepMode::threshold) {
    if (spec.thresholds.empty()) throw ModelError("threshold sweep needs thresholds");
    for (double thr : spec.thresholds) {
      for (std::size_t s = 0; s < spec.seeds; ++s) {
        const std::uint64_t seed = cell_seed(opts.seed, s);
        cells.push_back([&spec, &opts, thr, seed] {
          io::Model model;
          double u = 0.0;
          if (spec.model) {
            model = *spec.model;
            u = synth::total_utilization(model.design.taskset);
          } else {
            synth::SynthParams sp = spec.synth;
            u = spec.utilizations.empty() ? sp.utilization : spec.utilizations.front();
            sp.utilization = u;
            sp.seed = seed;
            model = synth::generate_synthetic(sp);
          }
          return cost_cell(opts, model.design, u, thr, seed, false);
        });
      }
    }
  } else {
    if (spec.utilizations.empty()) throw ModelError("sweep needs utilizations");
    for (double u : spec.utilizations) {
      for (std::size_t s = 0; s < spec.seeds; ++s) {
        const std::uint64_t seed = cell_seed(opts.seed, s);
        synth::SynthParams sp = spec.synth;
        sp.utilization = u;
        sp.seed = seed;
        if (spec.mode == SweepMode::coverage) {
          cells.push_back([&opts, sp, seed] { return coverage_cell(opts, sp, seed); });
        } else {
          const double thr = spec.thresholds.empty() ? opts.threshold : spec.thresholds.front();
          cells.push_back([&opts, sp, seed, u, thr] {
            const io::Model model = synth::generate_synthetic(sp);
            return cost_cell(opts, model.design, u, thr, seed, true);
          });
        }
      }
    }
  }

  std::vector<std::vector<SweepRow>> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      try {
        results[i] = cells[i]();
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opts.jobs, cells.size()));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<SweepRow> rows;
  for (auto& r : results) rows.insert(rows.end(), r.begin(), r.end());
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "#schema whft-sweep/1\n"
      << "mode,utilization,threshold,seed,variant,coverage,system_cost,feasible,evaluations,"
         "runtime_ms\n";
  for (const auto& r : rows) {
    out << r.mode << ',' << fmt(r.utilization) << ',' << fmt(r.threshold) << ',' << r.seed << ','
        << r.variant << ',' << fmt(r.coverage) << ',' << fmt(r.system_cost) << ','
        << flag(r.feasible) << ',' << r.evaluations << ',' << fmt(std::round(r.runtime_ms * 10) / 10)
        << '\n';
  }
}

int run_sweep(const SweepSpec& spec, const Options& opts, std::ostream& out) {
  const auto rows = run_sweep(spec, opts);
  write_sweep_csv(rows, out);
  return kOk;
}

}  // namespace whft::cli
