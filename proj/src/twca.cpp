#include "whft/twca.hpp"

#include <algorithm>

namespace whft::twca {
namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return a == 0 ? 0 : (a - 1) / b + 1; }

struct Context {
  const TaskSet& ts;
  const SystemConfig& cfg;
  std::size_t task;
  std::vector<std::size_t> higher;  // strictly higher priority, same CPU
  Tick error_distance;
  Tick cap;

  Context(const TaskSet& t, const SystemConfig& c, std::size_t i)
      : ts(t), cfg(c), task(i), error_distance(t.error_distance()), cap(2 * t.hyperperiod()) {
    for (std::size_t j = 0; j < ts.tasks.size(); ++j) {
      if (j != i && cfg.cpu[j] == cfg.cpu[i] && cfg.priority[j] < cfg.priority[i]) {
        higher.push_back(j);
      }
    }
  }

  Tick overload(Tick window) const {
    // The recovery of the task itself runs at its own priority and delays it.
    Tick worst = demand(ts.tasks[task], cfg.detection[task],
                        event_bound(ts.tasks[task], cfg.detection[task], error_distance, window,
                                    EventClass::overload),
                        EventClass::overload);
    for (std::size_t j : higher) {
      const auto& tj = ts.tasks[j];
      const auto n = event_bound(tj, cfg.detection[j], error_distance, window, EventClass::overload);
      worst = std::max(worst, demand(tj, cfg.detection[j], n, EventClass::overload));
    }
    return worst;
  }

  std::optional<Tick> fixed_point(std::uint64_t q, bool with_overload) const {
    const Tick own = demand(ts.tasks[task], cfg.detection[task], q, EventClass::typical);
    Tick b = own;
    while (true) {
      Tick next = own;
      for (std::size_t j : higher) {
        const auto& tj = ts.tasks[j];
        next += demand(tj, cfg.detection[j], event_bound(tj, cfg.detection[j], error_distance, b,
                                                         EventClass::typical),
                       EventClass::typical);
      }
      if (with_overload) next += overload(b);
      if (next > cap) return std::nullopt;
      if (next == b) return b;
      b = next;
    }
  }
};

}  // namespace

std::optional<Tick> busy_demand(const TaskSet& ts, const SystemConfig& cfg, std::size_t task,
                                std::uint64_t q, bool with_overload) {
  if (q == 0) return Tick{0};
  return Context(ts, cfg, task).fixed_point(q, with_overload);
}

namespace {

struct WindowScan {
  BusyWindow busy;
  std::vector<Tick> demands;
};

std::optional<WindowScan> scan_window(const Context& ctx, bool with_overload) {
  const Task& t = ctx.ts.tasks[ctx.task];
  WindowScan out;
  for (std::uint64_t q = 1;; ++q) {
    const auto b = ctx.fixed_point(q, with_overload);
    if (!b) return std::nullopt;
    out.demands.push_back(*b);
    if (*b <= event_distance(t, q + 1, Bound::lower)) {
      out.busy = {*b, q};
      return out;
    }
    if (event_distance(t, q + 1) > ctx.cap) return std::nullopt;
  }
}

Tick response_bound(const Task& t, const std::vector<Tick>& demands) {
  Tick r = 0;
  for (std::size_t q = 1; q <= demands.size(); ++q) {
    r = std::max(r, demands[q - 1] - event_distance(t, q, Bound::lower));
  }
  return r;
}

}  // namespace

std::optional<BusyWindow> busy_window(const TaskSet& ts, const SystemConfig& cfg,
                                      std::size_t task, bool with_overload) {
  const auto scan = scan_window(Context(ts, cfg, task), with_overload);
  if (!scan) return std::nullopt;
  return scan->busy;
}

std::optional<Tick> wcrt(const TaskSet& ts, const SystemConfig& cfg, std::size_t task,
                         bool with_overload) {
  const auto scan = scan_window(Context(ts, cfg, task), with_overload);
  if (!scan) return std::nullopt;
  return response_bound(ts.tasks[task], scan->demands);
}

std::vector<std::uint64_t> miss_candidates(const TaskSet& ts, const SystemConfig& cfg,
                                           std::size_t task) {
  return analyze_task(ts, cfg, task).miss_candidates;
}

TaskReport analyze_task(const TaskSet& ts, const SystemConfig& cfg, std::size_t task) {
  const Task& t = ts.tasks[task];
  const Context ctx(ts, cfg, task);
  TaskReport rep;
  rep.task = task;

  const auto typical = scan_window(ctx, false);
  rep.typical_feasible = typical && response_bound(t, typical->demands) <= t.deadline;

  const auto scan = scan_window(ctx, true);
  rep.converged = scan.has_value();
  if (scan) {
    rep.busy = scan->busy;
    rep.busy_demands = scan->demands;
    rep.wcrt = response_bound(t, scan->demands);
    for (std::uint64_t q = 1; q <= scan->demands.size(); ++q) {
      if (scan->demands[q - 1] - event_distance(t, q, Bound::lower) > t.deadline) {
        rep.miss_candidates.push_back(q);
      }
    }
  }

  rep.schedulable = rep.converged;
  for (const auto& c : t.constraints) {
    ConstraintBound cb;
    cb.constraint = c;
    if (!rep.converged || !rep.typical_feasible) {
      cb.dmm = c.window;
    } else if (rep.miss_candidates.empty()) {
      cb.dmm = 0;
    } else {
      const Tick span = rep.busy.length + event_distance(t, c.window, Bound::upper) + rep.wcrt;
      const std::uint64_t bursts = ceil_div(span, ctx.error_distance);
      cb.dmm = static_cast<std::uint32_t>(
          std::min<std::uint64_t>(c.window, rep.miss_candidates.size() * bursts));
    }
    cb.satisfied = cb.dmm <= c.misses;
    rep.schedulable = rep.schedulable && cb.satisfied;
    rep.bounds.push_back(cb);
  }
  return rep;
}

std::uint32_t dmm_bound(const TaskSet& ts, const SystemConfig& cfg, std::size_t task,
                        std::uint32_t window) {
  TaskSet probe = ts;
  probe.tasks[task].constraints = {WeaklyHardConstraint{0, std::max<std::uint32_t>(window, 1)}};
  return analyze_task(probe, cfg, task).bounds.front().dmm;
}

TwcaReport twca_verdict(const TaskSet& ts, const SystemConfig& cfg) {
  TwcaReport report;
  report.tasks.reserve(ts.tasks.size());
  for (std::size_t i = 0; i < ts.tasks.size(); ++i) {
    report.tasks.push_back(analyze_task(ts, cfg, i));
    report.schedulable = report.schedulable && report.tasks.back().schedulable;
  }
  return report;
}

}  // namespace whft::twca
