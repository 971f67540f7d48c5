#include "whft/model.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <numeric>
#include <set>

#include "whft/kernels.hpp"

namespace whft {

std::string_view to_string(Detection d) {
  switch (d) {
    case Detection::none:
      return "none";
    case Detection::eed:
      return "eed";
    case Detection::eoc:
      return "eoc";
  }
  return "none";
}

Detection parse_detection(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (lower == "none") return Detection::none;
  if (lower == "eed") return Detection::eed;
  if (lower == "eoc") return Detection::eoc;
  throw ModelError("unknown detection '" + std::string(text) + "' (expected none, eed or eoc)");
}

Detection escalate(Detection d) {
  return d == Detection::none ? Detection::eed : Detection::eoc;
}

Detection cycle(Detection d) {
  switch (d) {
    case Detection::none:
      return Detection::eed;
    case Detection::eed:
      return Detection::eoc;
    case Detection::eoc:
      return Detection::none;
  }
  return Detection::none;
}

Tick TaskSet::hyperperiod() const {
  return whft::hyperperiod(std::span<const Task>(tasks));
}

Tick TaskSet::error_distance() const {
  if (fault.min_error_distance) return *fault.min_error_distance;
  return tasks.empty() ? 1 : hyperperiod();
}

std::optional<std::size_t> TaskSet::find(std::string_view id) const {
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].id == id) return i;
  }
  return std::nullopt;
}

MissPattern MissPattern::all_hit(std::string task, std::size_t length) {
  return MissPattern{std::move(task), 0, std::vector<std::uint8_t>(length, 0)};
}

MissPattern MissPattern::parse(std::string_view hm, std::string task) {
  MissPattern p{std::move(task), 0, {}};
  p.misses.reserve(hm.size());
  for (char ch : hm) {
    if (ch == 'M' || ch == 'm' || ch == '1') {
      p.misses.push_back(1);
    } else if (ch == 'H' || ch == 'h' || ch == '0') {
      p.misses.push_back(0);
    } else {
      throw ModelError("invalid pattern character '" + std::string(1, ch) + "'");
    }
  }
  return p;
}

std::size_t MissPattern::miss_count() const {
  return static_cast<std::size_t>(std::count(misses.begin(), misses.end(), std::uint8_t{1}));
}

std::string MissPattern::to_string() const {
  std::string s;
  s.reserve(misses.size());
  for (auto m : misses) s.push_back(m ? 'M' : 'H');
  return s;
}

std::vector<std::size_t> SystemConfig::tasks_on(std::size_t cpu_index) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cpu.size(); ++i) {
    if (cpu[i] == cpu_index) out.push_back(i);
  }
  return out;
}

void validate(const TaskSet& ts) {
  if (ts.platform.cpus.empty()) throw ModelError("platform has no CPUs");
  std::set<std::string> cpu_ids;
  for (const auto& id : ts.platform.cpus) {
    if (!cpu_ids.insert(id).second) throw ModelError("duplicate CPU id '" + id + "'");
  }
  if (ts.fault.min_error_distance && *ts.fault.min_error_distance == 0) {
    throw ModelError("fault_model.min_error_distance must be positive");
  }
  std::set<std::string> task_ids;
  for (const auto& t : ts.tasks) {
    const std::string who = "task '" + t.id + "': ";
    if (t.id.empty()) throw ModelError("task with empty id");
    if (!task_ids.insert(t.id).second) throw ModelError(who + "duplicate id");
    if (t.wcet == 0) throw ModelError(who + "wcet must be positive");
    if (t.wcet > t.deadline) throw ModelError(who + "wcet exceeds deadline");
    if (t.deadline > t.period) throw ModelError(who + "deadline exceeds period");
    if (t.constraints.empty()) throw ModelError(who + "needs at least one constraint");
    for (const auto& c : t.constraints) {
      if (c.window == 0 || c.misses >= c.window) {
        throw ModelError(who + "constraint (" + std::to_string(c.misses) + "," +
                         std::to_string(c.window) + ") needs 0 <= k < N");
      }
    }
    if (t.control) {
      if (t.control->weight < 0.0) throw ModelError(who + "negative control weight");
      if (t.control->desired_cost < 0.0) throw ModelError(who + "negative desired cost");
    }
  }
  if (!ts.tasks.empty()) (void)ts.hyperperiod();
}

void validate(const TaskSet& ts, const SystemConfig& cfg) {
  const std::size_t n = ts.tasks.size();
  if (cfg.cpu.size() != n || cfg.priority.size() != n || cfg.detection.size() != n) {
    throw ModelError("configuration does not cover every task");
  }
  std::set<std::pair<std::size_t, int>> seen;
  for (std::size_t i = 0; i < n; ++i) {
    if (cfg.cpu[i] >= ts.platform.cpus.size()) {
      throw ModelError("task '" + ts.tasks[i].id + "' allocated to unknown CPU");
    }
    if (!seen.insert({cfg.cpu[i], cfg.priority[i]}).second) {
      throw ModelError("task '" + ts.tasks[i].id + "': priority " +
                       std::to_string(cfg.priority[i]) + " collides on CPU '" +
                       ts.platform.cpus[cfg.cpu[i]] + "'");
    }
  }
}

Tick effective_wcet(const Task& task, Detection d) {
  switch (d) {
    case Detection::none:
      return task.wcet;
    case Detection::eed:
      return task.wcet + task.eed_overhead;
    case Detection::eoc:
      return task.wcet + task.wcet + task.comparison_overhead;
  }
  return task.wcet;
}

Tick recovery_wcet(const Task& task, Detection d) {
  switch (d) {
    case Detection::none:
      return 0;
    case Detection::eed:
      return task.wcet + task.eed_overhead;
    case Detection::eoc:
      return task.wcet;
  }
  return 0;
}

namespace {
std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return a == 0 ? 0 : (a - 1) / b + 1; }
}  // namespace

std::uint64_t event_bound(const Task& task, Detection d, Tick error_distance, Tick window,
                          EventClass cls, Bound) {
  if (cls == EventClass::typical) return ceil_div(window, task.period);
  if (d == Detection::none) return 0;
  return ceil_div(window, error_distance);
}

Tick demand(const Task& task, Detection d, std::uint64_t n, EventClass cls) {
  return n * (cls == EventClass::typical ? effective_wcet(task, d) : recovery_wcet(task, d));
}

Tick event_distance(const Task& task, std::uint64_t q, Bound) {
  return q == 0 ? 0 : (q - 1) * task.period;
}

Tick hyperperiod(std::span<const Tick> periods) {
  if (periods.empty()) throw ModelError("hyper-period of an empty task set");
  Tick acc = 1;
  for (Tick p : periods) {
    if (p == 0) throw ModelError("period must be positive");
    const Tick g = std::gcd(acc, p);
    const Tick factor = p / g;
    if (acc > std::numeric_limits<Tick>::max() / factor) {
      throw ModelError("hyper-period overflows the tick type; model too large");
    }
    acc *= factor;
  }
  return acc;
}

Tick hyperperiod(std::span<const Task> tasks) {
  std::vector<Tick> periods;
  periods.reserve(tasks.size());
  for (const auto& t : tasks) periods.push_back(t.period);
  return hyperperiod(std::span<const Tick>(periods));
}

std::size_t max_misses_in_window(std::span<const std::uint8_t> seq, std::size_t window) {
  if (window == 0 || seq.empty()) return 0;
  std::vector<std::int32_t> prefix(seq.size() + 1, 0);
  for (std::size_t i = 0; i < seq.size(); ++i) prefix[i + 1] = prefix[i] + (seq[i] ? 1 : 0);
  if (window >= seq.size()) return static_cast<std::size_t>(prefix.back());
  return static_cast<std::size_t>(kernels::max_window_sum(prefix, window));
}

std::size_t sliding_window_misses(const MissPattern& scenario, std::size_t window,
                                  const MissPattern& error_free) {
  if (window == 0 || scenario.misses.empty()) return 0;
  if (error_free.misses.empty()) return max_misses_in_window(scenario.misses, window);
  const std::size_t copies = (window + error_free.size() - 1) / error_free.size();
  std::vector<std::uint8_t> seq;
  seq.reserve(scenario.size() + 2 * copies * error_free.size());
  for (std::size_t c = 0; c < copies; ++c) {
    seq.insert(seq.end(), error_free.misses.begin(), error_free.misses.end());
  }
  seq.insert(seq.end(), scenario.misses.begin(), scenario.misses.end());
  for (std::size_t c = 0; c < copies; ++c) {
    seq.insert(seq.end(), error_free.misses.begin(), error_free.misses.end());
  }
  return max_misses_in_window(seq, window);
}

std::size_t sliding_window_misses(const MissPattern& scenario, std::size_t window) {
  return sliding_window_misses(scenario, window,
                               MissPattern::all_hit(scenario.task, scenario.size()));
}

}  // namespace whft
