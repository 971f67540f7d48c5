#include "whft/simkit.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <tuple>

#include "whft/twca.hpp"

namespace whft::sim {

std::string_view to_string(TraceEvent e) {
  switch (e) {
    case TraceEvent::release:
      return "release";
    case TraceEvent::start:
      return "start";
    case TraceEvent::preempt:
      return "preempt";
    case TraceEvent::complete:
      return "complete";
    case TraceEvent::recovery_release:
      return "recovery-release";
    case TraceEvent::deadline_miss:
      return "deadline-miss";
  }
  return "unknown";
}

namespace {

struct Job {
  std::size_t task;
  std::size_t instance;
  Tick release;
  Tick remaining;
  bool recovery;
  int priority;
  std::size_t record;

  auto key() const { return std::make_tuple(priority, instance, recovery, task); }
};

class CpuSimulation {
 public:
  CpuSimulation(const TaskSet& ts, const SystemConfig& cfg, std::size_t cpu,
                const ErrorScenario& scenario, const SimOptions& opts)
      : ts_(&ts), cfg_(&cfg), scenario_(scenario), opts_(opts), hyper_(ts.hyperperiod()),
        tasks_(cfg.tasks_on(cpu)) {
    out_.cpu = cpu;
    out_.scenario = scenario;
    load_releases(0);
  }

  // With a snapshot sink, the state at every protected primary completion is
  // recorded so single-error scenarios can resume from it.
  void set_snapshot_sink(std::map<std::pair<std::size_t, std::size_t>, CpuSimulation>* sink) {
    snapshots_ = sink;
  }

  // Turns a snapshot into the scenario striking the job that just completed.
  void inject(const ErrorScenario& sc, const SimOutcome* error_free) {
    scenario_ = sc;
    out_.scenario = sc;
    snapshots_ = nullptr;
    error_free_ = opts_.trace ? nullptr : error_free;
    const JobRecord& rec = out_.jobs[struck_record_];
    const Task& t = ts_->tasks[rec.task];
    injected_cr_ = recovery_wcet(t, cfg_->detection[rec.task]);
    Job rj{rec.task, rec.instance, now_, injected_cr_, true, cfg_->priority[rec.task],
           struck_record_};
    pending_.push_back(rj);
    emit(now_, rj, TraceEvent::recovery_release);
  }

  SimOutcome run() {
    while (step()) {
    }
    out_.hyperperiods = hp_ + 1;
    finish_patterns();
    if (opts_.trace) {
      std::stable_sort(out_.trace.begin(), out_.trace.end(),
                       [](const TraceRecord& a, const TraceRecord& b) { return a.time < b.time; });
    }
    return std::move(out_);
  }

 private:
  // Advances the simulation; false once it has ended.
  bool step() {
    while (next_ < releases_.size() && releases_[next_].release <= now_) {
      const Job& j = releases_[next_++];
      pending_.push_back(j);
      emit(now_, j, TraceEvent::release);
    }
    const Tick boundary = (hp_ + 1) * hyper_;
    if (pending_.empty()) {
      if (error_free_ && out_.jobs.size() <= error_free_->jobs.size()) {
        splice();
        return false;
      }
      const Tick until = next_ < releases_.size() ? releases_[next_].release : boundary;
      out_.idle_time += until - now_;
      now_ = until;
      return next_ < releases_.size();  // otherwise idle at the boundary
    }
    if (next_ == releases_.size() && now_ >= boundary) {
      if (hp_ + 1 < opts_.max_hyperperiods) {
        load_releases(++hp_);
        return true;
      }
      out_.quiescent = false;
      while (!pending_.empty()) execute(std::numeric_limits<Tick>::max());
      return false;
    }
    execute(next_ < releases_.size() ? releases_[next_].release : boundary);
    return true;
  }

  // Idle after the error: the rest of the schedule matches the error-free run.
  void splice() {
    const SimOutcome& ef = *error_free_;
    for (std::size_t r = 0; r < out_.jobs.size(); ++r) {
      if (out_.jobs[r].release >= now_) out_.jobs[r] = ef.jobs[r];
    }
    out_.jobs.insert(out_.jobs.end(), ef.jobs.begin() + static_cast<std::ptrdiff_t>(out_.jobs.size()),
                     ef.jobs.end());
    hp_ = ef.hyperperiods - 1;
    out_.quiescent = ef.quiescent;
    out_.busy_time = ef.busy_time + injected_cr_;
    out_.idle_time = ef.idle_time - injected_cr_;
  }

  void load_releases(std::size_t hp) {
    releases_.clear();
    next_ = 0;
    for (std::size_t i : tasks_) {
      const Task& t = ts_->tasks[i];
      const std::size_t per_hp = hyper_ / t.period;
      for (std::size_t k = 0; k < per_hp; ++k) {
        const std::size_t instance = hp * per_hp + k;
        Job j{i, instance, instance * t.period, effective_wcet(t, cfg_->detection[i]), false,
              cfg_->priority[i], out_.jobs.size()};
        out_.jobs.push_back(JobRecord{i, instance, j.release, j.release + t.deadline, 0, {}, false});
        releases_.push_back(j);
      }
    }
    std::sort(releases_.begin(), releases_.end(), [](const Job& a, const Job& b) {
      return std::make_tuple(a.release, a.priority, a.task) <
             std::make_tuple(b.release, b.priority, b.task);
    });
  }

  std::size_t top() const {
    std::size_t best = 0;
    for (std::size_t k = 1; k < pending_.size(); ++k) {
      if (pending_[k].key() < pending_[best].key()) best = k;
    }
    return best;
  }

  // Runs the highest-priority pending job until it completes or `limit`.
  void execute(Tick limit) {
    const std::size_t idx = top();
    Job& job = pending_[idx];
    track_switch(now_, job);
    const Tick until = std::min(now_ + job.remaining, limit);
    out_.busy_time += until - now_;
    job.remaining -= until - now_;
    now_ = until;
    if (job.remaining == 0) {
      Job done = job;
      pending_.erase(pending_.begin() + static_cast<std::ptrdiff_t>(idx));
      running_.reset();
      complete(done);
    }
  }

  void complete(const Job& job) {
    JobRecord& rec = out_.jobs[job.record];
    emit(now_, job, TraceEvent::complete);
    if (!job.recovery) {
      rec.completion = now_;
      const Tick cr = recovery_wcet(ts_->tasks[job.task], cfg_->detection[job.task]);
      if (snapshots_ && cr > 0 && job.instance < hyper_ / ts_->tasks[job.task].period) {
        struck_record_ = job.record;
        snapshots_->emplace(std::make_pair(job.task, job.instance), *this);
      }
      const bool struck = scenario_.task && *scenario_.task == job.task &&
                          scenario_.instance == job.instance;
      if (struck && cr > 0) {
        Job rj{job.task, job.instance, now_, cr, true, job.priority, job.record};
        pending_.push_back(rj);
        emit(now_, rj, TraceEvent::recovery_release);
        return;
      }
    } else {
      rec.recovery_completion = now_;
    }
    rec.miss = now_ > rec.absolute_deadline;
    if (rec.miss) emit(rec.absolute_deadline, job, TraceEvent::deadline_miss);
  }

  void track_switch(Tick time, const Job& job) {
    const auto id = std::make_tuple(job.task, job.instance, job.recovery);
    if (running_ && *running_ == id) return;
    if (running_) {
      for (const Job& p : pending_) {
        if (std::make_tuple(p.task, p.instance, p.recovery) == *running_) {
          emit(time, p, TraceEvent::preempt);
          break;
        }
      }
    }
    running_ = id;
    emit(time, job, TraceEvent::start);
  }

  void emit(Tick time, const Job& job, TraceEvent ev) {
    if (!opts_.trace) return;
    out_.trace.push_back(TraceRecord{time, out_.cpu, job.task, job.instance, job.recovery, ev});
  }

  void finish_patterns() {
    out_.patterns.assign(ts_->tasks.size(), MissPattern{});
    for (std::size_t i : tasks_) {
      MissPattern& p = out_.patterns[i];
      p.task = ts_->tasks[i].id;
      p.misses.assign(out_.hyperperiods * (hyper_ / ts_->tasks[i].period), 0);
    }
    for (const JobRecord& rec : out_.jobs) {
      if (rec.miss) out_.patterns[rec.task].misses[rec.instance] = 1;
    }
  }

  const TaskSet* ts_;
  const SystemConfig* cfg_;
  ErrorScenario scenario_;
  SimOptions opts_;
  Tick hyper_;
  std::vector<std::size_t> tasks_;
  std::vector<Job> releases_;
  std::size_t next_ = 0;
  std::size_t hp_ = 0;
  Tick now_ = 0;
  std::vector<Job> pending_;
  std::optional<std::tuple<std::size_t, std::size_t, bool>> running_;
  SimOutcome out_;
  std::map<std::pair<std::size_t, std::size_t>, CpuSimulation>* snapshots_ = nullptr;
  std::size_t struck_record_ = 0;
  Tick injected_cr_ = 0;
  const SimOutcome* error_free_ = nullptr;
};

}  // namespace

SimOutcome simulate_scenario(const TaskSet& ts, const SystemConfig& cfg, std::size_t cpu,
                             const ErrorScenario& scenario, const SimOptions& opts) {
  if (ts.tasks.empty()) {
    SimOutcome empty;
    empty.cpu = cpu;
    empty.scenario = scenario;
    return empty;
  }
  return CpuSimulation(ts, cfg, cpu, scenario, opts).run();
}

std::vector<SimOutcome> simulate_all_scenarios(const TaskSet& ts, const SystemConfig& cfg,
                                               std::size_t cpu, const SimOptions& opts) {
  const auto scenarios = enumerate_scenarios(ts, cfg, cpu);
  std::vector<SimOutcome> out;
  if (ts.tasks.empty()) {
    for (const auto& sc : scenarios) out.push_back(simulate_scenario(ts, cfg, cpu, sc, opts));
    return out;
  }
  std::map<std::pair<std::size_t, std::size_t>, CpuSimulation> snapshots;
  CpuSimulation base(ts, cfg, cpu, ErrorScenario::none(), opts);
  base.set_snapshot_sink(&snapshots);
  out.push_back(base.run());
  for (std::size_t s = 1; s < scenarios.size(); ++s) {
    const ErrorScenario& sc = scenarios[s];
    auto it = snapshots.find({*sc.task, sc.instance});
    if (it == snapshots.end()) {
      out.push_back(simulate_scenario(ts, cfg, cpu, sc, opts));
      continue;
    }
    CpuSimulation resumed = std::move(it->second);
    snapshots.erase(it);
    resumed.inject(sc, &out.front());
    out.push_back(resumed.run());
  }
  return out;
}

std::vector<ErrorScenario> enumerate_scenarios(const TaskSet& ts, const SystemConfig& cfg,
                                               std::size_t cpu) {
  std::vector<ErrorScenario> out{ErrorScenario::none()};
  if (ts.tasks.empty()) return out;
  const Tick hyper = ts.hyperperiod();
  for (std::size_t i : cfg.tasks_on(cpu)) {
    if (cfg.detection[i] == Detection::none) continue;
    for (std::size_t k = 0; k < hyper / ts.tasks[i].period; ++k) out.push_back({i, k});
  }
  return out;
}

EventSimResult event_sim_verdict(const TaskSet& ts, const SystemConfig& cfg,
                                 const PatternScore& score) {
  const std::size_t n = ts.tasks.size();
  EventSimResult res;
  res.task_ok.assign(n, true);
  res.worst_patterns.resize(n);
  res.distinct_patterns.resize(n);
  res.error_free.resize(n);
  if (n == 0) {
    res.shortcut = true;
    return res;
  }
  const Tick hyper = ts.hyperperiod();

  const auto report = twca::twca_verdict(ts, cfg);
  const bool all_meet = std::all_of(report.tasks.begin(), report.tasks.end(), [&](const auto& r) {
    return r.converged && r.wcrt <= ts.tasks[r.task].deadline;
  });
  if (all_meet) {
    res.shortcut = true;
    for (std::size_t i = 0; i < n; ++i) {
      auto hit = MissPattern::all_hit(ts.tasks[i].id, hyper / ts.tasks[i].period);
      res.error_free[i] = hit;
      res.worst_patterns[i] = hit;
      res.distinct_patterns[i] = {hit};
    }
    return res;
  }

  auto rate = [&](std::size_t task, const MissPattern& p) {
    return score ? score(task, p) : static_cast<double>(p.miss_count());
  };

  for (std::size_t cpu = 0; cpu < ts.platform.cpus.size(); ++cpu) {
    const auto on_cpu = cfg.tasks_on(cpu);
    if (on_cpu.empty()) continue;
    // A backlog that never clears without errors only grows with one, so every
    // task on this CPU already fails.
    std::vector<SimOutcome> outcomes;
    outcomes.push_back(simulate_scenario(ts, cfg, cpu, ErrorScenario::none()));
    if (outcomes.front().quiescent) outcomes = simulate_all_scenarios(ts, cfg, cpu);
    const SimOutcome& error_free = outcomes.front();
    res.scenarios_simulated += outcomes.size();
    for (std::size_t i : on_cpu) {
      MissPattern p = error_free.patterns[i];
      p.misses.resize(hyper / ts.tasks[i].period);
      res.error_free[i] = std::move(p);
    }

    std::vector<std::set<std::vector<std::uint8_t>>> seen(n);
    std::vector<double> best(n, -1.0);
    for (const SimOutcome& out : outcomes) {
      for (std::size_t i : on_cpu) {
        if (!out.quiescent) res.task_ok[i] = false;
        const MissPattern& p = out.patterns[i];
        if (!seen[i].insert(p.misses).second) continue;
        for (const auto& c : ts.tasks[i].constraints) {
          if (sliding_window_misses(p, c.window, res.error_free[i]) > c.misses) {
            res.task_ok[i] = false;
          }
        }
        res.distinct_patterns[i].push_back(p);
        const double s = rate(i, p);
        if (s > best[i]) {
          best[i] = s;
          res.worst_patterns[i] = p;
        }
      }
    }
  }
  res.schedulable = std::all_of(res.task_ok.begin(), res.task_ok.end(), [](bool b) { return b; });
  return res;
}

}  // namespace whft::sim
