#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "whft/simkit.hpp"

using namespace whft;

namespace {

const sim::JobRecord* job(const sim::SimOutcome& o, std::size_t task, std::size_t instance) {
  for (const auto& j : o.jobs) {
    if (j.task == task && j.instance == instance) return &j;
  }
  return nullptr;
}

}  // namespace

TEST_SUITE("simkit") {

TEST_CASE("error on the first t4 job") {
  const auto m = fixture::fourtask(Detection::eoc);
  const auto& ts = m.design.taskset;
  const auto& cfg = *m.config;
  sim::SimOptions opts;
  opts.trace = true;
  const auto o = sim::simulate_scenario(ts, cfg, 0, {3, 0}, opts);
  const auto* j = job(o, 3, 0);
  REQUIRE(j != nullptr);
  CHECK(j->completion == 9);
  CHECK(j->recovery_completion == std::optional<Tick>{12});
  CHECK(j->miss);
  CHECK(o.patterns[3].to_string() == "MHH");
  CHECK(o.patterns[0].miss_count() == 0);
  CHECK(o.quiescent);
  CHECK(o.hyperperiods == 1);

  // t4 runs [4,5], is preempted by t1 at 5, finishes [8,9]
  std::vector<Tick> starts;
  for (const auto& r : o.trace) {
    if (r.task == 3 && r.instance == 0 && !r.recovery && r.event == sim::TraceEvent::start) {
      starts.push_back(r.time);
    }
  }
  CHECK(starts == std::vector<Tick>{4, 8});
  bool missed = false;
  for (const auto& r : o.trace) missed |= (r.task == 3 && r.event == sim::TraceEvent::deadline_miss);
  CHECK(missed);

  const auto clean = sim::simulate_scenario(ts, cfg, 0, sim::ErrorScenario::none());
  CHECK(job(clean, 3, 0)->completion == 9);
  CHECK_FALSE(job(clean, 3, 0)->recovery_completion.has_value());
  for (const auto& p : clean.patterns) CHECK(p.miss_count() == 0);
  CHECK(clean.busy_time == 6 + 5 + 10 + 6);
  CHECK(clean.idle_time == 3);
}

TEST_CASE("single task alone") {
  TaskSet ts;
  Task t;
  t.id = "a";
  t.period = 10;
  t.deadline = 6;
  t.wcet = 2;
  t.detection = Detection::eoc;
  ts.tasks.push_back(t);
  SystemConfig cfg{{0}, {0}, {Detection::eoc}};
  const auto o = sim::simulate_scenario(ts, cfg, 0, {0, 0});
  CHECK(job(o, 0, 0)->recovery_completion == std::optional<Tick>{6});
  CHECK_FALSE(o.patterns[0].miss(0));
  ts.tasks[0].wcet = 3;
  const auto late = sim::simulate_scenario(ts, cfg, 0, {0, 0});
  CHECK(job(late, 0, 0)->recovery_completion == std::optional<Tick>{9});
  CHECK(late.patterns[0].miss(0));
}

TEST_CASE("scenario enumeration") {
  const auto eoc = fixture::fourtask(Detection::eoc);
  CHECK(sim::enumerate_scenarios(eoc.design.taskset, *eoc.config, 0).size() == 4);
  const auto none = fixture::fourtask(Detection::none);
  CHECK(sim::enumerate_scenarios(none.design.taskset, *none.config, 0).size() == 1);
  auto all = eoc;
  for (auto& d : all.config->detection) d = Detection::eoc;
  CHECK(sim::enumerate_scenarios(all.design.taskset, *all.config, 0).size() == 25);
}

TEST_CASE("verdicts") {
  const auto wh = fixture::fourtask(Detection::eoc, {2, 10});
  const auto v = sim::event_sim_verdict(wh.design.taskset, *wh.config);
  CHECK(v.schedulable);
  CHECK(v.worst_patterns[3].miss_count() == 1);
  CHECK(v.scenarios_simulated == 4);

  const auto hard = fixture::fourtask(Detection::eoc);
  const auto h = sim::event_sim_verdict(hard.design.taskset, *hard.config);
  CHECK_FALSE(h.schedulable);
  CHECK_FALSE(h.task_ok[3]);
  CHECK(h.task_ok[0]);

  const auto none = fixture::fourtask(Detection::none);
  const auto n = sim::event_sim_verdict(none.design.taskset, *none.config);
  CHECK(n.schedulable);
  CHECK(n.shortcut);
}

TEST_CASE("event simulation matches a unit-step simulator") {
  std::mt19937_64 rng(41);
  std::size_t compared = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const auto set = oracle::random_taskset(rng, 3 + rng() % 6, 0.3 + 0.6 * (rng() % 100) / 100.0);
    for (const auto& sc : sim::enumerate_scenarios(set.ts, set.cfg, 0)) {
      std::optional<std::pair<std::size_t, std::size_t>> err;
      if (sc.task) err = std::make_pair(*sc.task, sc.instance);
      const auto ref = oracle::tick_simulate(set.ts, set.cfg, 0, err);
      const auto got = sim::simulate_scenario(set.ts, set.cfg, 0, sc);
      CHECK(got.quiescent == ref.quiescent);
      if (!ref.quiescent) continue;
      ++compared;
      CHECK(got.busy_time == ref.busy);
      for (std::size_t i = 0; i < set.ts.tasks.size(); ++i) {
        CHECK(got.patterns[i].misses == ref.misses[i]);
      }
      for (const auto& j : got.jobs) {
        CHECK(j.recovery_completion.value_or(j.completion) == ref.finish[j.task][j.instance]);
      }
    }
  }
  CHECK(compared > 200);
}

TEST_CASE("resumed scenarios equal fresh runs") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 60; ++trial) {
    const auto set = oracle::random_taskset(rng, 3 + rng() % 6, 0.3 + 0.7 * (rng() % 100) / 100.0);
    const auto scenarios = sim::enumerate_scenarios(set.ts, set.cfg, 0);
    const auto all = sim::simulate_all_scenarios(set.ts, set.cfg, 0);
    REQUIRE(all.size() == scenarios.size());
    for (std::size_t s = 0; s < scenarios.size(); ++s) {
      const auto fresh = sim::simulate_scenario(set.ts, set.cfg, 0, scenarios[s]);
      CHECK(all[s].scenario == scenarios[s]);
      CHECK(all[s].patterns == fresh.patterns);
      CHECK(all[s].hyperperiods == fresh.hyperperiods);
      CHECK(all[s].quiescent == fresh.quiescent);
      CHECK(all[s].busy_time == fresh.busy_time);
      CHECK(all[s].idle_time == fresh.idle_time);
      CHECK(all[s].jobs.size() == fresh.jobs.size());
    }
  }
}

TEST_CASE("work is conserved") {
  std::mt19937_64 rng(47);
  for (int trial = 0; trial < 100; ++trial) {
    const auto set = oracle::random_taskset(rng, 3 + rng() % 5, 0.3 + 0.5 * (rng() % 100) / 100.0);
    for (const auto& sc : sim::enumerate_scenarios(set.ts, set.cfg, 0)) {
      const auto o = sim::simulate_scenario(set.ts, set.cfg, 0, sc);
      if (!o.quiescent) continue;
      Tick work = 0;
      for (const auto& j : o.jobs) {
        const Task& t = set.ts.tasks[j.task];
        work += effective_wcet(t, set.cfg.detection[j.task]);
        if (j.recovery_completion) work += recovery_wcet(t, set.cfg.detection[j.task]);
        CHECK(j.completion >= j.release + effective_wcet(t, set.cfg.detection[j.task]));
      }
      CHECK(o.busy_time == work);
      CHECK(o.busy_time + o.idle_time == o.hyperperiods * set.ts.hyperperiod());
    }
  }
}

}
