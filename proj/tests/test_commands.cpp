#include <doctest.h>

#include <regex>
#include <sstream>

#include "fixtures.hpp"
#include "whft/commands.hpp"

using namespace whft;
using namespace whft::cli;

namespace {

// runtime_ms is the last column of sweep rows
std::string mask_runtime(const std::string& csv) {
  return std::regex_replace(csv, std::regex(",[0-9.]+\n"), ",*\n");
}

}  // namespace

TEST_SUITE("commands") {

TEST_CASE("analyze") {
  std::ostringstream out;
  CHECK(run_analyze(fixture::load("empty.json"), {}, out) == kOk);
  CHECK(out.str().rfind("#schema whft-analyze/1\n", 0) == 0);
  std::ostringstream bad;
  CHECK(run_analyze(fixture::load("fourtask_eoc.json"), {}, bad) == kInfeasible);
  CHECK(bad.str().find("tau4,cpu0,3,eoc,2,1,1,12,10,18,2,1,0,1,1,0") != std::string::npos);
  std::ostringstream good;
  CHECK(run_analyze(fixture::load("fourtask.json"), {}, good) == kOk);
}

TEST_CASE("simulate reports the t4 miss") {
  std::ostringstream out, trace;
  Options o;
  o.trace = true;
  CHECK(run_simulate(fixture::load("fourtask_eoc.json"), o, out, &trace) == kInfeasible);
  const std::string csv = out.str();
  CHECK(csv.find("job,cpu0,tau4,0,tau4,0,0,10,9,12,1,") != std::string::npos);
  CHECK(csv.find("pattern,cpu0,tau4,0,tau4,,,,,,,MHH") != std::string::npos);
  CHECK(trace.str().rfind("#schema whft-trace/1\n", 0) == 0);
  CHECK(trace.str().find("cpu0,tau4,0,10,tau4,0,1,deadline-miss") != std::string::npos);

  std::ostringstream ok;
  CHECK(run_simulate(fixture::load("fourtask_wh.json"), {}, ok) == kOk);
}

TEST_CASE("optimize") {
  Options o;
  o.threshold = 0.3;
  o.sa.initial_temperature = 10;
  o.sa.stop_temperature = 1;
  o.sa.cooling_factor = 0.7;
  o.sa.iterations_per_temperature = 20;
  std::ostringstream a, b, log;
  io::Model optimized;
  CHECK(run_optimize(fixture::load("fourtask_wh.json"), o, a, &log, &optimized) == kOk);
  CHECK(run_optimize(fixture::load("fourtask_wh.json"), o, b) == kOk);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("#schema whft-optimize/1\n", 0) == 0);
  REQUIRE(optimized.config.has_value());
  CHECK(optimized.config->detection[3] != Detection::none);
  CHECK(!log.str().empty());
}

TEST_CASE("sweeps are deterministic and ordered") {
  SweepSpec spec;
  spec.utilizations = {0.3, 0.6};
  spec.seeds = 2;
  spec.synth.control_tasks = 2;
  spec.synth.other_tasks = 2;
  Options o;
  o.backend = explore::Backend::twca;
  o.sa.initial_temperature = 10;
  o.sa.stop_temperature = 1;
  o.sa.cooling_factor = 0.6;
  o.sa.iterations_per_temperature = 10;
  std::ostringstream first, second;
  CHECK(run_sweep(spec, o, first) == kOk);
  o.jobs = 3;
  CHECK(run_sweep(spec, o, second) == kOk);
  CHECK(mask_runtime(first.str()) == mask_runtime(second.str()));
  CHECK(first.str().rfind("#schema whft-sweep/1\n", 0) == 0);

  const auto rows = run_sweep(spec, o);
  REQUIRE(rows.size() == 8);
  for (std::size_t i = 0; i + 1 < rows.size(); i += 2) {
    CHECK(rows[i].variant == "hard");
    CHECK(rows[i + 1].variant == "weakly-hard");
    CHECK(rows[i + 1].coverage >= rows[i].coverage);
  }
}

TEST_CASE("helpers") {
  const auto m = scale_wcet(fixture::load("fourtask.json"), 2.5);
  CHECK(m.design.taskset.tasks[0].wcet == 3);
  const auto tiny = scale_wcet(fixture::load("fourtask.json"), 0.01);
  CHECK(tiny.design.taskset.tasks[0].wcet == 1);
  const auto h = harden(fixture::load("fourtask_wh.json").design.taskset);
  CHECK(h.tasks[3].constraints == std::vector<WeaklyHardConstraint>{{0, 1}});
  CHECK(parse_sweep_mode("cost") == SweepMode::cost);
  CHECK_THROWS(parse_sweep_mode("bogus"));
}

}
