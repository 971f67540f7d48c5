#include <doctest.h>

#include <json.hpp>

#include "fixtures.hpp"
#include "whft/synth.hpp"

using namespace whft;
using nlohmann::json;

namespace {

std::string edited(const std::string& fixture_name, const std::function<void(json&)>& edit) {
  json doc = json::parse(io::emit_model(fixture::load(fixture_name)));
  edit(doc);
  return doc.dump(2);
}

}  // namespace

TEST_SUITE("io") {

TEST_CASE("fixtures load and round trip") {
  for (const char* name : {"fourtask.json", "fourtask_eoc.json", "fourtask_wh.json",
                           "demo_plants.json", "empty.json", "waters_like.json"}) {
    CAPTURE(name);
    const auto m = fixture::load(name);
    const auto again = io::parse_model_text(io::emit_model(m));
    CHECK(again == m);
    CHECK(io::emit_model(again) == io::emit_model(m));
  }
  const auto four = fixture::load("fourtask.json");
  CHECK(four.design.taskset.tasks.size() == 4);
  CHECK(four.design.taskset.hyperperiod() == 30);
  CHECK(four.design.taskset.error_distance() == 30);
  CHECK(four.design.tick_seconds == 0.01);
  CHECK(four.config.has_value());
  CHECK(fixture::load("waters_like.json").design.taskset.tasks.size() == 9);
  CHECK(fixture::load("empty.json").design.taskset.tasks.empty());
}

TEST_CASE("default configuration") {
  auto m = fixture::load("fourtask.json");
  m.config.reset();
  const auto cfg = io::config_or_default(m);
  CHECK(cfg.priority == std::vector<int>{1, 2, 0, 3});
  CHECK(cfg.cpu == std::vector<std::size_t>{0, 0, 0, 0});
}

TEST_CASE("errors name what is wrong") {
  CHECK_THROWS_WITH_AS(io::parse_model_text(edited("fourtask.json", [](json& d) {
                         d["tasks"][1]["deadline"] = 9;
                       })),
                       doctest::Contains("task 'tau2'"), ModelError);
  CHECK_THROWS_WITH_AS(io::parse_model_text(edited("fourtask.json", [](json& d) {
                         d["tasks"][1]["priority"] = 1;
                       })),
                       doctest::Contains("collides"), ModelError);
  CHECK_THROWS_WITH_AS(io::parse_model_text(edited("fourtask_wh.json", [](json& d) {
                         d["tasks"][3]["control"]["plant"] = "boat";
                       })),
                       doctest::Contains("unknown plant 'boat'"), ModelError);
  CHECK_THROWS_WITH_AS(io::parse_model_text(edited("fourtask.json", [](json& d) {
                         d["tasks"][0].erase("period");
                       })),
                       doctest::Contains("missing field 'period'"), ModelError);
  CHECK_THROWS_WITH_AS(io::parse_model_text(edited("fourtask.json", [](json& d) {
                         d["tasks"][2]["detection"] = "tmr";
                       })),
                       doctest::Contains("('tau3').detection"), ModelError);
  CHECK_THROWS_WITH_AS(io::parse_model_text(edited("fourtask.json", [](json& d) {
                         d["tasks"][2]["cpu"] = "gpu";
                       })),
                       doctest::Contains("unknown CPU 'gpu'"), ModelError);
  CHECK_THROWS_WITH_AS(io::parse_model_text("{\n  \"tasks\": [\n  ,\n]\n}", "bad.json"),
                       doctest::Contains("bad.json:3"), ModelError);
  CHECK_THROWS_AS(io::parse_model("/nonexistent/model.json"), ModelError);
}

TEST_CASE("platform forms") {
  const auto m = io::parse_model_text(R"({"platform": {"cpus": 3}, "tasks": []})");
  CHECK(m.design.taskset.platform.cpus.size() == 3);
  CHECK_THROWS_AS(io::parse_model_text(R"({"platform": {"cpus": "x"}, "tasks": []})"), ModelError);
}

}

TEST_SUITE("synth") {

TEST_CASE("uunifast sums to the target") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto u = synth::uunifast(8, 0.7, seed);
    REQUIRE(u.size() == 8);
    double sum = 0.0;
    for (double v : u) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(0.7).epsilon(1e-12));
  }
  CHECK(synth::uunifast(3, 0.5, 4) == synth::uunifast(3, 0.5, 4));
}

TEST_CASE("generated task sets") {
  synth::SynthParams sp;
  sp.seed = 1;
  const auto m = synth::generate_synthetic(sp);
  const auto& ts = m.design.taskset;
  CHECK(ts.tasks.size() == 8);
  const double u = synth::total_utilization(ts);
  CHECK(u >= 0.65);
  CHECK(u <= 0.75);
  std::size_t control = 0;
  for (const auto& t : ts.tasks) {
    CHECK(t.wcet >= 1);
    CHECK(t.wcet <= t.deadline);
    if (t.control) {
      ++control;
      REQUIRE(t.constraints.size() == 1);
      CHECK(t.constraints[0].window == 10);
    } else {
      CHECK(t.constraints[0].misses <= 4);
      CHECK(t.constraints[0].window >= 10);
      CHECK(t.constraints[0].window <= 20);
    }
  }
  CHECK(control == 4);
  CHECK(synth::generate_synthetic(sp) == m);
  CHECK_NOTHROW(explore::validate(m.design));

  synth::SynthParams one;
  one.control_tasks = 0;
  one.other_tasks = 1;
  one.utilization = 1.0;
  const auto single = synth::generate_synthetic(one);
  CHECK(single.design.taskset.tasks[0].wcet == single.design.taskset.tasks[0].period);
}

TEST_CASE("demo plants are stable with every hit") {
  const auto plants = synth::demo_plants();
  CHECK(plants.size() == 4);
  for (const auto& p : plants) {
    const auto dp = control::discretize(p);
    CHECK(control::all_hit_cost(dp).has_value());
  }
}

}
