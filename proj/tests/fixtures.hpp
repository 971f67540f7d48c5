#pragma once

#include <string>

#include "whft/io.hpp"

namespace fixture {

inline whft::io::Model load(const std::string& name) {
  return whft::io::parse_model(std::string(WHFT_FIXTURE_DIR) + "/" + name);
}

// Four tasks on one CPU: t1 (5), t2 (6), t3 (3), t4 (10), c = 1, implicit
// deadlines, deadline-monotonic priorities.
inline whft::io::Model fourtask(whft::Detection t4, whft::WeaklyHardConstraint z4 = {0, 1}) {
  auto m = load("fourtask.json");
  m.design.taskset.tasks[3].detection = t4;
  m.design.taskset.tasks[3].constraints = {z4};
  if (m.config) m.config->detection[3] = t4;
  return m;
}

}  // namespace fixture
