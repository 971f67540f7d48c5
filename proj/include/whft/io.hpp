#pragma once

// JSON model files: platform, fault model, tasks (optionally with an explicit
// allocation and priority) and plants.

#include <filesystem>
#include <optional>
#include <string>

#include "whft/explore.hpp"

namespace whft::io {

struct Model {
  explore::Design design;
  // Present when every task carries a priority.
  std::optional<SystemConfig> config;

  bool operator==(const Model&) const = default;
};

// Throws ModelError with the offending JSON path or line.
Model parse_model_text(const std::string& text, const std::string& source = "<input>");
Model parse_model(const std::filesystem::path& path);

std::string emit_model(const Model& model);
void write_model(const Model& model, const std::filesystem::path& path);

// Allocation/priorities from the file, or first-fit decreasing with
// deadline-monotonic priorities on the tasks' own detection choices.
SystemConfig config_or_default(const Model& model);

}  // namespace whft::io
