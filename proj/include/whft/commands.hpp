#pragma once

// Command implementations behind the CLI: analyze, simulate, optimize, sweep
// and generate. Each writes a CSV report whose first line names its schema.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "whft/explore.hpp"
#include "whft/io.hpp"
#include "whft/synth.hpp"

namespace whft::cli {

enum ExitCode : int { kOk = 0, kInfeasible = 1, kInputError = 2 };

struct Options {
  explore::Backend backend = explore::Backend::simulate;
  double threshold = 0.0;
  std::uint64_t seed = 1;
  double scale = 1.0;
  std::size_t jobs = 1;
  bool trace = false;
  coverage::Aggregation aggregation = coverage::Aggregation::average;
  explore::SaParams sa;
};

// WCETs multiplied by `factor`, rounded, at least one tick.
io::Model scale_wcet(io::Model model, double factor);

int run_analyze(const io::Model& model, const Options& opts, std::ostream& out);
// `trace` receives the scheduler trace when opts.trace is set.
int run_simulate(const io::Model& model, const Options& opts, std::ostream& out,
                 std::ostream* trace = nullptr);
// `optimized` receives the model with the chosen configuration applied.
int run_optimize(const io::Model& model, const Options& opts, std::ostream& out,
                 std::ostream* log = nullptr, io::Model* optimized = nullptr);

enum class SweepMode { coverage, cost, threshold };
SweepMode parse_sweep_mode(std::string_view text);
std::string_view to_string(SweepMode m);

struct SweepSpec {
  SweepMode mode = SweepMode::coverage;
  std::vector<double> utilizations{0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  std::vector<double> thresholds;  // cost mode falls back to Options::threshold
  std::size_t seeds = 1;
  synth::SynthParams synth;
  // Threshold mode runs on this model instead of synthetic sets when present.
  std::optional<io::Model> model;
};

struct SweepRow {
  std::string mode;
  double utilization = 0.0;
  double threshold = 0.0;
  std::uint64_t seed = 0;
  std::string variant;
  double coverage = 0.0;
  double system_cost = 0.0;
  bool feasible = false;
  std::size_t evaluations = 0;
  double runtime_ms = 0.0;
};

// Rows in cell order regardless of opts.jobs.
std::vector<SweepRow> run_sweep(const SweepSpec& spec, const Options& opts);
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);
int run_sweep(const SweepSpec& spec, const Options& opts, std::ostream& out);

// Exact cost and feasibility of a configuration under the simulation backend.
explore::Objective exact_objective(const explore::Design& design, const SystemConfig& cfg,
                                   double threshold,
                                   coverage::Aggregation agg = coverage::Aggregation::average);

// Every constraint replaced by a hard deadline.
TaskSet harden(TaskSet ts);

}  // namespace whft::cli
