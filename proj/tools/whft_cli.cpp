#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "whft/commands.hpp"
#include "whft/control.hpp"
#include "whft/io.hpp"

using namespace whft;

namespace {

struct Sink {
  std::unique_ptr<std::ofstream> file;
  std::ostream* stream = &std::cout;

  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file = std::make_unique<std::ofstream>(path);
    if (!*file) throw ModelError("cannot write '" + path + "'");
    stream = file.get();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weakly-hard fault-tolerant task design: analysis, simulation, exploration"};
  app.require_subcommand(1);
  app.fallthrough();

  cli::Options opts;
  std::string backend = "sim";
  std::string out_path;
  std::string aggregation = "average";
  app.add_option("--backend", backend, "Schedulability backend")
      ->check(CLI::IsMember({"twca", "sim"}));
  app.add_option("--threshold", opts.threshold, "Error-coverage threshold")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--seed", opts.seed, "Random seed");
  app.add_option("--scale", opts.scale, "WCET scale factor")->check(CLI::PositiveNumber);
  app.add_option("--out", out_path, "Output file (default: stdout)");
  app.add_option("--jobs", opts.jobs, "Parallel workers for sweeps")->check(CLI::PositiveNumber);
  app.add_flag("--trace", opts.trace, "Dump the scheduler trace");
  app.add_option("--aggregation", aggregation, "Multi-CPU coverage aggregation")
      ->check(CLI::IsMember({"average", "global"}));
  app.add_option("--t0", opts.sa.initial_temperature, "Initial annealing temperature");
  app.add_option("--tstop", opts.sa.stop_temperature, "Stop temperature");
  app.add_option("--cooling", opts.sa.cooling_factor, "Cooling factor");
  app.add_option("--iterations", opts.sa.iterations_per_temperature, "Moves per temperature");

  std::string model_path;
  auto* analyze = app.add_subcommand("analyze", "Typical worst-case analysis report");
  analyze->add_option("model", model_path, "Model file")->required();
  auto* simulate = app.add_subcommand("simulate", "Simulate every single-error scenario");
  simulate->add_option("model", model_path, "Model file")->required();
  auto* optimize = app.add_subcommand("optimize", "Simulated-annealing design exploration");
  optimize->add_option("model", model_path, "Model file")->required();
  std::string emit_path;
  optimize->add_option("--emit-model", emit_path, "Write the optimized model here");

  cli::SweepSpec sweep_spec;
  std::string mode = "coverage";
  auto* sweep = app.add_subcommand("sweep", "Experiment sweeps over synthetic task sets");
  sweep->add_option("--mode", mode, "coverage | cost | threshold")
      ->check(CLI::IsMember({"coverage", "cost", "threshold"}));
  sweep->add_option("--utilizations", sweep_spec.utilizations, "Utilization list");
  sweep->add_option("--thresholds", sweep_spec.thresholds, "Threshold list");
  sweep->add_option("--seeds", sweep_spec.seeds, "Task sets per cell");
  sweep->add_option("--model", model_path, "Model for threshold sweeps");
  sweep->add_option("--control-tasks", sweep_spec.synth.control_tasks, "Control tasks per set");
  sweep->add_option("--other-tasks", sweep_spec.synth.other_tasks, "Other tasks per set");
  sweep->add_option("--cpus", sweep_spec.synth.cpus, "CPUs per set");
  sweep->add_option("--tolerance", sweep_spec.synth.tolerance, "Allowed utilization error per set")
      ->check(CLI::PositiveNumber);

  synth::SynthParams gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic model");
  generate->add_option("--control-tasks", gen.control_tasks, "Control tasks");
  generate->add_option("--other-tasks", gen.other_tasks, "Other tasks");
  generate->add_option("--utilization", gen.utilization, "Target utilization")
      ->check(CLI::Range(0.0, 1.0));
  generate->add_option("--cpus", gen.cpus, "CPUs");
  generate->add_option("--tolerance", gen.tolerance, "Allowed utilization error")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kOk : cli::kInputError;
  }

  try {
    opts.backend = explore::parse_backend(backend);
    opts.aggregation = aggregation == "global" ? coverage::Aggregation::global_sum
                                               : coverage::Aggregation::average;
    explore::validate(opts.sa);
    Sink out(out_path);

    if (*generate) {
      gen.seed = opts.seed;
      io::Model model = cli::scale_wcet(synth::generate_synthetic(gen), opts.scale);
      *out.stream << io::emit_model(model);
      return cli::kOk;
    }
    if (*sweep) {
      sweep_spec.mode = cli::parse_sweep_mode(mode);
      if (!model_path.empty()) {
        sweep_spec.model = cli::scale_wcet(io::parse_model(model_path), opts.scale);
      }
      return cli::run_sweep(sweep_spec, opts, *out.stream);
    }

    const io::Model model = cli::scale_wcet(io::parse_model(model_path), opts.scale);
    if (*analyze) return cli::run_analyze(model, opts, *out.stream);
    if (*simulate) {
      std::unique_ptr<Sink> trace;
      if (opts.trace) trace = std::make_unique<Sink>(out_path.empty() ? "" : out_path + ".trace.csv");
      std::ostringstream buffered;
      const int rc = cli::run_simulate(model, opts, *out.stream, trace ? &buffered : nullptr);
      if (trace) *trace->stream << buffered.str();
      return rc;
    }
    io::Model optimized;
    const int rc = cli::run_optimize(model, opts, *out.stream, &std::cerr, &optimized);
    if (!emit_path.empty()) io::write_model(optimized, emit_path);
    return rc;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kInputError;
  } catch (const control::ControlError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kInputError;
  }
}
