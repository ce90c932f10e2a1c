// Command-line front end for the optimizer toolkit.
//
//   sumo run --spec experiments.json [--output-dir out] [--seed 7]
//            [--workers 4] [--override optimizer.rank=4]... [--checkpoint]
//   sumo verify-bounds [--kappa 2 --kappa 10 ...] [--rank 2 ...] [--iters 1 ...]
//   sumo accounting --shape 1024x512 [--shape ...] [--rank 8] [--ns-iters 5]
//   sumo extract-adapter --pretrained w0.json --finetuned w1.json
//                        [--tolerance 0.01] [--out adapter/]
//
// Exit codes: 0 success, 1 config/validation error, 2 divergence or bound
// violation.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sumo/experiment_io.hpp"

namespace {

std::pair<std::int64_t, std::int64_t> parse_shape(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) {
    throw CLI::ValidationError("--shape", "expected MxN, got " + text);
  }
  return {std::stoll(text.substr(0, x)), std::stoll(text.substr(x + 1))};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subspace-aware moment-orthogonalization optimizer toolkit"};
  app.require_subcommand(1);

  sumo::RunOptions run_options;
  std::string run_output_dir;
  std::uint64_t run_seed = 0;
  auto* run = app.add_subcommand("run", "execute experiment specs and write CSV results");
  run->add_option("--spec", run_options.spec_file, "experiment spec file (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--output-dir", run_output_dir, "output directory (overrides the spec)");
  auto* seed_opt = run->add_option("--seed", run_seed, "replace the spec's seed list");
  run->add_option("--workers", run_options.workers, "worker pool size (0 = hardware)");
  run->add_option("--override", run_options.overrides,
                  "spec override, dotted path (repeatable): optimizer.rank=4");
  run->add_flag("--checkpoint", run_options.write_checkpoint,
                "write an optimizer checkpoint per run");

  sumo::VerifyBoundsOptions bounds_options;
  std::string bounds_output_dir = ".";
  auto* verify = app.add_subcommand("verify-bounds",
                                    "sweep measured orthogonalization error vs the bound");
  verify->add_option("--kappa", bounds_options.kappas, "Gram condition numbers (repeatable)");
  verify->add_option("--rank", bounds_options.ranks, "matrix row counts (repeatable)");
  verify->add_option("--iters", bounds_options.iterations, "iteration counts (repeatable)");
  verify->add_option("--seed", bounds_options.seed, "seed for the constructed matrices");
  verify->add_option("--output-dir", bounds_output_dir, "directory for bounds.csv");

  sumo::AccountingOptions accounting_options;
  std::vector<std::string> shape_args;
  std::string accounting_output_dir = ".";
  auto* accounting =
      app.add_subcommand("accounting", "optimizer-state memory and FLOP comparison tables");
  accounting->add_option("--shape", shape_args, "layer shape MxN with M >= N (repeatable)")
      ->required();
  accounting->add_option("--rank", accounting_options.rank, "projection rank");
  accounting->add_option("--ns-iters", accounting_options.ns_iterations,
                         "Newton-Schulz iteration count");
  accounting->add_option("--output-dir", accounting_output_dir, "directory for accounting.csv");

  sumo::ExtractAdapterOptions adapter_options;
  auto* adapter = app.add_subcommand("extract-adapter",
                                     "factor a fine-tuning delta into a low-rank adapter");
  adapter->add_option("--pretrained", adapter_options.pretrained, "pretrained weight matrix")
      ->required()
      ->check(CLI::ExistingFile);
  adapter->add_option("--finetuned", adapter_options.finetuned, "fine-tuned weight matrix")
      ->required()
      ->check(CLI::ExistingFile);
  adapter->add_option("--tolerance", adapter_options.tolerance,
                      "rank cutoff relative to the top singular value");
  adapter->add_option("--out", adapter_options.out_dir, "output directory for the bundle");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (!run_output_dir.empty()) run_options.output_dir = run_output_dir;
    if (seed_opt->count() > 0) run_options.seed = run_seed;
    return sumo::cmd_run(run_options, std::cerr);
  }
  if (verify->parsed()) {
    bounds_options.output_dir = bounds_output_dir;
    return sumo::cmd_verify_bounds(bounds_options, std::cerr);
  }
  if (accounting->parsed()) {
    try {
      for (const auto& text : shape_args) accounting_options.shapes.push_back(parse_shape(text));
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return sumo::kExitConfigError;
    }
    accounting_options.output_dir = accounting_output_dir;
    return sumo::cmd_accounting(accounting_options, std::cerr);
  }
  if (adapter->parsed()) {
    return sumo::cmd_extract_adapter(adapter_options, std::cerr);
  }
  return sumo::kExitConfigError;
}
