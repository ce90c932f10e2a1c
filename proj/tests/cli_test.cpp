#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sumo/checkpoint.hpp"
#include "sumo/experiment_io.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) : path(fs::temp_directory_path() / tag) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

const char* kQuadraticSpec = R"JSON({
  "name": "quad-cli",
  "model": {"kind": "linear", "init_scale": 0.5},
  "data": {"kind": "ill_conditioned_quadratic", "rows": 8, "cols": 6,
           "spectrum_min": 1.0, "spectrum_max": 10.0, "seed": 3},
  "optimizer": {"algorithm": "gd", "learning_rate": 0.15, "rank": 4,
                "subspace_update_every": 50},
  "step_budget": 2000,
  "grad_tolerance": 0.001,
  "seeds": [1, 2, 3],
  "output_dir": "PLACEHOLDER"
})JSON";

std::string spec_with_output(const std::string& body, const fs::path& out) {
  std::string text = body;
  const auto pos = text.find("PLACEHOLDER");
  REQUIRE(pos != std::string::npos);
  return text.replace(pos, std::string("PLACEHOLDER").size(), out.string());
}

fs::path write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file);
  out << text;
  return file;
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file);
  REQUIRE(in.good());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::size_t count_lines(const std::string& text) {
  std::size_t lines = 0;
  for (const char c : text) lines += c == '\n';
  return lines;
}

}  // namespace

TEST_CASE("spec round-trips through serialization") {
  TempDir dir("sumo_cli_roundtrip");
  const auto spec_file =
      write_text(dir.path / "spec.json", spec_with_output(kQuadraticSpec, dir.path / "out"));
  const auto specs = sumo::load_experiment_specs(spec_file);
  REQUIRE(specs.size() == 1);

  const auto reparsed = sumo::parse_spec_text(sumo::serialize_spec(specs[0]));
  CHECK(reparsed.name == specs[0].name);
  CHECK(reparsed.model.kind == specs[0].model.kind);
  CHECK(reparsed.model.init_scale == specs[0].model.init_scale);
  CHECK(reparsed.data.kind == specs[0].data.kind);
  CHECK(reparsed.data.rows == specs[0].data.rows);
  CHECK(reparsed.data.spectrum_max == specs[0].data.spectrum_max);
  CHECK(reparsed.data.seed == specs[0].data.seed);
  CHECK(reparsed.algorithm == specs[0].algorithm);
  CHECK(reparsed.optimizer.learning_rate == specs[0].optimizer.learning_rate);
  CHECK(reparsed.optimizer.rank == specs[0].optimizer.rank);
  CHECK(reparsed.optimizer.subspace_update_every == specs[0].optimizer.subspace_update_every);
  CHECK(reparsed.step_budget == specs[0].step_budget);
  CHECK(reparsed.grad_tolerance == specs[0].grad_tolerance);
  CHECK(reparsed.seeds == specs[0].seeds);
  CHECK(reparsed.output_dir == specs[0].output_dir);

  SUBCASE("unknown fields are named in the diagnostic") {
    const auto bad = write_text(dir.path / "bad.json",
                                R"({"name":"x","data":{"kind":"linear_regression","rows":2,
                                    "cols":2,"samples":4},"stepbudget":3})");
    CHECK_THROWS_WITH_AS(sumo::load_experiment_specs(bad), doctest::Contains("stepbudget"),
                         std::invalid_argument);
  }
}

TEST_CASE("cmd_run writes one row per (spec, seed) and exits 0 when all converge") {
  TempDir dir("sumo_cli_run");
  const auto spec_file =
      write_text(dir.path / "spec.json", spec_with_output(kQuadraticSpec, dir.path / "out"));

  sumo::RunOptions options;
  options.spec_file = spec_file;
  options.workers = 2;
  std::ostringstream diag;
  CHECK(sumo::cmd_run(options, diag) == sumo::kExitOk);

  const std::string results = read_text(dir.path / "out" / "results.csv");
  CHECK(count_lines(results) == 4);  // header + 3 seeds
  CHECK(results.find("quad-cli,1,gd,exact_svd,4,") != std::string::npos);
  for (const int seed : {1, 2, 3}) {
    CHECK(fs::exists(dir.path / "out" / "runs" /
                     ("quad-cli-s" + std::to_string(seed)) / "trace.csv"));
  }
}

TEST_CASE("cmd_run rejects an invalid rank with a config-error exit") {
  TempDir dir("sumo_cli_badrank");
  const auto spec_file =
      write_text(dir.path / "spec.json", spec_with_output(kQuadraticSpec, dir.path / "out"));
  sumo::RunOptions options;
  options.spec_file = spec_file;
  options.overrides = {"optimizer.rank=7"};  // exceeds min(8, 6)
  std::ostringstream diag;
  CHECK(sumo::cmd_run(options, diag) == sumo::kExitConfigError);
  CHECK(diag.str().find("rank") != std::string::npos);
}

TEST_CASE("cmd_run reflects an orthogonalizer override in the label column") {
  TempDir dir("sumo_cli_override");
  const auto spec_file =
      write_text(dir.path / "spec.json", spec_with_output(kQuadraticSpec, dir.path / "out"));
  sumo::RunOptions options;
  options.spec_file = spec_file;
  options.overrides = {"optimizer.orthogonalizer=newton_schulz5", "optimizer.algorithm=sumo",
                       "optimizer.learning_rate=0.002", "step_budget=50",
                       "grad_tolerance=1e-9"};
  options.seed = 1;
  std::ostringstream diag;
  CHECK(sumo::cmd_run(options, diag) == sumo::kExitOk);
  const std::string results = read_text(dir.path / "out" / "results.csv");
  CHECK(results.find("sumo,newton_schulz_classic5") != std::string::npos);
}

TEST_CASE("cmd_run writes a loadable checkpoint when asked") {
  TempDir dir("sumo_cli_checkpoint");
  const auto spec_file =
      write_text(dir.path / "spec.json", spec_with_output(kQuadraticSpec, dir.path / "out"));
  sumo::RunOptions options;
  options.spec_file = spec_file;
  options.seed = 2;
  options.write_checkpoint = true;
  options.overrides = {"step_budget=40", "grad_tolerance=1e-12"};
  std::ostringstream diag;
  CHECK(sumo::cmd_run(options, diag) == sumo::kExitOk);

  const auto file = dir.path / "out" / "runs" / "quad-cli-s2" / "checkpoint.json";
  REQUIRE(fs::exists(file));
  const auto checkpoint = sumo::load_checkpoint(file);
  REQUIRE(checkpoint.layers.size() == 1);
  CHECK(checkpoint.layers[0].step == 40);
  CHECK(checkpoint.layers[0].weight.rows() == 8);
}

TEST_CASE("cmd_run surfaces the unused-second-moment warning") {
  TempDir dir("sumo_cli_warn");
  const auto spec_file =
      write_text(dir.path / "spec.json", spec_with_output(kQuadraticSpec, dir.path / "out"));
  sumo::RunOptions options;
  options.spec_file = spec_file;
  options.seed = 1;
  options.overrides = {"optimizer.moment_decay2=0.999", "step_budget=5", "grad_tolerance=1e-12"};
  std::ostringstream diag;
  CHECK(sumo::cmd_run(options, diag) == sumo::kExitOk);
  CHECK(diag.str().find("warning") != std::string::npos);
  CHECK(diag.str().find("first-moment-only") != std::string::npos);
}

TEST_CASE("csv numbers round-trip exactly through their decimal form") {
  for (const double v : {0.1, 1.0 / 3.0, 2.718281828459045e-12, 6.626e33, -0.0,
                         std::numeric_limits<double>::infinity()}) {
    const std::string text = sumo::format_double(v);
    const double parsed = std::strtod(text.c_str(), nullptr);
    CHECK(parsed == v);
  }
}

TEST_CASE("cmd_run flags divergence with exit code 2 and a results row") {
  TempDir dir("sumo_cli_diverge");
  std::string text = spec_with_output(kQuadraticSpec, dir.path / "out");
  const auto spec_file = write_text(dir.path / "spec.json", text);
  sumo::RunOptions options;
  options.spec_file = spec_file;
  options.overrides = {"optimizer.learning_rate=0.5", "step_budget=4000"};
  std::ostringstream diag;
  CHECK(sumo::cmd_run(options, diag) == sumo::kExitRuntimeFailure);
  const std::string results = read_text(dir.path / "out" / "results.csv");
  CHECK(count_lines(results) == 4);  // divergence keeps its row
  CHECK(results.find(",1\n") != std::string::npos);
}

TEST_CASE("cmd_verify_bounds") {
  TempDir dir("sumo_cli_bounds");
  SUBCASE("defaults pass end to end") {
    sumo::VerifyBoundsOptions options;
    options.output_dir = dir.path;
    std::ostringstream diag;
    CHECK(sumo::cmd_verify_bounds(options, diag) == sumo::kExitOk);
    const std::string bounds = read_text(dir.path / "bounds.csv");
    CHECK(count_lines(bounds) == 1 + 3 * 3 * 6);
    CHECK(bounds.find(",0\n") == std::string::npos);  // no failing cell
  }
  SUBCASE("the remark cell at kappa 100, rank 1, five iterations") {
    sumo::VerifyBoundsOptions options;
    options.kappas = {1.0, 100.0};
    options.ranks = {1};
    options.iterations = {5};
    options.output_dir = dir.path;
    std::ostringstream diag;
    CHECK(sumo::cmd_verify_bounds(options, diag) == sumo::kExitOk);
    const std::string bounds = read_text(dir.path / "bounds.csv");
    CHECK(bounds.find("100,1,5,") != std::string::npos);
    CHECK(bounds.find(",0.72498") != std::string::npos);
    CHECK(bounds.find("1,1,5,") != std::string::npos);  // kappa = 1 row, bound 0
  }
  SUBCASE("invalid kappa is a config error") {
    sumo::VerifyBoundsOptions options;
    options.kappas = {0.5};
    options.output_dir = dir.path;
    std::ostringstream diag;
    CHECK(sumo::cmd_verify_bounds(options, diag) == sumo::kExitConfigError);
  }
}

TEST_CASE("cmd_accounting reproduces the memory and flop columns") {
  TempDir dir("sumo_cli_accounting");
  sumo::AccountingOptions options;
  options.shapes = {{1024, 512}, {1024, 8}, {4096, 128}};
  options.rank = 8;
  options.output_dir = dir.path;
  std::ostringstream diag;
  CHECK(sumo::cmd_accounting(options, diag) == sumo::kExitOk);
  const std::string table = read_text(dir.path / "accounting.csv");
  CHECK(count_lines(table) == 4);
  // (1024, 512, 8): memory nr + mr = 12288; Adam 2mn.
  CHECK(table.find("1024,512,8,12288,1048576,") != std::string::npos);
  // (1024, 8): the FLOP columns evaluate at (long, short) = (1024, 8).
  CHECK(table.find(",8720384,266240,141952\n") != std::string::npos);

  options.shapes = {{8, 1024}};
  CHECK(sumo::cmd_accounting(options, diag) == sumo::kExitConfigError);
}

TEST_CASE("cmd_extract_adapter writes the bundle files") {
  TempDir dir("sumo_cli_adapter");
  sumo::GaussianStream rng(701);
  const sumo::Matrix pretrained = rng.matrix(6, 5);
  const sumo::Matrix delta = rng.matrix(6, 2) * rng.matrix(2, 5);
  sumo::save_matrix(pretrained, dir.path / "w0.json");
  sumo::save_matrix(pretrained + delta, dir.path / "w1.json");

  sumo::ExtractAdapterOptions options;
  options.pretrained = dir.path / "w0.json";
  options.finetuned = dir.path / "w1.json";
  options.tolerance = 1e-6;
  options.out_dir = dir.path / "adapter";
  std::ostringstream diag;
  CHECK(sumo::cmd_extract_adapter(options, diag) == sumo::kExitOk);

  const sumo::Matrix a = sumo::load_matrix(dir.path / "adapter" / "a.json");
  const sumo::Matrix b = sumo::load_matrix(dir.path / "adapter" / "b.json");
  CHECK(a.cols() == 2);
  CHECK((a * b - delta).norm() <= 1e-8);
  CHECK(read_text(dir.path / "adapter" / "metadata.json").find("\"rank\": 2") !=
        std::string::npos);

  SUBCASE("shape mismatch exits with a config error") {
    sumo::save_matrix(rng.matrix(3, 3), dir.path / "w2.json");
    options.finetuned = dir.path / "w2.json";
    CHECK(sumo::cmd_extract_adapter(options, diag) == sumo::kExitConfigError);
  }
}
