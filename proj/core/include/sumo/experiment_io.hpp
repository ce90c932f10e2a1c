#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "sumo/harness.hpp"

namespace sumo {

/// Wire-level exit codes of every command: 0 success, 1 config/validation
/// error, 2 runtime divergence or bound violation.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 1;
inline constexpr int kExitRuntimeFailure = 2;

/// Parses a spec file (one JSON object or an array of them) and applies
/// dotted-path overrides such as "optimizer.orthogonalizer=newton_schulz5".
/// Throws std::invalid_argument naming the offending field.
std::vector<ExperimentSpec> load_experiment_specs(const std::filesystem::path& file,
                                                  const std::vector<std::string>& overrides = {});

/// Canonical JSON text of a spec; parse -> serialize -> parse is identity.
std::string serialize_spec(const ExperimentSpec& spec);
ExperimentSpec parse_spec_text(const std::string& text);

/// One row of results.csv: a single (spec, seed) run. Wall time is kept in a
/// separate sidecar so results.csv stays byte-deterministic.
struct ResultRow {
  std::string spec_name;
  std::uint64_t seed = 0;
  std::string optimizer_label;
  std::string orthogonalizer_label;
  int rank = 0;
  double final_loss = 0.0;
  std::optional<int> steps_to_grad_tol;
  bool diverged = false;
  std::int64_t wall_time_ms = 0;
};

void write_results_csv(const std::filesystem::path& file, const std::vector<ResultRow>& rows);
void write_timings_csv(const std::filesystem::path& file, const std::vector<ResultRow>& rows);
void write_trace_csv(const std::filesystem::path& file, const SpectralTrace& trace);

struct RunOptions {
  std::filesystem::path spec_file;
  std::vector<std::string> overrides;
  std::optional<std::filesystem::path> output_dir;  // overrides every spec's output_dir
  std::optional<std::uint64_t> seed;                // replaces every spec's seed list
  int workers = 0;                                  // 0 = hardware concurrency
  bool write_checkpoint = false;
};

/// Runs every (spec, seed) pair on a bounded worker pool; writes results.csv,
/// timings.csv and one trace.csv per run under the output directory.
int cmd_run(const RunOptions& options, std::ostream& diag);

struct VerifyBoundsOptions {
  std::vector<double> kappas{2.0, 10.0, 100.0};
  std::vector<int> ranks{2, 4, 8};
  std::vector<int> iterations{1, 2, 3, 4, 5, 6};
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = ".";
};

/// Constructs matrices with prescribed Gram condition numbers and sweeps the
/// measured orthogonalization error against the closed-form bound; writes
/// bounds.csv and fails (exit 2) when any cell violates the bound.
int cmd_verify_bounds(const VerifyBoundsOptions& options, std::ostream& diag);

struct AccountingOptions {
  std::vector<std::pair<std::int64_t, std::int64_t>> shapes;  // (m, n), m >= n
  std::int64_t rank = 8;
  std::int64_t ns_iterations = 5;
  std::filesystem::path output_dir = ".";
};

/// Writes accounting.csv with the optimizer-state memory formulas and the
/// FLOP model of the SVD versus Newton-Schulz orthogonalization routes.
int cmd_accounting(const AccountingOptions& options, std::ostream& diag);

struct ExtractAdapterOptions {
  std::filesystem::path pretrained;
  std::filesystem::path finetuned;
  double tolerance = 1e-2;
  std::filesystem::path out_dir = "adapter";
};

int cmd_extract_adapter(const ExtractAdapterOptions& options, std::ostream& diag);

}  // namespace sumo
