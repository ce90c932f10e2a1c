#include "sumo/experiment_io.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <functional>
#include <set>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "json_util.hpp"
#include "sumo/adapter.hpp"
#include "sumo/checkpoint.hpp"
#include "sumo/diagnostics.hpp"
#include "sumo/linalg.hpp"

namespace sumo {

namespace detail {

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const std::string& context) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) {
      throw std::invalid_argument(context + ": unknown field \"" + key + "\"");
    }
  }
}

std::string orthogonalizer_to_string(const OptimizerConfig& cfg) {
  if (cfg.orthogonalizer == Orthogonalizer::ExactSvd) return "exact_svd";
  return cfg.ns_variant.kind == NewtonSchulzKind::Classic ? "newton_schulz_classic"
                                                          : "newton_schulz_quintic";
}

void orthogonalizer_from_string(OptimizerConfig& cfg, const std::string& s) {
  if (s == "exact_svd" || s == "svd") {
    cfg.orthogonalizer = Orthogonalizer::ExactSvd;
  } else if (s == "newton_schulz_classic" || s == "newton_schulz" || s == "newton_schulz5") {
    cfg.orthogonalizer = Orthogonalizer::NewtonSchulz;
    cfg.ns_variant.kind = NewtonSchulzKind::Classic;
    if (s == "newton_schulz5") cfg.ns_variant.iterations = 5;
  } else if (s == "newton_schulz_quintic" || s == "muon_quintic") {
    cfg.orthogonalizer = Orthogonalizer::NewtonSchulz;
    cfg.ns_variant.kind = NewtonSchulzKind::MuonQuintic;
  } else {
    throw std::invalid_argument("optimizer.orthogonalizer: unknown value \"" + s + "\"");
  }
}

}  // namespace

std::string algorithm_to_string(Algorithm a) { return algorithm_label(a); }

Algorithm algorithm_from_string(const std::string& s) {
  if (s == "sumo") return Algorithm::Sumo;
  if (s == "muon") return Algorithm::Muon;
  if (s == "lowrank_momentum") return Algorithm::LowRankMomentum;
  if (s == "gd") return Algorithm::Gd;
  throw std::invalid_argument("optimizer.algorithm: unknown value \"" + s + "\"");
}

nlohmann::json config_to_json(const OptimizerConfig& cfg) {
  nlohmann::json j;
  j["learning_rate"] = cfg.learning_rate;
  j["scale_factor"] = cfg.scale_factor;
  j["moment_decay"] = cfg.moment_decay;
  if (cfg.moment_decay2.has_value()) j["moment_decay2"] = *cfg.moment_decay2;
  j["weight_decay"] = cfg.weight_decay;
  j["rank"] = cfg.rank;
  j["subspace_update_every"] = cfg.subspace_update_every;
  j["limiter_enabled"] = cfg.limiter_enabled;
  j["limiter_gamma"] = cfg.limiter_gamma;
  j["orthogonalizer"] = orthogonalizer_to_string(cfg);
  j["ns_iterations"] = cfg.ns_variant.iterations;
  j["projector"] = cfg.projector == Projector::TruncatedSvd ? "truncated_svd" : "randomized_svd";
  j["oversampling"] = cfg.oversampling;
  j["power_iterations"] = cfg.power_iterations;
  j["rms_scaling"] = cfg.rms_scaling;
  j["convex_combination_moment"] = cfg.convex_combination_moment;
  j["refresh_criterion"] = cfg.refresh_criterion == RefreshCriterion::EveryK
                               ? "every_k"
                               : "projected_grad_norm_below";
  j["refresh_grad_threshold"] = cfg.refresh_grad_threshold;
  j["seed"] = cfg.seed;
  return j;
}

OptimizerConfig config_from_json(const nlohmann::json& j) {
  check_keys(j,
             {"algorithm", "learning_rate", "scale_factor", "moment_decay", "moment_decay2",
              "weight_decay", "rank", "subspace_update_every", "limiter_enabled", "limiter_gamma",
              "orthogonalizer", "ns_iterations", "projector", "oversampling", "power_iterations",
              "rms_scaling", "convex_combination_moment", "refresh_criterion",
              "refresh_grad_threshold", "seed"},
             "optimizer");
  OptimizerConfig cfg;
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.scale_factor = j.value("scale_factor", cfg.scale_factor);
  cfg.moment_decay = j.value("moment_decay", cfg.moment_decay);
  if (j.contains("moment_decay2") && !j.at("moment_decay2").is_null()) {
    cfg.moment_decay2 = j.at("moment_decay2").get<double>();
  }
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.rank = j.value("rank", cfg.rank);
  cfg.subspace_update_every = j.value("subspace_update_every", cfg.subspace_update_every);
  cfg.limiter_enabled = j.value("limiter_enabled", cfg.limiter_enabled);
  cfg.limiter_gamma = j.value("limiter_gamma", cfg.limiter_gamma);
  if (j.contains("ns_iterations")) cfg.ns_variant.iterations = j.at("ns_iterations").get<int>();
  if (j.contains("orthogonalizer")) {
    // Order matters: an explicit ns_iterations wins over the "5" in an alias.
    const int explicit_iters = cfg.ns_variant.iterations;
    orthogonalizer_from_string(cfg, j.at("orthogonalizer").get<std::string>());
    if (j.contains("ns_iterations")) cfg.ns_variant.iterations = explicit_iters;
  }
  if (j.contains("projector")) {
    const auto p = j.at("projector").get<std::string>();
    if (p == "truncated_svd") {
      cfg.projector = Projector::TruncatedSvd;
    } else if (p == "randomized_svd") {
      cfg.projector = Projector::RandomizedSvd;
    } else {
      throw std::invalid_argument("optimizer.projector: unknown value \"" + p + "\"");
    }
  }
  cfg.oversampling = j.value("oversampling", cfg.oversampling);
  cfg.power_iterations = j.value("power_iterations", cfg.power_iterations);
  cfg.rms_scaling = j.value("rms_scaling", cfg.rms_scaling);
  cfg.convex_combination_moment =
      j.value("convex_combination_moment", cfg.convex_combination_moment);
  if (j.contains("refresh_criterion")) {
    const auto c = j.at("refresh_criterion").get<std::string>();
    if (c == "every_k") {
      cfg.refresh_criterion = RefreshCriterion::EveryK;
    } else if (c == "projected_grad_norm_below") {
      cfg.refresh_criterion = RefreshCriterion::ProjectedGradNormBelow;
    } else {
      throw std::invalid_argument("optimizer.refresh_criterion: unknown value \"" + c + "\"");
    }
  }
  cfg.refresh_grad_threshold = j.value("refresh_grad_threshold", cfg.refresh_grad_threshold);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

nlohmann::json spec_to_json(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["name"] = spec.name;

  nlohmann::json model;
  model["kind"] = spec.model.kind == ModelDescriptor::Kind::Linear ? "linear" : "mlp";
  model["hidden"] = spec.model.hidden;
  model["init_scale"] = spec.model.init_scale;
  j["model"] = model;

  nlohmann::json data;
  switch (spec.data.kind) {
    case DataGenerator::Kind::LinearRegression:
      data["kind"] = "linear_regression";
      data["rows"] = spec.data.rows;
      data["cols"] = spec.data.cols;
      data["samples"] = spec.data.samples;
      data["noise_sigma"] = spec.data.noise_sigma;
      break;
    case DataGenerator::Kind::IllConditionedQuadratic:
      data["kind"] = "ill_conditioned_quadratic";
      data["rows"] = spec.data.rows;
      data["cols"] = spec.data.cols;
      data["spectrum_min"] = spec.data.spectrum_min;
      data["spectrum_max"] = spec.data.spectrum_max;
      break;
    case DataGenerator::Kind::SyntheticClassification:
      data["kind"] = "synthetic_classification";
      data["dims"] = spec.data.dims;
      data["classes"] = spec.data.classes;
      data["samples"] = spec.data.samples;
      break;
  }
  data["seed"] = spec.data.seed;
  j["data"] = data;

  nlohmann::json opt = config_to_json(spec.optimizer);
  opt["algorithm"] = algorithm_to_string(spec.algorithm);
  j["optimizer"] = opt;

  j["step_budget"] = spec.step_budget;
  j["grad_tolerance"] = spec.grad_tolerance;
  j["batch_size"] = spec.batch_size;
  j["seeds"] = spec.seeds;
  j["output_dir"] = spec.output_dir;
  return j;
}

ExperimentSpec spec_from_json(const nlohmann::json& j) {
  check_keys(j,
             {"name", "model", "data", "optimizer", "step_budget", "grad_tolerance", "batch_size",
              "seeds", "output_dir"},
             "spec");
  ExperimentSpec spec;
  spec.name = j.value("name", std::string{});

  if (j.contains("model")) {
    const auto& model = j.at("model");
    check_keys(model, {"kind", "hidden", "init_scale"}, "model");
    const auto kind = model.value("kind", std::string("linear"));
    if (kind == "linear") {
      spec.model.kind = ModelDescriptor::Kind::Linear;
    } else if (kind == "mlp") {
      spec.model.kind = ModelDescriptor::Kind::Mlp;
    } else {
      throw std::invalid_argument("model.kind: unknown value \"" + kind + "\"");
    }
    spec.model.hidden = model.value("hidden", spec.model.hidden);
    spec.model.init_scale = model.value("init_scale", spec.model.init_scale);
  }

  if (!j.contains("data")) throw std::invalid_argument("spec.data: missing");
  {
    const auto& data = j.at("data");
    check_keys(data,
               {"kind", "rows", "cols", "samples", "noise_sigma", "spectrum_min", "spectrum_max",
                "dims", "classes", "seed"},
               "data");
    const auto kind = data.value("kind", std::string{});
    if (kind == "linear_regression") {
      spec.data.kind = DataGenerator::Kind::LinearRegression;
    } else if (kind == "ill_conditioned_quadratic") {
      spec.data.kind = DataGenerator::Kind::IllConditionedQuadratic;
    } else if (kind == "synthetic_classification") {
      spec.data.kind = DataGenerator::Kind::SyntheticClassification;
    } else {
      throw std::invalid_argument("data.kind: unknown value \"" + kind + "\"");
    }
    spec.data.rows = data.value("rows", spec.data.rows);
    spec.data.cols = data.value("cols", spec.data.cols);
    spec.data.samples = data.value("samples", spec.data.samples);
    spec.data.noise_sigma = data.value("noise_sigma", spec.data.noise_sigma);
    spec.data.spectrum_min = data.value("spectrum_min", spec.data.spectrum_min);
    spec.data.spectrum_max = data.value("spectrum_max", spec.data.spectrum_max);
    spec.data.dims = data.value("dims", spec.data.dims);
    spec.data.classes = data.value("classes", spec.data.classes);
    spec.data.seed = data.value("seed", spec.data.seed);
  }

  if (j.contains("optimizer")) {
    const auto& opt = j.at("optimizer");
    spec.optimizer = config_from_json(opt);
    if (opt.contains("algorithm")) {
      spec.algorithm = algorithm_from_string(opt.at("algorithm").get<std::string>());
    }
  }

  spec.step_budget = j.value("step_budget", spec.step_budget);
  spec.grad_tolerance = j.value("grad_tolerance", spec.grad_tolerance);
  spec.batch_size = j.value("batch_size", spec.batch_size);
  if (j.contains("seeds")) spec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  spec.output_dir = j.value("output_dir", spec.output_dir);
  return spec;
}

}  // namespace detail

namespace {

void apply_override(nlohmann::json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override must look like path.to.field=value: " + assignment);
  }
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);

  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;  // bare words become strings

  nlohmann::json* node = &j;
  std::size_t begin = 0;
  while (true) {
    const auto dot = path.find('.', begin);
    const std::string key = path.substr(begin, dot == std::string::npos ? dot : dot - begin);
    if (key.empty()) throw std::invalid_argument("override path has an empty segment: " + path);
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    begin = dot + 1;
  }
}

std::string csv_int_or_empty(const std::optional<int>& v) {
  return v.has_value() ? std::to_string(*v) : std::string{};
}

/// Runs jobs on a bounded pool; results land in job order, so output is
/// independent of scheduling.
template <typename Job>
std::vector<std::string> run_pool(int workers, std::vector<Job>& jobs) {
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        jobs[i]();
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (workers <= 0) {
    workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  }
  workers = std::min<int>(workers, static_cast<int>(jobs.size()));
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(std::max(workers, 1)));
  for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return errors;
}

}  // namespace

std::vector<ExperimentSpec> load_experiment_specs(const std::filesystem::path& file,
                                                  const std::vector<std::string>& overrides) {
  std::ifstream in(file);
  if (!in) throw std::invalid_argument("cannot open spec file: " + file.string());
  nlohmann::json j = nlohmann::json::parse(in);
  nlohmann::json list = j.is_array() ? j : nlohmann::json::array({j});

  std::vector<ExperimentSpec> specs;
  for (auto& entry : list) {
    for (const auto& override_kv : overrides) apply_override(entry, override_kv);
    specs.push_back(detail::spec_from_json(entry));
  }

  std::set<std::string> names;
  for (const auto& spec : specs) {
    if (!names.insert(spec.name).second) {
      throw std::invalid_argument("spec.name: duplicate name \"" + spec.name + "\"");
    }
  }
  return specs;
}

std::string serialize_spec(const ExperimentSpec& spec) {
  return detail::spec_to_json(spec).dump(2);
}

ExperimentSpec parse_spec_text(const std::string& text) {
  return detail::spec_from_json(nlohmann::json::parse(text));
}

void write_results_csv(const std::filesystem::path& file, const std::vector<ResultRow>& rows) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "spec,seed,optimizer,orthogonalizer,rank,final_loss,steps_to_grad_tol,diverged\n";
  for (const auto& r : rows) {
    out << r.spec_name << ',' << r.seed << ',' << r.optimizer_label << ','
        << r.orthogonalizer_label << ',' << r.rank << ',' << format_double(r.final_loss) << ','
        << csv_int_or_empty(r.steps_to_grad_tol) << ',' << (r.diverged ? 1 : 0) << '\n';
  }
}

void write_timings_csv(const std::filesystem::path& file, const std::vector<ResultRow>& rows) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "spec,seed,wall_time_ms\n";
  for (const auto& r : rows) {
    out << r.spec_name << ',' << r.seed << ',' << r.wall_time_ms << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& file, const SpectralTrace& trace) {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "step,kappa_m,condition_number,ns_error,ns_bound,loss,loss_finite,grad_norm\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << trace.steps[i] << ',' << format_double(trace.kappa_m[i]) << ','
        << format_double(trace.condition_numbers[i]) << ','
        << (trace.ns_errors[i] ? format_double(*trace.ns_errors[i]) : std::string{}) << ','
        << (trace.ns_bounds[i] ? format_double(*trace.ns_bounds[i]) : std::string{}) << ','
        << format_double(trace.losses[i]) << ',' << (trace.loss_finite[i] ? 1 : 0) << ','
        << format_double(trace.grad_norms[i]) << '\n';
  }
}

int cmd_run(const RunOptions& options, std::ostream& diag) {
  std::vector<ExperimentSpec> specs;
  try {
    specs = load_experiment_specs(options.spec_file, options.overrides);
    for (auto& spec : specs) {
      if (options.seed.has_value()) spec.seeds = {*options.seed};
      if (options.output_dir.has_value()) spec.output_dir = options.output_dir->string();
      validate_spec(spec);
      for (const auto& warning : validate(spec.optimizer)) {
        diag << "warning: " << spec.name << ": " << warning << "\n";
      }
    }
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  if (specs.empty()) {
    diag << "error: spec file contains no experiments\n";
    return kExitConfigError;
  }

  const std::filesystem::path root = specs.front().output_dir;
  std::filesystem::create_directories(root);

  struct JobSlot {
    const ExperimentSpec* spec;
    std::uint64_t seed;
    RunResult result;
  };
  std::vector<JobSlot> slots;
  for (const auto& spec : specs) {
    for (const auto seed : spec.seeds) slots.push_back({&spec, seed, {}});
  }

  std::vector<std::function<void()>> jobs;
  jobs.reserve(slots.size());
  for (auto& slot : slots) {
    jobs.emplace_back([&slot] { slot.result = run_experiment(*slot.spec, slot.seed); });
  }
  const std::vector<std::string> errors = run_pool(options.workers, jobs);
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (!errors[i].empty()) {
      diag << "error: " << slots[i].spec->name << " seed " << slots[i].seed << ": " << errors[i]
           << "\n";
      return kExitConfigError;
    }
  }

  bool any_diverged = false;
  std::vector<ResultRow> rows;
  rows.reserve(slots.size());
  for (auto& slot : slots) {
    const auto& spec = *slot.spec;
    const auto& result = slot.result;
    any_diverged = any_diverged || result.diverged;

    ResultRow row;
    row.spec_name = spec.name;
    row.seed = slot.seed;
    row.optimizer_label = algorithm_label(spec.algorithm);
    row.orthogonalizer_label = orthogonalizer_label(spec.optimizer);
    row.rank = spec.optimizer.rank;
    row.final_loss = result.final_loss;
    row.steps_to_grad_tol = result.steps_to_grad_tol;
    row.diverged = result.diverged;
    row.wall_time_ms = result.wall_time_ms;
    rows.push_back(row);

    const std::filesystem::path run_dir =
        root / "runs" / (spec.name + "-s" + std::to_string(slot.seed));
    std::filesystem::create_directories(run_dir);
    write_trace_csv(run_dir / "trace.csv", result.trace);
    if (options.write_checkpoint) {
      save_checkpoint({spec.optimizer, result.final_states}, run_dir / "checkpoint.json");
    }
  }

  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) {
    return std::tie(a.spec_name, a.seed) < std::tie(b.spec_name, b.seed);
  });
  write_results_csv(root / "results.csv", rows);
  write_timings_csv(root / "timings.csv", rows);

  diag << "wrote " << rows.size() << " result rows to " << (root / "results.csv").string() << "\n";
  return any_diverged ? kExitRuntimeFailure : kExitOk;
}

int cmd_verify_bounds(const VerifyBoundsOptions& options, std::ostream& diag) {
  for (const double kappa : options.kappas) {
    if (!(kappa >= 1.0)) {
      diag << "error: kappa must be >= 1, got " << format_double(kappa) << "\n";
      return kExitConfigError;
    }
  }
  for (const int r : options.ranks) {
    if (r < 1) {
      diag << "error: rank must be >= 1, got " << r << "\n";
      return kExitConfigError;
    }
  }
  for (const int i : options.iterations) {
    if (i < 1) {
      diag << "error: iterations must be >= 1, got " << i << "\n";
      return kExitConfigError;
    }
  }

  std::filesystem::create_directories(options.output_dir);
  std::ofstream out(options.output_dir / "bounds.csv");
  if (!out) {
    diag << "error: cannot write bounds.csv\n";
    return kExitConfigError;
  }
  out << "kappa,r,iterations,measured,bound,pass\n";

  bool all_pass = true;
  for (const double kappa : options.kappas) {
    for (const int r : options.ranks) {
      // r x n matrix with geometric singular values from 1 down to
      // 1/sqrt(kappa), so the Gram condition number is exactly kappa.
      const int n = std::max(2 * r, 16);
      GaussianStream rng(mix_seed(options.seed, static_cast<std::uint64_t>(r),
                                  static_cast<std::uint64_t>(kappa * 1e3)));
      Eigen::HouseholderQR<Matrix> qu(rng.matrix(r, r));
      const Matrix u = qu.householderQ() * Matrix::Identity(r, r);
      Eigen::HouseholderQR<Matrix> qv(rng.matrix(n, n));
      const Matrix v = (qv.householderQ() * Matrix::Identity(n, n)).leftCols(r);
      Vector s(r);
      for (int k = 0; k < r; ++k) {
        const double t = r == 1 ? 1.0 : static_cast<double>(k) / (r - 1);
        s(k) = std::pow(1.0 / std::sqrt(kappa), t);
      }
      const Matrix m = u * s.asDiagonal() * v.transpose();

      const Matrix polar = orthogonalize_svd(m);
      for (const int i : options.iterations) {
        const Matrix approx =
            newton_schulz_orthogonalize(m, {NewtonSchulzKind::Classic, i});
        const double measured = (approx - polar).norm();
        const double bound = newton_schulz_error_bound(kappa, r, i);
        const bool pass = measured <= bound + 1e-6;
        all_pass = all_pass && pass;
        out << format_double(kappa) << ',' << r << ',' << i << ',' << format_double(measured)
            << ',' << format_double(bound) << ',' << (pass ? 1 : 0) << '\n';
      }
    }
  }
  diag << (all_pass ? "all cells satisfy the bound\n" : "bound violated in at least one cell\n");
  return all_pass ? kExitOk : kExitRuntimeFailure;
}

int cmd_accounting(const AccountingOptions& options, std::ostream& diag) {
  if (options.rank < 1 || options.ns_iterations < 1) {
    diag << "error: rank and ns_iterations must be >= 1\n";
    return kExitConfigError;
  }
  for (const auto& [m, n] : options.shapes) {
    if (m < n || n < 1) {
      diag << "error: shapes must satisfy m >= n >= 1, got (" << m << ", " << n << ")\n";
      return kExitConfigError;
    }
  }

  std::filesystem::create_directories(options.output_dir);
  std::ofstream out(options.output_dir / "accounting.csv");
  if (!out) {
    diag << "error: cannot write accounting.csv\n";
    return kExitConfigError;
  }
  out << "m,n,rank,mem_sumo,mem_adam,mem_shampoo,mem_soap,mem_galore,"
         "flops_svd_pseudoinverse,flops_svd_decomposition,flops_newton_schulz\n";
  for (const auto& [m, n] : options.shapes) {
    out << m << ',' << n << ',' << options.rank << ','
        << optimizer_state_memory(m, n, options.rank, MemoryMethod::Sumo) << ','
        << optimizer_state_memory(m, n, options.rank, MemoryMethod::Adam) << ','
        << optimizer_state_memory(m, n, options.rank, MemoryMethod::Shampoo) << ','
        << optimizer_state_memory(m, n, options.rank, MemoryMethod::Soap) << ','
        << optimizer_state_memory(m, n, options.rank, MemoryMethod::Galore) << ','
        << flops_svd_pseudoinverse(m, n) << ',' << flops_svd_decomposition(m, n) << ','
        << flops_newton_schulz(m, n, options.ns_iterations) << '\n';
  }
  diag << "wrote accounting for " << options.shapes.size() << " shapes\n";
  return kExitOk;
}

int cmd_extract_adapter(const ExtractAdapterOptions& options, std::ostream& diag) {
  Matrix pretrained, finetuned;
  try {
    pretrained = load_matrix(options.pretrained);
    finetuned = load_matrix(options.finetuned);
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  AdapterBundle bundle;
  try {
    bundle = extract_adapter(finetuned, pretrained, options.tolerance);
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  save_adapter_bundle(bundle, options.tolerance, options.out_dir);
  diag << "rank " << bundle.rank << ", residual " << format_double(bundle.residual_norm) << ", wrote "
       << options.out_dir.string() << "\n";
  return kExitOk;
}

}  // namespace sumo
