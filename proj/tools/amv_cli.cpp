// amv - joint displacement/image estimation with per-pixel uncertainty from
// partial noisy image pairs. Subcommands cover dataset synthesis, MAP
// estimation, Laplace error maps, tempered MCMC sampling, EPE evaluation and
// the full pipeline.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "amv/bench.hpp"
#include "amv/laplace.hpp"

namespace fs = std::filesystem;
using namespace amv;

namespace {

PipelineConfig load_config(const std::string& path) {
  return parse_pipeline_config(read_key_values(path));
}

ModelParams params_from(const PipelineConfig& cfg) {
  ModelParams p;
  p.alpha = cfg.benchmark.alpha;
  p.gamma = cfg.benchmark.gamma;
  p.hurst_prior = cfg.hurst_prior;
  return p;
}

ObservationSet load_observations(const fs::path& dir) {
  ImageStack y0 = read_field(dir / "y_t0.amvf");
  ImageStack y1 = read_field(dir / "y_t1.amvf");
  ObservationMask mask = read_mask(dir / "mask.amvf");
  // NaNs mark unobserved pixels on disk; the mask is authoritative in memory.
  for (Eigen::Index i = 0; i < y0.values.size(); ++i) {
    if (!std::isfinite(y0.values[i])) y0.values[i] = 0.0;
    if (!std::isfinite(y1.values[i])) y1.values[i] = 0.0;
  }
  return make_observations(std::move(y0), std::move(y1), std::move(mask));
}

int run_synth(const std::string& config_path, const std::string& out,
              std::optional<long> seed) {
  PipelineConfig cfg = load_config(config_path);
  if (seed) cfg.benchmark.seed = static_cast<std::uint64_t>(*seed);
  Rng rng(cfg.benchmark.seed);
  const SyntheticInstance inst = generate_synthetic(cfg.benchmark, rng);
  fs::create_directories(out);
  const auto [d_true, x_true] = unpack_state(inst.truth);
  write_displacement(fs::path(out) / "d_true.amvf", d_true);
  write_field(fs::path(out) / "x_t1_true.amvf", x_true);
  write_mask(fs::path(out) / "mask.amvf", inst.observations.mask);
  write_field(fs::path(out) / "y_t0.amvf",
              masked_for_file(inst.observations.y_t0, inst.observations.mask.t0));
  write_field(fs::path(out) / "y_t1.amvf",
              masked_for_file(inst.observations.y_t1, inst.observations.mask.t1));
  std::cout << "dataset written to " << out << "\n";
  return 0;
}

int run_map(const std::string& config_path, const std::string& data,
            const std::string& out) {
  PipelineConfig cfg = load_config(config_path);
  const ObservationSet y = load_observations(data);
  OptimConfig optim;
  optim.max_iterations = cfg.map_iterations;
  auto [theta, diag] = estimate_map(y, params_from(cfg), optim, default_map_init(y));
  fs::create_directories(out);
  write_displacement(fs::path(out) / "d_map.amvf", theta.displacement());
  write_field(fs::path(out) / "x_map.amvf", theta.image_stack());
  write_summary(fs::path(out) / "map_summary.txt",
                {{"iterations", std::to_string(diag.iterations)},
                 {"energy", std::to_string(diag.final_energy)},
                 {"grad_norm", std::to_string(diag.grad_norm)},
                 {"converged", diag.converged ? "1" : "0"}});
  std::cout << "map energy " << diag.final_energy << " after " << diag.iterations
            << " iterations\n";
  return 0;
}

StateVector load_estimate(const fs::path& dir, const ObservationSet& y) {
  DisplacementField d = read_displacement(dir / "d_map.amvf");
  ImageStack x = read_field(dir / "x_map.amvf");
  (void)y;
  return pack_state(d, x);
}

int run_laplace(const std::string& config_path, const std::string& data,
                const std::string& map_dir, const std::string& out, int radius) {
  PipelineConfig cfg = load_config(config_path);
  const ObservationSet y = load_observations(data);
  const StateVector theta = load_estimate(map_dir, y);
  const SparseHessian hessian =
      assemble_hessian(theta, y, params_from(cfg), cfg.band_radius);
  const int r = radius > 0 ? radius : cfg.laplace_radius;
  const ExpectedErrorMap map =
      laplace_error_map(hessian, ObservableKind::displacement, r);
  fs::create_directories(out);
  ImageStack err = make_image(y.grid(), 1);
  err.values = map.value;
  write_field(fs::path(out) / "err_laplace.amvf", err);
  std::cout << "laplace error map written (radius " << r << ")\n";
  return 0;
}

int run_sample(const std::string& config_path, const std::string& data,
               const std::string& init_dir, const std::string& out,
               const std::string& sampler, double zeta, double dt, long steps,
               int leapfrog, double hurst_precond, long seed, int chains) {
  PipelineConfig cfg = load_config(config_path);
  const ObservationSet y = load_observations(data);
  const StateVector init = load_estimate(init_dir, y);

  ModelParams params = params_from(cfg);
  params.zeta = zeta;
  ChainConfig chain;
  chain.kind = parse_sampler_kind(sampler);
  chain.step = dt;
  chain.leapfrog = leapfrog;
  chain.iterations = steps;
  chain.zeta = zeta;
  if (hurst_precond > 0.0) chain.hurst_precond = hurst_precond;
  chain.seed = static_cast<std::uint64_t>(seed);

  const SampleSummary summary = run_chains(y, params, chain, init, chains);
  fs::create_directories(out);
  write_displacement(fs::path(out) / "d_mean.amvf", summary.mean.displacement());
  write_field(fs::path(out) / "x_mean.amvf", summary.mean.image_stack());
  ImageStack err = make_image(y.grid(), 1);
  err.values = summary.err_displacement.value;
  write_field(fs::path(out) / "err_d.amvf", err);
  err.values = summary.jensen_displacement.value;
  write_field(fs::path(out) / "err_d_jensen.amvf", err);
  write_summary(fs::path(out) / "sample_summary.txt",
                {{"sampler", sampler_kind_name(chain.kind)},
                 {"zeta", std::to_string(zeta)},
                 {"step", std::to_string(dt)},
                 {"samples", std::to_string(summary.samples)},
                 {"acceptance", std::to_string(summary.acceptance)},
                 {"two_pass", summary.two_pass ? "1" : "0"},
                 {"chains", std::to_string(chains)},
                 {"seed", std::to_string(seed)}});
  std::cout << "acceptance " << summary.acceptance << " over " << summary.samples
            << " samples (zeta " << zeta << ")\n";
  return 0;
}

int run_evaluate(const std::string& truth, const std::string& estimate,
                 const std::string& errmap, const std::string& mask_path,
                 const std::string& out, const std::string& label) {
  const DisplacementField d_true = read_displacement(truth);
  const DisplacementField d_hat = read_displacement(estimate);
  const ImageStack err = read_field(errmap);
  const ObservationMask mask = read_mask(mask_path);
  ExpectedErrorMap map;
  map.grid = err.grid;
  map.ell = 2;
  map.value = err.values;
  const EpeReport report = criteria_suite(d_true, d_hat, map, mask);
  const std::vector<EpeCsvRow> rows = {{label, report.standard, report.weighted1,
                                        report.weighted2, report.masked, report.sparse,
                                        report.sparse_masked}};
  if (out.empty()) {
    std::cout << epe_csv_text(rows);
  } else {
    write_epe_csv(out, rows);
  }
  return 0;
}

int run_full_pipeline(const std::string& config_path, const std::string& out,
                      std::optional<long> seed) {
  PipelineConfig cfg = load_config(config_path);
  if (seed) cfg.benchmark.seed = static_cast<std::uint64_t>(*seed);
  const PipelineResult result = run_pipeline(cfg, fs::path(out));
  std::cout << result.csv_text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Displacement-field estimation and uncertainty quantification"};
  app.require_subcommand(1);

  std::string config_path, data_dir, out_dir, map_dir, init_dir;
  std::string truth_file, estimate_file, errmap_file, mask_file, label = "estimate";
  std::string sampler = "hmc";
  double zeta = 1e-6, dt = 0.14, hurst_precond = 0.5;
  long steps = 100, seed_value = 1;
  int leapfrog = 10, radius = 0, chains = 1;
  std::optional<long> seed_opt;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--config", config_path, "key=value config file")->required();
  synth->add_option("--out", out_dir, "output directory")->required();
  synth->add_option("--seed", seed_value, "override config seed");

  auto* map_cmd = app.add_subcommand("map", "MAP estimate from a dataset");
  map_cmd->add_option("--config", config_path)->required();
  map_cmd->add_option("--data", data_dir, "dataset directory")->required();
  map_cmd->add_option("--out", out_dir)->required();

  auto* laplace_cmd = app.add_subcommand("laplace", "Laplace expected-error map");
  laplace_cmd->add_option("--config", config_path)->required();
  laplace_cmd->add_option("--data", data_dir)->required();
  laplace_cmd->add_option("--map", map_dir, "directory with the MAP estimate")->required();
  laplace_cmd->add_option("--out", out_dir)->required();
  laplace_cmd->add_option("--radius", radius, "neighborhood radius (default from config)");

  auto* sample_cmd = app.add_subcommand("sample", "run a tempered MCMC chain");
  sample_cmd->add_option("--config", config_path)->required();
  sample_cmd->add_option("--data", data_dir)->required();
  sample_cmd->add_option("--init", init_dir, "directory with the initial estimate")->required();
  sample_cmd->add_option("--out", out_dir)->required();
  sample_cmd->add_option("--sampler", sampler, "rw|prw|mala|hmc")
      ->check(CLI::IsMember({"rw", "prw", "mala", "hmc"}));
  sample_cmd->add_option("--zeta", zeta, "temperature in (0,1]");
  sample_cmd->add_option("--dt", dt, "relative step size");
  sample_cmd->add_option("--steps", steps, "post burn-in samples");
  sample_cmd->add_option("--leapfrog", leapfrog, "leapfrog steps (hmc)");
  sample_cmd->add_option("--hurst-precond", hurst_precond,
                         "fBm preconditioner Hurst exponent; <= 0 disables");
  sample_cmd->add_option("--seed", seed_value, "chain seed");
  sample_cmd->add_option("--chains", chains, "parallel chains");

  auto* eval_cmd = app.add_subcommand("evaluate", "EPE report from files");
  eval_cmd->add_option("--truth", truth_file)->required();
  eval_cmd->add_option("--estimate", estimate_file)->required();
  eval_cmd->add_option("--errmap", errmap_file)->required();
  eval_cmd->add_option("--mask", mask_file)->required();
  eval_cmd->add_option("--out", out_dir, "CSV path (stdout when omitted)");
  eval_cmd->add_option("--label", label, "method label in the CSV");

  auto* pipeline_cmd = app.add_subcommand("pipeline", "synth + map + methods + evaluation");
  pipeline_cmd->add_option("--config", config_path)->required();
  pipeline_cmd->add_option("--out", out_dir)->required();
  pipeline_cmd->add_option("--seed", seed_value, "override config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      if (synth->count("--seed")) seed_opt = seed_value;
      return run_synth(config_path, out_dir, seed_opt);
    }
    if (map_cmd->parsed()) return run_map(config_path, data_dir, out_dir);
    if (laplace_cmd->parsed()) {
      return run_laplace(config_path, data_dir, map_dir, out_dir, radius);
    }
    if (sample_cmd->parsed()) {
      return run_sample(config_path, data_dir, init_dir, out_dir, sampler, zeta, dt, steps,
                        leapfrog, hurst_precond, seed_value, chains);
    }
    if (eval_cmd->parsed()) {
      return run_evaluate(truth_file, estimate_file, errmap_file, mask_file, out_dir, label);
    }
    if (pipeline_cmd->parsed()) {
      if (pipeline_cmd->count("--seed")) seed_opt = seed_value;
      return run_full_pipeline(config_path, out_dir, seed_opt);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
