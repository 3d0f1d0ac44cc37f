#include "amv/bench.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "amv/laplace.hpp"

namespace amv {
namespace {

std::vector<std::uint8_t> blob_mask(const PixelGrid& grid, double coverage, Rng& rng) {
  const int m = grid.pixels();
  std::vector<std::uint8_t> observed(m, 1);
  int remaining = m;
  const double r_lo = grid.rows / 16.0;
  const double r_hi = grid.rows / 5.0;
  int guard = 0;
  while (remaining > coverage * m && guard++ < 4096) {
    const double cr = rng.uniform() * grid.rows;
    const double cc = rng.uniform() * grid.cols;
    const double radius = r_lo + rng.uniform() * (r_hi - r_lo);
    for (int r = 0; r < grid.rows; ++r) {
      for (int c = 0; c < grid.cols; ++c) {
        // periodic distance, so swath gaps wrap like the fields do
        double dr = std::abs(r - cr);
        dr = std::min(dr, grid.rows - dr);
        double dc = std::abs(c - cc);
        dc = std::min(dc, grid.cols - dc);
        if (dr * dr + dc * dc <= radius * radius) {
          const int s = grid.index(r, c);
          if (observed[s]) {
            observed[s] = 0;
            --remaining;
          }
        }
      }
    }
  }
  if (remaining == 0) observed[0] = 1;  // keep at least one observed pixel
  return observed;
}

constexpr double kTextureHurst = 0.5;

}  // namespace

void BenchmarkConfig::validate() const {
  if (!(coverage > 0.0) || coverage > 1.0) {
    throw std::invalid_argument("coverage must lie in (0, 1]");
  }
  if (!(hurst_truth > 0.0)) throw std::invalid_argument("Hurst exponent must be positive");
  if (!(alpha > 0.0) || !(gamma > 0.0)) {
    throw std::invalid_argument("prior weights must be positive");
  }
  if (noise_std < 0.0) throw std::invalid_argument("noise std must be nonnegative");
  make_grid(rows, cols);
}

SyntheticInstance generate_synthetic(const BenchmarkConfig& config, Rng& rng) {
  config.validate();
  const PixelGrid grid = make_grid(config.rows, config.cols);
  const int m = grid.pixels();

  // Ground-truth displacement: one prior realization per component.
  DisplacementField d_true = make_displacement(grid);
  d_true.d1() = fbm_sample(rng, config.hurst_truth, grid);
  d_true.d2() = fbm_sample(rng, config.hurst_truth, grid);

  // Reference image: low-pass random texture normalized to unit spread.
  ImageStack x_t1 = make_image(grid, config.channels);
  for (int c = 0; c < config.channels; ++c) {
    Eigen::VectorXd tex = fbm_sample(rng, kTextureHurst, grid);
    const double sd = std::sqrt(tex.squaredNorm() / m);
    if (sd > 0.0) tex /= sd;
    x_t1.channel(c) = tex;
  }

  const ImageStack x_t0 = warp(bspline_analysis(x_t1), d_true);

  ObservationMask mask;
  mask.grid = grid;
  if (config.mask_kind == MaskKind::full) {
    mask = make_full_mask(grid);
  } else {
    mask.t0 = blob_mask(grid, config.coverage, rng);
    mask.t1 = blob_mask(grid, config.coverage, rng);
  }
  validate_mask(mask);

  ImageStack y_t0 = x_t0;
  ImageStack y_t1 = x_t1;
  if (config.noise_std > 0.0) {
    for (Eigen::Index i = 0; i < y_t0.values.size(); ++i) {
      y_t0.values[i] += config.noise_std * rng.normal();
      y_t1.values[i] += config.noise_std * rng.normal();
    }
  }

  SyntheticInstance instance;
  instance.truth = pack_state(d_true, x_t1);
  instance.observations = make_observations(std::move(y_t0), std::move(y_t1), std::move(mask));
  return instance;
}

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig cfg;
  cfg.methods = {
      {"laplace", true, SamplerKind::hmc, 1.0, 0.0},
      {"rw", false, SamplerKind::rw, 1.0, 0.02},
      {"prw", false, SamplerKind::precond_rw, 1.0, 0.02},
      {"mala_z1", false, SamplerKind::mala, 1.0, 0.02},
      {"hmc_z1", false, SamplerKind::hmc, 1.0, 0.14},
      {"mala_z1e-6", false, SamplerKind::mala, 1e-6, 0.02},
      {"hmc_z1e-6", false, SamplerKind::hmc, 1e-6, 0.14},
  };
  return cfg;
}

namespace {

double to_double(const std::string& v) { return std::stod(v); }
long to_long(const std::string& v) { return std::stol(v); }

}  // namespace

PipelineConfig parse_pipeline_config(
    const std::vector<std::pair<std::string, std::string>>& entries) {
  PipelineConfig cfg = PipelineConfig::defaults();
  std::vector<MethodSpec> methods;
  for (const auto& [key, value] : entries) {
    if (key == "rows") cfg.benchmark.rows = static_cast<int>(to_long(value));
    else if (key == "cols") cfg.benchmark.cols = static_cast<int>(to_long(value));
    else if (key == "channels") cfg.benchmark.channels = static_cast<int>(to_long(value));
    else if (key == "hurst_truth") cfg.benchmark.hurst_truth = to_double(value);
    else if (key == "alpha") cfg.benchmark.alpha = to_double(value);
    else if (key == "gamma") cfg.benchmark.gamma = to_double(value);
    else if (key == "mask") {
      if (value == "full") cfg.benchmark.mask_kind = MaskKind::full;
      else if (value == "random_blob") cfg.benchmark.mask_kind = MaskKind::random_blob;
      else throw std::invalid_argument("unknown mask kind '" + value + "'");
    } else if (key == "coverage") cfg.benchmark.coverage = to_double(value);
    else if (key == "noise_std") cfg.benchmark.noise_std = to_double(value);
    else if (key == "seed") cfg.benchmark.seed = static_cast<std::uint64_t>(to_long(value));
    else if (key == "hurst_prior") cfg.hurst_prior = to_double(value);
    else if (key == "hurst_precond") cfg.hurst_precond = to_double(value);
    else if (key == "map_iterations") cfg.map_iterations = static_cast<int>(to_long(value));
    else if (key == "map_tolerance") cfg.map_tolerance_factor = to_double(value);
    else if (key == "samples") cfg.samples = static_cast<int>(to_long(value));
    else if (key == "leapfrog") cfg.leapfrog = static_cast<int>(to_long(value));
    else if (key == "laplace_radius") cfg.laplace_radius = static_cast<int>(to_long(value));
    else if (key == "band_radius") cfg.band_radius = static_cast<int>(to_long(value));
    else if (key == "chains") cfg.chains = static_cast<int>(to_long(value));
    else if (key == "burn_in") cfg.burn_in = to_long(value);
    else if (key == "method") {
      // method = label:kind:zeta:step, or "laplace"
      std::istringstream ss(value);
      std::string label, kind, zeta, step;
      std::getline(ss, label, ':');
      MethodSpec spec;
      spec.label = label;
      if (label == "laplace" && ss.eof()) {
        spec.laplace = true;
      } else {
        std::getline(ss, kind, ':');
        std::getline(ss, zeta, ':');
        std::getline(ss, step, ':');
        spec.kind = parse_sampler_kind(kind);
        spec.zeta = to_double(zeta);
        spec.step = to_double(step);
      }
      methods.push_back(std::move(spec));
    } else {
      throw std::invalid_argument("unknown config key '" + key + "'");
    }
  }
  if (!methods.empty()) cfg.methods = std::move(methods);
  return cfg;
}

PipelineResult run_pipeline(const PipelineConfig& config,
                            const std::optional<std::filesystem::path>& out_dir) {
  PipelineResult result;
  Rng rng(config.benchmark.seed);
  result.instance = generate_synthetic(config.benchmark, rng);
  const ObservationSet& y = result.instance.observations;
  const PixelGrid grid = y.grid();

  ModelParams params;
  params.alpha = config.benchmark.alpha;
  params.gamma = config.benchmark.gamma;
  params.hurst_prior = config.hurst_prior;

  OptimConfig optim;
  optim.max_iterations = config.map_iterations;
  optim.grad_tolerance_factor = config.map_tolerance_factor;
  auto [map_theta, map_diag] = estimate_map(y, params, optim, default_map_init(y));
  result.map_estimate = map_theta;
  result.map_diagnostics = map_diag;

  const auto [d_true, x_true] = unpack_state(result.instance.truth);

  for (const MethodSpec& spec : config.methods) {
    MethodResult mr;
    mr.spec = spec;
    if (spec.laplace) {
      const SparseHessian hessian = assemble_hessian(map_theta, y, params, config.band_radius);
      mr.error_map = laplace_error_map(hessian, ObservableKind::displacement,
                                       config.laplace_radius);
      // Flagged pixels fall back to the global median so the weight families stay defined.
      Eigen::VectorXd values = mr.error_map.value;
      std::vector<double> finite;
      for (int s = 0; s < values.size(); ++s) {
        if (std::isfinite(values[s]) && values[s] > 0.0) finite.push_back(values[s]);
      }
      if (finite.empty()) throw std::runtime_error("laplace map has no finite entries");
      std::nth_element(finite.begin(), finite.begin() + finite.size() / 2, finite.end());
      const double median = finite[finite.size() / 2];
      for (int s = 0; s < values.size(); ++s) {
        if (!std::isfinite(values[s]) || values[s] <= 0.0) values[s] = median;
      }
      mr.error_map.value = values;
      mr.estimate = map_theta.displacement();
    } else {
      ModelParams chain_params = params;
      chain_params.zeta = spec.zeta;
      ChainConfig chain;
      chain.kind = spec.kind;
      chain.step = spec.step;
      chain.leapfrog = config.leapfrog;
      chain.iterations = config.samples;
      chain.zeta = spec.zeta;
      chain.burn_in = config.burn_in;
      chain.hurst_precond = config.hurst_precond;
      chain.seed = config.benchmark.seed * 1000003u + std::hash<std::string>{}(spec.label);
      if (!(spec.step > 0.0)) {
        // pilot-tuned step targeting the 0.9 acceptance band
        ChainConfig pilot = chain;
        pilot.step = 0.03;
        pilot.iterations = 40;
        pilot.burn_in = 0;
        chain.step = tune_step_size(y, chain_params, pilot, map_theta);
      }
      const SampleSummary summary =
          run_chains(y, chain_params, chain, map_theta, config.chains);
      mr.acceptance = summary.acceptance;
      mr.estimate = summary.mean.displacement();
      mr.error_map = summary.err_displacement;
      // Exactly determined pixels can have zero spread at tiny temperatures.
      double floor_value = 0.0;
      for (int s = 0; s < mr.error_map.value.size(); ++s) {
        floor_value = std::max(floor_value, mr.error_map.value[s]);
      }
      floor_value = std::max(floor_value * 1e-12, 1e-300);
      for (int s = 0; s < mr.error_map.value.size(); ++s) {
        if (!(mr.error_map.value[s] > 0.0)) mr.error_map.value[s] = floor_value;
      }
    }
    mr.report = criteria_suite(d_true, mr.estimate, mr.error_map, y.mask);
    result.table.push_back(EpeCsvRow{spec.label, mr.report.standard, mr.report.weighted1,
                                     mr.report.weighted2, mr.report.masked, mr.report.sparse,
                                     mr.report.sparse_masked});
    result.methods.push_back(std::move(mr));
  }

  result.csv_text = epe_csv_text(result.table);

  if (out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(*out_dir);
    write_displacement(*out_dir / "d_true.amvf", d_true);
    write_field(*out_dir / "x_t1_true.amvf", x_true);
    write_mask(*out_dir / "mask.amvf", y.mask);
    write_field(*out_dir / "y_t0.amvf", masked_for_file(y.y_t0, y.mask.t0));
    write_field(*out_dir / "y_t1.amvf", masked_for_file(y.y_t1, y.mask.t1));
    write_displacement(*out_dir / "d_map.amvf", map_theta.displacement());
    for (const MethodResult& mr : result.methods) {
      write_displacement(*out_dir / ("d_" + mr.spec.label + ".amvf"), mr.estimate);
      ImageStack err = make_image(grid, 1);
      err.values = mr.error_map.value;
      write_field(*out_dir / ("err_" + mr.spec.label + ".amvf"), err);
    }
    write_epe_csv(*out_dir / "epe.csv", result.table);

    std::vector<std::pair<std::string, std::string>> summary;
    auto add = [&](const std::string& k, const std::string& v) { summary.emplace_back(k, v); };
    add("rows", std::to_string(config.benchmark.rows));
    add("cols", std::to_string(config.benchmark.cols));
    add("channels", std::to_string(config.benchmark.channels));
    add("seed", std::to_string(config.benchmark.seed));
    add("alpha", std::to_string(config.benchmark.alpha));
    add("gamma", std::to_string(config.benchmark.gamma));
    add("hurst_prior", std::to_string(config.hurst_prior));
    add("hurst_precond", std::to_string(config.hurst_precond));
    add("map_iterations", std::to_string(result.map_diagnostics.iterations));
    add("map_energy", std::to_string(result.map_diagnostics.final_energy));
    add("epe_table", "epe.csv");
    for (const MethodResult& mr : result.methods) {
      add("acceptance_" + mr.spec.label, std::to_string(mr.acceptance));
      add("estimate_" + mr.spec.label, "d_" + mr.spec.label + ".amvf");
      add("errmap_" + mr.spec.label, "err_" + mr.spec.label + ".amvf");
    }
    write_summary(*out_dir / "summary.txt", summary);
  }
  return result;
}

}  // namespace amv
