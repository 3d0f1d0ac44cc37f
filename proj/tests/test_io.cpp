#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "amv/bench.hpp"
#include "amv/field_io.hpp"
#include "amv/rng.hpp"

using namespace amv;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("amv_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("field files round trip byte-exactly, including NaN payloads") {
  TempDir tmp;
  const PixelGrid g = make_grid(8, 4);
  Rng rng(1);
  ImageStack x = make_image(g, 3);
  x.values = rng.normal_vector(x.values.size());
  x.values[5] = std::numeric_limits<double>::quiet_NaN();
  const fs::path file = tmp.path / "field.amvf";
  write_field(file, x);
  const ImageStack back = read_field(file);
  CHECK(back.grid == g);
  CHECK(back.channels == 3);
  for (Eigen::Index i = 0; i < x.values.size(); ++i) {
    if (i == 5) {
      CHECK(std::isnan(back.values[i]));
    } else {
      CHECK(back.values[i] == x.values[i]);
    }
  }

  // byte-exact: writing the read-back field reproduces the file
  const fs::path file2 = tmp.path / "field2.amvf";
  write_field(file2, back);
  std::ifstream a(file, std::ios::binary), b(file2, std::ios::binary);
  const std::string sa((std::istreambuf_iterator<char>(a)), {});
  const std::string sb((std::istreambuf_iterator<char>(b)), {});
  CHECK(sa == sb);
}

TEST_CASE("corrupted files raise typed errors") {
  TempDir tmp;
  const PixelGrid g = make_grid(4, 4);
  ImageStack x = make_image(g, 1);
  const fs::path file = tmp.path / "field.amvf";
  write_field(file, x);

  // bad magic
  {
    std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("BAD!", 4);
  }
  CHECK_THROWS_AS(read_field(file), IoError);

  // truncated payload
  write_field(file, x);
  fs::resize_file(file, fs::file_size(file) - 7);
  CHECK_THROWS_AS(read_field(file), IoError);

  // wrong version
  write_field(file, x);
  {
    std::fstream f(file, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const char v[2] = {9, 0};
    f.write(v, 2);
  }
  CHECK_THROWS_AS(read_field(file), IoError);

  CHECK_THROWS_AS(read_field(tmp.path / "missing.amvf"), IoError);
}

TEST_CASE("mask and displacement containers round trip") {
  TempDir tmp;
  const PixelGrid g = make_grid(8, 8);
  Rng rng(3);
  ObservationMask mask = make_empty_mask(g);
  for (int s = 0; s < g.pixels(); ++s) {
    mask.t0[s] = rng.uniform() < 0.5 ? 1 : 0;
    mask.t1[s] = rng.uniform() < 0.5 ? 1 : 0;
  }
  write_mask(tmp.path / "mask.amvf", mask);
  const ObservationMask mask2 = read_mask(tmp.path / "mask.amvf");
  CHECK(mask2.t0 == mask.t0);
  CHECK(mask2.t1 == mask.t1);

  DisplacementField d = make_displacement(g);
  d.values = rng.normal_vector(d.values.size());
  write_displacement(tmp.path / "d.amvf", d);
  const DisplacementField d2 = read_displacement(tmp.path / "d.amvf");
  CHECK(d2.values == d.values);

  // a one-channel field is not a displacement
  write_field(tmp.path / "one.amvf", make_image(g, 1));
  CHECK_THROWS_AS(read_displacement(tmp.path / "one.amvf"), IoError);
}

TEST_CASE("masked_for_file stores NaN at unobserved pixels") {
  const PixelGrid g = make_grid(4, 4);
  Rng rng(5);
  ImageStack x = make_image(g, 1);
  x.values = rng.normal_vector(g.pixels());
  std::vector<std::uint8_t> observed(g.pixels(), 0);
  observed[3] = 1;
  const ImageStack masked = masked_for_file(x, observed);
  for (int s = 0; s < g.pixels(); ++s) {
    if (s == 3) {
      CHECK(masked.values[s] == x.values[s]);
    } else {
      CHECK(std::isnan(masked.values[s]));
    }
  }
}

TEST_CASE("EPE CSV has the six-criteria header and stable formatting") {
  const std::vector<EpeCsvRow> rows = {{"laplace", 1.0, 0.5, 0.25, 2.0, 1.5, 0.125}};
  const std::string text = epe_csv_text(rows);
  CHECK(text ==
        "method,standard,weighted1,weighted2,masked,sparse,sparse_masked\n"
        "laplace,1,0.5,0.25,2,1.5,0.125\n");
}

TEST_CASE("summary files round trip through the key=value parser") {
  TempDir tmp;
  write_summary(tmp.path / "s.txt", {{"alpha", "0.5"}, {"label", "hmc_z1e-6"}});
  const auto entries = read_key_values(tmp.path / "s.txt");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0] == std::pair<std::string, std::string>{"alpha", "0.5"});
  CHECK(entries[1] == std::pair<std::string, std::string>{"label", "hmc_z1e-6"});
}

TEST_CASE("synthetic generation: noise-free observations equal the truth") {
  BenchmarkConfig config;
  config.rows = config.cols = 16;
  config.noise_std = 0.0;
  config.coverage = 0.5;
  config.seed = 4;
  Rng rng(config.seed);
  const SyntheticInstance inst = generate_synthetic(config, rng);
  const auto [d_true, x_true] = unpack_state(inst.truth);
  const ImageStack x_t0 = warp(bspline_analysis(x_true), d_true);
  for (int s = 0; s < inst.truth.grid.pixels(); ++s) {
    if (inst.observations.mask.observed_t0(s)) {
      CHECK(inst.observations.y_t0.at(0, s) == x_t0.at(0, s));
    }
    if (inst.observations.mask.observed_t1(s)) {
      CHECK(inst.observations.y_t1.at(0, s) == x_true.at(0, s));
    }
  }
}

TEST_CASE("full-mask configs observe every pixel") {
  BenchmarkConfig config;
  config.rows = config.cols = 8;
  config.mask_kind = MaskKind::full;
  Rng rng(9);
  const SyntheticInstance inst = generate_synthetic(config, rng);
  CHECK(inst.observations.mask.count_joint() == 64);
}

TEST_CASE("generation is reproducible for a fixed seed") {
  BenchmarkConfig config;
  config.rows = config.cols = 16;
  config.seed = 77;
  Rng a(config.seed), b(config.seed);
  const SyntheticInstance i1 = generate_synthetic(config, a);
  const SyntheticInstance i2 = generate_synthetic(config, b);
  CHECK(i1.truth.values == i2.truth.values);
  CHECK(i1.observations.y_t0.values == i2.observations.y_t0.values);
  CHECK(i1.observations.mask.t0 == i2.observations.mask.t0);
  CHECK(i1.observations.mask.t1 == i2.observations.mask.t1);
}

TEST_CASE("pipeline configs parse from key=value entries") {
  const auto entries = std::vector<std::pair<std::string, std::string>>{
      {"rows", "16"},       {"cols", "16"},
      {"alpha", "0.25"},    {"mask", "full"},
      {"zeta_unused", ""},  // unknown keys are rejected, so this must throw
  };
  CHECK_THROWS_AS(parse_pipeline_config(entries), std::invalid_argument);

  const auto good = std::vector<std::pair<std::string, std::string>>{
      {"rows", "16"},
      {"alpha", "0.25"},
      {"method", "laplace"},
      {"method", "hmc_cold:hmc:1e-6:0.2"},
  };
  const PipelineConfig cfg = parse_pipeline_config(good);
  CHECK(cfg.benchmark.rows == 16);
  CHECK(cfg.benchmark.alpha == 0.25);
  REQUIRE(cfg.methods.size() == 2);
  CHECK(cfg.methods[0].laplace);
  CHECK(cfg.methods[1].kind == SamplerKind::hmc);
  CHECK(cfg.methods[1].zeta == 1e-6);
  CHECK(cfg.methods[1].step == 0.2);
}
