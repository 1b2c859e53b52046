#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "blmc/io.hpp"
#include "blmc/sampler.hpp"
#include "helpers.hpp"

using namespace blmc;
using namespace blmc::testing;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("blmc_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

DatasetPaths paths_in(const TempDir& dir) {
  return {dir.file("locations.csv"), dir.file("responses.csv"), dir.file("covariates.csv")};
}

}  // namespace

TEST_CASE("dataset round-trip is bitwise faithful") {
  TempDir dir;
  Rng rng(9);
  GenerativeSpec spec = builtin_fixture("sim1");
  spec.n = 50;
  spec.n_holdout = 5;
  spec.misalign.kind = MisalignmentRule::Kind::RandomFraction;
  spec.misalign.fraction = Vector::Constant(2, 0.2);
  SimulationOutput out = generate(spec, rng);

  write_dataset(out.dataset, paths_in(dir));
  Dataset back = read_dataset(paths_in(dir));
  REQUIRE(back.n() == out.dataset.n());
  CHECK(back.obs == out.dataset.obs);
  CHECK(back.ids == out.dataset.ids);
  CHECK((back.x - out.dataset.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.locs.coords - out.dataset.locs.coords).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < back.n(); ++i) {
    for (int j = 0; j < 2; ++j) {
      if (back.observed(i, j)) CHECK(back.y(i, j) == out.dataset.y(i, j));
    }
  }
}

TEST_CASE("empty cell means missing") {
  TempDir dir;
  {
    std::ofstream loc(dir.file("locations.csv"));
    loc << "id,x1,x2\na,0.1,0.2\nb,0.4,0.5\n";
    std::ofstream resp(dir.file("responses.csv"));
    resp << "id,y1,y2\na,1.5,\nb,NaN,2.5\n";
    std::ofstream cov(dir.file("covariates.csv"));
    cov << "id,x1\na,1\nb,1\n";
  }
  Dataset d = read_dataset(paths_in(dir));
  REQUIRE(d.n() == 2);
  int row_a = d.ids[0] == "a" ? 0 : 1;
  CHECK(d.observed(row_a, 0));
  CHECK_FALSE(d.observed(row_a, 1));
  CHECK_FALSE(d.observed(1 - row_a, 0));
  CHECK(d.observed(1 - row_a, 1));
}

TEST_CASE("ingestion errors") {
  TempDir dir;
  SUBCASE("all-missing row rejected") {
    std::ofstream loc(dir.file("locations.csv"));
    loc << "id,x1,x2\na,0.1,0.2\n";
    std::ofstream resp(dir.file("responses.csv"));
    resp << "id,y1,y2\na,,\n";
    std::ofstream cov(dir.file("covariates.csv"));
    cov << "id,x1\na,1\n";
    loc.close();
    resp.close();
    cov.close();
    CHECK_THROWS_AS(read_dataset(paths_in(dir)), IoError);
  }
  SUBCASE("id mismatch rejected") {
    std::ofstream loc(dir.file("locations.csv"));
    loc << "id,x1,x2\na,0.1,0.2\n";
    std::ofstream resp(dir.file("responses.csv"));
    resp << "id,y1\nzz,1.0\n";
    std::ofstream cov(dir.file("covariates.csv"));
    cov << "id,x1\na,1\n";
    loc.close();
    resp.close();
    cov.close();
    CHECK_THROWS_AS(read_dataset(paths_in(dir)), IoError);
  }
  SUBCASE("NaN coordinate rejected") {
    std::ofstream loc(dir.file("locations.csv"));
    loc << "id,x1,x2\na,NaN,0.2\n";
    std::ofstream resp(dir.file("responses.csv"));
    resp << "id,y1\na,1.0\n";
    std::ofstream cov(dir.file("covariates.csv"));
    cov << "id,x1\na,1\n";
    loc.close();
    resp.close();
    cov.close();
    CHECK_THROWS_AS(read_dataset(paths_in(dir)), IoError);
  }
}

TEST_CASE("samples round-trip and manifest guard") {
  TempDir dir;
  Rng rng(77);
  GenerativeSpec spec = builtin_fixture("sim1");
  spec.n = 30;
  spec.n_holdout = 5;
  spec.misalign.kind = MisalignmentRule::Kind::RandomFraction;
  spec.misalign.fraction = Vector::Constant(2, 0.15);
  SimulationOutput out = generate(spec, rng);
  Priors priors = default_priors(2, 2, 2, SigmaMode::Full);
  priors.sigma.nu = 3.0;
  ModelConfig config;
  config.num_factors = 2;
  config.num_neighbors = 5;
  config.n_burn = 5;
  config.n_keep = 8;
  config.seed = 4;
  Rng chain(config.seed);
  PosteriorSamples s = run_mcmc(out.dataset, priors, config, chain);

  std::string sdir = dir.file("samples");
  write_samples(s, sdir);
  PosteriorSamples back = read_samples(sdir);
  CHECK(back.n == s.n);
  CHECK(back.n_draws() == s.n_draws());
  CHECK(back.missing_cells == s.missing_cells);
  for (int t = 0; t < s.n_draws(); ++t) {
    CHECK((back.beta[static_cast<std::size_t>(t)] - s.beta[static_cast<std::size_t>(t)])
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((back.sigma[static_cast<std::size_t>(t)] - s.sigma[static_cast<std::size_t>(t)])
              .cwiseAbs()
              .maxCoeff() == 0.0);
    CHECK((back.f_draws[static_cast<std::size_t>(t)].second -
           s.f_draws[static_cast<std::size_t>(t)].second)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  CHECK((back.omega_mean - s.omega_mean).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.omega_var() - s.omega_var()).cwiseAbs().maxCoeff() < 1e-15);

  SUBCASE("config-hash mismatch refuses unless forced") {
    std::string mpath = (std::filesystem::path(sdir) / "manifest.txt").string();
    std::ifstream in(mpath);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    auto pos = text.find("seed=4");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 6, "seed=5");
    std::ofstream outm(mpath);
    outm << text;
    outm.close();
    CHECK_THROWS_AS(read_samples(sdir), IoError);
    PosteriorSamples forced = read_samples(sdir, true);
    CHECK(forced.n_draws() == s.n_draws());
  }

  SUBCASE("dimension tampering is caught and names the file") {
    // drop one row of f_draws.csv
    std::string fpath = (std::filesystem::path(sdir) / "f_draws.csv").string();
    std::ifstream in(fpath);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    in.close();
    lines.pop_back();
    std::ofstream outf(fpath);
    for (const auto& l : lines) outf << l << "\n";
    outf.close();
    try {
      read_samples(sdir);
      CHECK(false);
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("f_draws.csv") != std::string::npos);
    }
  }
}

TEST_CASE("report files") {
  TempDir dir;
  Matrix mean(2, 2), sd(2, 2);
  mean << 1, 2, 3, 4;
  sd = Matrix::Constant(2, 2, 0.5);
  ScoreReport rep = score_predictions(mean, sd, Matrix(mean.array() - 1),
                                      Matrix(mean.array() + 1), mean, 0.95);
  write_report(rep, dir.file("report"));
  std::ifstream csv(dir.file("report.csv"));
  REQUIRE(csv.good());
  std::string header;
  std::getline(csv, header);
  CHECK(header == "metric,response1,response2,pooled");
  std::ifstream txt(dir.file("report.txt"));
  CHECK(txt.good());
}

TEST_CASE("generative spec round-trip") {
  TempDir dir;
  GenerativeSpec spec = builtin_fixture("sim1");
  spec.misalign.kind = MisalignmentRule::Kind::RandomFraction;
  spec.misalign.fraction = Vector::Constant(2, 0.1);
  write_generative_spec(spec, dir.file("spec.txt"));
  GenerativeSpec back = read_generative_spec(dir.file("spec.txt"));
  CHECK(back.n == spec.n);
  CHECK((back.beta - spec.beta).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.lambda - spec.lambda).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.sigma - spec.sigma).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.decay - spec.decay).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.misalign.kind == MisalignmentRule::Kind::RandomFraction);
}
