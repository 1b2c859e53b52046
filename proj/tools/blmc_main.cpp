#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "blmc/conjugate.hpp"
#include "blmc/io.hpp"
#include "blmc/metrics.hpp"
#include "blmc/model.hpp"
#include "blmc/predict.hpp"
#include "blmc/sampler.hpp"
#include "blmc/simdata.hpp"

namespace fs = std::filesystem;
using namespace blmc;

namespace {

DatasetPaths data_paths(const std::string& dir) {
  return {(fs::path(dir) / "locations.csv").string(),
          (fs::path(dir) / "responses.csv").string(),
          (fs::path(dir) / "covariates.csv").string()};
}

std::vector<std::string> numbered(const std::string& stem, int k) {
  std::vector<std::string> h;
  for (int i = 1; i <= k; ++i) h.push_back(stem + std::to_string(i));
  return h;
}

DecayPrior parse_decay_prior(const std::string& text) {
  DecayPrior d;
  auto p1 = text.find(':');
  auto p2 = text.find(':', p1 + 1);
  if (p1 == std::string::npos || p2 == std::string::npos) {
    throw ConfigError("decay prior must be unif:LO:HI or gamma:SHAPE:SCALE");
  }
  std::string kind = text.substr(0, p1);
  double a = std::stod(text.substr(p1 + 1, p2 - p1 - 1));
  double b = std::stod(text.substr(p2 + 1));
  if (kind == "unif") {
    d.kind = DecayPrior::Kind::Uniform;
    d.lo = a;
    d.hi = b;
  } else if (kind == "gamma") {
    d.kind = DecayPrior::Kind::Gamma;
    d.shape = a;
    d.scale = b;
  } else {
    throw ConfigError("decay prior kind must be unif or gamma");
  }
  return d;
}

int run_simulate(const std::string& fixture, const std::string& spec_file, int n_override,
                 int holdout_override, double misalign_fraction, std::uint64_t seed,
                 const std::string& out_dir) {
  GenerativeSpec spec;
  if (!fixture.empty()) {
    spec = builtin_fixture(fixture);
  } else if (!spec_file.empty()) {
    spec = read_generative_spec(spec_file);
  } else {
    throw ConfigError("simulate needs --fixture or --spec");
  }
  if (n_override > 0) spec.n = n_override;
  if (holdout_override >= 0) spec.n_holdout = holdout_override;
  if (misalign_fraction > 0.0) {
    spec.misalign.kind = MisalignmentRule::Kind::RandomFraction;
    spec.misalign.fraction = Vector::Constant(spec.q, misalign_fraction);
  }
  spec.seed = seed;
  spec.check();

  Rng rng(seed);
  SimulationOutput out = generate(spec, rng);
  fs::create_directories(out_dir);
  write_dataset(out.dataset, data_paths(out_dir));

  auto at = [&](const std::string& f) { return (fs::path(out_dir) / f).string(); };
  {
    std::vector<std::string> h{"id"};
    for (auto& s : numbered("omega", spec.q)) h.push_back(s);
    write_matrix_csv(at("truth_latent.csv"), h, out.omega_true, &out.dataset.ids);
  }
  {
    std::vector<std::string> h{"id"};
    for (auto& s : numbered("f", spec.num_factors)) h.push_back(s);
    write_matrix_csv(at("truth_f.csv"), h, out.f_true, &out.dataset.ids);
  }
  if (out.holdout_coords.rows() > 0) {
    std::vector<std::string> h{"id"};
    for (auto& s : numbered("x", 2)) h.push_back(s);
    write_matrix_csv(at("holdout_locations.csv"), h, out.holdout_coords, &out.holdout_ids);
    std::vector<std::string> hc{"id"};
    for (auto& s : numbered("x", spec.p)) hc.push_back(s);
    write_matrix_csv(at("holdout_covariates.csv"), hc, out.holdout_x, &out.holdout_ids);
    std::vector<std::string> hy{"id"};
    for (auto& s : numbered("y", spec.q)) hy.push_back(s);
    write_matrix_csv(at("holdout_responses.csv"), hy, out.holdout_y, &out.holdout_ids);
    std::vector<std::string> hw{"id"};
    for (auto& s : numbered("omega", spec.q)) hw.push_back(s);
    write_matrix_csv(at("holdout_latent.csv"), hw, out.holdout_omega, &out.holdout_ids);
  }
  if (!out.masked.empty()) {
    Matrix m(static_cast<long>(out.masked.size()), 3);
    for (std::size_t t = 0; t < out.masked.size(); ++t) {
      m(static_cast<long>(t), 0) = out.masked[t].location + 1;
      m(static_cast<long>(t), 1) = out.masked[t].response + 1;
      m(static_cast<long>(t), 2) = out.masked[t].truth;
    }
    write_matrix_csv(at("masked_truth.csv"), {"location", "response", "value"}, m);
  }
  write_generative_spec(spec, at("gen_spec.txt"));
  std::printf("simulated %d observed + %d holdout locations into %s\n", out.dataset.n(),
              static_cast<int>(out.holdout_coords.rows()), out_dir.c_str());
  return 0;
}

int run_fit(const DatasetPaths& paths, const std::string& out_dir, ModelConfig config,
            const std::string& sigma_mode, const std::string& decay_prior_text,
            double lambda_scale, double iw_scale, double iw_nu, double ig_a, double ig_b,
            bool no_centering) {
  Dataset data = read_dataset(paths);
  config.sigma_mode = sigma_mode == "diag" ? SigmaMode::Diagonal : SigmaMode::Full;
  if (no_centering) config.intercept_column = -1;

  Priors priors = default_priors(data.p(), data.q(), config.num_factors, config.sigma_mode);
  priors.lambda.v = Matrix::Identity(config.num_factors, config.num_factors) * lambda_scale;
  if (config.sigma_mode == SigmaMode::Full) {
    priors.sigma.psi = Matrix::Identity(data.q(), data.q()) * iw_scale;
    priors.sigma.nu = iw_nu > 0 ? iw_nu : data.q() + 1.0;
  } else {
    priors.sigma.a = ig_a;
    priors.sigma.b = Vector::Constant(data.q(), ig_b);
  }
  if (!decay_prior_text.empty()) {
    DecayPrior d = parse_decay_prior(decay_prior_text);
    priors.decay.assign(static_cast<std::size_t>(config.num_factors), d);
  }

  auto diags = validate(data, priors, config);
  for (const auto& d : diags) {
    std::fprintf(stderr, "%s: %s\n",
                 d.severity == Diagnostic::Severity::Error ? "error" : "warning",
                 d.message.c_str());
  }
  if (!validation_clean(diags)) throw ConfigError("validation failed; see messages above");

  Rng rng(config.seed);
  PosteriorSamples samples = run_mcmc(data, priors, config, rng);
  write_samples(samples, out_dir);
  std::printf("kept %d draws (%d factor draws) in %s\n", samples.n_draws(),
              static_cast<int>(samples.f_draws.size()), out_dir.c_str());
  for (int k = 0; k < config.num_factors; ++k) {
    std::printf("decay %d acceptance rate %.3f\n", k + 1, samples.accept_rate[k]);
  }
  return 0;
}

int run_predict(const std::string& samples_dir, const std::string& locations_file,
                const std::string& covariates_file, const std::string& out_dir, double level,
                std::uint64_t seed, int threads, bool force) {
  PosteriorSamples samples = read_samples(samples_dir, force);
  samples.config.threads = threads;
  std::vector<std::string> ids;
  Matrix new_locs = read_matrix_csv(locations_file, nullptr, &ids);
  std::vector<std::string> ids2;
  Matrix x_u = read_matrix_csv(covariates_file, nullptr, &ids2);
  if (ids != ids2) throw IoError("prediction locations and covariates ids disagree");

  Rng rng(seed);
  std::vector<Matrix> f_u = predict_factors(samples, new_locs, rng);
  PredictionResult res = predict_responses(samples, f_u, x_u, rng, level);

  fs::create_directories(out_dir);
  const int q = samples.q;
  Matrix table(new_locs.rows(), static_cast<long>(4) * q);
  std::vector<std::string> header{"id"};
  for (int j = 0; j < q; ++j) {
    header.push_back("mean" + std::to_string(j + 1));
    header.push_back("sd" + std::to_string(j + 1));
    header.push_back("lower" + std::to_string(j + 1));
    header.push_back("upper" + std::to_string(j + 1));
    table.col(4 * j + 0) = res.mean.col(j);
    table.col(4 * j + 1) = res.sd.col(j);
    table.col(4 * j + 2) = res.lower.col(j);
    table.col(4 * j + 3) = res.upper.col(j);
  }
  write_matrix_csv((fs::path(out_dir) / "predictions.csv").string(), header, table, &ids);
  std::printf("predicted %d locations x %d responses at %.0f%% level into %s\n",
              static_cast<int>(new_locs.rows()), q, 100 * level, out_dir.c_str());
  return 0;
}

int run_score(const std::string& predictions_file, const std::string& truth_file,
              const std::string& samples_dir, const std::string& latent_truth_file,
              double level, const std::string& out_base) {
  std::vector<std::string> pids, tids;
  std::vector<std::string> header;
  Matrix pred = read_matrix_csv(predictions_file, &header, &pids);
  Matrix truth = read_matrix_csv(truth_file, nullptr, &tids);
  if (pred.cols() % 4 != 0) throw IoError("predictions file must carry mean/sd/lower/upper");
  const int q = static_cast<int>(pred.cols() / 4);
  if (truth.cols() != q) throw IoError("truth responses disagree with prediction columns");
  if (pids.size() != tids.size()) throw IoError("prediction/truth row counts disagree");
  // align truth rows by id
  std::map<std::string, long> where;
  for (std::size_t i = 0; i < tids.size(); ++i) where[tids[i]] = static_cast<long>(i);
  Matrix mean(pred.rows(), q), sd(pred.rows(), q), lower(pred.rows(), q), upper(pred.rows(), q),
      y(pred.rows(), q);
  for (std::size_t i = 0; i < pids.size(); ++i) {
    auto it = where.find(pids[i]);
    if (it == where.end()) throw IoError("truth file is missing id '" + pids[i] + "'");
    for (int j = 0; j < q; ++j) {
      mean(static_cast<long>(i), j) = pred(static_cast<long>(i), 4 * j + 0);
      sd(static_cast<long>(i), j) = pred(static_cast<long>(i), 4 * j + 1);
      lower(static_cast<long>(i), j) = pred(static_cast<long>(i), 4 * j + 2);
      upper(static_cast<long>(i), j) = pred(static_cast<long>(i), 4 * j + 3);
      y(static_cast<long>(i), j) = truth(it->second, j);
    }
  }
  ScoreReport rep = score_predictions(mean, sd, lower, upper, y, level);

  if (!samples_dir.empty() && !latent_truth_file.empty()) {
    PosteriorSamples samples = read_samples(samples_dir);
    std::vector<std::string> lids;
    Matrix ltruth = read_matrix_csv(latent_truth_file, nullptr, &lids);
    if (ltruth.rows() != samples.n) {
      throw IoError("latent truth rows disagree with the fitted locations");
    }
    std::map<std::string, long> lwhere;
    for (std::size_t i = 0; i < lids.size(); ++i) lwhere[lids[i]] = static_cast<long>(i);
    Matrix aligned(samples.n, samples.q);
    for (int i = 0; i < samples.n; ++i) {
      auto it = lwhere.find(samples.ids[static_cast<std::size_t>(i)]);
      if (it == lwhere.end()) {
        throw IoError("latent truth is missing id '" + samples.ids[static_cast<std::size_t>(i)] + "'");
      }
      aligned.row(i) = ltruth.row(it->second);
    }
    add_latent_scores(rep, samples.omega_mean, samples.omega_var().cwiseSqrt(), aligned);
  }
  write_report(rep, out_base);
  std::printf("pooled rmspe=%.4f crps=%.4f int=%.4f cvg=%.4f", rep.rmspe.back(),
              rep.crps.back(), rep.interval.back(), rep.cvg.back());
  if (rep.has_latent) {
    std::printf(" msel=%.4f cvgl=%.4f", rep.msel.back(), rep.cvgl.back());
  }
  std::printf("\nreport written to %s.csv\n", out_base.c_str());
  return 0;
}

int run_diagnose(const std::string& samples_dir, const std::string& out_file) {
  PosteriorSamples s = read_samples(samples_dir);
  ChainDiagnostics table;
  auto add = [&](const std::string& name, const Vector& chain) {
    table.name.push_back(name);
    table.ess.push_back(ess(chain));
    table.mcse.push_back(chain.size() >= 100 ? mcse(chain, 50) : 0.0);
  };
  for (int r = 0; r < s.p; ++r) {
    for (int c = 0; c < s.q; ++c) {
      add("beta_" + std::to_string(r + 1) + "_" + std::to_string(c + 1), s.beta_chain(r, c));
    }
  }
  for (int r = 0; r < s.q; ++r) {
    for (int c = r; c < s.q; ++c) {
      if (s.config.sigma_mode == SigmaMode::Diagonal && r != c) continue;
      add("sigma_" + std::to_string(r + 1) + "_" + std::to_string(c + 1), s.sigma_chain(r, c));
    }
  }
  for (int k = 0; k < s.num_factors; ++k) {
    add("psi_" + std::to_string(k + 1), s.psi_chain(k));
  }
  for (int r = 0; r < s.num_factors; ++r) {
    for (int c = 0; c < s.q; ++c) {
      add("lambda_" + std::to_string(r + 1) + "_" + std::to_string(c + 1),
          s.lambda_chain(r, c));
    }
  }
  std::ofstream out(out_file);
  if (!out) throw IoError("cannot write " + out_file);
  out << "parameter,ess,mcse\n";
  for (std::size_t i = 0; i < table.name.size(); ++i) {
    out << table.name[i] << ',' << format_double(table.ess[i]) << ','
        << format_double(table.mcse[i]) << '\n';
  }
  std::printf("diagnostics for %zu parameters written to %s\n", table.name.size(),
              out_file.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian coregionalized spatial factor models with NNGP priors"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset");
  std::string fixture, spec_file, out_dir;
  int n_override = 0, holdout_override = -1;
  double misalign_fraction = 0.0;
  std::uint64_t seed = 0;
  sim->add_option("--fixture", fixture, "builtin design name (sim1, sim2)");
  sim->add_option("--spec", spec_file, "generative spec file");
  sim->add_option("--n", n_override, "override location count");
  sim->add_option("--holdout", holdout_override, "override holdout count");
  sim->add_option("--misalign-fraction", misalign_fraction,
                  "randomly mask this fraction of every response");
  sim->add_option("--seed", seed, "rng seed")->required();
  sim->add_option("--out", out_dir, "output directory")->required();

  // fit
  auto* fit = app.add_subcommand("fit", "run the block MCMC sampler");
  std::string data_dir, fit_out, sigma_mode = "full", decay_prior_text;
  std::string fit_locs, fit_resp, fit_covs;
  ModelConfig config;
  double lambda_scale = 25.0, iw_scale = 1.0, iw_nu = 0.0, ig_a = 2.0, ig_b = 1.0;
  bool no_centering = false;
  fit->add_option("--data", data_dir, "directory with locations/responses/covariates csv");
  fit->add_option("--locations", fit_locs, "locations csv (alternative to --data)");
  fit->add_option("--responses", fit_resp, "responses csv");
  fit->add_option("--covariates", fit_covs, "covariates csv");
  fit->add_option("--out", fit_out, "samples output directory")->required();
  fit->add_option("--k", config.num_factors, "number of spatial factors")->required();
  fit->add_option("--m", config.num_neighbors, "nearest-neighbor count");
  int iters = 1000;
  fit->add_option("--iters", iters, "post-burn-in iterations");
  fit->add_option("--burnin", config.n_burn, "burn-in iterations");
  fit->add_option("--thin", config.thin, "keep every thin-th draw");
  fit->add_option("--sigma", sigma_mode, "noise covariance mode: full or diag")
      ->check(CLI::IsMember({"full", "diag"}));
  fit->add_option("--seed", config.seed, "rng seed")->required();
  fit->add_option("--threads", config.threads, "worker threads");
  fit->add_option("--f-stride", config.f_stride, "store every f-stride-th factor draw");
  fit->add_option("--decay-prior", decay_prior_text, "unif:LO:HI or gamma:SHAPE:SCALE");
  fit->add_option("--lambda-scale", lambda_scale, "loading prior row-scale diagonal");
  fit->add_option("--iw-scale", iw_scale, "IW scale matrix diagonal");
  fit->add_option("--iw-nu", iw_nu, "IW degrees of freedom (default q+1)");
  fit->add_option("--ig-a", ig_a, "IG shape for diagonal mode");
  fit->add_option("--ig-b", ig_b, "IG rate for diagonal mode");
  fit->add_flag("--no-centering", no_centering, "skip intercept centering of latent summaries");

  // predict
  auto* pred = app.add_subcommand("predict", "posterior predictions at new locations");
  std::string samples_dir, pred_locs, pred_covs, pred_out;
  double level = 0.95;
  std::uint64_t pred_seed = 0;
  int pred_threads = 1;
  pred->add_option("--samples", samples_dir, "fitted samples directory")->required();
  pred->add_option("--locations", pred_locs, "new locations csv")->required();
  pred->add_option("--covariates", pred_covs, "new covariates csv")->required();
  pred->add_option("--out", pred_out, "output directory")->required();
  pred->add_option("--level", level, "central interval level");
  pred->add_option("--seed", pred_seed, "rng seed")->required();
  pred->add_option("--threads", pred_threads, "worker threads");
  bool pred_force = false;
  pred->add_flag("--force", pred_force, "proceed despite a manifest config-hash mismatch");

  // score
  auto* score = app.add_subcommand("score", "score predictions against held-out truth");
  std::string score_pred, score_truth, score_samples, score_latent, score_out;
  double score_level = 0.95;
  score->add_option("--predictions", score_pred, "predictions.csv from predict")->required();
  score->add_option("--truth", score_truth, "held-out responses csv")->required();
  score->add_option("--samples", score_samples, "samples dir (for latent scores)");
  score->add_option("--latent-truth", score_latent, "true latent process csv");
  score->add_option("--level", score_level, "interval level used");
  score->add_option("--out", score_out, "report path base (made .csv/.txt)")->required();

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "per-parameter ESS and MCSE table");
  std::string diag_samples, diag_out;
  diag->add_option("--samples", diag_samples, "fitted samples directory")->required();
  diag->add_option("--out", diag_out, "output csv path")->required();

  CLI11_PARSE(app, argc, argv);


  try {
    if (sim->parsed()) {
      return run_simulate(fixture, spec_file, n_override, holdout_override, misalign_fraction,
                          seed, out_dir);
    }
    if (fit->parsed()) {
      if (iters < 1) throw ConfigError("--iters must be positive");
      config.n_keep = iters / config.thin;
      DatasetPaths paths;
      if (!data_dir.empty()) {
        paths = data_paths(data_dir);
      } else if (!fit_locs.empty() && !fit_resp.empty() && !fit_covs.empty()) {
        paths = {fit_locs, fit_resp, fit_covs};
      } else {
        throw ConfigError("fit needs --data or all of --locations/--responses/--covariates");
      }
      return run_fit(paths, fit_out, config, sigma_mode, decay_prior_text, lambda_scale,
                     iw_scale, iw_nu, ig_a, ig_b, no_centering);
    }
    if (pred->parsed()) {
      return run_predict(samples_dir, pred_locs, pred_covs, pred_out, level, pred_seed,
                         pred_threads, pred_force);
    }
    if (score->parsed()) {
      return run_score(score_pred, score_truth, score_samples, score_latent, score_level,
                       score_out);
    }
    if (diag->parsed()) return run_diagnose(diag_samples, diag_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", e.kind().c_str(), e.what());
    return e.kind() == "io" ? 3 : (e.kind() == "numeric" ? 4 : 2);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: internal: %s\n", e.what());
    return 5;
  }
  return 0;
}
