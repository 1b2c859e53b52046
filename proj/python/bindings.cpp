#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "blmc/conjugate.hpp"
#include "blmc/io.hpp"
#include "blmc/metrics.hpp"
#include "blmc/predict.hpp"
#include "blmc/sampler.hpp"
#include "blmc/simdata.hpp"

namespace py = pybind11;
using namespace blmc;

namespace {

Dataset dataset_from_arrays(const Matrix& coords, const Matrix& y, const Matrix& x,
                            const Matrix& observed) {
  const int n = static_cast<int>(y.rows());
  if (coords.rows() != n || x.rows() != n) {
    throw ConfigError("coords, y and x must have the same row count");
  }
  Dataset d;
  d.locs = make_location_set(coords);
  d.y.resize(n, y.cols());
  d.x.resize(n, x.cols());
  d.obs.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(y.cols()), 1);
  for (int s = 0; s < n; ++s) {
    int model = d.locs.order[static_cast<std::size_t>(s)];
    d.y.row(model) = y.row(s);
    d.x.row(model) = x.row(s);
    d.ids.push_back(std::to_string(s + 1));
  }
  // ids were pushed in storage order; rebuild in model order
  for (int s = 0; s < n; ++s) {
    d.ids[static_cast<std::size_t>(d.locs.order[static_cast<std::size_t>(s)])] =
        std::to_string(s + 1);
  }
  if (observed.size() > 0) {
    if (observed.rows() != n || observed.cols() != y.cols()) {
      throw ConfigError("observed mask must match y");
    }
    for (int s = 0; s < n; ++s) {
      int model = d.locs.order[static_cast<std::size_t>(s)];
      for (int j = 0; j < y.cols(); ++j) d.set_observed(model, j, observed(s, j) != 0.0);
    }
  }
  d.finalize();
  return d;
}

ModelConfig config_from_kwargs(int k, int m, int burnin, int iters, int thin,
                               const std::string& sigma_mode, std::uint64_t seed, int threads,
                               int f_stride) {
  ModelConfig c;
  c.num_factors = k;
  c.num_neighbors = m;
  c.n_burn = burnin;
  c.n_keep = iters / thin;
  c.thin = thin;
  c.sigma_mode = sigma_mode == "diag" ? SigmaMode::Diagonal : SigmaMode::Full;
  c.seed = seed;
  c.threads = threads;
  c.f_stride = f_stride;
  return c;
}

Priors priors_from_kwargs(const Dataset& data, const ModelConfig& config, double lambda_scale,
                          double iw_scale, double iw_nu, double ig_a, double ig_b,
                          const std::string& decay_kind, double decay_a, double decay_b) {
  Priors pr = default_priors(data.p(), data.q(), config.num_factors, config.sigma_mode);
  pr.lambda.v = Matrix::Identity(config.num_factors, config.num_factors) * lambda_scale;
  if (config.sigma_mode == SigmaMode::Full) {
    pr.sigma.psi = Matrix::Identity(data.q(), data.q()) * iw_scale;
    pr.sigma.nu = iw_nu > 0 ? iw_nu : data.q() + 1.0;
  } else {
    pr.sigma.a = ig_a;
    pr.sigma.b = Vector::Constant(data.q(), ig_b);
  }
  DecayPrior d;
  if (decay_kind == "gamma") {
    d.kind = DecayPrior::Kind::Gamma;
    d.shape = decay_a;
    d.scale = decay_b;
  } else {
    d.kind = DecayPrior::Kind::Uniform;
    d.lo = decay_a;
    d.hi = decay_b;
  }
  pr.decay.assign(static_cast<std::size_t>(config.num_factors), d);
  return pr;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bayesian coregionalized spatial factor models with NNGP priors";

  py::register_exception<Error>(m, "BlmcError");

  // geometry ---------------------------------------------------------------
  m.def("order_locations", &order_locations, py::arg("coords"),
        "Deterministic model ordering (coordinate-sum ascending, ties by index); "
        "returns the storage index per model slot.");
  m.def(
      "neighbor_sets",
      [](const Matrix& coords, int max_neighbors, int threads) {
        LocationSet locs = make_location_set(coords);
        NeighborGraph g = build_neighbor_graph(locs, max_neighbors, threads);
        return py::make_tuple(locs.coords, locs.order, g.neighbors);
      },
      py::arg("coords"), py::arg("m"), py::arg("threads") = 1,
      "Ordered coordinates, the storage->model permutation, and the per-row "
      "earlier-neighbor sets.");

  // kernel / nngp ----------------------------------------------------------
  m.def(
      "exponential_correlation",
      [](double decay, const Matrix& a, const Matrix& b) {
        return correlation_matrix(Kernel{KernelFamily::Exponential, decay}, a, b);
      },
      py::arg("decay"), py::arg("a"), py::arg("b"));
  m.def("effective_range",
        [](double decay) { return effective_range(Kernel{KernelFamily::Exponential, decay}); },
        py::arg("decay"), "Distance where the exponential correlation drops to 0.05.");
  m.def(
      "nngp_factor",
      [](const Matrix& ordered_coords, int max_neighbors, double decay, int threads) {
        LocationSet locs;
        locs.coords = ordered_coords;
        locs.order.resize(static_cast<std::size_t>(ordered_coords.rows()));
        for (int i = 0; i < ordered_coords.rows(); ++i) locs.order[static_cast<std::size_t>(i)] = i;
        NeighborGraph g = build_neighbor_graph(locs, max_neighbors, threads);
        NNGPFactor f =
            build_factor(g, locs, Kernel{KernelFamily::Exponential, decay}, threads);
        return py::make_tuple(f.row_ptr, f.col_idx, f.weight, f.diag);
      },
      py::arg("ordered_coords"), py::arg("m"), py::arg("decay"), py::arg("threads") = 1,
      "Sparse factor (row_ptr, col_idx, weights, diag) of the NNGP precision "
      "for already-ordered coordinates.");
  m.def(
      "nngp_log_density",
      [](const Matrix& ordered_coords, int max_neighbors, double decay, const Vector& f) {
        LocationSet locs;
        locs.coords = ordered_coords;
        locs.order.resize(static_cast<std::size_t>(ordered_coords.rows()));
        for (int i = 0; i < ordered_coords.rows(); ++i) locs.order[static_cast<std::size_t>(i)] = i;
        NeighborGraph g = build_neighbor_graph(locs, max_neighbors);
        return log_density(f, build_factor(g, locs, Kernel{KernelFamily::Exponential, decay}));
      },
      py::arg("ordered_coords"), py::arg("m"), py::arg("decay"), py::arg("f"));

  // simulation -------------------------------------------------------------
  m.def(
      "simulate_fixture",
      [](const std::string& name, std::uint64_t seed, int n, int holdout,
         double misalign_fraction) {
        GenerativeSpec spec = builtin_fixture(name);
        if (n > 0) spec.n = n;
        if (holdout >= 0) spec.n_holdout = holdout;
        if (misalign_fraction > 0) {
          spec.misalign.kind = MisalignmentRule::Kind::RandomFraction;
          spec.misalign.fraction = Vector::Constant(spec.q, misalign_fraction);
        }
        spec.seed = seed;
        Rng rng(seed);
        SimulationOutput out = generate(spec, rng);
        py::dict d;
        d["coords"] = out.dataset.locs.coords;
        d["y"] = out.dataset.y;
        d["x"] = out.dataset.x;
        Matrix obs(out.dataset.n(), out.dataset.q());
        for (int i = 0; i < out.dataset.n(); ++i) {
          for (int j = 0; j < out.dataset.q(); ++j) obs(i, j) = out.dataset.observed(i, j);
        }
        d["observed"] = obs;
        d["f_true"] = out.f_true;
        d["latent_true"] = out.omega_true;
        d["holdout_coords"] = out.holdout_coords;
        d["holdout_x"] = out.holdout_x;
        d["holdout_y"] = out.holdout_y;
        return d;
      },
      py::arg("name"), py::arg("seed"), py::arg("n") = 0, py::arg("holdout") = -1,
      py::arg("misalign_fraction") = 0.0,
      "Generate one of the builtin designs; returns a dict of arrays.");

  // fitting ----------------------------------------------------------------
  py::class_<PosteriorSamples>(m, "PosteriorSamples")
      .def_property_readonly("n", [](const PosteriorSamples& s) { return s.n; })
      .def_property_readonly("q", [](const PosteriorSamples& s) { return s.q; })
      .def_property_readonly("num_draws", [](const PosteriorSamples& s) { return s.n_draws(); })
      .def_property_readonly("beta",
                             [](const PosteriorSamples& s) {
                               std::vector<Matrix> out(s.beta.begin(), s.beta.end());
                               return out;
                             })
      .def_property_readonly("lambda_",
                             [](const PosteriorSamples& s) {
                               std::vector<Matrix> out(s.lambda.begin(), s.lambda.end());
                               return out;
                             })
      .def_property_readonly("sigma",
                             [](const PosteriorSamples& s) {
                               std::vector<Matrix> out(s.sigma.begin(), s.sigma.end());
                               return out;
                             })
      .def_property_readonly("psi",
                             [](const PosteriorSamples& s) {
                               Matrix out(s.n_draws(), s.num_factors);
                               for (int t = 0; t < s.n_draws(); ++t)
                                 out.row(t) = s.psi[static_cast<std::size_t>(t)].transpose();
                               return out;
                             })
      .def_property_readonly("accept_rate",
                             [](const PosteriorSamples& s) { return s.accept_rate; })
      .def_property_readonly("latent_mean",
                             [](const PosteriorSamples& s) { return s.omega_mean; })
      .def_property_readonly("latent_var",
                             [](const PosteriorSamples& s) { return s.omega_var(); })
      .def_property_readonly("latent_cov_mean",
                             [](const PosteriorSamples& s) { return s.omega_cov_mean; })
      .def("save", &write_samples, py::arg("directory"))
      .def("beta_chain", &PosteriorSamples::beta_chain, py::arg("row"), py::arg("col"))
      .def("sigma_chain", &PosteriorSamples::sigma_chain, py::arg("row"), py::arg("col"))
      .def("psi_chain", &PosteriorSamples::psi_chain, py::arg("k"));

  m.def(
      "load_samples",
      [](const std::string& dir, bool force) { return read_samples(dir, force); },
      py::arg("directory"), py::arg("force") = false);

  m.def(
      "fit",
      [](const Matrix& coords, const Matrix& y, const Matrix& x, const Matrix& observed,
         int k, int m_neighbors, int burnin, int iters, int thin,
         const std::string& sigma_mode, std::uint64_t seed, int threads, int f_stride,
         double lambda_scale, double iw_scale, double iw_nu, double ig_a, double ig_b,
         const std::string& decay_prior, double decay_a, double decay_b) {
        Dataset data = dataset_from_arrays(coords, y, x, observed);
        ModelConfig config = config_from_kwargs(k, m_neighbors, burnin, iters, thin,
                                                sigma_mode, seed, threads, f_stride);
        Priors priors = priors_from_kwargs(data, config, lambda_scale, iw_scale, iw_nu, ig_a,
                                           ig_b, decay_prior, decay_a, decay_b);
        auto diags = validate(data, priors, config);
        if (!validation_clean(diags)) {
          std::string msg = "validation failed:";
          for (const auto& d : diags) {
            if (d.severity == Diagnostic::Severity::Error) msg += " " + d.message + ";";
          }
          throw ConfigError(msg);
        }
        Rng rng(seed);
        return run_mcmc(data, priors, config, rng);
      },
      py::arg("coords"), py::arg("y"), py::arg("x"), py::arg("observed") = Matrix(),
      py::arg("k") = 2, py::arg("m") = 10, py::arg("burnin") = 1000, py::arg("iters") = 1000,
      py::arg("thin") = 1, py::arg("sigma_mode") = "full", py::arg("seed") = 1,
      py::arg("threads") = 1, py::arg("f_stride") = 1, py::arg("lambda_scale") = 25.0,
      py::arg("iw_scale") = 1.0, py::arg("iw_nu") = 0.0, py::arg("ig_a") = 2.0,
      py::arg("ig_b") = 1.0, py::arg("decay_prior") = "unif", py::arg("decay_a") = 2.12,
      py::arg("decay_b") = 212.0,
      "Run the block MCMC sampler over arrays (rows in storage order; the "
      "model order is handled internally).");

  // prediction -------------------------------------------------------------
  m.def(
      "predict",
      [](const PosteriorSamples& samples, const Matrix& new_coords, const Matrix& new_x,
         double level, std::uint64_t seed) {
        Rng rng(seed);
        std::vector<Matrix> f_u = predict_factors(samples, new_coords, rng);
        PredictionResult res = predict_responses(samples, f_u, new_x, rng, level);
        py::dict d;
        d["mean"] = res.mean;
        d["sd"] = res.sd;
        d["lower"] = res.lower;
        d["upper"] = res.upper;
        return d;
      },
      py::arg("samples"), py::arg("new_coords"), py::arg("new_x"), py::arg("level") = 0.95,
      py::arg("seed") = 1);

  // conjugate --------------------------------------------------------------
  auto mniw_to_dict = [](const MniwPosterior& p) {
    py::dict d;
    d["mu"] = p.mu;
    d["v"] = p.v;
    d["psi"] = p.psi;
    d["nu"] = p.nu;
    return d;
  };
  m.def(
      "response_posterior",
      [mniw_to_dict](const Matrix& coords, const Matrix& y, const Matrix& x, double alpha,
                     double decay, const Matrix& mu_beta, const Matrix& v_r, const Matrix& psi,
                     double nu) {
        LocationSet locs = make_location_set(coords);
        ConjugateConfig cfg{alpha, Kernel{KernelFamily::Exponential, decay}, mu_beta, v_r, psi,
                            nu};
        // y and x arrive in storage order; reorder like the locations
        Matrix ym(y.rows(), y.cols()), xm(x.rows(), x.cols());
        for (int s = 0; s < y.rows(); ++s) {
          ym.row(locs.order[static_cast<std::size_t>(s)]) = y.row(s);
          xm.row(locs.order[static_cast<std::size_t>(s)]) = x.row(s);
        }
        return mniw_to_dict(response_posterior(locs, ym, xm, cfg));
      },
      py::arg("coords"), py::arg("y"), py::arg("x"), py::arg("alpha"), py::arg("decay"),
      py::arg("mu_beta"), py::arg("v_r"), py::arg("psi"), py::arg("nu"));
  m.def(
      "latent_posterior",
      [mniw_to_dict](const Matrix& coords, const Matrix& y, const Matrix& x, double alpha,
                     double decay, const Matrix& mu_beta, const Matrix& v_r, const Matrix& psi,
                     double nu) {
        LocationSet locs = make_location_set(coords);
        ConjugateConfig cfg{alpha, Kernel{KernelFamily::Exponential, decay}, mu_beta, v_r, psi,
                            nu};
        Matrix ym(y.rows(), y.cols()), xm(x.rows(), x.cols());
        for (int s = 0; s < y.rows(); ++s) {
          ym.row(locs.order[static_cast<std::size_t>(s)]) = y.row(s);
          xm.row(locs.order[static_cast<std::size_t>(s)]) = x.row(s);
        }
        return mniw_to_dict(latent_posterior(locs, ym, xm, cfg));
      },
      py::arg("coords"), py::arg("y"), py::arg("x"), py::arg("alpha"), py::arg("decay"),
      py::arg("mu_beta"), py::arg("v_r"), py::arg("psi"), py::arg("nu"));
  m.def(
      "consistency_diagnostic",
      [](const Matrix& coords, const Matrix& x, double decay, double alpha,
         const std::vector<int>& sizes) {
        LocationSet locs;
        locs.coords = coords;
        locs.order.resize(static_cast<std::size_t>(coords.rows()));
        for (int i = 0; i < coords.rows(); ++i) locs.order[static_cast<std::size_t>(i)] = i;
        return consistency_diagnostic(locs, x, Kernel{KernelFamily::Exponential, decay}, alpha,
                                      sizes);
      },
      py::arg("coords"), py::arg("x"), py::arg("decay"), py::arg("alpha"), py::arg("sizes"),
      "Smallest eigenvalue of J(n) over nested subset sizes (nondecreasing).");

  // metrics ----------------------------------------------------------------
  m.def("rmspe", &rmspe, py::arg("pred"), py::arg("truth"));
  m.def("msel", &msel, py::arg("latent_mean"), py::arg("latent_truth"));
  m.def("crps_gaussian", &crps_gaussian, py::arg("mu"), py::arg("sigma"), py::arg("y"));
  m.def("interval_score", &interval_score, py::arg("lower"), py::arg("upper"), py::arg("y"),
        py::arg("alpha"));
  m.def("coverage", &coverage, py::arg("lower"), py::arg("upper"), py::arg("y"));
  m.def("ess", &ess, py::arg("chain"));
  m.def("mcse", &mcse, py::arg("chain"), py::arg("batch_size") = 50);
}
