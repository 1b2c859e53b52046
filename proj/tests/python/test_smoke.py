"""End-to-end smoke tests for the python surface."""

import math

import numpy as np
import pytest

import blmc


@pytest.fixture(scope="module")
def sim():
    return blmc.simulate_fixture("sim1", seed=11, n=150, holdout=20)


def test_simulate_shapes(sim):
    assert sim["coords"].shape == (130, 2)
    assert sim["y"].shape == (130, 2)
    assert sim["x"].shape == (130, 2)
    assert sim["holdout_y"].shape == (20, 2)
    assert np.isfinite(sim["y"]).all()


def test_geometry_primitives(sim):
    order = blmc.order_locations(sim["coords"])
    # already in model order, so ordering is the identity
    assert list(order) == list(range(130))
    _, perm, neighbors = blmc.neighbor_sets(sim["coords"], m=5)
    assert len(neighbors) == 130
    assert neighbors[0] == []
    assert all(len(nb) == min(5, i) for i, nb in enumerate(neighbors))


def test_kernel_and_nngp(sim):
    assert blmc.effective_range(3.0) == pytest.approx(-math.log(0.05) / 3.0)
    corr = blmc.exponential_correlation(6.0, sim["coords"][:4], sim["coords"][:4])
    assert corr.shape == (4, 4)
    assert np.allclose(np.diag(corr), 1.0)
    row_ptr, col_idx, weights, diag = blmc.nngp_factor(sim["coords"], m=5, decay=6.0)
    assert len(row_ptr) == 131
    assert (np.asarray(diag) > 0).all()
    ld = blmc.nngp_log_density(sim["coords"], 5, 6.0, np.zeros(130))
    assert ld == pytest.approx(-0.5 * (130 * math.log(2 * math.pi) + np.log(diag).sum()))


@pytest.fixture(scope="module")
def fitted(sim):
    return blmc.fit(
        sim["coords"], sim["y"], sim["x"], sim["observed"],
        k=2, m=6, burnin=150, iters=200, seed=5,
    )


def test_fit_outputs(fitted):
    assert fitted.num_draws == 200
    assert len(fitted.beta) == 200
    assert fitted.beta[0].shape == (2, 2)
    psi = np.asarray(fitted.psi)
    assert psi.shape == (200, 2)
    assert ((psi >= 2.12) & (psi <= 212.0)).all()
    assert np.isfinite(fitted.latent_mean).all()
    assert (np.asarray(fitted.latent_var) >= 0).all()


def test_fit_is_deterministic(sim, fitted):
    again = blmc.fit(
        sim["coords"], sim["y"], sim["x"], sim["observed"],
        k=2, m=6, burnin=150, iters=200, seed=5,
    )
    assert np.array_equal(np.asarray(fitted.psi), np.asarray(again.psi))
    assert np.array_equal(fitted.beta[-1], again.beta[-1])


def test_predict_and_score(sim, fitted):
    pred = blmc.predict(fitted, sim["holdout_coords"], sim["holdout_x"], level=0.95, seed=9)
    assert pred["mean"].shape == (20, 2)
    assert (pred["lower"] <= pred["upper"]).all()
    pooled = blmc.rmspe(pred["mean"].ravel(), sim["holdout_y"].ravel())
    assert np.isfinite(pooled)
    cvg = blmc.coverage(pred["lower"].ravel(), pred["upper"].ravel(), sim["holdout_y"].ravel())
    assert 0.5 <= cvg <= 1.0


def test_samples_roundtrip(tmp_path, fitted):
    fitted.save(str(tmp_path / "samples"))
    back = blmc.load_samples(str(tmp_path / "samples"))
    assert back.num_draws == fitted.num_draws
    assert np.array_equal(np.asarray(back.psi), np.asarray(fitted.psi))


def test_conjugate_posteriors(sim):
    coords, y, x = sim["coords"][:40], sim["y"][:40], sim["x"][:40]
    post = blmc.response_posterior(
        coords, y, x, alpha=0.8, decay=6.0,
        mu_beta=np.zeros((2, 2)), v_r=4 * np.eye(2), psi=np.eye(2), nu=4.0,
    )
    assert post["nu"] == pytest.approx(44.0)
    assert post["mu"].shape == (2, 2)
    lat = blmc.latent_posterior(
        coords, y, x, alpha=0.6, decay=6.0,
        mu_beta=np.zeros((2, 2)), v_r=4 * np.eye(2), psi=np.eye(2), nu=4.0,
    )
    assert lat["mu"].shape == (42, 2)
    seq = blmc.consistency_diagnostic(coords, x, decay=6.0, alpha=0.8, sizes=[10, 20, 40])
    assert (np.diff(seq) >= -1e-10).all()


def test_metrics():
    assert blmc.crps_gaussian(0.0, 0.0, 1.5) == pytest.approx(1.5)
    assert blmc.interval_score(-1.0, 2.0, 0.0, 0.05) == pytest.approx(3.0)
    rng = np.random.default_rng(1)
    chain = rng.standard_normal(5000)
    assert blmc.ess(chain) > 3000
    assert blmc.mcse(chain, 50) == pytest.approx(1 / math.sqrt(5000), rel=0.5)


def test_validation_errors(sim):
    with pytest.raises(blmc.BlmcError):
        blmc.fit(sim["coords"], sim["y"], sim["x"], sim["observed"],
                 k=0, burnin=10, iters=10, seed=1)
