import math

import pytest

mf = pytest.importorskip("motforge")


def two_point():
    return mf.DiscreteMeasure([-1.0, 1.0], [0.5, 0.5])


def test_trivial_mot_value():
    mu = mf.DiscreteMeasure([0.0], [1.0])
    sol = mf.solve_mot(mu, two_point(), mf.CostFunction.abs_diff_neg())
    assert sol["status"] == "optimal"
    assert abs(sol["value"] + 1.0) < 1e-12
    ok, witness = mf.is_martingale(sol["coupling"])
    assert ok and witness is None


def test_convex_order_and_potential():
    mu = mf.DiscreteMeasure([0.0], [1.0])
    ordered, _, _ = mf.convex_order_leq(mu, two_point())
    assert ordered
    assert mf.potential(two_point(), 0.0) == pytest.approx(1.0)
    assert mf.wasserstein1(mu, two_point()) == pytest.approx(1.0)


def test_monotone_counterexample():
    rep = mf.is_finitely_monotone(
        [(0.0, -1.0), (0.0, 1.0), (1.0, 0.0)],
        mf.CostFunction.sm_neg(),
        max_support=3,
        trials=40,
        seed=7,
    )
    assert not rep["monotone"]
    assert rep["gap"] == pytest.approx(-1.0, abs=1e-7)


def test_numeraire_transform_mass():
    pi = mf.Coupling([(1.0, 0.5, 0.5), (1.0, 1.5, 0.5)])
    spec = mf.TransformSpec.numeraire(1.0, 0.0, 1.0)
    mass, is_prob = mf.numeraire_mass_check(pi, spec)
    assert is_prob and mass == pytest.approx(1.0)
    image = mf.transform_measure(spec, pi)
    ok, _ = mf.is_martingale(image)
    assert ok


def test_classify_affine():
    grid = [x * 0.5 for x in range(-4, 5)]
    out = mf.classify(mf.TransformSpec.affine(3.0, -1.0), grid, grid, trials=100, seed=3)
    assert out["case"] == "affine"
    assert out["a"] == pytest.approx(3.0)
    assert out["b"] == pytest.approx(-1.0)


def test_barrier_fit_and_embedding():
    mu = mf.DiscreteMeasure([0.0], [1.0])
    nu = two_point()
    lat = mf.Lattice.cover(mu, nu, 0.25)
    fit = mf.fit_right_barrier(mu, nu, lat)
    assert fit["w1_residual"] <= 2 * lat.delta
    law, truncated = mf.embedded_law(fit["barrier"], mu, lat)
    assert truncated <= 1e-6
    assert mf.wasserstein1(law, nu) <= 2 * lat.delta


def test_stop_go_closed_form():
    out = mf.check_stop_go(0.0, 2.0, 1.0, 2.0, gamma="terminal_sm_neg",
                           sigma_kind="fixed_steps", sigma_value=25,
                           delta=0.02, n_samples=10000, seed=2)
    assert out["verdict"] == "SG"
    assert abs(out["gap"] - out["exact_gap"]) <= 3 * out["stderr"] + 1e-12
