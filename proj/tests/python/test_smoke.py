"""Smoke tests for the Python bindings: a few identities, one end-to-end
filter run, and determinism. The heavy numerical checks live in the C++
suites; this only guards the binding layer."""

import math

import numpy as np
import pytest

import rekf


def random_pd(rng, n=4, scale=1.0):
    a = rng.standard_normal((n, n))
    q, _ = np.linalg.qr(a)
    eigs = scale * rng.uniform(0.1, 10.0, size=n)
    p = q @ np.diag(eigs) @ q.T
    return 0.5 * (p + p.T)


def test_gamma_at_zero_and_identity_matrix():
    assert rekf.gamma(np.eye(4), 0.0) == 0.0
    theta = 0.1
    expected = 2.0 * (math.log(0.9) + 1.0 / 0.9 - 1.0)
    assert rekf.gamma(np.eye(4), theta) == pytest.approx(expected, rel=1e-12)


def test_gamma_rejects_theta_outside_domain():
    with pytest.raises(ValueError):
        rekf.gamma(np.eye(2), 1.5)


def test_solve_theta_residual_and_bracket():
    rng = np.random.default_rng(5)
    for c in (1e-6, 1e-3, 0.5):
        p = random_pd(rng)
        sol = rekf.solve_theta(p, c)
        assert 0.0 < sol.theta < sol.bracket_high
        assert abs(rekf.gamma(p, sol.theta) - c) <= 1e-9 * max(c, 1e-12)


def test_robustify_guard_and_dominance():
    rng = np.random.default_rng(11)
    p = random_pd(rng)
    assert np.array_equal(rekf.robustify(p, 1e-15), p)  # below the floor: no-op
    v = rekf.robustify(p, 0.01)
    assert np.linalg.eigvalsh(v - p).min() >= -1e-12


def _run(robust, c0=0.001, seed=3):
    params = rekf.housner.Params()
    model = rekf.housner.build_model(params, np.array([1e-6, 1e-6, 1e-9, 1e-7]), 1.0)

    spec = rekf.sim.ExcitationSpec()
    spec.kind = rekf.sim.ExcitationKind.BANDLIMITED_NOISE
    spec.duration = 2.0
    spec.amplitude = 3.0
    exc = rekf.sim.gen_excitation(spec, seed)
    truth_spec = rekf.sim.TruthSpec()
    truth = rekf.sim.simulate_truth(exc, params, truth_spec)
    y = rekf.sim.synthesize_measurements(truth, exc, params, truth_spec, seed + 1)

    x0 = np.array([0.01, -0.01, 0.5, 5.0])
    v0 = np.diag([1.0, 1.0, 0.001, 0.1])
    return rekf.run_filter(model, x0, v0, np.asarray(exc.samples), np.asarray(y),
                           robust=robust, c0=c0, decay=0.001)


def test_run_filter_end_to_end():
    out = _run(robust=True)
    state = np.asarray(out["state"])
    theta = np.asarray(out["theta"])
    assert state.shape == (2000, 4)
    assert np.asarray(out["variance"]).shape == (2000, 4)
    assert theta.shape == (2000,)
    assert np.asarray(out["innovation"]).shape == (2000,)
    assert np.all(theta >= 0.0) and np.any(theta > 0.0)
    assert np.all(np.isfinite(state))


def test_run_filter_deterministic_and_ekf_mode():
    a = _run(robust=True)
    b = _run(robust=True)
    assert np.array_equal(np.asarray(a["state"]), np.asarray(b["state"]))
    assert np.array_equal(np.asarray(a["theta"]), np.asarray(b["theta"]))

    plain = _run(robust=False)
    assert np.all(np.asarray(plain["theta"]) == 0.0)
