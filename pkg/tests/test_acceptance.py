"""Acceptance criteria, one test and one printed verdict line per criterion.

Run with ``pytest tests/test_acceptance.py`` (verdicts appear in the terminal
summary) or directly with ``python3 tests/test_acceptance.py``.
"""
import time

import numpy as np
import pytest

from tvfreq.drem import adjugate
from tvfreq.estimator import FrequencyEstimator
from tvfreq.generators import (
    GeneratorSpec,
    closed_form_phi_harmonic,
    fundamental_matrix_step,
    truth_at,
)
from tvfreq.harness import emit_csv, preset_configs, preset_names, run_scenario, simulate
from tvfreq.regression import (
    constant_amplitude_identity_residual,
    filtered_identity_residual,
    second_order_identity_residual,
)

VERDICTS = {}

HARMONIC_ALPHA = GeneratorSpec([1.0, 0.0], [[0.0, 1.0], [-1.0, 0.0]], [1.0, 0.3])
DT = 1e-4


def _report(n, passed, detail):
    VERDICTS[n] = f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}"
    print(VERDICTS[n])
    return passed


def _grid(t_end, dt=DT):
    n = int(round(t_end / dt))
    t = np.arange(n + 1) * dt
    return t, t[:-1] + 0.5 * dt


def _fig(name):
    return preset_configs(name)[0]


def _warm_up():
    # compile the integration kernel outside of any timed region
    t = np.linspace(0.0, 0.01, 11)
    FrequencyEstimator(record_every=1).fit(t, np.sin(t))


def _decay_with_floor(t, r, lhs):
    """Decay bound C e^{-0.9t} (C fitted on [0, 5] s) plus the floor, and the
    floor alone for t >= 10 s.  Returns (passed, worst decay ratio, worst tail ratio)."""
    r = np.abs(r)
    env = np.exp(-0.9 * t)
    floor = 1e-6 * (1.0 + float(np.max(np.abs(lhs))))
    win = t <= 5.0
    C = float(np.max(r[win] / env[win]))
    decay_ratio = float(np.max(r / (C * env + floor)))
    tail_ratio = float(np.max(r[t >= 10.0]) / floor)
    return decay_ratio <= 1.0 and tail_ratio <= 1.0, decay_ratio, tail_ratio


# --- criteria ------------------------------------------------------------------

def criterion_1():
    cfg = _fig("fig2")
    t, _ = _grid(20.0)
    start = time.perf_counter()
    worst = {}
    for label, amp in (("const", cfg.alpha), ("harmonic", HARMONIC_ALPHA)):
        tr = truth_at(cfg.omega_spec, amp, cfg.phase, t)
        r = second_order_identity_residual(tr)
        lhs = np.abs(tr.alpha ** 2 * tr.omega_d1 * tr.y_d2)
        worst[label] = float(np.max(np.abs(r) / (1e-8 * np.maximum(1.0, lhs))))
    elapsed = time.perf_counter() - start
    ok = max(worst.values()) <= 1.0 and elapsed < 5.0
    return _report(1, ok, f"residual/bound const={worst['const']:.2e} "
                          f"harmonic={worst['harmonic']:.2e}, runtime {elapsed:.2f} s (< 5 s)")


def criterion_2():
    cfg = _fig("fig2")
    t, tm = _grid(cfg.t_end)
    parts = []
    ok = True
    cases = [
        ("const", cfg.alpha, filtered_identity_residual),
        ("const/divided", cfg.alpha, constant_amplitude_identity_residual),
        ("harmonic", HARMONIC_ALPHA, filtered_identity_residual),
    ]
    for label, amp, fn in cases:
        res = fn(truth_at(cfg.omega_spec, amp, cfg.phase, t),
                 truth_at(cfg.omega_spec, amp, cfg.phase, tm))
        passed, dr, tr_ = _decay_with_floor(t, res.residual, res.lhs)
        ok &= passed
        parts.append(f"{label}: decay {dr:.2f} tail {tr_:.2e}")
    return _report(2, ok, "worst |r|/bound, " + "; ".join(parts))


def criterion_3():
    parts = []
    ok = True
    for name in ("fig2", "fig3"):
        cfg = _fig(name)
        est, _ = simulate(cfg, record_every=1)
        h = est.history_
        m = np.column_stack([h[f"m{i}"] for i in range(1, 6)])
        passed, dr, tr_ = _decay_with_floor(h["t"], h["z"] - m @ cfg.theta_star, h["z"])
        ok &= passed
        parts.append(f"{name}: decay {dr:.2f} tail {tr_:.2e}")
    return _report(3, ok, "worst |z - m.Theta*|/bound, " + "; ".join(parts))


def criterion_4():
    cfg = _fig("fig2")
    est, _ = simulate(cfg, record_every=1, record_drem=True, exact_data=True)
    h = est.history_
    Y = np.column_stack([h[f"Y{i}"] for i in range(1, 6)])
    Om = np.stack([h[f"Omega{i}{j}"] for i in range(1, 6) for j in range(1, 6)], -1)
    err = np.linalg.norm(Y - Om.reshape(-1, 5, 5) @ cfg.theta_star, axis=1)
    drem = float(np.max(err / (1e-8 * (1.0 + np.linalg.norm(Y, axis=1)))))

    rng = np.random.default_rng(20261016)
    mats = [rng.normal(size=(5, 5)) for _ in range(100)]
    for rank in (0, 1, 2, 3, 4, 4, 3, 2, 1, 4):
        B = rng.normal(size=(5, rank)) @ rng.normal(size=(rank, 5)) if rank else np.zeros((5, 5))
        mats.append(B)
    adj_worst = 0.0
    for M in mats:
        scale = max(np.linalg.norm(M, 2) ** 5, 1e-300)
        e = np.max(np.abs(M @ adjugate(M) - np.linalg.det(M) * np.eye(5))) / scale
        adj_worst = max(adj_worst, e / 1e-9)
    ok = drem <= 1.0 and adj_worst <= 1.0
    return _report(4, ok, f"|Y - Omega Theta*|/bound {drem:.2e}; adjugate error/bound "
                          f"{adj_worst:.2e} over {len(mats)} matrices")


def _convergence(name, runtime_limit=60.0):
    cfg = _fig(name)
    start = time.perf_counter()
    est, tr = simulate(cfg, record_every=1)
    elapsed = time.perf_counter() - start
    h = est.history_
    late = h["t"] >= 25.0
    bound = 0.05 * float(np.max(np.abs(tr.omega)))
    conv = float(np.max(np.abs(h["omega_hat"][late] - tr.omega[late]))) / bound
    valid = h["valid"] > 0
    theta = np.column_stack([h[f"theta_hat{i}"] for i in range(1, 6)])
    err = np.abs(theta - cfg.theta_star)[np.argmax(valid):] if valid.any() else np.zeros((1, 5))
    rise = float(np.max(np.diff(err, axis=0))) if len(err) > 1 else 0.0
    return conv, rise, elapsed, bool(valid.any())


def criterion_5():
    _warm_up()
    parts = []
    ok = True
    for name in ("fig2", "fig3"):
        conv, rise, elapsed, was_valid = _convergence(name)
        ok &= conv <= 1.0 and rise <= 1e-9 and elapsed < 60.0 and was_valid
        parts.append(f"{name}: omega error/bound {conv:.2e}, max per-step error rise "
                     f"{rise:.2e} (<= 1e-9), runtime {elapsed:.1f} s")
    return _report(5, ok, "; ".join(parts))


def criterion_6():
    _warm_up()
    conv, _, elapsed, was_valid = _convergence("fig5_gamma1")
    ok = conv <= 1.0 and was_valid
    return _report(6, ok, f"gamma=1, theta=(4,2): omega error/bound {conv:.2e}, "
                          f"runtime {elapsed:.1f} s")


def criterion_7():
    cfg = _fig("fig2")
    spec = cfg.omega_spec
    n = int(round(20.0 / DT))
    Phi = np.eye(2)
    phi_err = 0.0
    for k in range(1, n + 1):
        Phi = fundamental_matrix_step(Phi, spec.Gamma, DT)
        if k % 100 == 0:
            phi_err = max(phi_err, float(np.max(np.abs(Phi - closed_form_phi_harmonic(cfg.gamma, k * DT)))))

    t, _ = _grid(20.0)
    pairs = [("omega", "omega_d1"), ("omega_d1", "omega_d2"), ("omega_d2", "omega_d3"),
             ("alpha", "alpha_d1"), ("alpha_d1", "alpha_d2"), ("y", "y_d1"), ("y_d1", "y_d2")]
    fd_worst = 0.0
    for amp in (cfg.alpha, HARMONIC_ALPHA):
        tr = truth_at(spec, amp, cfg.phase, t)
        for parent, child in pairs:
            f, d = getattr(tr, parent), getattr(tr, child)
            fd = (f[2:] - f[:-2]) / (2 * DT)
            scale = float(np.max(np.abs(d[1:-1])))
            e = float(np.max(np.abs(fd - d[1:-1]))) / scale if scale else float(np.max(np.abs(fd)))
            fd_worst = max(fd_worst, e)

    coarse, _ = simulate(cfg, record_every=1000)
    fine, _ = simulate(cfg, record_every=2000, dt=DT / 2)
    w1, w2 = coarse.history_["omega_hat"][-1], fine.history_["omega_hat"][-1]
    halving = abs(w1 - w2) / abs(w1)

    ok = phi_err <= 1e-8 and fd_worst <= 1e-5 and halving <= 1e-4
    return _report(7, ok, f"Phi error {phi_err:.2e} (<= 1e-8); finite-difference rel. error "
                          f"{fd_worst:.2e} (<= 1e-5); dt-halving change {halving:.2e} (<= 1e-4)")


def criterion_8(tmp_dir):
    mismatched = []
    names = [c.name for group in preset_names() for c in preset_configs(group)]
    for name in names:
        cfg = _fig(name)
        a = emit_csv(run_scenario(cfg), tmp_dir / f"{name}_a.csv").read_bytes()
        b = emit_csv(run_scenario(cfg), tmp_dir / f"{name}_b.csv").read_bytes()
        if a != b:
            mismatched.append(name)
    ok = not mismatched
    return _report(8, ok, f"{len(names) - len(mismatched)}/{len(names)} presets byte-identical")


# --- pytest entry points ---------------------------------------------------------

def test_criterion_1_second_order_identity():
    assert criterion_1(), VERDICTS[1]


def test_criterion_2_filtered_identity_decay():
    assert criterion_2(), VERDICTS[2]


def test_criterion_3_regression_residual_decay():
    assert criterion_3(), VERDICTS[3]


def test_criterion_4_extension_and_adjugate():
    assert criterion_4(), VERDICTS[4]


def test_criterion_5_convergence_and_monotone_error():
    assert criterion_5(), VERDICTS[5]


def test_criterion_6_gamma_one():
    assert criterion_6(), VERDICTS[6]


def test_criterion_7_numerics():
    assert criterion_7(), VERDICTS[7]


def test_criterion_8_determinism(tmp_path):
    assert criterion_8(tmp_path), VERDICTS[8]


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    for fn in (criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
               criterion_7):
        fn()
    with tempfile.TemporaryDirectory() as d:
        criterion_8(Path(d))
