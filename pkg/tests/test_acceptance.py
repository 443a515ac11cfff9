"""Acceptance criteria, one test per criterion.

Each test prints a single ``[ACCEPT n] PASS|FAIL ...`` line (visible without
``-s``) and then asserts.  Run alone with ``pytest tests/test_acceptance.py -v``
or ``python3 tests/test_acceptance.py``.  The three evolution runs take about
three minutes together.
"""
import math
import sys

import numpy as np
import pytest

from radgas import io
from radgas.diagnostics import fit_decay_exponent, inequality_sweep, EQUIV_BOUNDS
from radgas.elliptic import (COMPATIBILITY, HOMOGENEOUS, EllipticBC, dense_direct_oracle,
                             mms_study, periodic_vector_residual, solve_divq_halfstrip,
                             solve_q_periodic_oracle)
from radgas.evolution import periodic_mass_drift, run
from radgas.flux import FluxConfig
from radgas.grid import Grid, ScalarField, Torus
from radgas.scenarios import d_decay, nd_decay, nd_reference, small
from radgas.stationary import (EndpointStates, elliptic_residual, first_integral_residual,
                               linearized_nd_rate, shoot_profile, verify_profile_decay)

pytestmark = pytest.mark.slow


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[ACCEPT {n:>2}] {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail
    return emit


@pytest.fixture(scope="module")
def nd_run():
    return run(nd_reference(t_end=200.0), full=True)


@pytest.fixture(scope="module")
def decay_runs():
    return run(nd_decay()), run(d_decay())


def test_1_stationary_nd_residuals(report):
    cfg = FluxConfig()
    p = shoot_profile(cfg, EndpointStates(-1.0, -0.2), 80.0, 4096, tol=1e-10)
    fi = first_integral_residual(cfg, p)
    od = elliptic_residual(p)
    mono = bool(np.all(np.diff(p.ubar) > 0))
    report(1, fi <= 1e-8 and od <= 1e-6 and mono,
           f"first-integral {fi:.2e} <= 1e-8, ODE {od:.2e} <= 1e-6, increasing={mono}")


def test_2_stationary_nd_rate(report):
    cfg = FluxConfig()
    ep = EndpointStates(-1.0, -0.2)
    p = shoot_profile(cfg, ep, 80.0, 4096)
    fit = verify_profile_decay(p, 0)
    lam = linearized_nd_rate(cfg, ep)
    rel = abs(fit - lam) / lam
    report(2, rel <= 0.03, f"fitted rate {fit:.6f} vs linearised {lam:.6f} (rel {rel:.2e} <= 3%)")


def test_3_stationary_d_rates(report):
    p = shoot_profile(FluxConfig(), EndpointStates(-0.5, 0.0), 400.0, 8192)
    exps = [verify_profile_decay(p, k) for k in range(3)]
    ok = all(abs(e + (k + 1)) <= 0.15 * (k + 1) for k, e in enumerate(exps))
    report(3, ok, "exponents " + ", ".join(f"k={k}: {e:.3f}" for k, e in enumerate(exps)))


def test_4_elliptic(report):
    g = Grid(32, 32, 3.0, 2.0)
    u = ScalarField(g, np.random.default_rng(11).normal(size=g.shape))
    diffs = [np.abs(solve_divq_halfstrip(u, bc).values - dense_direct_oracle(u, bc).values).max()
             for bc in (EllipticBC(HOMOGENEOUS), EllipticBC(COMPATIBILITY, -1.0))]
    ratios = [r[2] for r in mms_study(levels=4)[1:]]
    t = Torus(32, 32, 2 * np.pi, 2 * np.pi)
    rng = np.random.default_rng(5)
    X, Y = t.mesh()
    ut = ScalarField(t, sum(rng.normal() * np.cos(kx * X + ky * Y + rng.uniform(0, 6))
                            for kx, ky in rng.integers(0, 6, size=(6, 2))))
    res = periodic_vector_residual(ut, solve_q_periodic_oracle(ut))
    ok = max(diffs) <= 1e-10 and all(3.5 <= r <= 4.5 for r in ratios) and res <= 1e-12
    report(4, ok, f"dense diff {max(diffs):.1e}, MMS ratios {[round(r, 3) for r in ratios]}, "
                  f"spectral residual {res:.1e}")


def test_5_structural_identities(report, nd_run):
    records, _, _ = nd_run
    cfg = nd_reference()
    g = cfg.grid
    early = [r.diag for r in records if r.diag.t <= 50.0 + 1e-9]
    scale = early[0].sup_v
    bres = max(r.bres for r in early)
    cres = max(r.cres for r in early)
    btol = 10 * g.dx**2 * scale
    ctol = 10 * (g.dx**2 + g.dy**2) * scale
    report(5, bres <= btol and cres <= ctol,
           f"boundary {bres:.1e} <= {btol:.1e}, curl {cres:.1e} <= {ctol:.1e} over t <= 50")


def test_6_conservation(report):
    t = Torus(64, 32, 16.0, 8.0)
    u0 = t.field(lambda x, y: -0.5 + 0.1 * np.sin(2 * np.pi * x / 16) * np.cos(2 * np.pi * y / 8)
                 + 0.05 * np.cos(4 * np.pi * x / 16 + 1.0))
    drift = periodic_mass_drift(u0, FluxConfig(), 10_000)
    report(6, drift <= 1e-10, f"relative mass drift {drift:.1e} over 10^4 steps")


def test_7_asymptotic_stability(report, nd_run):
    records, _, _ = nd_run
    d = [r.diag for r in records]
    grad_l2 = [math.sqrt(max(r.h1**2 - r.h0**2, 0.0)) for r in d]
    grad_sup = [max(r.sup_vx, r.sup_vy) for r in d]
    sup_ok = d[-1].sup_v <= 0.05 * d[0].sup_v
    l2_ok = grad_l2[-1] <= max(grad_l2) / 10
    gs_ok = grad_sup[-1] <= max(grad_sup) / 10
    report(7, d[-1].t == 200.0 and sup_ok and l2_ok and gs_ok,
           f"sup|v| {d[0].sup_v:.2e} -> {d[-1].sup_v:.2e}; |grad v| max/final "
           f"{max(grad_l2) / grad_l2[-1]:.1e}; sup|grad v| max/final {max(grad_sup) / grad_sup[-1]:.1e}")


def test_8_decay_exponents(report, decay_runs):
    nd, dg = decay_runs

    def fit(recs, col):
        return fit_decay_exponent([r.t for r in recs], [getattr(r, col) for r in recs]).exponent

    ev, evy, ep1, ep2 = (fit(nd, c) for c in ("sup_v", "sup_vy", "sup_p1", "sup_p2"))
    dv = fit(dg, "sup_v")
    ok = ev <= -0.15 and evy <= ev - 0.25 and ep2 <= ep1 - 0.15 and dv <= -0.15
    report(8, ok, f"ND sup_v {ev:.3f}, sup_vy {evy:.3f} (gap {ev - evy:.3f}), "
                  f"sup_p1 {ep1:.3f}, sup_p2 {ep2:.3f} (gap {ep1 - ep2:.3f}); D sup_v {dv:.3f}")


def test_9_apriori_bound(report, nd_run):
    records, _, _ = nd_run
    m0sq = records[0].diag.m0sq
    worst = max(r.apriori for r in records)
    report(9, worst <= 20 * m0sq, f"max monitor {worst:.3e} <= 20 M0^2 = {20 * m0sq:.3e} "
                                  f"(ratio {worst / m0sq:.3f})")


def test_10_inequality_suite(report):
    rows = inequality_sweep(seed=42, trials=100)
    bad = [r for r in rows if not r["holds"]]
    eq = [r["lhs"] for r in rows if r["which"].startswith("equiv")]
    worst = max(r["lhs"] / r["rhs"] for r in rows if not r["which"].startswith("equiv") and r["rhs"] > 0)
    ok = not bad and EQUIV_BOUNDS[0] <= min(eq) and max(eq) <= EQUIV_BOUNDS[1]
    report(10, ok, f"{len(rows)} checks, {len(bad)} violations, worst lhs/rhs {worst:.4f}, "
                   f"equivalence ratios in [{min(eq):.3f}, {max(eq):.3f}]")


def test_11_determinism_and_persistence(report, tmp_path):
    from dataclasses import replace
    cfg = replace(small(t_end=50.0), record_every=5)
    whole = run(cfg, max_steps=100)
    first, st, integral = run(cfg, max_steps=50, full=True)
    ck = tmp_path / "mid.bin"
    io.checkpoint(st, ck)
    rest = run(cfg, io.restore(ck, cfg), m_norms=(first[0].diag.m0sq, first[0].diag.malphasq),
               apriori_integral=integral, start_step=st.steps, max_steps=50, emit_initial=False)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    io.write_series(whole[len(first):], a)
    io.write_series(rest, b)
    same = a.read_bytes() == b.read_bytes() and len(rest) > 0
    round_trip = all(io.parse_config_text(io.emit_config(c)) == c
                     for c in (cfg, nd_reference(), d_decay(), small(kind="none")))
    report(11, same and round_trip,
           f"{len(rest)} resumed records byte-identical={same}, config round-trip={round_trip}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
