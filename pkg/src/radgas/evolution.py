"""Explicit time stepping of the coupled hyperbolic-elliptic system on the half strip.

Space: nodal finite volumes with unlimited MUSCL (central slopes) and local
Lax-Friedrichs interface fluxes, second order.  Time: SSP-RK2 with one
elliptic solve per stage.  Node ``x = 0`` carries ``u_minus`` and node
``x = lx`` the stationary far value; both are re-imposed after every stage.

The stepped operator is ``L(u) - L(ubar)``: subtracting the discrete
residual of the stationary profile makes ``ubar`` an exact fixed point, so
perturbations are not swamped by the O(dx^2) truncation error of the profile.
:func:`rhs` returns the raw ``L(u)``.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import diagnostics as dg
from .elliptic import EllipticBC, divq_array, divq_periodic_array, q_arrays
from .errors import AmplitudeTooLarge, NaNDetected, StepTooLarge
from .flux import FluxConfig, eval_flux_deriv, llf_flux_array
from .grid import Grid, ScalarField, Torus, VectorField
from .stationary import ND, EndpointStates, StationaryProfile, shoot_profile

log = logging.getLogger(__name__)

PROFILE_MIN_NODES = 2048
SPEED_FLOOR = 1e-8
WALL_CUTOFF_WIDTH = 1.0


@dataclass(frozen=True)
class Perturbation:
    kind: str = "none"
    amp: float = 0.0
    x0: float = 5.0
    y0: float = 0.0
    sx: float = 1.0
    sy: float = 1.0
    beta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("none", "gaussian", "weighted_tail"):
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if self.kind == "gaussian" and not (self.sx > 0 and self.sy > 0):
            raise ValueError("gaussian widths must be positive")

    def sample(self, grid: Grid) -> np.ndarray:
        X, Y = grid.mesh()
        if self.kind == "none":
            return np.zeros(grid.shape)
        if self.kind == "gaussian":
            gy = sum(np.exp(-0.5 * ((Y - self.y0 - n * grid.ly) / self.sy) ** 2) for n in (-2, -1, 0, 1, 2))
            gx = np.exp(-0.5 * ((X - self.x0) / self.sx) ** 2)
            cut = -np.expm1(-(X / WALL_CUTOFF_WIDTH) ** 4)
            v0 = self.amp * gx * gy * cut
        else:
            v0 = self.amp * (1 + X) ** (-self.beta) * X / (1 + X) * np.cos(2 * np.pi * Y / grid.ly)
        v0[0] = 0.0
        v0[-1] = 0.0
        return v0


@dataclass(frozen=True)
class SimConfig:
    endpoints: EndpointStates
    grid: Grid
    flux: FluxConfig = FluxConfig()
    cfl: float = 0.4
    t_end: float = 10.0
    bc: str = "compatibility"
    weight_alpha: float = 1.0
    perturbation: Perturbation = Perturbation()
    record_every: int = 10
    amplitude_check: str = "warn"  # warn | error | off
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.cfl <= 1:
            raise ValueError("cfl must lie in (0, 1]")
        if not self.t_end >= 0:
            raise ValueError("t_end must be nonnegative")
        if self.weight_alpha < 0:
            raise ValueError("weight_alpha must be nonnegative")
        if self.record_every < 1:
            raise ValueError("record_every must be positive")
        if self.bc not in ("compatibility", "homogeneous"):
            raise ValueError(f"bc must be compatibility or homogeneous, got {self.bc!r}")
        if self.amplitude_check not in ("warn", "error", "off"):
            raise ValueError("amplitude_check must be warn, error or off")

    def elliptic_bc(self) -> EllipticBC:
        return EllipticBC(self.bc, float(eval_flux_deriv(self.flux, "f", self.endpoints.u_minus)))


class Background:
    """Stationary profile on the simulation grid and its discrete references."""

    def __init__(self, cfg: SimConfig, profile: StationaryProfile | None = None):
        g = cfg.grid
        if profile is None:
            m = max(1, math.ceil(PROFILE_MIN_NODES / g.nx))
            profile = shoot_profile(cfg.flux, cfg.endpoints, g.lx, g.nx * m).subsample(m)
        if profile.grid_x.size != g.nx + 1:
            raise ValueError("profile does not match the grid")
        self.profile = profile
        self.bc = cfg.elliptic_bc()
        self.far = float(profile.ubar[-1])
        self.r_far = float(profile.qbar_x(cfg.flux)[-1])
        self.ubar = np.repeat(profile.ubar[:, None], g.ny, axis=1)
        self.rbar = divq_array(self.ubar, g, self.bc, self.r_far)
        self.q1bar, self.q2bar = q_arrays(self.ubar, self.rbar, g)
        self.lbar = operator(self.ubar, self.rbar, cfg, self.far)


@dataclass
class SimState:
    t: float
    u: ScalarField
    q: VectorField
    r: ScalarField
    profile: StationaryProfile
    background: Background | None = field(default=None, repr=False)
    steps: int = 0


def _reconstruct(U, axis):
    """Left/right MUSCL states at the interfaces between consecutive entries of ``U``."""
    n = U.shape[axis]

    def part(s):
        idx = [slice(None)] * U.ndim
        idx[axis] = slice(s, s + n - 3)
        return U[tuple(idx)]

    um, u0, u1, u2 = part(0), part(1), part(2), part(3)
    return u0 + 0.25 * (u1 - um), u1 - 0.25 * (u2 - u0)


def _flux_div_x(u, cfg, left, right):
    U = np.concatenate([np.full((1, u.shape[1]), left), u, np.full((1, u.shape[1]), right)])
    uL, uR = _reconstruct(U, 0)
    return llf_flux_array(cfg.flux, "f", uL, uR)  # interfaces i+1/2, i = 0..nx-1


def _flux_div_y(u, cfg, dy):
    U = np.concatenate([u[:, -2:], u, u[:, :2]], axis=1)
    uL, uR = _reconstruct(U, 1)
    G = llf_flux_array(cfg.flux, "g", uL, uR)
    # G[:, k] sits between nodes k-1 and k
    return (G[:, 1:] - G[:, :-1]) / dy


def operator(u: np.ndarray, r: np.ndarray, cfg: SimConfig, far: float) -> np.ndarray:
    """Raw ``L(u) = -f_x - g_y - r`` at interior nodes; zero at the pinned ends."""
    g = cfg.grid
    F = _flux_div_x(u, cfg, cfg.endpoints.u_minus, far)
    out = np.zeros_like(u)
    out[1:-1] = -(F[1:] - F[:-1]) / g.dx - _flux_div_y(u, cfg, g.dy)[1:-1] - r[1:-1]
    return out


def initialize(cfg: SimConfig, profile: StationaryProfile | None = None) -> SimState:
    bg = Background(cfg, profile)
    g = cfg.grid
    v0 = cfg.perturbation.sample(g)
    u = bg.ubar + v0
    u[0] = cfg.endpoints.u_minus
    u[-1] = bg.far
    if cfg.amplitude_check != "off" and bg.profile.case_tag == ND and np.any(u >= 0):
        msg = "initial data reaches u >= 0 where the nondegenerate setup needs u < 0"
        if cfg.amplitude_check == "error":
            raise AmplitudeTooLarge(msg)
        warnings.warn(msg, stacklevel=2)
    return _make_state(0.0, u, cfg, bg)


def _make_state(t, u, cfg, bg, r=None):
    g = cfg.grid
    if r is None:
        r = divq_array(u, g, bg.bc, bg.r_far)
    if not (np.isfinite(u).all() and np.isfinite(r).all()):
        raise NaNDetected(t)
    q1, q2 = q_arrays(u, r, g)
    return SimState(t, ScalarField(g, u), VectorField(g, q1, q2), ScalarField(g, r), bg.profile, bg)


def cfl_dt(cfg: SimConfig, state: SimState) -> float:
    u = state.u.values
    g = state.u.grid
    ax = float(np.max(np.abs(eval_flux_deriv(cfg.flux, "f", u))))
    ay = float(np.max(np.abs(eval_flux_deriv(cfg.flux, "g", u))))
    return cfg.cfl / max(ax / g.dx + ay / g.dy, SPEED_FLOOR)


def rhs(state: SimState, cfg: SimConfig) -> ScalarField:
    """Raw semi-discrete right-hand side at the current ``u`` and ``r``."""
    bg = state.background
    far = bg.far if bg is not None else float(state.u.values[-1, 0])
    return ScalarField(cfg.grid, operator(state.u.values, state.r.values, cfg, far))


def _balanced(u, r, cfg, bg):
    return operator(u, r, cfg, bg.far) - bg.lbar


def _pin(u, cfg, bg):
    u[0] = cfg.endpoints.u_minus
    u[-1] = bg.far
    return u


def step(state: SimState, cfg: SimConfig, dt: float) -> SimState:
    bg = state.background
    if bg is None:
        raise ValueError("state has no stationary background; build it with initialize()")
    limit = cfl_dt(cfg, state)
    if dt > limit * (1 + 1e-12):
        raise StepTooLarge(f"dt={dt!r} exceeds the CFL limit {limit!r}")
    g = cfg.grid
    u0 = state.u.values
    u1 = _pin(u0 + dt * _balanced(u0, state.r.values, cfg, bg), cfg, bg)
    r1 = divq_array(u1, g, bg.bc, bg.r_far)
    if not np.isfinite(r1).all():
        raise NaNDetected(state.t + dt)
    u2 = _pin(0.5 * u0 + 0.5 * (u1 + dt * _balanced(u1, r1, cfg, bg)), cfg, bg)
    return _make_state(state.t + dt, u2, cfg, bg)


def extract_perturbation(state: SimState):
    """``(v, p, divp)`` against the discrete stationary references."""
    bg = state.background
    g = state.u.grid
    v = state.u.values - bg.ubar
    p = VectorField(g, state.q.comp1 - bg.q1bar, state.q.comp2 - bg.q2bar)
    return ScalarField(g, v), p, ScalarField(g, state.r.values - bg.rbar)


def initial_norms(cfg: SimConfig, state: SimState) -> tuple[float, float]:
    v, _, _ = extract_perturbation(state)
    return dg.initial_norms(v, cfg.weight_alpha)


@dataclass(frozen=True)
class RunRecord:
    """Diagnostics snapshot plus the running a priori quantity."""

    diag: dg.DiagnosticsRecord
    apriori: float
    steps: int


class RunAborted(RuntimeError):
    def __init__(self, cause, records):
        super().__init__(str(cause))
        self.cause = cause
        self.records = records


def _snapshot(state, cfg, m0sq, malphasq):
    v, p, divp = extract_perturbation(state)
    return dg.snapshot(state.t, v.values, p.comp1, p.comp2, divp.values,
                       state.profile.dkubar[1], cfg.grid, cfg.weight_alpha,
                       cfg.endpoints.u_minus, m0sq, malphasq)


def _rate(state, grid):
    v, p, divp = extract_perturbation(state)
    return dg.apriori_rate(v.values, p.comp1, p.comp2, divp.values, grid)


def run(cfg: SimConfig, state: SimState | None = None, *, m_norms: tuple[float, float] | None = None,
        apriori_integral: float = 0.0, start_step: int = 0, max_steps: int | None = None,
        emit_initial: bool = True, on_record: Callable[[RunRecord], None] | None = None,
        full: bool = False):
    """Advance to ``cfg.t_end`` and return the diagnostics records.

    A record is taken at the start (``emit_initial``), after every step whose
    global index is a multiple of ``record_every`` and at ``t_end``.  To resume
    from a checkpoint pass the restored ``state``, the frozen ``m_norms``, the
    accumulated ``apriori_integral`` and the global ``start_step``.
    ``max_steps`` stops early.  With ``full`` the return value is
    ``(run_records, final_state, apriori_integral)``.

    On failure :class:`RunAborted` carries the records produced so far.
    """
    if state is None:
        state = initialize(cfg)
    if m_norms is None:
        m_norms = initial_norms(cfg, state)
    m0sq, malphasq = m_norms
    grid = cfg.grid
    records = []
    n = start_step
    integral = apriori_integral

    def emit(st):
        rec = RunRecord(_snapshot(st, cfg, m0sq, malphasq),
                        dg.h2_sq(st.u.values - st.background.ubar, grid) + integral, n)
        records.append(rec)
        if on_record is not None:
            on_record(rec)

    try:
        rate = _rate(state, grid)
        if emit_initial:
            emit(state)
        t_stop = cfg.t_end * (1 - 1e-14)
        taken = 0
        while state.t < t_stop and (max_steps is None or taken < max_steps):
            dt = min(cfl_dt(cfg, state), cfg.t_end - state.t)
            new = step(state, cfg, dt)
            n += 1
            taken += 1
            if new.t >= t_stop:
                new = replace(new, t=cfg.t_end)
            new_rate = _rate(new, grid)
            integral += 0.5 * dt * (rate + new_rate)
            state, rate = new, new_rate
            if n % cfg.record_every == 0 or state.t >= cfg.t_end:
                emit(state)
    except Exception as exc:
        raise RunAborted(exc, records if full else [r.diag for r in records]) from exc
    state = replace(state, steps=n)
    if full:
        return records, state, integral
    return [r.diag for r in records]


# -- doubly periodic configuration (conservation oracle) ---------------------------

def periodic_operator(u: np.ndarray, torus: Torus, flux: FluxConfig) -> np.ndarray:
    """``L(u)`` on the torus: periodic LLF fluxes and the spectral ``div q``."""
    U = np.concatenate([u[-2:], u, u[:2]], axis=0)
    uL, uR = _reconstruct(U, 0)
    F = llf_flux_array(flux, "f", uL, uR)
    V = np.concatenate([u[:, -2:], u, u[:, :2]], axis=1)
    vL, vR = _reconstruct(V, 1)
    G = llf_flux_array(flux, "g", vL, vR)
    r = divq_periodic_array(u, torus)
    return -(F[1:] - F[:-1]) / torus.dx - (G[:, 1:] - G[:, :-1]) / torus.dy - r


def periodic_dt(u: np.ndarray, torus: Torus, flux: FluxConfig, cfl: float) -> float:
    ax = float(np.max(np.abs(eval_flux_deriv(flux, "f", u))))
    ay = float(np.max(np.abs(eval_flux_deriv(flux, "g", u))))
    return cfl / max(ax / torus.dx + ay / torus.dy, SPEED_FLOOR)


def periodic_step(u: np.ndarray, torus: Torus, flux: FluxConfig, dt: float) -> np.ndarray:
    u1 = u + dt * periodic_operator(u, torus, flux)
    return 0.5 * u + 0.5 * (u1 + dt * periodic_operator(u1, torus, flux))


def periodic_mass_drift(u0: ScalarField, flux: FluxConfig, steps: int, cfl: float = 0.4) -> float:
    """Relative change of the total mass after ``steps`` steps on the torus."""
    torus = u0.grid
    if not isinstance(torus, Torus):
        raise TypeError("mass check runs on a Torus")
    u = u0.values.copy()
    m0 = u.sum()
    for _ in range(steps):
        u = periodic_step(u, torus, flux, periodic_dt(u, torus, flux, cfl))
    if not np.isfinite(u).all():
        raise NaNDetected(float("nan"))
    return abs(u.sum() - m0) / max(abs(m0), np.abs(u0.values).sum())
