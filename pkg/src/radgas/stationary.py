"""Planar stationary solution of the outflow problem.

The stationary system reduces, via the first integral
``f(ubar) + qbar = f(u_plus)``, to the second-order ODE

    (f(ubar))'' + f(u_plus) - f(ubar) + ubar' = 0,   ubar(0) = u_minus,

whose solution is the stable-manifold orbit of the saddle (ND) or
saddle-node (D) equilibrium at ``u_plus``.  Two independent routes are used:

* forward shooting in the phase variables ``(v, w = f'(v) v')`` with
  bisection on the wall slope, classifying trajectories as overshoot
  (``v`` passes ``u_plus``) or undershoot (``v'`` turns negative);
* the orbit function ``P(v) = ubar'`` along the manifold, integrated in
  ``v`` away from the equilibrium where the manifold is attracting.

The wall slopes of both routes must agree.  The profile itself is built
from the orbit (``ubar' = P(ubar)``), which stays accurate arbitrarily far
out, whereas forward shooting loses the manifold after a few units of x.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline

from .errors import (
    BisectionFailed,
    EndpointError,
    SingularDerivative,
    TruncationTooShort,
    WindowEmpty,
)
from .flux import FluxConfig, eval_flux, eval_flux_deriv, eval_flux_deriv2
from .grid import d1x

ND = "ND"
D = "D"

MIN_NODES = 512
# |ubar(lx) - u_plus| must be below this fraction of delta.
FAR_FIELD_FRACTION = 0.05


@dataclass(frozen=True)
class EndpointStates:
    u_minus: float
    u_plus: float

    def __post_init__(self):
        if not (math.isfinite(self.u_minus) and math.isfinite(self.u_plus)):
            raise EndpointError("endpoint states must be finite")
        if not self.u_minus < self.u_plus:
            raise EndpointError(f"need u_minus < u_plus, got {self.u_minus} >= {self.u_plus}")
        if self.u_plus > 0:
            raise EndpointError(f"need u_plus <= 0, got {self.u_plus}")

    @property
    def delta(self) -> float:
        return abs(self.u_plus - self.u_minus)


@dataclass(frozen=True)
class StationaryProfile:
    grid_x: np.ndarray
    ubar: np.ndarray
    qbar: np.ndarray
    dkubar: dict = field(repr=False)  # k -> d^k ubar / dx^k, k = 1..4
    case_tag: str
    endpoints: EndpointStates
    wall_slope: float = float("nan")

    @property
    def dx(self) -> float:
        return float(self.grid_x[1] - self.grid_x[0])

    @property
    def lx(self) -> float:
        return float(self.grid_x[-1])

    @property
    def delta(self) -> float:
        return self.endpoints.delta

    def derivative(self, k: int) -> np.ndarray:
        if k == 0:
            return self.ubar
        return self.dkubar[k]

    def subsample(self, stride: int) -> "StationaryProfile":
        """Every ``stride``-th node; derivatives are carried over, not recomputed."""
        if (len(self.grid_x) - 1) % stride:
            raise ValueError("stride must divide the number of intervals")
        s = slice(None, None, stride)
        return StationaryProfile(
            grid_x=self.grid_x[s].copy(),
            ubar=self.ubar[s].copy(),
            qbar=self.qbar[s].copy(),
            dkubar={k: v[s].copy() for k, v in self.dkubar.items()},
            case_tag=self.case_tag,
            endpoints=self.endpoints,
            wall_slope=self.wall_slope,
        )

    def qbar_x(self, cfg: FluxConfig) -> np.ndarray:
        """``qbar' = -f'(ubar) ubar'`` from the first integral."""
        return -eval_flux_deriv(cfg, "f", self.ubar) * self.dkubar[1]


def classify_case(ep: EndpointStates) -> str:
    if ep.u_plus > 0:
        raise EndpointError("u_plus > 0 is outside the stationary regime")
    return ND if ep.u_plus < 0 else D


def first_integral_qbar(cfg: FluxConfig, ep: EndpointStates, ubar) -> np.ndarray:
    ubar = np.asarray(ubar, dtype=float)
    return eval_flux(cfg, "f", ep.u_plus) - eval_flux(cfg, "f", ubar)


def linearized_nd_rate(cfg: FluxConfig, ep: EndpointStates) -> float:
    """Decay rate of the stable root of ``a mu^2 + mu - a = 0``, ``a = f'(u_plus)``."""
    if classify_case(ep) != ND:
        raise EndpointError("degenerate case has no exponential rate")
    a = abs(eval_flux_deriv(cfg, "f", ep.u_plus))
    # roots multiply to -1; take the reciprocal of the large one to avoid cancellation
    return 2 * a / (1 + math.sqrt(1 + 4 * a * a))


# -- orbit function -------------------------------------------------------------

class _Orbit:
    """``P(v) = ubar'`` on the stable manifold, as a function of ``v``.

    Stored as a cubic spline of ``log P`` against ``log|v - u_plus|`` for
    ``|e| >= eta`` and as a local series closer to the equilibrium.
    """

    def __init__(self, cfg: FluxConfig, ep: EndpointStates, rtol: float):
        self.cfg = cfg
        self.ep = ep
        self.case = classify_case(ep)
        up, delta = ep.u_plus, ep.delta
        a = eval_flux_deriv(cfg, "f", up)
        b = eval_flux_deriv2(cfg, "f", up)
        if self.case == ND:
            lam = linearized_nd_rate(cfg, ep)
            p1 = -lam
            self.coef = (p1, (0.5 * b - 2 * b * p1 * p1) / (1 + 3 * a * p1))
            self.eta = 1e-5 * delta
        else:
            p2 = 0.5 * b
            self.coef = (0.0, p2, 0.0, -3 * b * p2 * p2)
            self.eta = min(2e-2, 0.05 * delta)

        e0 = -self.eta
        sol = solve_ivp(
            self._rhs,
            (up + e0, ep.u_minus),
            [self.series(e0)],
            method="Radau",
            rtol=rtol,
            atol=1e-30,
            dense_output=True,
        )
        if not sol.success:
            raise SingularDerivative(f"orbit integration failed: {sol.message}")
        s_max = math.log(delta)
        s_min = math.log(self.eta)
        s = np.linspace(s_min, s_max, 6000)
        v = up - np.exp(s)
        v[-1] = ep.u_minus
        P = sol.sol(v)[0]
        if np.any(P <= 0):
            raise SingularDerivative("orbit left the monotone branch (P <= 0)")
        self.spline = CubicSpline(s, np.log(P))
        self.s_min = s_min

    def series(self, e):
        if self.case == ND:
            p1, p2 = self.coef
            return p1 * e + p2 * e * e
        _, p2, _, p4 = self.coef
        return p2 * e * e + p4 * e**4

    def _rhs(self, v, P):
        F = eval_flux(self.cfg, "f", v) - eval_flux(self.cfg, "f", self.ep.u_plus)
        fp = eval_flux_deriv(self.cfg, "f", v)
        fpp = eval_flux_deriv2(self.cfg, "f", v)
        return (F - P - fpp * P * P) / (fp * P)

    def slope_over_e(self, s):
        """``P(e) / |e|`` as a function of ``s = log|e|``."""
        s = np.asarray(s, dtype=float)
        out = np.empty_like(s)
        near = s < self.s_min
        if np.any(near):
            e = -np.exp(s[near])
            out[near] = self.series(e) / np.exp(s[near])
        far = ~near
        if np.any(far):
            out[far] = np.exp(self.spline(s[far]) - s[far])
        return out

    def __call__(self, v):
        e = np.asarray(v, dtype=float) - self.ep.u_plus
        s = np.log(np.maximum(-e, 1e-300))
        return self.slope_over_e(s) * np.exp(s)


# -- forward shooting -------------------------------------------------------------

def _shoot(cfg, ep, slope, x_end, rtol):
    """Integrate from the wall with ``ubar'(0) = slope``.

    Returns +1 (overshoot), -1 (undershoot) or 0 (neither before x_end).
    """
    up = ep.u_plus
    F_plus = eval_flux(cfg, "f", up)
    if classify_case(ep) == ND:
        v_top = up
    else:
        v_top = up - 1e-8 * ep.delta

    def rhs(x, y):
        v, w = y
        fp = eval_flux_deriv(cfg, "f", v)
        vx = w / fp
        return [vx, eval_flux(cfg, "f", v) - F_plus - vx]

    def over(x, y):
        return y[0] - v_top

    over.terminal, over.direction = True, 1

    def under(x, y):
        return y[1]

    under.terminal, under.direction = True, 1

    w0 = eval_flux_deriv(cfg, "f", ep.u_minus) * slope
    sol = solve_ivp(rhs, (0.0, x_end), [ep.u_minus, w0], method="DOP853",
                    rtol=rtol, atol=1e-14, events=(over, under))
    if sol.status == 1:
        return 1 if sol.t_events[0].size else -1
    if sol.status == -1:
        v_last = sol.y[0, -1]
        if abs(eval_flux_deriv(cfg, "f", v_last)) < 1e-12 and abs(v_last - up) > 1e-6 * ep.delta:
            raise SingularDerivative(f"f'(v) vanished at x={sol.t[-1]} with v={v_last}")
        # step-size collapse next to f'(v) = 0 only happens when running into u_plus = 0
        return 1
    return 0


def shoot_wall_slope(cfg: FluxConfig, ep: EndpointStates, x_end: float, rtol: float = 1e-12) -> float:
    """Bisection on the wall slope ``ubar'(0) > 0`` between undershoot and overshoot."""
    hi = abs(ep.u_minus) * (ep.u_plus - ep.u_minus) * 4
    lo = 0.0
    for _ in range(30):
        c = _shoot(cfg, ep, hi, x_end, rtol)
        if c == 1:
            break
        if c == 0:
            return hi
        lo, hi = hi, 2 * hi
    else:
        raise BisectionFailed("no overshooting wall slope found")
    if _shoot(cfg, ep, lo + 1e-12 * hi, x_end, rtol) != -1:
        raise BisectionFailed("no undershooting wall slope found")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if hi - lo <= 1e-14 * hi or mid in (lo, hi):
            break
        c = _shoot(cfg, ep, mid, x_end, rtol)
        if c == 0:
            return mid
        if c == 1:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _check_truncation(cfg, ep, lx):
    case = classify_case(ep)
    if case == ND:
        if linearized_nd_rate(cfg, ep) * lx < 10:
            raise TruncationTooShort(f"lx={lx} gives rate*lx < 10")
    elif ep.delta * lx < 50:
        raise TruncationTooShort(f"lx={lx} gives delta*lx < 50")


def shoot_profile(cfg: FluxConfig, ep: EndpointStates, lx: float, n: int,
                  tol: float = 1e-10, check_truncation: bool = True) -> StationaryProfile:
    """Stationary profile on ``n + 1`` uniform nodes of ``[0, lx]``."""
    if n < MIN_NODES:
        raise ValueError(f"n={n} is below the minimum {MIN_NODES}")
    if check_truncation:
        _check_truncation(cfg, ep, lx)
    case = classify_case(ep)
    rtol = min(max(tol, 1e-13), 1e-10)
    orbit = _Orbit(cfg, ep, rtol=max(rtol * 1e-1, 1e-13))

    slope_orbit = float(orbit(ep.u_minus))
    slope_shoot = shoot_wall_slope(cfg, ep, lx, rtol=max(rtol, 1e-12))
    if abs(slope_shoot - slope_orbit) > 1e-6 * slope_orbit:
        raise BisectionFailed(
            f"shooting slope {slope_shoot!r} disagrees with manifold slope {slope_orbit!r}")

    x = np.linspace(0.0, lx, n + 1)
    # s = log|ubar - u_plus| obeys s' = -P/|e|, smooth in both cases
    sol = solve_ivp(lambda _, s: -orbit.slope_over_e(s), (0.0, lx), [math.log(ep.delta)],
                    method="DOP853", t_eval=x, rtol=1e-13, atol=1e-13)
    if not sol.success:
        raise SingularDerivative(sol.message)
    s = sol.y[0]
    e = -np.exp(s)
    ubar = ep.u_plus + e
    ubar[0] = ep.u_minus

    d1 = orbit.slope_over_e(s) * np.exp(s)
    F = eval_flux(cfg, "f", ubar) - eval_flux(cfg, "f", ep.u_plus)
    fp = eval_flux_deriv(cfg, "f", ubar)
    fpp = eval_flux_deriv2(cfg, "f", ubar)
    d2 = (F - d1 - fpp * d1 * d1) / fp
    dx = x[1] - x[0]
    d3 = d1x(d2, dx)
    d4 = d1x(d3, dx)

    if abs(ubar[-1] - ep.u_plus) > FAR_FIELD_FRACTION * ep.delta:
        raise TruncationTooShort(
            f"ubar(lx) = {ubar[-1]!r} is not within {FAR_FIELD_FRACTION} delta of u_plus")

    return StationaryProfile(
        grid_x=x,
        ubar=ubar,
        qbar=first_integral_qbar(cfg, ep, ubar),
        dkubar={1: d1, 2: d2, 3: d3, 4: d4},
        case_tag=case,
        endpoints=ep,
        wall_slope=slope_shoot,
    )


def first_integral_residual(cfg: FluxConfig, prof: StationaryProfile) -> float:
    ep = prof.endpoints
    return float(np.max(np.abs(eval_flux(cfg, "f", prof.ubar) + prof.qbar - eval_flux(cfg, "f", ep.u_plus))))


def elliptic_residual(prof: StationaryProfile) -> float:
    """Max of ``|-qbar'' + qbar + ubar'|`` at interior nodes.

    ``qbar''`` is taken by fourth-order differences of the stored ``qbar``
    (off-centred next to the ends), so this check does not reuse the ODE that
    built the profile and is not swamped by stencil truncation.
    """
    q = prof.qbar
    dx = prof.dx
    qxx = np.empty_like(q)
    qxx[2:-2] = (-q[4:] + 16 * q[3:-1] - 30 * q[2:-2] + 16 * q[1:-3] - q[:-4]) / (12 * dx**2)
    off = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / (12 * dx**2)
    qxx[1] = off @ q[:6]
    qxx[-2] = off @ q[-6:][::-1]
    res = -qxx + q + prof.dkubar[1]
    return float(np.max(np.abs(res[1:-1])))


def verify_profile_decay(prof: StationaryProfile, k: int, floor: float = 1e-12) -> float:
    """Fitted decay of the k-th derivative over the far half of the profile.

    ND: returns the exponential rate ``lambda`` (positive) from a least-squares
    fit of ``log|d^k (ubar - u_plus)|`` against x.
    D: returns the algebraic exponent (negative, about ``-(k+1)``) from a fit
    of ``log|d^k ubar|`` against ``log(1 + delta x)``.
    """
    if not 0 <= k <= 4:
        raise ValueError("k must be in 0..4")
    x = prof.grid_x
    vals = prof.derivative(k)
    if k == 0:
        vals = vals - prof.endpoints.u_plus
    vals = np.abs(vals)
    # skip the last couple of nodes where one-sided stencils feed orders 3 and 4
    mask = (x >= 0.5 * prof.lx) & (vals > floor)
    mask[-3:] = False
    if mask.sum() < 2:
        raise WindowEmpty("no values above the floor in the fit window")
    logv = np.log(vals[mask])
    if prof.case_tag == ND:
        slope = np.polyfit(x[mask], logv, 1)[0]
        return float(-slope)
    slope = np.polyfit(np.log1p(prof.delta * x[mask]), logv, 1)[0]
    return float(slope)
