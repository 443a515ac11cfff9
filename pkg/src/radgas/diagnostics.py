"""Discrete functionals: Sobolev and weighted norms, the time-weighted
energy/dissipation pair, boundary and curl residuals, interpolation
inequality checks and decay-exponent fitting.

Derivative tuples follow ``grad^j f = (d_x^j f, d_x^{j-1} d_y f, ..., d_y^j f)``
with one entry per mixed derivative, so ``|grad^2 f|^2 = f_xx^2 + f_xy^2 + f_yy^2``.
All derivatives are compositions of the first-order stencils in :mod:`radgas.grid`.
"""
from __future__ import annotations

import logging
import math
from dataclasses import astuple, dataclass, fields
from typing import NamedTuple

import numpy as np

from .errors import GridMismatch, NonPositiveValue, TruncationError, WindowEmpty
from .grid import Grid, ScalarField, d1x, d1y, integrate_array

log = logging.getLogger(__name__)

SLACK = 0.05
TRUNCATION_LIMIT = 1e-8

# Constants of the interpolation inequalities.  The 1D bound and its two
# mixed-norm consequences carry sqrt(2); applying the half-line bound in x
# and then in y gives 2 for the four-factor L^inf bound.  The plane
# Gagliardo-Nirenberg case (j=0, m=2, p=inf, N=2, theta=1/2) follows from
# Cauchy-Schwarz in Fourier space: |f|^2 <= |f| |Lap f| / 4 and
# |Lap f|^2 <= 2 |grad^2 f|^2.
CONSTANTS = {
    "L_inf_1d": math.sqrt(2.0),
    "Lx2Lyinf": math.sqrt(2.0),
    "LxinfLy2": math.sqrt(2.0),
    "v_Linfty": 2.0,
    "GN": 2.0**0.25 / 2.0,
}


class DerivativeTable:
    """Lazily built mixed derivatives ``d_x^p d_y^q a`` of one array."""

    def __init__(self, a: np.ndarray, grid: Grid):
        self.grid = grid
        self._cache = {(0, 0): a}

    def __getitem__(self, pq):
        p, q = pq
        if pq not in self._cache:
            if p > 0:
                self._cache[pq] = d1x(self[p - 1, q], self.grid.dx)
            else:
                self._cache[pq] = d1y(self[0, q - 1], self.grid.dy)
        return self._cache[pq]

    def level(self, j, shift_y=0):
        """Entries of ``grad^j`` applied to ``d_y^shift_y a``."""
        return [self[j - m, m + shift_y] for m in range(j + 1)]


def _sq_level(tab: DerivativeTable, j: int, alpha: float = 0.0, shift_y: int = 0) -> float:
    return sum(integrate_array(d * d, tab.grid, alpha) for d in tab.level(j, shift_y))


def norm_hk(f: ScalarField, k: int) -> float:
    if not 0 <= k <= 3:
        raise ValueError("k must be in 0..3")
    tab = DerivativeTable(f.values, f.grid)
    return math.sqrt(sum(_sq_level(tab, j) for j in range(k + 1)))


def weighted_norm(f: ScalarField, alpha: float, k: int) -> float:
    """``|f|_{alpha,k}``: the H^k norm with spatial weight ``(1+x)^alpha``."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if not 0 <= k <= 3:
        raise ValueError("k must be in 0..3")
    tab = DerivativeTable(f.values, f.grid)
    return math.sqrt(sum(_sq_level(tab, j, alpha) for j in range(k + 1)))


def _energy_terms(tab: DerivativeTable, t: float) -> tuple[float, float]:
    e2 = 0.0
    d2 = 0.0
    for k in range(3):
        w = (1.0 + t) ** k
        e2 += w * sum(_sq_level(tab, j, shift_y=k) for j in range(4 - k))
        # grad^j applied componentwise to grad(d_y^k v) = (d_x d_y^k v, d_y^{k+1} v)
        dk = 0.0
        for j in range(3 - k):
            for m in range(j + 1):
                a = tab[j - m + 1, m + k]
                b = tab[j - m, m + k + 1]
                dk += integrate_array(a * a + b * b, tab.grid)
        d2 += w * dk
    return math.sqrt(e2), math.sqrt(d2)


def energy_ED(v: ScalarField, t: float) -> tuple[float, float]:
    """``(E(t), D(t))`` from the (1+t)^k-weighted sums over ``d_y^k v``."""
    return _energy_terms(DerivativeTable(v.values, v.grid), t)


def boundary_identity_residual(v: ScalarField, divp: ScalarField, u_minus: float) -> float:
    """``max_y |div p(0,y) + u_minus v_x(0,y)|`` with a one-sided ``v_x``."""
    if v.grid != divp.grid:
        raise GridMismatch("v and div p live on different grids")
    a = v.values
    vx0 = (-3 * a[0] + 4 * a[1] - a[2]) / (2 * v.grid.dx)
    return float(np.max(np.abs(divp.values[0] + u_minus * vx0)))


def curl_residual(p1: np.ndarray, p2: np.ndarray, grid: Grid) -> float:
    return float(np.max(np.abs(d1y(p1, grid.dy) - d1x(p2, grid.dx))))


def norm_equivalence_check(v: ScalarField) -> tuple[float, float]:
    """Ratios ``|grad^2 v|^2 / (|Lap v|^2 + |grad v_y|^2)`` and the third-order analogue."""
    tab = DerivativeTable(v.values, v.grid)
    g = v.grid
    I = lambda a: integrate_array(a * a, g)  # noqa: E731,E741
    xx, xy, yy = tab[2, 0], tab[1, 1], tab[0, 2]
    num2 = I(xx) + I(xy) + I(yy)
    den2 = I(xx + yy) + I(xy) + I(yy)
    xxx, xxy, xyy, yyy = tab[3, 0], tab[2, 1], tab[1, 2], tab[0, 3]
    num3 = I(xxx) + I(xxy) + I(xyy) + I(yyy)
    den3 = I(xxx + xyy) + I(xxy + yyy) + I(xyy) + I(yyy)

    def ratio(n, d):
        return 1.0 if d < 1e-14 else n / d

    return ratio(num2, den2), ratio(num3, den3)


# -- interpolation inequalities ---------------------------------------------------

class InequalityCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def _l2_1d(a, dx):
    w = np.full(a.size, dx)
    w[0] = w[-1] = 0.5 * dx
    return math.sqrt(float(w @ (a * a)))


def _check_1d(f: np.ndarray, dx: float, half_line: bool):
    f = np.asarray(f, dtype=float)
    ends = [f[-1]] if half_line else [f[0], f[-1]]
    if max(abs(e) for e in ends) > TRUNCATION_LIMIT:
        raise TruncationError("1D sample does not decay before the end of the interval")
    fx = np.gradient(f, dx, edge_order=2)
    return float(np.abs(f).max()), _l2_1d(f, dx), _l2_1d(fx, dx)


def check_interp_inequality(which: str, f, *, dx: float | None = None, half_line: bool = False,
                            slack: float = SLACK, constant: float | None = None,
                            record: bool = False) -> InequalityCheck:
    """Evaluate both sides of one interpolation inequality on sampled data.

    ``L_inf_1d`` takes a 1D array with spacing ``dx`` (on the half line when
    ``half_line`` is set, else on a whole interval); the other kinds take a
    :class:`ScalarField` on a half-strip grid.  ``holds`` is
    ``lhs <= rhs * (1 + slack)``.
    """
    C = CONSTANTS[which] if constant is None else constant
    if which == "L_inf_1d":
        if dx is None:
            raise ValueError("L_inf_1d needs the sample spacing dx")
        sup, n0, n1 = _check_1d(f, dx, half_line)
        lhs, rhs = sup, C * math.sqrt(n0 * n1)
    else:
        if not isinstance(f, ScalarField):
            raise TypeError(f"{which} expects a ScalarField")
        g = f.grid
        a = f.values
        if np.abs(a[-1]).max() > TRUNCATION_LIMIT:
            raise TruncationError("field does not decay before the far boundary")
        tab = DerivativeTable(a, g)
        nrm = lambda b: math.sqrt(integrate_array(b * b, g))  # noqa: E731
        if which == "Lx2Lyinf":
            lhs = math.sqrt(float(g.trapezoid_x @ np.max(a * a, axis=1)))
            rhs = C * math.sqrt(nrm(a) * nrm(tab[0, 1]))
        elif which == "LxinfLy2":
            lhs = math.sqrt(float(np.max((a * a).sum(axis=1)) * g.dy))
            rhs = C * math.sqrt(nrm(a) * nrm(tab[1, 0]))
        elif which == "v_Linfty":
            lhs = float(np.abs(a).max())
            rhs = C * (nrm(a) * nrm(tab[1, 0]) * nrm(tab[0, 1]) * nrm(tab[1, 1])) ** 0.25
        elif which == "GN":
            if np.abs(a[0]).max() > TRUNCATION_LIMIT:
                raise TruncationError("plane Gagliardo-Nirenberg check needs a field vanishing at the wall")
            lhs = float(np.abs(a).max())
            hess = math.sqrt(sum(nrm(d) ** 2 for d in tab.level(2)))
            rhs = C * math.sqrt(nrm(a) * hess)
        else:
            raise ValueError(f"unknown inequality {which!r}")
    holds = lhs <= rhs * (1 + slack)
    if record:
        log.info("%s: lhs=%.6g rhs=%.6g holds=%s", which, lhs, rhs, holds)
    return InequalityCheck(lhs, rhs, bool(holds))


INEQUALITIES = ("L_inf_1d", "Lx2Lyinf", "LxinfLy2", "v_Linfty", "GN")


def random_field_1d(rng: np.random.Generator, n: int = 4001, length: float = 40.0):
    """Half-line sample: a few damped cosines, nonzero at the wall."""
    x = np.linspace(0.0, length, n)
    f = np.zeros_like(x)
    for _ in range(rng.integers(1, 4)):
        b = rng.uniform(0.6, 2.0)
        c = rng.uniform(0.0, 2.0)
        f += rng.normal() * np.exp(-b * x) * np.cos(c * x + rng.uniform(0, 2 * np.pi))
    return f, x[1] - x[0]


def random_field_2d(rng: np.random.Generator, grid: Grid, at_wall: bool) -> ScalarField:
    """Smooth band-limited field inside a Gaussian envelope.

    With ``at_wall`` the envelope is centred near ``x = 0`` so the field does
    not vanish there; otherwise it is confined to the interior.
    """
    X, Y = grid.mesh()
    if at_wall:
        xc = rng.uniform(0.0, 0.15 * grid.lx)
    else:
        xc = rng.uniform(0.4, 0.6) * grid.lx
    yc = rng.uniform(0.0, grid.ly)
    sx = rng.uniform(0.04, 0.08 if at_wall else 0.05) * grid.lx
    sy = rng.uniform(0.04, 0.08) * grid.ly
    dyp = (Y - yc + 0.5 * grid.ly) % grid.ly - 0.5 * grid.ly
    env = np.exp(-0.5 * ((X - xc) / sx) ** 2 - 0.5 * (dyp / sy) ** 2)
    kmax = 2 * np.pi / (12 * max(grid.dx, grid.dy))
    wave = np.zeros_like(X)
    for _ in range(rng.integers(1, 4)):
        kx, ky = rng.uniform(-kmax, kmax, size=2) * 0.5
        wave += rng.normal() * np.cos(kx * X + ky * dyp + rng.uniform(0, 2 * np.pi))
    if np.abs(wave).max() < 1e-3:
        wave += 1.0
    return ScalarField(grid, env * wave)


def _sweep_trial(seed: int, trial: int, grid: Grid) -> list[dict]:
    rng = np.random.default_rng([seed, trial])
    f1, dx = random_field_1d(rng)
    wall = random_field_2d(rng, grid, at_wall=True)
    inner = random_field_2d(rng, grid, at_wall=False)
    rows = []
    for which in INEQUALITIES:
        if which == "L_inf_1d":
            chk = check_interp_inequality(which, f1, dx=dx, half_line=True)
        elif which == "GN":
            chk = check_interp_inequality(which, inner)
        else:
            chk = check_interp_inequality(which, wall if trial % 2 else inner)
        rows.append({"trial": trial, "which": which, "lhs": chk.lhs, "rhs": chk.rhs,
                     "holds": chk.holds})
    for name, ratio in zip(("equiv2", "equiv3"), norm_equivalence_check(wall)):
        rows.append({"trial": trial, "which": name, "lhs": ratio, "rhs": float("nan"),
                     "holds": EQUIV_BOUNDS[0] <= ratio <= EQUIV_BOUNDS[1]})
    return rows


EQUIV_BOUNDS = (0.2, 5.0)


def inequality_sweep(seed: int = 42, trials: int = 100, grid: Grid | None = None,
                     workers: int = 1) -> list[dict]:
    """Run every inequality on ``trials`` seeded fields; one row per (trial, kind).

    Trial ``i`` draws from its own generator seeded with ``(seed, i)``, so the
    rows do not depend on ``workers``.
    """
    grid = grid or Grid(160, 128, 20.0, 20.0)
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda i: _sweep_trial(seed, i, grid), range(trials)))
    else:
        parts = [_sweep_trial(seed, i, grid) for i in range(trials)]
    return [row for part in parts for row in part]


def calibrate_constant(which: str, samples) -> float:
    """Largest ``lhs / (rhs / C)`` over ``samples``, i.e. the smallest constant
    that makes every sample satisfy the inequality exactly."""
    best = 0.0
    for s in samples:
        kw = {}
        if which == "L_inf_1d":
            s, kw["dx"] = s
            kw["half_line"] = True
        chk = check_interp_inequality(which, s, constant=1.0, **kw)
        if chk.rhs > 0:
            best = max(best, chk.lhs / chk.rhs)
    return best


# -- decay fitting ----------------------------------------------------------------

class DecayFit(NamedTuple):
    exponent: float
    r2: float


def fit_decay_exponent(t, values, window_fraction: float = 0.5, min_samples: int = 10) -> DecayFit:
    """Least-squares slope of ``log value`` against ``log(1 + t)`` over the
    trailing ``window_fraction`` of the samples."""
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must be in (0, 1]")
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    n = int(math.ceil(window_fraction * t.size))
    if n < min_samples:
        raise WindowEmpty(f"only {n} samples in the fit window, need {min_samples}")
    t, values = t[-n:], values[-n:]
    if np.any(values <= 0):
        raise NonPositiveValue("decay fit needs strictly positive values")
    X = np.log1p(t)
    Y = np.log(values)
    Xc = X - X.mean()
    Yc = Y - Y.mean()
    sxx = float(Xc @ Xc)
    if sxx == 0:
        raise WindowEmpty("fit window has a single abscissa")
    slope = float(Xc @ Yc) / sxx
    ss_tot = float(Yc @ Yc)
    resid = Yc - slope * Xc
    r2 = 1.0 if ss_tot <= 1e-30 * max(1.0, float(Y @ Y)) else 1.0 - float(resid @ resid) / ss_tot
    return DecayFit(slope, r2)


# -- per-time record ----------------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    sup_v: float
    sup_vx: float
    sup_vy: float
    h0: float
    h1: float
    h2: float
    h3: float
    w_a0: float
    w_a1: float
    w_a2: float
    E: float
    D: float
    dissip_v: float
    dissip_gv: float
    sup_p1: float
    sup_p2: float
    sup_divp_x: float
    sup_divp_y: float
    bres: float
    cres: float
    m0sq: float
    malphasq: float

    @property
    def h_norms(self):
        return (self.h0, self.h1, self.h2, self.h3)

    @property
    def weighted(self):
        return (self.w_a0, self.w_a1, self.w_a2)

    def row(self) -> tuple:
        return astuple(self)


CSV_COLUMNS = tuple(f.name for f in fields(DiagnosticsRecord))


def initial_norms(v0: ScalarField, alpha: float) -> tuple[float, float]:
    """``(M_0^2, M_alpha^2)`` of the initial perturbation."""
    h3 = norm_hk(v0, 3) ** 2
    return h3, h3 + weighted_norm(v0, alpha, 2) ** 2


def snapshot(t: float, v: np.ndarray, p1: np.ndarray, p2: np.ndarray, divp: np.ndarray,
             ubar_x: np.ndarray, grid: Grid, alpha: float, u_minus: float,
             m0sq: float, malphasq: float) -> DiagnosticsRecord:
    tab = DerivativeTable(v, grid)
    levels = [_sq_level(tab, j) for j in range(4)]
    h = np.sqrt(np.cumsum(levels))
    wl = [_sq_level(tab, j, alpha) for j in range(3)]
    w = np.sqrt(np.cumsum(wl))
    E, D = _energy_terms(tab, t)
    ux = ubar_x[:, None]
    vx, vy = tab[1, 0], tab[0, 1]
    vx0 = vx[0]
    return DiagnosticsRecord(
        t=float(t),
        sup_v=float(np.abs(v).max()),
        sup_vx=float(np.abs(vx).max()),
        sup_vy=float(np.abs(vy).max()),
        h0=float(h[0]), h1=float(h[1]), h2=float(h[2]), h3=float(h[3]),
        w_a0=float(w[0]), w_a1=float(w[1]), w_a2=float(w[2]),
        E=E, D=D,
        dissip_v=integrate_array(ux * v * v, grid),
        dissip_gv=integrate_array(ux * (vx * vx + vy * vy), grid),
        sup_p1=float(np.abs(p1).max()),
        sup_p2=float(np.abs(p2).max()),
        sup_divp_x=float(np.abs(d1x(divp, grid.dx)).max()),
        sup_divp_y=float(np.abs(d1y(divp, grid.dy)).max()),
        bres=float(np.abs(divp[0] + u_minus * vx0).max()),
        cres=curl_residual(p1, p2, grid),
        m0sq=float(m0sq),
        malphasq=float(malphasq),
    )


def apriori_rate(v: np.ndarray, p1: np.ndarray, p2: np.ndarray, divp: np.ndarray, grid: Grid) -> float:
    """Integrand ``|grad v|_{H^1}^2 + |div p|^2 + |p|^2`` of the a priori monitor."""
    tab = DerivativeTable(v, grid)
    s = _sq_level(tab, 1) + _sq_level(tab, 2)
    return s + integrate_array(divp * divp + p1 * p1 + p2 * p2, grid)


def h2_sq(v: np.ndarray, grid: Grid) -> float:
    tab = DerivativeTable(v, grid)
    return sum(_sq_level(tab, j) for j in range(3))


def profile_weight_ratio(v: np.ndarray, dkubar, delta: float, grid: Grid) -> list[float]:
    """``integral |d_x^j ubar|^2 v^2 / (delta |v_x|^2)`` for each profile derivative given.

    ``dkubar`` holds 1D arrays on the x nodes (``j = 1, 2, ...``).  With
    ``v = 0`` at the wall these ratios stay bounded; a zero denominator gives 0.
    """
    den = delta * integrate_array(d1x(v, grid.dx) ** 2, grid)
    out = []
    for d in dkubar:
        num = integrate_array((np.asarray(d)[:, None] ** 2) * v * v, grid)
        out.append(float(num / den) if den > 0 else 0.0)
    return out
