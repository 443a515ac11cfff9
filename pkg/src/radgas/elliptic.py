"""The elliptic part ``-grad div q + q + grad u = 0``.

Taking the divergence gives a screened Poisson problem for ``r = div q``,

    (I - Laplacian) r = -Laplacian u,

solved on the half strip by an FFT in the periodic y direction followed by a
tridiagonal solve in x for every Fourier mode.  ``q`` is then recovered as
``grad r - grad u``.  Two oracles are provided for verification: a dense
direct solve of the same discrete system and an exact spectral inversion on
a doubly periodic torus.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg.lapack import dgtsv

from .errors import GridMismatch, GridTooLarge, NonPeriodicGrid
from .grid import Grid, ScalarField, Torus, VectorField, d1x, d1y, d2x, d2y

COMPATIBILITY = "compatibility"
HOMOGENEOUS = "homogeneous"
DENSE_LIMIT = 4096


@dataclass(frozen=True)
class EllipticBC:
    """Wall condition for ``r``.

    ``compatibility``: ``r(0, y) = -wall_speed * u_x(0, y)`` with
    ``wall_speed = f'(u_minus)``; ``homogeneous``: ``r(0, y) = 0``.
    """

    kind: str = COMPATIBILITY
    wall_speed: float = 0.0

    def __post_init__(self):
        if self.kind not in (COMPATIBILITY, HOMOGENEOUS):
            raise ValueError(f"unknown boundary condition {self.kind!r}")

    def wall_values(self, u: np.ndarray, dx: float) -> np.ndarray:
        if self.kind == HOMOGENEOUS:
            return np.zeros(u.shape[1])
        ux0 = (-3 * u[0] + 4 * u[1] - u[2]) / (2 * dx)
        return -self.wall_speed * ux0


def mode_wavenumbers_sq(ny: int, dy: float) -> np.ndarray:
    """Eigenvalues of the periodic three-point ``-d^2/dy^2`` for the rfft modes."""
    k = np.arange(ny // 2 + 1)
    return (2 * np.sin(np.pi * k / ny) / dy) ** 2


@lru_cache(maxsize=16)
def _factor(nx: int, ny: int, dx: float, dy: float):
    """Thomas factorisation of ``-d2/dx2 + (1 + kappa^2)`` for every mode.

    The matrices do not change in time, so the pivots and multipliers are
    computed once per grid.  Returns ``(pivots, mult)`` of shape
    ``(nx - 1, nmodes)``.
    """
    kap2 = mode_wavenumbers_sq(ny, dy)
    off = -1.0 / dx**2
    diag = 2.0 / dx**2 + 1.0 + kap2
    n = nx - 1
    piv = np.empty((n, kap2.size))
    mult = np.empty((n, kap2.size))
    piv[0] = diag
    mult[0] = 0.0
    for i in range(1, n):
        mult[i] = off / piv[i - 1]
        piv[i] = diag - mult[i] * off
    piv.setflags(write=False)
    mult.setflags(write=False)
    return piv, mult


def mode_pivots(grid: Grid) -> np.ndarray:
    return _factor(grid.nx, grid.ny, grid.dx, grid.dy)[0]


def _thomas_solve(grid: Grid, rhs_hat: np.ndarray) -> np.ndarray:
    """Solve all mode systems at once; ``rhs_hat`` has shape ``(nx-1, nmodes)``."""
    piv, mult = _factor(grid.nx, grid.ny, grid.dx, grid.dy)
    off = -1.0 / grid.dx**2
    n = rhs_hat.shape[0]
    z = np.empty_like(rhs_hat)
    z[0] = rhs_hat[0]
    for i in range(1, n):
        z[i] = rhs_hat[i] - mult[i] * z[i - 1]
    out = np.empty_like(rhs_hat)
    out[-1] = z[-1] / piv[-1]
    for i in range(n - 2, -1, -1):
        out[i] = (z[i] - off * out[i + 1]) / piv[i]
    return out


@lru_cache(maxsize=16)
def _stacked_bands(nx: int, ny: int, dx: float, dy: float):
    """Bands of all mode systems stacked into one block-diagonal tridiagonal matrix."""
    n = nx - 1
    kap2 = mode_wavenumbers_sq(ny, dy)
    d = np.repeat(2.0 / dx**2 + 1.0 + kap2, n)
    off = np.full(d.size - 1, -1.0 / dx**2)
    off[n - 1::n] = 0.0
    return off, d


def _lapack_solve(grid: Grid, rhs_hat: np.ndarray) -> np.ndarray:
    n, m = rhs_hat.shape
    off, d = _stacked_bands(grid.nx, grid.ny, grid.dx, grid.dy)
    b = np.empty((n * m, 2))
    b[:, 0] = rhs_hat.real.T.ravel()
    b[:, 1] = rhs_hat.imag.T.ravel()
    *_, x, info = dgtsv(off, d, off, b)
    if info:
        raise np.linalg.LinAlgError(f"dgtsv failed with info={info}")
    return (x[:, 0] + 1j * x[:, 1]).reshape(m, n).T


def neg_laplacian_interior(u: np.ndarray, dx: float, dy: float) -> np.ndarray:
    return -((u[2:] - 2 * u[1:-1] + u[:-2]) / dx**2 + d2y(u[1:-1], dy))


def solve_screened(grid: Grid, rhs: np.ndarray, left: np.ndarray, right: np.ndarray,
                   method: str = "lapack") -> np.ndarray:
    """``(I - Laplacian_h) r = rhs`` at interior nodes with Dirichlet x-ends.

    ``rhs`` has shape ``(nx-1, ny)``; ``left``/``right`` are the traces at
    ``x = 0`` and ``x = lx``.  ``method="thomas"`` runs the batched Thomas
    sweep instead of LAPACK ``gtsv``; both eliminate the same SPD systems.
    """
    left = np.broadcast_to(np.asarray(left, float), (grid.ny,))
    right = np.broadcast_to(np.asarray(right, float), (grid.ny,))
    b = np.array(rhs, dtype=float, copy=True)
    b[0] += left / grid.dx**2
    b[-1] += right / grid.dx**2
    b_hat = np.fft.rfft(b, axis=1)
    solve = _thomas_solve if method == "thomas" else _lapack_solve
    r_int = np.fft.irfft(solve(grid, b_hat), n=grid.ny, axis=1)
    r = np.empty(grid.shape)
    r[0] = left
    r[-1] = right
    r[1:-1] = r_int
    return r


def _check_pow2(n):
    if n & (n - 1):
        raise GridMismatch(f"ny={n} must be a power of two")


def divq_array(u: np.ndarray, grid: Grid, bc: EllipticBC, far_value: float) -> np.ndarray:
    """Array-level fast path used inside the time loop."""
    rhs = neg_laplacian_interior(u, grid.dx, grid.dy)
    return solve_screened(grid, rhs, bc.wall_values(u, grid.dx), far_value)


def solve_divq_halfstrip(u: ScalarField, bc: EllipticBC, far_value: float = 0.0) -> ScalarField:
    """``r = div q`` from ``(I - Laplacian) r = -Laplacian u`` on the half strip.

    The far end carries ``far_value`` on the y-mean mode only (the trace is
    constant in y).
    """
    grid = u.grid
    if not isinstance(grid, Grid):
        raise GridMismatch("half-strip solve needs a half-strip Grid")
    _check_pow2(grid.ny)
    return ScalarField(grid, divq_array(u.values, grid, bc, far_value))


def reconstruct_q(u: ScalarField, r: ScalarField) -> VectorField:
    if u.grid != r.grid:
        raise GridMismatch("u and r live on different grids")
    q1, q2 = q_arrays(u.values, r.values, u.grid)
    return VectorField(u.grid, q1, q2)


def q_arrays(u: np.ndarray, r: np.ndarray, grid: Grid):
    w = r - u
    return d1x(w, grid.dx), d1y(w, grid.dy)


def discrete_residual(u: ScalarField, r: ScalarField) -> float:
    """Relative max residual of ``(I - Laplacian_h) r + Laplacian_h u`` at interior nodes."""
    g = u.grid
    lap = lambda a: d2x(a, g.dx) + d2y(a, g.dy)  # noqa: E731
    res = (r.values - lap(r.values) + lap(u.values))[1:-1]
    scale = max(np.abs(r.values).max(), np.abs(lap(u.values)[1:-1]).max(), 1e-300)
    return float(np.abs(res).max() / scale)


def dense_direct_oracle(u: ScalarField, bc: EllipticBC, far_value: float = 0.0) -> ScalarField:
    """Same discrete problem, assembled as a dense matrix and solved directly."""
    g = u.grid
    if g.nx * g.ny > DENSE_LIMIT:
        raise GridTooLarge(f"{g.nx}x{g.ny} exceeds the dense oracle limit of {DENSE_LIMIT} nodes")
    nxp, ny = g.nx + 1, g.ny
    N = nxp * ny
    idx = np.arange(N).reshape(nxp, ny)
    A = np.zeros((N, N))
    b = np.zeros(N)
    lap_u = d2x(u.values, g.dx) + d2y(u.values, g.dy)
    left = bc.wall_values(u.values, g.dx)
    cx, cy = 1.0 / g.dx**2, 1.0 / g.dy**2
    for j in range(ny):
        A[idx[0, j], idx[0, j]] = 1.0
        b[idx[0, j]] = left[j]
        A[idx[-1, j], idx[-1, j]] = 1.0
        b[idx[-1, j]] = far_value
        for i in range(1, nxp - 1):
            row = idx[i, j]
            A[row, row] = 1.0 + 2 * cx + 2 * cy
            A[row, idx[i - 1, j]] -= cx
            A[row, idx[i + 1, j]] -= cx
            A[row, idx[i, (j - 1) % ny]] -= cy
            A[row, idx[i, (j + 1) % ny]] -= cy
            b[row] = -lap_u[i, j]
    r = np.linalg.solve(A, b)
    return ScalarField(g, r.reshape(nxp, ny))


# -- periodic spectral oracle ----------------------------------------------------

def _wavenumbers(torus: Torus):
    kx = 2 * np.pi * np.fft.fftfreq(torus.nx, d=torus.dx)
    ky = 2 * np.pi * np.fft.fftfreq(torus.ny, d=torus.dy)
    KX, KY = np.meshgrid(kx, ky, indexing="ij")
    # first derivatives of the Nyquist mode are set to zero to keep fields real
    dKX, dKY = KX.copy(), KY.copy()
    if torus.nx % 2 == 0:
        dKX[torus.nx // 2, :] = 0.0
    if torus.ny % 2 == 0:
        dKY[:, torus.ny // 2] = 0.0
    return KX, KY, dKX, dKY


def solve_q_periodic_oracle(u: ScalarField) -> VectorField:
    """``q = -(1 - Laplacian)^{-1} grad u`` by exact Fourier inversion."""
    torus = u.grid
    if not isinstance(torus, Torus):
        raise NonPeriodicGrid("the spectral oracle needs a doubly periodic Torus")
    KX, KY, dKX, dKY = _wavenumbers(torus)
    uh = np.fft.fft2(u.values)
    denom = 1.0 + KX**2 + KY**2
    q1 = np.fft.ifft2(-1j * dKX * uh / denom).real
    q2 = np.fft.ifft2(-1j * dKY * uh / denom).real
    return VectorField(torus, q1, q2)


def divq_periodic_array(u: np.ndarray, torus: Torus) -> np.ndarray:
    """``div q = (-Laplacian)(1 - Laplacian)^{-1} u`` spectrally; zero mean exactly."""
    KX, KY, _, _ = _wavenumbers(torus)
    k2 = KX**2 + KY**2
    return np.fft.ifft2(k2 / (1.0 + k2) * np.fft.fft2(u)).real


def periodic_vector_residual(u: ScalarField, q: VectorField) -> float:
    """Max of ``|-grad div q + q + grad u|`` evaluated spectrally."""
    torus = u.grid
    _, _, dKX, dKY = _wavenumbers(torus)
    q1h, q2h, uh = np.fft.fft2(q.comp1), np.fft.fft2(q.comp2), np.fft.fft2(u.values)
    div_h = 1j * dKX * q1h + 1j * dKY * q2h
    res1 = np.fft.ifft2(-1j * dKX * div_h + q1h + 1j * dKX * uh).real
    res2 = np.fft.ifft2(-1j * dKY * div_h + q2h + 1j * dKY * uh).real
    return float(max(np.abs(res1).max(), np.abs(res2).max()))


# -- manufactured solution -------------------------------------------------------

def mms_single_mode(grid: Grid):
    """Exact pair for ``u = exp(-x) cos(2 pi y / ly)``.

    With ``k = 2 pi / ly`` the mode equation ``-r'' + (1+k^2) r = -(1-k^2) u``
    has the particular solution ``r = (k^2 - 1)/k^2 * u``; Dirichlet data are
    taken from it.
    """
    k = 2 * np.pi / grid.ly
    X, Y = grid.mesh()
    u = np.exp(-X) * np.cos(k * Y)
    r = (k * k - 1) / (k * k) * u
    return u, r


def mms_error(nx: int, ny: int, lx: float = 4.0, ly: float = 2 * np.pi) -> float:
    grid = Grid(nx, ny, lx, ly)
    u, r_exact = mms_single_mode(grid)
    rhs = neg_laplacian_interior(u, grid.dx, grid.dy)
    r = solve_screened(grid, rhs, r_exact[0], r_exact[-1])
    return float(np.abs(r - r_exact).max())


def mms_study(levels: int = 4, nx0: int = 16, ny0: int = 8, lx: float = 4.0,
              ly: float = 2 * np.pi) -> list[tuple[float, float, float]]:
    """Rows ``(h, max_error, ratio)`` under simultaneous halving of dx and dy."""
    rows = []
    prev = None
    for level in range(levels):
        nx, ny = nx0 * 2**level, ny0 * 2**level
        err = mms_error(nx, ny, lx, ly)
        ratio = prev / err if prev is not None else float("nan")
        rows.append((lx / nx, err, ratio))
        prev = err
    return rows
