"""Named reference configurations used by the CLI, the tests and the acceptance run."""
from __future__ import annotations

from dataclasses import replace

from .evolution import Perturbation, SimConfig
from .grid import Grid
from .stationary import EndpointStates

ND_ENDPOINTS = EndpointStates(-1.0, -0.2)
D_ENDPOINTS = EndpointStates(-0.5, 0.0)


def nd_reference(t_end: float = 200.0, amp: float = 0.005) -> SimConfig:
    """Nondegenerate run on a 512x64 strip with a small localized bump."""
    grid = Grid(512, 64, 128.0, 16.0)
    return SimConfig(
        endpoints=ND_ENDPOINTS,
        grid=grid,
        cfl=0.4,
        t_end=t_end,
        weight_alpha=1.0,
        perturbation=Perturbation("gaussian", amp, x0=5.0, y0=grid.ly / 2, sx=1.0, sy=1.0),
        record_every=20,
    )


def _wide_strip(endpoints: EndpointStates, t_end: float) -> SimConfig:
    # A narrow periodic strip damps every y-mode at a fixed rate, so the
    # algebraic late-time regime needs ly large compared with the run time.
    grid = Grid(256, 128, 128.0, 256.0)
    return SimConfig(
        endpoints=endpoints,
        grid=grid,
        cfl=0.4,
        t_end=t_end,
        weight_alpha=0.0,
        perturbation=Perturbation("gaussian", 0.005, x0=20.0, y0=grid.ly / 2, sx=15.0, sy=6.0),
        record_every=25,
    )


def nd_decay(t_end: float = 300.0) -> SimConfig:
    return _wide_strip(ND_ENDPOINTS, t_end)


def d_decay(t_end: float = 300.0) -> SimConfig:
    return _wide_strip(D_ENDPOINTS, t_end)


def small(t_end: float = 2.0, kind: str = "gaussian") -> SimConfig:
    """Cheap configuration for smoke tests."""
    grid = Grid(128, 16, 64.0, 8.0)
    pert = Perturbation(kind, 0.005, x0=5.0, y0=4.0, sx=1.0, sy=1.0) if kind != "none" else Perturbation()
    return SimConfig(endpoints=ND_ENDPOINTS, grid=grid, t_end=t_end, perturbation=pert,
                     record_every=5)


SCENARIOS = {
    "nd_reference": nd_reference,
    "nd_decay": nd_decay,
    "d_decay": d_decay,
    "small": small,
}


def with_time(cfg: SimConfig, t_end: float) -> SimConfig:
    return replace(cfg, t_end=t_end)
