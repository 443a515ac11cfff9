"""Configuration files, series CSV, binary checkpoints and run manifests.

Config grammar: one ``key = value`` per line; ``#`` starts a comment; blank
lines are ignored.  Omitted keys take the values in :data:`DEFAULTS`.
"""
from __future__ import annotations

import csv
import json
import math
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .diagnostics import CSV_COLUMNS, DiagnosticsRecord
from .errors import (BadMagic, CheckpointError, ParseError, RadgasError, ShapeMismatch,
                     TruncatedFile, ValidationError)
from .evolution import Background, Perturbation, SimConfig, SimState
from .flux import FluxConfig
from .grid import Grid, ScalarField, VectorField
from .stationary import EndpointStates

__version__ = "0.1.0"

DEFAULTS = {
    "u_minus": -1.0,
    "u_plus": -0.2,
    "flux.f": "burgers",
    "flux.g": "burgers",
    "flux.g_coeff": 0.0,
    "grid.nx": 512,
    "grid.ny": 64,
    "grid.lx": 128.0,
    "grid.ly": 16.0,
    "cfl": 0.4,
    "t_end": 10.0,
    "bc": "compatibility",
    "alpha": 1.0,
    "perturbation.kind": "none",
    "perturbation.amp": 0.0,
    "perturbation.x0": 5.0,
    "perturbation.y0": 0.0,
    "perturbation.sx": 1.0,
    "perturbation.sy": 1.0,
    "perturbation.beta": 1.0,
    "record_every": 10,
    "seed": 0,
}
_STR_KEYS = {"flux.f", "flux.g", "bc", "perturbation.kind"}
_INT_KEYS = {"grid.nx", "grid.ny", "record_every", "seed"}


def _convert(key, raw, lineno):
    if key in _STR_KEYS:
        return raw
    try:
        if key in _INT_KEYS:
            return int(raw)
        value = float(raw)
    except ValueError:
        kind = "an integer" if key in _INT_KEYS else "a number"
        raise ParseError(lineno, f"{key} must be {kind}, got {raw!r}") from None
    if not math.isfinite(value):
        raise ParseError(lineno, f"{key} must be finite")
    return value


def parse_config_text(text: str) -> SimConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ParseError(lineno, f"unknown key {key!r}")
        if key in values:
            raise ParseError(lineno, f"duplicate key {key!r}")
        if not raw:
            raise ParseError(lineno, f"missing value for {key!r}")
        values[key] = _convert(key, raw, lineno)
    return build_config({**DEFAULTS, **values})


def parse_config(path) -> SimConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def build_config(v: dict) -> SimConfig:
    """SimConfig from a flat key/value mapping; invariant violations become ValidationError."""
    try:
        return SimConfig(
            endpoints=EndpointStates(float(v["u_minus"]), float(v["u_plus"])),
            grid=Grid(int(v["grid.nx"]), int(v["grid.ny"]), float(v["grid.lx"]), float(v["grid.ly"])),
            flux=FluxConfig(f_kind=v["flux.f"], g_kind=v["flux.g"], g_coeff=float(v["flux.g_coeff"])),
            cfl=float(v["cfl"]),
            t_end=float(v["t_end"]),
            bc=v["bc"],
            weight_alpha=float(v["alpha"]),
            perturbation=Perturbation(
                kind=v["perturbation.kind"], amp=float(v["perturbation.amp"]),
                x0=float(v["perturbation.x0"]), y0=float(v["perturbation.y0"]),
                sx=float(v["perturbation.sx"]), sy=float(v["perturbation.sy"]),
                beta=float(v["perturbation.beta"])),
            record_every=int(v["record_every"]),
            seed=int(v["seed"]),
        )
    except (ValueError, RadgasError) as exc:
        raise ValidationError(str(exc)) from exc


def config_items(cfg: SimConfig) -> list[tuple[str, object]]:
    p = cfg.perturbation
    return [
        ("u_minus", cfg.endpoints.u_minus),
        ("u_plus", cfg.endpoints.u_plus),
        ("flux.f", cfg.flux.f_kind),
        ("flux.g", cfg.flux.g_kind),
        ("flux.g_coeff", cfg.flux.g_coeff),
        ("grid.nx", cfg.grid.nx),
        ("grid.ny", cfg.grid.ny),
        ("grid.lx", cfg.grid.lx),
        ("grid.ly", cfg.grid.ly),
        ("cfl", cfg.cfl),
        ("t_end", cfg.t_end),
        ("bc", cfg.bc),
        ("alpha", cfg.weight_alpha),
        ("perturbation.kind", p.kind),
        ("perturbation.amp", p.amp),
        ("perturbation.x0", p.x0),
        ("perturbation.y0", p.y0),
        ("perturbation.sx", p.sx),
        ("perturbation.sy", p.sy),
        ("perturbation.beta", p.beta),
        ("record_every", cfg.record_every),
        ("seed", cfg.seed),
    ]


def emit_config(cfg: SimConfig) -> str:
    return "".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n"
                   for k, v in config_items(cfg))


# -- series CSV ---------------------------------------------------------------------

def write_series(records, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for rec in records:
                w.writerow([repr(float(x)) for x in rec.row()])
    except OSError as exc:
        raise OSError(f"cannot write series {path}: {exc}") from exc


class SeriesWriter:
    """Streaming variant of :func:`write_series`; rows are flushed as they arrive."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = self.path.open("w", newline="")
        self._w = csv.writer(self._fh, lineterminator="\n")
        self._w.writerow(CSV_COLUMNS)

    def write(self, rec: DiagnosticsRecord) -> None:
        self._w.writerow([repr(float(x)) for x in rec.row()])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_series(path) -> list[DiagnosticsRecord]:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise OSError(f"cannot read series {path}: {exc}") from exc
    if not rows or tuple(rows[0]) != CSV_COLUMNS:
        raise ValidationError(f"{path}: header does not match the series schema")
    return [DiagnosticsRecord(*map(float, r)) for r in rows[1:]]


def read_columns(path) -> dict[str, np.ndarray]:
    """Columns of a series CSV by name (extra columns are allowed)."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(x) for x in r] for r in reader]).reshape(-1, len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


# -- checkpoints --------------------------------------------------------------------

MAGIC = "RADGAS1"
_F8 = np.dtype("<f8")


def checkpoint(state: SimState, path) -> None:
    """Header ``RADGAS1 nx ny dx dy t`` then u, r, q1, q2 as little-endian
    float64, x index fastest.  Each array holds ``(nx + 1) * ny`` values."""
    g = state.u.grid
    header = f"{MAGIC} {g.nx} {g.ny} {g.dx!r} {g.dy!r} {float(state.t)!r}\n"
    with Path(path).open("wb") as fh:
        fh.write(header.encode("ascii"))
        for a in (state.u.values, state.r.values, state.q.comp1, state.q.comp2):
            fh.write(np.asarray(a, dtype=_F8).ravel(order="F").tobytes())


def read_checkpoint(path):
    """``(nx, ny, dx, dy, t, [u, r, q1, q2])`` exactly as stored."""
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0 or not raw.startswith(MAGIC.encode() + b" "):
        raise BadMagic(f"{path}: not a {MAGIC} checkpoint")
    parts = raw[:nl].decode("ascii", errors="replace").split()
    if len(parts) != 6:
        raise BadMagic(f"{path}: malformed header")
    try:
        nx, ny = int(parts[1]), int(parts[2])
        dx, dy, t = (float(s) for s in parts[3:])
    except ValueError as exc:
        raise BadMagic(f"{path}: malformed header") from exc
    if nx < 1 or ny < 1:
        raise ShapeMismatch(f"{path}: invalid shape {nx}x{ny}")
    body = raw[nl + 1:]
    per = (nx + 1) * ny * _F8.itemsize
    if len(body) != 4 * per:
        # a body that fits some other whole grid means the header was edited;
        # anything else was cut short
        whole = len(body) % (4 * ny * _F8.itemsize) == 0
        if len(body) > 4 * per or whole:
            raise ShapeMismatch(f"{path}: {len(body)} data bytes, header implies {4 * per}")
        raise TruncatedFile(f"{path}: {len(body)} data bytes, expected {4 * per}")
    arrays = [np.frombuffer(body, dtype=_F8, count=(nx + 1) * ny, offset=k * per)
              .reshape((nx + 1, ny), order="F").astype(float) for k in range(4)]
    return nx, ny, dx, dy, t, arrays


def restore(path, cfg: SimConfig | None = None, background: Background | None = None) -> SimState:
    """Rebuild a state from a checkpoint without recomputing any field.

    With ``cfg`` the stationary background is attached so the state can be
    stepped; the grid in the file must match ``cfg.grid``.
    """
    nx, ny, dx, dy, t, (u, r, q1, q2) = read_checkpoint(path)
    if cfg is not None:
        g = cfg.grid
        if (g.nx, g.ny) != (nx, ny) or g.dx != dx or g.dy != dy:
            raise ShapeMismatch(f"{path}: grid {nx}x{ny} does not match the configuration")
    else:
        g = Grid(nx, ny, nx * dx, ny * dy)
    try:
        uf, rf, qf = ScalarField(g, u), ScalarField(g, r), VectorField(g, q1, q2)
    except RadgasError as exc:
        raise CheckpointError(f"{path}: {exc}") from exc
    if cfg is not None and background is None:
        background = Background(cfg)
    profile = background.profile if background is not None else None
    return SimState(t, uf, qf, rf, profile, background)


# -- manifest -----------------------------------------------------------------------

@dataclass
class RunManifest:
    scenario: str
    config: list = field(default_factory=list)
    version: str = __version__
    start: float = 0.0
    end: float = 0.0
    outputs: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def write(self, path) -> None:
        missing = [p for p in self.outputs if not Path(p).exists()]
        if missing:
            raise CheckpointError(f"manifest lists missing outputs: {missing}")
        data = asdict(self)
        data["python"] = platform.python_version()
        data["numpy"] = np.__version__
        Path(path).write_text(json.dumps(data, indent=2) + "\n")


def new_manifest(scenario: str, cfg: SimConfig | None = None) -> RunManifest:
    items = [[k, v] for k, v in config_items(cfg)] if cfg is not None else []
    return RunManifest(scenario=scenario, config=items, start=time.time())


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())


def config_from_manifest(data: dict) -> SimConfig:
    return build_config({**DEFAULTS, **{k: v for k, v in data["config"]}})
