"""Command-line entry point ``radgas``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 a verification assertion failed.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from . import io
from .elliptic import mms_study
from .errors import ConfigError, EndpointError, RadgasError, TruncationTooShort
from .evolution import RunAborted, initial_norms, initialize, run
from .flux import FluxConfig
from .stationary import (EndpointStates, elliptic_residual, first_integral_residual,
                         shoot_profile)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ASSERTION = 4

log = logging.getLogger("radgas")


def worker_count() -> int:
    raw = os.environ.get("RADGAS_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"RADGAS_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ConfigError("RADGAS_THREADS must be nonnegative")
    return n if n > 0 else (os.cpu_count() or 1)


def cmd_stationary(args) -> int:
    try:
        ep = EndpointStates(args.u_minus, args.u_plus)
    except RadgasError as exc:
        raise ConfigError(str(exc)) from exc
    cfg = FluxConfig()
    prof = shoot_profile(cfg, ep, args.lx, args.n)
    out = Path(args.out)
    data = np.column_stack([prof.grid_x, prof.ubar, prof.qbar, prof.dkubar[1], prof.dkubar[2]])
    np.savetxt(out, data, delimiter=",", header="x,ubar,qbar,ubar_x,ubar_xx", comments="", fmt="%.17g")
    print(f"case {prof.case_tag}  wall slope {prof.wall_slope:.12g}")
    print(f"first-integral residual {first_integral_residual(cfg, prof):.3e}")
    print(f"ODE residual            {elliptic_residual(prof):.3e}")
    print(f"wrote {out}")
    return EXIT_OK


def _resume_inputs(cfg, ckpt, manifest_path, step):
    state = io.restore(ckpt, cfg)
    m_norms = initial_norms(cfg, initialize(cfg, state.profile))
    integral = 0.0
    if manifest_path:
        extra = io.read_manifest(manifest_path).get("extra", {})
        step = int(extra.get("checkpoint_step", step))
        integral = float(extra.get("apriori_integral", 0.0))
    return dict(state=state, m_norms=m_norms, apriori_integral=integral, start_step=step,
                emit_initial=False)


def cmd_evolve(args) -> int:
    cfg = io.parse_config(args.config)
    if args.t_end is not None:
        cfg = replace(cfg, t_end=args.t_end)
    manifest = io.new_manifest(Path(args.config).stem, cfg)
    out = Path(args.out)
    kwargs = {}
    if args.resume:
        kwargs = _resume_inputs(cfg, args.resume, args.resume_manifest, args.resume_step)
    ckpt = Path(args.checkpoint) if args.checkpoint else None
    writer = io.SeriesWriter(out)

    def on_record(rec):
        writer.write(rec.diag)

    try:
        records, state, integral = run(cfg, full=True, on_record=on_record,
                                       max_steps=args.max_steps, **kwargs)
    except RunAborted as exc:
        writer.close()
        print(f"run aborted: {exc.cause}", file=sys.stderr)
        return EXIT_NUMERICAL
    writer.close()
    outputs = [str(out)]
    if ckpt is not None:
        io.checkpoint(state, ckpt)
        outputs.append(str(ckpt))
        manifest.extra.update(checkpoint_step=state.steps, apriori_integral=integral)
    manifest.end = time.time()
    manifest.outputs = outputs
    if args.manifest:
        manifest.write(args.manifest)
    print(f"wrote {len(records)} records to {out}")
    return EXIT_OK


def cmd_verify_rates(args) -> int:
    cols = io.read_columns(args.series)
    names = args.column or ["sup_v", "sup_vx", "sup_vy", "sup_p2"]
    expects = args.expect or []
    if expects and len(expects) not in (1, len(names)):
        raise ConfigError("--expect needs one value or one per --column")
    if len(expects) == 1:
        expects = expects * len(names)
    failed = False
    print(f"{'column':<12} {'exponent':>10} {'r2':>8} {'expect':>8}  result")
    for i, name in enumerate(names):
        if name not in cols:
            raise ConfigError(f"column {name!r} not in {args.series}")
        fit = dg.fit_decay_exponent(cols["t"], cols[name], args.window)
        if expects:
            ok = abs(fit.exponent - expects[i]) <= args.tol
            failed |= not ok
            print(f"{name:<12} {fit.exponent:>10.4f} {fit.r2:>8.4f} {expects[i]:>8.3f}  "
                  f"{'PASS' if ok else 'FAIL'}")
        else:
            print(f"{name:<12} {fit.exponent:>10.4f} {fit.r2:>8.4f} {'-':>8}  -")
    return EXIT_ASSERTION if failed else EXIT_OK


def cmd_check_inequalities(args) -> int:
    rows = dg.inequality_sweep(args.seed, args.trials, workers=worker_count())
    bad = [r for r in rows if not r["holds"]]
    kinds = dict.fromkeys(r["which"] for r in rows)
    print(f"{'check':<10} {'worst':>10} {'violations':>11}")
    for k in kinds:
        sel = [r for r in rows if r["which"] == k]
        if k.startswith("equiv"):
            worst = f"{min(r['lhs'] for r in sel):.3f}-{max(r['lhs'] for r in sel):.3f}"
        else:
            worst = f"{max(r['lhs'] / r['rhs'] if r['rhs'] > 0 else 0.0 for r in sel):.4f}"
        print(f"{k:<10} {worst:>10} {sum(not r['holds'] for r in sel):>11}")
    return EXIT_ASSERTION if bad else EXIT_OK


def cmd_elliptic_mms(args) -> int:
    rows = mms_study(levels=args.levels)
    print(f"{'h':>10} {'error':>12} {'ratio':>8}")
    ok = True
    for h, err, ratio in rows:
        print(f"{h:>10.5f} {err:>12.4e} {ratio:>8.3f}" if np.isfinite(ratio) else
              f"{h:>10.5f} {err:>12.4e} {'-':>8}")
        if np.isfinite(ratio):
            ok &= 3.5 <= ratio <= 4.5
    return EXIT_OK if ok else EXIT_ASSERTION


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="radgas", description="Radiating-gas half-space simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stationary", help="solve the planar stationary profile")
    s.add_argument("--u-minus", type=float, default=-1.0)
    s.add_argument("--u-plus", type=float, default=-0.2)
    s.add_argument("--lx", type=float, default=80.0)
    s.add_argument("--n", type=int, default=4096)
    s.add_argument("--out", default="profile.csv")
    s.set_defaults(func=cmd_stationary)

    e = sub.add_parser("evolve", help="run the time-dependent problem")
    e.add_argument("--config", required=True)
    e.add_argument("--out", default="series.csv")
    e.add_argument("--t-end", type=float)
    e.add_argument("--max-steps", type=int)
    e.add_argument("--checkpoint", help="write the final state here")
    e.add_argument("--resume", help="continue from this checkpoint")
    e.add_argument("--resume-step", type=int, default=0,
                   help="global step index of the checkpoint")
    e.add_argument("--resume-manifest",
                   help="manifest written with the checkpoint (supplies the step index)")
    e.add_argument("--manifest")
    e.set_defaults(func=cmd_evolve)

    v = sub.add_parser("verify-rates", help="fit decay exponents in a series CSV")
    v.add_argument("--series", required=True)
    v.add_argument("--column", action="append")
    v.add_argument("--expect", type=float, action="append")
    v.add_argument("--tol", type=float, default=0.15)
    v.add_argument("--window", type=float, default=0.5)
    v.set_defaults(func=cmd_verify_rates)

    c = sub.add_parser("check-inequalities", help="seeded interpolation-inequality sweep")
    c.add_argument("--seed", type=int, default=42)
    c.add_argument("--trials", type=int, default=100)
    c.set_defaults(func=cmd_check_inequalities)

    m = sub.add_parser("elliptic-mms", help="manufactured-solution convergence table")
    m.add_argument("--levels", type=int, default=4)
    m.set_defaults(func=cmd_elliptic_mms)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, EndpointError, TruncationTooShort) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RadgasError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
