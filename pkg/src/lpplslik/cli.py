"""Command-line front end: fit, profile, multiscale, synth.

Every output file embeds the fully resolved configuration; wall-clock
timestamps live only in the run metadata file so that identical inputs and
configuration give byte-identical result files.

Exit codes: 0 success, 2 usage error, 3 data error, 4 convergence failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from . import __version__, intervals, likelihood, model, multiscale, series, synthetic
from .calibrate import DegenerateDesignError, full_mle, profile_f2
from .likelihood import (
    fisher_blocks,
    modified_profile_likelihood,
    sigma2_mle,
    sigma2_unbiased,
)
from .series import CsvError, EmptyWindowError

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4


class DataError(Exception):
    pass


class ConvergenceError(Exception):
    pass


def _add_common_io(p: argparse.ArgumentParser):
    p.add_argument("--input", required=True, help="CSV with header date,close")
    p.add_argument("--t2", required=True, help="analysis date (ISO)")
    p.add_argument("--out-dir", default=".", help="output directory")
    p.add_argument("--format", choices=["json", "csv"], default="json",
                   help="primary report format")
    p.add_argument("--fill-gaps", type=int, default=0, metavar="DAYS",
                   help="carry previous close over holiday gaps up to DAYS "
                        "missing business days (0 disables)")
    p.add_argument("--min-observations", type=int, default=series.DEFAULT_MIN_OBSERVATIONS)
    p.add_argument("--filter", choices=["strict", "confidence", "none"],
                   default="strict", help="qualification mode for reporting")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)


def _add_tc_grid(p: argparse.ArgumentParser):
    p.add_argument("--tc-min-offset", type=float, default=-50.0)
    p.add_argument("--tc-max-offset", type=float, default=150.0)
    p.add_argument("--tc-step", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lpplslik",
        description="LPPLS calibration and likelihood inference of the "
                    "critical time")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="point estimates on one window")
    _add_common_io(p_fit)
    _add_tc_grid(p_fit)
    p_fit.add_argument("--window-days", type=int, required=True)
    p_fit.add_argument("--cutoff", type=float, action="append",
                       help="relative-likelihood cutoff (repeatable, "
                            "default 0.05)")

    p_prof = sub.add_parser("profile", help="tc likelihood curves and intervals")
    _add_common_io(p_prof)
    _add_tc_grid(p_prof)
    p_prof.add_argument("--window-days", type=int, required=True)
    p_prof.add_argument("--cutoff", type=float, action="append")

    p_ms = sub.add_parser("multiscale", help="window-size x tc likelihood surface")
    _add_common_io(p_ms)
    _add_tc_grid(p_ms)
    p_ms.add_argument("--dt-min", type=int, default=60)
    p_ms.add_argument("--dt-max", type=int, default=700)
    p_ms.add_argument("--dt-step", type=int, default=20)
    p_ms.add_argument("--cutoff", type=float, action="append")

    p_syn = sub.add_parser("synth", help="generate a synthetic series CSV")
    p_syn.add_argument("--out-dir", default=".")
    p_syn.add_argument("--paper-defaults", action="store_true",
                       help="use the stock synthetic-bubble parameters")
    p_syn.add_argument("--seed", type=int, default=0)
    p_syn.add_argument("--sigma", type=float, default=0.03)
    p_syn.add_argument("--tc0", default="1975-02-09")
    p_syn.add_argument("--m0", type=float, default=0.8)
    p_syn.add_argument("--omega0", type=float, default=9.0)
    p_syn.add_argument("--phi0", type=float, default=0.0)
    p_syn.add_argument("--a0", type=float, default=8.0)
    p_syn.add_argument("--b0", type=float, default=-0.015)
    p_syn.add_argument("--c0", type=float, default=0.0015)
    p_syn.add_argument("--start-offset-days", type=int, default=800,
                       help="sampling starts this many days before tc0")
    p_syn.add_argument("--end-offset-days", type=int, default=60,
                       help="sampling ends this many days after tc0")
    return ap


def _resolved_config(args: argparse.Namespace) -> dict:
    cfg = {k: v for k, v in vars(args).items()}
    cfg["schema_version"] = SCHEMA_VERSION
    cfg["version"] = __version__
    return cfg


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o)}")


def _write_json(path: Path, obj: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _write_run_meta(out: Path, cfg: dict, notes: list[str]):
    _write_json(out / "run.json", {
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "notes": notes,
        "timestamp_utc": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    })


def _load_window(args, notes: list[str]):
    if not os.path.exists(args.input):
        raise UsageError(f"input file not found: {args.input}")
    data = series.load_csv(args.input)
    if args.fill_gaps > 0:
        data, gaps = series.fill_gaps(data, args.fill_gaps)
        if gaps:
            out = Path(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            _write_json(out / "gaps.json", {
                "schema_version": SCHEMA_VERSION,
                "gaps": series.gaps_to_json(gaps),
            })
            notes.append(f"{len(gaps)} gap(s) reported in gaps.json")
    try:
        t2 = date.fromisoformat(args.t2)
    except ValueError:
        raise UsageError(f"bad --t2 date {args.t2!r}") from None
    return data, t2


class UsageError(Exception):
    pass


def _fit_window(data, t2: date, args):
    t1 = t2 - timedelta(days=args.window_days)
    wseries = series.window(data, t1, t2)
    if len(wseries) < args.min_observations:
        raise DataError(
            f"window holds {len(wseries)} observations; "
            f"floor is {args.min_observations}")
    t2_time = data.time_of(t2)
    offsets = np.arange(args.tc_min_offset,
                        args.tc_max_offset + 0.5 * args.tc_step,
                        args.tc_step) + 0.5
    tc_grid = t2_time + offsets
    points = profile_f2(wseries, tc_grid)
    try:
        mle = full_mle(wseries, tc_grid, points=points)
    except DegenerateDesignError as exc:
        raise ConvergenceError(str(exc)) from None
    return wseries, t2_time, offsets, points, mle


def _interval_payload(fb, cutoffs):
    payload = {}
    for which in ("m", "omega"):
        payload[which] = {}
        for c in cutoffs:
            iv = intervals.approx_nuisance_interval(fb, which, c)
            payload[which][repr(float(c))] = {
                "center": iv.center, "half_width": iv.half_width}
    payload["damping"] = {}
    for c in cutoffs:
        try:
            iv = intervals.damping_interval(fb, c)
            payload["damping"][repr(float(c))] = {
                "center": iv.center, "half_width": iv.half_width}
        except (ValueError, np.linalg.LinAlgError) as exc:
            payload["damping"][repr(float(c))] = {"error": str(exc)}
    return payload


def _qualification_payload(mle, fb, cutoff):
    strict = model.qualify(mle.params, mode="strict")
    payload = {
        "strict": {"m_ok": strict.m_ok, "omega_ok": strict.omega_ok,
                   "b_ok": strict.b_ok, "d_ok": strict.d_ok,
                   "passed": strict.passed},
    }
    try:
        ivs = {
            "m": intervals.approx_nuisance_interval(fb, "m", cutoff),
            "omega": intervals.approx_nuisance_interval(fb, "omega", cutoff),
            "damping": intervals.damping_interval(fb, cutoff),
        }
        conf = model.qualify(mle.params, intervals=ivs, mode="confidence_aware")
        payload["confidence_aware"] = {
            "m_ok": conf.m_ok, "omega_ok": conf.omega_ok,
            "b_ok": conf.b_ok, "d_ok": conf.d_ok, "passed": conf.passed}
    except (ValueError, np.linalg.LinAlgError) as exc:
        payload["confidence_aware"] = {"error": str(exc)}
    return payload


def cmd_fit(args) -> int:
    notes: list[str] = []
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = _resolved_config(args)
    data, t2 = _load_window(args, notes)
    wseries, t2_time, _, _, mle = _fit_window(data, t2, args)
    nl, lin = mle.params.nonlinear, mle.params.linear
    cutoffs = args.cutoff or [intervals.DEFAULT_CUTOFF]
    fb = fisher_blocks(wseries, nl.tc, mle.psi())
    tc_date = data.origin + timedelta(days=round(nl.tc))
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "n": mle.n,
        "tc": nl.tc,
        "tc_offset_days": nl.tc - t2_time,
        "tc_date_nearest": tc_date.isoformat(),
        "m": nl.m,
        "omega": nl.omega,
        "a": lin.a,
        "b": lin.b,
        "c1": lin.c1,
        "c2": lin.c2,
        "c": lin.c,
        "phi": lin.phi,
        "damping": mle.params.damping,
        "sse": mle.sse,
        "sigma2_mle": sigma2_mle(mle.sse, mle.n),
        "sigma2_unbiased": sigma2_unbiased(mle.sse, mle.n),
        "converged": mle.converged,
        "n_restarts_used": mle.n_restarts_used,
        "condition_number": mle.condition_number,
        "tc_on_grid_boundary": mle.boundary,
        "qualification": _qualification_payload(mle, fb, cutoffs[0]),
        "nuisance_intervals": _interval_payload(fb, cutoffs),
    }
    _write_json(out / "fit.json", report)
    if args.format == "csv":
        keys = ["tc", "m", "omega", "a", "b", "c1", "c2", "damping", "sse",
                "sigma2_mle", "sigma2_unbiased"]
        with open(out / "fit.csv", "w", encoding="utf-8") as fh:
            fh.write(",".join(keys) + "\n")
            fh.write(",".join(repr(float(report[k])) for k in keys) + "\n")
    _write_run_meta(out, cfg, notes)
    print(f"tc = {report['tc_date_nearest']} (offset {report['tc_offset_days']:+.1f} d), "
          f"m = {nl.m:.4f}, omega = {nl.omega:.4f}, D = {report['damping']:.4f}, "
          f"qualified[strict] = {report['qualification']['strict']['passed']}")
    if not mle.converged:
        print("warning: optimizer did not converge", file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_profile(args) -> int:
    notes: list[str] = []
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = _resolved_config(args)
    data, t2 = _load_window(args, notes)
    wseries, t2_time, offsets, points, mle = _fit_window(data, t2, args)
    curve = modified_profile_likelihood(wseries, points, mle)
    cutoffs = args.cutoff or [intervals.DEFAULT_CUTOFF]

    with open(out / "curve.csv", "w", encoding="utf-8") as fh:
        fh.write(f"# config {json.dumps(cfg, sort_keys=True)}\n")
        likelihood.curve_to_csv(curve, t2_time, fh)

    boundary_warn = False
    for which in ("lp", "lm"):
        payload = {"schema_version": SCHEMA_VERSION, "config": cfg,
                   "curve": which, "intervals": []}
        for c in cutoffs:
            li = intervals.likelihood_interval(curve, which, c)
            payload["intervals"].append(
                intervals.interval_to_json("tc_offset_days", intervals.LikelihoodInterval(
                    cutoff=li.cutoff,
                    segments=tuple((lo - t2_time, hi - t2_time)
                                   for lo, hi in li.segments),
                    boundary_touched=li.boundary_touched)))
            boundary_warn = boundary_warn or li.boundary_touched
        _write_json(out / f"intervals_{which}.json", payload)

    # per-tc nuisance point estimates and approximate interval half-widths
    with open(out / "tc_params.csv", "w", encoding="utf-8") as fh:
        fh.write(f"# config {json.dumps(cfg, sort_keys=True)}\n")
        fh.write("tc_offset_days,m_hat,dm,omega_hat,domega,d_hat,dd\n")
        for p in points:
            row = [p.tc - t2_time, np.nan, np.nan, np.nan, np.nan, np.nan,
                   np.nan]
            if p.valid:
                row[1] = p.m_hat
                row[3] = p.omega_hat
                row[5] = model.damping(p.m_hat, p.linear.b, p.omega_hat,
                                       p.linear.c1, p.linear.c2)
                try:
                    fb = fisher_blocks(wseries, p.tc, p.psi())
                    if fb.is_pd and fb.s_hat > 0:
                        row[2] = intervals.approx_nuisance_interval(
                            fb, "m", cutoffs[0]).half_width
                        row[4] = intervals.approx_nuisance_interval(
                            fb, "omega", cutoffs[0]).half_width
                        row[6] = intervals.damping_interval(
                            fb, cutoffs[0]).half_width
                except (ValueError, np.linalg.LinAlgError):
                    pass
            fh.write(",".join(repr(float(v)) for v in row) + "\n")

    if boundary_warn:
        notes.append("a likelihood interval touches the tc search boundary; "
                     "widen the grid before trusting it")
        print("warning: interval touches the tc grid boundary", file=sys.stderr)
    _write_run_meta(out, cfg, notes)
    n_seg = len(json.loads((out / "intervals_lm.json").read_text())["intervals"][0]["segments"])
    print(f"profile written: {len(points)} grid points, "
          f"{n_seg} segment(s) at cutoff {cutoffs[0]}")
    if not mle.converged:
        return EXIT_CONVERGENCE
    return EXIT_OK


def cmd_multiscale(args) -> int:
    notes: list[str] = []
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = _resolved_config(args)
    data, t2 = _load_window(args, notes)
    cutoffs = args.cutoff or list(intervals.CONTOUR_CUTOFFS)
    surface = multiscale.scan(
        data, t2,
        dt_range=(args.dt_min, args.dt_max, args.dt_step),
        tc_range=(args.tc_min_offset, args.tc_max_offset, args.tc_step),
        min_observations=args.min_observations,
        cutoff=cutoffs[0],
        n_jobs=max(1, args.threads),
    )
    if surface.row_missing.all():
        raise ConvergenceError("no window size produced a usable profile")
    payload = multiscale.surface_to_json(surface)
    payload["config"] = cfg
    _write_json(out / "surface.json", payload)
    with open(out / "surface.csv", "w", encoding="utf-8") as fh:
        fh.write(f"# config {json.dumps(cfg, sort_keys=True)}\n")
        fh.write(multiscale.surface_to_csv(surface))
    contours = multiscale.contour_export(surface, tuple(cutoffs))
    contours["config"] = cfg
    _write_json(out / "contours.json", contours)
    n_missing = int(surface.row_missing.sum())
    if n_missing:
        notes.append(f"{n_missing} window size(s) missing")
    _write_run_meta(out, cfg, notes)
    print(f"surface {surface.shape[0]} x {surface.shape[1]} written; "
          f"{n_missing} missing row(s), "
          f"{int(surface.boundary_rows.sum())} boundary-flagged row(s)")
    return EXIT_OK


def cmd_synth(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = _resolved_config(args)
    try:
        tc0 = date.fromisoformat(args.tc0)
    except ValueError:
        raise UsageError(f"bad --tc0 date {args.tc0!r}") from None
    if args.sigma < 0:
        raise UsageError("--sigma must be >= 0")
    spec = synthetic.GeneratorSpec(
        tc0=tc0, m0=args.m0, omega0=args.omega0, phi0=args.phi0,
        a0=args.a0, b0=args.b0, c0=args.c0, sigma0=args.sigma,
        start=tc0 - timedelta(days=args.start_offset_days),
        end=tc0 + timedelta(days=args.end_offset_days),
        seed=args.seed,
    )
    data = synthetic.generate(spec)
    with open(out / "series.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("date,close\n")
        for d, lp in zip(data.dates, data.log_prices):
            fh.write(f"{d.isoformat()},{math.exp(lp)!r}\n")
    _write_json(out / "series.meta.json", {
        "schema_version": SCHEMA_VERSION,
        "config": cfg,
        "generator": synthetic.spec_to_json(spec),
        "n": len(data),
    })
    _write_run_meta(out, cfg, [])
    print(f"wrote {len(data)} rows to {out / 'series.csv'}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    handlers = {"fit": cmd_fit, "profile": cmd_profile,
                "multiscale": cmd_multiscale, "synth": cmd_synth}
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CsvError, EmptyWindowError, DataError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConvergenceError, DegenerateDesignError) as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
