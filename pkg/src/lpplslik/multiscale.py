"""Multi-scale surface of the relative modified profile likelihood.

One row per calibration-window size dt at a fixed analysis date t2: each
row is an independent profile over the tc grid, normalized to its own
maximum (likelihood values for different n are not directly comparable).
Cells that fail to converge or produce unusable matrices stay missing and
flagged; nothing is interpolated or smoothed over.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from . import model
from .calibrate import full_mle, profile_f2
from .intervals import (
    approx_nuisance_interval,
    damping_interval,
    threshold_segments,
)
from .likelihood import fisher_blocks, flag_names, modified_profile_likelihood
from .model import DEFAULT_BOUNDS, QualificationBounds
from .series import DEFAULT_MIN_OBSERVATIONS, EmptyWindowError, PriceSeries, window

__all__ = [
    "MultiscaleSurface",
    "scan",
    "qualify_surface",
    "contour_export",
    "contours_from_json",
    "surface_to_json",
    "surface_from_json",
    "surface_to_csv",
    "DEFAULT_DT_RANGE",
    "DEFAULT_TC_RANGE",
]

SCHEMA_VERSION = 1

DEFAULT_DT_RANGE = (60, 700, 20)      # window sizes, calendar days
DEFAULT_TC_RANGE = (-50.0, 150.0, 1.0)  # tc - t2 offsets, days


@dataclass
class MultiscaleSurface:
    t2: date
    t2_time: float
    dt_values: np.ndarray
    tc_offsets: np.ndarray
    rel_lm: np.ndarray          # (n_dt, n_tc), NaN where missing/flagged
    rel_lp: np.ndarray
    m_hat: np.ndarray
    omega_hat: np.ndarray
    b_hat: np.ndarray
    d_hat: np.ndarray
    dm: np.ndarray              # interval half-widths; NaN = unavailable
    domega: np.ndarray
    dd: np.ndarray
    flags: np.ndarray           # uint16 per cell
    row_missing: np.ndarray     # (n_dt,) bool
    boundary_rows: np.ndarray   # (n_dt,) bool
    qualified_strict: np.ndarray
    qualified_confidence: np.ndarray
    cutoff: float

    @property
    def shape(self) -> tuple[int, int]:
        return self.rel_lm.shape


def _empty_row(n_tc: int) -> dict:
    nan = np.full(n_tc, np.nan)
    return {
        "rel_lm": nan.copy(), "rel_lp": nan.copy(),
        "m_hat": nan.copy(), "omega_hat": nan.copy(),
        "b_hat": nan.copy(), "d_hat": nan.copy(),
        "dm": nan.copy(), "domega": nan.copy(), "dd": nan.copy(),
        "flags": np.zeros(n_tc, dtype=np.uint16),
        "missing": True, "boundary": False,
    }


def _scan_row(series: PriceSeries, t2: date, t2_time: float, dt: int,
              tc_grid: np.ndarray, min_observations: int,
              cutoff: float) -> dict:
    """One window size: profile, modified profile, per-cell estimates and
    approximate interval half-widths."""
    n_tc = len(tc_grid)
    row = _empty_row(n_tc)
    try:
        wseries = window(series, t2 - timedelta(days=int(dt)), t2)
    except EmptyWindowError:
        return row
    if len(wseries) < max(min_observations, 5):
        return row
    try:
        points = profile_f2(wseries, tc_grid)
        mle = full_mle(wseries, tc_grid, points=points)
        curve = modified_profile_likelihood(wseries, points, mle)
    except (ValueError, np.linalg.LinAlgError):
        return row
    row["missing"] = False
    row["rel_lm"] = curve.rel_lm
    row["rel_lp"] = curve.rel_lp
    row["flags"] = curve.flags
    for i, p in enumerate(points):
        if p.degenerate:
            continue
        row["m_hat"][i] = p.m_hat
        row["omega_hat"][i] = p.omega_hat
        row["b_hat"][i] = p.linear.b
        row["d_hat"][i] = model.damping(p.m_hat, p.linear.b, p.omega_hat,
                                        p.linear.c1, p.linear.c2)
        try:
            fb = fisher_blocks(wseries, p.tc, p.psi())
            if fb.is_pd and fb.s_hat > 0:
                row["dm"][i] = approx_nuisance_interval(fb, "m", cutoff).half_width
                row["domega"][i] = approx_nuisance_interval(fb, "omega", cutoff).half_width
                row["dd"][i] = damping_interval(fb, cutoff).half_width
        except (ValueError, np.linalg.LinAlgError):
            pass
    finite = np.isfinite(curve.rel_lm)
    if finite.any():
        peak = int(np.nanargmax(curve.rel_lm))
        row["boundary"] = bool(peak == 0 or peak == n_tc - 1 or mle.boundary)
    else:
        row["boundary"] = bool(mle.boundary)
    return row


def _scan_row_args(args) -> dict:
    return _scan_row(*args)


def scan(series: PriceSeries, t2: date,
         dt_range: tuple = DEFAULT_DT_RANGE,
         tc_range: tuple = DEFAULT_TC_RANGE,
         min_observations: int = DEFAULT_MIN_OBSERVATIONS,
         cutoff: float = 0.05,
         bounds: QualificationBounds = DEFAULT_BOUNDS,
         n_jobs: int = 1) -> MultiscaleSurface:
    """Build the relative multi-scale modified profile likelihood surface.

    Window sizes run over dt_range = (min, max, step) days and the tc grid
    over tc_range = (min_offset, max_offset, step) days around t2, shifted
    half a day off the integer observation times.  Rows are independent and
    may be computed in parallel; the assembled surface does not depend on
    completion order.
    """
    dt_min, dt_max, dt_step = dt_range
    dt_values = np.arange(int(dt_min), int(dt_max) + 1, int(dt_step))
    off_min, off_max, off_step = tc_range
    offsets = np.arange(off_min, off_max + 0.5 * off_step, off_step) + 0.5
    t2_time = series.time_of(t2)
    tc_grid = t2_time + offsets
    tasks = [(series, t2, t2_time, int(dt), tc_grid, min_observations, cutoff)
             for dt in dt_values]
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            rows = list(pool.map(_scan_row_args, tasks))
    else:
        rows = [_scan_row(*t) for t in tasks]
    n_dt, n_tc = len(dt_values), len(offsets)

    def stack(key, dtype=float):
        return np.array([r[key] for r in rows], dtype=dtype)

    surface = MultiscaleSurface(
        t2=t2, t2_time=t2_time, dt_values=dt_values, tc_offsets=offsets,
        rel_lm=stack("rel_lm"), rel_lp=stack("rel_lp"),
        m_hat=stack("m_hat"), omega_hat=stack("omega_hat"),
        b_hat=stack("b_hat"), d_hat=stack("d_hat"),
        dm=stack("dm"), domega=stack("domega"), dd=stack("dd"),
        flags=stack("flags", dtype=np.uint16),
        row_missing=np.array([r["missing"] for r in rows], dtype=bool),
        boundary_rows=np.array([r["boundary"] for r in rows], dtype=bool),
        qualified_strict=np.zeros((n_dt, n_tc), dtype=bool),
        qualified_confidence=np.zeros((n_dt, n_tc), dtype=bool),
        cutoff=cutoff,
    )
    surface.qualified_strict = qualify_surface(surface, "strict", bounds)
    surface.qualified_confidence = qualify_surface(surface, "confidence_aware",
                                                   bounds)
    return surface


def qualify_surface(surface: MultiscaleSurface, mode: str,
                    bounds: QualificationBounds = DEFAULT_BOUNDS) -> np.ndarray:
    """Constraint mask over the surface cells.

    strict             point estimates inside the allowed ranges
    confidence_aware   a parameter passes when its approximate likelihood
                       interval overlaps the allowed range; cells in
                       boundary-flagged rows keep their strict status (their
                       intervals are unreliable, so they gain nothing), as
                       do parameters whose half-width is unavailable.
    """
    with np.errstate(invalid="ignore"):
        m, w, b, d = surface.m_hat, surface.omega_hat, surface.b_hat, surface.d_hat
        strict_m = (m >= bounds.m_min) & (m <= bounds.m_max)
        strict_w = (w >= bounds.omega_min) & (w <= bounds.omega_max)
        strict_b = b < 0.0
        strict_d = d >= bounds.d_min
        strict = strict_m & strict_w & strict_b & strict_d
        if mode == "strict":
            return strict
        if mode != "confidence_aware":
            raise ValueError(f"unknown qualification mode {mode!r}")
        if surface.dm is None or surface.domega is None or surface.dd is None:
            raise ValueError("surface carries no interval data")
        conf_m = np.where(np.isfinite(surface.dm),
                          (m - surface.dm <= bounds.m_max)
                          & (m + surface.dm >= bounds.m_min),
                          strict_m)
        conf_w = np.where(np.isfinite(surface.domega),
                          (w - surface.domega <= bounds.omega_max)
                          & (w + surface.domega >= bounds.omega_min),
                          strict_w)
        conf_d = np.where(np.isfinite(surface.dd),
                          d + surface.dd >= bounds.d_min,
                          strict_d)
        conf = conf_m & conf_w & strict_b & conf_d
        conf[surface.boundary_rows, :] = strict[surface.boundary_rows, :]
    return conf | strict


def contour_export(surface: MultiscaleSurface,
                   cutoffs: tuple = (0.05, 0.5, 0.95)) -> dict:
    """Grid-plus-segments description of the surface for contour plotting."""
    for c in cutoffs:
        if not 0.0 < c < 1.0:
            raise ValueError("cutoffs must be in (0, 1)")
    rows = []
    for i, dt in enumerate(surface.dt_values):
        seg_map = {}
        for c in cutoffs:
            segments, edge = threshold_segments(surface.tc_offsets,
                                                surface.rel_lm[i], c)
            seg_map[repr(float(c))] = {
                "segments": [[lo, hi] for lo, hi in segments],
                "boundary_touched": bool(edge or surface.boundary_rows[i]),
            }
        rows.append({
            "dt": int(dt),
            "missing": bool(surface.row_missing[i]),
            "boundary": bool(surface.boundary_rows[i]),
            "intervals": seg_map,
            "qualified_strict": surface.qualified_strict[i].tolist(),
            "qualified_confidence": surface.qualified_confidence[i].tolist(),
        })
    return {
        "schema_version": SCHEMA_VERSION,
        "t2": surface.t2.isoformat(),
        "cutoffs": list(cutoffs),
        "tc_offsets": surface.tc_offsets.tolist(),
        "rows": rows,
    }


def contours_from_json(data: dict) -> dict:
    """Re-import a contour export; returns dt -> (strict, confidence) masks."""
    out = {}
    for row in data["rows"]:
        out[int(row["dt"])] = (
            np.array(row["qualified_strict"], dtype=bool),
            np.array(row["qualified_confidence"], dtype=bool),
        )
    return out


def _matrix_with_nulls(a: np.ndarray) -> list:
    return [[None if not np.isfinite(v) else float(v) for v in row]
            for row in a]


def surface_to_json(surface: MultiscaleSurface) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "t2": surface.t2.isoformat(),
        "cutoff": surface.cutoff,
        "dt_values": surface.dt_values.tolist(),
        "tc_offsets": surface.tc_offsets.tolist(),
        "rel_lm": _matrix_with_nulls(surface.rel_lm),
        "rel_lp": _matrix_with_nulls(surface.rel_lp),
        "m_hat": _matrix_with_nulls(surface.m_hat),
        "omega_hat": _matrix_with_nulls(surface.omega_hat),
        "b_hat": _matrix_with_nulls(surface.b_hat),
        "d_hat": _matrix_with_nulls(surface.d_hat),
        "dm": _matrix_with_nulls(surface.dm),
        "domega": _matrix_with_nulls(surface.domega),
        "dd": _matrix_with_nulls(surface.dd),
        "flags": [[flag_names(int(f)) for f in row] for row in surface.flags],
        "row_missing": surface.row_missing.tolist(),
        "boundary_rows": surface.boundary_rows.tolist(),
        "qualified_strict": surface.qualified_strict.tolist(),
        "qualified_confidence": surface.qualified_confidence.tolist(),
    }


def _matrix_from_nulls(rows: list) -> np.ndarray:
    return np.array([[np.nan if v is None else float(v) for v in row]
                     for row in rows])


def surface_from_json(data: dict, series_origin_t2_time: float | None = None):
    """Rebuild the numeric surface content from its JSON form (masks, grids
    and matrices; flags come back as label strings)."""
    from .likelihood import _FLAG_LABELS

    label_to_bit = {label: bit for bit, label in _FLAG_LABELS}

    def parse_flags(s: str) -> int:
        return sum(label_to_bit[x] for x in s.split("|") if x)

    flags = np.array([[parse_flags(f) for f in row] for row in data["flags"]],
                     dtype=np.uint16)
    return MultiscaleSurface(
        t2=date.fromisoformat(data["t2"]),
        t2_time=series_origin_t2_time if series_origin_t2_time is not None
        else np.nan,
        dt_values=np.array(data["dt_values"], dtype=int),
        tc_offsets=np.array(data["tc_offsets"], dtype=float),
        rel_lm=_matrix_from_nulls(data["rel_lm"]),
        rel_lp=_matrix_from_nulls(data["rel_lp"]),
        m_hat=_matrix_from_nulls(data["m_hat"]),
        omega_hat=_matrix_from_nulls(data["omega_hat"]),
        b_hat=_matrix_from_nulls(data["b_hat"]),
        d_hat=_matrix_from_nulls(data["d_hat"]),
        dm=_matrix_from_nulls(data["dm"]),
        domega=_matrix_from_nulls(data["domega"]),
        dd=_matrix_from_nulls(data["dd"]),
        flags=flags,
        row_missing=np.array(data["row_missing"], dtype=bool),
        boundary_rows=np.array(data["boundary_rows"], dtype=bool),
        qualified_strict=np.array(data["qualified_strict"], dtype=bool),
        qualified_confidence=np.array(data["qualified_confidence"], dtype=bool),
        cutoff=float(data["cutoff"]),
    )


def surface_to_csv(surface: MultiscaleSurface) -> str:
    """Long-format CSV: dt, tc_offset, rel_lm, strict, confidence, flag."""
    lines = ["dt,tc_offset,rel_lm,strict,confidence,flag"]
    for i, dt in enumerate(surface.dt_values):
        for j, off in enumerate(surface.tc_offsets):
            v = surface.rel_lm[i, j]
            lines.append(",".join([
                str(int(dt)),
                repr(float(off)),
                "" if not np.isfinite(v) else repr(float(v)),
                str(int(surface.qualified_strict[i, j])),
                str(int(surface.qualified_confidence[i, j])),
                flag_names(int(surface.flags[i, j])),
            ]))
    return "\n".join(lines) + "\n"
