"""Resample labeled cycles onto a 32-point normalized cardiac grid and
average them into global, inspiration, and expiration mean curves.

Averaging is compensated (Kahan) and runs in source_cycle_id order, so
the result is bit-identical under any permutation of the input list.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import EmptyEnsemble, TooFewSamples, ValueOutOfRange
from .gating import LabeledCycle, RespLabel
from .ingest import GATED_FRAMES

PHASE_GRID = np.arange(GATED_FRAMES, dtype=np.float64) / GATED_FRAMES

INTERP_MODES = ("spline", "linear")


@dataclass
class CanonicalCycle:
    """One cardiac cycle resampled to 32 flow values at phases k/32.

    Phase 0 is the cycle onset (the upward zero-crossing feeding the
    systolic flush).
    """

    q32: np.ndarray
    source_cycle_id: int
    resp_label: RespLabel
    rr: float

    def __post_init__(self):
        self.q32 = np.asarray(self.q32, dtype=np.float64)
        if self.q32.shape != (GATED_FRAMES,):
            raise ValueOutOfRange(f"q32 must hold exactly {GATED_FRAMES} values")
        if not np.all(np.isfinite(self.q32)):
            raise ValueOutOfRange("q32 contains non-finite values")
        if self.rr <= 0:
            raise ValueOutOfRange("rr must be positive")


@dataclass
class EnsembleCurves:
    """Mean 32-point flow curves per breathing state.

    Empty inspiration or expiration ensembles leave their curve as None,
    never a zero-filled placeholder. Standard deviations are population
    (ddof = 0) per phase point.
    """

    global_mean: np.ndarray
    global_sd: np.ndarray
    n_global: int
    mean_rr_global: float
    insp_mean: np.ndarray | None
    insp_sd: np.ndarray | None
    n_insp: int
    mean_rr_insp: float | None
    exp_mean: np.ndarray | None
    exp_sd: np.ndarray | None
    n_exp: int
    mean_rr_exp: float | None
    n_mixed: int


def resample_cycle(cycle: LabeledCycle, mode: str = "spline") -> CanonicalCycle:
    """Interpolate one cycle's samples onto the 32-point phase grid.

    Sample times are normalized to phase u = (t - start) / rr in [0, 1);
    a periodic interpolant (period 1) through the samples is evaluated at
    k/32. The interpolant reproduces the input samples at their own
    phases exactly. mode "spline" is a periodic cubic spline, "linear"
    joins the points with straight lines (kept for sensitivity checks).
    """
    if mode not in INTERP_MODES:
        raise ValueOutOfRange(f"mode must be one of {INTERP_MODES}, got {mode!r}")
    if cycle.n_samples < 4:
        raise TooFewSamples(
            f"cycle at {cycle.start:.0f} ms has {cycle.n_samples} samples, need >= 4"
        )
    rr = cycle.rr
    u = (cycle.t - cycle.start) / rr
    if np.any(np.diff(u) <= 0) or u[0] < 0 or u[-1] >= 1:
        raise ValueOutOfRange("cycle samples must lie strictly ordered within [start, end)")
    # wrap the first sample to u0 + 1 to close the period
    knots = np.concatenate([u, [u[0] + 1.0]])
    vals = np.concatenate([cycle.q, [cycle.q[0]]])
    grid = np.where(PHASE_GRID < u[0], PHASE_GRID + 1.0, PHASE_GRID)
    if mode == "spline":
        q32 = CubicSpline(knots, vals, bc_type="periodic")(grid)
    else:
        q32 = np.interp(grid, knots, vals)
    return CanonicalCycle(
        q32=q32, source_cycle_id=cycle.cycle_id, resp_label=cycle.resp_label, rr=rr
    )


def _kahan_mean(rows: list[np.ndarray]) -> np.ndarray:
    total = np.zeros_like(rows[0])
    comp = np.zeros_like(rows[0])
    for row in rows:
        y = row - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total / len(rows)


def _kahan_mean_scalar(values: list[float]) -> float:
    return float(_kahan_mean([np.asarray([v], dtype=np.float64) for v in values])[0])


def build_ensembles(cycles: list[CanonicalCycle]) -> EnsembleCurves:
    """Pointwise mean and standard deviation per breathing state.

    MIXED cycles count toward the global curve only. Cycle ids must be
    unique; summation order is fixed by sorting on them.
    """
    if not cycles:
        raise EmptyEnsemble("no cycles to average")
    ids = [c.source_cycle_id for c in cycles]
    if len(set(ids)) != len(ids):
        raise ValueOutOfRange("source_cycle_id values must be unique")
    ordered = sorted(cycles, key=lambda c: c.source_cycle_id)

    def stats(sel: list[CanonicalCycle]):
        rows = [c.q32 for c in sel]
        mean = _kahan_mean(rows)
        sd = np.sqrt(_kahan_mean([(r - mean) ** 2 for r in rows]))
        rr = _kahan_mean_scalar([c.rr for c in sel])
        return mean, sd, rr

    g_mean, g_sd, g_rr = stats(ordered)
    insp = [c for c in ordered if c.resp_label is RespLabel.INSPIRATION]
    expi = [c for c in ordered if c.resp_label is RespLabel.EXPIRATION]
    n_mixed = sum(1 for c in ordered if c.resp_label is RespLabel.MIXED)
    i_mean = i_sd = e_mean = e_sd = None
    i_rr = e_rr = None
    if insp:
        i_mean, i_sd, i_rr = stats(insp)
    if expi:
        e_mean, e_sd, e_rr = stats(expi)
    return EnsembleCurves(
        global_mean=g_mean,
        global_sd=g_sd,
        n_global=len(ordered),
        mean_rr_global=g_rr,
        insp_mean=i_mean,
        insp_sd=i_sd,
        n_insp=len(insp),
        mean_rr_insp=i_rr,
        exp_mean=e_mean,
        exp_sd=e_sd,
        n_exp=len(expi),
        mean_rr_exp=e_rr,
        n_mixed=n_mixed,
    )
