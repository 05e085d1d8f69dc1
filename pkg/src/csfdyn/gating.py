"""Retrospective double gating: cardiac cycle detection from the flow
signal itself (or a plethysmograph trace), and inspiration/expiration
labeling from the respiratory belt.

All detection happens on timestamps relative to the first sample, so
shifting every input clock by the same amount shifts every output
timestamp by exactly that amount.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.signal import find_peaks

from .errors import (
    ArrhythmicSignal,
    ClockMismatch,
    FlatSignal,
    TooFewCycles,
    ValueOutOfRange,
    WrongKind,
)
from .flow import FlowSamples
from .ingest import PhysioKind, PhysioTrace

DEFAULT_MIN_RR = 300.0
DEFAULT_MAX_RR = 2000.0

#: shortest admissible inspiration/expiration run, ms
DEBOUNCE_MS = 200.0

#: refuse self-gating above this RR coefficient of variation
RR_CV_LIMIT = 0.35


class GatingMethod(str, Enum):
    FLOW_PEAKS = "FLOW_PEAKS"
    PLETHYSMO = "PLETHYSMO"


class RespLabel(str, Enum):
    INSPIRATION = "INSPIRATION"
    EXPIRATION = "EXPIRATION"
    MIXED = "MIXED"


@dataclass
class CycleBoundaries:
    """Detected cardiac cycle start times (ms) plus rhythm summary.

    min_rr/max_rr record the admissible cycle-length window the detector
    ran with; downstream labeling skips intervals outside it.
    """

    onsets: np.ndarray
    method: GatingMethod
    mean_rr: float
    rr_cv: float
    min_rr: float = DEFAULT_MIN_RR
    max_rr: float = DEFAULT_MAX_RR

    def __post_init__(self):
        self.onsets = np.asarray(self.onsets, dtype=np.float64)
        if self.onsets.size < 2:
            raise TooFewCycles(f"{self.onsets.size} cycle onsets is not a rhythm")
        if np.any(np.diff(self.onsets) <= 0):
            raise ValueOutOfRange("onsets must be strictly increasing")

    @property
    def n_cycles(self) -> int:
        """Number of detected cycle starts."""
        return int(self.onsets.size)

    @property
    def rr_intervals(self) -> np.ndarray:
        return np.diff(self.onsets)


@dataclass
class RespPhases:
    """Per-sample inspiration/expiration labels on the physio clock.

    inspiration is a bool array aligned with the trace samples
    (True = INSPIRATION). Runs are guaranteed no shorter than 200 ms.
    """

    t0: float
    sample_interval: float
    inspiration: np.ndarray
    smoothing_window: float
    hysteresis: float

    def __post_init__(self):
        self.inspiration = np.asarray(self.inspiration, dtype=bool)
        if self.inspiration.ndim != 1 or self.inspiration.size < 2:
            raise ValueOutOfRange("labels must form a 1D run of at least 2 samples")

    @property
    def timestamps(self) -> np.ndarray:
        return self.t0 + np.arange(self.inspiration.size, dtype=np.float64) * self.sample_interval

    def covers(self, t_start: float, t_end: float) -> bool:
        """Whether [t_start, t_end] lies within the labeled span, with half
        a sample of slack at each edge."""
        slack = 0.5 * self.sample_interval
        t_last = self.t0 + (self.inspiration.size - 1) * self.sample_interval
        return t_start >= self.t0 - slack and t_end <= t_last + slack

    def label_at(self, times: np.ndarray) -> np.ndarray:
        """Nearest-sample inspiration flag for arbitrary timestamps."""
        idx = np.rint((np.asarray(times, dtype=np.float64) - self.t0) / self.sample_interval)
        idx = np.clip(idx, 0, self.inspiration.size - 1).astype(np.intp)
        return self.inspiration[idx]


@dataclass
class LabeledCycle:
    """One cardiac cycle cut out of the continuous flow signal."""

    cycle_id: int
    start: float
    end: float
    t: np.ndarray
    q: np.ndarray
    resp_label: RespLabel
    inspiration_fraction: float

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.q = np.asarray(self.q, dtype=np.float64)

    @property
    def rr(self) -> float:
        return self.end - self.start

    @property
    def n_samples(self) -> int:
        return int(self.t.size)


def moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Centered moving average with edge shrinkage.

    window is in samples and forced odd so the filter stays zero-phase;
    near the edges the window shrinks instead of padding.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    w = max(1, int(window))
    if w % 2 == 0:
        w += 1
    if w == 1 or n == 1:
        return x.copy()
    half = w // 2
    csum = np.concatenate([[0.0], np.cumsum(x)])
    lo = np.maximum(np.arange(n) - half, 0)
    hi = np.minimum(np.arange(n) + half + 1, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


def _smooth_for_peaks(x: np.ndarray, dt: float, max_rr: float) -> np.ndarray:
    """Detrend by a max_rr-wide moving average, then 3-sample smooth."""
    detrend_w = max(3, int(round(max_rr / dt)))
    resid = x - moving_average(x, detrend_w)
    return moving_average(resid, 3)


def _find_beat_peaks(s: np.ndarray, dt: float, min_rr: float) -> np.ndarray:
    """Local maxima of the band-limited signal with prominence and
    refractory gating. Returns sample indices."""
    pos = s[s > 0]
    # 1e-9 of full scale guards against float residue masquerading as
    # pulsation when the input is essentially constant
    floor = 1e-9 * float(np.abs(s).max(initial=0.0))
    if pos.size == 0:
        raise TooFewCycles("flow signal has no positive excursions to gate on")
    prominence = max(0.5 * float(np.percentile(pos, 75)), floor)
    if prominence <= 0.0:
        raise TooFewCycles("flow signal has no usable pulsation")
    distance = max(1, int(np.ceil(min_rr / dt)))
    peaks, _ = find_peaks(s, prominence=prominence, distance=distance)
    return peaks


def _uniform_dt(timestamps: np.ndarray) -> float:
    gaps = np.diff(timestamps)
    if gaps.size == 0 or np.any(gaps <= 0):
        raise ValueOutOfRange("timestamps must be strictly increasing")
    return float(np.median(gaps))


def _rhythm_or_refuse(onsets_rel: np.ndarray, method: GatingMethod,
                      t_first: float, min_rr: float, max_rr: float) -> CycleBoundaries:
    if onsets_rel.size < 5:
        raise TooFewCycles(f"only {onsets_rel.size} cycles detected, need at least 5")
    rr = np.diff(onsets_rel)
    mean_rr = float(rr.mean())
    rr_cv = float(rr.std() / mean_rr)
    if rr_cv > RR_CV_LIMIT:
        raise ArrhythmicSignal(
            f"cycle length varies too much for self-gating (cv = {rr_cv:.3f}); "
            f"try a plethysmograph recording"
        )
    return CycleBoundaries(
        onsets=t_first + onsets_rel,
        method=method,
        mean_rr=mean_rr,
        rr_cv=rr_cv,
        min_rr=min_rr,
        max_rr=max_rr,
    )


def detect_cycles_from_flow(
    flow: FlowSamples, min_rr: float = DEFAULT_MIN_RR, max_rr: float = DEFAULT_MAX_RR
) -> CycleBoundaries:
    """Self-gate the flow waveform: one onset per systolic flush.

    Pipeline: moving-average detrend (window = max_rr), 3-sample smooth,
    peak pick with prominence >= half the 75th percentile of positive
    excursions, refractory spacing of min_rr (larger peak wins), then
    each onset is placed at the last upward zero-crossing before its
    peak, linearly interpolated between samples.
    """
    if not 0 < min_rr < max_rr:
        raise ValueOutOfRange("need 0 < min_rr < max_rr")
    t = flow.timestamps
    if t[-1] - t[0] < 5.0 * min_rr:
        raise TooFewCycles(
            f"signal spans {t[-1] - t[0]:g} ms, need at least {5 * min_rr:g}"
        )
    dt = _uniform_dt(t)
    rel = t - t[0]
    s = _smooth_for_peaks(flow.q, dt, max_rr)
    peaks = _find_beat_peaks(s, dt, min_rr)

    onsets = []
    for p in peaks.tolist():
        i = p
        found = None
        while i > 0:
            if s[i - 1] <= 0.0 < s[i]:
                frac = -s[i - 1] / (s[i] - s[i - 1])
                found = rel[i - 1] + frac * (rel[i] - rel[i - 1])
                break
            i -= 1
        if found is None and s[0] > 0.0:
            # the positive run under this peak reaches the first sample:
            # the flush was already underway when recording started, so
            # clamp the onset to the window edge
            found = float(rel[0])
        if found is not None and (not onsets or found > onsets[-1]):
            onsets.append(found)
    return _rhythm_or_refuse(np.asarray(onsets), GatingMethod.FLOW_PEAKS,
                             float(t[0]), min_rr, max_rr)


def detect_cycles_from_plethysmo(
    trace: PhysioTrace, min_rr: float = DEFAULT_MIN_RR, max_rr: float = DEFAULT_MAX_RR
) -> CycleBoundaries:
    """Gate from a plethysmograph trace; onsets at the foot of each
    upstroke (the last minimum before the pulse peak)."""
    if trace.kind is not PhysioKind.CARDIAC_PLETHYSMO:
        raise WrongKind(f"expected CARDIAC_PLETHYSMO trace, got {trace.kind.value}")
    if not 0 < min_rr < max_rr:
        raise ValueOutOfRange("need 0 < min_rr < max_rr")
    if trace.duration < 5.0 * min_rr:
        raise TooFewCycles(
            f"trace spans {trace.duration:g} ms, need at least {5 * min_rr:g}"
        )
    dt = trace.sample_interval
    rel = np.arange(trace.samples.size, dtype=np.float64) * dt
    s = _smooth_for_peaks(trace.samples, dt, max_rr)
    peaks = _find_beat_peaks(s, dt, min_rr)

    onsets = []
    prev = 0
    for p in peaks.tolist():
        seg = s[prev : p + 1]
        foot = prev + (seg.size - 1 - int(np.argmin(seg[::-1])))
        if not onsets or rel[foot] > onsets[-1]:
            onsets.append(float(rel[foot]))
        prev = p
    return _rhythm_or_refuse(np.asarray(onsets), GatingMethod.PLETHYSMO,
                             trace.t0, min_rr, max_rr)


def _noise_floor(x: np.ndarray) -> float:
    """Robust white-noise sigma from first differences."""
    d = np.abs(np.diff(x))
    return float(np.median(d)) * 1.4826 / np.sqrt(2.0)


def _merge_short_runs(labels: np.ndarray, min_samples: int) -> np.ndarray:
    """Flip label runs shorter than min_samples into a neighbor, shortest
    first, until none remain."""
    labels = labels.copy()
    while True:
        change = np.flatnonzero(np.diff(labels.view(np.int8)))
        starts = np.concatenate([[0], change + 1])
        ends = np.concatenate([change + 1, [labels.size]])
        lengths = ends - starts
        if starts.size == 1 or lengths.min() >= min_samples:
            return labels
        k = int(np.argmin(lengths))
        labels[starts[k] : ends[k]] = ~labels[starts[k]]


def classify_resp(
    trace: PhysioTrace, smoothing_window: float = 500.0, hysteresis: float = 0.05
) -> RespPhases:
    """Split the belt trace into inspiration (rising) and expiration
    (falling) with a Schmitt trigger.

    The trace is smoothed by a centered moving average, then a rising /
    falling state machine flips only after the signal retreats from its
    running extremum by hysteresis * range; the transition is backdated
    to the extremum itself. Runs shorter than 200 ms are merged away.
    """
    if trace.kind is not PhysioKind.RESP_BELT:
        raise WrongKind(f"expected RESP_BELT trace, got {trace.kind.value}")
    if not 0 < hysteresis < 1:
        raise ValueOutOfRange(f"hysteresis fraction must be in (0, 1), got {hysteresis}")
    if trace.duration < 2000.0:
        raise ValueOutOfRange(
            f"trace spans {trace.duration:g} ms, need at least one breath (2000 ms)"
        )
    dt = trace.sample_interval
    s = moving_average(trace.samples, int(round(smoothing_window / dt)))
    rng = float(s.max() - s.min())
    noise = _noise_floor(trace.samples)
    if rng < 10.0 * noise or rng <= 0.0:
        raise FlatSignal(
            f"belt range {rng:g} is below 10x the noise floor {noise:g}; "
            f"cannot separate breathing phases"
        )
    band = hysteresis * rng

    n = s.size
    labels = np.zeros(n, dtype=bool)
    state = None  # True while rising
    ext_val = s[0]
    ext_idx = 0
    lo_val, lo_idx, hi_val, hi_idx = s[0], 0, s[0], 0
    seg_start = 0
    for i in range(1, n):
        x = s[i]
        if state is None:
            if x < lo_val:
                lo_val, lo_idx = x, i
            if x > hi_val:
                hi_val, hi_idx = x, i
            if x - lo_val > band:
                # everything before the first trough was the tail of an
                # expiration; no sample since the trough can exceed x
                # without having triggered already
                state = True
                labels[:lo_idx] = False
                seg_start = lo_idx
                ext_val, ext_idx = x, i
            elif hi_val - x > band:
                state = False
                labels[:hi_idx] = True
                seg_start = hi_idx
                ext_val, ext_idx = x, i
        elif state:
            if x > ext_val:
                ext_val, ext_idx = x, i
            elif ext_val - x > band:
                labels[seg_start:ext_idx] = True
                seg_start = ext_idx
                state = False
                ext_val, ext_idx = x, i
        else:
            if x < ext_val:
                ext_val, ext_idx = x, i
            elif x - ext_val > band:
                labels[seg_start:ext_idx] = False
                seg_start = ext_idx
                state = True
                ext_val, ext_idx = x, i
    if state is None:
        # never left the hysteresis band: label by overall trend
        labels[:] = s[-1] >= s[0]
    else:
        labels[seg_start:] = state

    labels = _merge_short_runs(labels, max(1, int(np.ceil(DEBOUNCE_MS / dt))))
    return RespPhases(
        t0=trace.t0,
        sample_interval=dt,
        inspiration=labels,
        smoothing_window=smoothing_window,
        hysteresis=hysteresis,
    )


def label_cycles(
    boundaries: CycleBoundaries, phases: RespPhases, flow: FlowSamples
) -> list[LabeledCycle]:
    """Cut the flow signal at the onsets and tag each cycle with its
    breathing phase.

    inspiration_fraction is the fraction of the cycle's flow samples
    falling on INSPIRATION-labeled physio samples; >= 0.7 makes the cycle
    INSPIRATION, <= 0.3 EXPIRATION, anything between MIXED. Intervals
    whose length falls outside [min_rr, max_rr] (dropped beats, double
    triggers) are skipped.
    """
    onsets = boundaries.onsets
    if not phases.covers(float(onsets[0]), float(onsets[-1])):
        raise ClockMismatch(
            "respiratory labels do not cover the gated time range "
            f"[{onsets[0]:g}, {onsets[-1]:g}] ms"
        )
    t = flow.timestamps
    cycles: list[LabeledCycle] = []
    for start, end in zip(onsets[:-1], onsets[1:]):
        rr = end - start
        if not boundaries.min_rr <= rr <= boundaries.max_rr:
            continue
        sel = (t >= start) & (t < end)
        n_samp = int(sel.sum())
        if n_samp == 0:
            continue
        if not 4 <= n_samp <= 24:
            warnings.warn(
                f"cycle at {start:.0f} ms holds {n_samp} samples; expected "
                f"roughly 8-12 for EPI-PC timing",
                stacklevel=2,
            )
        insp = phases.label_at(t[sel])
        frac = float(insp.mean())
        if frac >= 0.7:
            label = RespLabel.INSPIRATION
        elif frac <= 0.3:
            label = RespLabel.EXPIRATION
        else:
            label = RespLabel.MIXED
        cycles.append(
            LabeledCycle(
                cycle_id=len(cycles),
                start=float(start),
                end=float(end),
                t=t[sel],
                q=flow.q[sel],
                resp_label=label,
                inspiration_fraction=frac,
            )
        )
    return cycles
