"""ROI flow extraction: velocity maps in, flow waveform Q(t) out.

Positive flow is the systolic flush direction (craniocaudal). Units:
velocity cm/s, pixel area mm^2, flow mL/s; the 0.01 factor converts
mm^2 * cm/s to mL/s.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import EmptyMask, InvalidThreshold
from .ingest import RoiLabel, RoiMask, ensure_same_grid
from .velocity import VelocityField


@dataclass
class FlowSamples:
    """Flow waveform over the original frame clock.

    timestamps ms, q mL/s, pixel_area mm^2.
    """

    timestamps: np.ndarray
    q: np.ndarray
    roi_label: RoiLabel
    pixel_area: float
    n_roi_pixels: int

    def __post_init__(self):
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        self.q = np.asarray(self.q, dtype=np.float64)
        if self.timestamps.shape != self.q.shape or self.timestamps.ndim != 1:
            raise ValueError("timestamps and q must be 1D and the same length")


def extract_flow(field: VelocityField, roi: RoiMask) -> FlowSamples:
    """Integrate velocity over the ROI per frame.

    q(t) = sum over ROI pixels of v_i(t) * pixel_area * 0.01  [mL/s]

    The field should be background corrected first; an uncorrected offset
    turns into a spurious constant flow of n_pixels * area * offset / 100.
    """
    ensure_same_grid(roi, field.header)
    area = field.header.pixel_area
    q = field.frames[:, roi.pixels].sum(axis=1) * (area * 0.01)
    return FlowSamples(
        timestamps=field.timestamps,
        q=q,
        roi_label=roi.label,
        pixel_area=area,
        n_roi_pixels=roi.n_pixels,
    )


def refine_roi(field: VelocityField, seed: RoiMask, threshold: float = 0.7) -> RoiMask:
    """Grow the seed into the set of pixels that pulse with it.

    Each pixel's velocity-versus-time profile is correlated (Pearson)
    against the mean profile of the seed pixels. Pixels at or above the
    threshold that are 8-connected to qualifying seed pixels form the
    refined mask. Constant-in-time pixels have no defined correlation and
    never qualify, which is what keeps static background out even at
    threshold 0.
    """
    if not 0.0 <= threshold <= 1.0:
        raise InvalidThreshold(f"correlation threshold must be in [0, 1], got {threshold}")
    ensure_same_grid(seed, field.header)
    v = field.frames
    n_frames = v.shape[0]
    ref = v[:, seed.pixels].mean(axis=1)
    ref_c = ref - ref.mean()
    ref_norm = float(np.sqrt((ref_c**2).sum()))
    if ref_norm == 0.0 or n_frames < 2:
        raise EmptyMask("seed region has no temporal variation to correlate against")

    centered = v - v.mean(axis=0)
    pix_norm = np.sqrt((centered**2).sum(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.tensordot(ref_c, centered, axes=(0, 0)) / (ref_norm * pix_norm)
    eligible = np.nan_to_num(corr, nan=-2.0) >= threshold

    h, w = eligible.shape
    visited = np.zeros_like(eligible)
    queue = deque()
    seed_rows, seed_cols = np.nonzero(seed.pixels & eligible)
    for r, c in zip(seed_rows.tolist(), seed_cols.tolist()):
        visited[r, c] = True
        queue.append((r, c))
    while queue:
        r, c = queue.popleft()
        for dr in (-1, 0, 1):
            for dc in (-1, 0, 1):
                if dr == 0 and dc == 0:
                    continue
                rr, cc = r + dr, c + dc
                if 0 <= rr < h and 0 <= cc < w and eligible[rr, cc] and not visited[rr, cc]:
                    visited[rr, cc] = True
                    queue.append((rr, cc))
    if not visited.any():
        raise EmptyMask("no pixel met the correlation threshold")
    return RoiMask(pixels=visited, label=seed.label)
