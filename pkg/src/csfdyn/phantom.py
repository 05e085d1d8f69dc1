"""Forward simulator for pulsatile phase-contrast acquisitions with
analytic ground truth: the verification backbone of the package.

The cardiac waveform is a zero-mean sum of sine harmonics starting on an
upward zero-crossing, scaled so the base stroke volume equals the
requested sv_true. Breathing modulates the instantaneous flow
multiplicatively during inspiration: Q(t) = Q_card(t) * (1 + m) while
inspiring, Q_card(t) otherwise.

All randomness comes from counter-based Philox streams keyed as
(seed, stream_id), so any part of a dataset can be regenerated
independently and bit-identically: stream 1 cycle-length jitter,
stream 2 belt noise, streams 16+k per-frame phase noise, streams
2^20+k per-cycle noise of the gated reconstruction, streams 1000+k
cohort parameter jitter.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .gating import RespLabel
from .ingest import (
    Encoding,
    PhysioKind,
    PhysioTrace,
    RoiLabel,
    RoiMask,
    SeriesHeader,
    SeriesKind,
    VelocitySeries,
    write_mask,
    write_physio,
    write_series,
)

QUAD_POINTS = 1 << 17  # dense-grid quadrature resolution for truth values

# largest float32 values still inside [-pi, pi)
_PHASE32_LO = np.nextafter(np.float32(-np.pi), np.float32(0.0))
_PHASE32_HI = np.nextafter(np.float32(np.pi), np.float32(0.0))


class FlowProfile(str, Enum):
    PLUG = "PLUG"
    POISEUILLE = "POISEUILLE"


@dataclass(frozen=True)
class LumenSpec:
    center_row: float = 32.0
    center_col: float = 32.0
    radius_px: float = 3.0
    profile: FlowProfile = FlowProfile.PLUG
    label: RoiLabel = RoiLabel.AQUEDUCT


@dataclass(frozen=True)
class GridSpec:
    width: int = 64
    height: int = 64
    spacing_x: float = 1.2
    spacing_y: float = 1.2
    thickness: float = 4.0


@dataclass(frozen=True)
class CardiacSpec:
    rr_mean: float = 1143.0
    rr_jitter_sd: float = 0.0
    harmonics: tuple = (1.0, 0.35, 0.12)
    #: base (expiration-state) stroke volume at rr_mean, mL
    sv_true: float = 0.15

    def __post_init__(self):
        object.__setattr__(self, "harmonics", tuple(float(b) for b in self.harmonics))


@dataclass(frozen=True)
class RespSpec:
    period: float = 5000.0
    insp_fraction: float = 0.45
    modulation_insp: float = 0.0
    belt_noise_sd: float = 0.02
    belt_interval: float = 40.0
    pleth_interval: float = 10.0


@dataclass(frozen=True)
class AcquisitionSpec:
    venc: float = 10.0
    frame_interval: float = 88.0
    duration: float = 80000.0
    noise_sd_phase: float = 0.02
    background_offset: float = 0.0
    drift_amplitude: float = 0.0
    drift_period: float = 15000.0
    series_kind: SeriesKind = SeriesKind.CONTINUOUS_EPI


@dataclass(frozen=True)
class PhantomSpec:
    lumen: LumenSpec = field(default_factory=LumenSpec)
    grid: GridSpec = field(default_factory=GridSpec)
    cardiac: CardiacSpec = field(default_factory=CardiacSpec)
    resp: RespSpec = field(default_factory=RespSpec)
    acquisition: AcquisitionSpec = field(default_factory=AcquisitionSpec)
    seed: int = 42

    def __post_init__(self):
        g, lu, c, r, a = self.grid, self.lumen, self.cardiac, self.resp, self.acquisition
        if g.width < 2 or g.height < 2:
            raise InvalidSpec("grid must be at least 2x2")
        if g.spacing_x <= 0 or g.spacing_y <= 0 or g.thickness <= 0:
            raise InvalidSpec("grid spacings and thickness must be positive")
        if lu.radius_px <= 0:
            raise InvalidSpec("lumen radius must be positive")
        if (
            lu.center_row - lu.radius_px < 0
            or lu.center_col - lu.radius_px < 0
            or lu.center_row + lu.radius_px > g.height - 1
            or lu.center_col + lu.radius_px > g.width - 1
        ):
            raise InvalidSpec("lumen exceeds the grid")
        if lu.profile is FlowProfile.POISEUILLE and g.spacing_x != g.spacing_y:
            raise InvalidSpec("POISEUILLE profile requires isotropic pixel spacing")
        if c.rr_mean <= 0 or c.rr_jitter_sd < 0:
            raise InvalidSpec("rr_mean must be positive and jitter non-negative")
        if c.sv_true <= 0:
            raise InvalidSpec("sv_true must be positive")
        if not any(b != 0 for b in c.harmonics):
            raise InvalidSpec("waveform harmonics must not all be zero")
        if r.period <= 0 or not 0 < r.insp_fraction < 1:
            raise InvalidSpec("breathing period must be positive and insp_fraction in (0,1)")
        if r.modulation_insp <= -1:
            raise InvalidSpec("modulation_insp must keep 1+m positive")
        if r.belt_noise_sd < 0 or r.belt_interval <= 0 or r.pleth_interval <= 0:
            raise InvalidSpec("belt noise sd must be >= 0 and sample intervals positive")
        if a.venc <= 0 or a.frame_interval <= 0 or a.duration <= 0:
            raise InvalidSpec("venc, frame_interval and duration must be positive")
        if a.noise_sd_phase < 0 or a.drift_period <= 0:
            raise InvalidSpec("noise sd must be >= 0 and drift period positive")
        if a.duration < 5 * c.rr_mean:
            raise InvalidSpec("duration must cover at least 5 cardiac cycles")
        if not 0 <= self.seed < 2**63:
            raise InvalidSpec("seed must fit in 63 bits")

    def to_json_dict(self) -> dict:
        d = asdict(self)
        d["lumen"]["profile"] = self.lumen.profile.value
        d["lumen"]["label"] = self.lumen.label.value
        d["cardiac"]["harmonics"] = list(self.cardiac.harmonics)
        d["acquisition"]["series_kind"] = self.acquisition.series_kind.value
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "PhantomSpec":
        try:
            sections = dict(d)
            lumen = dict(sections.pop("lumen", {}))
            if "profile" in lumen:
                lumen["profile"] = FlowProfile(lumen["profile"])
            if "label" in lumen:
                lumen["label"] = RoiLabel(lumen["label"])
            grid = dict(sections.pop("grid", {}))
            cardiac = dict(sections.pop("cardiac", {}))
            if "harmonics" in cardiac:
                cardiac["harmonics"] = tuple(cardiac["harmonics"])
            resp = dict(sections.pop("resp", {}))
            acq = dict(sections.pop("acquisition", {}))
            if "series_kind" in acq:
                acq["series_kind"] = SeriesKind(acq["series_kind"])
            seed = sections.pop("seed", 42)
            if sections:
                raise InvalidSpec(f"unknown spec keys: {sorted(sections)}")
            return cls(
                lumen=LumenSpec(**lumen),
                grid=GridSpec(**grid),
                cardiac=CardiacSpec(**cardiac),
                resp=RespSpec(**resp),
                acquisition=AcquisitionSpec(**acq),
                seed=int(seed),
            )
        except (TypeError, ValueError) as exc:
            raise InvalidSpec(f"bad phantom spec: {exc}") from exc


def default_aqueduct_spec(**overrides) -> PhantomSpec:
    """Aqueduct-scale phantom matching the default EPI timing."""
    return replace(PhantomSpec(), **overrides)


def default_spinal_spec(**overrides) -> PhantomSpec:
    """Spinal-canal-scale phantom: wider lumen, lower venc, mL-scale SV."""
    base = PhantomSpec(
        lumen=LumenSpec(radius_px=8.0, label=RoiLabel.SPINAL_CANAL),
        cardiac=CardiacSpec(sv_true=0.6),
        acquisition=AcquisitionSpec(venc=5.0),
    )
    return replace(base, **overrides)


# ---------------------------------------------------------------------------
# analytic waveform


def waveform(u, harmonics) -> np.ndarray:
    """Unit cardiac flow shape: sum of b_j * sin(2*pi*(j+1)*u).

    Zero mean over a period, zero at u = 0 with positive slope for the
    default coefficients, so phase 0 is the onset of the systolic flush.
    """
    u = np.asarray(u, dtype=np.float64)
    out = np.zeros_like(u)
    for j, b in enumerate(harmonics):
        if b != 0.0:
            out += b * np.sin(2.0 * np.pi * (j + 1) * u)
    return out


@lru_cache(maxsize=64)
def waveform_positive_integral(harmonics: tuple) -> float:
    """I = integral over one period of max(shape, 0) du, dense trapezoid."""
    u = np.linspace(0.0, 1.0, QUAD_POINTS + 1)
    q = np.maximum(waveform(u, harmonics), 0.0)
    h = 1.0 / QUAD_POINTS
    return float(h * (0.5 * (q[0] + q[-1]) + q[1:-1].sum()))


@lru_cache(maxsize=64)
def waveform_peak(harmonics: tuple) -> float:
    """max |shape| over one period, dense grid."""
    u = np.linspace(0.0, 1.0, QUAD_POINTS + 1)
    return float(np.abs(waveform(u, harmonics)).max())


def flow_amplitude(spec: PhantomSpec) -> float:
    """Scale factor amp (mL/s) such that the base waveform amp*shape(u)
    carries sv_true per cycle of rr_mean (lobe-mean convention)."""
    integral = waveform_positive_integral(tuple(spec.cardiac.harmonics))
    if integral <= 0:
        raise InvalidSpec("waveform has no positive lobe; sv_true cannot be met")
    return 1000.0 * spec.cardiac.sv_true / (integral * spec.cardiac.rr_mean)


# ---------------------------------------------------------------------------
# geometry


def _pixel_distances(spec: PhantomSpec) -> np.ndarray:
    g, lu = spec.grid, spec.lumen
    rows = np.arange(g.height, dtype=np.float64)[:, None]
    cols = np.arange(g.width, dtype=np.float64)[None, :]
    return np.sqrt((rows - lu.center_row) ** 2 + (cols - lu.center_col) ** 2)


def lumen_mask(spec: PhantomSpec) -> RoiMask:
    return RoiMask(pixels=_pixel_distances(spec) <= spec.lumen.radius_px,
                   label=spec.lumen.label)


def static_mask(spec: PhantomSpec, margin_px: float = 2.0) -> RoiMask:
    """Everything safely outside the lumen."""
    return RoiMask(
        pixels=_pixel_distances(spec) > spec.lumen.radius_px + margin_px,
        label=RoiLabel.STATIC_TISSUE,
    )


def _profile_weights(spec: PhantomSpec) -> tuple[np.ndarray, float]:
    """Per-pixel velocity weights w and scale s so that the velocity map
    for flux Q is v = s * Q * w (cm/s with Q in mL/s).

    PLUG divides Q evenly, so the discrete flux is exact by construction.
    POISEUILLE uses the analytic centerline velocity of a parabolic
    profile over the nominal circular area; its discrete flux carries a
    small pixelization error that shrinks with radius.
    """
    dist = _pixel_distances(spec)
    inside = dist <= spec.lumen.radius_px
    area = spec.grid.spacing_x * spec.grid.spacing_y
    if spec.lumen.profile is FlowProfile.PLUG:
        w = inside.astype(np.float64)
        scale = 1.0 / (float(inside.sum()) * area * 0.01)
    else:
        w = np.where(inside, 1.0 - (dist / spec.lumen.radius_px) ** 2, 0.0)
        radius_mm = spec.lumen.radius_px * spec.grid.spacing_x
        scale = 200.0 / (np.pi * radius_mm**2)
    return w, scale


# ---------------------------------------------------------------------------
# ground truth


@dataclass
class GroundTruth:
    """Everything the simulator knows and the pipeline must recover."""

    spec: PhantomSpec
    amplitude: float
    onsets: np.ndarray
    rr: np.ndarray
    insp_time_fraction: np.ndarray
    resp_label: list
    sv_per_cycle: np.ndarray
    sv_exp: float
    sv_insp: float
    modulation: float
    #: internal onset list extended one cycle past the acquisition window
    _onsets_ext: np.ndarray = field(repr=False, default=None)

    def inspiration(self, t) -> np.ndarray:
        """True respiratory state at time t (ms)."""
        r = self.spec.resp
        return np.mod(np.asarray(t, dtype=np.float64), r.period) < r.insp_fraction * r.period

    def cardiac_phase(self, t) -> np.ndarray:
        """Phase in [0,1) within the cycle active at each time."""
        t = np.asarray(t, dtype=np.float64)
        idx = np.clip(np.searchsorted(self._onsets_ext, t, side="right") - 1,
                      0, self._onsets_ext.size - 2)
        rr = np.diff(self._onsets_ext)[idx]
        return (t - self._onsets_ext[idx]) / rr

    def q(self, t) -> np.ndarray:
        """Analytic lumen flux Q(t) in mL/s including modulation."""
        base = self.amplitude * waveform(self.cardiac_phase(t),
                                         tuple(self.spec.cardiac.harmonics))
        return base * (1.0 + self.modulation * self.inspiration(t))

    def to_json_dict(self) -> dict:
        return {
            "spec": self.spec.to_json_dict(),
            "amplitude_ml_per_s": self.amplitude,
            "onsets_ms": self.onsets.tolist(),
            "rr_ms": self.rr.tolist(),
            "insp_time_fraction": self.insp_time_fraction.tolist(),
            "resp_label": [lab.value for lab in self.resp_label],
            "sv_per_cycle_ml": self.sv_per_cycle.tolist(),
            "sv_exp_ml": self.sv_exp,
            "sv_insp_ml": self.sv_insp,
            "modulation": self.modulation,
        }


@dataclass
class PhantomDataset:
    series: VelocitySeries
    belt: PhysioTrace
    plethysmo: PhysioTrace
    truth: GroundTruth
    lumen: RoiMask
    static: RoiMask


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.array([seed, stream], dtype=np.uint64)))


def _draw_onsets(spec: PhantomSpec) -> np.ndarray:
    """Cycle start times from 0 until one full cycle past the duration."""
    c = spec.cardiac
    rng = _rng(spec.seed, 1)
    onsets = [0.0]
    while onsets[-1] <= spec.acquisition.duration:
        rr = c.rr_mean + (rng.normal(0.0, c.rr_jitter_sd) if c.rr_jitter_sd > 0 else 0.0)
        rr = max(rr, 0.3 * c.rr_mean)
        onsets.append(onsets[-1] + rr)
    return np.asarray(onsets, dtype=np.float64)


def _insp_time_in(spec: PhantomSpec, t0: float, t1: float) -> float:
    """Exact inspiration time within [t0, t1)."""
    p = spec.resp.period
    w = spec.resp.insp_fraction * p

    def upto(t: float) -> float:
        n, r = divmod(t, p)
        return n * w + min(r, w)

    return upto(t1) - upto(t0)


def _make_truth(spec: PhantomSpec) -> GroundTruth:
    amp = flow_amplitude(spec)
    onsets_ext = _draw_onsets(spec)
    onsets = onsets_ext[onsets_ext <= spec.acquisition.duration]
    rr = np.diff(onsets_ext)[: onsets.size - 1]
    m = spec.resp.modulation_insp
    harmonics = tuple(spec.cardiac.harmonics)

    fracs = np.array(
        [_insp_time_in(spec, o, o + r) / r for o, r in zip(onsets[:-1], rr)]
    )
    labels = [
        RespLabel.INSPIRATION if f >= 0.7
        else RespLabel.EXPIRATION if f <= 0.3
        else RespLabel.MIXED
        for f in fracs
    ]
    # per-cycle volume by dense quadrature of |Q| with the instantaneous
    # modulation (lobe-mean convention: half of total rectified volume)
    u = (np.arange(4096, dtype=np.float64) + 0.5) / 4096
    shape_abs = np.abs(waveform(u, harmonics))
    sv_cycle = np.empty(rr.size)
    for k, (o, r) in enumerate(zip(onsets[:-1], rr)):
        insp = np.mod(o + u * r, spec.resp.period) < spec.resp.insp_fraction * spec.resp.period
        gain = 1.0 + m * insp
        sv_cycle[k] = 0.5 * amp * float(np.mean(shape_abs * gain)) * r / 1000.0

    sv_exp = spec.cardiac.sv_true
    return GroundTruth(
        spec=spec,
        amplitude=amp,
        onsets=onsets,
        rr=rr,
        insp_time_fraction=fracs,
        resp_label=labels,
        sv_per_cycle=sv_cycle,
        sv_exp=sv_exp,
        sv_insp=(1.0 + m) * sv_exp,
        modulation=m,
        _onsets_ext=onsets_ext,
    )


def _wrap_phase32(phase64: np.ndarray) -> np.ndarray:
    """Wrap to [-pi, pi) and quantize to float32 without leaving the
    half-open interval (float32 rounding can land exactly on +-pi)."""
    wrapped = np.mod(phase64 + np.pi, 2.0 * np.pi) - np.pi
    return np.clip(wrapped.astype(np.float32), _PHASE32_LO, _PHASE32_HI)


def _drift(spec: PhantomSpec, t: np.ndarray) -> np.ndarray:
    a = spec.acquisition
    if a.drift_amplitude == 0.0:
        return np.zeros_like(t)
    return a.drift_amplitude * np.sin(2.0 * np.pi * t / a.drift_period)


def generate(spec: PhantomSpec) -> PhantomDataset:
    """Simulate one continuous acquisition plus belt and plethysmograph.

    Velocity per pixel is the profile weight times the instantaneous
    flux-matched center velocity; phase = pi*v/venc plus Gaussian noise,
    wrapped into [-pi, pi) so aliasing emerges naturally when |v| > venc,
    then quantized to float32 like a real reconstruction would.
    """
    if spec.acquisition.series_kind is not SeriesKind.CONTINUOUS_EPI:
        raise InvalidSpec("generate() builds CONTINUOUS_EPI series; "
                          "use generate_gated() for GATED_CONV")
    a = spec.acquisition
    truth = _make_truth(spec)
    w, scale = _profile_weights(spec)

    n_frames = int(a.duration // a.frame_interval)
    t = np.arange(n_frames, dtype=np.float64) * a.frame_interval
    q_t = truth.q(t)
    v = (scale * q_t)[:, None, None] * w[None, :, :]
    v += (a.background_offset + _drift(spec, t))[:, None, None]

    phase = np.pi * v / a.venc
    if a.noise_sd_phase > 0:
        for k in range(n_frames):
            phase[k] += _rng(spec.seed, 16 + k).normal(
                0.0, a.noise_sd_phase, size=phase[k].shape
            )
    frames = _wrap_phase32(phase)

    header = SeriesHeader(
        width=spec.grid.width,
        height=spec.grid.height,
        n_frames=n_frames,
        pixel_spacing_x=spec.grid.spacing_x,
        pixel_spacing_y=spec.grid.spacing_y,
        slice_thickness=spec.grid.thickness,
        venc=a.venc,
        frame_interval=a.frame_interval,
        t0=0.0,
        encoding=Encoding.PHASE_RADIANS,
        series_kind=SeriesKind.CONTINUOUS_EPI,
    )
    series = VelocitySeries(header=header, frames=frames)

    r = spec.resp
    n_belt = int(a.duration // r.belt_interval) + 1
    tb = np.arange(n_belt, dtype=np.float64) * r.belt_interval
    breath = np.mod(tb, r.period) / r.period
    f = r.insp_fraction
    belt_clean = np.where(
        breath < f,
        0.5 - 0.5 * np.cos(np.pi * breath / f),
        0.5 + 0.5 * np.cos(np.pi * (breath - f) / (1.0 - f)),
    )
    belt_vals = belt_clean + _rng(spec.seed, 2).normal(0.0, r.belt_noise_sd, size=n_belt)
    belt = PhysioTrace(sample_interval=r.belt_interval, t0=0.0,
                       samples=belt_vals, kind=PhysioKind.RESP_BELT)

    n_pleth = int(a.duration // r.pleth_interval) + 1
    tp = np.arange(n_pleth, dtype=np.float64) * r.pleth_interval
    pleth_vals = 1.0 - np.cos(2.0 * np.pi * truth.cardiac_phase(tp))
    plethysmo = PhysioTrace(sample_interval=r.pleth_interval, t0=0.0,
                            samples=pleth_vals, kind=PhysioKind.CARDIAC_PLETHYSMO)

    return PhantomDataset(
        series=series,
        belt=belt,
        plethysmo=plethysmo,
        truth=truth,
        lumen=lumen_mask(spec),
        static=static_mask(spec),
    )


def generate_gated(spec: PhantomSpec) -> VelocitySeries:
    """Retrospectively gated 32-frame reconstruction of the same subject.

    Each bin b collects one noisy velocity sample per simulated cycle at
    phase b/32 and averages them, exactly as cine gating would; the
    respiratory modulation therefore blurs into the mean instead of
    appearing as two distinct states.
    """
    if spec.acquisition.series_kind is not SeriesKind.GATED_CONV:
        raise InvalidSpec("generate_gated() needs series_kind = GATED_CONV")
    a = spec.acquisition
    base = replace(spec, acquisition=replace(a, series_kind=SeriesKind.CONTINUOUS_EPI))
    truth = _make_truth(base)
    w, scale = _profile_weights(spec)
    harmonics = tuple(spec.cardiac.harmonics)
    m = spec.resp.modulation_insp

    onsets = truth.onsets
    rr = truth.rr
    n_cycles = rr.size
    if n_cycles < 1:
        raise InvalidSpec("duration holds no complete cardiac cycle")
    phases = np.arange(32, dtype=np.float64) / 32.0
    shape = waveform(phases, harmonics)

    mean = np.zeros((32, spec.grid.height, spec.grid.width), dtype=np.float64)
    for k in range(n_cycles):
        t_kb = onsets[k] + phases * rr[k]
        gain = 1.0 + m * truth.inspiration(t_kb)
        q_kb = truth.amplitude * shape * gain
        v = (scale * q_kb)[:, None, None] * w[None, :, :]
        v += (a.background_offset + _drift(spec, t_kb))[:, None, None]
        phase = np.pi * v / a.venc
        if a.noise_sd_phase > 0:
            phase += _rng(spec.seed, (1 << 20) + k).normal(
                0.0, a.noise_sd_phase, size=phase.shape
            )
        phase = np.mod(phase + np.pi, 2.0 * np.pi) - np.pi
        mean += phase * (a.venc / np.pi)
    mean /= n_cycles

    header = SeriesHeader(
        width=spec.grid.width,
        height=spec.grid.height,
        n_frames=32,
        pixel_spacing_x=spec.grid.spacing_x,
        pixel_spacing_y=spec.grid.spacing_y,
        slice_thickness=spec.grid.thickness,
        venc=a.venc,
        frame_interval=spec.cardiac.rr_mean / 32.0,
        t0=0.0,
        encoding=Encoding.VELOCITY_CMPS,
        series_kind=SeriesKind.GATED_CONV,
    )
    return VelocitySeries(header=header, frames=mean)


# ---------------------------------------------------------------------------
# cohort


@dataclass(frozen=True)
class CohortJitter:
    """Per-subject spread of the physiology parameters."""

    rr_sd_ms: float = 60.0
    sv_rel_sd: float = 0.15
    modulation_sd: float = 0.01


@dataclass(frozen=True)
class CohortSubject:
    subject_id: str
    spec: PhantomSpec


def cohort(
    n_subjects: int,
    base: PhantomSpec | None = None,
    jitter: CohortJitter | None = None,
    seed: int = 7,
) -> list[CohortSubject]:
    """Deterministic list of subject specs varied around a base spec."""
    if n_subjects < 1:
        raise InvalidSpec("cohort needs at least one subject")
    base = base if base is not None else default_aqueduct_spec()
    jitter = jitter if jitter is not None else CohortJitter()
    subjects = []
    for k in range(n_subjects):
        rng = _rng(seed, 1000 + k)
        rr = float(np.clip(base.cardiac.rr_mean + rng.normal(0.0, jitter.rr_sd_ms),
                           600.0, 1800.0))
        sv = base.cardiac.sv_true * float(max(0.2, 1.0 + rng.normal(0.0, jitter.sv_rel_sd)))
        mod = float(np.clip(base.resp.modulation_insp + rng.normal(0.0, jitter.modulation_sd),
                            0.0, 0.5))
        spec = replace(
            base,
            cardiac=replace(base.cardiac, rr_mean=rr, sv_true=sv),
            resp=replace(base.resp, modulation_insp=mod),
            seed=(seed * 1_000_003 + 7919 * (k + 1)) % (2**63),
        )
        subjects.append(CohortSubject(subject_id=f"S{k + 1:02d}", spec=spec))
    return subjects


# ---------------------------------------------------------------------------
# disk layout


def save_dataset(ds: PhantomDataset, outdir) -> dict:
    """Write one subject's files; returns name -> path mapping."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "series": outdir / "series.csfd",
        "belt": outdir / "belt.csv",
        "plethysmo": outdir / "plethysmo.csv",
        "lumen": outdir / "lumen.pgm",
        "static": outdir / "static.pgm",
        "truth": outdir / "truth.json",
    }
    write_series(ds.series, paths["series"])
    write_physio(ds.belt, paths["belt"])
    write_physio(ds.plethysmo, paths["plethysmo"])
    write_mask(ds.lumen, paths["lumen"])
    write_mask(ds.static, paths["static"])
    paths["truth"].write_text(
        json.dumps(ds.truth.to_json_dict(), sort_keys=True, indent=1) + "\n",
        encoding="utf-8",
    )
    return {k: str(v) for k, v in paths.items()}
