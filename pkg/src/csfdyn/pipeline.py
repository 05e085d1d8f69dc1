"""End-to-end subject processing: velocity conversion, flow extraction,
gating, ensemble reconstruction, and stroke volume metrics, with every
failure attributed to its pipeline stage.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .ensemble import (
    CanonicalCycle,
    EnsembleCurves,
    build_ensembles,
    resample_cycle,
)
from .errors import CsfdynError, InputError, TooFewSamples
from .flow import FlowSamples, extract_flow, refine_roi
from .gating import (
    DEFAULT_MAX_RR,
    DEFAULT_MIN_RR,
    CycleBoundaries,
    LabeledCycle,
    RespLabel,
    RespPhases,
    classify_resp,
    detect_cycles_from_flow,
    detect_cycles_from_plethysmo,
    label_cycles,
)
from .ingest import (
    Encoding,
    PhysioTrace,
    RoiLabel,
    RoiMask,
    SeriesKind,
    VelocitySeries,
)
from .metrics import SvConvention, SvReport, VolumeUnit, reversal_check, stroke_volume
from .velocity import (
    VelocityField,
    as_velocity_field,
    background_correct,
    phase_to_velocity,
    unwrap_temporal,
)


@dataclass(frozen=True)
class PipelineParams:
    """Every knob of the subject pipeline in one place, echoed verbatim
    into reports."""

    min_rr: float = DEFAULT_MIN_RR
    max_rr: float = DEFAULT_MAX_RR
    smoothing_window: float = 500.0
    hysteresis: float = 0.05
    interp: str = "spline"
    sv_convention: SvConvention = SvConvention.LOBE_MEAN
    unit: str = "auto"  # auto: uL for AQUEDUCT, mL otherwise
    flip_sign: bool = False
    anchor: int = 0
    refine_threshold: float | None = None
    gate: str = "flow"  # flow | plethysmo

    def to_json_dict(self) -> dict:
        return {
            "min_rr": self.min_rr,
            "max_rr": self.max_rr,
            "smoothing_window": self.smoothing_window,
            "hysteresis": self.hysteresis,
            "interp": self.interp,
            "sv_convention": self.sv_convention.value,
            "unit": self.unit,
            "flip_sign": self.flip_sign,
            "anchor": self.anchor,
            "refine_threshold": self.refine_threshold,
            "gate": self.gate,
        }


@dataclass
class SubjectResult:
    """Everything cmd_process reports on one subject."""

    params: PipelineParams
    roi_label: RoiLabel
    unit: VolumeUnit
    background_offset: float | None
    flow: FlowSamples
    boundaries: CycleBoundaries | None
    phases: RespPhases | None
    cycles: list[LabeledCycle]
    canonical: list[CanonicalCycle]
    curves: EnsembleCurves
    sv_global: SvReport
    sv_insp: SvReport | None
    sv_exp: SvReport | None
    modulation: float | None
    reversal: dict
    n_skipped_cycles: int = 0
    notes: list[str] = field(default_factory=list)


def _staged(stage: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except CsfdynError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = stage
        raise


def _resolve_unit(params: PipelineParams, roi_label: RoiLabel) -> VolumeUnit:
    if params.unit == "auto":
        return VolumeUnit.UL if roi_label is RoiLabel.AQUEDUCT else VolumeUnit.ML
    return VolumeUnit(params.unit)


def prepare_velocity(
    series: VelocitySeries,
    static: RoiMask | None,
    params: PipelineParams,
) -> tuple[VelocityField, float | None]:
    """Stage 1-2: encoding, sign convention, unwrap, background offset."""
    if series.header.encoding is Encoding.PHASE_RADIANS:
        fld = _staged("velocity", phase_to_velocity, series)
    else:
        fld = _staged("velocity", as_velocity_field, series)
    if params.flip_sign:
        fld = VelocityField(
            header=fld.header,
            frames=-fld.frames,
            unwrapped=fld.unwrapped,
            background_corrected=fld.background_corrected,
        )
    fld = _staged("velocity", unwrap_temporal, fld, params.anchor)
    offset = None
    if static is not None:
        fld, offset = _staged("velocity", background_correct, fld, static)
    return fld, offset


def _gated_passthrough(
    flow: FlowSamples, params: PipelineParams, unit: VolumeUnit, offset, roi_label
) -> SubjectResult:
    """A GATED_CONV series is already one reconstructed cycle: its 32
    samples are adopted as the global curve with no gating stage."""
    rr = flow.timestamps.size * (flow.timestamps[1] - flow.timestamps[0])
    cyc = CanonicalCycle(
        q32=flow.q, source_cycle_id=0, resp_label=RespLabel.MIXED, rr=float(rr)
    )
    curves = _staged("ensemble", build_ensembles, [cyc])
    sv = _staged(
        "metrics", stroke_volume, curves.global_mean, curves.mean_rr_global,
        unit, params.sv_convention,
    )
    return SubjectResult(
        params=params,
        roi_label=roi_label,
        unit=unit,
        background_offset=offset,
        flow=flow,
        boundaries=None,
        phases=None,
        cycles=[],
        canonical=[cyc],
        curves=curves,
        sv_global=sv,
        sv_insp=None,
        sv_exp=None,
        modulation=None,
        reversal={"global": reversal_check(curves.global_mean)},
        notes=["gated series: cardiac gating already applied at acquisition"],
    )


def process_subject(
    series: VelocitySeries,
    roi: RoiMask,
    params: PipelineParams | None = None,
    static: RoiMask | None = None,
    belt: PhysioTrace | None = None,
    plethysmo: PhysioTrace | None = None,
) -> SubjectResult:
    """Run the whole chain on one subject.

    A continuous series needs a belt trace (and optionally a
    plethysmograph when params.gate = "plethysmo"); a gated series is
    reduced to metrics directly. Raised errors carry a .stage attribute
    naming the pipeline stage that refused.
    """
    params = params or PipelineParams()
    unit = _resolve_unit(params, roi.label)
    fld, offset = prepare_velocity(series, static, params)

    if params.refine_threshold is not None:
        roi = _staged("flow", refine_roi, fld, roi, params.refine_threshold)
    flow = _staged("flow", extract_flow, fld, roi)

    if series.header.series_kind is SeriesKind.GATED_CONV:
        return _gated_passthrough(flow, params, unit, offset, roi.label)

    if belt is None:
        raise InputError("a respiratory belt trace is required for continuous series",
                         ).with_stage("gating")
    if params.gate == "plethysmo":
        if plethysmo is None:
            raise InputError("gate=plethysmo needs a plethysmograph trace"
                             ).with_stage("gating")
        boundaries = _staged(
            "gating", detect_cycles_from_plethysmo, plethysmo, params.min_rr, params.max_rr
        )
    else:
        boundaries = _staged(
            "gating", detect_cycles_from_flow, flow, params.min_rr, params.max_rr
        )
    phases = _staged("gating", classify_resp, belt, params.smoothing_window,
                     params.hysteresis)
    cycles = _staged("gating", label_cycles, boundaries, phases, flow)

    canonical: list[CanonicalCycle] = []
    n_skipped = 0
    for cyc in cycles:
        try:
            canonical.append(resample_cycle(cyc, params.interp))
        except TooFewSamples:
            n_skipped += 1
            warnings.warn(
                f"cycle at {cyc.start:.0f} ms dropped: {cyc.n_samples} samples "
                f"cannot support resampling",
                stacklevel=2,
            )
    curves = _staged("ensemble", build_ensembles, canonical)

    def sv_of(curve, rr):
        return _staged("metrics", stroke_volume, curve, rr, unit, params.sv_convention)

    sv_global = sv_of(curves.global_mean, curves.mean_rr_global)
    sv_insp = sv_of(curves.insp_mean, curves.mean_rr_insp) if curves.insp_mean is not None else None
    sv_exp = sv_of(curves.exp_mean, curves.mean_rr_exp) if curves.exp_mean is not None else None
    modulation = None
    if sv_insp is not None and sv_exp is not None and sv_exp.sv != 0.0:
        modulation = (sv_insp.sv - sv_exp.sv) / sv_exp.sv

    reversal = {"global": reversal_check(curves.global_mean)}
    if curves.insp_mean is not None:
        reversal["inspiration"] = reversal_check(curves.insp_mean)
    if curves.exp_mean is not None:
        reversal["expiration"] = reversal_check(curves.exp_mean)

    return SubjectResult(
        params=params,
        roi_label=roi.label,
        unit=unit,
        background_offset=offset,
        flow=flow,
        boundaries=boundaries,
        phases=phases,
        cycles=cycles,
        canonical=canonical,
        curves=curves,
        sv_global=sv_global,
        sv_insp=sv_insp,
        sv_exp=sv_exp,
        modulation=modulation,
        reversal=reversal,
        n_skipped_cycles=n_skipped,
    )


def result_to_report(result: SubjectResult, version: str, inputs: dict) -> dict:
    """Assemble the JSON-ready subject report."""

    def sv_dict(sv: SvReport | None):
        if sv is None:
            return None
        return {
            "sv": sv.sv,
            "v_plus": sv.v_plus,
            "v_minus": sv.v_minus,
            "net_flow_ml_per_min": sv.net_flow,
            "flush_duration_fraction": sv.flush_duration_fraction,
            "direction_reversals": sv.direction_reversals,
            "mean_rr_ms": sv.mean_rr,
            "unit": sv.unit.value,
            "convention": sv.convention.value,
        }

    curves = result.curves
    gating = None
    if result.boundaries is not None:
        gating = {
            "method": result.boundaries.method.value,
            "n_cycles": result.boundaries.n_cycles,
            "mean_rr_ms": result.boundaries.mean_rr,
            "rr_cv": result.boundaries.rr_cv,
        }
    return {
        "kind": "subject",
        "version": version,
        "inputs": inputs,
        "config": result.params.to_json_dict(),
        "roi_label": result.roi_label.value,
        "unit": result.unit.value,
        "interpolation": result.params.interp,
        "background_offset_cmps": result.background_offset,
        "gating": gating,
        "ensembles": {
            "n_global": curves.n_global,
            "n_insp": curves.n_insp,
            "n_exp": curves.n_exp,
            "n_mixed": curves.n_mixed,
            "n_skipped": result.n_skipped_cycles,
            "mean_rr_global_ms": curves.mean_rr_global,
            "mean_rr_insp_ms": curves.mean_rr_insp,
            "mean_rr_exp_ms": curves.mean_rr_exp,
        },
        "sv": {
            "global": sv_dict(result.sv_global),
            "inspiration": sv_dict(result.sv_insp),
            "expiration": sv_dict(result.sv_exp),
        },
        "sv_modulation": result.modulation,
        "reversal": result.reversal,
        "curves": {
            "phase": (np.arange(curves.global_mean.size) / curves.global_mean.size).tolist(),
            "global_mean": curves.global_mean.tolist(),
            "global_sd": curves.global_sd.tolist(),
            "insp_mean": None if curves.insp_mean is None else curves.insp_mean.tolist(),
            "insp_sd": None if curves.insp_sd is None else curves.insp_sd.tolist(),
            "exp_mean": None if curves.exp_mean is None else curves.exp_mean.tolist(),
            "exp_sd": None if curves.exp_sd is None else curves.exp_sd.tolist(),
        },
        "notes": result.notes,
    }
