"""csfdyn: post-processing for continuous (ungated) phase-contrast CSF
velocity imaging.

The chain runs: phase maps -> velocity maps -> ROI flow waveform ->
retrospective cardiac cycle detection -> respiratory phase labeling ->
per-state ensemble cycles -> stroke volume metrics -> cohort statistics.
A synthetic phantom with analytic ground truth closes the loop for
verification.
"""

__version__ = "0.1.0"

from .errors import CsfdynError, InputError, ProcessingRefusal
from .ingest import (
    GATED_FRAMES,
    Encoding,
    PhysioKind,
    PhysioTrace,
    RoiLabel,
    RoiMask,
    SeriesHeader,
    SeriesKind,
    VelocitySeries,
    ensure_same_grid,
    read_mask,
    read_physio,
    read_series,
    write_mask,
    write_physio,
    write_series,
)
from .velocity import (
    StaticTissueWarning,
    VelocityField,
    as_velocity_field,
    background_correct,
    field_to_series,
    phase_to_velocity,
    unwrap_temporal,
)
from .flow import FlowSamples, extract_flow, refine_roi
from .gating import (
    CycleBoundaries,
    GatingMethod,
    LabeledCycle,
    RespLabel,
    RespPhases,
    classify_resp,
    detect_cycles_from_flow,
    detect_cycles_from_plethysmo,
    label_cycles,
    moving_average,
)
from .ensemble import (
    PHASE_GRID,
    CanonicalCycle,
    EnsembleCurves,
    build_ensembles,
    resample_cycle,
)
from .metrics import (
    SvConvention,
    SvReport,
    VolumeUnit,
    reversal_check,
    stroke_volume,
    sv_modulation,
)
from .stats import (
    PairedSample,
    StatMethod,
    StatResult,
    paired_t,
    spearman,
    wilcoxon_paired,
)
from .phantom import (
    CohortJitter,
    CohortSubject,
    FlowProfile,
    GroundTruth,
    PhantomDataset,
    PhantomSpec,
    cohort,
    default_aqueduct_spec,
    default_spinal_spec,
    flow_amplitude,
    generate,
    generate_gated,
    lumen_mask,
    save_dataset,
    static_mask,
    waveform,
)
from .pipeline import PipelineParams, SubjectResult, process_subject, result_to_report

__all__ = [
    "__version__",
    "CsfdynError",
    "InputError",
    "ProcessingRefusal",
    "Encoding",
    "SeriesKind",
    "RoiLabel",
    "PhysioKind",
    "SeriesHeader",
    "VelocitySeries",
    "RoiMask",
    "PhysioTrace",
    "GATED_FRAMES",
    "read_series",
    "write_series",
    "read_mask",
    "write_mask",
    "read_physio",
    "write_physio",
    "ensure_same_grid",
    "StaticTissueWarning",
    "VelocityField",
    "phase_to_velocity",
    "as_velocity_field",
    "field_to_series",
    "unwrap_temporal",
    "background_correct",
    "FlowSamples",
    "extract_flow",
    "refine_roi",
    "CycleBoundaries",
    "GatingMethod",
    "RespLabel",
    "RespPhases",
    "LabeledCycle",
    "classify_resp",
    "detect_cycles_from_flow",
    "detect_cycles_from_plethysmo",
    "label_cycles",
    "moving_average",
    "PHASE_GRID",
    "CanonicalCycle",
    "EnsembleCurves",
    "resample_cycle",
    "build_ensembles",
    "SvConvention",
    "SvReport",
    "VolumeUnit",
    "stroke_volume",
    "sv_modulation",
    "reversal_check",
    "PairedSample",
    "StatMethod",
    "StatResult",
    "spearman",
    "wilcoxon_paired",
    "paired_t",
    "FlowProfile",
    "PhantomSpec",
    "PhantomDataset",
    "GroundTruth",
    "CohortJitter",
    "CohortSubject",
    "default_aqueduct_spec",
    "default_spinal_spec",
    "generate",
    "generate_gated",
    "cohort",
    "lumen_mask",
    "static_mask",
    "save_dataset",
    "waveform",
    "flow_amplitude",
    "PipelineParams",
    "SubjectResult",
    "process_subject",
    "result_to_report",
]
