"""Acceptance gate. One test (or test group) per numbered criterion; the
conftest terminal hook prints a PASS/FAIL line for each at the end.

Independent oracles live here or in test_stats: closed forms, brute-force
enumerations, and analytic phantom truth. Tolerances are the contractual
ones, not what the implementation happens to achieve.
"""

import itertools
import math
import time
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

import csfdyn
from csfdyn import (
    CanonicalCycle,
    Encoding,
    FlowSamples,
    LabeledCycle,
    PairedSample,
    RespLabel,
    RoiLabel,
    SeriesHeader,
    SeriesKind,
    VelocitySeries,
    build_ensembles,
    detect_cycles_from_flow,
    extract_flow,
    generate,
    generate_gated,
    process_subject,
    resample_cycle,
    reversal_check,
    spearman,
    stroke_volume,
    unwrap_temporal,
    wilcoxon_paired,
)
from csfdyn.cli import main
from csfdyn.phantom import AcquisitionSpec, CardiacSpec, LumenSpec, RespSpec

from test_stats import (
    pairs_from,
    rank_avg,
    pearson_fsum,
    spearman_oracle,
    wilcoxon_brute_force,
)

SUITE = settings(max_examples=1000, deadline=None, derandomize=True,
                 suppress_health_check=[HealthCheck.too_slow,
                                        HealthCheck.filter_too_much])


# ----------------------------------------------------------- criterion 1


def test_c01_modulation_recovery_within_tolerance_and_time():
    spec = csfdyn.default_aqueduct_spec(
        resp=replace(RespSpec(), modulation_insp=0.09))
    assert spec.acquisition.noise_sd_phase == 0.02
    ds = generate(spec)
    start = time.perf_counter()
    res = process_subject(ds.series, ds.lumen, static=ds.static, belt=ds.belt)
    elapsed = time.perf_counter() - start
    assert 0.07 <= res.modulation <= 0.11
    assert elapsed < 10.0

    spec = csfdyn.default_spinal_spec(
        resp=replace(RespSpec(), modulation_insp=0.08))
    ds = generate(spec)
    start = time.perf_counter()
    res = process_subject(ds.series, ds.lumen, static=ds.static, belt=ds.belt)
    elapsed = time.perf_counter() - start
    assert 0.06 <= res.modulation <= 0.10
    assert elapsed < 10.0


# ----------------------------------------------------------- criterion 2


def test_c02_stroke_volume_accuracy_plug(noiseless_plug_dataset):
    ds = noiseless_plug_dataset
    res = process_subject(ds.series, ds.lumen, static=ds.static, belt=ds.belt)
    truth = 1000.0 * ds.truth.spec.cardiac.sv_true  # uL
    assert abs(res.sv_global.sv - truth) / truth < 0.01


def test_c02_stroke_volume_accuracy_poiseuille(noiseless_poiseuille_dataset):
    ds = noiseless_poiseuille_dataset
    assert ds.truth.spec.lumen.radius_px >= 3
    res = process_subject(ds.series, ds.lumen, static=ds.static, belt=ds.belt)
    truth = 1000.0 * ds.truth.spec.cardiac.sv_true
    assert abs(res.sv_global.sv - truth) / truth < 0.03


# ----------------------------------------------------------- criterion 3


@pytest.mark.parametrize("duration,seed", [
    (80_000.0, 42), (80_000.0, 0), (60_000.0, 1), (60_000.0, 7),
])
def test_c03_gating_accuracy_with_jitter(duration, seed):
    rr = 1143.0
    spec = csfdyn.PhantomSpec(
        cardiac=replace(CardiacSpec(), rr_jitter_sd=0.05 * rr),
        acquisition=replace(AcquisitionSpec(), duration=duration),
        seed=seed,
    )
    ds = generate(spec)
    truth = ds.truth.onsets
    assert 50 <= truth.size <= 72
    res = process_subject(ds.series, ds.lumen, static=ds.static, belt=ds.belt)
    detected = res.boundaries.onsets
    assert abs(detected.size - truth.size) <= 1
    err = np.abs(detected[:, None] - truth[None, :]).min(axis=1)
    frame = spec.acquisition.frame_interval
    assert np.mean(err <= frame) >= 0.95


# ----------------------------------------------------------- criterion 4


def test_c04_unwrap_supra_venc_flow():
    venc = 5.0
    t = np.arange(200) * 0.088
    shapes = [
        7.0 * np.sin(2 * np.pi * t / 1.143),
        7.0 * (np.sin(2 * np.pi * t / 1.143)
               + 0.35 * np.sin(4 * np.pi * t / 1.143)) / 1.30,
    ]
    for v_true in shapes:
        assert np.abs(v_true).max() <= 7.0 + 1e-9
        phi = np.mod(v_true * np.pi / venc + np.pi, 2 * np.pi) - np.pi
        frames = (phi * venc / np.pi)[:, None, None]
        header = SeriesHeader(
            width=1, height=1, n_frames=t.size,
            pixel_spacing_x=1.0, pixel_spacing_y=1.0, slice_thickness=4.0,
            venc=venc, frame_interval=88.0, encoding=Encoding.VELOCITY_CMPS,
        )
        field = csfdyn.as_velocity_field(VelocitySeries(header, frames))
        out = unwrap_temporal(field)
        assert np.max(np.abs(out.frames[:, 0, 0] - v_true)) <= 1e-5


# ----------------------------------------------------------- criterion 5


def _cycle_from(t, q, start, end, cid=0):
    return LabeledCycle(cycle_id=cid, start=start, end=end,
                        t=np.asarray(t, float), q=np.asarray(q, float),
                        resp_label=RespLabel.MIXED, inspiration_fraction=0.5)


def test_c05_spline_sine_from_ten_samples():
    rr = 1000.0
    t = np.arange(10) / 10 * rr
    q = np.sin(2 * np.pi * t / rr)
    out = resample_cycle(_cycle_from(t, q, 0.0, rr), mode="spline")
    truth = np.sin(2 * np.pi * np.arange(32) / 32)
    assert np.max(np.abs(out.q32 - truth)) < 1e-3


def test_c05_identity_on_matching_grid():
    rr = 1000.0
    rng = np.random.default_rng(99)
    for _ in range(20):
        q = rng.normal(0, 1, 32)
        t = np.arange(32) / 32 * rr
        out = resample_cycle(_cycle_from(t, q, 0.0, rr), mode="spline")
        assert np.max(np.abs(out.q32 - q)) <= 1e-9


# ----------------------------------------------------------- criterion 6


def test_c06_wilcoxon_exact_matches_enumeration():
    cases = [
        [1.0, -1.0, 1.0, 2.5, -1.0, 0.6, 1.0, -0.6, 1.0, 0.6],  # tied |d|
        [0.3, -0.1, 0.7, 1.1, -0.9, 0.2, 0.4, -0.5, 0.8, 1.3],
        [2.0, 3.0, -1.0, 4.0, 5.0, -2.5, 6.0, 1.5, -0.5, 0.25],
    ]
    for d in cases:
        a = [10.0] * 10
        b = [10.0 + x for x in d]
        w_ref, p_ref = wilcoxon_brute_force(d)
        r = wilcoxon_paired(pairs_from(a, b))
        assert abs(r.statistic - w_ref) <= 1e-12
        assert abs(r.p_value - p_ref) <= 1e-15


def test_c06_all_positive_differences_exact_p():
    a = [5.0] * 10
    b = [5.0 + k for k in range(1, 11)]
    r = wilcoxon_paired(pairs_from(a, b))
    assert r.p_value == 0.001953125


def test_c06_spearman_matches_rank_pearson():
    rng = np.random.default_rng(17)
    for _ in range(200):
        n = int(rng.integers(4, 25))
        if rng.random() < 0.5:
            a = rng.normal(0, 1, n)
            b = 0.6 * a + rng.normal(0, 1, n)
        else:  # heavy ties
            a = rng.integers(0, 5, n).astype(float)
            b = rng.integers(0, 5, n).astype(float)
            if np.all(a == a[0]) or np.all(b == b[0]):
                continue
        r = spearman(pairs_from(a, b))
        assert abs(r.statistic - spearman_oracle(a, b)) <= 1e-12


# ----------------------------------------------------------- criterion 7


def test_c07_reversal_on_all_phantom_curves(default_result, modulated_result,
                                            spinal_result):
    for res in (default_result, modulated_result, spinal_result):
        curves = res.curves
        for curve in (curves.global_mean, curves.insp_mean, curves.exp_mean):
            if curve is not None:
                assert reversal_check(curve)
        assert res.reversal and all(res.reversal.values())


# ----------------------------------------------------------- criterion 8


def test_c08_gated_sv_between_breathing_states(modulated_dataset,
                                               modulated_result):
    spec = modulated_dataset.truth.spec
    gated_spec = replace(spec, acquisition=replace(
        spec.acquisition, series_kind=SeriesKind.GATED_CONV))
    series = generate_gated(gated_spec)
    gated = process_subject(series, modulated_dataset.lumen,
                            static=modulated_dataset.static)
    lo = min(modulated_result.sv_insp.sv, modulated_result.sv_exp.sv)
    hi = max(modulated_result.sv_insp.sv, modulated_result.sv_exp.sv)
    assert lo <= gated.sv_global.sv <= hi


# ----------------------------------------------------------- criterion 9


def test_c09_byte_identical_outputs(tmp_path):
    ph_a, ph_b = tmp_path / "ph_a", tmp_path / "ph_b"
    assert main(["phantom", "--out", str(ph_a), "--modulation", "0.09"]) == 0
    assert main(["phantom", "--out", str(ph_b), "--modulation", "0.09"]) == 0
    for name in ("series.csfd", "belt.csv", "plethysmo.csv", "lumen.pgm",
                 "static.pgm", "truth.json", "spec.json"):
        assert (ph_a / name).read_bytes() == (ph_b / name).read_bytes(), name

    args = ["process",
            "--series", str(ph_a / "series.csfd"),
            "--roi", str(ph_a / "lumen.pgm"),
            "--static", str(ph_a / "static.pgm"),
            "--belt", str(ph_a / "belt.csv")]
    out_a, out_b = tmp_path / "out_a", tmp_path / "out_b"
    assert main(args + ["--out", str(out_a)]) == 0
    assert main(args + ["--out", str(out_b)]) == 0
    for name in ("report.json", "curves.csv", "curves.svg"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name


# ----------------------------------------------------------- criterion 10


def _flow_from(t, q):
    return FlowSamples(timestamps=np.asarray(t, float),
                       q=np.asarray(q, float),
                       roi_label=RoiLabel.AQUEDUCT, pixel_area=1.44,
                       n_roi_pixels=9)


@SUITE
@given(
    rr=st.integers(650, 1400),
    n_cycles=st.integers(7, 14),
    dt=st.integers(61, 109),
    skew=st.floats(0.0, 0.45),
    shift=st.integers(-500_000, 500_000),
    log2_scale=st.integers(-6, 6),
)
def test_c10_gating_invariance(rr, n_cycles, dt, skew, shift, log2_scale):
    t = np.arange(0.0, float(n_cycles * rr), float(dt))
    u = (t % rr) / rr
    q = np.sin(2 * np.pi * u) + skew * np.sin(4 * np.pi * u)
    base = detect_cycles_from_flow(_flow_from(t, q))
    # same data on a shifted clock: onsets follow the clock exactly
    moved = detect_cycles_from_flow(_flow_from(t + shift, q))
    assert moved.n_cycles == base.n_cycles
    assert np.max(np.abs((moved.onsets - shift) - base.onsets)) < 1e-6
    # power-of-two amplitude scaling leaves onsets bit-identical
    scaled = detect_cycles_from_flow(_flow_from(t, q * 2.0 ** log2_scale))
    assert np.array_equal(scaled.onsets, base.onsets)


@SUITE
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(1, 20))
def test_c10_ensemble_permutation_invariance(seed, n):
    rng = np.random.default_rng(seed)
    labels = [RespLabel.INSPIRATION, RespLabel.EXPIRATION, RespLabel.MIXED]
    rows = [CanonicalCycle(q32=rng.normal(0, 1, 32), source_cycle_id=i,
                           resp_label=labels[int(rng.integers(3))],
                           rr=float(rng.uniform(500, 1800)))
            for i in range(n)]
    e0 = build_ensembles(rows)
    e1 = build_ensembles([rows[k] for k in rng.permutation(n)])
    for a, b in [(e0.global_mean, e1.global_mean), (e0.global_sd, e1.global_sd),
                 (e0.insp_mean, e1.insp_mean), (e0.insp_sd, e1.insp_sd),
                 (e0.exp_mean, e1.exp_mean), (e0.exp_sd, e1.exp_sd)]:
        if a is None or b is None:
            assert a is None and b is None
        else:
            assert np.array_equal(a, b)
    assert e0.mean_rr_global == e1.mean_rr_global
    assert e0.n_insp == e1.n_insp and e0.n_exp == e1.n_exp


@SUITE
@given(seed=st.integers(0, 2 ** 32 - 1), k=st.integers(0, 31),
       log2_scale=st.integers(-8, 8), rr=st.floats(400, 1800))
def test_c10_metrics_invariance(seed, k, log2_scale, rr):
    rng = np.random.default_rng(seed)
    q = rng.normal(0, 1, 32)
    base = stroke_volume(q, rr)
    # cyclic rotation: the cycle has no privileged phase origin
    rot = stroke_volume(np.roll(q, k), rr)
    assert rot.sv == pytest.approx(base.sv, rel=1e-12, abs=1e-300)
    assert rot.direction_reversals == base.direction_reversals
    assert rot.flush_duration_fraction == base.flush_duration_fraction
    assert reversal_check(np.roll(q, k)) == reversal_check(q)
    # power-of-two amplitude scaling is exact
    s = 2.0 ** log2_scale
    scaled = stroke_volume(q * s, rr)
    assert scaled.sv == base.sv * s
    assert scaled.net_flow == base.net_flow * s
    # sign flip swaps the lobes exactly
    flipped = stroke_volume(-q, rr)
    assert flipped.v_plus == base.v_minus
    assert flipped.v_minus == base.v_plus
    assert flipped.net_flow == -base.net_flow


@SUITE
@given(seed=st.integers(0, 2 ** 32 - 1), n=st.integers(5, 12),
       log2_scale=st.integers(-4, 4))
def test_c10_stats_invariance(seed, n, log2_scale):
    rng = np.random.default_rng(seed)
    a = rng.normal(0, 1, n)
    b = a + rng.normal(0.3, 1, n)
    s = 2.0 ** log2_scale

    r_ab = spearman(pairs_from(a, b))
    r_ba = spearman(pairs_from(b, a))
    assert r_ab.statistic == r_ba.statistic and r_ab.p_value == r_ba.p_value
    # scaling is monotone: ranks, statistic and p are untouched
    r_scaled = spearman(pairs_from(a * s, b))
    assert r_scaled.statistic == r_ab.statistic
    assert r_scaled.p_value == r_ab.p_value

    w_ab = wilcoxon_paired(pairs_from(a, b))
    w_ba = wilcoxon_paired(pairs_from(b, a))
    assert w_ab.statistic == w_ba.statistic and w_ab.p_value == w_ba.p_value
    w_scaled = wilcoxon_paired(pairs_from(a * s, b * s))
    assert w_scaled.statistic == w_ab.statistic
    assert w_scaled.p_value == w_ab.p_value
