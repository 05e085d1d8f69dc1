"""Command line front-end: process one subject, compare a cohort, or
generate phantom datasets.

Exit codes: 0 success, 2 input error, 3 processing refusal (the data
cannot support the analysis), 4 internal failure. Values in a --config
JSON file override command line flags.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .errors import (
    CsfdynError,
    InputError,
    InvalidSpec,
    ProcessingRefusal,
    TooFewPairs,
    UnpairedSubject,
)
from .ingest import RoiLabel, read_mask, read_physio, read_series, write_series
from .ingest import PhysioKind
from .metrics import SvConvention
from .phantom import (
    PhantomSpec,
    cohort as phantom_cohort,
    default_aqueduct_spec,
    default_spinal_spec,
    generate,
    generate_gated,
    save_dataset,
)
from .ingest import SeriesKind
from .pipeline import PipelineParams, process_subject, result_to_report
from .reporting import (
    sha256_of,
    write_curves_csv,
    write_curves_svg,
    write_json,
    write_scatter_svg,
)
from .stats import PairedSample, paired_t, spearman, wilcoxon_paired


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="csfdyn",
        description="Post-processing for continuous phase-contrast CSF velocity series.",
    )
    parser.add_argument("--version", action="version", version=f"csfdyn {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("process", help="run the full pipeline on one subject")
    p.add_argument("--series", required=True, help=".csfd velocity/phase series")
    p.add_argument("--roi", required=True, help=".pgm mask of the flow ROI")
    p.add_argument("--static", help=".pgm mask of static tissue for offset removal")
    p.add_argument("--belt", help="respiratory belt .csv")
    p.add_argument("--plethysmo", help="plethysmograph .csv")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="JSON config; entries override flags")
    p.add_argument("--gate", choices=["flow", "plethysmo"], default="flow")
    p.add_argument("--min-rr", type=float, default=300.0, help="shortest cycle, ms")
    p.add_argument("--max-rr", type=float, default=2000.0, help="longest cycle, ms")
    p.add_argument("--smoothing-window", type=float, default=500.0,
                   help="belt smoothing window, ms")
    p.add_argument("--hysteresis", type=float, default=0.05,
                   help="belt trigger band, fraction of range")
    p.add_argument("--interp", choices=["spline", "linear"], default="spline")
    p.add_argument("--sv-convention", choices=["lobe-mean", "flush-lobe"],
                   default="lobe-mean")
    p.add_argument("--unit", choices=["auto", "mL", "uL"], default="auto")
    p.add_argument("--flip-sign", action="store_true",
                   help="flip the craniocaudal sign convention")
    p.add_argument("--anchor", type=int, default=0,
                   help="frame trusted as unaliased for unwrapping")
    p.add_argument("--refine-threshold", type=float, default=None,
                   help="grow the ROI by temporal correlation at this threshold")

    c = sub.add_parser("cohort", help="paired statistics over processed subjects")
    c.add_argument("--pairs", required=True,
                   help="JSON manifest: subjects[].{id, conv, epi} report paths")
    c.add_argument("--out", required=True)
    c.add_argument("--config", help="JSON config; entries override flags")
    c.add_argument("--spearman-exact", action="store_true",
                   help="full permutation p instead of the t approximation")
    c.add_argument("--paired-t", action="store_true",
                   help="also report a paired Student t")

    f = sub.add_parser("phantom", help="generate a synthetic dataset with truth")
    f.add_argument("--out", required=True)
    f.add_argument("--spec", help="JSON phantom spec (defaults filled in)")
    f.add_argument("--config", help="JSON config; entries override flags")
    f.add_argument("--preset", choices=["aqueduct", "spinal"], default="aqueduct")
    f.add_argument("--seed", type=int, default=None)
    f.add_argument("--modulation", type=float, default=None,
                   help="inspiration amplitude modulation, e.g. 0.09")
    f.add_argument("--gated", action="store_true",
                   help="also write the 32-frame gated reconstruction")
    f.add_argument("--cohort", type=int, default=None, metavar="N",
                   help="write N jittered subjects instead of one")
    return parser


def _apply_config(args: argparse.Namespace) -> None:
    """Merge --config JSON over parsed flags (config wins)."""
    if not getattr(args, "config", None):
        return
    try:
        cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read config {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{args.config}: not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise InvalidSpec(f"{args.config}: config must be a JSON object")
    for key, value in cfg.items():
        attr = key.replace("-", "_")
        if attr in ("command", "config") or not hasattr(args, attr):
            raise InvalidSpec(f"{args.config}: unknown config key {key!r}")
        setattr(args, attr, value)


def _params_from_args(args: argparse.Namespace) -> PipelineParams:
    try:
        return PipelineParams(
            min_rr=float(args.min_rr),
            max_rr=float(args.max_rr),
            smoothing_window=float(args.smoothing_window),
            hysteresis=float(args.hysteresis),
            interp=str(args.interp),
            sv_convention=SvConvention(args.sv_convention),
            unit=str(args.unit),
            flip_sign=bool(args.flip_sign),
            anchor=int(args.anchor),
            refine_threshold=None if args.refine_threshold is None
            else float(args.refine_threshold),
            gate=str(args.gate),
        )
    except (TypeError, ValueError) as exc:
        raise InvalidSpec(f"bad parameter value: {exc}") from exc


def _hash_entry(path: str) -> dict:
    return {"path": str(path), "sha256": sha256_of(path)}


def cmd_process(args: argparse.Namespace) -> int:
    _apply_config(args)
    params = _params_from_args(args)
    series = read_series(args.series)
    roi = read_mask(args.roi)
    static = read_mask(args.static, RoiLabel.STATIC_TISSUE) if args.static else None
    belt = read_physio(args.belt, PhysioKind.RESP_BELT) if args.belt else None
    pleth = (read_physio(args.plethysmo, PhysioKind.CARDIAC_PLETHYSMO)
             if args.plethysmo else None)

    result = process_subject(series, roi, params, static=static, belt=belt,
                             plethysmo=pleth)

    inputs = {"series": _hash_entry(args.series), "roi": _hash_entry(args.roi)}
    for name in ("static", "belt", "plethysmo", "config"):
        value = getattr(args, name)
        if value:
            inputs[name] = _hash_entry(value)

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    report = result_to_report(result, __version__, inputs)
    write_json(outdir / "report.json", report)
    write_curves_csv(outdir / "curves.csv", result.curves)
    write_curves_svg(outdir / "curves.svg", result.curves,
                     f"CSF flow by cardiac phase ({result.roi_label.value})")
    for name in ("report.json", "curves.csv", "curves.svg"):
        print(f"wrote {outdir / name}")
    return 0


def _load_subject_report(path: str, subject_id: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UnpairedSubject(f"subject {subject_id}: missing report {path}")
    try:
        rep = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UnpairedSubject(f"subject {subject_id}: {path} is not valid JSON: {exc}") from exc
    if rep.get("kind") != "subject" or "sv" not in rep:
        raise UnpairedSubject(f"subject {subject_id}: {path} is not a subject report")
    return rep


def cmd_cohort(args: argparse.Namespace) -> int:
    _apply_config(args)
    try:
        manifest = json.loads(Path(args.pairs).read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read {args.pairs}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{args.pairs}: not valid JSON: {exc}") from exc
    subjects = manifest.get("subjects")
    if not isinstance(subjects, list) or not subjects:
        raise InvalidSpec(f"{args.pairs}: expected a non-empty 'subjects' list")

    rows = []
    for entry in subjects:
        sid = entry.get("id")
        if not sid or "conv" not in entry or "epi" not in entry:
            raise UnpairedSubject(f"manifest entry {entry!r} needs id, conv, epi")
        conv = _load_subject_report(entry["conv"], sid)
        epi = _load_subject_report(entry["epi"], sid)
        if conv["roi_label"] != epi["roi_label"]:
            raise UnpairedSubject(
                f"subject {sid}: conv ROI {conv['roi_label']} != epi ROI {epi['roi_label']}"
            )
        if conv["unit"] != epi["unit"]:
            raise UnpairedSubject(
                f"subject {sid}: conv unit {conv['unit']} != epi unit {epi['unit']}"
            )
        rows.append({
            "id": sid,
            "roi": conv["roi_label"],
            "unit": conv["unit"],
            "conv_sv": conv["sv"]["global"]["sv"],
            "epi_sv": epi["sv"]["global"]["sv"],
            "modulation": epi.get("sv_modulation"),
            "conv_path": entry["conv"],
            "epi_path": entry["epi"],
        })
    if len(rows) < 5:
        raise TooFewPairs(f"cohort comparison needs >= 5 paired subjects, got {len(rows)}")

    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    by_roi: dict[str, list[dict]] = {}
    for row in rows:
        by_roi.setdefault(row["roi"], []).append(row)

    def stat_dict(res):
        return {
            "statistic": res.statistic,
            "p_value": res.p_value,
            "n": res.n,
            "method": res.method.value,
            "n_dropped": res.n_dropped,
        }

    roi_reports = {}
    for roi, group in sorted(by_roi.items()):
        pairs = [PairedSample(r["id"], r["conv_sv"], r["epi_sv"]) for r in group]
        block = {
            "n": len(group),
            "unit": group[0]["unit"],
            "subjects": [r["id"] for r in group],
            "conv_sv": [r["conv_sv"] for r in group],
            "epi_sv": [r["epi_sv"] for r in group],
            "spearman": stat_dict(spearman(pairs, exact=bool(args.spearman_exact))),
            "wilcoxon": stat_dict(wilcoxon_paired(pairs)),
        }
        if args.paired_t:
            block["paired_t"] = stat_dict(paired_t(pairs))
        mods = [r["modulation"] for r in group if r["modulation"] is not None]
        block["modulation_mean"] = (sum(mods) / len(mods)) if mods else None
        block["modulation_n"] = len(mods)
        roi_reports[roi] = block
        svg_name = f"scatter_{roi.lower()}.svg"
        write_scatter_svg(
            outdir / svg_name,
            block["conv_sv"],
            block["epi_sv"],
            f"Stroke volume by both routes ({roi})",
            f"gated-route SV ({block['unit']})",
            f"continuous-route SV ({block['unit']})",
        )

    inputs = [
        {"id": r["id"], "conv": _hash_entry(r["conv_path"]), "epi": _hash_entry(r["epi_path"])}
        for r in rows
    ]
    write_json(outdir / "cohort.json", {
        "kind": "cohort",
        "version": __version__,
        "inputs": inputs,
        "config": {"spearman_exact": bool(args.spearman_exact),
                   "paired_t": bool(args.paired_t)},
        "per_roi": roi_reports,
    })
    print(f"wrote {outdir / 'cohort.json'}")
    return 0


def _spec_from_args(args: argparse.Namespace) -> PhantomSpec:
    if args.spec:
        try:
            raw = json.loads(Path(args.spec).read_text(encoding="utf-8"))
        except OSError as exc:
            raise InputError(f"cannot read {args.spec}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise InvalidSpec(f"{args.spec}: not valid JSON: {exc}") from exc
        spec = PhantomSpec.from_json_dict(raw)
    elif args.preset == "spinal":
        spec = default_spinal_spec()
    else:
        spec = default_aqueduct_spec()
    if args.seed is not None:
        spec = replace(spec, seed=int(args.seed))
    if args.modulation is not None:
        spec = replace(spec, resp=replace(spec.resp, modulation_insp=float(args.modulation)))
    return spec


def _write_phantom_subject(spec: PhantomSpec, outdir: Path, gated: bool) -> None:
    ds = generate(spec)
    save_dataset(ds, outdir)
    write_json(outdir / "spec.json", spec.to_json_dict())
    if gated:
        gated_spec = replace(
            spec, acquisition=replace(spec.acquisition, series_kind=SeriesKind.GATED_CONV)
        )
        write_series(generate_gated(gated_spec), outdir / "gated.csfd")


def cmd_phantom(args: argparse.Namespace) -> int:
    _apply_config(args)
    spec = _spec_from_args(args)
    outdir = Path(args.out)
    if args.cohort is not None:
        subjects = phantom_cohort(int(args.cohort), base=spec, seed=spec.seed)
        listing = []
        for subj in subjects:
            subdir = outdir / subj.subject_id
            _write_phantom_subject(subj.spec, subdir, args.gated)
            listing.append({"id": subj.subject_id, "dir": subj.subject_id,
                            "spec": subj.spec.to_json_dict()})
        outdir.mkdir(parents=True, exist_ok=True)
        write_json(outdir / "cohort_specs.json",
                   {"kind": "phantom_cohort", "version": __version__,
                    "seed": spec.seed, "subjects": listing})
        print(f"wrote {outdir / 'cohort_specs.json'} and {len(subjects)} subject dirs")
    else:
        _write_phantom_subject(spec, outdir, args.gated)
        print(f"wrote phantom dataset under {outdir}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {"process": cmd_process, "cohort": cmd_cohort, "phantom": cmd_phantom}
    try:
        return handlers[args.command](args)
    except InputError as exc:
        stage = f" [{exc.stage}]" if exc.stage else ""
        print(f"csfdyn: input error{stage}: {exc}", file=sys.stderr)
        return 2
    except ProcessingRefusal as exc:
        stage = f" [{exc.stage}]" if exc.stage else ""
        print(f"csfdyn: refusing{stage}: {exc}", file=sys.stderr)
        return 3
    except CsfdynError as exc:
        print(f"csfdyn: internal error: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # noqa: BLE001
        print(f"csfdyn: internal error: {exc!r}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
