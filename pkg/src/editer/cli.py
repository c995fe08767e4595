"""Command-line driver: simulate / correct / evaluate / sweep / inspect.

Exit codes: 0 success, 2 usage or invalid configuration, 3 I/O or file
format, 4 dataset validation or numerical failure. Errors print a single
machine-parseable line ``error: <category>: <detail>`` on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from .core import (
    DatasetValidationError,
    VolumeError,
    default_workers,
    run_editer_volume,
)
from .datatypes import AcquisitionDataset, CorrectionConfig, VolumeDataset, validate_dataset
from .fileio import (
    DataFormatError,
    HEADER_LEN,
    export_pgm,
    read_header,
    read_volume,
    write_volume,
)
from .metrics import (
    MagnitudeImage,
    RoiSpec,
    nrmse,
    percent_emi_removed_from_std,
    reconstruct,
    roi_std,
)
from .presets import PRESETS, get_preset
from .sim import assemble_volume, load_scenario, save_scenario

REPORT_COLUMNS = [
    "scenario",
    "partition",
    "n_kx",
    "n_pe",
    "n_detectors",
    "dkx",
    "dky",
    "first_pass_window",
    "cluster_threshold",
    "n_groups",
    "group_sizes",
    "group_residuals",
    "sigma_uncorrected",
    "sigma_corrected",
    "emi_removed_pct",
    "over_correction",
    "nrmse_uncorrected",
    "nrmse_corrected",
    "nrmse_reduction_pct",
    "wall_time_s",
]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="editer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="synthesize a dataset from a scenario")
    group = sim.add_mutually_exclusive_group(required=True)
    group.add_argument("--scenario", help="scenario JSON file")
    group.add_argument("--preset", choices=sorted(PRESETS), help="built-in scenario")
    sim.add_argument("--out", required=True, help="output dataset file")
    sim.add_argument("--partitions", type=int, default=1)
    sim.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    sim.add_argument("--dump-scenario", default=None, help="also write the scenario JSON here")
    sim.set_defaults(func=_cmd_simulate)

    cor = sub.add_parser("correct", help="run the interference correction")
    cor.add_argument("--in", dest="infile", required=True)
    cor.add_argument("--out", required=True)
    _add_config_flags(cor)
    cor.add_argument("--workers", type=int, default=None)
    cor.add_argument("--report", default=None, help="write per-partition CSV here")
    cor.set_defaults(func=_cmd_correct)

    ev = sub.add_parser("evaluate", help="compare uncorrected and corrected files")
    ev.add_argument("--uncorrected", required=True)
    ev.add_argument("--corrected", required=True)
    ev.add_argument("--roi", required=True, help="object-free region r0:r1,c0:c1 (inclusive)")
    ev.add_argument("--report", required=True, help="output CSV")
    ev.add_argument("--images", default=None, help="prefix for 8-bit PGM exports")
    ev.set_defaults(func=_cmd_evaluate)

    sw = sub.add_parser("sweep", help="correct at several window sizes and report")
    sw.add_argument("--in", dest="infile", required=True)
    sw.add_argument("--dkx", required=True, help="comma-separated odd window sizes")
    sw.add_argument("--roi", required=True)
    sw.add_argument("--report", required=True)
    _add_config_flags(sw, include_dkx=False)
    sw.add_argument("--workers", type=int, default=None)
    sw.set_defaults(func=_cmd_sweep)

    ins = sub.add_parser("inspect", help="print file header and validation summary")
    ins.add_argument("--in", dest="infile", required=True)
    ins.set_defaults(func=_cmd_inspect)
    return parser


def _add_config_flags(p: argparse.ArgumentParser, include_dkx: bool = True) -> None:
    p.add_argument("--config", default=None, help="JSON config file; flags override it")
    if include_dkx:
        p.add_argument("--dkx", type=int, default=None)
    p.add_argument("--dky", type=int, default=None)
    p.add_argument("--first-pass-window", type=int, default=None)
    p.add_argument("--threshold", type=float, default=None, help="clustering threshold")
    p.add_argument("--rank-cutoff", type=float, default=None)
    p.add_argument("--max-groups", type=int, default=None)
    p.add_argument("--cluster-method", choices=("greedy", "kmeans"), default=None)


_FLAG_TO_FIELD = {
    "dkx": "dkx",
    "dky": "dky",
    "first_pass_window": "first_pass_window",
    "threshold": "cluster_threshold",
    "rank_cutoff": "rank_cutoff",
    "max_groups": "max_groups",
    "cluster_method": "cluster_method",
}


def _config_from_args(args, skip=()) -> CorrectionConfig:
    values: dict = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(CorrectionConfig.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        values.update(loaded)
    for flag, field in _FLAG_TO_FIELD.items():
        if flag in skip:
            continue
        v = getattr(args, flag, None)
        if v is not None:
            values[field] = v
    try:
        return CorrectionConfig(**values)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _blank_row() -> dict:
    return {c: "" for c in REPORT_COLUMNS}


def _write_report(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def _cmd_simulate(args) -> int:
    if args.scenario:
        scenario = load_scenario(args.scenario)
    else:
        scenario = get_preset(args.preset).scenario
    if args.seed is not None:
        scenario = replace(scenario, seed=args.seed)
    if args.partitions < 1:
        raise UsageError("--partitions must be >= 1")
    vol = assemble_volume(scenario, args.partitions)
    write_volume(vol, args.out)
    if args.dump_scenario:
        save_scenario(scenario, args.dump_scenario)
    print(
        f"wrote {args.out}: {vol.n_partitions} partition(s), "
        f"{vol.n_kx}x{vol.n_pe}, {vol.n_detectors} detectors, ground truth included"
    )
    return 0


def _corrected_volume(vol: VolumeDataset, results) -> VolumeDataset:
    return VolumeDataset(partitions=tuple(r.corrected for r in results))


def _cmd_correct(args) -> int:
    cfg = _config_from_args(args)
    vol = read_volume(args.infile)
    t0 = time.perf_counter()
    results = run_editer_volume(vol, cfg, workers=args.workers)
    wall = time.perf_counter() - t0
    write_volume(_corrected_volume(vol, results), args.out)
    scenario_id = Path(args.infile).stem
    rows = []
    for p, res in enumerate(results):
        print(
            f"partition {p}: {res.plan.n_groups} group(s), "
            f"sizes {list(res.diagnostics.group_sizes)}, "
            f"{res.diagnostics.timings['total_s']:.3f}s"
        )
        row = _blank_row()
        row.update(
            scenario=scenario_id,
            partition=p,
            n_kx=vol.n_kx,
            n_pe=vol.n_pe,
            n_detectors=vol.n_detectors,
            dkx=cfg.dkx,
            dky=cfg.dky,
            first_pass_window=cfg.first_pass_window,
            cluster_threshold=cfg.cluster_threshold,
            n_groups=res.plan.n_groups,
            group_sizes=";".join(str(s) for s in res.diagnostics.group_sizes),
            group_residuals=";".join(f"{r:.6e}" for r in res.diagnostics.group_residuals),
            wall_time_s=f"{res.diagnostics.timings['total_s']:.6f}",
        )
        rows.append(row)
    if args.report:
        _write_report(args.report, rows)
    print(f"corrected {vol.n_partitions} partition(s) in {wall:.3f}s -> {args.out}")
    return 0


def _evaluate_rows(unc: VolumeDataset, cor: VolumeDataset, roi: RoiSpec, scenario_id: str):
    if (unc.n_kx, unc.n_pe, unc.n_partitions) != (cor.n_kx, cor.n_pe, cor.n_partitions):
        raise DataFormatError("uncorrected and corrected files have mismatched dims")
    rows = []
    sig_un, sig_c, nrmses_un, nrmses_c = [], [], [], []
    images = []
    for p in range(unc.n_partitions):
        img_un = reconstruct(unc.partitions[p].primary)
        img_c = reconstruct(cor.partitions[p].primary)
        images.append((img_un, img_c))
        s_un = roi_std(img_un, roi)
        s_c = roi_std(img_c, roi)
        sig_un.append(s_un)
        sig_c.append(s_c)
        row = _blank_row()
        row.update(
            scenario=scenario_id,
            partition=p,
            n_kx=unc.n_kx,
            n_pe=unc.n_pe,
            n_detectors=unc.n_detectors,
            sigma_uncorrected=f"{s_un:.9e}",
            sigma_corrected=f"{s_c:.9e}",
            emi_removed_pct=f"{percent_emi_removed_from_std(s_un, s_c):.4f}",
            over_correction=str(s_c > s_un).lower(),
        )
        truth = cor.partitions[p].ground_truth
        if truth is not None:
            img_t = reconstruct(truth)
            e_un = nrmse(img_un, img_t)
            e_c = nrmse(img_c, img_t)
            nrmses_un.append(e_un)
            nrmses_c.append(e_c)
            row.update(
                nrmse_uncorrected=f"{e_un:.9e}",
                nrmse_corrected=f"{e_c:.9e}",
                nrmse_reduction_pct=f"{(e_un - e_c) / e_un * 100.0:.4f}",
            )
        rows.append(row)
    if unc.n_partitions > 1:
        mean_un, mean_c = float(np.mean(sig_un)), float(np.mean(sig_c))
        row = _blank_row()
        row.update(
            scenario=scenario_id,
            partition="all",
            n_kx=unc.n_kx,
            n_pe=unc.n_pe,
            n_detectors=unc.n_detectors,
            sigma_uncorrected=f"{mean_un:.9e}",
            sigma_corrected=f"{mean_c:.9e}",
            emi_removed_pct=f"{percent_emi_removed_from_std(mean_un, mean_c):.4f}",
            over_correction=str(mean_c > mean_un).lower(),
        )
        if nrmses_un:
            row.update(
                nrmse_uncorrected=f"{float(np.mean(nrmses_un)):.9e}",
                nrmse_corrected=f"{float(np.mean(nrmses_c)):.9e}",
                nrmse_reduction_pct=f"{(np.mean(nrmses_un) - np.mean(nrmses_c)) / np.mean(nrmses_un) * 100.0:.4f}",
            )
        rows.append(row)
    return rows, images


def _cmd_evaluate(args) -> int:
    try:
        roi = RoiSpec.parse(args.roi)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    unc = read_volume(args.uncorrected)
    cor = read_volume(args.corrected)
    rows, images = _evaluate_rows(unc, cor, roi, Path(args.corrected).stem)
    _write_report(args.report, rows)
    for row in rows:
        label = f"partition {row['partition']}"
        extra = f", nrmse {row['nrmse_corrected']}" if row["nrmse_corrected"] else ""
        print(f"{label}: emi removed {row['emi_removed_pct']}%{extra}")
    if args.images:
        for p, (img_un, img_c) in enumerate(images):
            export_pgm(img_un.pixels, f"{args.images}_p{p}_uncorrected.pgm")
            export_pgm(img_c.pixels, f"{args.images}_p{p}_corrected.pgm")
    print(f"report -> {args.report}")
    return 0


def _cmd_sweep(args) -> int:
    try:
        roi = RoiSpec.parse(args.roi)
        sizes = [int(v) for v in args.dkx.split(",") if v]
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if not sizes:
        raise UsageError("--dkx list is empty")
    base_cfg = _config_from_args(args, skip=("dkx",))
    vol = read_volume(args.infile)
    scenario_id = Path(args.infile).stem
    rows = []
    for dkx in sizes:
        try:
            cfg = replace(base_cfg, dkx=dkx)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        t0 = time.perf_counter()
        results = run_editer_volume(vol, cfg, workers=args.workers)
        wall = time.perf_counter() - t0
        corrected = _corrected_volume(vol, results)
        sig_un, sig_c = [], []
        for p in range(vol.n_partitions):
            sig_un.append(roi_std(reconstruct(vol.partitions[p].primary), roi))
            sig_c.append(roi_std(reconstruct(corrected.partitions[p].primary), roi))
        mean_un, mean_c = float(np.mean(sig_un)), float(np.mean(sig_c))
        row = _blank_row()
        row.update(
            scenario=scenario_id,
            partition="all",
            n_kx=vol.n_kx,
            n_pe=vol.n_pe,
            n_detectors=vol.n_detectors,
            dkx=cfg.dkx,
            dky=cfg.dky,
            first_pass_window=cfg.first_pass_window,
            cluster_threshold=cfg.cluster_threshold,
            n_groups=";".join(str(r.plan.n_groups) for r in results),
            sigma_uncorrected=f"{mean_un:.9e}",
            sigma_corrected=f"{mean_c:.9e}",
            emi_removed_pct=f"{percent_emi_removed_from_std(mean_un, mean_c):.4f}",
            over_correction=str(mean_c > mean_un).lower(),
            wall_time_s=f"{wall:.6f}",
        )
        rows.append(row)
        print(f"dkx={dkx}: emi removed {row['emi_removed_pct']}%, {wall:.3f}s")
    _write_report(args.report, rows)
    print(f"report -> {args.report}")
    return 0


def _cmd_inspect(args) -> int:
    with open(args.infile, "rb") as fh:
        raw = fh.read()
    header = read_header(raw)
    payload = len(raw) - HEADER_LEN
    print(f"file: {args.infile}")
    print(
        f"header: version 1, {header.n_kx}x{header.n_pe}, "
        f"{header.n_partitions} partition(s), {header.n_detectors} detector(s), "
        f"ground_truth={'yes' if header.has_ground_truth else 'no'}"
    )
    print(f"payload: {payload} bytes (expected {header.payload_bytes})")
    if payload == header.payload_bytes:
        vol = read_volume(args.infile)
        for p, part in enumerate(vol.partitions):
            report = validate_dataset(part)
            status = "ok" if report.valid else "; ".join(report.violations)
            print(f"partition {p}: {status}")
    return 0


def run_cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:        # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, FileNotFoundError, IsADirectoryError, PermissionError,
            json.JSONDecodeError) as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 3
    except (DatasetValidationError, VolumeError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"error: numerical: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 3


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
