"""Batch command-line front end.

Stages chain through flat directories keyed by image id (the input
filename stem): simulate -> reconstruct -> halmap / project -> analyze.
Every stage writes a manifest.json sufficient to re-run it, and reruns
with identical inputs, config and seed are byte-identical.

Exit codes: 0 success, 1 data error, 2 config or usage error.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    CENTROID_HEADER,
    PDF_HEADER,
    empirical_pdf,
    export_centroid_scatter,
    region_ssim,
    ssim,
)
from .config import RunConfig, load_config
from .errors import DimensionsError, FormatError, HalmapError, ParameterError
from .figures import render_centroid_scatter, render_mask, render_pdf, render_report_card
from .io import (
    read_cgrid,
    read_manifest,
    read_mask_json,
    write_cgrid,
    write_csv,
    write_manifest,
    write_mask_json,
)
from .linop import FftMaskOperator, ImageGrid, compute_svd
from .maps import HallucinationReport, compute_report, otsu_threshold, specific_map
from .recon import ingest_external, recon_plstv, recon_tp
from .simulate import derive_seed, make_uniform_mask, simulate_measurement
from .subspace import project_meas, project_null

IMAGE_SUFFIXES = (".cgrid", ".pgm")


def discover_images(directory: Path) -> dict[str, Path]:
    """Map image ids to files in a flat directory (no recursion)."""
    if not directory.is_dir():
        raise HalmapError(f"not a directory: {directory}")
    found: dict[str, Path] = {}
    for path in sorted(directory.iterdir()):
        if path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES and "." not in path.stem:
            found[path.stem] = path
    return found


def _parallel(jobs: int, fn, items: list):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _measurement_vector(grid: ImageGrid) -> np.ndarray:
    return grid.vector


def _operator_for(meas_dir: Path, image_id: str, shape: tuple[int, int], cfg: RunConfig):
    mask_path = meas_dir / f"{image_id}.mask.json"
    if mask_path.is_file():
        mask = read_mask_json(mask_path)
    else:
        mask = make_uniform_mask(shape[0], shape[1], cfg.mask_factor, cfg.mask_offset)
    return FftMaskOperator(mask)


def cmd_simulate(args, cfg: RunConfig) -> int:
    input_dir = Path(args.input_dir)
    output_dir = Path(args.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    images = discover_images(input_dir)
    seed = args.seed if args.seed is not None else cfg.noise.seed
    failures: list[str] = []
    entries = []

    def work(item):
        image_id, path = item
        theta = ingest_external(path)
        mask = make_uniform_mask(theta.height, theta.width, cfg.mask_factor, cfg.mask_offset)
        image_seed = derive_seed(seed, image_id)
        noise = replace(cfg.noise, seed=image_seed)
        meas = simulate_measurement(theta, mask, noise)
        grid = ImageGrid.from_vector(meas, (len(mask.sampled_rows), mask.width))
        write_cgrid(output_dir / f"{image_id}.cgrid", grid)
        write_mask_json(output_dir / f"{image_id}.mask.json", mask)
        return {
            "image_id": image_id,
            "seed": image_seed,
            "height": theta.height,
            "width": theta.width,
            "sampled_rows": list(mask.sampled_rows),
        }

    for item in sorted(images.items()):
        try:
            entries.append(work(item))
        except (HalmapError, OSError) as exc:
            failures.append(f"{item[0]}: {exc}")
    write_manifest(
        output_dir / "manifest.json",
        {
            "stage": "simulate",
            "version": __version__,
            "seed": seed,
            "config": cfg.to_dict(),
            "images": entries,
        },
    )
    if failures:
        for line in failures:
            print(f"error: {line}", file=sys.stderr)
        return 1
    return 0


def _measurement_inputs(meas_dir: Path) -> dict[str, Path]:
    inputs = {}
    for path in sorted(meas_dir.glob("*.cgrid")):
        if "." in path.stem:
            continue
        inputs[path.stem] = path
    return inputs


def cmd_reconstruct(args, cfg: RunConfig) -> int:
    meas_dir = Path(args.meas_dir)
    output_dir = Path(args.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    plstv_cfg = cfg.plstv
    if args.method == "plstv" and args.lambda_from:
        chosen = read_manifest(Path(args.lambda_from))
        if "chosen_lambda" not in chosen:
            raise ParameterError(f"{args.lambda_from}: missing field 'chosen_lambda'")
        plstv_cfg = replace(plstv_cfg, lam=float(chosen["chosen_lambda"]))
    inputs = _measurement_inputs(meas_dir)

    def work(item):
        image_id, path = item
        meas = _measurement_vector(read_cgrid(path))
        mask_path = meas_dir / f"{image_id}.mask.json"
        if not mask_path.is_file():
            raise HalmapError(f"missing mask file for image '{image_id}'")
        op = FftMaskOperator(read_mask_json(mask_path))
        entry = {"image_id": image_id}
        if args.method == "tp":
            dec = compute_svd(op, cfg.epsilon)
            image = recon_tp(meas, dec)
        else:
            result = recon_plstv(meas, op, plstv_cfg)
            image = result.image
            entry["iters"] = result.iterations
            entry["final_objective"] = result.objectives[-1]
        write_cgrid(output_dir / f"{image_id}.cgrid", image)
        return entry

    entries = _parallel(args.jobs, work, sorted(inputs.items()))
    write_manifest(
        output_dir / "manifest.json",
        {
            "stage": "reconstruct",
            "version": __version__,
            "method": args.method,
            "lambda": plstv_cfg.lam if args.method == "plstv" else None,
            "seed": args.seed,
            "config": cfg.to_dict(),
            "images": entries,
        },
    )
    return 0


def cmd_project(args, cfg: RunConfig) -> int:
    input_dir = Path(args.input_dir)
    output_dir = Path(args.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    images = discover_images(input_dir)

    def work(item):
        image_id, path = item
        theta = ingest_external(path)
        mask = make_uniform_mask(theta.height, theta.width, cfg.mask_factor, cfg.mask_offset)
        dec = compute_svd(FftMaskOperator(mask), cfg.epsilon)
        write_cgrid(output_dir / f"{image_id}.meas.cgrid", project_meas(dec, theta))
        write_cgrid(output_dir / f"{image_id}.null.cgrid", project_null(dec, theta))
        return {"image_id": image_id, "height": theta.height, "width": theta.width}

    entries = _parallel(args.jobs, work, sorted(images.items()))
    write_manifest(
        output_dir / "manifest.json",
        {
            "stage": "project",
            "version": __version__,
            "config": cfg.to_dict(),
            "images": entries,
        },
    )
    return 0


def _require_ids(base: dict[str, Path], others: dict[str, dict[str, Path]]) -> list[str]:
    ids = sorted(base)
    for name, table in others.items():
        for image_id in ids:
            if image_id not in table:
                raise HalmapError(f"image '{image_id}' missing from {name} directory")
    return ids


def cmd_halmap(args, cfg: RunConfig) -> int:
    recon_dir = Path(args.recon_dir)
    truth_dir = Path(args.truth_dir)
    meas_dir = Path(args.meas_dir)
    output_dir = Path(args.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    recons = discover_images(recon_dir)
    truths = discover_images(truth_dir)
    measurements = _measurement_inputs(meas_dir)
    ids = _require_ids(recons, {"truth": truths, "measurement": measurements})
    if args.figures:
        (output_dir / "figures").mkdir(exist_ok=True)

    def work(image_id: str) -> HallucinationReport:
        theta_hat = ingest_external(recons[image_id])
        theta = ingest_external(truths[image_id])
        if theta_hat.shape != theta.shape:
            raise DimensionsError(
                f"image '{image_id}': reconstruction shape {theta_hat.shape} does not "
                f"match truth shape {theta.shape}"
            )
        meas = _measurement_vector(read_cgrid(measurements[image_id]))
        op = _operator_for(meas_dir, image_id, theta.shape, cfg)
        dec = compute_svd(op, cfg.epsilon)
        report = compute_report(meas, dec, theta, theta_hat, cfg.transform, image_id)
        write_cgrid(output_dir / f"{image_id}.error.cgrid", report.error_map)
        write_cgrid(output_dir / f"{image_id}.meas_hm.cgrid", report.meas_hm)
        write_cgrid(output_dir / f"{image_id}.meas_error.cgrid", report.meas_error_map)
        write_cgrid(output_dir / f"{image_id}.null_hm.cgrid", report.null_hm)
        write_cgrid(output_dir / f"{image_id}.shm.cgrid", report.shm_mask)
        write_cgrid(output_dir / f"{image_id}.specific_error.cgrid", report.specific_error_mask)
        if args.figures:
            render_report_card(report, output_dir / "figures" / f"{image_id}.png")
        return report

    reports = _parallel(args.jobs, work, ids)
    write_csv(
        output_dir / "region_stats.csv",
        CENTROID_HEADER,
        export_centroid_scatter(reports, "specific_hm"),
    )
    write_csv(
        output_dir / "region_stats_specific_error.csv",
        CENTROID_HEADER,
        export_centroid_scatter(reports, "specific_error"),
    )
    write_manifest(
        output_dir / "manifest.json",
        {
            "stage": "halmap",
            "version": __version__,
            "config": cfg.to_dict(),
            "images": [{"image_id": image_id} for image_id in ids],
        },
    )
    return 0


def cmd_shm(args, cfg: RunConfig) -> int:
    maps_dir = Path(args.maps_dir)
    support_dir = Path(args.support_dir)
    output_dir = Path(args.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    maps = discover_images(maps_dir)
    supports = discover_images(support_dir)
    ids = _require_ids(maps, {"support": supports})
    if args.figures:
        (output_dir / "figures").mkdir(exist_ok=True)

    def work(image_id: str):
        map_image = ingest_external(maps[image_id])
        reference = ingest_external(supports[image_id])
        mask, stats = specific_map(map_image, reference, cfg.transform)
        write_cgrid(output_dir / f"{image_id}.shm.cgrid", mask)
        if args.figures:
            render_mask(mask, output_dir / "figures" / f"{image_id}.png", title=image_id)
        return [
            (image_id, s.component_id, s.centroid_row, s.centroid_col, s.area)
            for s in stats
        ]

    rows_per_image = _parallel(args.jobs, work, ids)
    write_csv(
        output_dir / "region_stats.csv",
        CENTROID_HEADER,
        [row for rows in rows_per_image for row in rows],
    )
    write_manifest(
        output_dir / "manifest.json",
        {
            "stage": "shm",
            "version": __version__,
            "config": cfg.to_dict(),
            "images": [{"image_id": image_id} for image_id in ids],
        },
    )
    return 0


def _read_region_csv(path: Path) -> list[tuple]:
    import csv as _csv

    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = _csv.DictReader(handle)
        for record in reader:
            rows.append(
                (
                    record["image_id"],
                    int(record["component_id"]),
                    float(record["centroid_row"]),
                    float(record["centroid_col"]),
                    int(record["area"]),
                )
            )
    return rows


def cmd_analyze(args, cfg: RunConfig) -> int:
    recon_dir = Path(args.recon_dir)
    truth_dir = Path(args.truth_dir)
    maps_dir = Path(args.maps_dir)
    output_dir = Path(args.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    recons = discover_images(recon_dir)
    truths = discover_images(truth_dir)
    ids = _require_ids(recons, {"truth": truths})
    method = "unknown"
    manifest_path = recon_dir / "manifest.json"
    if manifest_path.is_file():
        method = read_manifest(manifest_path).get("method", "unknown")
    ssim_kwargs = {
        "window": cfg.ssim_window,
        "sigma": cfg.ssim_sigma,
        "k1": cfg.ssim_k1,
        "k2": cfg.ssim_k2,
        "data_range": cfg.ssim_data_range,
    }

    def work(image_id: str):
        theta_hat = ingest_external(recons[image_id])
        theta = ingest_external(truths[image_id])
        shm_path = maps_dir / f"{image_id}.shm.cgrid"
        if not shm_path.is_file():
            raise HalmapError(f"image '{image_id}' missing from maps directory")
        shm_mask = read_cgrid(shm_path)
        threshold = otsu_threshold(theta, cfg.transform.histogram_bins)
        support = ImageGrid((np.abs(theta.data) > threshold).astype(np.complex128))
        global_ssim = ssim(theta_hat, theta, **ssim_kwargs)
        region = region_ssim(theta_hat, theta, shm_mask, support, **ssim_kwargs)
        return {
            "image_id": image_id,
            "global": global_ssim.value,
            "region_mean": region.region_mean,
            "background_mean": region.background_mean,
        }

    results = _parallel(args.jobs, work, ids)
    write_csv(
        output_dir / "ssim_table.csv",
        ("image_id", "method", "region_mean", "background_mean", "global"),
        [
            (
                r["image_id"],
                method,
                "" if r["region_mean"] is None else r["region_mean"],
                "" if r["background_mean"] is None else r["background_mean"],
                r["global"],
            )
            for r in results
        ],
    )

    centroid_rows = []
    for kind, filename in (
        ("specific_hm", "region_stats.csv"),
        ("specific_error", "region_stats_specific_error.csv"),
    ):
        source = maps_dir / filename
        if source.is_file():
            for row in _read_region_csv(source):
                centroid_rows.append((row[0], kind) + row[1:])
    write_csv(
        output_dir / "centroids.csv",
        ("image_id", "kind", "component_id", "centroid_row", "centroid_col", "area"),
        centroid_rows,
    )

    region_values = [r["region_mean"] for r in results if r["region_mean"] is not None]
    background_values = [
        r["background_mean"] for r in results if r["background_mean"] is not None
    ]
    pdf_region = empirical_pdf(region_values, cfg.pdf_bins) if region_values else []
    pdf_background = (
        empirical_pdf(background_values, cfg.pdf_bins) if background_values else []
    )
    write_csv(output_dir / "pdf.csv", PDF_HEADER, pdf_region)
    write_csv(output_dir / "pdf_background.csv", PDF_HEADER, pdf_background)

    if args.figures:
        (output_dir / "figures").mkdir(exist_ok=True)
        series = {}
        for kind in ("specific_hm", "specific_error"):
            series[kind] = [
                (row[3], row[4]) for row in centroid_rows if row[1] == kind
            ]
        render_centroid_scatter(series, output_dir / "figures" / "centroids.png")
        render_pdf(
            {"shm region": pdf_region, "background": pdf_background},
            output_dir / "figures" / "ssim_pdf.png",
            xlabel="mean SSIM",
        )
    write_manifest(
        output_dir / "manifest.json",
        {
            "stage": "analyze",
            "version": __version__,
            "method": method,
            "config": cfg.to_dict(),
            "images": [{"image_id": image_id} for image_id in ids],
        },
    )
    return 0


def cmd_sweep_lambda(args, cfg: RunConfig) -> int:
    from .recon import sweep_lambda

    meas_dir = Path(args.meas_dir)
    truth_dir = Path(args.truth_dir)
    output_dir = Path(args.output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    if not cfg.sweep_lambdas:
        raise ParameterError("sweep.lambdas: at least one candidate is required")
    measurements = _measurement_inputs(meas_dir)
    truths = discover_images(truth_dir)
    ids = _require_ids(measurements, {"truth": truths})
    if not ids:
        raise HalmapError(f"no measurement files found in {meas_dir}")

    dataset = []
    op = None
    for image_id in ids:
        meas = _measurement_vector(read_cgrid(measurements[image_id]))
        theta = ingest_external(truths[image_id])
        candidate = _operator_for(meas_dir, image_id, theta.shape, cfg)
        if op is None:
            op = candidate
        elif candidate.mask != op.mask:
            raise HalmapError(
                f"image '{image_id}': sweep requires a common mask across the dataset"
            )
        dataset.append((meas, theta))
    result = sweep_lambda(dataset, op, list(cfg.sweep_lambdas), cfg.plstv)
    write_csv(
        output_dir / "rmse_table.csv",
        ("lambda", "image_id", "rmse"),
        [(lam, ids[index], value) for lam, index, value in result.table],
    )
    write_manifest(
        output_dir / "chosen.json",
        {
            "chosen_lambda": result.chosen_lambda,
            "mean_rmse": {str(k): v for k, v in sorted(result.mean_rmse.items())},
        },
    )
    write_manifest(
        output_dir / "manifest.json",
        {
            "stage": "sweep-lambda",
            "version": __version__,
            "config": cfg.to_dict(),
            "images": [{"image_id": image_id} for image_id in ids],
        },
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="halmap",
        description="Hallucination-map analysis pipeline for undersampled imaging",
    )
    parser.add_argument("--config", metavar="PATH", help="JSON run configuration")
    parser.add_argument("--jobs", type=int, default=1, metavar="N", help="parallel workers per stage")
    parser.add_argument("--seed", type=int, default=None, metavar="U64", help="override the config seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate undersampled k-space data")
    p.add_argument("input_dir")
    p.add_argument("output_dir")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="reconstruct images from measurements")
    p.add_argument("method", choices=("tp", "plstv"))
    p.add_argument("meas_dir")
    p.add_argument("output_dir")
    p.add_argument("--lambda-from", metavar="PATH", help="JSON file with a chosen_lambda field")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("project", help="split images into measurement and null components")
    p.add_argument("input_dir")
    p.add_argument("output_dir")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("halmap", help="compute hallucination-map reports")
    p.add_argument("recon_dir")
    p.add_argument("truth_dir")
    p.add_argument("meas_dir")
    p.add_argument("output_dir")
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=cmd_halmap, figures=True)

    p = sub.add_parser("shm", help="apply the structure transform to existing maps")
    p.add_argument("maps_dir")
    p.add_argument("support_dir")
    p.add_argument("output_dir")
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=cmd_shm, figures=True)

    p = sub.add_parser("analyze", help="region-restricted SSIM, centroid and PDF tables")
    p.add_argument("recon_dir")
    p.add_argument("truth_dir")
    p.add_argument("maps_dir")
    p.add_argument("output_dir")
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=cmd_analyze, figures=True)

    p = sub.add_parser("sweep-lambda", help="choose the TV weight by lowest mean RMSE")
    p.add_argument("meas_dir")
    p.add_argument("truth_dir")
    p.add_argument("output_dir")
    p.set_defaults(func=cmd_sweep_lambda)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, noise=replace(cfg.noise, seed=args.seed))
        return args.func(args, cfg)
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (HalmapError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
