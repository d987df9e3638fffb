"""Command-line interface.

Subcommands: mag, analytic1d, edges, train, eval, topo, bench, synth.
A JSON config file can supply defaults per command; explicit flags win over
the file, the file wins over built-in defaults.  Exit codes: 0 success,
2 validation errors, 3 numerical failures (similarity matrix not
invertible).  Runs with a fixed seed produce byte-identical artifacts
(except the measured runtime column of ``bench``).
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .analytic1d import StepImage1D, analytic_measure, numeric_weights
from .approx import (PatchConfig, crop_boundary, independence_magnitude,
                     patched_magnitude, rank1_magnitude)
from .datasets import load_pairs, save_pairs, synthetic_blocks
from .edges import EdgeMap, canny_pipeline, magnitude_edges, nms_thin, sobel_pipeline
from .evaluation import approx_report, edge_eval
from .image import DigitalImage, write_csv_grid
from .learn import (TrainConfig, load_checkpoint, save_checkpoint, train,
                    transform_image)
from .magnitude import NotInvertibleError, image_magnitude
from .metric import MetricSpec
from .topology import betti_curve, betti_norm

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

_DEFAULTS = {
    "mag": {"method": "patched", "patch": [25, 25], "overlap": 2,
            "channel_weight": 1.0, "pad": "edge"},
    "analytic1d": {"points_per_unit": 200},
    "edges": {"method": "sobel", "blur": 5, "low": 0.1, "high": 0.3,
              "patch": [25, 25], "overlap": 2, "channel_weight": 1.0, "pad": 2},
    "train": {"scenario": "random", "model": "I", "lr": 1e-3, "lam": 1.0,
              "patch": [40, 40], "overlap": 2, "channel_weight": 1.0,
              "epochs": None, "seed": 0, "validation_fraction": 0.2},
    "eval": {"thresholds": 99, "tol": None, "nms": True},
    "topo": {"levels": 64},
    "bench": {"patch_sizes": [25, 50], "overlap": 2, "repeats": 3,
              "gt_size": 200, "crop": 2, "channel_weight": 1.0, "jobs": 1,
              "max_points": 40_000},
    "synth": {"n": 10, "size": [64, 64], "seed": 0, "noise": 0.03},
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="magimage",
                                     description="magnitude vectors of images")
    parser.add_argument("--config", type=str, default=None,
                        help="JSON file with per-command default settings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mag", help="magnitude map of one image")
    p.add_argument("input")
    p.add_argument("output", help="destination: .pgm, .csv or .json")
    p.add_argument("--method", choices=["dense", "patched", "indep", "rank1"])
    p.add_argument("--patch", nargs=2, type=int, metavar=("H", "W"))
    p.add_argument("--overlap", type=int)
    p.add_argument("--channel-weight", dest="channel_weight", type=float)
    p.add_argument("--pad", choices=["edge", "zero"])

    p = sub.add_parser("analytic1d", help="closed-form 1-D measure vs dense solve")
    p.add_argument("spec", help="JSON with width, gammas (m-1 x n), offsets (n)")
    p.add_argument("--points-per-unit", dest="points_per_unit", type=int)
    p.add_argument("--out-json", dest="out_json")
    p.add_argument("--out-csv", dest="out_csv")

    p = sub.add_parser("edges", help="edge probability / binary map of one image")
    p.add_argument("input")
    p.add_argument("output", help="PNG preview; a raw CSV is written next to it")
    p.add_argument("--method", choices=["sobel", "canny", "magnitude", "model"])
    p.add_argument("--model", help="checkpoint JSON for --method model")
    p.add_argument("--blur", type=int)
    p.add_argument("--low", type=float)
    p.add_argument("--high", type=float)
    p.add_argument("--patch", nargs=2, type=int, metavar=("H", "W"))
    p.add_argument("--overlap", type=int)
    p.add_argument("--channel-weight", dest="channel_weight", type=float)
    p.add_argument("--pad", type=int)
    p.add_argument("--nms", action="store_const", const=True, default=None,
                   help="apply NMS/thinning")

    p = sub.add_parser("train", help="train a pullback-metric model")
    p.add_argument("--data", required=True,
                   help="directory with images/ and labels/ PNG pairs")
    p.add_argument("--out", required=True, help="checkpoint JSON path")
    p.add_argument("--scenario", choices=["random", "single-shot"])
    p.add_argument("--model", choices=["I", "II", "III"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--patch", nargs=2, type=int, metavar=("H", "W"))
    p.add_argument("--overlap", type=int)
    p.add_argument("--channel-weight", dest="channel_weight", type=float)
    p.add_argument("--validation-fraction", dest="validation_fraction", type=float)
    p.add_argument("--seed", type=int)

    p = sub.add_parser("eval", help="score predicted edge maps against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", required=True, help="report JSON; PR curve CSV beside it")
    p.add_argument("--tol", type=float)
    p.add_argument("--thresholds", type=int)
    p.add_argument("--no-nms", dest="nms", action="store_false", default=None)

    p = sub.add_parser("topo", help="Betti curves of an edge map")
    p.add_argument("input")
    p.add_argument("--levels", type=int)
    p.add_argument("--out", required=True, help="curve CSV; norms JSON beside it")

    p = sub.add_parser("bench", help="approximation quality and runtime study")
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True, help="CSV report")
    p.add_argument("--patch-sizes", dest="patch_sizes", nargs="+", type=int)
    p.add_argument("--overlap", type=int)
    p.add_argument("--repeats", type=int)
    p.add_argument("--gt-size", dest="gt_size", type=int)
    p.add_argument("--crop", type=int)
    p.add_argument("--channel-weight", dest="channel_weight", type=float)
    p.add_argument("--jobs", type=int)
    p.add_argument("--max-points", dest="max_points", type=int)

    p = sub.add_parser("synth", help="write a synthetic block dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--size", nargs=2, type=int, metavar=("H", "W"))
    p.add_argument("--seed", type=int)
    p.add_argument("--noise", type=float)
    return parser


def _resolve(args: argparse.Namespace) -> dict:
    """flag > config file > built-in default."""
    cmd = args.command
    merged = dict(_DEFAULTS.get(cmd, {}))
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        merged.update(file_cfg.get(cmd, {}))
    for key, value in vars(args).items():
        if key in ("config", "command"):
            continue
        if value is not None:
            merged[key] = value
    return merged


# ---------------- command implementations ----------------

def _cmd_mag(cfg: dict) -> int:
    img = DigitalImage.from_png(cfg["input"])
    spec = MetricSpec(base="l1", channel_weight=cfg["channel_weight"])
    method = cfg["method"]
    if method == "dense":
        result = image_magnitude(img, spec)
    elif method == "indep":
        result = independence_magnitude(img, spec)
    elif method == "rank1":
        result = rank1_magnitude(img, spec)
    else:
        pcfg = PatchConfig(cfg["patch"][0], cfg["patch"][1], cfg["overlap"], spec)
        pad_mode = "edge" if cfg["pad"] == "edge" else "constant"
        result = patched_magnitude(img, pcfg, pad_mode=pad_mode)
    out = Path(cfg["output"])
    if out.suffix == ".pgm":
        result.to_pgm(out)
    elif out.suffix == ".csv":
        result.to_csv(out)
    elif out.suffix == ".json":
        result.to_json(out)
    else:
        raise ValueError(f"unknown output format {out.suffix!r} (use .pgm/.csv/.json)")
    return EXIT_OK


def _cmd_analytic1d(cfg: dict) -> int:
    with open(cfg["spec"]) as fh:
        desc = json.load(fh)
    img = StepImage1D(width=float(desc["width"]),
                      gammas=np.asarray(desc.get("gammas", []), dtype=np.float64),
                      offsets=np.asarray(desc["offsets"], dtype=np.float64))
    measure = analytic_measure(img)
    payload = {
        "loci": [l for l, _ in measure.step_atoms],
        "masses": [m for _, m in measure.step_atoms],
        "total_mass": measure.total_mass,
    }
    if cfg.get("out_json"):
        with open(cfg["out_json"], "w") as fh:
            json.dump(payload, fh, sort_keys=True)
            fh.write("\n")
    else:
        print(json.dumps(payload, sort_keys=True))
    if cfg.get("out_csv"):
        xs, wts, _ = numeric_weights(img, cfg["points_per_unit"])
        spacing = xs[1] - xs[0]
        analytic = np.full_like(xs, 0.5 * spacing)
        analytic[0] += 0.5
        analytic[-1] += 0.5
        for locus, mass in measure.step_atoms:
            k = int(np.searchsorted(xs, locus, side="right")) - 1
            k = min(max(k, 0), xs.size - 2)
            analytic[k] += mass / 2       # atom shared by the straddling samples
            analytic[k + 1] += mass / 2
        with open(cfg["out_csv"], "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["position", "analytic_weight", "numeric_weight"])
            for x, a, nw in zip(xs, analytic, wts):
                writer.writerow([repr(float(x)), repr(float(a)), repr(float(nw))])
    return EXIT_OK


def _cmd_edges(cfg: dict) -> int:
    img = DigitalImage.from_png(cfg["input"])
    method = cfg["method"]
    if method == "sobel":
        emap = sobel_pipeline(img, cfg["blur"])
    elif method == "canny":
        emap = canny_pipeline(img, cfg["low"], cfg["high"], cfg["blur"])
    elif method == "magnitude":
        spec = MetricSpec(base="l1", channel_weight=cfg["channel_weight"])
        pcfg = PatchConfig(cfg["patch"][0], cfg["patch"][1], cfg["overlap"], spec)
        emap = magnitude_edges(img, pcfg, blur_size=cfg["blur"], pad=cfg["pad"])
    elif method == "model":
        if not cfg.get("model"):
            raise ValueError("--method model requires --model ckpt.json")
        model, payload = load_checkpoint(cfg["model"])
        mcfg = payload["config"]
        spec = MetricSpec(base="l1", channel_weight=mcfg["channel_weight"])
        pcfg = PatchConfig(mcfg["patch_h"], mcfg["patch_w"], mcfg["overlap"], spec)
        emap = transform_image(img, model, pcfg, blur_size=cfg["blur"],
                               pad=cfg["pad"])
    else:
        raise ValueError(f"unknown edges method {method!r}")
    if cfg.get("nms"):
        emap = nms_thin(emap)
    out = Path(cfg["output"])
    DigitalImage(emap.values[:, :, None]).to_png(out)
    write_csv_grid(out.with_suffix(".csv"), emap.values)
    return EXIT_OK


def _cmd_train(cfg: dict) -> int:
    data = Path(cfg["data"])
    pairs = [(img.data, lab) for img, lab in load_pairs(data / "images", data / "labels")]
    if not pairs:
        raise ValueError(f"no paired PNGs under {data}/images and {data}/labels")
    scenario = cfg["scenario"].replace("-", "_")
    spec = MetricSpec(base="l1", channel_weight=cfg["channel_weight"])
    patch = PatchConfig(cfg["patch"][0], cfg["patch"][1], cfg["overlap"], spec)
    tcfg = TrainConfig(learning_rate=cfg["lr"], lam=cfg["lam"], patch=patch,
                       epochs=cfg["epochs"], scenario=scenario,
                       validation_fraction=cfg["validation_fraction"],
                       seed=cfg["seed"])
    model, history = train(pairs, tcfg, architecture=cfg["model"])
    save_checkpoint(cfg["out"], model, tcfg, history.best_val_loss)
    print(f"best validation loss {history.best_val_loss!r} at epoch {history.best_epoch}")
    return EXIT_OK


def _cmd_eval(cfg: dict) -> int:
    pairs = []
    for img, lab in load_pairs(cfg["pred"], cfg["gt"]):
        pred = EdgeMap(np.clip(img.gray(), 0.0, 1.0), "probabilistic")
        if cfg["nms"] is not False:
            pred = nms_thin(pred)
        pairs.append((pred, lab))
    if not pairs:
        raise ValueError("no prediction/ground-truth pairs found")
    report = edge_eval(pairs, thresholds=cfg["thresholds"], tol=cfg["tol"])
    out = Path(cfg["out"])
    with open(out, "w") as fh:
        json.dump({"ods": report.ods, "ois": report.ois, "ap": report.ap,
                   "r50": report.r50}, fh, sort_keys=True)
        fh.write("\n")
    with open(out.with_suffix(".pr.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "precision", "recall"])
        for t, p, r in report.pr_curve:
            writer.writerow([repr(t), repr(p), repr(r)])
    return EXIT_OK


def _cmd_topo(cfg: dict) -> int:
    img = DigitalImage.from_png(cfg["input"])
    values = np.clip(img.gray(), 0.0, 1.0)
    curve = betti_curve(values, levels=cfg["levels"])
    n0, n1 = betti_norm(curve)
    out = Path(cfg["out"])
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "betti0", "betti1"])
        for t, b0, b1 in zip(curve.thresholds, curve.betti0, curve.betti1):
            writer.writerow([repr(float(t)), int(b0), int(b1)])
    with open(out.with_suffix(".json"), "w") as fh:
        json.dump({"betti0_norm": n0, "betti1_norm": n1}, fh, sort_keys=True)
        fh.write("\n")
    return EXIT_OK


def _available_memory_bytes():
    try:
        with open("/proc/meminfo") as fh:
            for line in fh:
                if line.startswith("MemAvailable:"):
                    return int(line.split()[1]) * 1024
    except OSError:
        pass
    return None


def _bench_one(path_str: str, cfg: dict) -> list:
    """All bench rows for one image; error rows keep the run going."""
    rows = []
    spec = MetricSpec(base="l1", channel_weight=cfg["channel_weight"])
    crop = cfg["crop"]
    try:
        with PILImage.open(path_str) as im:
            im = im.convert("RGB").resize((cfg["gt_size"], cfg["gt_size"]),
                                          PILImage.BILINEAR)
            img = DigitalImage(np.asarray(im, dtype=np.float64) / 255.0)
    except Exception as exc:  # unreadable file: report and continue
        return [[Path(path_str).name, "error", "", "", "", "", "", "", str(exc)]]
    name = Path(path_str).name
    n_points = img.n_pixels
    # dense solve holds the matrix plus one factor copy: ~16 bytes per entry
    needed = 16.0 * n_points * n_points * 1.15
    available = _available_memory_bytes()
    if n_points > cfg["max_points"] or (available is not None and needed > available):
        return [[name, "error", "", "", "", "", "", "",
                 f"dense ground truth infeasible: {n_points} points need "
                 f"~{needed / 2 ** 30:.1f} GiB"]]

    def timed(fn, repeats):
        best = []
        result = None
        for _ in range(repeats):
            t0 = time.perf_counter()
            result = fn()
            best.append((time.perf_counter() - t0) * 1000.0)
        return result, float(np.median(best))

    gt, t_dense = timed(lambda: image_magnitude(img, spec), cfg["repeats"])
    gt_crop = crop_boundary(gt, crop) if crop else gt
    rows.append([name, "dense", "", "", "", repr(0.0), repr(0.0), repr(1.0),
                 repr(t_dense)])

    def add(method, fn, ph="", pw="", ov=""):
        try:
            result, ms = timed(fn, cfg["repeats"])
        except NotInvertibleError as exc:
            rows.append([name, method, ph, pw, ov, "", "", "", str(exc)])
            return
        cropped = crop_boundary(result, crop) if crop else result
        rep = approx_report(gt_crop, cropped)
        rows.append([name, method, ph, pw, ov, repr(rep.linf), repr(rep.frob),
                     repr(rep.corr), repr(ms)])

    for size in cfg["patch_sizes"]:
        pcfg = PatchConfig(size, size, cfg["overlap"], spec)
        add("patched", lambda pcfg=pcfg: patched_magnitude(img, pcfg),
            str(size), str(size), str(cfg["overlap"]))
    add("independence", lambda: independence_magnitude(img, spec))
    add("rank1", lambda: rank1_magnitude(img, spec))
    return rows


def _cmd_bench(cfg: dict) -> int:
    image_paths = sorted(str(p) for p in Path(cfg["images"]).glob("*.png"))
    if not image_paths:
        raise ValueError(f"no PNG images under {cfg['images']}")
    header = ["image", "method", "patch_h", "patch_w", "overlap",
              "linf", "frob", "corr", "runtime_ms"]
    if cfg["jobs"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["jobs"]) as pool:
            all_rows = list(pool.map(_bench_one, image_paths,
                                     [cfg] * len(image_paths)))
    else:
        all_rows = [_bench_one(p, cfg) for p in image_paths]
    with open(cfg["out"], "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for rows in all_rows:
            writer.writerows(rows)
    return EXIT_OK


def _cmd_synth(cfg: dict) -> int:
    pairs = synthetic_blocks(cfg["n"], size=tuple(cfg["size"]), noise=cfg["noise"],
                             seed=cfg["seed"])
    out = Path(cfg["out"])
    save_pairs(pairs, out / "images", out / "labels")
    print(f"wrote {len(pairs)} pairs under {out}")
    return EXIT_OK


_COMMANDS = {
    "mag": _cmd_mag,
    "analytic1d": _cmd_analytic1d,
    "edges": _cmd_edges,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "topo": _cmd_topo,
    "bench": _cmd_bench,
    "synth": _cmd_synth,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args)
        return _COMMANDS[args.command](cfg)
    except NotInvertibleError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, FileNotFoundError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
