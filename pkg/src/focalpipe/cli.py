"""Single executable exposing the pipeline stages as subcommands:
focus, segment, extract, select, train, classify, auth, experiment, synth.

Exit codes: 0 success, 1 domain error (structured diagnostic on stderr),
2 usage error. Parameter precedence: flags > --params JSON file > defaults.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import fields as dc_fields
from pathlib import Path

import numpy as np

from . import __version__
from .authentication import (
    AuthModel,
    ThetaCondition,
    TpVoteProfile,
    authenticate,
    build_tp_profiles,
)
from .classifiers.evaluate import evaluate
from .classifiers.forest import ForestModel, train_forest
from .classifiers.neural import train_nn
from .classifiers.serialize import MODEL_FORMAT_VERSION, model_from_dict, model_to_dict
from .classifiers.tree import train_pruned_tree
from .classifiers.wnd import build_wnd_model
from .errors import PipelineError
from .features.catalog import CATALOG_VERSION, default_catalog
from .features.extract import (
    FeatureMatrix,
    extract_batch,
    read_features_csv,
    write_features_csv,
)
from .focus import FocusMeasureKind, select_optimal_plane
from .harness.experiment import (
    ExperimentConfig,
    emit_report,
    run_authentication_experiment,
    run_classification_experiment,
)
from .harness.manifest import Manifest, load_manifest, load_stack_dir, save_manifest
from .harness.synthetic import SynthConfig, synth_stack
from .imagecore import (
    BinaryMask,
    BoundingBox,
    Image,
    crop,
    crop_mask,
    load_image,
    save_image,
    to_grayscale,
)
from .segmentation.coarse import CoarseParams
from .segmentation.pipeline import make_record, segment_grains
from .segmentation.snake import SnakeParams
from .selection import (
    NormParams,
    SelectionConfig,
    apply_normalization,
    fisher_scores,
    fit_normalization,
    load_selection,
    save_selection,
    select_top,
)

log = logging.getLogger("focalpipe")

PROFILES_FORMAT_VERSION = "1"
MODEL_FILE_FORMAT_VERSION = "1"


def _dataclass_from_dict(cls, overrides: dict):
    allowed = {f.name for f in dc_fields(cls)}
    unknown = set(overrides) - allowed
    if unknown:
        raise PipelineError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    cleaned = {}
    for k, v in overrides.items():
        if isinstance(v, list):
            v = tuple(tuple(e) if isinstance(e, list) else e for e in v)
        cleaned[k] = v
    return cls(**cleaned)


def _load_params(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(path)
    return json.loads(p.read_text())


def _coarse_params(params: dict) -> CoarseParams:
    return _dataclass_from_dict(CoarseParams, params.get("coarse", {}))


def _snake_params(params: dict) -> SnakeParams:
    return _dataclass_from_dict(SnakeParams, params.get("snake", {}))


def _grayscale_from_file(path: str) -> Image:
    return to_grayscale(load_image(path))


# ---------------------------------------------------------------- focus


def _cmd_focus(args, params) -> int:
    stack = load_stack_dir(args.stack)
    kind = FocusMeasureKind(args.measure)
    curve = select_optimal_plane(stack, kind)
    out_lines = ["plane_index,score"]
    out_lines += [f"{i},{repr(s)}" for i, s in enumerate(curve.scores)]
    out_lines.append(f"selected,{curve.best_index}")
    text = "\n".join(out_lines)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


# ---------------------------------------------------------------- segment


def _cmd_segment(args, params) -> int:
    img = _grayscale_from_file(args.image)
    cp, sp = _coarse_params(params), _snake_params(params)
    source_id = Path(args.image).stem
    records = segment_grains(img, cp, sp, source_id=source_id)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    index = []
    for k, rec in enumerate(records):
        save_image(rec.image, outdir / f"grain_{k}.png")
        save_image(rec.mask, outdir / f"grain_{k}.mask.png")
        index.append(
            {
                "source_id": rec.source_id,
                "grain": k,
                "box": {"x": rec.box.x, "y": rec.box.y, "w": rec.box.w, "h": rec.box.h},
                "area": rec.mask.area(),
                "label": args.label,
            }
        )
    (outdir / "grains.json").write_text(json.dumps({"grains": index}, indent=2, sort_keys=True))
    print(f"wrote {len(records)} grain(s) to {outdir}")
    return 0


# ---------------------------------------------------------------- extract


def _records_from_grain_dir(path: Path, default_label: str):
    payload = json.loads((path / "grains.json").read_text())
    records, labels = [], []
    for entry in payload["grains"]:
        k = entry["grain"]
        image = to_grayscale(load_image(path / f"grain_{k}.png"))
        mask_img = load_image(path / f"grain_{k}.mask.png")
        mask = BinaryMask(mask_img.pixels[:, :, 0] > 0.5)
        b = entry["box"]
        box = BoundingBox(x=b["x"], y=b["y"], w=b["w"], h=b["h"])
        records.append(make_record(entry["source_id"], box, image, mask))
        labels.append(entry.get("label") or default_label)
    return records, labels


def _cmd_extract(args, params) -> int:
    records, labels = _records_from_grain_dir(Path(args.grains), args.label)
    if not records:
        raise PipelineError(f"{args.grains} holds no grains")
    matrix = extract_batch(records, labels, threads=args.threads)
    write_features_csv(matrix, args.out)
    print(f"extracted {matrix.n_samples} x {matrix.n_features} features to {args.out}")
    return 0


# ---------------------------------------------------------------- select


def _cmd_select(args, params) -> int:
    matrix = read_features_csv(args.features)
    norm = fit_normalization(matrix)
    normalized = apply_normalization(matrix, norm)
    scores = fisher_scores(normalized)
    idx = select_top(scores, SelectionConfig(fraction=args.fraction, count=args.count))
    save_selection(args.out, list(matrix.feature_names), idx, scores, norm)
    print(f"selected {len(idx)} of {matrix.n_features} features -> {args.out}")
    return 0


# ---------------------------------------------------------------- train


def _apply_selection(matrix: FeatureMatrix, indices: np.ndarray, norm: NormParams) -> FeatureMatrix:
    return apply_normalization(matrix, norm).subset_columns(indices)


def _cmd_train(args, params) -> int:
    matrix = read_features_csv(args.features)
    preprocessing = None
    if args.model in ("wnd5", "nn"):
        if args.selection:
            indices, norm, _ = load_selection(args.selection)
            scores = fisher_scores(apply_normalization(matrix, norm))
        else:
            norm = fit_normalization(matrix)
            normalized = apply_normalization(matrix, norm)
            scores = fisher_scores(normalized)
            indices = select_top(scores, SelectionConfig(fraction=args.fraction))
        train_matrix = _apply_selection(matrix, indices, norm)
        if args.model == "wnd5":
            model = build_wnd_model(train_matrix, scores.scores[indices])
        else:
            model = train_nn(train_matrix, epochs=args.nn_epochs, feature_indices=indices)
        preprocessing = {
            "indices": [int(i) for i in indices],
            "min": [float(v) for v in norm.mins],
            "max": [float(v) for v in norm.maxs],
        }
    elif args.model == "dt":
        model = train_pruned_tree(matrix, seed=args.seed)
    else:
        model = train_forest(matrix, n_trees=args.n_trees, seed=args.seed)

    payload = {
        "format_version": MODEL_FILE_FORMAT_VERSION,
        "feature_names": list(matrix.feature_names),
        "preprocessing": preprocessing,
        "model": model_to_dict(model),
    }
    Path(args.out).write_text(json.dumps(payload, sort_keys=True))
    print(f"trained {args.model} on {matrix.n_samples} samples -> {args.out}")

    if args.profile_features:
        if not isinstance(model, ForestModel):
            raise PipelineError("vote profiles require an rf model")
        test_matrix = _check_schema(read_features_csv(args.profile_features), payload)
        profiles = build_tp_profiles(model, test_matrix)
        profiles_out = args.profiles_out or str(Path(args.out).with_suffix(".profiles.json"))
        _save_profiles(profiles, profiles_out)
        print(f"wrote vote profiles -> {profiles_out}")
    return 0


def _save_profiles(profiles: TpVoteProfile, path: str) -> None:
    payload = {
        "format_version": PROFILES_FORMAT_VERSION,
        "votes": {c: [int(v) for v in vs] for c, vs in profiles.votes.items()},
        "margins": {c: [int(v) for v in vs] for c, vs in profiles.margins.items()},
    }
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True))


def _load_profiles(path: str) -> TpVoteProfile:
    payload = json.loads(Path(path).read_text())
    if payload.get("format_version") != PROFILES_FORMAT_VERSION:
        raise PipelineError("unsupported profiles format version")
    return TpVoteProfile(
        votes={c: np.array(v, dtype=np.int64) for c, v in payload["votes"].items()},
        margins={c: np.array(v, dtype=np.int64) for c, v in payload["margins"].items()},
    )


def _check_schema(matrix: FeatureMatrix, payload: dict) -> FeatureMatrix:
    expected = payload["feature_names"]
    got = list(matrix.feature_names)
    if got != expected:
        for i, (e, g) in enumerate(zip(expected, got)):
            if e != g:
                raise PipelineError(
                    f"feature column {i} mismatch: model expects {e!r}, CSV has {g!r}"
                )
        raise PipelineError(
            f"feature count mismatch: model expects {len(expected)}, CSV has {len(got)}"
        )
    return matrix


def _load_model_file(path: str):
    payload = json.loads(Path(path).read_text())
    if payload.get("format_version") != MODEL_FILE_FORMAT_VERSION:
        raise PipelineError(f"unsupported model file version in {path}")
    return payload, model_from_dict(payload["model"])


def _prepare_inputs(matrix: FeatureMatrix, payload: dict) -> FeatureMatrix:
    _check_schema(matrix, payload)
    pre = payload.get("preprocessing")
    if pre is None:
        return matrix
    norm = NormParams(mins=np.array(pre["min"]), maxs=np.array(pre["max"]))
    return _apply_selection(matrix, np.array(pre["indices"], dtype=int), norm)


# ---------------------------------------------------------------- classify


def _cmd_classify(args, params) -> int:
    payload, model = _load_model_file(args.model)
    matrix = read_features_csv(args.features)
    inputs = _prepare_inputs(matrix, payload)
    lines = ["source_id,label,predicted"]
    correct = total_labeled = 0
    for sid, label, row in zip(inputs.ids, inputs.labels, inputs.values):
        predicted = model.classify(row)
        lines.append(f"{sid},{label},{predicted}")
        if label and label != "unknown":
            total_labeled += 1
            correct += predicted == label
    text = "\n".join(lines)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    if total_labeled:
        print(f"accuracy,{correct / total_labeled}")
    return 0


# ---------------------------------------------------------------- auth


def _cmd_auth(args, params) -> int:
    payload, model = _load_model_file(args.model)
    if not isinstance(model, ForestModel):
        raise PipelineError("authentication requires an rf model")
    profiles = _load_profiles(args.profiles)
    condition = ThetaCondition(args.condition)
    auth_model = AuthModel(forest=model, profiles=profiles, condition=condition)
    matrix = read_features_csv(args.features)
    inputs = _prepare_inputs(matrix, payload)
    lines = ["source_id,verdict,winner,vp1,vp2,threshold"]
    for sid, row in zip(inputs.ids, inputs.values):
        d = authenticate(auth_model, row)
        verdict = "inlier" if d.is_inlier else "outlier"
        threshold = d.diagnostics.get("threshold", "")
        lines.append(
            f"{sid},{verdict},{d.diagnostics['winner']},{d.diagnostics['vp1']},"
            f"{d.diagnostics['vp2']},{threshold}"
        )
    text = "\n".join(lines)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


# ---------------------------------------------------------------- synth


def _cmd_synth(args, params) -> int:
    overrides = dict(params.get("synth", {}))
    if args.config:
        overrides.update(json.loads(Path(args.config).read_text()))
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = _dataclass_from_dict(SynthConfig, overrides)
    out = Path(args.out)
    entries = []
    for t in range(cfg.n_types):
        label = cfg.label_for(t)
        for s in range(args.stacks_per_type):
            stack, masks, _ = synth_stack(cfg, t, s)
            stack_dir = out / label / f"stack_{s:03d}"
            stack_dir.mkdir(parents=True, exist_ok=True)
            for i, plane in enumerate(stack.planes):
                save_image(plane, stack_dir / f"plane_{i:02d}.png")
            truth_dir = stack_dir / "truth"
            truth_dir.mkdir(exist_ok=True)
            for g, mask in enumerate(masks):
                save_image(mask, truth_dir / f"mask_{g}.png")
            entries.append((label, stack_dir))
    save_manifest(Manifest(entries=tuple(entries)), out / "manifest.json")
    print(f"wrote {len(entries)} stacks ({cfg.n_types} types) to {out}")
    return 0


# ---------------------------------------------------------------- experiment


def _truth_records(stack_dir: Path, plane: Image, source_id: str):
    records = []
    truth_dir = stack_dir / "truth"
    if not truth_dir.is_dir():
        raise PipelineError(f"{stack_dir} has no truth masks (rerun without --use-truth-masks)")
    for k, mask_file in enumerate(sorted(truth_dir.glob("mask_*.png"))):
        mask = BinaryMask(load_image(mask_file).pixels[:, :, 0] > 0.5)
        ys, xs = np.nonzero(mask.pixels)
        if ys.size == 0:
            continue
        pad = 4
        x0, y0 = max(0, xs.min() - pad), max(0, ys.min() - pad)
        x1 = min(mask.width, xs.max() + 1 + pad)
        y1 = min(mask.height, ys.max() + 1 + pad)
        box = BoundingBox(x=int(x0), y=int(y0), w=int(x1 - x0), h=int(y1 - y0))
        records.append(make_record(f"{source_id}/grain_{k}", box, crop(plane, box), crop_mask(mask, box)))
    return records


def _matrix_from_dataset(root: str, params: dict, threads: int, use_truth: bool) -> FeatureMatrix:
    manifest = load_manifest(root)
    cp, sp = _coarse_params(params), _snake_params(params)
    records, labels = [], []
    for category, stack_dir in manifest.entries:
        stack = load_stack_dir(stack_dir)
        curve = select_optimal_plane(stack, FocusMeasureKind.ABSOLUTE_GRADIENT)
        plane = stack.planes[curve.best_index]
        source_id = f"{category}/{stack_dir.name}"
        if use_truth:
            recs = _truth_records(Path(stack_dir), plane, source_id)
        else:
            recs = segment_grains(plane, cp, sp, source_id=source_id)
        records.extend(recs)
        labels.extend([category] * len(recs))
    if not records:
        raise PipelineError("dataset produced no grains")
    return extract_batch(records, labels, threads=threads)


def _cmd_experiment(args, params) -> int:
    started = time.perf_counter()
    matrix = _matrix_from_dataset(args.data, params, args.threads, args.use_truth_masks)
    cfg = ExperimentConfig(
        p_range=tuple(args.p),
        repeats=args.repeats,
        seed=args.seed if args.seed is not None else 0,
        classifiers=tuple(args.classifiers),
        feature_fractions=tuple(args.fractions),
        n_trees=args.n_trees,
        threads=args.threads,
    )
    if args.outlier_data:
        outliers = _matrix_from_dataset(args.outlier_data, params, args.threads, args.use_truth_masks)
        inliers = args.inlier_data and _matrix_from_dataset(
            args.inlier_data, params, args.threads, args.use_truth_masks
        )
        report = run_authentication_experiment(matrix, inliers or matrix, outliers, cfg)
    else:
        report = run_classification_experiment(matrix, cfg)
    emit_report(report, args.out, elapsed_seconds=time.perf_counter() - started)
    print(f"wrote {report.kind} report ({len(report.rows)} rows) to {args.out}")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="focalpipe",
        description="Multi-focal microscope image classification and authentication pipeline",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=(
            f"focalpipe {__version__} (catalog v{CATALOG_VERSION}, "
            f"model format v{MODEL_FORMAT_VERSION})"
        ),
    )
    parser.add_argument("--seed", type=int, default=None, help="master random seed")
    parser.add_argument("--threads", type=int, default=1, help="worker parallelism cap")
    parser.add_argument("--log-level", default="WARNING", help="logging level name")
    parser.add_argument("--params", default=None, help="JSON file overriding module defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("focus", help="score focal planes and pick the sharpest")
    p.add_argument("--stack", required=True, help="directory of plane_<k>.png files")
    p.add_argument("--measure", default="absolute_gradient",
                   choices=[k.value for k in FocusMeasureKind])
    p.add_argument("--out", default=None, help="also write the CSV here")
    p.set_defaults(func=_cmd_focus)

    p = sub.add_parser("segment", help="extract per-grain sub-images and masks")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--label", default=None, help="optional category label for grains.json")
    p.set_defaults(func=_cmd_segment)

    p = sub.add_parser("extract", help="compute the feature catalog over segmented grains")
    p.add_argument("--grains", required=True, help="directory written by `segment`")
    p.add_argument("--out", required=True)
    p.add_argument("--label", default="unknown")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("select", help="rank features by Fisher score")
    p.add_argument("--features", required=True)
    p.add_argument("--fraction", type=float, default=0.02)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("train", help="train one of the four classifiers")
    p.add_argument("--features", required=True)
    p.add_argument("--model", required=True, choices=["wnd5", "dt", "rf", "nn"])
    p.add_argument("--out", required=True)
    p.add_argument("--selection", default=None, help="selection.json from `select`")
    p.add_argument("--fraction", type=float, default=0.02)
    p.add_argument("--n-trees", type=int, default=500)
    p.add_argument("--nn-epochs", type=int, default=300)
    p.add_argument("--profile-features", default=None,
                   help="test features CSV for building rf vote profiles")
    p.add_argument("--profiles-out", default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("classify", help="label feature rows with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("auth", help="inlier/outlier authentication with vote thresholds")
    p.add_argument("--model", required=True, help="rf model JSON")
    p.add_argument("--profiles", required=True)
    p.add_argument("--condition", default="theta21",
                   choices=[c.value for c in ThetaCondition])
    p.add_argument("--features", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_auth)

    p = sub.add_parser("synth", help="generate a synthetic multi-focal dataset")
    p.add_argument("--config", default=None, help="JSON overriding SynthConfig defaults")
    p.add_argument("--out", required=True)
    p.add_argument("--stacks-per-type", type=int, default=4)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("experiment", help="run the full classification/authentication study")
    p.add_argument("--data", required=True, help="dataset root or manifest.json")
    p.add_argument("--out", required=True)
    p.add_argument("--p", type=int, nargs="+", default=[2, 3])
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--classifiers", nargs="+", default=["wnd5", "dt", "rf", "nn"])
    p.add_argument("--fractions", type=float, nargs="+", default=[0.02])
    p.add_argument("--n-trees", type=int, default=500)
    p.add_argument("--outlier-data", default=None)
    p.add_argument("--inlier-data", default=None)
    p.add_argument("--use-truth-masks", action="store_true",
                   help="use generator ground-truth masks instead of segmentation")
    p.set_defaults(func=_cmd_experiment)

    return parser


def dispatch(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.WARNING))
    try:
        params = _load_params(args.params)
        return args.func(args, params)
    except (PipelineError, FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
