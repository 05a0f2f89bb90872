"""Command-line front end: generate, refine, evaluate, run.

A run is described by a single JSON config; presets supply full configs for
the standard experiment regimes and command-line flags override file keys.
Every command writes machine-auditable artifacts: CSV data and scores, a
manifest capturing the plan, model config, per-model seeds and residual
statistics, metrics JSON, PR-curve CSVs, and SVG figures.

Exit codes: 0 success, 1 config error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .dataset import Dataset, load_csv, save_csv
from .errors import ConfigError, DataError, NoCleanSpecError, UsdrError
from .evaluation import degradation_target, pr_curve, rmse
from .models import config_from_dict, config_to_dict, model_preset
from .refine import METHODS, CleanSpec, run_refinement
from .report import plot_pr_curves, plot_scores
from .subsetting import build_plan, plan_from_fractions
from .synth import (
    AbruptConfig,
    DegradationConfig,
    canonical_preset_name,
    gen_abrupt,
    gen_degradation,
    preset as synth_preset,
)

_ALL_METHODS = list(METHODS)

# Full run configs for the standard regimes; user config and flags override.
# Abrupt-fault regimes share one recipe (smoothing on, clean from labels);
# the degradation regime uses the fraction-based plan, no smoothing, and a
# clean prefix.
_ABRUPT_RUN = {
    "plan": {"w": 200, "d": 40},
    "postprocess": {"smooth_window": 10},
    "clean": {"mode": "ensemble", "mask": "labels"},
}
RUN_PRESETS = {
    name: _ABRUPT_RUN
    for name in (
        "abrupt-single", "abrupt-triple",
        "fan-like", "pump-like", "slider-like", "valve-like",
    )
}
RUN_PRESETS["degradation"] = {
    "plan": {"window_fraction": 0.2, "m_train": 4},
    "postprocess": {"smooth_window": 1},
    "clean": {"mode": "prefix", "prefix_fraction": 0.1},
}
_COMMON_PRESET = {
    "model": {"kind": "pca", "k": 5},
    "methods": _ALL_METHODS,
    "seed": 0,
}


# Sections that pick one variant (model kind, clean mode) are replaced
# wholesale on override instead of key-merged, so a user autoencoder config
# does not inherit stray PCA keys from a preset.
_ATOMIC_SECTIONS = frozenset({"model", "clean"})


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if (
            key not in _ATOMIC_SECTIONS
            and isinstance(value, dict)
            and isinstance(out.get(key), dict)
        ):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _load_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return doc


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _config_hash(doc: dict) -> str:
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def _write_json(doc: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _float_text(v: float) -> str:
    return repr(float(v))


# ---------------------------------------------------------------------------
# Config resolution
# ---------------------------------------------------------------------------


def _synth_config(data_cfg: dict, run_seed: int):
    """Generator config from the `data` section (preset or explicit synth)."""
    seed = int(data_cfg.get("seed", run_seed))
    if "preset" in data_cfg:
        cfg = synth_preset(
            data_cfg["preset"], seed=seed, noise_level=data_cfg.get("noise_level", "mid")
        )
        overrides = data_cfg.get("overrides", {})
        if overrides:
            try:
                cfg = dataclasses.replace(
                    cfg,
                    **{
                        k: tuple(tuple(s) for s in v) if k == "segments" else v
                        for k, v in overrides.items()
                    },
                )
            except TypeError as exc:
                raise ConfigError(f"bad generator override: {exc}") from None
        return cfg
    if "synth" in data_cfg:
        spec = dict(data_cfg["synth"])
        kind = spec.pop("kind", None)
        spec.setdefault("seed", seed)
        try:
            if kind == "abrupt":
                spec["segments"] = tuple(tuple(s) for s in spec.get("segments", ()))
                return AbruptConfig(**spec)
            if kind == "degradation":
                return DegradationConfig(**spec)
        except TypeError as exc:
            raise ConfigError(f"bad synth config: {exc}") from None
        raise ConfigError(f"synth config needs kind 'abrupt' or 'degradation', got {kind!r}")
    raise ConfigError("data section needs one of: csv, preset, synth")


def _generate_dataset(gen_cfg) -> Dataset:
    if isinstance(gen_cfg, AbruptConfig):
        return gen_abrupt(gen_cfg)
    return gen_degradation(gen_cfg)


def _resolve_data(cfg: dict, run_seed: int):
    """Returns (dataset, data_provenance_dict)."""
    data_cfg = cfg.get("data")
    if not isinstance(data_cfg, dict):
        raise ConfigError("config needs a 'data' section (csv path, preset, or synth config)")
    if "csv" in data_cfg:
        path = Path(data_cfg["csv"])
        data = load_csv(path, features=data_cfg.get("features"))
        return data, {"source": "csv", "path": str(path), "input_sha256": _sha256(path)}
    gen_cfg = _synth_config(data_cfg, run_seed)
    data = _generate_dataset(gen_cfg)
    prov = {"source": "synth", "generator": dataclasses.asdict(gen_cfg)}
    if "preset" in data_cfg:
        prov["preset"] = canonical_preset_name(data_cfg["preset"])
    return data, prov


def _trim(data: Dataset, n: int) -> Dataset:
    if n == data.n:
        return data
    return Dataset(
        inputs=data.inputs[:n],
        targets=data.targets[:n],
        labels=None if data.labels is None else data.labels[:n],
        health=None if data.health is None else data.health[:n],
        columns=data.columns,
    )


def _resolve_plan(cfg: dict, data: Dataset):
    """Returns (plan, possibly-trimmed dataset)."""
    plan_cfg = cfg.get("plan")
    if not isinstance(plan_cfg, dict):
        raise ConfigError("config needs a 'plan' section ({w, d} or {window_fraction, m_train})")
    if "w" in plan_cfg and "d" in plan_cfg:
        return build_plan(data.n, int(plan_cfg["w"]), int(plan_cfg["d"])), data
    if "window_fraction" in plan_cfg and "m_train" in plan_cfg:
        plan, trimmed = plan_from_fractions(
            data.n, float(plan_cfg["window_fraction"]), int(plan_cfg["m_train"])
        )
        return plan, _trim(data, trimmed)
    raise ConfigError("plan section needs either {w, d} or {window_fraction, m_train}")


def _resolve_clean(cfg: dict, data: Dataset):
    clean_cfg = cfg.get("clean")
    if clean_cfg is None:
        return None
    mode = clean_cfg.get("mode")
    if clean_cfg.get("mask") == "labels":
        if data.labels is None:
            raise NoCleanSpecError(
                "clean mask 'labels' requested but the dataset has no label column"
            )
        return CleanSpec(mode=mode or "ensemble", mask=data.labels == 0)
    if "prefix_fraction" in clean_cfg:
        return CleanSpec(mode=mode or "prefix", prefix_fraction=float(clean_cfg["prefix_fraction"]))
    raise NoCleanSpecError("clean section needs mask='labels' or a prefix_fraction")


def _resolved_run_config(args) -> dict:
    cfg: dict = dict(_COMMON_PRESET)
    if getattr(args, "preset", None):
        name = canonical_preset_name(args.preset)
        if name not in RUN_PRESETS:
            raise ConfigError(f"unknown preset {args.preset!r}; valid: {sorted(RUN_PRESETS)}")
        cfg = _deep_merge(cfg, RUN_PRESETS[name])
        cfg = _deep_merge(cfg, {"data": {"preset": name}})
    if getattr(args, "config", None):
        cfg = _deep_merge(cfg, _load_config_file(args.config))
    if getattr(args, "data", None):
        cfg = _deep_merge(cfg, {"data": {"csv": args.data}})
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "methods", None):
        cfg["methods"] = [m.strip() for m in args.methods.split(",") if m.strip()]
    if getattr(args, "noise", None):
        cfg = _deep_merge(cfg, {"data": {"noise_level": args.noise}})
    return cfg


def _semantic_config(cfg: dict, data_prov: dict, plan, model_doc: dict) -> dict:
    """The reproducibility-relevant slice of a run config, for hashing."""
    return {
        "data": data_prov.get("input_sha256") or data_prov.get("generator"),
        "plan": plan.to_dict(),
        "model": model_doc,
        "methods": list(cfg["methods"]),
        "postprocess": cfg.get("postprocess", {}),
        "clean": cfg.get("clean"),
        "seed": cfg["seed"],
    }


# ---------------------------------------------------------------------------
# Score CSV round trip (schema: index,score,method)
# ---------------------------------------------------------------------------


def write_scores_csv(scores: dict, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "score", "method"])
        for method, series in scores.items():
            for i, v in enumerate(series.values):
                writer.writerow([i, _float_text(v), method])


def read_scores_csv(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    per_method: dict[str, list] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["index", "score", "method"]:
            raise DataError(f"{path}: expected header 'index,score,method'")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != 3:
                raise DataError(f"{path}: ragged row at line {line_no}")
            idx, score, method = int(row[0]), float(row[1]), row[2]
            bucket = per_method.setdefault(method, [])
            if idx != len(bucket):
                raise DataError(
                    f"{path}: method {method!r} indices must ascend from 0 (line {line_no})"
                )
            bucket.append(score)
    if not per_method:
        raise DataError(f"{path}: no score rows")
    return {m: np.asarray(v, dtype=np.float64) for m, v in per_method.items()}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.config:
        doc = _load_config_file(args.config)
        data_cfg = doc.get("data", doc)
    elif args.preset:
        data_cfg = {"preset": args.preset}
    else:
        raise ConfigError("generate needs --preset or --config")
    if args.noise:
        data_cfg = _deep_merge(data_cfg, {"noise_level": args.noise})
    gen_cfg = _synth_config(data_cfg, seed)
    data = _generate_dataset(gen_cfg)

    out = Path(args.out)
    if not out.parent.is_dir():
        raise ConfigError(f"output directory does not exist: {out.parent}")
    save_csv(data, out)
    manifest = {
        "format": "usdr.generate",
        "version": 1,
        "generator": dataclasses.asdict(gen_cfg),
        "n": data.n,
        "n_features": data.n_features,
        "output_sha256": _sha256(out),
    }
    _write_json(manifest, out.with_name(out.name + ".manifest.json"))
    print(f"wrote {out} ({data.n} rows, {data.n_features} features)")
    return 0


def _resolve_model(model_section: dict, d_in: int):
    if "preset" in model_section:
        overrides = {k: v for k, v in model_section.items() if k != "preset"}
        try:
            return model_preset(model_section["preset"], d_in, **overrides)
        except TypeError as exc:
            raise ConfigError(f"bad model preset override: {exc}") from None
    return config_from_dict(model_section)


def _run_refinement_from_config(cfg: dict, out_dir: Path):
    """Shared by refine and run: resolve, execute, write scores + manifest."""
    methods = list(cfg.get("methods", _ALL_METHODS))
    data, data_prov = _resolve_data(cfg, int(cfg["seed"]))
    plan, data = _resolve_plan(cfg, data)
    model_cfg = _resolve_model(cfg.get("model", {}), data.n_features)
    clean_spec = _resolve_clean(cfg, data)
    if "clean" in methods and clean_spec is None:
        raise NoCleanSpecError(
            "clean method requested but the config has no clean section"
        )
    smooth = int(cfg.get("postprocess", {}).get("smooth_window", 1))

    t0 = time.perf_counter()
    result = run_refinement(
        data,
        plan,
        model_cfg,
        methods=methods,
        base_seed=int(cfg["seed"]),
        smooth_window=smooth,
        clean_spec=clean_spec,
    )
    elapsed = time.perf_counter() - t0

    out_dir.mkdir(parents=True, exist_ok=True)
    write_scores_csv(result.scores, out_dir / "scores.csv")
    model_doc = config_to_dict(model_cfg)
    config_hash = _config_hash(_semantic_config(cfg, data_prov, plan, model_doc))
    manifest = {
        "format": "usdr.run",
        "version": 1,
        "config_hash": config_hash,
        "data": data_prov,
        "n": data.n,
        "plan": plan.to_dict(),
        "model": model_doc,
        "methods": methods,
        "base_seed": int(cfg["seed"]),
        "model_seeds": result.model_seeds,
        "mu": result.mu,
        "sigma": result.sigma,
        "postprocess": {"smooth_window": smooth, "rescale": "minmax-after-smoothing"},
        "clean": cfg.get("clean"),
        "degradation_target": "one_minus_rescaled_health",
        "timing_s": round(elapsed, 3),
    }
    _write_json(manifest, out_dir / "manifest.json")
    return data, result, config_hash


def cmd_refine(args) -> int:
    cfg = _resolved_run_config(args)
    if "data" not in cfg:
        raise ConfigError("refine needs --data, --preset, or a config with a data section")
    out_dir = Path(args.out)
    _, result, _ = _run_refinement_from_config(cfg, out_dir)
    print(f"wrote {out_dir / 'scores.csv'} ({', '.join(result.scores)})")
    return 0


def _evaluate(scores: dict, data: Dataset, out_dir: Path, config_hash: str, plot: bool) -> dict:
    if data.labels is None and data.health is None:
        raise DataError("evaluation needs a label or health column in the truth data")
    scores = {
        m: s.values if hasattr(s, "values") else np.asarray(s, dtype=np.float64)
        for m, s in scores.items()
    }
    for method, values in scores.items():
        if len(values) != data.n:
            raise DataError(
                f"scores for {method!r} have {len(values)} rows but truth has {data.n}"
            )
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    curves = {}
    target = degradation_target(data.health) if data.health is not None else None
    for method in sorted(scores):
        record = {"method": method, "n": data.n, "config_hash": config_hash}
        if data.labels is not None:
            curve = pr_curve(scores[method], data.labels)
            curves[method] = curve
            record["ap"] = curve.ap
            record["n_pos"] = int(data.labels.sum())
            with open(out_dir / f"pr_{method}.csv", "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["threshold", "precision", "recall"])
                for t, p, r in curve.points():
                    writer.writerow([_float_text(t), _float_text(p), _float_text(r)])
        if target is not None:
            record["rmse"] = rmse(scores[method], target)
        records.append(record)
    metrics = {"format": "usdr.metrics", "version": 1, "metrics": records}
    if target is not None:
        metrics["degradation_target"] = "one_minus_rescaled_health"
    _write_json(metrics, out_dir / "metrics.json")
    if plot:
        plot_scores(scores, out_dir / "scores.svg", labels=data.labels, health=data.health)
        if curves:
            plot_pr_curves(curves, out_dir / "pr_curves.svg")
    return metrics


def cmd_evaluate(args) -> int:
    scores = read_scores_csv(args.scores)
    truth = load_csv(args.truth)
    config_hash = _config_hash(
        {"scores_sha256": _sha256(args.scores), "truth_sha256": _sha256(args.truth)}
    )
    metrics = _evaluate(scores, truth, Path(args.out), config_hash, plot=not args.no_plot)
    for record in metrics["metrics"]:
        parts = [f"{k}={record[k]:.4f}" for k in ("ap", "rmse") if k in record]
        print(f"{record['method']}: {', '.join(parts)}")
    return 0


def cmd_run(args) -> int:
    cfg = _resolved_run_config(args)
    if "data" not in cfg:
        raise ConfigError("run needs --preset, --data, or a config with a data section")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    data, result, config_hash = _run_refinement_from_config(cfg, out_dir)
    if cfg["data"].get("preset") or "synth" in cfg.get("data", {}):
        save_csv(data, out_dir / "data.csv")
    metrics = _evaluate(result.scores, data, out_dir, config_hash, plot=not args.no_plot)
    for record in metrics["metrics"]:
        parts = [f"{k}={record[k]:.4f}" for k in ("ap", "rmse") if k in record]
        print(f"{record['method']}: {', '.join(parts)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="usdr",
        description="Unsupervised refinement of anomaly-contaminated time series",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a synthetic dataset CSV")
    p.add_argument("--preset", help="generator preset name")
    p.add_argument("--config", help="JSON config with a data section")
    p.add_argument("--noise", choices=("low", "mid", "high"), help="noise level preset")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("refine", help="run refinement and write score series")
    p.add_argument("--config", help="JSON run config")
    p.add_argument("--preset", help="run preset name")
    p.add_argument("--data", help="input CSV (overrides the config data section)")
    p.add_argument("--methods", help="comma-separated subset of " + ",".join(METHODS))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("evaluate", help="evaluate a scores CSV against ground truth")
    p.add_argument("--scores", required=True, help="scores CSV (index,score,method)")
    p.add_argument("--truth", required=True, help="CSV with label and/or health columns")
    p.add_argument("--no-plot", action="store_true", help="skip SVG figures")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="generate (or load), refine, and evaluate end to end")
    p.add_argument("--config", help="JSON run config")
    p.add_argument("--preset", help="run preset name")
    p.add_argument("--data", help="input CSV (overrides the config data section)")
    p.add_argument("--methods", help="comma-separated subset of " + ",".join(METHODS))
    p.add_argument("--noise", choices=("low", "mid", "high"), help="noise level preset")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--no-plot", action="store_true", help="skip SVG figures")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except UsdrError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
