"""Command-line interface: the whole workflow as batch subcommands.

Every subcommand reads CSV/JSON inputs, writes its outputs under ``--out``
only, and records a manifest (config hash, seeds, artifact checksums).
Errors print a machine-readable JSON object on stderr; exit codes are 0
(success), 1 (stage failure), 2 (usage or input errors). Any flag can be
supplied through an environment variable ``CAUSALDISTILL_<FLAG>`` (for
example ``CAUSALDISTILL_SEED=7``); explicit flags win.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .attribution import write_curve_csv, write_curve_svg
from .data import (Dataset, FeatureSchema, load_dataset, save_dataset, write_csv)
from .errors import CausalDistillError, InputError
from .metrics import ConfusionCounts, confusion_metrics, significance_screen
from .outcome import fit_outcome, write_weights_csv
from .pipeline import PipelineConfig, apply_maps, distill_dataset, run_end_to_end
from .propensity import save_propensity_models
from .risk import RiskClassifier, predict_risk
from .synth import BUILTIN_SPECS, BayesNet, generate_builtin, generate_risk_dataset

ENV_PREFIX = "CAUSALDISTILL_"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _env_default(flag: str, fallback=None):
    return os.environ.get(ENV_PREFIX + flag.upper().replace("-", "_"), fallback)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump_json(doc: dict, path: Path) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_manifest(out_dir: Path, command: str, config_hash: str | None,
                    seeds, artifacts: list[Path]) -> None:
    """Checksums cover deterministic artifacts; timing lives in the run report."""
    manifest = {
        "command": command,
        "version": __version__,
        "config_hash": config_hash,
        "seeds": seeds,
        "artifacts": {p.name: _sha256(p) for p in sorted(artifacts)},
    }
    _dump_json(manifest, out_dir / "manifest.json")


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        cfg = PipelineConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_inputs(args) -> Dataset:
    # fail-fast before any output is created
    for attr in ("data", "schema"):
        p = Path(getattr(args, attr))
        if not p.exists():
            raise InputError(f"{attr} file not found: {p}")
    return load_dataset(args.data, args.schema)


def cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.spec in BUILTIN_SPECS:
        dataset, truth = generate_builtin(args.spec, seed, n_pos=args.n_pos, n_neg=args.n_neg)
    else:
        net = BayesNet.load(args.spec)
        dataset = generate_risk_dataset(net, args.n_pos, args.n_neg, seed)
        truth = {"generator": "file", "spec": str(args.spec), "net": net.to_json()}
    out = _out_dir(args)
    save_dataset(dataset, out / "dataset.csv", out / "schema.json")
    _dump_json(truth, out / "ground_truth.json")
    _write_manifest(out, "generate", None, {"seed": seed},
                    [out / "dataset.csv", out / "schema.json", out / "ground_truth.json"])
    return EXIT_OK


def cmd_fit_outcome(args) -> int:
    data = _read_inputs(args)
    cfg = _load_config(args)
    out = _out_dir(args)
    lam = cfg.lambda_
    if lam is None:
        from .outcome import default_penalty
        lam = default_penalty(data.n, data.d)
    fit = fit_outcome(data, cfg.train_config(cfg.seed, lam), hidden=cfg.hidden)
    fit.save(out / "outcome_model.json")
    write_weights_csv(fit, out / "predictive_weights.csv")
    _write_manifest(out, "fit-outcome", cfg.hash(), {"outcome": cfg.seed},
                    [out / "outcome_model.json", out / "predictive_weights.csv"])
    return EXIT_OK


def cmd_fit_propensity(args) -> int:
    data = _read_inputs(args)
    cfg = _load_config(args)
    out = _out_dir(args)
    result = distill_dataset(data, cfg, jobs=args.jobs)
    fits = [result.features[name].propensity for name in data.schema.names]
    manifest_path = save_propensity_models(fits, out)
    artifacts = [out / f"propensity_{n}.json" for n in data.schema.names] + [manifest_path]
    _write_manifest(out, "fit-propensity", cfg.hash(), result.provenance["seeds"], artifacts)
    return EXIT_OK


def _write_distill_outputs(out: Path, cfg: PipelineConfig, result, test_part=None) -> list[Path]:
    artifacts = []
    write_csv(result.distilled, out / "distilled.csv")
    result.distilled.schema.save(out / "distilled_schema.json")
    artifacts += [out / "distilled.csv", out / "distilled_schema.json"]
    maps_dir = out / "maps"
    maps_dir.mkdir(exist_ok=True)
    for name, amap in result.maps.items():
        amap.save(maps_dir / f"map_{name}.json")
        artifacts.append(maps_dir / f"map_{name}.json")
    if test_part is not None:
        write_csv(test_part, out / "distilled_test.csv")
        artifacts.append(out / "distilled_test.csv")
    return artifacts


def cmd_distill(args) -> int:
    data = _read_inputs(args)
    cfg = _load_config(args)
    out = _out_dir(args)
    t0 = time.time()
    result = distill_dataset(data, cfg, jobs=args.jobs)
    artifacts = _write_distill_outputs(out, cfg, result)
    report = {
        "seeds": result.provenance["seeds"],
        "config_hash": cfg.hash(),
        "penalties": result.provenance["penalties"],
        "warnings": result.warnings,
        "elapsed_seconds": round(time.time() - t0, 3),
    }
    _dump_json(report, out / "run_report.json")
    _write_manifest(out, "distill", cfg.hash(), result.provenance["seeds"], artifacts)
    return EXIT_OK


def cmd_predict(args) -> int:
    model_path = Path(args.model)
    if not model_path.exists():
        raise InputError(f"model file not found: {model_path}")
    for attr in ("data", "schema"):
        if not Path(getattr(args, attr)).exists():
            raise InputError(f"{attr} file not found: {getattr(args, attr)}")
    clf = RiskClassifier.load(model_path)
    data = load_dataset(args.data, args.schema)
    out = _out_dir(args)
    probs, labels = predict_risk(clf, data.X)
    path = out / "predictions.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("probability,label\n")
        for p, lab in zip(probs, labels):
            fh.write(f"{p!r},{int(lab)}\n")
    _write_manifest(out, "predict", None, {}, [path])
    return EXIT_OK


def cmd_evaluate(args) -> int:
    pred_path = Path(args.predictions)
    if not pred_path.exists():
        raise InputError(f"predictions file not found: {pred_path}")
    for attr in ("data", "schema"):
        if not Path(getattr(args, attr)).exists():
            raise InputError(f"{attr} file not found: {getattr(args, attr)}")
    data = load_dataset(args.data, args.schema)
    rows = pred_path.read_text(encoding="utf-8").strip().splitlines()
    if not rows or rows[0] != "probability,label":
        raise InputError("predictions CSV must have header 'probability,label'")
    if len(rows) - 1 != data.n:
        raise InputError(f"{len(rows) - 1} predictions vs {data.n} labeled rows")
    labels = np.array([int(r.split(",")[1]) for r in rows[1:]])
    metrics = confusion_metrics(ConfusionCounts.from_predictions(data.y, labels))
    out = _out_dir(args)
    counts = ConfusionCounts.from_predictions(data.y, labels)
    _dump_json({**metrics.to_json(),
                "counts": {"tp": counts.tp, "fp": counts.fp, "fn": counts.fn, "tn": counts.tn}},
               out / "metrics.json")
    _write_manifest(out, "evaluate", None, {}, [out / "metrics.json"])
    return EXIT_OK


def cmd_screen(args) -> int:
    for path in (args.original, args.original_schema, args.distilled, args.distilled_schema):
        if not Path(path).exists():
            raise InputError(f"input file not found: {path}")
    original = load_dataset(args.original, args.original_schema)
    distilled = load_dataset(args.distilled, args.distilled_schema)
    report = significance_screen(original, distilled, alpha=args.alpha)
    out = _out_dir(args)
    _dump_json(report.to_json(), out / "screen_report.json")
    _write_manifest(out, "screen", None, {}, [out / "screen_report.json"])
    return EXIT_OK


def cmd_response_curve(args) -> int:
    data = _read_inputs(args)
    cfg = _load_config(args)
    out = _out_dir(args)
    result = distill_dataset(data, cfg, jobs=args.jobs)
    artifacts = []
    for name, amap in result.maps.items():
        csv_path = out / f"curve_{name}.csv"
        write_curve_csv(amap, csv_path)
        artifacts.append(csv_path)
        if args.svg:
            svg_path = out / f"curve_{name}.svg"
            write_curve_svg(amap, svg_path)
            artifacts.append(svg_path)
    _write_manifest(out, "response-curve", cfg.hash(), result.provenance["seeds"], artifacts)
    return EXIT_OK


def cmd_run_all(args) -> int:
    data = _read_inputs(args)
    cfg = _load_config(args)
    out = _out_dir(args)
    t0 = time.time()
    report, result, clf = run_end_to_end(data, cfg, jobs=args.jobs)
    clf.save(out / "risk_classifier.json")
    artifacts = [out / "risk_classifier.json"]
    artifacts += _write_distill_outputs(out, cfg, result)
    _dump_json(report.to_json(), out / "metrics.json")
    artifacts.append(out / "metrics.json")
    run_report = {
        "seeds": report.provenance["seeds"],
        "config_hash": cfg.hash(),
        "warnings": report.warnings,
        "elapsed_seconds": round(time.time() - t0, 3),
    }
    _dump_json(run_report, out / "run_report.json")
    _write_manifest(out, "run-all", cfg.hash(), report.provenance["seeds"], artifacts)
    return EXIT_OK


def _add_common(parser, *, data=True, config=True, jobs=False) -> None:
    if data:
        parser.add_argument("--data", required=_env_default("data") is None,
                            default=_env_default("data"), help="dataset CSV path")
        parser.add_argument("--schema", required=_env_default("schema") is None,
                            default=_env_default("schema"), help="schema JSON path")
    if config:
        parser.add_argument("--config", default=_env_default("config"),
                            help="pipeline config JSON (defaults apply when omitted)")
        parser.add_argument("--seed", type=int,
                            default=_env_default("seed"), help="seed override (default: config seed, 0)")
    if jobs:
        parser.add_argument("--jobs", type=int, default=int(_env_default("jobs", "1")),
                            help="parallel per-feature workers (output is identical for any value)")
    parser.add_argument("--out", required=_env_default("out") is None,
                        default=_env_default("out"), help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causaldistill",
        description="Distill tabular features into causal attributions and classify risk.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset with known ground truth",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--spec", required=True,
                   help=f"builtin name ({', '.join(BUILTIN_SPECS)}) or a net-spec JSON file")
    p.add_argument("--seed", type=int, default=_env_default("seed", 0), help="generator seed")
    p.add_argument("--n-pos", type=int, default=1000, help="positive rows")
    p.add_argument("--n-neg", type=int, default=9000, help="negative rows")
    p.add_argument("--out", required=_env_default("out") is None, default=_env_default("out"),
                   help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("fit-outcome", help="fit the group-Lasso outcome screen",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_common(p)
    p.set_defaults(func=cmd_fit_outcome)

    p = sub.add_parser("fit-propensity", help="fit per-feature propensity models",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_common(p, jobs=True)
    p.set_defaults(func=cmd_fit_propensity)

    p = sub.add_parser("distill", help="rewrite a dataset as causal attributions",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_common(p, jobs=True)
    p.set_defaults(func=cmd_distill)

    p = sub.add_parser("predict", help="score rows with a fitted risk classifier",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--model", required=True, help="risk classifier JSON file")
    _add_common(p, config=False)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="compute accuracy/precision/recall for predictions",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--predictions", required=True, help="predictions CSV (probability,label)")
    _add_common(p, config=False)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("screen", help="significance screen: original vs distilled",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--original", required=True, help="original dataset CSV")
    p.add_argument("--original-schema", required=True, help="original schema JSON")
    p.add_argument("--distilled", required=True, help="distilled dataset CSV")
    p.add_argument("--distilled-schema", required=True, help="distilled schema JSON")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level")
    p.add_argument("--out", required=_env_default("out") is None, default=_env_default("out"),
                   help="output directory")
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("response-curve", help="emit per-feature response curves as CSV",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_common(p, jobs=True)
    p.add_argument("--svg", action="store_true", help="also render a minimal SVG chart per feature")
    p.set_defaults(func=cmd_response_curve)

    p = sub.add_parser("run-all", help="split, distill, classify, evaluate in one run",
                       formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _add_common(p, jobs=True)
    p.set_defaults(func=cmd_run_all)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    if getattr(args, "seed", None) is not None:
        args.seed = int(args.seed)
    try:
        return args.func(args)
    except InputError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_USAGE
    except CausalDistillError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_FAILURE
    except OSError as exc:
        json.dump({"error": "OSError", "message": str(exc)}, sys.stderr)
        sys.stderr.write("\n")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
