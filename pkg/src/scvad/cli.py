"""Command-line pipeline: synth / train / detect / eval / ablate.

Exit codes: 0 success, 2 usage error, 3 data/format error, 4 runtime
error (e.g. training divergence). Errors print one machine-parsable line
``scvad: <kind>: <message>`` on stderr. Every run writes a
``<output>.manifest.json`` describing the invocation.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .detector import ConsistencyConfig, detect, read_verdicts_csv, write_verdicts_csv
from .evaluator import (
    AblationSpec,
    UndefinedAucError,
    emit_curves,
    frame_auc,
    roc_area,
    roc_points,
    run_ablation,
    write_ablation_table,
)
from .feature_io import (
    StreamFormatError,
    StreamValidationError,
    SynthConfig,
    generate_synthetic,
    read_stream,
    write_stream,
)
from .trainer import (
    TrainConfig,
    TrainingDivergence,
    load_artifact,
    save_artifact,
    train_few_shot,
)
from .transformer import CheckpointError, ModelConfig

EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


class UsageError(ValueError):
    pass


def _write_manifest(command, args, outputs, started):
    primary = Path(outputs[0])
    manifest = {
        "command": command,
        "config": {k: v for k, v in vars(args).items() if k != "func"},
        "seed": getattr(args, "seed", None),
        "inputs": [str(getattr(args, a)) for a in ("input", "verdicts") if getattr(args, a, None)],
        "outputs": [str(o) for o in outputs],
        "version": __version__,
        "duration_s": round(time.monotonic() - started, 6),
    }
    primary.parent.mkdir(parents=True, exist_ok=True)
    with open(primary.with_name(primary.name + ".manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)


def _parse_spans(text):
    spans = []
    if text:
        for chunk in text.split(","):
            start, _, end = chunk.partition("-")
            spans.append((int(start), int(end)))
    return spans


def _model_config(args, feature_dim):
    return ModelConfig(
        feature_dim=feature_dim,
        model_dim=args.model_dim,
        heads=args.heads,
        layers=args.layers,
        window=args.window,
        seed=args.seed,
    )


def _train_config(args):
    try:
        return TrainConfig(
            n_shots=args.n_shots,
            window=args.window,
            epochs=args.epochs,
            lr=args.lr,
            beta1=args.beta1,
            beta2=args.beta2,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_synth(args):
    cfg = SynthConfig(
        dim=args.dim,
        length=args.length,
        anomaly_spans=_parse_spans(args.anomaly_spans),
        anomaly_magnitude=args.anomaly_magnitude,
        seed=args.seed,
        spatial_dim=args.spatial_dim,
        noise=args.noise,
    )
    write_stream(generate_synthetic(cfg), args.output)
    return [args.output]


def cmd_train(args):
    tcfg = _train_config(args)
    stream = read_stream(args.input)
    mcfg = _model_config(args, stream.dim)
    artifact = train_few_shot(stream, mcfg, tcfg, self_context=not args.no_self_context)
    report = args.report or str(Path(args.output).with_suffix(".report.json"))
    save_artifact(artifact, args.output, report)
    return [args.output, report]


def cmd_detect(args):
    stream = read_stream(args.input)
    report = args.report or str(Path(args.checkpoint).with_suffix(".report.json"))
    artifact = load_artifact(args.checkpoint, report)
    consistency = ConsistencyConfig(args.consistency_k, args.consistency_q)
    verdicts = detect(
        artifact,
        stream,
        consistency,
        start_index=args.start_index,
        self_context=not args.no_self_context,
    )
    write_verdicts_csv(verdicts, artifact.threshold, args.output)
    return [args.output]


def cmd_eval(args):
    stream = read_stream(args.input)
    if stream.labels is None:
        raise StreamFormatError(f"{args.input}: no labels sidecar; cannot evaluate")
    verdicts, _ = read_verdicts_csv(args.verdicts)
    scores = [v.score for v in verdicts]
    labels = [stream.labels[v.frame_index - 1] for v in verdicts]
    auc = frame_auc(scores, labels)
    points = roc_points(scores, labels)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary_path = out_dir / "auc.json"
    with open(summary_path, "w") as fh:
        json.dump({"frame_auc": auc, "roc_trapezoid_area": roc_area(points),
                   "frames": len(verdicts)}, fh, indent=2)
    curve_paths = {}
    if args.checkpoint:
        report = args.report or str(Path(args.checkpoint).with_suffix(".report.json"))
        artifact = load_artifact(args.checkpoint, report)
        curve_paths = emit_curves(artifact, verdicts, labels, out_dir)
    else:
        from .evaluator import write_roc_csv, write_score_trace_csv

        write_roc_csv(points, out_dir / "roc.csv")
        write_score_trace_csv(verdicts, out_dir / "scores.csv")
    return [str(summary_path), *map(str, curve_paths.values())]


def cmd_ablate(args):
    stream = read_stream(args.input)
    tcfg = _train_config(args)
    mcfg = _model_config(args, stream.dim)
    specs = [
        AblationSpec(use_spatial=False, use_temporal=True, self_context=True),
        AblationSpec(use_spatial=True, use_temporal=False, self_context=True),
        AblationSpec(use_spatial=True, use_temporal=True, self_context=False),
        AblationSpec(use_spatial=True, use_temporal=True, self_context=True),
    ]
    consistency = ConsistencyConfig(args.consistency_k, args.consistency_q)
    cells = run_ablation(stream, specs, mcfg, tcfg, consistency,
                         start_index=args.start_index, root_seed=args.seed)
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path, text_path = out_dir / "ablation.csv", out_dir / "ablation.txt"
    write_ablation_table(cells, csv_path, text_path)
    return [str(csv_path), str(text_path)]


def _add_train_flags(p):
    p.add_argument("--n-shots", type=int, default=50)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--beta1", type=float, default=0.9)
    p.add_argument("--beta2", type=float, default=0.98)
    p.add_argument("--model-dim", type=int, default=512)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--no-self-context", action="store_true")


def _add_detect_flags(p):
    p.add_argument("--consistency-k", type=int, default=2)
    p.add_argument("--consistency-q", type=int, default=2)
    p.add_argument("--start-index", type=int, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="scvad", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic feature stream")
    p.add_argument("--output", required=True)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--spatial-dim", type=int, default=None)
    p.add_argument("--length", type=int, default=200)
    p.add_argument("--anomaly-spans", default="", help="comma list of start-end, e.g. 150-160")
    p.add_argument("--anomaly-magnitude", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.02)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="few-shot train on the stream's first N frames")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="checkpoint path")
    p.add_argument("--report", default=None, help="JSON report path")
    p.add_argument("--seed", type=int, default=0)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("detect", help="score a stream with a trained checkpoint")
    p.add_argument("--input", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--output", required=True, help="verdict CSV path")
    p.add_argument("--no-self-context", action="store_true")
    _add_detect_flags(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("eval", help="AUC/ROC from a verdict CSV and labeled stream")
    p.add_argument("--input", required=True, help="labeled stream file")
    p.add_argument("--verdicts", required=True)
    p.add_argument("--checkpoint", default=None, help="also emit the training loss curve")
    p.add_argument("--report", default=None)
    p.add_argument("--output", required=True, help="output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", help="feature/self-context ablation table")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    _add_train_flags(p)
    _add_detect_flags(p)
    p.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.monotonic()
    try:
        outputs = args.func(args)
    except UsageError as exc:
        print(f"scvad: usage-error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StreamFormatError, StreamValidationError, CheckpointError, UndefinedAucError,
            FileNotFoundError) as exc:
        print(f"scvad: data-error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingDivergence, ValueError) as exc:
        print(f"scvad: runtime-error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    _write_manifest(args.command, args, outputs, started)
    return 0


if __name__ == "__main__":
    sys.exit(main())
