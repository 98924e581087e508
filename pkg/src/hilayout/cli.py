"""Command-line entry point: synth, train, eval, edit, serve.

Exit codes: 0 success, 1 usage/configuration error, 2 infeasible or
unrepairable scene, 3 provider failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import corpus, hierarchy_io, metrics, svgplot
from .hierarchy_io import Unrepairable
from .layout_solver import Infeasible, SolverConfig, TooManyAreas
from .llm_client import ExhaustedRetries, ProviderConfig, ProviderError
from .pipeline import PipelineOptions, edit_scene, pose_deltas, synthesize

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2
EXIT_PROVIDER = 3


def _parse_room(value: str) -> tuple[float, float]:
    parts = value.lower().replace("x", " ").split()
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("room must look like 4.0x4.6")
    return (float(parts[0]), float(parts[1]))


def _load_solver_config(path) -> SolverConfig:
    if not path:
        return SolverConfig()
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    config = SolverConfig()
    for key, value in data.items():
        if not hasattr(config, key):
            raise ValueError(f"unknown solver config key {key!r}")
        if key == "lambda_schedule":
            value = tuple(float(v) for v in value)
        setattr(config, key, value)
    return config


def _provider_config(args) -> ProviderConfig:
    return ProviderConfig(
        kind=args.provider,
        fixtures_dir=args.fixtures_dir,
        transcript_path=args.transcript,
        record_path=args.record_transcripts,
        endpoint=getattr(args, "endpoint", None),
    )


def _pipeline_options(args) -> PipelineOptions:
    from .llm_client import DEFAULT_CATEGORIES

    checkpoint = None if args.rule_fallback else args.checkpoint
    return PipelineOptions(
        provider=_provider_config(args),
        seed=args.seed,
        checkpoint_path=checkpoint,
        solver=_load_solver_config(args.solver_config),
        categories=None if getattr(args, "open_vocabulary", False) else DEFAULT_CATEGORIES,
    )


def _add_provider_flags(p):
    p.add_argument("--provider", default="fixture", choices=["fixture", "replay", "remote-chat-api"])
    p.add_argument("--fixtures-dir", default=None)
    p.add_argument("--transcript", default=None, help="transcript file for the replay provider")
    p.add_argument("--record-transcripts", default=None, help="append exchanges to this transcript")
    p.add_argument("--endpoint", default=None, help="chat-completions URL for the remote provider")
    p.add_argument("--checkpoint", default=None, help="trained placement network checkpoint")
    p.add_argument("--rule-fallback", action="store_true", help="use canonical relation offsets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solver-config", default=None)


def cmd_synth(args) -> int:
    options = _pipeline_options(args)
    result = synthesize(args.requirement, args.room, options)
    hierarchy_io.save(args.out, result.layout)
    if args.plot:
        with open(args.plot, "w", encoding="utf-8") as fh:
            fh.write(svgplot.render_svg(result.layout))
    rep = result.layout.report
    dropped = f", dropped {result.repair_report.dropped}" if result.repair_report.dropped else ""
    print(
        f"wrote {args.out}: {len(result.layout.object_poses)} objects, "
        f"feasible={rep.feasible}, max_overlap={rep.max_overlap:.2e} m^2, "
        f"max_oob={rep.max_oob:.2e} m^2{dropped}"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    from .placement_net import NetConfig, load_checkpoint, save_checkpoint, train

    if args.resume:
        params, config, opt, start_epoch = load_checkpoint(args.resume)
        config.epochs = args.epochs
    else:
        params = opt = None
        start_epoch = 0
        config = NetConfig(epochs=args.epochs, seed=args.seed,
                           learning_rate=args.learning_rate, batch_size=args.batch_size)
    scenes = corpus.generate(args.scenes, seed=args.corpus_seed)

    def progress(entry):
        print(
            f"epoch {entry['epoch']:4d} beta {entry['beta']:.2f} total {entry['total']:.4f} "
            f"ep {entry['l_ep']:.4f} etheta {entry['l_etheta']:.4f}",
            flush=True,
        )

    params, opt, _ = train(
        scenes, config, params=params, opt=opt, start_epoch=start_epoch,
        log_path=args.log, progress=progress if args.verbose else None,
    )
    save_checkpoint(args.out, params, config, opt, epoch=config.epochs)
    manifest = {
        "scenes": args.scenes,
        "corpus_seed": args.corpus_seed,
        "templates": ["sleeping", "study", "storage", "seating", "dining"],
        "epochs": config.epochs,
        "seed": config.seed,
    }
    with open(str(args.out) + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
    print(f"wrote checkpoint {args.out}")
    return EXIT_OK


def _load_layout_dir(path):
    if not os.path.isdir(path):
        raise corpus.IoError(f"not a directory: {path}")
    layouts = []
    for name in sorted(os.listdir(path)):
        if name.endswith(".hilayout"):
            layout, _ = hierarchy_io.load_layout(os.path.join(path, name))
            layouts.append(layout)
    return layouts


def cmd_eval(args) -> int:
    generated = _load_layout_dir(args.generated)
    reference = _load_layout_dir(args.reference) if args.reference else None
    pairs = tuple(tuple(p.split("-", 1)) for p in args.pairs.split(",")) if args.pairs else metrics.DEFAULT_PAIRS
    sources = [g.hierarchy for g in generated]
    report = metrics.evaluate(generated, reference=reference, sources=sources, pairs=pairs)
    print(metrics.format_report(report))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(metrics.serialize_report(report))
    return EXIT_OK


def cmd_edit(args) -> int:
    previous, _ = hierarchy_io.load_layout(args.layout)
    options = _pipeline_options(args)
    result = edit_scene(previous, args.instruction, options)
    out = args.out or args.layout
    hierarchy_io.save(out, result.layout)
    deltas = pose_deltas(previous, result.layout)
    for oid, info in deltas.items():
        if info["status"] == "unchanged":
            continue
        move = f" ({info['move']:.3f} m)" if "move" in info else ""
        print(f"{oid}: {info['status']}{move}")
    unchanged = sum(1 for i in deltas.values() if i["status"] == "unchanged")
    print(f"{unchanged} object(s) unchanged; wrote {out}")
    return EXIT_OK


def cmd_serve(args) -> int:
    from .server import run_server

    run_server(
        port=args.port,
        options=_pipeline_options(args),
        static_dir=args.static_dir,
        snapshot_dir=args.snapshot_dir,
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hilayout", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a scene layout from a requirement")
    p.add_argument("--requirement", required=True)
    p.add_argument("--room", type=_parse_room, required=True, help="floor size, e.g. 4.0x4.6")
    p.add_argument("--out", required=True, help="output .hilayout path")
    p.add_argument("--plot", default=None, help="optional top-view SVG path")
    p.add_argument("--open-vocabulary", action="store_true", help="drop the category constraint")
    _add_provider_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the placement network on the synthetic corpus")
    p.add_argument("--scenes", type=int, default=2000)
    p.add_argument("--corpus-seed", type=int, default=1000)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--learning-rate", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=4)
    p.add_argument("--out", required=True)
    p.add_argument("--log", default=None, help="JSONL per-epoch loss log")
    p.add_argument("--resume", default=None)
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate generated layouts")
    p.add_argument("--generated", required=True)
    p.add_argument("--reference", default=None)
    p.add_argument("--pairs", default=None, help="comma list like bed-nightstand,table-chair")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("edit", help="apply a language edit to a solved layout")
    p.add_argument("--layout", required=True)
    p.add_argument("--instruction", required=True)
    p.add_argument("--out", default=None)
    _add_provider_flags(p)
    p.set_defaults(func=cmd_edit)

    p = sub.add_parser("serve", help="run the interactive editing server")
    p.add_argument("--port", type=int, default=8341)
    p.add_argument("--static-dir", default=None, help="directory of UI assets to serve at /")
    p.add_argument("--snapshot-dir", default=None, help="write session layouts here on shutdown")
    _add_provider_flags(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (Infeasible, Unrepairable, TooManyAreas) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ProviderError, ExhaustedRetries) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (
        hierarchy_io.HierarchyIoError,
        corpus.IoError,
        corpus.FormatError,
        metrics.InsufficientSamples,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
