"""Command-line entry point: train, evaluate, collect scripted demos, print
demo statistics, and serve the recording protocol."""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from pathlib import Path

from . import __version__
from .demos import DemoValidationError, load, save, stats
from .env import MarbleMaze, load_preset
from .evaluate import evaluate_checkpoint, export
from .expert import scripted_expert
from .trainer import TrainerConfig, train

ABLATION_NAMES = {
    "none": "full",
    "fixed-lambda": "fixed_lambda",
    "no-entropy-constraint": "no_entropy_in_constraint",
    "both": "both",
}


def _digest(payload: dict) -> str:
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _write_manifest(out_dir: Path, command: str, config: dict, seeds: list[int],
                    outputs: list[str]) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "config_digest": _digest(config),
        "config": config,
        "seeds": seeds,
        "code_version": __version__,
        "outputs": outputs,
        "started_at": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2))
    return path


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="scopil")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a policy against demonstrations")
    p.add_argument("--config", help="trainer config JSON (flags override)")
    p.add_argument("--setting", default=None, help="preset name or env config path")
    p.add_argument("--demos", help="demonstration JSONL file")
    p.add_argument("--steps", type=int, default=None, help="total environment steps")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--ablation", choices=sorted(ABLATION_NAMES), default=None)
    p.add_argument("--sac-only", action="store_true", help="plain actor-critic baseline")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("eval", help="evaluate a policy checkpoint")
    p.add_argument("--policy", required=True, help="checkpoint JSON")
    p.add_argument("--setting", required=True)
    p.add_argument("--games", type=int, default=40)
    p.add_argument("--seeds", default="0", help="comma-separated experiment seeds")
    p.add_argument("--demos", help="start games from these demos' initial states")
    p.add_argument("--sample", action="store_true", help="sample actions instead of argmax")
    p.add_argument("--out", required=True)

    p = sub.add_parser("collect", help="generate scripted-expert demonstrations")
    p.add_argument("--setting", required=True)
    p.add_argument("--games", type=int, default=40)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output JSONL file")

    p = sub.add_parser("stats", help="print demonstration-set statistics")
    p.add_argument("--demos", required=True)

    p = sub.add_parser("serve", help="run the demonstration-recording server")
    p.add_argument("--setting", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8732)
    p.add_argument("--out", help="demo JSONL file to append saved episodes to")
    p.add_argument("--static", help="directory of UI assets to serve at /")
    return parser


def _cmd_train(args) -> int:
    cfg_dict: dict = {}
    if args.config:
        cfg_dict = json.loads(Path(args.config).read_text())
    if args.setting is not None:
        cfg_dict["setting"] = args.setting
    if args.steps is not None:
        cfg_dict["total_steps"] = args.steps
    if args.seed is not None:
        cfg_dict["seed"] = args.seed
    if args.ablation is not None:
        cfg_dict["ablation"] = ABLATION_NAMES[args.ablation]
    if args.sac_only:
        cfg_dict["sac_only"] = True
    config = TrainerConfig.from_dict(cfg_dict)

    env_cfg = load_preset(config.setting)
    demos = None
    if args.demos:
        demos = load(args.demos)
    elif not config.sac_only:
        raise ValueError("--demos is required unless --sac-only is set")

    out_dir = Path(args.out)
    _write_manifest(
        out_dir,
        "train",
        config.to_dict(),
        [config.seed],
        ["metrics.csv", "checkpoints/"],
    )
    result = train(config, MarbleMaze(env_cfg), demos, out_dir)
    print(f"trained {result.steps} steps, {result.episodes} episodes")
    print(f"final checkpoint: {result.final_checkpoint}")
    return 0


def _cmd_eval(args) -> int:
    env_cfg = load_preset(args.setting)
    seeds = tuple(int(s) for s in args.seeds.split(",") if s.strip() != "")
    demos = load(args.demos) if args.demos else None
    out_dir = Path(args.out)
    _write_manifest(
        out_dir,
        "eval",
        {
            "policy": args.policy,
            "setting": args.setting,
            "games": args.games,
            "greedy": not args.sample,
        },
        list(seeds),
        ["report.csv", "trajectories.csv", "summary.json"],
    )
    report = evaluate_checkpoint(
        args.policy, env_cfg, n_games=args.games, seeds=seeds, demos=demos,
        greedy=not args.sample,
    )
    paths = export(report, out_dir)
    for metric in ("Rwd", "Viol", "F_all", "Length", "Steps"):
        mean, std = report.summary[metric]
        print(f"{metric:>7}: {mean:.4f} +/- {std:.4f}")
    print(f"report: {paths['report']}")
    return 0


def _cmd_collect(args) -> int:
    env_cfg = load_preset(args.setting)
    out_path = Path(args.out)
    _write_manifest(
        out_path.parent if out_path.parent != Path("") else Path("."),
        "collect",
        {"setting": args.setting, "games": args.games},
        [args.seed],
        [out_path.name],
    )
    demos = scripted_expert(env_cfg, args.games, seed=args.seed)
    save(demos, out_path)
    table = stats(demos, env_cfg)
    print(table.table())
    print(f"wrote {out_path}")
    return 0


def _cmd_stats(args) -> int:
    demos = load(args.demos)
    table = stats(demos)
    print(f"demonstration set: {args.demos} (setting={demos.setting}, "
          f"provenance={demos.provenance})")
    print(table.table())
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    env_cfg = load_preset(args.setting)
    if not args.out:
        print("serve: no --out file given; save commands will be rejected", file=sys.stderr)
    app = create_app(env_cfg, out_path=args.out, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "train": _cmd_train,
        "eval": _cmd_eval,
        "collect": _cmd_collect,
        "stats": _cmd_stats,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except (FileNotFoundError, DemoValidationError, ValueError, TypeError) as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # runtime failure, single-line reason
        print(f"{args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
