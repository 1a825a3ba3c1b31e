"""Command-line surface.

    sqrl train --config cfg.json --seeds 0,1,2 --out runs/
    sqrl eval --checkpoint runs/cartpole-table3/seed-0/checkpoint_best.json \
              --episodes 20 --shots 1024 --readout-p 0.0116
    sqrl xcheck --env cartpole-v1 --steps 1000 --bridge "python3 -m gym_bridge"
    sqrl report --in runs/
    sqrl sweep-reuse --l 4,8,16,32 --out runs/

Exit codes: 0 success, 2 configuration error, 3 bridge error.

Config files are JSON: either {"preset": "<name>", "overrides": {...}} or a
full experiment-config document.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import BridgeError, ConfigError
from .noise import NoiseModel
from .presets import PRESETS, ExperimentConfig, get_preset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BRIDGE = 3


def load_config(path=None, preset=None, overrides=None) -> ExperimentConfig:
    if path is None and preset is None:
        raise ConfigError("need --config or --preset")
    if path is not None:
        doc = json.loads(Path(path).read_text())
        if "preset" in doc:
            return get_preset(doc["preset"], **doc.get("overrides", {}))
        return ExperimentConfig.from_dict(doc)
    return get_preset(preset, **(overrides or {}))


def _parse_seeds(text):
    try:
        return [int(s) for s in text.split(",") if s != ""]
    except ValueError as e:
        raise ConfigError(f"bad seed list {text!r}") from e


def _noise_from_args(args) -> NoiseModel:
    shots = None
    if args.shots not in (None, "exact"):
        try:
            shots = int(args.shots)
        except ValueError as e:
            raise ConfigError(f"--shots must be a count or 'exact', got {args.shots!r}") from e
    return NoiseModel(p_readout=args.readout_p, p_gate=args.gate_p, shots=shots)


def cmd_train(args):
    from .experiment import run_experiment

    config = load_config(args.config, args.preset)
    if args.episodes is not None:
        d = config.to_dict()
        d["trainer"]["max_episodes"] = args.episodes
        config = ExperimentConfig.from_dict(d)
    seeds = _parse_seeds(args.seeds)
    aggregate = run_experiment(config, seeds, out_dir=args.out,
                               workers=args.workers, bridge_command=args.bridge)
    solved = aggregate["n_solved"]
    med = aggregate["median_episodes_to_threshold"]
    print(f"{config.name} [{aggregate['fingerprint']}]: "
          f"{solved}/{len(seeds)} seeds reached threshold; "
          f"median episodes-to-threshold: {med if med is not None else 'not reached'}")
    for s in aggregate["summaries"]:
        ett = s["episodes_to_threshold"]
        print(f"  seed {s['seed']}: episodes-to-threshold "
              f"{ett if ett is not None else 'not reached'}, "
              f"final avg20 {s['final_avg20']:.1f}")
    return EXIT_OK


def cmd_eval(args):
    from .experiment import evaluate

    noise = _noise_from_args(args)
    out = evaluate(args.checkpoint, episodes=args.episodes, noise=noise,
                   greedy=not args.sample, seed=args.seed,
                   bridge_command=args.bridge)
    print(json.dumps(out, indent=1))
    return EXIT_OK


def cmd_xcheck(args):
    from .experiment import xcheck, xcheck_fixture

    if args.fixture:
        out = xcheck_fixture(args.env, args.fixture)
    else:
        if not args.bridge:
            raise ConfigError("xcheck needs --bridge or --fixture")
        out = xcheck(args.env, args.steps, args.bridge, seed=args.seed)
    print(json.dumps(out, indent=1))
    return EXIT_OK if out["passed"] else 1


def cmd_report(args):
    from .experiment import report

    out = report(args.in_dir)
    for name, entry in out["experiments"].items():
        med = entry["median_episodes_to_threshold"]
        print(f"{name} ({entry['model']}, {entry['env_id']}): "
              f"median episodes-to-threshold "
              f"{med if med is not None else 'not reached'}, "
              f"actor params {entry['actor_params']} "
              f"(+critic {entry['actor_plus_critic_params']})")
    for pair, entry in out["speedups"].items():
        print(f"{pair}: speedup {entry['speedup']}")
    return EXIT_OK


def cmd_sweep_reuse(args):
    from .experiment import sweep_reuse

    config = load_config(args.config, args.preset or "cartpole-table3")
    values = _parse_seeds(args.l)
    seeds = _parse_seeds(args.seeds)
    out = sweep_reuse(config, values, seeds, out_dir=args.out,
                      workers=args.workers, max_episodes=args.episodes)
    for l, aggregate in out.items():
        med = aggregate["median_episodes_to_threshold"]
        print(f"reuse={l}: median episodes-to-threshold "
              f"{med if med is not None else 'not reached'}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="sqrl", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one configuration over a seed sweep")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--preset", choices=sorted(PRESETS), help="built-in preset")
    p.add_argument("--seeds", default="0", help="comma-separated seed list")
    p.add_argument("--out", help="output directory")
    p.add_argument("--episodes", type=int, help="override max episodes")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--bridge", help="bridge launch command for bridge: envs")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=20)
    p.add_argument("--shots", default="exact", help="shot count or 'exact'")
    p.add_argument("--readout-p", type=float, default=0.0)
    p.add_argument("--gate-p", type=float, default=0.0)
    p.add_argument("--sample", action="store_true",
                   help="sample actions from the policy instead of argmax")
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--bridge", help="bridge launch command for bridge: envs")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("xcheck", help="cross-check a native environment")
    p.add_argument("--env", required=True)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--bridge", help='bridge launch command, e.g. "python3 -m gym_bridge"')
    p.add_argument("--fixture", help="recorded reference trace (no bridge needed)")
    p.add_argument("--seed", type=int, default=20240901)
    p.set_defaults(fn=cmd_xcheck)

    p = sub.add_parser("report", help="aggregate curves under a directory")
    p.add_argument("--in", dest="in_dir", required=True)
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("sweep-reuse", help="train at several output-reuse counts")
    p.add_argument("--l", default="4,8,16,32", help="comma-separated reuse counts")
    p.add_argument("--config")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--seeds", default="0")
    p.add_argument("--out")
    p.add_argument("--episodes", type=int, help="override max episodes")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=cmd_sweep_reuse)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BridgeError as e:
        print(f"bridge error: {e}", file=sys.stderr)
        return EXIT_BRIDGE


if __name__ == "__main__":
    sys.exit(main())
