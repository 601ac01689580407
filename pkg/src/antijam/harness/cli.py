"""Command line entry point: ``antijam {run,compare,sweep,power}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .compare import compare, format_table, power_study
from .config import AGENT_NAMES, POLICY_NAMES, ConfigError, ExperimentConfig, coerce, load_config
from .metrics import average_power, convergence_slot, final_window_mean
from .run import run, save_trace
from .svg import line_chart


def _common(p: argparse.ArgumentParser, multi_config: bool = False) -> None:
    if multi_config:
        p.add_argument("--config", action="append", default=[], help="config file (repeatable)")
    else:
        p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--slots", type=int, help="slots per run")
    p.add_argument("--out", help="output directory")
    p.add_argument("--net", choices=("mlp", "paper-cnn"))
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override any config key")


def _seeds(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seeds", type=int, default=None, help="number of seeds (0..n-1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="antijam", description="Anti-jamming RL simulator and experiment harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one config, one seed; writes a trace CSV")
    _common(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--agent", choices=sorted(AGENT_NAMES))
    p.add_argument("--policy", choices=sorted(POLICY_NAMES))

    p = sub.add_parser("compare", help="several configs over a seed list")
    _common(p, multi_config=True)
    _seeds(p)
    p.add_argument("--agent", help="comma list of agents, crossed with --policy")
    p.add_argument("--policy", help="comma list of policies")
    p.add_argument("--svg", action="store_true", help="also write curves.svg")

    p = sub.add_parser("sweep", help="vary one config key over a list of values")
    _common(p)
    _seeds(p)
    p.add_argument("--agent", choices=sorted(AGENT_NAMES))
    p.add_argument("--policy", choices=sorted(POLICY_NAMES))
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="values separated by '|' or ','")
    p.add_argument("--svg", action="store_true")

    p = sub.add_parser("power", help="variable power against constant-power baselines")
    _common(p)
    _seeds(p)
    p.add_argument("--agent", choices=sorted(AGENT_NAMES))
    p.add_argument("--policy", choices=sorted(POLICY_NAMES))
    return parser


def _base_config(args, path=None) -> ExperimentConfig:
    cfg = load_config(path) if path else ExperimentConfig()
    changes = {}
    for item in args.set:
        key, _, value = item.partition("=")
        changes[key.strip()] = coerce(key.strip(), value)
    for key in ("slots", "out", "net"):
        if getattr(args, key, None) is not None:
            changes[key] = getattr(args, key)
    for key in ("agent", "policy"):
        value = getattr(args, key, None)
        if value is not None and "," not in value:
            changes[key] = value
    if getattr(args, "seeds", None) is not None:
        changes["seeds"] = tuple(range(args.seeds))
    return cfg.with_overrides(**changes)


def _emit_svg(summaries, out_dir, title):
    path = line_chart({s.name: s.curve for s in summaries}, Path(out_dir) / "curves.svg", title=title)
    print(f"wrote {path}")


def cmd_run(args) -> int:
    cfg = _base_config(args, args.config)
    trace = run(cfg, args.seed)
    path = save_trace(trace, Path(cfg.out) / f"trace_{cfg.label()}_seed{args.seed}.csv")
    sinr = trace.sinr
    conv = convergence_slot(sinr, cfg.convergence_fraction, cfg.convergence_window)
    print(f"wrote {path}")
    print(
        f"{cfg.label()} seed={args.seed}: final-{cfg.final_window} SINR {final_window_mean(sinr, cfg.final_window):.3f}, "
        f"convergence slot {conv}, average power {average_power(trace.column('power_index'), trace.sender_powers):.2f} W"
    )
    return 0


def cmd_compare(args) -> int:
    if args.config:
        configs = [_base_config(args, path) for path in args.config]
        configs = [c if c.name else c.with_overrides(name=Path(p).stem) for c, p in zip(configs, args.config)]
    else:
        base = _base_config(args)
        agents = (args.agent or base.agent).split(",")
        policies = (args.policy or "eps,tau-eps").split(",")
        configs = [base.with_overrides(agent=a.strip(), policy=p.strip(), name="") for a in agents for p in policies]
    seeds = configs[0].seeds
    out = Path(configs[0].out)
    summaries = compare(configs, seeds, out, keep_traces=False)
    print(format_table(summaries))
    print(f"wrote {out / 'curves.csv'} and {out / 'summary.csv'}")
    if args.svg:
        _emit_svg(summaries, out, "smoothed SINR")
    return 0


def cmd_sweep(args) -> int:
    base = _base_config(args, args.config)
    sep = "|" if "|" in args.values else ","
    configs = []
    for raw in args.values.split(sep):
        value = coerce(args.param, raw)
        configs.append(base.with_overrides(**{args.param: value, "name": f"{args.param}={raw.strip()}"}))
    out = Path(base.out)
    summaries = compare(configs, base.seeds, out, keep_traces=False)
    print(format_table(summaries))
    print(f"wrote {out / 'curves.csv'} and {out / 'summary.csv'}")
    if args.svg:
        _emit_svg(summaries, out, f"sweep over {args.param}")
    return 0


def cmd_power(args) -> int:
    base = _base_config(args, args.config)
    out = Path(base.out)
    study = power_study(base, base.seeds, out)
    var = study["variable"]
    print(format_table([var] + list(study["constant"].values())))
    print(f"variable-power final-window average power: {var.final_power.mean():.2f} W")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": cmd_run, "compare": cmd_compare, "sweep": cmd_sweep, "power": cmd_power}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
