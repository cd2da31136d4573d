"""Command-line interface.

Exit codes: 0 success, 1 configuration error, 2 numerical failure. Regime
warnings go to stderr and never change the exit code.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import runner
from .asymptotics import report
from .lindblad import NumericalFailure
from .model import chain_site_params, validate_regime
from .scenario import ConfigError, Scenario, parse_config

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def _load(path: str) -> Scenario:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text)


def _warn(warnings) -> None:
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)


def _params(s: Scenario):
    return chain_site_params(s.chain) if s.engine == "chain" else s.params


def cmd_rates(args) -> None:
    s = _load(args.config)
    p = _params(s)
    rep = report(p)
    regime = validate_regime(p)
    _warn(regime.warnings)
    summary = {
        "w1": rep.w1,
        "w2": rep.w2,
        "mu": rep.mu,
        "epsilon0": rep.epsilon0,
        "t_min": rep.window[0],
        "t_max": rep.window[1],
        "resolvable": rep.resolvable,
        "direct_fast_rate": rep.direct_scheme.fast_rate,
        "direct_slow_rate_estimate": rep.direct_scheme.slow_rate_estimate,
        "direct_false_click_floor": rep.direct_scheme.false_click_floor,
        **{f"ratio_{k.replace('/', '_over_')}": v for k, v in regime.ratios.items()},
        "regime_warnings": regime.warnings,
    }
    print(runner.dumps_summary(summary))


def _run_and_report(s: Scenario, out: str | None, json_path: Path | None = None) -> None:
    result = runner.run_scenario(s, out)
    _warn(result.summary["regime_warnings"])
    text = runner.dumps_summary(result.summary)
    if json_path is not None:
        json_path.write_text(text + "\n", encoding="utf-8")
    print(text)


def cmd_simulate(args) -> None:
    s = _load(args.config)
    out = args.out or s.out
    if not out:
        raise ConfigError("no output path: pass --out or set 'out' in the config", "out")
    _run_and_report(s, out)


def cmd_chain(args) -> None:
    s = _load(args.config)
    if s.engine != "chain":
        raise ConfigError("chain subcommand needs engine = chain", "engine")
    _run_and_report(s, args.out or s.out)


def cmd_compare(args) -> None:
    s = _load(args.config)
    try:
        summary = runner.compare(s)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _warn(summary["regime_warnings"])
    print(runner.dumps_summary(summary))


def cmd_figure(args) -> None:
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if args.name == "fig3":
        for theta in runner.FIG3_THETAS_DEG:
            stem = f"fig3_theta{theta:g}"
            s = runner.preset("fig3", theta_deg=theta)
            _run_and_report(s, str(outdir / f"{stem}.csv"), outdir / f"{stem}.json")
    else:
        s = runner.preset(args.name)
        _run_and_report(s, str(outdir / f"{args.name}.csv"), outdir / f"{args.name}.json")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dsreadout", description="Readout of coupled qubits via a decaying detector.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rates", help="analytic rates, window and regime ratios")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_rates)

    p = sub.add_parser("simulate", help="run a scenario and write the CSV trace")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="CSV path (overrides 'out' in the config)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="numeric vs asymptotic vs projective vs direct damping")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("figure", help="reproduce a figure preset")
    p.add_argument("name", choices=sorted(runner.PRESETS))
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("chain", help="run a chain scenario")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="CSV path")
    p.set_defaults(func=cmd_chain)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
