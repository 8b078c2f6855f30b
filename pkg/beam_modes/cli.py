"""Command-line entry point: ``beam-modes <group> <command> [flags]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from dotenv import dotenv_values
from pydantic import BaseModel, ValidationError

from . import __version__
from .atlas import energy_grid, find_thresholds, sweep, theta0_grid, write_atlas_csv
from .config import IntegratorConfig
from .duffing import classify_energy, homoclinic, orbit_from_energy, period_of
from .errors import DomainError, IntegrationError, NumericalQualityError
from .export import rows_to_text
from .hill_floquet import build_hill, build_hill_from_amplitude, classify_problem, criteria_report
from .logger import configure_logging, get_logger
from .regime import cazenave_limit_classify, classify_gamma, ppp2_scan, resonance_diagnostics, table_regime
from .schemas import ModeParams, SweepSpec, VerdictSource
from .stationary import residual_check, stationary_catalog
from .two_mode import TwoModeConfig, simulate, transfer_report, write_trajectory_csv

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


# --- output ----------------------------------------------------------------------------------


def _flatten(record: Dict[str, Any]) -> Dict[str, Any]:
    return {key: json.dumps(value) if isinstance(value, (dict, list)) else value for key, value in record.items()}


def _csv_text(payload: Any) -> str:
    records = payload if isinstance(payload, list) else [payload]
    dumped = [
        _flatten(item.model_dump(mode="json") if isinstance(item, BaseModel) else dict(item)) for item in records
    ]
    if not dumped:
        return ""
    header = list(dumped[0])
    return rows_to_text(header, ([row[key] for key in header] for row in dumped))


def _json_text(payload: Any) -> str:
    if isinstance(payload, BaseModel):
        return payload.model_dump_json(indent=2)
    if isinstance(payload, list):
        items = [item.model_dump(mode="json") if isinstance(item, BaseModel) else item for item in payload]
        return json.dumps(items, indent=2)
    return json.dumps(payload, indent=2)


def _write_text(args: argparse.Namespace, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _emit(args: argparse.Namespace, payload: Any) -> None:
    _write_text(args, _csv_text(payload) if args.format == "csv" else _json_text(payload) + "\n")


def _integrator(args: argparse.Namespace) -> IntegratorConfig:
    return IntegratorConfig.with_tolerance(args.tol) if args.tol is not None else IntegratorConfig.from_settings()


def _pairs(text: str) -> List[Tuple[int, int]]:
    """``"3:7,2:3"`` -> [(3, 7), (2, 3)]."""
    pairs = []
    for chunk in text.split(","):
        m, _, n = chunk.strip().partition(":")
        if not (m.strip().isdigit() and n.strip().isdigit()):
            raise DomainError(f"pairs are written m:n, got {chunk!r}")
        pairs.append((int(m), int(n)))
    return pairs


# --- commands ------------------------------------------------------------------------------------


def _mode_period(args: argparse.Namespace) -> None:
    params = ModeParams(k=args.k, P=args.P)
    regime = classify_energy(params, args.E)
    _emit(args, {"k": args.k, "P": args.P, "E": args.E, "regime": regime.value, "period": period_of(params, args.E)})


def _mode_orbit(args: argparse.Namespace) -> None:
    _emit(args, orbit_from_energy(ModeParams(k=args.k, P=args.P), args.E, sign=args.sign or 1))


def _mode_homoclinic(args: argparse.Namespace) -> None:
    params = ModeParams(k=args.k, P=args.P)
    times = np.linspace(-args.t_max, args.t_max, args.points)
    values = homoclinic(params, times)
    _emit(args, [{"t": float(t), "theta": float(v)} for t, v in zip(times, values)])


def _hill_problem(args: argparse.Namespace):
    if (args.E is None) == (args.theta0 is None):
        raise DomainError("give exactly one of --E or --theta0")
    if args.theta0 is not None:
        return build_hill_from_amplitude(args.m, args.n, args.P, args.theta0)
    return build_hill(args.m, args.n, args.P, args.E)


def _hill_classify(args: argparse.Namespace) -> None:
    _emit(args, classify_problem(_hill_problem(args), _integrator(args), args.marginal_tol))


def _hill_criteria(args: argparse.Namespace) -> None:
    _emit(args, criteria_report(_hill_problem(args), _integrator(args)))


def _twomode_simulate(args: argparse.Namespace) -> None:
    if args.seed_ratio is not None:
        config = TwoModeConfig.seeded(args.m, args.n, args.P, args.E_w, args.seed_ratio)
    else:
        config = TwoModeConfig.from_energies(args.m, args.n, args.P, args.E_w, args.E_z or 0.0)
    trajectory, channels = simulate(config, args.t_end, _integrator(args))
    if args.format == "csv":
        write_trajectory_csv(trajectory, channels, args.out or sys.stdout)
        return
    report = transfer_report(channels) if channels.E_z[0] > 0.0 else None
    _emit(
        args,
        {
            "config": config.model_dump(mode="json"),
            "channels": channels.to_dict(),
            "transfer": report.model_dump(mode="json") if report else None,
        },
    )


def _regime_table(args: argparse.Namespace) -> None:
    _emit(args, table_regime(args.m, args.n, args.P))


def _regime_gamma(args: argparse.Namespace) -> None:
    _emit(args, classify_gamma(args.m, args.n))


def _regime_resonance(args: argparse.Namespace) -> None:
    _emit(args, resonance_diagnostics(args.m, args.n, args.P))


def _regime_cazenave(args: argparse.Namespace) -> None:
    result = cazenave_limit_classify(
        args.gamma,
        eps=args.eps or 0.0,
        nu=1.0 if args.nu is None else args.nu,
        nu_prime=1.0 if args.nu_prime is None else args.nu_prime,
        config=_integrator(args),
        marginal_tol=args.marginal_tol,
    )
    _emit(args, result)


def _scan_ppp2(args: argparse.Namespace) -> None:
    hits = ppp2_scan(args.n_max, args.jobs)
    if args.format == "json":
        _emit(args, hits)
        return
    _write_text(args, rows_to_text(("m", "n", "L"), ((hit.m, hit.n, hit.L) for hit in hits)))


def _stationary(args: argparse.Namespace) -> None:
    catalog = stationary_catalog(args.P)
    if not args.check_residuals:
        _emit(args, catalog)
        return
    grid = np.linspace(0.0, np.pi, 257)
    records = []
    for solution in catalog:
        residual = residual_check(solution, args.P, grid)
        logger.info("Stationary residual", extra={"j": solution.j, "sign": solution.sign, "residual": residual})
        records.append({**solution.model_dump(mode="json"), "residual": residual})
    _emit(args, records)


def _atlas_sweep(args: argparse.Namespace) -> None:
    if args.E_min is not None or args.E_max is not None:
        if args.E_min is None or args.E_max is None:
            raise DomainError("an energy sweep needs both --E-min and --E-max")
        grid = {"energy_grid": energy_grid(args.E_min, args.E_max, args.points, geometric=bool(args.geometric))}
    else:
        grid = {"theta0_grid": theta0_grid(args.theta0_max, args.points)}
    spec = SweepSpec(
        P=args.P,
        pairs=_pairs(args.pairs),
        verdict_source=VerdictSource(args.source),
        integrator=_integrator(args),
        marginal_tol=args.marginal_tol,
        **grid,
    )
    cells = sweep(spec, args.jobs)
    if args.format == "json":
        _emit(args, cells)
        return
    write_atlas_csv(cells, args.out or sys.stdout)


def _atlas_thresholds(args: argparse.Namespace) -> None:
    thresholds = find_thresholds(
        args.m,
        args.n,
        args.P,
        (args.E_min, args.E_max),
        refinement_tol=args.refinement_tol,
        samples=args.samples,
        config=_integrator(args),
        marginal_tol=args.marginal_tol,
    )
    _emit(args, thresholds)


# --- parser ------------------------------------------------------------------------------------------


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default=None, help="Output format.")
    common.add_argument("--out", default=None, help="Write output to FILE instead of stdout.")
    common.add_argument("--jobs", type=int, default=None, help="Worker processes (default: logical cores).")
    common.add_argument("--tol", type=float, default=None, help="Relative integrator tolerance.")
    common.add_argument("--config", default=None, help="key=value file with flag defaults.")
    common.add_argument("--log-level", dest="log_level", default=None, help="Logging level override.")
    return common


def _command(
    group,
    name: str,
    handler: Callable[[argparse.Namespace], None],
    common: argparse.ArgumentParser,
    required: Sequence[str] = (),
    default_format: str = "json",
    fallbacks: Optional[Dict[str, Any]] = None,
    help_text: Optional[str] = None,
) -> argparse.ArgumentParser:
    # value flags default to None so a config file can fill them; fallbacks apply last
    parser = group.add_parser(name, parents=[common], help=help_text)
    parser.set_defaults(
        handler=handler,
        required_dests=tuple(required),
        default_format=default_format,
        fallbacks=dict(fallbacks or {}),
        command=parser,
    )
    return parser


def _add_modes(parser: argparse.ArgumentParser, *names: str) -> None:
    for name in names:
        parser.add_argument(f"--{name}", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="beam-modes", description="Nonlinear modes of a compressed beam.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)

    mode = groups.add_parser("mode", help="Single-mode Duffing orbits").add_subparsers(dest="action", required=True)
    for name, handler in (("period", _mode_period), ("orbit", _mode_orbit)):
        sub = _command(mode, name, handler, common, required=("k", "P", "E"))
        _add_modes(sub, "k")
        sub.add_argument("--P", type=float, default=None)
        sub.add_argument("--E", type=float, default=None)
        if name == "orbit":
            sub.add_argument("--sign", type=int, choices=[1, -1], default=None)
    sub = _command(
        mode, "homoclinic", _mode_homoclinic, common, required=("k", "P"), fallbacks={"t_max": 5.0, "points": 101}
    )
    _add_modes(sub, "k")
    sub.add_argument("--P", type=float, default=None)
    sub.add_argument("--t-max", dest="t_max", type=float, default=None)
    sub.add_argument("--points", type=int, default=None)

    hill = groups.add_parser("hill", help="Linear stability of mode m against mode n").add_subparsers(
        dest="action", required=True
    )
    for name, handler in (("classify", _hill_classify), ("criteria", _hill_criteria)):
        sub = _command(hill, name, handler, common, required=("m", "n", "P"))
        _add_modes(sub, "m", "n")
        sub.add_argument("--P", type=float, default=None)
        sub.add_argument("--E", type=float, default=None)
        sub.add_argument("--theta0", type=float, default=None)
        sub.add_argument("--marginal-tol", dest="marginal_tol", type=float, default=None)

    twomode = groups.add_parser("twomode", help="Coupled two-mode dynamics").add_subparsers(
        dest="action", required=True
    )
    sub = _command(twomode, "simulate", _twomode_simulate, common, required=("m", "n", "P", "E_w", "t_end"))
    _add_modes(sub, "m", "n")
    sub.add_argument("--P", type=float, default=None)
    sub.add_argument("--Ew", dest="E_w", type=float, default=None)
    sub.add_argument("--Ez", dest="E_z", type=float, default=None)
    sub.add_argument("--seed-ratio", dest="seed_ratio", type=float, default=None)
    sub.add_argument("--t-end", dest="t_end", type=float, default=None)

    regime = groups.add_parser("regime", help="Stability regimes and the large-energy limit").add_subparsers(
        dest="action", required=True
    )
    for name, handler in (("table", _regime_table), ("resonance", _regime_resonance)):
        sub = _command(regime, name, handler, common, required=("m", "n", "P"))
        _add_modes(sub, "m", "n")
        sub.add_argument("--P", type=float, default=None)
    sub = _command(regime, "gamma", _regime_gamma, common, required=("m", "n"))
    _add_modes(sub, "m", "n")
    sub = _command(regime, "cazenave", _regime_cazenave, common, required=("gamma",))
    sub.add_argument("--gamma", type=float, default=None)
    sub.add_argument("--eps", type=float, default=None)
    sub.add_argument("--nu", type=float, default=None)
    sub.add_argument("--nu-prime", dest="nu_prime", type=float, default=None)
    sub.add_argument("--marginal-tol", dest="marginal_tol", type=float, default=None)

    scan = groups.add_parser("scan", help="Integer scans").add_subparsers(dest="action", required=True)
    sub = _command(scan, "ppp2", _scan_ppp2, common, required=("n_max",), default_format="csv")
    sub.add_argument("--n-max", dest="n_max", type=int, default=None)

    sub = _command(
        groups,
        "stationary",
        _stationary,
        common,
        required=("P",),
        fallbacks={"check_residuals": False},
        help_text="Equilibrium catalog",
    )
    sub.add_argument("--P", type=float, default=None)
    sub.add_argument("--check-residuals", dest="check_residuals", action="store_true", default=None)

    atlas = groups.add_parser("atlas", help="Parameter sweeps").add_subparsers(dest="action", required=True)
    sub = _command(
        atlas,
        "sweep",
        _atlas_sweep,
        common,
        required=("P", "pairs"),
        default_format="csv",
        fallbacks={"theta0_max": 50.0, "points": 200, "geometric": False, "source": VerdictSource.monodromy.value},
    )
    sub.add_argument("--P", type=float, default=None)
    sub.add_argument("--pairs", default=None, help="Mode pairs as m:n[,m:n...].")
    sub.add_argument("--theta0-max", dest="theta0_max", type=float, default=None)
    sub.add_argument("--points", type=int, default=None)
    sub.add_argument("--E-min", dest="E_min", type=float, default=None)
    sub.add_argument("--E-max", dest="E_max", type=float, default=None)
    sub.add_argument("--geometric", action="store_true", default=None)
    sub.add_argument("--source", choices=[source.value for source in VerdictSource], default=None)
    sub.add_argument("--marginal-tol", dest="marginal_tol", type=float, default=None)
    sub = _command(atlas, "thresholds", _atlas_thresholds, common, required=("m", "n", "P", "E_min", "E_max"))
    _add_modes(sub, "m", "n")
    sub.add_argument("--P", type=float, default=None)
    sub.add_argument("--E-min", dest="E_min", type=float, default=None)
    sub.add_argument("--E-max", dest="E_max", type=float, default=None)
    sub.add_argument("--samples", type=int, default=None)
    sub.add_argument("--refinement-tol", dest="refinement_tol", type=float, default=None)
    sub.add_argument("--marginal-tol", dest="marginal_tol", type=float, default=None)

    return parser


def _apply_config_file(args: argparse.Namespace) -> None:
    """Fill flags left unset on the command line from a key=value file."""
    actions = {action.dest: action for action in args.command._actions}
    for key, raw in dotenv_values(args.config).items():
        dest = key.strip().lstrip("-").replace("-", "_")
        action = actions.get(dest)
        if action is None or raw is None:
            logger.warning("Ignoring unknown config key", extra={"key": key})
            continue
        if getattr(args, dest) is not None:
            continue
        if action.const is True and action.nargs == 0:
            setattr(args, dest, raw.strip().lower() in {"1", "true", "yes", "on"})
        else:
            setattr(args, dest, action.type(raw) if action.type else raw)


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.config:
            if not Path(args.config).is_file():
                args.command.error(f"config file not found: {args.config}")
            _apply_config_file(args)
        for dest, value in args.fallbacks.items():
            if getattr(args, dest) is None:
                setattr(args, dest, value)
        missing = [dest for dest in args.required_dests if getattr(args, dest) is None]
        if missing:
            args.command.error("missing required value(s): " + ", ".join(f"--{name}" for name in missing))
    except SystemExit as exc:
        return int(exc.code or 0)

    configure_logging(args.log_level)
    if args.format is None:
        args.format = args.default_format

    try:
        args.handler(args)
    except (DomainError, ValidationError) as exc:
        print(f"error: {_one_line(exc)}", file=sys.stderr)
        return EXIT_DOMAIN
    except (IntegrationError, NumericalQualityError) as exc:
        logger.error("Numerical failure", extra={"error": str(exc)})
        print(f"numerical failure: {_one_line(exc)}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _one_line(exc: Exception) -> str:
    return " ".join(str(exc).split())

