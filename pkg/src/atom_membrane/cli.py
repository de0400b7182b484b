"""Command-line entry point.

Exit codes: 0 success, 1 numeric failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__, lattice, protocols, thermal
from .config import ConfigError, RunConfig, load_config, override, parse_config
from .io import RunManifest, format_float, to_jsonable, write_csv, write_json
from .oracle import TruncationLeak
from .system import check_strong_coupling

EXIT_OK, EXIT_NUMERIC, EXIT_CONFIG = 0, 1, 2
# run window for entanglement, in units of 1/G
ENTANGLE_DURATION = 3.0


class NumericFailure(RuntimeError):
    pass


def _emit(obj) -> None:
    print(json.dumps(to_jsonable(obj), sort_keys=True, indent=2))


def _finish(command: str, config: RunConfig, out_dir: Path | None, outputs: list[str], payload=None) -> None:
    """Print ``payload`` and write the run manifest (to ``out_dir`` or stderr)."""
    manifest = RunManifest.for_config(command, config.model_dump(mode="json"), outputs)
    if payload is not None:
        _emit(payload)
    if out_dir is not None:
        manifest.outputs.append(str(out_dir / "manifest.json"))
        manifest.write(out_dir / "manifest.json")
    else:
        print(json.dumps(to_jsonable(asdict(manifest)), sort_keys=True), file=sys.stderr)


def _out_dir(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _load(args) -> RunConfig:
    return load_config(args.config) if getattr(args, "config", None) else parse_config({})


# commands ------------------------------------------------------------------------


def cmd_design_check(args) -> None:
    cfg = _load(args)
    sec = cfg.require("system")
    params = sec.params()
    report = check_strong_coupling(params, None, sec.kappa_th, sec.thresholds())
    out = _out_dir(args.out)
    outputs = []
    if out is not None:
        write_json(out / "report.json", report.to_dict())
        outputs.append(str(out / "report.json"))
    _finish("design-check", cfg, out, outputs, report.to_dict())


def cmd_lattice_scan(args) -> None:
    cfg = _load(args)
    sec = cfg.lattice or parse_config({"lattice": {}}).lattice
    geom = sec.geometry()
    sites = lattice.find_wells(geom, sec.points_per_period, sec.geometry_factor)
    header = ["x", "u", "theta", "zeta", "xi", "is_max", "dk_x_over_pi"]
    rows = [[s.x, s.u, s.theta, s.zeta, s.xi, int(s.is_intensity_max), geom.dk * s.x / math.pi] for s in sites]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(out, header, rows)
    best = lattice.best_site(sites, sec.criterion)
    summary = {"n_sites": len(sites), "best_site": asdict(best), "best_dk_x_over_pi": geom.dk * best.x / math.pi}
    manifest = RunManifest.for_config("lattice-scan", cfg.model_dump(mode="json"), [str(out)])
    mpath = out.with_name(out.stem + ".manifest.json")
    manifest.outputs.append(str(mpath))
    manifest.write(mpath)
    _emit(summary)


def _scenario_overrides(args) -> dict:
    keys = ("f", "G", "model", "duration", "points", "s0", "omega_at", "Gamma_c", "Gamma_m", "Gamma_at", "g_over_delta", "kappa", "step")
    return {k: getattr(args, k, None) for k in keys}


def _write_scenario(result: protocols.ScenarioResult, out: Path, stem: str) -> list[str]:
    names, table = result.table()
    csv_path = out / f"{stem}.csv"
    write_csv(csv_path, names, table.tolist())
    summary_path = out / "summary.json"
    write_json(summary_path, {k: format_float(v) if isinstance(v, float) else v for k, v in result.summary.items()})
    return [str(csv_path), str(summary_path)]


def cmd_swap(args) -> None:
    cfg = _load(args)
    cfg = override(cfg, "protocols", scenario=f"swap_{args.state}", **_scenario_overrides(args))
    sc = cfg.protocols.scenario_config()
    result = protocols.run_swap(sc)
    out = _out_dir(args.out)
    outputs = _write_scenario(result, out, sc.scenario) if out is not None else []
    _finish("swap", cfg, out, outputs, result.summary)


def cmd_entangle(args) -> None:
    cfg = _load(args)
    explicit = cfg.protocols.model_fields_set if cfg.protocols else set()
    values = _scenario_overrides(args)
    if values["duration"] is None and "duration" not in explicit:
        values["duration"] = ENTANGLE_DURATION
    cfg = override(cfg, "protocols", scenario="entangle", modulation=True, **values)
    result = protocols.run_entangle(cfg.protocols.scenario_config())
    out = _out_dir(args.out)
    outputs = _write_scenario(result, out, "entangle") if out is not None else []
    _finish("entangle", cfg, out, outputs, result.summary)


def cmd_cool(args) -> None:
    cfg = _load(args)
    c = cfg.require("cooling")
    s = protocols.cooling_comparison(c.f, c.G, c.omega_m, c.Gamma_R, c.g_m, c.kappa, c.Gamma_m)
    payload = asdict(s)
    if c.f > 0:
        payload["G_opt_scan"] = protocols.scan_swap_optimum(c.f * c.G, c.omega_m)
    _finish("cool", cfg, _out_dir(args.out), [], payload)


def cmd_heat(args) -> None:
    cfg = _load(args)
    sec = cfg.thermal or parse_config({"thermal": {}}).thermal
    hc = sec.heat_config()
    hm = thermal.steady_state_heat_map(hc)
    out = _out_dir(args.out)
    field_path = out / "temperature.csv"
    header = ["y\\x"] + [format_float(v) for v in hm.x]
    write_csv(field_path, header, [[y] + list(row) for y, row in zip(hm.x.tolist(), hm.T.tolist())])
    summary = {
        "T_peak": hm.T_peak,
        "T_avg": hm.T_avg,
        "dT_lumped": thermal.lumped_temperature_rise(hc.P_c, hc.finesse, hc.thermal_link),
        "P_absorbed": hc.absorbed,
        "residual": hm.residual,
    }
    write_json(out / "summary.json", {k: format_float(v) for k, v in summary.items()})
    _finish("heat", cfg, out, [str(field_path), str(out / "summary.json")], summary)


def cmd_validate(args) -> None:
    from .validation import SUITES

    kwargs = {"n_tr": args.truncation} if args.suite == "oracle" and args.truncation else {}
    checks = SUITES[args.suite](**kwargs)
    for c in checks:
        print(c.line())
    cfg = parse_config({})
    _finish(f"validate --suite {args.suite}", cfg, _out_dir(args.out), [])
    if not all(c.passed for c in checks):
        raise NumericFailure(f"{sum(not c.passed for c in checks)} check(s) failed")


# parser ------------------------------------------------------------------------------


def _positive(x: str) -> float:
    v = float(x)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {x}")
    return v


def _nonneg(x: str) -> float:
    v = float(x)
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative, got {x}")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="atom-membrane", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("design-check", help="margins of the strong-coupling conditions")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_design_check)

    s = sub.add_parser("lattice-scan", help="trapping wells of the two-colour lattice")
    s.add_argument("--config")
    s.add_argument("--out", required=True, help="CSV path")
    s.set_defaults(func=cmd_lattice_scan)

    s = sub.add_parser("swap", help="state transfer from atom to membrane")
    s.add_argument("--state", choices=["coherent", "squeezed", "fock"], required=True)
    s.add_argument("--f", type=_nonneg)
    s.add_argument("--g-over-omega", dest="G", type=_positive)
    s.add_argument("--model", choices=["effective", "full"])
    s.add_argument("--duration", type=_positive, help="in swap times")
    s.add_argument("--points", type=int)
    s.add_argument("--s0", type=_positive)
    s.add_argument("--config")
    s.add_argument("--out")
    s.set_defaults(func=cmd_swap)

    s = sub.add_parser("entangle", help="entanglement under modulated coupling")
    s.add_argument("--f", type=_nonneg)
    s.add_argument("--omega-ratio", dest="omega_at", type=_positive)
    s.add_argument("--g-over-omega", dest="G", type=_positive)
    s.add_argument("--duration", type=_positive, help="in units of 1/G (default 3)")
    s.add_argument("--step", type=_positive)
    s.add_argument("--config")
    s.add_argument("--out")
    s.set_defaults(func=cmd_entangle)

    s = sub.add_parser("cool", help="compare swap, atom-assisted and cavity cooling")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_cool)

    s = sub.add_parser("heat", help="steady-state membrane temperature map")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_heat)

    s = sub.add_parser("validate", help="cross-engine self-checks")
    s.add_argument("--suite", choices=["gaussian", "oracle"], required=True)
    s.add_argument("--truncation", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_validate)
    return p


NUMERIC_ERRORS = (NumericFailure, thermal.HeatSolveError, TruncationLeak, FloatingPointError, np.linalg.LinAlgError, ArithmeticError)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as e:
        # raised by domain constructors, so the input is at fault
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
