"""Command-line interface binding the library into reproducible runs.

Every command echoes a resolved-config block (JSON on stdout) containing the
seed and all effective settings, so any artifact can be regenerated from its
own output. Exit codes: 0 success, 2 configuration error, 3 numerical
failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import branching, experiments, models, ode, ssa
from .params import ParamError, ParamSet, ParamSet1P, ParamSet2P
from .rng import RngSpec

SCHEMA_VERSION = 1

_TOP_KEYS = {"schema", "family", "params", "init", "stop", "n", "seed",
             "t_end", "rel_tol", "abs_tol", "caps", "betas", "method",
             "points_csv"}
_STOP_KEYS = {"outbreak_threshold", "max_events", "max_time"}
_FAMILIES = ("one_patch_ma", "one_patch_sat", "two_patch")


class ConfigError(ValueError):
    pass


class NumericalError(RuntimeError):
    pass


def _load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    if cfg.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema version {cfg['schema']!r}")
    unknown = set(cfg) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return cfg


def _apply_overrides(cfg: dict, overrides: list) -> dict:
    """Apply --key value pairs; dotted keys reach into params/stop."""
    i = 0
    while i < len(overrides):
        key = overrides[i]
        if not key.startswith("--") or i + 1 >= len(overrides):
            raise ConfigError(f"malformed override near {key!r}; "
                              "expected --key value pairs")
        raw = overrides[i + 1]
        i += 2
        key = key[2:]
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        target = cfg
        parts = key.split(".")
        for part in parts[:-1]:
            if part not in ("params", "stop"):
                raise ConfigError(f"cannot override through key {part!r}")
            target = cfg.setdefault(part, {})
        leaf = parts[-1]
        if target is cfg and leaf not in _TOP_KEYS:
            raise ConfigError(f"unknown override key {leaf!r}")
        if target is not cfg and parts[0] == "stop" and leaf not in _STOP_KEYS:
            raise ConfigError(f"unknown stop key {leaf!r}")
        target[leaf] = value
    return cfg


def _build_params(cfg: dict) -> ParamSet:
    family = cfg.get("family")
    if family not in _FAMILIES:
        raise ConfigError(f"family must be one of {_FAMILIES}, got {family!r}")
    raw = dict(cfg.get("params") or {})
    try:
        if family == "two_patch":
            return ParamSet2P.from_dict(raw)
        raw.setdefault("foi", "saturating" if family == "one_patch_sat"
                       else "mass_action")
        if (family == "one_patch_ma") != (raw["foi"] == "mass_action"):
            raise ConfigError(f"family {family} conflicts with foi {raw['foi']!r}")
        return ParamSet1P.from_dict(raw)
    except ParamError as e:
        raise ConfigError(str(e)) from None


def _build_stop(cfg: dict) -> ssa.StopRule:
    raw = dict(cfg.get("stop") or {})
    unknown = set(raw) - _STOP_KEYS
    if unknown:
        raise ConfigError(f"unknown stop keys: {sorted(unknown)}")
    try:
        stop = ssa.StopRule(**raw)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid stop rule: {e}") from None
    cfg["stop"] = {"outbreak_threshold": stop.outbreak_threshold,
                   "max_events": stop.max_events, "max_time": stop.max_time}
    return stop


def _get_init(cfg: dict, model: models.ModelSpec) -> list:
    init = cfg.get("init")
    if init is None:
        init = [int(round(v)) for v in models.dfe(model.params)]
        init[model.infectious_idx[0]] = 1
    if (not isinstance(init, (list, tuple)) or len(init) != model.n_states
            or any((not isinstance(v, int)) or v < 0 for v in init)):
        raise ConfigError(
            f"init must be {model.n_states} nonnegative integers, got {init!r}")
    cfg["init"] = list(init)
    return list(init)


def _out_dir(args) -> Path:
    out = args.out or os.environ.get("PATCHPROC_OUT") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit(payload: dict, cfg: dict, args) -> None:
    payload["resolved_config"] = dict(cfg, schema=SCHEMA_VERSION)
    json.dump(payload, sys.stdout, indent=2, sort_keys=True, default=float)
    sys.stdout.write("\n")


def _resolve_n(cfg: dict, args, default: int) -> int:
    n = args.n if args.n is not None else cfg.get("n", default)
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"n must be a positive integer, got {n!r}")
    if args.quick:
        n = max(1, n // 100)
    cfg["n"] = n
    return n


def _resolve_seed(cfg: dict, args) -> int:
    seed = args.seed if args.seed is not None else cfg.get("seed", 20260824)
    if not isinstance(seed, int) or not (0 <= seed < 2 ** 64):
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed!r}")
    cfg["seed"] = seed
    return seed


def _cmd_r0(cfg, args):
    params = _build_params(cfg)
    payload = {"r0": models.r0(params)}
    if isinstance(params, ParamSet2P):
        r1, r2, _ = models.two_patch_r0(params)
        payload.update(r0_patch1=r1, r0_patch2=r2)
    _emit(payload, cfg, args)


def _cmd_dfe(cfg, args):
    params = _build_params(cfg)
    model = models.build_model(params)
    _emit({"state_names": list(model.state_names),
           "dfe": [float(v) for v in models.dfe(params)]}, cfg, args)


def _cmd_endemic(cfg, args):
    model = models.build_model(_build_params(cfg))
    try:
        eq = models.endemic_equilibrium(model)
    except models.EquilibriumNotFound as e:
        raise NumericalError(str(e)) from None
    field = models.deterministic_field(model)
    _emit({"state_names": list(model.state_names),
           "equilibrium": [float(v) for v in eq],
           "infectious_total": float(eq[list(model.infectious_idx)].sum()),
           "residual": float(np.linalg.norm(field(eq)))}, cfg, args)


def _cmd_ode(cfg, args):
    model = models.build_model(_build_params(cfg))
    init = _get_init(cfg, model)
    t_end = float(cfg.get("t_end", 50.0))
    try:
        traj = ode.integrate(model, init, t_end,
                             rel_tol=float(cfg.get("rel_tol", 1e-8)),
                             abs_tol=float(cfg.get("abs_tol", 1e-10)))
    except ValueError as e:
        raise ConfigError(str(e)) from None
    except ode.IntegrationError as e:
        raise NumericalError(str(e)) from None
    path = _out_dir(args) / "trajectory.csv"
    traj.to_csv(path)
    _emit({"csv": str(path), "t_end": t_end,
           "final_state": [float(v) for v in traj.final_state()]}, cfg, args)


def _cmd_simulate(cfg, args):
    model = models.build_model(_build_params(cfg))
    init = _get_init(cfg, model)
    stop = _build_stop(cfg)
    seed = _resolve_seed(cfg, args)
    log: list = []
    outcome = ssa.simulate_one(model, init, stop, RngSpec(seed, 0), log=log)
    path = _out_dir(args) / "realization.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["event_index", "t", "reaction_label"]
                        + list(model.state_names))
        for idx, t, label, state in log:
            writer.writerow([idx, repr(t), label] + list(state))
    _emit({"kind": outcome.kind, "t_final": outcome.t_final,
           "events_used": outcome.events_used,
           "partial_hits": outcome.partial_hits, "csv": str(path)}, cfg, args)


def _cmd_extinct(cfg, args):
    model = models.build_model(_build_params(cfg))
    method = cfg.get("method", "auto")
    try:
        report = branching.extinction_report(model, method=method)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    except RuntimeError as e:
        raise NumericalError(str(e)) from None
    _emit(report, cfg, args)


def _cmd_mc(cfg, args):
    model = models.build_model(_build_params(cfg))
    init = _get_init(cfg, model)
    stop = _build_stop(cfg)
    if args.threads:
        ssa.set_threads(args.threads)
    est = ssa.estimate_extinction(model, init, stop, _resolve_n(cfg, args, 10_000),
                                  _resolve_seed(cfg, args))
    _emit(est.to_dict(), cfg, args)


def _cmd_oracle(cfg, args):
    model = models.build_model(_build_params(cfg))
    init = _get_init(cfg, model)
    caps = cfg.get("caps")
    if caps is None:
        raise ConfigError("oracle requires per-component caps")
    try:
        bracket = experiments.truncated_oracle(model, init, caps,
                                               stop=_build_stop(cfg))
    except ValueError as e:
        raise ConfigError(str(e)) from None
    except (experiments.StateSpaceOverflow, RuntimeError) as e:
        raise NumericalError(str(e)) from None
    _emit({"lower": bracket.lower, "upper": bracket.upper,
           "width": bracket.width, "n_states": bracket.n_states,
           "outbreak_threshold": bracket.threshold}, cfg, args)


def _cmd_table(cfg, args):
    if args.table_id not in experiments.TABLE_IDS:
        raise ConfigError(f"table id must be one of {experiments.TABLE_IDS}")
    if args.threads:
        ssa.set_threads(args.threads)
    result = experiments.reproduce_table(
        args.table_id, n=_resolve_n(cfg, args, 1_000_000),
        master_seed=_resolve_seed(cfg, args), stop=_build_stop(cfg),
        out_dir=_out_dir(args))
    _emit({"table_id": result.table_id, "rows": result.rows,
           "manifest": result.manifest}, cfg, args)


def _cmd_sweep(cfg, args):
    params = _build_params(cfg)
    if not isinstance(params, ParamSet1P):
        raise ConfigError("sweeps are defined for the one-patch families")
    betas = cfg.get("betas", list(experiments.SWEEP_BETAS))
    if args.threads:
        ssa.set_threads(args.threads)
    try:
        rows = experiments.beta_sweep(params, betas,
                                      _resolve_n(cfg, args, 100_000),
                                      _resolve_seed(cfg, args),
                                      _build_stop(cfg))
    except ValueError as e:
        raise ConfigError(str(e)) from None
    path = _out_dir(args) / "sweep.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["beta", "s_bar", "p0_mtbp", "p0_mc", "std_err",
                         "abs_err", "rel_err", "supercritical"])
        for row in rows:
            mc = row.p0_mc
            writer.writerow([
                row.beta, row.s_bar, row.p0_mtbp,
                "" if mc is None else mc.p_hat,
                "" if mc is None else mc.std_err,
                "" if row.abs_err is None else row.abs_err,
                "" if row.rel_err is None else row.rel_err,
                int(row.supercritical)])
    _emit({"csv": str(path), "n_points": len(rows)}, cfg, args)


def _cmd_fit(cfg, args):
    path = cfg.get("points_csv")
    if path is None:
        raise ConfigError("fit requires points_csv (CSV with x,y columns)")
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            pts = [(float(row["x"]), float(row["y"])) for row in reader]
    except (OSError, KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"cannot read points from {path}: {e}") from None
    try:
        fit = experiments.fit_power_law(pts)
    except ValueError as e:
        raise NumericalError(str(e)) from None
    _emit({"b": fit.b, "lambda": fit.lam, "r_squared": fit.r_squared},
          cfg, args)


_COMMANDS = {
    "r0": _cmd_r0, "dfe": _cmd_dfe, "endemic": _cmd_endemic, "ode": _cmd_ode,
    "simulate": _cmd_simulate, "extinct": _cmd_extinct, "mc": _cmd_mc,
    "oracle": _cmd_oracle, "table": _cmd_table, "sweep": _cmd_sweep,
    "fit": _cmd_fit,
}


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patchproc",
        description="Stochastic epidemic models with branching-process "
                    "extinction approximations.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        if name == "table":
            p.add_argument("table_id", choices=experiments.TABLE_IDS)
        p.add_argument("--config", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--n", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--quick", action="store_true")
    return parser


def main(argv=None) -> int:
    args, overrides = _parser().parse_known_args(argv)
    try:
        cfg = _apply_overrides(_load_config(args.config), overrides)
        _COMMANDS[args.command](cfg, args)
    except (ConfigError, ParamError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
