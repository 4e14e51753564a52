"""Command line: prior simulation, moments, posterior predictive, diagnostics and checks.

Exit codes: 0 success, 2 configuration error, 3 numeric failure,
4 rejected by a model condition.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .families import Truncation
from .io import config_hash, load_config, read_grouped, write_json, write_samples, write_summary
from .levy import ConditionError, LevyCharacteristics, check_kernel, validate
from .moments import DifferentiationError, LaplaceQuery, TailError, hazard_moments, laplace_transform, mc_laplace, \
    mean_functional_moment
from .observations import ObservationSet, ingest_grouped
from .posterior import PosteriorModel
from .predictive import PredictiveConfig, _summarize, empirical_survival, mcmc_predictive, predictive_summary, \
    run_chunked
from .presets import PRESETS, load_preset
from .rng import make_rng
from .sampling import sample_batch
from .serialization import chars_from_dict
from .survival_model import HierarchicalSpec, build_model

EXIT_CONFIG, EXIT_NUMERIC, EXIT_CONDITION = 2, 3, 4
COMMANDS = ("simulate-prior", "prior-moments", "posterior-predictive", "gibbs-diagnostics", "oracle-check",
            "validate-spec")
ENV_PREFIX = "MINID_"


class ConfigError(ValueError):
    pass


@dataclass
class Model:
    chars: LevyCharacteristics
    name: str
    data: ObservationSet | None = None
    spec: HierarchicalSpec | None = None
    source: dict | None = None


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

def _parse_grid(text):
    if text is None:
        return None
    if isinstance(text, str):
        try:
            vals = [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
        except ValueError as exc:
            raise ConfigError(f"cannot parse grid {text!r}") from exc
        return np.array(vals)
    return np.asarray(text, dtype=float)


def resolve_settings(args, cfg: dict) -> dict:
    """Flag, then ``MINID_*`` environment variable, then config file, then default."""
    run = dict(cfg.get("run", {}))
    defaults = {"seed": 0, "replicates": 1000, "horizon": 200, "grid": None, "threads": 1, "out": ".",
                "method": "exact", "burn_in": 1000, "sweeps": 100000, "truncation_tol": 1e-4}
    casts = {"seed": int, "replicates": int, "horizon": int, "threads": int, "burn_in": int, "sweeps": int,
             "truncation_tol": float, "grid": _parse_grid, "out": str, "method": str}
    out = {}
    for key, default in defaults.items():
        val = getattr(args, key, None)
        if val is None:
            val = os.environ.get(ENV_PREFIX + key.upper())
        if val is None:
            val = run.get(key, cfg.get(key))
        if val is None:
            val = default
        try:
            out[key] = casts[key](val) if val is not None else None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid value for {key}: {val!r}") from exc
    out["deterministic"] = bool(args.deterministic or os.environ.get(ENV_PREFIX + "DETERMINISTIC"))
    if out["deterministic"]:
        out["threads"] = 1
    if out["replicates"] < 1 or out["horizon"] < 1 or out["threads"] < 1:
        raise ConfigError("replicates, horizon and threads must be positive")
    return out


def model_from_config(cfg: dict) -> Model:
    """A model from ``preset``/``params``, a ``hierarchical`` table or a ``levy`` table."""
    try:
        if "hierarchical" in cfg:
            spec = HierarchicalSpec.from_dict(cfg["hierarchical"])
            chars, _ = build_model(spec)
            return Model(chars, "hierarchical", spec=spec, source=cfg["hierarchical"])
        if "levy" in cfg:
            return Model(chars_from_dict(cfg["levy"]), "levy", source=cfg["levy"])
        name = cfg.get("preset")
        if name is None:
            raise ConfigError("config needs one of 'preset', 'hierarchical' or 'levy'")
        p = load_preset(name, **cfg.get("params", {}))
        return Model(p.chars, p.name, data=p.data, spec=p.spec, source={"preset": name, **cfg.get("params", {})})
    except ConditionError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid model configuration: {exc}") from exc


def load_inputs(args):
    spec = args.spec or os.environ.get(ENV_PREFIX + "SPEC")
    preset = getattr(args, "preset", None) or os.environ.get(ENV_PREFIX + "PRESET")
    if spec:
        try:
            cfg = load_config(spec)
        except FileNotFoundError as exc:
            raise ConfigError(f"spec file not found: {spec}") from exc
        except ValueError as exc:
            raise ConfigError(f"cannot parse spec file {spec}: {exc}") from exc
    elif preset:
        cfg = {"preset": preset}
    else:
        raise ConfigError("give --spec FILE or --preset NAME")
    if preset and spec:
        cfg = {**cfg, "preset": preset}
    return cfg, model_from_config(cfg)


def load_data(args, model: Model, required: bool = False) -> ObservationSet:
    path = args.data or os.environ.get(ENV_PREFIX + "DATA")
    if path is None:
        if model.data is not None:
            return model.data
        if required:
            raise ConfigError("this command needs --data")
        return ObservationSet.empty(model.chars.dim)
    try:
        groups = read_grouped(path, model.chars.dim)
    except FileNotFoundError as exc:
        raise ConfigError(f"data file not found: {path}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if sum(len(g) for g in groups) == 0:
        return ObservationSet.empty(model.chars.dim)
    return ingest_grouped(groups)


def _outdir(settings) -> Path:
    out = Path(settings["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(cmd, cfg, settings, started, **extra) -> dict:
    return {"command": cmd, "version": __version__, "seed": settings["seed"], "config_hash": config_hash(cfg),
            "settings": {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in settings.items()},
            "wall_clock_seconds": round(time.perf_counter() - started, 3), **extra}


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate_prior(args) -> int:
    t0 = time.perf_counter()
    cfg, model = load_inputs(args)
    st = resolve_settings(args, cfg)
    trunc = Truncation(st["truncation_tol"])
    chars = model.chars
    parts = run_chunked(lambda n, r: sample_batch(chars, n, st["horizon"], r, trunc), st["replicates"],
                        st["seed"], st["threads"])
    draws = np.concatenate(parts)                                       # (M, d, k)
    out = _outdir(st)
    cfg_pred = PredictiveConfig(k=st["horizon"], M=st["replicates"], grid=st["grid"], seed=st["seed"])
    from .predictive import _grid

    grid = _grid(cfg_pred, chars.dim, ObservationSet.empty(chars.dim))
    summary = _summarize(empirical_survival(draws, grid), grid, cfg_pred.level)
    flat = draws.transpose(0, 2, 1).reshape(-1, chars.dim)
    write_samples(out / "samples.csv", flat, "manifest.json",
                  {"replicates": st["replicates"], "horizon": st["horizon"],
                   "row_order": "replicate-major: row = replicate * horizon + draw"})
    write_summary(out / "prior_summary.csv", summary, "manifest.json")
    write_json(out / "manifest.json", _manifest(
        "simulate-prior", cfg, st, t0, model=model.name,
        truncation_bounds={"levy": chars.truncation_bound(trunc)},
        outputs=["samples.csv", "prior_summary.csv"]))
    print(f"wrote {flat.shape[0]} draws to {out / 'samples.csv'}")
    return 0


def _queries(cfg, st, d):
    qs = cfg.get("queries")
    if qs:
        return qs
    grid = st["grid"] if st["grid"] is not None else np.array([0.5, 1.0, 2.0])
    out = []
    for i in range(d):
        pts = np.full((grid.size, d), np.inf)
        pts[:, i] = grid
        out.append({"kind": "laplace", "points": pts.tolist(), "z": [1.0] * grid.size})
        for t in grid:
            p = np.full(d, np.inf)
            p[i] = t
            out.append({"kind": "hazard", "points": [p.tolist()], "orders": [1]})
    return out


def cmd_prior_moments(args) -> int:
    t0 = time.perf_counter()
    cfg, model = load_inputs(args)
    st = resolve_settings(args, cfg)
    chars = model.chars
    rng = make_rng(st["seed"])
    rows = []
    for q in _queries(cfg, st, chars.dim):
        kind = q.get("kind", "laplace")
        if kind == "laplace":
            lq = LaplaceQuery(np.asarray(q["points"], float), np.asarray(q["z"], float))
            row = {"query": q, "value": laplace_transform(chars, lq), "se_or_tol": 1e-8, "method": "quadrature"}
            if args.mc:
                est, se = mc_laplace(chars, lq, st["replicates"], rng, Truncation(st["truncation_tol"]))
                row["mc"] = {"value": est, "se": se, "N": st["replicates"]}
        elif kind == "hazard":
            val = hazard_moments(chars, np.asarray(q["points"], float), q["orders"], method=q.get("method", "auto"))
            row = {"query": q, "value": val, "se_or_tol": 1e-3 * abs(val), "method": q.get("method", "auto")}
        elif kind == "functional":
            res = mean_functional_moment(chars, int(q.get("m", 1)), full=True)
            row = {"query": q, "value": res.value, "se_or_tol": max(res.tail_bound, 1e-8), "method": "quadrature"}
        else:
            raise ConfigError(f"unknown moment query kind {kind!r}")
        rows.append(row)
    out = _outdir(st)
    write_json(out / "moments.json", {"manifest": "manifest.json", "results": rows})
    write_json(out / "manifest.json", _manifest("prior-moments", cfg, st, t0, model=model.name,
                                                outputs=["moments.json"]))
    for r in rows:
        print(json.dumps({"query": r["query"], "value": r["value"], "se_or_tol": r["se_or_tol"]}, default=str))
    return 0


def cmd_posterior_predictive(args) -> int:
    t0 = time.perf_counter()
    cfg, model = load_inputs(args)
    st = resolve_settings(args, cfg)
    pm = PosteriorModel(model.chars)                     # density gate
    obs = load_data(args, model)
    pcfg = PredictiveConfig(k=st["horizon"], M=st["replicates"], grid=st["grid"], seed=st["seed"],
                            burn_in=st["burn_in"], trunc=Truncation(st["truncation_tol"]))
    if st["method"] == "mcmc":
        summary = mcmc_predictive(pm, obs, pcfg, make_rng(st["seed"]))
    elif st["method"] == "exact":
        summary = predictive_summary(pm, obs, pcfg, threads=st["threads"])
    else:
        raise ConfigError("method must be 'exact' or 'mcmc'")
    out = _outdir(st)
    write_summary(out / "summary.csv", summary, "manifest.json")
    diag = {k: v for k, v in summary.meta.items() if k in ("split_rhat", "max_split_rhat", "converged")}
    write_json(out / "manifest.json", _manifest(
        "posterior-predictive", cfg, st, t0, model=model.name, n_observed=obs.size,
        truncation_bounds={"tilted": summary.meta.get("truncation_bound")}, chain_diagnostics=diag,
        outputs=["summary.csv"]))
    print(f"wrote {summary.grid.shape[0]} grid rows to {out / 'summary.csv'}")
    return 0


def cmd_gibbs_diagnostics(args) -> int:
    from .checks import gibbs_diagnostics

    t0 = time.perf_counter()
    st = resolve_settings(args, {})
    name = args.preset or "toy_two_family"
    rep = gibbs_diagnostics(name, st["sweeps"], st["burn_in"], st["seed"])
    out = _outdir(st)
    write_json(out / "gibbs.json", {"manifest": "manifest.json", **rep})
    write_json(out / "manifest.json", _manifest("gibbs-diagnostics", {"preset": name}, st, t0,
                                                chain_diagnostics={"tv": rep["tv"]}, outputs=["gibbs.json"]))
    print(f"{rep['n_partitions']} partitions, {rep['sweeps']} sweeps: TV = {rep['tv']:.5f}")
    return 0


def cmd_oracle_check(args) -> int:
    from .checks import run_suite

    t0 = time.perf_counter()
    st = resolve_settings(args, {})
    results = run_suite(st["seed"])
    for r in results:
        print(r.line())
    if args.out:
        out = _outdir(st)
        write_json(out / "oracle.json", {"manifest": "manifest.json",
                                         "results": [r.__dict__ for r in results]})
        write_json(out / "manifest.json", _manifest("oracle-check", {}, st, t0, outputs=["oracle.json"]))
    ok = all(r.passed for r in results)
    print("all checks passed" if ok else "some checks FAILED")
    return 0 if ok else EXIT_NUMERIC


def cmd_validate_spec(args) -> int:
    cfg, model = load_inputs(args)
    rep = validate(model.chars).as_dict()
    if model.spec is not None:
        rep["kernels"] = {"root": check_kernel(model.spec.root_kernel),
                          "groups": [check_kernel(k) for k in model.spec.kernels]}
    if args.target == "posterior-predictive":
        try:
            PosteriorModel(model.chars)
            rep["absolute_continuity"] = {"ok": True}
        except ConditionError as exc:
            rep["absolute_continuity"] = {"ok": False, "message": str(exc)}
            rep["ok"] = False
    print(json.dumps(rep, indent=2, default=str))
    if not rep["ok"]:
        if not rep.get("absolute_continuity", {"ok": True})["ok"]:
            print(f"rejected: {rep['absolute_continuity']['message']}", file=sys.stderr)
        else:
            print("rejected: integrability condition fails on the localizing sets", file=sys.stderr)
        return EXIT_CONDITION
    return 0


HANDLERS = {"simulate-prior": cmd_simulate_prior, "prior-moments": cmd_prior_moments,
            "posterior-predictive": cmd_posterior_predictive, "gibbs-diagnostics": cmd_gibbs_diagnostics,
            "oracle-check": cmd_oracle_check, "validate-spec": cmd_validate_spec}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="model spec (TOML, JSON fallback)")
    common.add_argument("--preset", choices=sorted(PRESETS), help="named model preset")
    common.add_argument("--data", help="grouped data CSV with columns group_id,time")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--replicates", type=int, help="Monte Carlo replicates M")
    common.add_argument("--horizon", type=int, help="future draws per replicate k")
    common.add_argument("--grid", help="comma separated time grid")
    common.add_argument("--threads", type=int)
    common.add_argument("--deterministic", action="store_true", help="single thread, reproducible outputs")
    common.add_argument("--method", choices=["exact", "mcmc"])
    common.add_argument("--burn-in", dest="burn_in", type=int)
    common.add_argument("--sweeps", type=int, help="Gibbs sweeps for diagnostics")
    common.add_argument("--truncation-tol", dest="truncation_tol", type=float)
    p = argparse.ArgumentParser(prog="minid", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, parents=[common])
        if name == "prior-moments":
            sp.add_argument("--mc", action="store_true", help="add Monte Carlo estimates with standard errors")
        if name == "validate-spec":
            sp.add_argument("--target", choices=["prior", "posterior-predictive"], default="prior")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    try:
        return HANDLERS[args.command](args)
    except ConditionError as exc:
        print(f"condition violated: {exc}", file=sys.stderr)
        return EXIT_CONDITION
    except (ConfigError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, DifferentiationError, TailError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
