"""Command-line front end: ``stochcut {train,evaluate,sweep,inspect,validate}``.

Exit codes: 0 success, 2 usage, 3 config/validation, 4 runtime.

Outputs go to ``<root>/<name>/`` with ``artifact.json``, ``logs/run.log``
and ``csv/``. The root is ``--out-root``, else ``$STOCHCUT_RUN_ROOT``, else
``./run``.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .basis import BasisSpec, default_terms
from .baselines import MyopicPolicy, RandomPolicy
from .cem import CemConfig
from .errors import ConfigError, InstanceError, StochcutError
from .harness import (DEFAULT_GAMMAS, EvalConfig, reevaluate_run, simulate, sweep_gamma,
                      write_costs_csv, write_gamma_sweep_csv, write_inventory_csv,
                      write_summary_csv)
from .instance import ProblemInstance, load_instance
from .trainer import TrainConfig, TrainingAborted, TrainRun, train

log = logging.getLogger("stochcut")

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3, 4
RUN_ROOT_ENV = "STOCHCUT_RUN_ROOT"

DEFAULT_CONFIG = {
    "instance": "builtin:paper",
    "name": None,
    "train": {"gamma": 0.8, "L1": 30, "L2": 50000, "seed": 0, "theta0_stddev": 1.0,
              "ridge": 0.0, "chunk": 250},
    "cem": {"n_iterations": 10, "n_candidates": 100, "rho": 0.1, "rejection_cap": 10000,
            "smoothing": 0.0},
    "basis": {"kind": "fourier", "terms": None, "degree": 2, "max_frequency": 2,
              "max_interactions": 2, "normalize": False},
    "eval": {"replications": 10, "horizon": 200, "seed": 0, "bootstrap_resamples": 1000,
             "confidence": 0.95},
    "sweep": {"gammas": list(DEFAULT_GAMMAS)},
}


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ config

def _merge(base: dict, update: dict, where: str = "") -> dict:
    for key, value in update.items():
        if key not in base:
            raise ConfigError(f"unknown config key {where}{key}")
        if isinstance(base[key], dict) and isinstance(value, dict):
            _merge(base[key], value, f"{where}{key}.")
        else:
            base[key] = value
    return base


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(cfg: dict, item: str) -> None:
    """Apply ``a.b.c=value``; bare ``L1``-style keys are looked up in ``train``."""
    if "=" not in item:
        raise UsageError(f"override must look like key=value, got {item!r}")
    key, text = item.split("=", 1)
    parts = key.strip().split(".")
    if len(parts) == 1 and parts[0] not in cfg:
        for section in ("train", "cem", "eval", "basis"):
            if parts[0] in cfg[section]:
                parts = [section, parts[0]]
                break
    node = cfg
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            raise ConfigError(f"unknown config key {key}")
        node = node[p]
    if parts[-1] not in node:
        raise ConfigError(f"unknown config key {key}")
    node[parts[-1]] = _parse_value(text)


def load_config(path: str | None, overrides=()) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config not found: {path}")
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"config {path} must be a JSON object")
        _merge(cfg, doc)
        inst_ref = cfg["instance"]
        if inst_ref != "builtin:paper" and not Path(inst_ref).is_absolute():
            cfg["instance"] = str((p.parent / inst_ref).resolve())
    for item in overrides:
        apply_override(cfg, item)
    return cfg


def build_basis(cfg: dict, inst: ProblemInstance) -> BasisSpec:
    b = cfg["basis"]
    if b["terms"] is not None:
        terms = np.array(b["terms"], dtype=np.int64)
    else:
        terms = default_terms(b["kind"], inst.m, degree=b["degree"],
                              max_frequency=b["max_frequency"],
                              max_interactions=b["max_interactions"])
    return BasisSpec(b["kind"], terms, inst.s_max, bool(b["normalize"]))


def build_train_config(cfg: dict, inst: ProblemInstance, threads: int) -> TrainConfig:
    t = cfg["train"]
    try:
        return TrainConfig(basis=build_basis(cfg, inst), cem=CemConfig(**cfg["cem"]),
                           threads=threads, **t)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid training settings: {exc}") from None


def build_eval_config(cfg: dict, threads: int) -> EvalConfig:
    try:
        return EvalConfig(threads=threads, gamma=cfg["train"]["gamma"], **cfg["eval"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid evaluation settings: {exc}") from None


# ------------------------------------------------------------------ output

def run_dir(args, cfg: dict, default_name: str) -> Path:
    root = Path(args.out_root or os.environ.get(RUN_ROOT_ENV) or "run")
    name = args.name or cfg.get("name") or default_name
    out = root / name
    (out / "logs").mkdir(parents=True, exist_ok=True)
    (out / "csv").mkdir(parents=True, exist_ok=True)
    return out


def _attach_log(out: Path) -> logging.Handler:
    handler = logging.FileHandler(out / "logs" / "run.log")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
    logging.getLogger("stochcut").addHandler(handler)
    return handler


def _timestamp() -> str:
    return time.strftime("%Y%m%d-%H%M%S")


def _print_summary(reports) -> None:
    print(f"{'policy':<16}{'mean cost':>14}{'ci_lo':>14}{'ci_hi':>14}")
    for r in reports:
        print(f"{r.policy:<16}{r.mean:>14.2f}{r.ci_lo:>14.2f}{r.ci_hi:>14.2f}")


# ------------------------------------------------------------------ commands

def cmd_train(args) -> int:
    cfg = load_config(args.config, args.override or ())
    if args.seed is not None:
        cfg["train"]["seed"] = args.seed
    inst = load_instance(cfg["instance"])
    tcfg = build_train_config(cfg, inst, args.threads)
    out = run_dir(args, cfg, f"train-{_timestamp()}")
    handler = _attach_log(out)
    log.info("stochcut %s (%s kernels); config %s", __version__, BACKEND, json.dumps(cfg))
    try:
        run = train(inst, tcfg)
    except TrainingAborted as exc:
        exc.run.save(out / "artifact.json")
        log.error("training aborted: %s (partial artifact saved)", exc)
        print(f"error: trainer: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    finally:
        logging.getLogger("stochcut").removeHandler(handler)
        handler.close()
    run.config = {"instance": cfg["instance"], "basis": cfg["basis"], **run.config}
    run.save(out / "artifact.json")
    print(f"wrote {out / 'artifact.json'} ({len(run.thetas)} parameter vectors)")
    return EXIT_OK


def _parse_select(text: str):
    if text in ("best", "all"):
        return text
    try:
        idx = int(text)
    except ValueError:
        raise UsageError(f"--select takes best, all or a 1-based index, got {text!r}") from None
    if idx < 1:
        raise UsageError("--select index is 1-based")
    return idx


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config, args.override or ())
    if args.replications is not None:
        cfg["eval"]["replications"] = args.replications
    if args.seed is not None:
        cfg["eval"]["seed"] = args.seed
    ecfg = build_eval_config(cfg, args.threads)
    select = _parse_select(args.select)
    target = args.target
    out = run_dir(args, cfg, f"eval-{Path(target).stem}-{_timestamp()}")
    handler = _attach_log(out)
    try:
        if target in ("myopic", "random"):
            inst = load_instance(cfg["instance"])
            policy = MyopicPolicy(inst) if target == "myopic" else RandomPolicy(
                cfg["cem"]["rejection_cap"])
            reports = [simulate(inst, policy, ecfg)]
            chosen = reports[0]
        else:
            try:
                run = TrainRun.load(target)
            except StochcutError as exc:
                print(f"error: evaluate: {exc}", file=sys.stderr)
                return EXIT_RUNTIME
            inst = run.instance if run.instance is not None else load_instance(cfg["instance"])
            if isinstance(select, int):
                if select > len(run.thetas):
                    raise UsageError(f"artifact holds {len(run.thetas)} parameter vectors")
                sub = TrainRun(run.basis, [run.thetas[select - 1]], [], run.config)
                _, reports = reevaluate_run(inst, sub, ecfg)
                reports[0].policy = f"theta_{select}"
                chosen = reports[0]
            else:
                best, all_reports = reevaluate_run(inst, run, ecfg)
                chosen = all_reports[best]
                reports = all_reports if select == "all" else [chosen]
                log.info("best re-evaluated policy: theta_%d", best + 1)
    finally:
        logging.getLogger("stochcut").removeHandler(handler)
        handler.close()
    write_summary_csv(reports, out / "csv" / "summary.csv")
    write_costs_csv(chosen, out / "csv" / "costs.csv")
    write_inventory_csv(chosen, out / "csv" / "inventory.csv")
    _print_summary(reports)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = load_config(args.config, args.override or ())
    if args.gammas is not None:
        try:
            gammas = [float(g) for g in args.gammas.split(",") if g.strip()]
        except ValueError:
            raise UsageError(f"--gammas must be comma-separated numbers, got {args.gammas!r}")
        if not gammas:
            raise UsageError("--gammas is empty")
    else:
        gammas = cfg["sweep"]["gammas"]
    if not gammas:
        raise UsageError("no discount factors to sweep")
    if any(not 0.0 < g < 1.0 for g in gammas):
        raise UsageError("every discount factor must lie in (0, 1)")
    inst = load_instance(cfg["instance"])
    tcfg = build_train_config(cfg, inst, args.threads)
    ecfg = build_eval_config(cfg, args.threads)
    out = run_dir(args, cfg, f"sweep-{_timestamp()}")
    handler = _attach_log(out)
    try:
        rows = sweep_gamma(inst, gammas, tcfg, ecfg)
    finally:
        logging.getLogger("stochcut").removeHandler(handler)
        handler.close()
    write_gamma_sweep_csv(rows, out / "csv" / "gamma_sweep.csv")
    print(f"{'gamma':>8}{'mean cost':>14}{'ci_lo':>14}{'ci_hi':>14}")
    for r in rows:
        print(f"{r.gamma:>8.3f}{r.mean:>14.2f}{r.ci_lo:>14.2f}{r.ci_hi:>14.2f}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    try:
        run = TrainRun.load(args.artifact)
    except StochcutError as exc:
        print(f"error: inspect: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"basis: {run.basis.kind}, K={run.basis.K}; complete={run.complete}")
    if run.error:
        print(f"error: {run.error}")
    print(f"{'iter':>5}{'|theta|':>14}{'path':>8}{'cond(A)':>12}{'mean cost':>12}")
    for d in run.diagnostics:
        print(f"{d.iteration:>5}{d.theta_norm:>14.5g}{d.solver_path:>8}{d.condition:>12.3e}"
              f"{d.mean_cost:>12.2f}")
    return EXIT_OK


def cmd_validate(args) -> int:
    inst = load_instance(args.instance)
    print(f"ok: m={inst.m} items, n={inst.n} patterns, object length "
          f"{inst.patterns.object_length}, trim {inst.patterns.trim.tolist()}")
    return EXIT_OK


# ------------------------------------------------------------------ parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stochcut", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"stochcut {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="run config (JSON); built-in defaults if omitted")
            p.add_argument("--override", action="append", metavar="KEY=VALUE",
                           help="override a config entry by dotted path, e.g. train.L2=5000")
        p.add_argument("--out-root", help=f"output root (default ${RUN_ROOT_ENV} or ./run)")
        p.add_argument("--name", help="run directory name (default: timestamped)")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker threads (results do not depend on this)")

    p = sub.add_parser("train", help="run approximate policy iteration")
    common(p)
    p.add_argument("--seed", type=int, help="override train.seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="simulate a trained artifact or a baseline")
    p.add_argument("target", help="artifact path, 'myopic' or 'random'")
    common(p)
    p.add_argument("--select", default="best",
                   help="for artifacts: best (default), all, or a 1-based policy index")
    p.add_argument("--replications", type=int, help="override eval.replications")
    p.add_argument("--seed", type=int, help="override eval.seed")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="train and evaluate across discount factors")
    common(p)
    p.add_argument("--gammas", help="comma-separated discount factors")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("inspect", help="show an artifact's parameter norms and diagnostics")
    p.add_argument("artifact")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("validate", help="check an instance file")
    p.add_argument("instance", help="instance path or builtin:paper")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s: %(message)s")
    logging.getLogger("stochcut").setLevel(logging.INFO)
    if getattr(args, "threads", 1) is not None and getattr(args, "threads", 1) < 1:
        parser.error("--threads must be at least 1")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"stochcut: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, InstanceError) as exc:
        module = "instance" if isinstance(exc, InstanceError) else "config"
        print(f"error: {module}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StochcutError as exc:
        print(f"error: runtime: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
