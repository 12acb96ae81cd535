"""Command-line interface: ``ampcs {generate,solve,sweep,compare-mp,oracle}``.

Settings resolve as command-line flags > ``--config`` file > defaults.  The
config file holds one ``key = value`` per line (``#`` starts a comment);
keys are flag names without the leading dashes, e.g. ``max-iters = 100``.

Exit status: 0 success, 2 configuration error, 3 runtime error.
"""
import argparse
import sys
import time

import numpy as np

from . import __version__, experiments, oracle
from ._io import csv_text, dumps_json
from .exceptions import ConfigurationError
from .model import ExperimentConfig, dump_instance, generate_instance, load_instance

EXIT_CONFIG = 2
EXIT_RUNTIME = 3

_VARIANT_TO_SOLVER = {"bp": "amp-bp", "lasso": "amp-lasso", "bayes": "amp-bayes",
                      "ista": "ista", "fista": "fista", "edge-mp": "edge-mp"}

DEFAULTS = {
    "N": 500, "n": 250, "k": 25, "ensemble": "rademacher", "amplitude": "pm1",
    "sigma": 0.0, "seed": 0, "trial-index": 0, "variant": "bp", "lambda": 0.0,
    "prior-eps": None, "prior-var": 1.0, "noise-var": None, "max-iters": 200,
    "tol": 1e-8, "tau0": None, "trials": 20, "deltas": "0.5", "rhos": "0.1",
    "solver": "bp", "iters": 10, "seeds": 5, "beta": None, "delta": 0.5, "rho": 0.1,
    "method": "fista", "jobs": None,
}

_CASTS = {
    "N": int, "n": int, "k": int, "seed": int, "trial-index": int, "trials": int,
    "max-iters": int, "iters": int, "seeds": int, "jobs": int,
    "sigma": float, "lambda": float, "prior-eps": float, "prior-var": float,
    "noise-var": float, "tol": float, "tau0": float, "beta": float,
    "delta": float, "rho": float,
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def read_config_file(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.lstrip("-").replace("_", "-")] = value
    return values


def _resolve(args):
    """Merge defaults, config file and explicit flags.

    The returned dict carries the set of keys that did not come from the
    defaults under ``"explicit"``.
    """
    settings = dict(DEFAULTS)
    explicit = set()
    if getattr(args, "config", None):
        from_file = read_config_file(args.config)
        settings.update(from_file)
        explicit.update(from_file)
    for key, value in vars(args).items():
        if value is not None and key not in ("command", "config"):
            settings[key.replace("_", "-")] = value
            explicit.add(key.replace("_", "-"))
    if isinstance(settings.get("N"), str) and "," in settings["N"]:
        settings["N"] = [int(v) for v in _float_list(settings["N"])]
    for key, cast in _CASTS.items():
        value = settings.get(key)
        if value in (None, "None"):
            settings[key] = None
            continue
        if isinstance(value, list):
            continue
        try:
            settings[key] = cast(value)
        except (TypeError, ValueError):
            raise ConfigurationError(f"invalid value for {key}: {value!r}") from None
    settings["explicit"] = explicit
    return settings


def _float_list(text):
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    items = [t for t in str(text).replace(" ", "").split(",") if t]
    try:
        return [float(t) for t in items]
    except ValueError:
        raise ConfigurationError(f"invalid number list {text!r}") from None


def _experiment_config(s, solver=None):
    solver = solver or _VARIANT_TO_SOLVER.get(s["variant"], s["variant"])
    return ExperimentConfig(
        N=s["N"], n=s["n"], k=s["k"], ensemble=s["ensemble"], amplitude=s["amplitude"],
        sigma=s["sigma"], lam=s["lambda"], solver=solver, max_iters=s["max-iters"],
        tol=s["tol"], seed=s["seed"], trials=s["trials"], tau0=s["tau0"],
        prior_eps=s["prior-eps"], prior_var=s["prior-var"], noise_var=s["noise-var"])


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _write_manifest(path, command, settings, wall_times, outputs):
    if not path:
        return
    manifest = {
        "tool_version": __version__,
        "command": command,
        "config": {k: v for k, v in sorted(settings.items())
                   if k not in ("manifest", "explicit")},
        "wall_time_seconds": wall_times,
        "outputs": outputs,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_json(manifest))


def _instance(settings):
    if settings.get("instance"):
        return load_instance(settings["instance"])
    return generate_instance(_experiment_config(settings, solver="amp-bp"),
                             settings["trial-index"])


def cmd_generate(settings):
    inst = generate_instance(_experiment_config(settings, solver="amp-bp"),
                             settings["trial-index"])
    out = settings.get("out")
    if out in (None, "-"):
        sys.stdout.write(dumps_json(inst.to_dict()))
    else:
        dump_instance(inst, out)
    return 0


def cmd_solve(settings):
    cfg_inst = _instance(settings)
    s = dict(settings)
    if settings.get("instance"):
        s.update(N=cfg_inst.N, n=cfg_inst.n, k=min(cfg_inst.k or 0, cfg_inst.n),
                 sigma=cfg_inst.sigma)
    cfg = _experiment_config(s)
    t0 = time.perf_counter()
    record = experiments.solve_instance(cfg_inst, cfg)
    wall = time.perf_counter() - t0
    _emit(record.to_json(), settings.get("out"))
    _write_manifest(settings.get("manifest"), "solve", settings,
                    [{"seed": cfg.seed, "trial_index": settings["trial-index"],
                      "seconds": wall}], [settings.get("out") or "-"])
    return 0


def cmd_sweep(settings):
    deltas, rhos = _float_list(settings["deltas"]), _float_list(settings["rhos"])
    if not deltas or not rhos:
        raise ConfigurationError("sweep grid is empty")
    solver = _VARIANT_TO_SOLVER.get(settings["solver"], settings["solver"])
    N = settings["N"]
    # placeholder dimensions; each cell overrides N, n, k
    base = _experiment_config(dict(settings, n=max(1, N - 1), k=0), solver=solver)
    jobs = settings["jobs"] or experiments.default_jobs()
    t0 = time.perf_counter()
    rows = experiments.sweep(deltas, rhos, N, settings["trials"], base, jobs=jobs)
    wall = time.perf_counter() - t0
    _emit(csv_text(experiments.SWEEP_COLUMNS, rows), settings.get("out"))
    _write_manifest(settings.get("manifest"), "sweep", settings, [{"seconds": wall}],
                    [settings.get("out") or "-"])
    return 0


def cmd_compare_mp(settings):
    if "N" not in settings["explicit"]:
        Ns = [400, 1600]
    else:
        Ns = settings["N"] if isinstance(settings["N"], list) else [settings["N"]]
    Ns = [int(v) for v in Ns]
    delta, rho = settings["delta"], settings["rho"]
    if {"n", "k"} & settings["explicit"]:
        if len(Ns) != 1:
            raise ConfigurationError("--n/--k need a single --N")
        delta = settings["n"] / Ns[0]
        rho = settings["k"] / settings["n"]
    if settings["iters"] < 0 or settings["seeds"] < 1:
        raise ConfigurationError("need --iters >= 0 and --seeds >= 1")
    rows, walls = [], []
    for N in Ns:
        for s in range(settings["seeds"]):
            seed = settings["seed"] + s
            t0 = time.perf_counter()
            r, _ = experiments.compare_mp(N, delta, rho, settings["iters"], seed,
                                          beta=settings["beta"], tau0=settings["tau0"],
                                          ensemble=settings["ensemble"],
                                          amplitude=settings["amplitude"])
            walls.append({"N": N, "seed": seed, "seconds": time.perf_counter() - t0})
            rows.extend(r)
    _emit(csv_text(experiments.COMPARE_COLUMNS, rows), settings.get("out"))
    _write_manifest(settings.get("manifest"), "compare-mp", settings, walls,
                    [settings.get("out") or "-"])
    return 0


def cmd_oracle(settings):
    inst = _instance(settings)
    method = settings["method"]
    if method == "exhaustive":
        x = oracle.exhaustive_l1(inst)
        result = {"method": method, "x": x, "l1_norm": float(np.abs(x).sum())}
    else:
        solve = {"fista": oracle.fista_lasso, "cd": oracle.coordinate_descent_lasso}.get(method)
        if solve is None:
            raise ConfigurationError(f"unknown oracle method {method!r}")
        tol = settings["tol"]
        sol = solve(inst, settings["lambda"], tol=tol)
        result = {"method": method, "lambda": settings["lambda"], "x": sol.x,
                  "objective": sol.objective, "iterations": sol.iterations,
                  "kkt_residual": sol.kkt_residual}
    _emit(dumps_json(result), settings.get("out"))
    return 0


def _add_instance_flags(p, multi_N=False):
    if multi_N:
        p.add_argument("--N", type=int, action="append", help="signal length (repeatable)")
    else:
        p.add_argument("--N", type=int, help="signal length")
    p.add_argument("--n", type=int, help="number of measurements")
    p.add_argument("--k", type=int, help="number of nonzeros")
    p.add_argument("--ensemble", choices=["rademacher", "gaussian"])
    p.add_argument("--amplitude", choices=["pm1", "gaussian"])
    p.add_argument("--sigma", type=float, help="noise standard deviation")
    p.add_argument("--seed", type=int)
    p.add_argument("--trial-index", type=int, dest="trial_index")
    p.add_argument("--config", help="key = value settings file")
    p.add_argument("--out", help="output path (default stdout)")


def build_parser():
    parser = _Parser(prog="ampcs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a problem instance as JSON")
    _add_instance_flags(p)

    p = sub.add_parser("solve", help="solve one instance, emit a TrialRecord as JSON")
    _add_instance_flags(p)
    p.add_argument("--instance", help="load the instance from a JSON file")
    p.add_argument("--variant", choices=sorted(_VARIANT_TO_SOLVER))
    p.add_argument("--lambda", type=float, dest="lambda")
    p.add_argument("--prior-eps", type=float, dest="prior_eps")
    p.add_argument("--prior-var", type=float, dest="prior_var")
    p.add_argument("--noise-var", type=float, dest="noise_var")
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--tol", type=float)
    p.add_argument("--tau0", type=float)
    p.add_argument("--manifest", help="write a run manifest JSON here")

    p = sub.add_parser("sweep", help="success rates over a (delta, rho) grid, CSV")
    _add_instance_flags(p)
    p.add_argument("--deltas", help="comma-separated undersampling ratios")
    p.add_argument("--rhos", help="comma-separated sparsity ratios k/n")
    p.add_argument("--trials", type=int)
    p.add_argument("--solver", choices=sorted(_VARIANT_TO_SOLVER))
    p.add_argument("--lambda", type=float, dest="lambda")
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--tol", type=float)
    p.add_argument("--tau0", type=float)
    p.add_argument("--jobs", type=int, help="worker processes (env AMPCS_JOBS)")
    p.add_argument("--manifest")

    p = sub.add_parser("compare-mp", help="edge message passing vs AMP discrepancy, CSV")
    _add_instance_flags(p, multi_N=True)
    p.add_argument("--delta", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--iters", type=int)
    p.add_argument("--seeds", type=int, help="number of seeds, starting at --seed")
    p.add_argument("--beta", type=float, help="finite beta (default: infinite)")
    p.add_argument("--tau0", type=float)
    p.add_argument("--manifest")

    p = sub.add_parser("oracle", help="reference solvers on one instance, JSON")
    _add_instance_flags(p)
    p.add_argument("--instance")
    p.add_argument("--method", choices=["fista", "cd", "exhaustive"])
    p.add_argument("--lambda", type=float, dest="lambda")
    p.add_argument("--tol", type=float)
    return parser


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "sweep": cmd_sweep,
            "compare-mp": cmd_compare_mp, "oracle": cmd_oracle}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        settings = _resolve(args)
        if args.command == "oracle":
            if settings["method"] != "exhaustive" and not settings["lambda"]:
                raise ConfigurationError("oracle fista/cd need --lambda > 0")
            if "tol" not in settings["explicit"]:
                settings["tol"] = 1e-10
        return COMMANDS[args.command](settings)
    except (_UsageError, ConfigurationError) as exc:
        print(f"ampcs: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"ampcs: I/O error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - surfaced as a runtime failure
        print(f"ampcs: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
