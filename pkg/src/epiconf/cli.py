"""Command-line runner.

Exit status: 0 on success, 1 on a configuration error, 2 when an acceptance
criterion fails. Options may also come from a ``key=value`` file given with
``--config``; command-line flags win over file values.
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import acceptance
from . import experiments as ex
from .confidence import (conditional_density, full_confidence, implied_prior, interval,
                         marginal_density)
from .coverage import (IntervalProcedure, builtin_statistics, conditional_coverage,
                       marginal_coverage, relevant_scan, write_coverage_csv)
from .discrete import (BINOMIAL, FAMILIES, evans_coordinate, evans_mle_guess,
                       midp_coverage_experiment, write_midp_csv)
from .dutchbook import (MARKET, TWO_AGENT, FullConfidencePolicy, MarginalPolicy,
                        simulate_market, write_ledger_csv)
from .errors import ConfigError, EpiconfError
from .models import Dataset, get_model

EXIT_OK, EXIT_CONFIG, EXIT_ASSERT = 0, 1, 2
FIGURES = ("fig1", "fig2", "fig3", "figA2", "figA3")
EXAMPLES = tuple(f"example{i}" for i in range(1, 8))
RANDOMIZED = ("coverage", "scan", "dutchbook", "fig3", "figA2", "example2", "accept")
DEFAULT_GAMMA = 0.95


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration errors (exit 1), not assertion failures."""

    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

def read_config(path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for k, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{k}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _floats(text) -> list[float]:
    if text is None:
        return []
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise ConfigError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _model_params(text) -> dict:
    out = {}
    for item in (text or "").split(","):
        item = item.strip()
        if not item:
            continue
        if ":" not in item:
            raise ConfigError(f"model parameter {item!r} must look like name:value")
        k, v = item.split(":", 1)
        try:
            out[k] = int(v)
        except ValueError:
            try:
                out[k] = float(v)
            except ValueError:
                out[k] = v
    return out


def _out_path(args, default_name: str) -> Path:
    out = Path(args.out) if args.out else Path(default_name)
    if out.suffix != ".csv":
        out = out / default_name
    parent = out.parent
    try:
        parent.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {parent}: {exc}") from None
    if not os.access(parent, os.W_OK):
        raise ConfigError(f"output directory {parent} is not writable")
    return out


def _sibling(path: Path, tag: str) -> Path:
    return path.with_name(f"{path.stem}_{tag}{path.suffix}")


# ---------------------------------------------------------------------------
# procedures for the coverage commands
# ---------------------------------------------------------------------------

def procedure_for(model, gamma: float, n: int):
    """The interval (or guess) whose coverage the CLI measures for ``model``."""
    name = model.name
    if name == "normal_location":
        return ex.normal_ci_procedure(gamma, n)
    if name == "discrete_uniform_triple":
        return ex.triple_interval()
    if name == "uniform_shift":
        return IntervalProcedure("one_sided", lambda s: (s[:, 0] - gamma, s[:, 0]))
    if name == "curved_normal":
        return ex.curved_cf_procedure(n, gamma)
    if name == "evans_2x2":
        return evans_mle_guess()
    raise ConfigError(f"no default interval procedure for model {name!r}")


def _candidates(model, names):
    if model.name == "evans_2x2":
        pool = {"y1": evans_coordinate(1), "y2": evans_coordinate(2)}
    else:
        pool = builtin_statistics(model)
        if model.name == "discrete_uniform_triple":
            pool["range"] = ex.range_statistic()
        if model.name == "curved_normal":
            pool["ancillary"] = ex.curved_ancillary()
    if not names:
        return list(pool.values())
    missing = [k for k in names if k not in pool]
    if missing:
        raise ConfigError(f"unknown candidate statistics {missing}; known: {sorted(pool)}")
    return [pool[k] for k in names]


def _theta_grid(args, model):
    grid = _floats(args.theta)
    if grid:
        return np.array(grid)
    defaults = {"discrete_uniform_triple": [3, 4, 5], "evans_2x2": [1, 2]}
    if model.name in defaults:
        return np.array(defaults[model.name], dtype=float)
    raise ConfigError("--theta is required for this model (comma-separated grid)")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _gamma(args) -> float:
    g = DEFAULT_GAMMA if args.gamma is None else args.gamma
    if not 0 < g < 1:
        raise ConfigError(f"--gamma must lie in (0, 1), got {g}")
    return g


def cmd_confdist(args):
    args.gamma = _gamma(args)
    model = get_model(args.model, **_model_params(args.model_params))
    y = _floats(args.data)
    if not y:
        raise ConfigError("confdist needs --data")
    data = model.check_data(Dataset(tuple(y)))
    kind = args.kind
    if kind == "marginal":
        cd = marginal_density(model, model.statistic(data), n=data.n)
    elif kind == "conditional":
        cd = conditional_density(model, data)
    elif kind == "full":
        prior = implied_prior(model, data.subset(0))
        cd = full_confidence(prior, model, data)
    else:
        raise ConfigError(f"unknown confidence kind {kind!r}")
    ci = interval(cd, args.gamma)
    out = _out_path(args, f"confdist_{model.name}_{kind}.csv")
    ex.write_columns(out, {"theta": cd.grid, "density": cd.values, "cdf": cd.cdf(cd.grid)})
    print(f"{kind} confidence for {model.describe()}: {args.gamma:g} interval "
          f"({ci.lower:.6g}, {ci.upper:.6g}), mode {cd.mode():.6g}")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_coverage(args, scan: bool = False):
    model = get_model(args.model, **_model_params(args.model_params))
    n = args.n or (2 if model.name == "discrete_uniform_triple" else 1)
    grid = _theta_grid(args, model)
    if args.gamma is None and model.name == "discrete_uniform_triple":
        args.gamma = 7 / 9          # the range interval's exact marginal coverage at n = 2
    args.gamma = _gamma(args)
    proc = procedure_for(model, args.gamma, n)
    if scan:
        reports = relevant_scan(model, proc, _candidates(model, args.candidates), grid,
                                args.gamma, n_sim=args.nsim, seed=args.seed, n=n,
                                workers=args.workers)
        out = _out_path(args, f"scan_{model.name}.csv")
        _write_scan(reports, args.gamma, out)
        for r in reports:
            print(f"{r.candidate:>10s} bin {r.bin_id:2d} [{r.bin_lo:.4g}, {r.bin_hi:.4g}] "
                  f"{r.verdict} eps={r.epsilon_hat:.4g}")
    else:
        stats = _candidates(model, args.candidates) if args.candidates else None
        if stats:
            rep = conditional_coverage(model, proc, stats[0], grid, args.gamma, n_sim=args.nsim,
                                       seed=args.seed, n=n, workers=args.workers)
        else:
            rep = marginal_coverage(model, proc, grid, args.gamma, n_sim=args.nsim,
                                    seed=args.seed, n=n, workers=args.workers)
        out = _out_path(args, f"coverage_{model.name}.csv")
        write_coverage_csv(rep, out)
        for th, c, se in zip(rep.theta_grid, rep.estimates, rep.std_errors):
            print(f"theta={th:g} coverage={c:.6f} se={se:.2g}")
    print(f"wrote {out}")
    return EXIT_OK


def _write_scan(reports, gamma, out):
    import csv
    with open(out, "w", newline="") as fh:
        fh.write("# schema=1\n")
        w = csv.writer(fh)
        w.writerow(["theta", "bin_id", "bin_lo", "bin_hi", "n", "coverage", "stderr", "nominal",
                    "candidate", "verdict"])
        for r in reports:
            for th, cnt, cov, se, _ in r.table:
                w.writerow([repr(th), r.bin_id, repr(r.bin_lo), repr(r.bin_hi), repr(cnt),
                            repr(cov), repr(se), repr(gamma), r.candidate, r.verdict])


def cmd_dutchbook(args):
    model = get_model(args.model or "discrete_uniform_triple")
    theta = _floats(args.theta)
    theta = int(theta[0]) if theta else 4
    agents = {"marginal": MarginalPolicy(), "full": FullConfidencePolicy()}
    mode = TWO_AGENT if args.two_agent else MARKET
    ledger = simulate_market(model, theta, agents, args.nsim, args.seed, mode=mode)
    out = _out_path(args, f"dutchbook_{mode}.csv")
    write_ledger_csv(ledger, out)
    for aid in agents:
        print(f"{aid}: cumulative profit {float(ledger.cumulative(aid)):.4f} over "
              f"{args.nsim} rounds")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_discrete(args):
    args.gamma = _gamma(args)
    family = args.family
    if family not in FAMILIES:
        raise ConfigError(f"--family must be one of {FAMILIES}")
    sizes = [int(v) for v in _floats(args.sizes)] or [10, 50, 100]
    exp = midp_coverage_experiment({family: tuple(sizes)}, args.gamma)
    out = _out_path(args, f"midp_{family}.csv")
    write_midp_csv(exp, out)
    for s in sizes:
        print(f"{family} size={s}: max |coverage - {args.gamma:g}| = "
              f"{exp.max_deviation(family, s):.4f}, sign changes {exp.sign_changes(family, s)}")
    print(f"wrote {out}")
    return EXIT_OK


def _figure_kwargs(name, args):
    kw = {}
    if name == "fig1":
        if args.n:
            kw["n"] = args.n
        if args.sum_t is not None:
            kw["sum_t"] = args.sum_t
    elif name in ("fig3", "figA2"):
        kw["seed"] = args.seed
        if args.n:
            kw["n"] = args.n
        th = _floats(args.theta)
        if th:
            kw["theta"] = th[0]
    elif name in ("fig2", "example4", "example6", "example7") and args.data:
        kw["y"] = tuple(_floats(args.data))
    elif name == "figA3":
        kw["gamma"] = args.gamma
    elif name == "example2":
        kw.update(gamma=args.gamma, seed=args.seed, workers=args.workers)
        if args.nsim:
            kw["n_sim"] = args.nsim
    return kw


def cmd_named(name, args):
    args.gamma = _gamma(args)
    res = ex.EXPERIMENTS[name](**_figure_kwargs(name, args))
    out = _out_path(args, f"{name}.csv")
    written = []
    tables = {k: v for k, v in res.tables.items() if isinstance(v, dict)}
    if tables:
        for tag, cols in tables.items():
            p = _sibling(out, tag)
            ex.write_columns(p, cols)
            written.append(p)
    else:
        ex.write_columns(out, res.columns)
        written.append(out)
    for k, v in res.checks.items():
        print(f"{k}: {v}")
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_accept(args):
    numbers = None if args.all or not args.criterion else [int(c) for c in args.criterion]
    overrides = {k[4:]: v for k, v in vars(args).items()
                 if k.startswith("tol_") and v is not None}
    results = acceptance.run(numbers, seed=args.seed, overrides=overrides)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_ASSERT


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _common(p):
    p.add_argument("--config", help="key=value file; flags override its values")
    p.add_argument("--model", help="model name, e.g. gamma_shape")
    p.add_argument("--model-params", help="model parameters as name:value,name:value")
    p.add_argument("--theta", help="theta value or comma-separated grid")
    p.add_argument("--n", type=int, help="sample size")
    p.add_argument("--gamma", type=float, help=f"confidence level (default {DEFAULT_GAMMA})")
    p.add_argument("--nsim", type=int, default=10_000, help="Monte Carlo replicates or rounds")
    p.add_argument("--seed", type=int, help="random seed; required by randomized commands")
    p.add_argument("--out", help="output CSV file or directory")
    p.add_argument("--workers", type=int, default=1, help="worker threads for simulation")
    p.add_argument("--data", help="observations, comma-separated")
    for key, default in acceptance.TOLERANCES.items():
        p.add_argument(f"--tol-{key.replace('_', '-')}", dest=f"tol_{key}",
                       type=type(default), default=None, help=f"tolerance (default {default})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="epiconf",
                                     description="Confidence distributions, implied priors, "
                                                 "coverage scans and betting-market checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("confdist", help="confidence density and interval for given data")
    _common(p)
    p.add_argument("--kind", default="full", choices=["marginal", "conditional", "full"])

    for name, helptext in (("coverage", "marginal or conditional coverage"),
                           ("scan", "relevant-subset scan over candidate statistics")):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        p.add_argument("--candidates", nargs="*", help="candidate statistic names")

    p = sub.add_parser("dutchbook", help="betting-market simulation")
    _common(p)
    p.add_argument("--two-agent", action="store_true", help="no market; trade against an "
                                                             "informed opponent")

    p = sub.add_parser("discrete", help="exact mid-P coverage curves")
    _common(p)
    p.add_argument("--family", default=BINOMIAL, help="binomial or negative_binomial")
    p.add_argument("--sizes", help="comma-separated sizes")

    for name in FIGURES + EXAMPLES:
        p = sub.add_parser(name, help=f"reproduce {name}")
        _common(p)
        p.add_argument("--sum-t", type=float, help="sum of log y - y (fig1)")
        p.add_argument("--exact", action="store_true", help="exact enumeration (default)")

    p = sub.add_parser("accept", help="run the acceptance criteria")
    _common(p)
    p.add_argument("--all", action="store_true", help="run every criterion (default)")
    p.add_argument("--criterion", nargs="*", help="criterion numbers to run")
    return parser


def _apply_config(parser, argv):
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    values = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]  # noqa: SLF001
    known = {a.dest: a for a in sub._actions}  # noqa: SLF001
    defaults = {}
    for key, raw in values.items():
        if key not in known:
            raise ConfigError(f"unknown config key {key!r}")
        act = known[key]
        if isinstance(act, argparse._StoreTrueAction):  # noqa: SLF001
            defaults[key] = raw.lower() in ("1", "true", "yes")
        elif act.nargs == "*":
            defaults[key] = raw.replace(",", " ").split()
        else:
            try:
                defaults[key] = act.type(raw) if act.type else raw
            except ValueError:
                raise ConfigError(f"config key {key!r}: bad value {raw!r}") from None
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            cmd = args.command
            if cmd in RANDOMIZED and args.seed is None:
                raise ConfigError(f"{cmd} needs an explicit --seed")
            if args.nsim is not None and args.nsim < 1:
                raise ConfigError("--nsim must be positive")
            if args.n is not None and args.n < 1:
                raise ConfigError("--n must be positive")
            if cmd == "confdist":
                return cmd_confdist(args)
            if cmd in ("coverage", "scan"):
                if not args.model:
                    raise ConfigError(f"{cmd} needs --model")
                return cmd_coverage(args, scan=cmd == "scan")
            if cmd == "dutchbook":
                return cmd_dutchbook(args)
            if cmd == "discrete":
                return cmd_discrete(args)
            if cmd == "accept":
                return cmd_accept(args)
            return cmd_named(cmd, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EpiconfError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
