"""Command-line front end.

Every command writes CSV (default) or JSON lines to stdout or ``--out``.
Output depends only on the arguments and the master seed, never on
``--threads`` or timing. Exit codes: 0 success, 1 verification failure,
2 usage error, 3 infeasible parameters, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import math
import os
import sys
from typing import Iterable, Optional, Sequence

from .construction import (
    Affine,
    BigJumpSpec,
    Constant,
    Tabulated,
    analytic_tail,
    bound_tail,
    example2_b_star,
    linear_grid,
    log_grid,
    uniform_lower_bound,
)
from .discrete import choose_mu_for_eps, estimate_chain_tail, make_discrete_params, random_walk_sup
from .errors import InfeasibleSpecError, NumericalError
from .rng import RngPolicy
from .simulation import estimate_tails, inject_jump_size_fault
from .suite import FULL, SCHEMA_VERSION, SMOKE, run_suite, sig6

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 1, 2, 3, 4

TAIL_COLUMNS = (
    "family", "mu", "sigma2", "h_param", "gamma", "a", "n", "successes",
    "p_hat", "ci_low", "ci_high", "analytic", "upper_bound", "lower_bound_prop2",
)

_FLAG_KEYS = {"log", "discrete", "with_uniform"}
# Checked after the config file is merged, so the file may supply them.
_REQUIRED = {"bound": ("gamma", "a")}


# ---------------------------------------------------------------------------
# Argument types


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("expected at least one number")
    return vals


def _positive_int(text: str) -> int:
    try:
        v = int(float(text)) if "e" in text.lower() else int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2**64)")
    return v


def _affine_b(text: str):
    return "auto" if text == "auto" else float(text)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


# ---------------------------------------------------------------------------
# Parser


def _default_seed() -> int:
    env = os.environ.get("SUPMAX_SEED")
    if env is None:
        return 0
    try:
        return _seed(env)
    except argparse.ArgumentTypeError as exc:
        raise SystemExit(f"supmax: SUPMAX_SEED: {exc}") from None


def _common(p: argparse.ArgumentParser, seed: int, threads: bool = True) -> None:
    p.add_argument("--config", metavar="FILE", help="key=value defaults; flags override")
    p.add_argument("--seed", type=_seed, default=seed, help="master seed (default: $SUPMAX_SEED or 0)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", metavar="FILE", help="write here instead of stdout")
    if threads:
        p.add_argument("--threads", type=_positive_int, default=None,
                       help="worker threads (results do not depend on this)")


def _family(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--const-a", type=float, help="constant jump target h = A")
    g.add_argument("--affine-b", type=_affine_b, help="affine target h(y) = B + y; 'auto' picks 16 sigma2/(9 mu)")
    g.add_argument("--table", metavar="FILE", help="piecewise-linear target from 'y,h' lines")
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--n", type=_positive_int, default=100_000)


def build_parser() -> argparse.ArgumentParser:
    seed = _default_seed()
    parser = argparse.ArgumentParser(
        prog="supmax", description="Tail bounds for suprema of drifting processes."
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("bound", help="evaluate 1/(1+gamma a)")
    p.add_argument("--gamma", type=float, help="required")
    p.add_argument("--a", type=float, help="required")
    p.add_argument("--discrete", action="store_true", help="label the row as the discrete-time bound")
    p.add_argument("--with-uniform", action="store_true", help="add the 1/(5(1+gamma a)) column")
    _common(p, seed, threads=False)

    p = sub.add_parser("simulate", help="Monte Carlo tail estimates for one big-jump spec")
    _family(p)
    p.add_argument("--a", type=_float_list, default=None,
                   help="level(s), comma separated (default: the target's level at y=0)")
    _common(p, seed)

    p = sub.add_parser("sweep", help="tail estimates on a grid of levels")
    _family(p)
    p.add_argument("--a-min", type=float, default=0.0)
    p.add_argument("--a-max", type=float, default=100.0)
    p.add_argument("--points", type=_positive_int, default=11)
    p.add_argument("--log", action="store_true", help="space levels evenly in log (needs --a-min > 0)")
    _common(p, seed)

    p = sub.add_parser("discrete", help="discrete-time construction approaching the bound")
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--mu-tilde", type=float, default=None, help="use this drift instead of choosing from --eps")
    p.add_argument("--n", type=_positive_int, default=100_000)
    _common(p, seed)

    p = sub.add_parser("kingman", help="mean supremum of a +/-1 random walk")
    p.add_argument("--p-up", type=float, default=0.45)
    p.add_argument("--n", type=_positive_int, default=100_000)
    p.add_argument("--steps-cap", type=_positive_int, default=10**7)
    _common(p, seed)

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--suite", choices=("smoke", "full"), default="smoke")
    p.add_argument("--inject-bug", action="store_true", help=argparse.SUPPRESS)
    _common(p, seed)
    return parser


def read_config(path: str) -> dict[str, str]:
    """Parse ``key=value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    if args.config:
        args = _merge_config(parser, sub, args, argv)
    missing = [k for k in _REQUIRED.get(args.command, ()) if getattr(args, k) is None]
    if missing:
        sub.error("the following arguments are required: " + ", ".join("--" + k for k in missing))
    return args


def _merge_config(parser, sub, args, argv) -> argparse.Namespace:
    try:
        cfg = read_config(args.config)
    except OSError as exc:
        sub.error(f"cannot read config: {exc}")
    except ValueError as exc:
        sub.error(str(exc))
    known = {a.dest for a in sub._actions}
    unknown = sorted(set(cfg) - known - {"config"})
    if unknown:
        sub.error(f"unknown config keys: {', '.join(unknown)}")
    for key in _FLAG_KEYS & set(cfg):
        try:
            cfg[key] = _bool(cfg[key])
        except ValueError as exc:
            sub.error(str(exc))
    cfg.pop("config", None)
    # string defaults go through each action's type converter
    families = ("const_a", "affine_b", "table")
    if any(getattr(args, k, None) is not None for k in families):
        # a family flag replaces whatever family the file named
        for k in families:
            cfg.pop(k, None)
    sub.set_defaults(**cfg)
    args = parser.parse_args(argv)
    if sum(getattr(args, k, None) is not None for k in families) > 1:
        sub.error("choose one of --const-a, --affine-b, --table")
    return args


# ---------------------------------------------------------------------------
# Output


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def render(rows: Iterable[dict], fmt_name: str, columns: Sequence[str]) -> str:
    rows = list(rows)
    buf = io.StringIO()
    if fmt_name == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([fmt(r.get(c)) for c in columns])
    else:
        for r in rows:
            rec = {"schema_version": SCHEMA_VERSION}
            rec.update({c: sig6(r.get(c)) for c in columns})
            buf.write(json.dumps(rec, allow_nan=False, default=str) + "\n")
    return buf.getvalue()


def emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


# ---------------------------------------------------------------------------
# Commands


def spec_from_args(args) -> BigJumpSpec:
    if args.table is not None:
        try:
            h = Tabulated.from_file(args.table)
        except OSError as exc:
            raise InfeasibleSpecError(f"cannot read table: {exc}") from None
    elif args.affine_b is not None:
        b = example2_b_star(args.mu, args.sigma2) if args.affine_b == "auto" else args.affine_b
        h = Affine(b)
    else:
        h = Constant(1.0 if args.const_a is None else args.const_a)
    return BigJumpSpec(args.mu, args.sigma2, h)


def tail_rows(spec: BigJumpSpec, levels: Sequence[float], args) -> list[dict]:
    policy = RngPolicy(args.seed)
    rows = []
    for est in estimate_tails(spec, levels, args.n, policy, args.threads):
        a = est.level_a
        rows.append({
            "family": spec.h.family, "mu": spec.mu, "sigma2": spec.sigma2, "h_param": spec.h.param,
            "gamma": spec.gamma, "a": a, "n": est.trials, "successes": est.successes,
            "p_hat": est.p_hat, "ci_low": est.ci_low, "ci_high": est.ci_high,
            "analytic": analytic_tail(spec, a), "upper_bound": bound_tail(spec.gamma, a),
            "lower_bound_prop2": uniform_lower_bound(spec.gamma, a),
        })
    return rows


def cmd_bound(args) -> int:
    row = {"setting": "discrete" if args.discrete else "continuous", "gamma": args.gamma,
           "a": args.a, "bound": bound_tail(args.gamma, args.a)}
    cols = ["setting", "gamma", "a", "bound"]
    if args.with_uniform:
        row["uniform_lower_bound"] = uniform_lower_bound(args.gamma, args.a)
        cols.append("uniform_lower_bound")
    emit(render([row], args.format, cols), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = spec_from_args(args)
    levels = args.a if args.a is not None else [float(spec.h(0.0))]
    emit(render(tail_rows(spec, levels, args), args.format, TAIL_COLUMNS), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.a_min < 0 or args.a_max < args.a_min:
        raise ValueError("need 0 <= --a-min <= --a-max")
    if args.log:
        if args.a_min <= 0:
            raise ValueError("--log needs --a-min > 0")
        levels = log_grid(args.a_min, args.a_max, args.points)
    else:
        levels = linear_grid(args.a_min, args.a_max, args.points)
    spec = spec_from_args(args)
    rows = tail_rows(spec, levels, args)
    # The uniform lower bound is a claim about the b* construction only.
    checked = isinstance(spec.h, Affine) and math.isclose(
        spec.h.b, example2_b_star(spec.mu, spec.sigma2), rel_tol=1e-12
    )
    failed = False
    for r in rows:
        if checked:
            ok = r["ci_high"] >= r["lower_bound_prop2"]
            r["verdict"] = "PASS" if ok else "FAIL"
            failed |= not ok
        else:
            r["verdict"] = None
    emit(render(rows, args.format, TAIL_COLUMNS + ("verdict",)), args.out)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_discrete(args) -> int:
    if args.mu_tilde is not None:
        mu_t = args.mu_tilde
    else:
        if not args.gamma > 0 or not args.a >= 0 or not args.eps > 0:
            raise InfeasibleSpecError("need gamma > 0, a >= 0, eps > 0")
        mu_t = choose_mu_for_eps(args.gamma, args.a, args.eps)
    params = make_discrete_params(args.gamma, args.a, mu_t)
    est = estimate_chain_tail(params, args.n, RngPolicy(args.seed), threads=args.threads)
    row = {
        "gamma": args.gamma, "a": args.a, "eps": None if args.mu_tilde is not None else args.eps,
        "mu_tilde": mu_t, "sigma2_tilde": params.sigma2_tilde, "a_tilde": params.a_tilde,
        "gamma_tilde": params.gamma_tilde, "target": params.hit_probability,
        "upper_bound": bound_tail(args.gamma, args.a), "n": est.trials,
        "successes": est.successes, "p_hat": est.p_hat, "ci_low": est.ci_low, "ci_high": est.ci_high,
    }
    emit(render([row], args.format, list(row)), args.out)
    return EXIT_OK


def cmd_kingman(args) -> int:
    res = random_walk_sup(args.p_up, args.steps_cap, args.n, RngPolicy(args.seed), threads=args.threads)
    m = res.mean
    row = {
        "p_up": res.p_up, "gamma": res.gamma, "n": m.trials, "estimate": m.estimate, "se": m.se,
        "ci_low": m.ci_low, "ci_high": m.ci_high, "exact": res.exact_mean,
        "kingman_bound": res.kingman_mean_bound, "capped": res.capped,
    }
    emit(render([row], args.format, list(row)), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    config = FULL if args.suite == "full" else SMOKE
    guard = inject_jump_size_fault() if args.inject_bug else contextlib.nullcontext()
    with guard:
        results = run_suite(RngPolicy(args.seed), config, args.threads)
    lines = "".join(json.dumps(r.record(), allow_nan=False) + "\n" for r in results)
    emit(lines, args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


COMMANDS = {
    "bound": cmd_bound, "simulate": cmd_simulate, "sweep": cmd_sweep,
    "discrete": cmd_discrete, "kingman": cmd_kingman, "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        print(f"supmax: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InfeasibleSpecError as exc:
        print(f"supmax: infeasible parameters: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"supmax: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
