"""Command-line front end.

Subcommands: ``recover``, ``prob``, ``simulate``, ``phase``, ``coherence``.
Single results are JSON, grids are CSV (with ``#`` header lines carrying the
effective config). Exit codes: 0 ok, 1 usage or I/O error, 2 no solution,
3 resource budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .asymptotics import (
    FIGURE_PRESETS,
    PHASE_COLUMNS,
    frame_coherence_lower_bound,
    frame_coherence_limit,
    mutual_coherence,
    phase_grid,
)
from .dictionary import (
    DictionaryConfig,
    build_fourier_frame,
    random_banded,
    sample_signal,
    synthesize,
)
from .errors import ProSparseError, ResourceError
from .gaps import empirical_cdf, max_gaps, sample_supports
from .io import complex_to_json, config_to_json, load_config_file, load_fixture, signal_to_json
from .probability import METHODS, SCENARIOS, h, h_circular, success_prob
from .recovery import RecoveryOptions, recover
from .tolerances import DEFAULT_TOLERANCES

EXIT_OK, EXIT_USAGE, EXIT_NO_SOLUTION, EXIT_BUDGET = 0, 1, 2, 3
SIM_BLOCK = 1000


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for "no solution".
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_seed() -> int:
    raw = os.environ.get("PROSPARSE_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"PROSPARSE_SEED must be an integer, got {raw!r}")


def parse_pair(text: str):
    try:
        P, K = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected P,K got {text!r}")
    return P, K


def parse_values(text: str) -> List[float]:
    """``a,b,c`` or ``start:stop:count`` (inclusive linspace)."""
    try:
        if ":" in text:
            start, stop, count = text.split(":")
            return [round(v, 10) for v in np.linspace(float(start), float(stop), int(count)).tolist()]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list or start:stop:count, got {text!r}")


def parse_ints(text: str) -> List[int]:
    try:
        if ":" in text:
            start, stop = text.split(":")
            return list(range(int(start), int(stop) + 1))
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers or start:stop, got {text!r}")


def _common(p: argparse.ArgumentParser, seed: bool = True, jobs: bool = False) -> None:
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("-o", "--output", help="write here instead of stdout")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp for byte-stable output")
    if seed:
        p.add_argument("--seed", type=int, default=None, help="RNG seed (default $PROSPARSE_SEED or 0)")
    if jobs:
        p.add_argument("--jobs", type=int, default=1, help="worker processes; output does not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="prosparse", description="Sparse recovery in Vandermonde + banded dictionaries.")
    parser.add_argument("--version", action="version", version=f"prosparse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("recover", help="run the recovery sweep on a fixture or a planted signal")
    _common(p, jobs=True)
    p.add_argument("--signal", help="JSON fixture with the dictionary and either y or a signal")
    p.add_argument("--N", type=int)
    p.add_argument("--M", type=int, help="number of Vandermonde atoms (default N)")
    p.add_argument("--fourier", action="store_true", help="Fourier frame scaled by 1/sqrt(N); otherwise unscaled nodes")
    p.add_argument("--bandwidth", type=int, default=0, help="random banded Phi with this bandwidth")
    p.add_argument("--plant", type=parse_pair, help="synthesize a random P,K signal")
    p.add_argument("--strict", action="store_true", help="accept only pairs inside the worst-case bound")
    p.add_argument("--dual", action="store_true", help="second pass on the Fourier-dual measurements")
    p.add_argument("--exhaustive", action="store_true", help="scan every order instead of stopping early")
    p.add_argument("--max-order", type=int)
    p.add_argument("--budget", type=int, help="maximum number of windows to test")
    for name in ("zero", "rank", "root_merge", "snap", "residual", "fit"):
        p.add_argument(f"--tol-{name.replace('_', '-')}", dest=f"tol_{name}", type=float,
                       help=f"tolerance '{name}' (default {getattr(DEFAULT_TOLERANCES, name)})")

    p = sub.add_parser("prob", help="h_{N,K}(s) or a scenario success probability")
    _common(p, seed=False)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--K", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--method", choices=("auto",) + METHODS, default="auto")
    p.add_argument("--circular", action="store_true", help="circular maximum gap")
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--M", type=int)
    p.add_argument("--P", type=int)
    p.add_argument("--bandwidth", type=int, default=0)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of P(max gap < s)")
    _common(p, jobs=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--trials", type=int, default=5000)
    p.add_argument("--s", type=parse_ints, help="values of s (list or a:b); default 0..N")
    p.add_argument("--circular", action="store_true")
    p.add_argument("--compare", action="store_true", help="add the exact value next to each estimate")

    p = sub.add_parser("phase", help="phase-diagram grid of the gap criterion (CSV)")
    _common(p, jobs=True)
    p.add_argument("--figure", choices=sorted(FIGURE_PRESETS), help="preset delta and alpha/beta grids")
    p.add_argument("--delta", type=float)
    p.add_argument("--alpha", type=parse_values)
    p.add_argument("--beta", type=parse_values)
    p.add_argument("--N", type=int, default=10 ** 5)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--criterion", choices=("circular", "linear"), default="circular")
    p.add_argument("--bandwidth", type=int, default=0)

    p = sub.add_parser("coherence", help="mutual coherence of a Fourier frame, optionally with I_N")
    _common(p, seed=False)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--M", type=int)
    p.add_argument("--with-identity", action="store_true", help="use [Psi, I_N] instead of Psi")
    p.add_argument("--cross", action="store_true", help="only pairs across the two blocks")
    return parser


def _config_path(argv: List[str]) -> Optional[str]:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(parser: argparse.ArgumentParser, argv: List[str]) -> argparse.Namespace:
    """Parse ``argv``; values from ``--config`` become defaults that flags override."""
    path = _config_path(argv)
    command = argv[0] if argv else None
    subparsers = parser._subparsers._group_actions[0].choices
    if path and command in subparsers:
        subparser = subparsers[command]
        actions = {a.dest: a for a in subparser._actions}
        defaults = {}
        for key, raw in load_config_file(path).items():
            action = actions.get(key)
            if action is None or key in ("config", "help"):
                raise UsageError(f"{path}: unknown key {key!r} for '{command}'")
            if isinstance(action, argparse._StoreTrueAction):
                value = raw.lower() in ("1", "true", "yes", "on")
            else:
                try:
                    value = action.type(raw) if action.type is not None else raw
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise UsageError(f"{path}: bad value for {key!r}: {exc}")
            if action.choices is not None and value not in action.choices:
                raise UsageError(f"{path}: {key!r} must be one of {list(action.choices)}")
            defaults[key] = value
            action.required = False
        subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def _effective(args: argparse.Namespace) -> Dict:
    skip = {"config", "output", "no_timestamp", "jobs", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _meta(args: argparse.Namespace) -> Dict:
    out = {"tool": "prosparse", "version": __version__, "command": args.command, "config": _effective(args)}
    if not args.no_timestamp:
        out["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    return out


def _emit(args, text: str) -> None:
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_json(args, payload: Dict) -> None:
    _emit(args, json.dumps({**_meta(args), **payload}, indent=2, default=str) + "\n")


@contextmanager
def _executor(jobs: int):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            yield ex
    else:
        yield None


def _seed(args) -> int:
    if args.seed is None:
        args.seed = default_seed()
    return args.seed


def _dictionary(args) -> DictionaryConfig:
    if args.N is None:
        raise UsageError("recover needs --signal or --N")
    M = args.M or args.N
    config = build_fourier_frame(args.N, M, normalized=args.fourier)
    if args.bandwidth:
        rng = np.random.default_rng(np.random.SeedSequence([args.seed, 1]))
        config = config.with_phi(random_banded(args.N, args.bandwidth, rng), args.bandwidth)
    return config


def cmd_recover(args) -> int:
    _seed(args)
    planted = None
    if args.signal:
        config, planted, y = load_fixture(args.signal)
        if y is None:
            if planted is None:
                raise UsageError(f"{args.signal}: fixture has neither y nor a signal")
            y = synthesize(config, planted)
    else:
        config = _dictionary(args)
        if args.plant is None:
            raise UsageError("recover needs --plant P,K when no --signal is given")
        P, K = args.plant
        planted = sample_signal(config, P, K, np.random.SeedSequence([args.seed, 0]))
        y = synthesize(config, planted)
    tol = DEFAULT_TOLERANCES.override(**{name: getattr(args, f"tol_{name}")
                                         for name in ("zero", "rank", "root_merge", "snap", "residual", "fit")})
    options = RecoveryOptions(tolerances=tol, strict=args.strict, early_exit=not args.exhaustive,
                              dual=args.dual, max_order=args.max_order, window_budget=args.budget)
    with _executor(args.jobs) as ex:
        result = recover(y, config, options, executor=ex)
    solutions = []
    for sol in result.solutions:
        item = {"P": sol.P, "K": sol.K, **signal_to_json(sol.signal), "fit_residual": sol.fit_residual,
                "window_start": sol.window_start, "decisive": sol.decisive, "dual": sol.dual}
        solutions.append(item)
    report = {
        "dictionary": config_to_json(config),
        "status": result.status,
        "windows_tested": result.windows_tested,
        "budget_exceeded": result.budget_exceeded,
        "solutions": solutions,
    }
    if planted is not None:
        report["planted"] = signal_to_json(planted)
        report["planted_recovered"] = result.contains(planted)
    if args.signal is None:
        report["y"] = complex_to_json(y)
    _emit_json(args, report)
    if result.budget_exceeded:
        return EXIT_BUDGET
    return EXIT_OK if result.status == "recovered" else EXIT_NO_SOLUTION


def cmd_prob(args) -> int:
    if args.scenario:
        if args.K is None or args.P is None:
            raise UsageError("--scenario needs --P and --K")
        M = args.M or args.N
        res = success_prob(args.scenario, args.N, M, args.P, args.K, args.bandwidth, args.method)
        payload = res.as_dict()
        if res.exact:
            payload["lower_fraction"] = f"{res.lower.numerator}/{res.lower.denominator}"
            payload["upper_fraction"] = f"{res.upper.numerator}/{res.upper.denominator}"
        _emit_json(args, payload)
        return EXIT_OK
    if args.K is None or args.s is None:
        raise UsageError("prob needs --K and --s (or --scenario)")
    fn = h_circular if args.circular else h
    _emit_json(args, fn(args.N, args.K, args.s, args.method).as_dict())
    return EXIT_OK


def _simulate_block(task):
    N, K, n, seed, block = task
    rng = np.random.default_rng(np.random.SeedSequence([seed, block]))
    delta, gamma = max_gaps(sample_supports(N, K, n, rng), N)
    return delta, gamma


def cmd_simulate(args) -> int:
    seed = _seed(args)
    N, K, trials = args.N, args.K, args.trials
    if trials < 0 or not 0 <= K <= N:
        raise UsageError("need trials >= 0 and 0 <= K <= N")
    if args.circular and K == 0:
        raise UsageError("circular maximum gap is undefined for K = 0")
    # Fixed blocks with their own streams: --jobs changes scheduling, not results.
    tasks = [(N, K, min(SIM_BLOCK, trials - start), seed, i)
             for i, start in enumerate(range(0, trials, SIM_BLOCK))]
    with _executor(args.jobs) as ex:
        parts = list(ex.map(_simulate_block, tasks)) if ex else [_simulate_block(t) for t in tasks]
    stat = np.concatenate([g if args.circular else d for d, g in parts]) if parts else np.zeros(0)
    s_values = args.s if args.s is not None else list(range(N + 1))
    cdf = empirical_cdf(stat, s_values)
    rows = []
    for s, p in zip(s_values, cdf):
        row = {"s": int(s), "empirical": float(p),
               "stderr": float(np.sqrt(p * (1 - p) / trials)) if trials else None}
        if args.compare:
            fn = h_circular if args.circular else h
            row["exact"] = fn(N, K, int(s)).float_value
        rows.append(row)
    _emit_json(args, {"statistic": "Gamma" if args.circular else "Delta", "trials": trials, "cdf": rows})
    return EXIT_OK


def cmd_phase(args) -> int:
    seed = _seed(args)
    if args.figure:
        delta, alphas, betas = FIGURE_PRESETS[args.figure]
        delta = args.delta if args.delta is not None else delta
        alphas = args.alpha if args.alpha is not None else [float(a) for a in alphas]
        betas = args.beta if args.beta is not None else [float(b) for b in betas]
    else:
        if args.delta is None or args.alpha is None or args.beta is None:
            raise UsageError("phase needs --figure or all of --delta, --alpha, --beta")
        delta, alphas, betas = args.delta, args.alpha, args.beta
    args.delta, args.alpha, args.beta = delta, list(alphas), list(betas)
    with _executor(args.jobs) as ex:
        points = phase_grid(delta, alphas, betas, args.N, args.trials, seed, args.criterion,
                            args.bandwidth, executor=ex)
    buf = io.StringIO()
    meta = _meta(args)
    buf.write(f"# tool={meta['tool']} version={meta['version']} command=phase\n")
    buf.write(f"# config={json.dumps(meta['config'], sort_keys=True)}\n")
    if "timestamp" in meta:
        buf.write(f"# timestamp={meta['timestamp']}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PHASE_COLUMNS)
    for p in points:
        row = p.as_row()
        writer.writerow([repr(row[c]) if isinstance(row[c], float) else
                         int(row[c]) if isinstance(row[c], bool) else row[c] for c in PHASE_COLUMNS])
    _emit(args, buf.getvalue())
    return EXIT_OK


def cmd_coherence(args) -> int:
    N = args.N
    M = args.M or N
    psi = build_fourier_frame(N, M).psi_matrix()
    payload: Dict = {"N": N, "M": M, "redundancy": M / N}
    if args.with_identity:
        D = np.hstack([psi, np.eye(N)])
        payload["mu"] = mutual_coherence(D, split=M if args.cross else None)
        payload["reference"] = 1 / np.sqrt(N)
    else:
        if M < 2:
            raise UsageError("need at least two atoms")
        payload["mu"] = mutual_coherence(psi)
        if M > N:
            payload["lower_bound"] = frame_coherence_lower_bound(N, M)
            payload["asymptotic_limit"] = frame_coherence_limit(M / N)
    _emit_json(args, payload)
    return EXIT_OK


COMMANDS = {
    "recover": cmd_recover,
    "prob": cmd_prob,
    "simulate": cmd_simulate,
    "phase": cmd_phase,
    "coherence": cmd_coherence,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        try:
            args = _apply_config(parser, argv)
        except SystemExit as exc:
            return exc.code if isinstance(exc.code, int) else EXIT_USAGE
        return COMMANDS[args.command](args)
    except ResourceError as exc:
        print(f"prosparse: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (UsageError, ProSparseError, OSError) as exc:
        print(f"prosparse: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
