"""Command-line experiment driver.

Subcommands::

    solve             self-play on a game, CSV trace of gaps and regrets
    exploit           alpha sweep of Nash-anchored exploitation, CSV
    demo-alternation  zero-regret but non-converging alternation example
    chart             log-scale SVG chart of CSV columns

Exit status: 0 on success, 2 on configuration errors, 3 on unsupported
algorithm/domain/loss combinations.  Output files are written atomically, so
a failed run never leaves a partial file behind.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import charts
from .exploit import ExploitConfig, default_alpha_grid, reference_profiles, sweep, SweepRow
from .games import InvalidParameter, load_game, perturb_game
from .losses import InvalidParameter as LossParameterError, regularizer_from_spec
from .minimizers import UnsupportedDomain, UnsupportedLossForm
from .solver import AVERAGING, MODES, SCHEDULES, TraceRow, alternation_counterexample, \
    parse_algorithm, solve

EXIT_OK, EXIT_CONFIG, EXIT_UNSUPPORTED = 0, 2, 3

SOLVE_DEFAULTS = dict(game="kuhn", algo_x="rmplus", algo_y="rmplus", mode="cfr",
                      schedule="simultaneous", averaging="uniform", reg="none", iters=1000,
                      gap_every=10, seed=0, out=None, perturb=0.0, parallel_sweep=1)
EXPLOIT_DEFAULTS = dict(game="kuhn", algo_x="ogd", iters=5000, seed=0, out=None,
                        alphas=None, threshold=5e-4, opponent_gap=0.1, anchor_gap=1e-3,
                        parallel_sweep=1)


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ helpers

def format_value(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "{:.12g}".format(float(v))


def csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([format_value(v) for v in r])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_config(path: str) -> Dict[str, str]:
    """Parse a ``key = value`` file (``#`` comments, dashes or underscores in keys)."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc))
    for n, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError("%s:%d: expected key=value" % (path, n))
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def merge_settings(args: argparse.Namespace, defaults: dict) -> dict:
    """Built-in defaults, overridden by the config file, overridden by flags."""
    settings = dict(defaults)
    if getattr(args, "config", None):
        for k, v in read_config(args.config).items():
            if k not in defaults:
                raise ConfigError("unknown config key %r" % (k,))
            settings[k] = v
    for k in defaults:
        v = getattr(args, k, None)
        if v is not None:
            settings[k] = v
    return settings


def _typed(settings: dict, key: str, cast, positive: bool = False, nonneg: bool = False):
    try:
        v = cast(settings[key])
    except (TypeError, ValueError):
        raise ConfigError("invalid value for %s: %r" % (key.replace("_", "-"), settings[key]))
    if positive and not v > 0:
        raise ConfigError("%s must be positive" % key.replace("_", "-"))
    if nonneg and not v >= 0:
        raise ConfigError("%s must be nonnegative" % key.replace("_", "-"))
    return v


def _choice(settings: dict, key: str, choices) -> str:
    v = str(settings[key])
    if v not in choices:
        raise ConfigError("%s must be one of %s, got %r" % (key.replace("_", "-"), ", ".join(choices), v))
    return v


def _game(spec: str, eps: float = 0.0):
    try:
        g = load_game(spec)
        return perturb_game(g, eps) if eps > 0 else g
    except (InvalidParameter, ValueError) as exc:
        raise ConfigError(str(exc))


def _algo(spec: str) -> str:
    try:
        kind, _ = parse_algorithm(spec)
    except ValueError as exc:
        raise ConfigError(str(exc))
    if kind not in ("rm", "rmplus", "ogd"):
        raise ConfigError("unknown algorithm %r (rm, rmplus, ogd:c)" % (spec,))
    return spec


def _out_path(out: Optional[str], tag: str, many: bool) -> Optional[str]:
    if out is None or not many:
        return out
    stem, ext = os.path.splitext(out)
    safe = tag.replace(":", "-").replace("/", "-")
    return "%s_%s%s" % (stem, safe, ext or ".csv")


# ------------------------------------------------------------------ commands

def cmd_solve(args) -> int:
    s = merge_settings(args, SOLVE_DEFAULTS)
    iters = _typed(s, "iters", int, positive=True)
    gap_every = _typed(s, "gap_every", int, positive=True)
    _typed(s, "seed", int)
    eps = _typed(s, "perturb", float, nonneg=True)
    workers = _typed(s, "parallel_sweep", int, positive=True)
    mode = _choice(s, "mode", MODES)
    schedule = _choice(s, "schedule", SCHEDULES)
    averaging = _choice(s, "averaging", AVERAGING)
    algo_x, algo_y = _algo(s["algo_x"]), _algo(s["algo_y"])
    base = _game(str(s["game"]), eps)
    regs = [r.strip() for r in str(s["reg"]).split(",") if r.strip()] or ["none"]
    games = []
    for r in regs:
        try:
            games.append(base.with_regularizers(regularizer_from_spec(base.treeplex_x, r),
                                                regularizer_from_spec(base.treeplex_y, r)))
        except (LossParameterError, ValueError) as exc:
            raise ConfigError("bad regularizer %r: %s" % (r, exc))

    def run(g):
        sp, rows = solve(g, iters, algo_x, algo_y, mode, schedule, gap_every)
        return sp, rows

    if workers > 1 and len(games) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, games))
    else:
        results = [run(g) for g in games]

    for reg, (sp, rows) in zip(regs, results):
        text = csv_text(TraceRow.FIELDS, [r.as_tuple() for r in rows])
        path = _out_path(s["out"], reg, len(regs) > 1)
        if path is None:
            sys.stdout.write(text)
        else:
            write_atomic(path, text)
            last = rows[-1]
            gap = last.gap_uniform if averaging == "uniform" else last.gap_linear
            print("%s reg=%s: %d iterations, %s-average gap %.6g -> %s"
                  % (s["game"], reg, last.iteration, averaging, gap, path))
    return EXIT_OK


def cmd_exploit(args) -> int:
    s = merge_settings(args, EXPLOIT_DEFAULTS)
    iters = _typed(s, "iters", int, positive=True)
    seed = _typed(s, "seed", int)
    threshold = _typed(s, "threshold", float, positive=True)
    opp_gap = _typed(s, "opponent_gap", float, positive=True)
    anchor_gap = _typed(s, "anchor_gap", float, positive=True)
    workers = _typed(s, "parallel_sweep", int, positive=True)
    kind, scale = parse_algorithm(_algo(s["algo_x"]), None)
    if s["alphas"] is None:
        alphas = default_alpha_grid()
    else:
        try:
            alphas = [float(a) for a in str(s["alphas"]).split(",")]
        except ValueError:
            raise ConfigError("alphas must be a comma-separated list of numbers")
        if any(a < 0 for a in alphas):
            raise ConfigError("alphas must be nonnegative")
        alphas = sorted(set(alphas), reverse=True)
    game = _game(str(s["game"]))
    opponent, anchor = reference_profiles(game, opp_gap, anchor_gap)
    cfg = ExploitConfig(max_iterations=iters, regret_threshold=threshold, seed=seed,
                        opponent=opponent, anchor=anchor, minimizer=kind, step_scale=scale)
    rows = sweep(game, alphas, cfg, workers)
    text = csv_text(SweepRow.FIELDS, [r.as_tuple() for r in rows])
    if s["out"] is None:
        sys.stdout.write(text)
    else:
        write_atomic(s["out"], text)
        print("%d alpha values -> %s" % (len(alphas), s["out"]))
    return EXIT_OK


def cmd_demo(args) -> int:
    if args.T < 1:
        raise ConfigError("T must be positive")
    rep = alternation_counterexample(args.T)
    print("alternation counterexample, %d rounds" % rep.rounds)
    print("average regret x: %r" % rep.average_regret_x)
    print("average regret y: %r" % rep.average_regret_y)
    print("average strategies: (%r, %r)" % (rep.average_x, rep.average_y))
    print("saddle-point residual of the average: %r" % rep.residual)
    return EXIT_OK


def cmd_chart(args) -> int:
    columns = [c.strip() for c in args.columns.split(",") if c.strip()]
    try:
        charts.emit_svg(args.csv, columns, args.out, title=args.title or "")
    except (charts.MissingColumn, charts.EmptyData, OSError, ValueError) as exc:
        raise ConfigError(str(exc).strip("'\""))
    print("wrote %s" % args.out)
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="laminar", description="Laminar regret solvers for "
                                "sequential decision problems and extensive-form games.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="self-play and record gap traces")
    s.add_argument("--game", help="kuhn | leduc:RANKS | goofspiel:N (default kuhn)")
    s.add_argument("--algo-x", dest="algo_x", help="rm | rmplus | ogd:c (default rmplus)")
    s.add_argument("--algo-y", dest="algo_y", help="rm | rmplus | ogd:c (default rmplus)")
    s.add_argument("--mode", help="cfr | brd (default cfr)")
    s.add_argument("--schedule", help="simultaneous | alternation")
    s.add_argument("--averaging", help="uniform | linear (used for the summary line)")
    s.add_argument("--reg", help="none | entropy:TAU | l2:BETA; a comma list runs a sweep")
    s.add_argument("--iters", help="number of iterations (default 1000)")
    s.add_argument("--gap-every", dest="gap_every", help="evaluation stride (default 10)")
    s.add_argument("--perturb", help="lower bound on every action probability (default 0)")
    s.add_argument("--seed", help="accepted for uniformity; self-play is deterministic")
    s.add_argument("--out", help="CSV path (default stdout)")
    s.add_argument("--config", help="key=value file; flags take precedence")
    s.add_argument("--parallel-sweep", dest="parallel_sweep",
                   help="worker threads for regularizer sweeps")
    s.set_defaults(func=cmd_solve)

    e = sub.add_parser("exploit", help="alpha sweep of anchored exploitation")
    e.add_argument("--game")
    e.add_argument("--algo-x", dest="algo_x", help="learner: rm | rmplus | ogd[:c] (default ogd)")
    e.add_argument("--alphas", help="comma-separated penalties (default 8 log-spaced in [1e-3, 1e2])")
    e.add_argument("--iters", help="iteration cap per alpha (default 5000)")
    e.add_argument("--threshold", help="average-regret stopping threshold (default 5e-4)")
    e.add_argument("--opponent-gap", dest="opponent_gap", help="gap of the opponent run (0.1)")
    e.add_argument("--anchor-gap", dest="anchor_gap", help="gap of the anchor run (1e-3)")
    e.add_argument("--seed")
    e.add_argument("--out")
    e.add_argument("--config")
    e.add_argument("--parallel-sweep", dest="parallel_sweep")
    e.set_defaults(func=cmd_exploit)

    d = sub.add_parser("demo-alternation", help="zero-regret alternation counterexample")
    d.add_argument("--T", type=int, default=100)
    d.set_defaults(func=cmd_demo)

    c = sub.add_parser("chart", help="log-scale SVG chart from a CSV trace")
    c.add_argument("csv")
    c.add_argument("--columns", default="gap_uniform,gap_linear")
    c.add_argument("--out", required=True)
    c.add_argument("--title")
    c.set_defaults(func=cmd_chart)
    return p


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except (UnsupportedDomain, UnsupportedLossForm) as exc:
        print("unsupported combination: %s" % exc, file=sys.stderr)
        return EXIT_UNSUPPORTED


if __name__ == "__main__":
    sys.exit(main())
