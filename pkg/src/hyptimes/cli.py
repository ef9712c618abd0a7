"""Command line entry point: ``hyptimes <command> [--config FILE] [--key value ...]``.

Exit codes: 0 success, 2 configuration error, 3 numeric or sampling error,
4 invariant-suite failure.
"""

from __future__ import annotations

import argparse
import io
import json
import logging
import math
import sys
import time
from fractions import Fraction

import numpy as np

from .config import COMMANDS, DEFAULTS, SCHEMA_VERSION, ExperimentConfig, RunReport, parse_config
from .errors import ConfigError, HypTimesError

log = logging.getLogger("hyptimes")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_INVARIANT = 0, 2, 3, 4


def _num(v) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return repr(float(v))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _summary_path(cfg: ExperimentConfig):
    if cfg.summary:
        return cfg.summary
    if cfg.output and cfg.output != "-":
        return cfg.output.rsplit(".", 1)[0] + ".json"
    return None


def _run_scan(cfg):
    from .dynamics import orbit_trace
    from .hyperbolic import scan_hyperbolic_times

    fmap, params = cfg.build_map(), cfg.ht_params()
    trace = orbit_trace(fmap, cfg.x0, cfg.N, params.delta)
    res = scan_hyperbolic_times(trace, params)
    rows = ([str(n), str(int(f)), _num(p), _num(m)]
            for n, f, p, m in zip(range(1, res.N + 1), res.flags, res.prefix, res.cond2_margin))
    summary = {"first": res.first if isinstance(res.first, int) else None,
               "count": int(res.times.size), "valid": trace.valid}
    return {cfg.output: _csv(["n", "flag", "P_n", "cond2_margin"], rows)}, summary, len(trace)


def _run_h_stats(cfg):
    from .hstats import HHistogram, h_samples, lp_moment, tail_double_sum, tail_exponent_fit
    from .errors import InsufficientDataError

    fmap, params = cfg.build_map(), cfg.ht_params()
    h = h_samples(fmap, params, cfg.n_samples, cfg.T, cfg.seed)
    hist = HHistogram.from_h(h, cfg.T, cfg.seed)
    moment = lp_moment(hist, cfg.p)
    try:
        tail_p = tail_exponent_fit(hist, cfg.k_min)
    except InsufficientDataError:
        tail_p = None
    summary = {
        "schema_version": SCHEMA_VERSION,
        "p": cfg.p,
        "moment_p": moment.truncated_moment,
        "moment_lower_bound": moment.lower_bound,
        "censored": hist.censored,
        "tail_fit_p": tail_p,
        "double_sum": tail_double_sum(hist, cfg.i_max or cfg.T),
    }
    if cfg.T_grid:
        grid = sorted(t for t in cfg.T_grid if t <= cfg.T)
        h_eff = np.where(h == 0, np.iinfo(np.int64).max, h)
        summary["growth"] = [[t, float(np.minimum(h_eff, t).sum() / h.size)] for t in grid]
    rows = ([str(k), _num(m)] for k, m in zip(range(1, cfg.T + 1), hist.mass))
    out = {cfg.output: _csv(["k", "mass"], rows)}
    path = _summary_path(cfg)
    if path:
        out[path] = _dumps(summary)
    steps = int(np.where(h == 0, cfg.T, h).sum())
    return out, summary, steps


def _run_density(cfg):
    from .measures import pushforward_histogram, stationary_density, ulam_matrix

    fmap = cfg.build_map()
    if cfg.density_method == "ulam":
        op = ulam_matrix(fmap, cfg.k, cfg.samples_per_cell, cfg.seed, cfg.ulam_method)
        hist = stationary_density(op, cfg.tol, cfg.max_iter)
        steps = 0 if cfg.ulam_method != "montecarlo" and fmap.branches else cfg.k * cfg.samples_per_cell
    else:
        hist = pushforward_histogram(fmap, cfg.n, cfg.n_samples, cfg.bins, cfg.seed)
        steps = cfg.n * cfg.n_samples
    rows = ([_num(lo), _num(hi), _num(m), _num(d)]
            for lo, hi, m, d in zip(hist.edges[:-1], hist.edges[1:], hist.mass, hist.density))
    summary = {"bins": hist.bins, "sup_density": float(hist.density.max())}
    return {cfg.output: _csv(["bin_lo", "bin_hi", "mass", "density"], rows)}, summary, steps


def _run_birkhoff(cfg):
    from .dynamics import orbit_trace
    from .measures import birkhoff_expansion, birkhoff_recurrence

    fmap = cfg.build_map()
    trace = orbit_trace(fmap, cfg.x0, cfg.N, cfg.delta)
    N = len(trace)
    ns = sorted({2**i for i in range(int(math.log2(N)) + 1)} | {N}) if N else []
    rows = [[str(n), _num(birkhoff_expansion(trace, n)), _num(birkhoff_recurrence(trace, n))]
            for n in ns]
    summary = {"expansion_avg": float(rows[-1][1]) if rows else None,
               "recurrence_avg": float(rows[-1][2]) if rows else None, "valid": trace.valid}
    return {cfg.output: _csv(["n", "expansion_avg", "recurrence_avg"], rows)}, summary, N


def _run_series(cfg):
    from .counterexample import xn_sequence

    seq = xn_sequence(cfg.N + 1, cfg.mode)
    rows = []
    partial = Fraction(0) if cfg.mode == "exact" else 0.0
    exact_ok = cfg.mode == "exact"
    for n in range(1, cfg.N + 1):
        if exact_ok and n < len(seq.exact):
            x_n = seq.exact[n - 1]
            partial += n * (seq.exact[n] - x_n)
        else:
            if exact_ok:
                partial, exact_ok = float(partial), False
            x_n = float(seq.x[n - 1])
            yn = seq.y[n - 1]
            partial += n * (yn * yn / 4.0)
        rows.append([str(n), _num(x_n), _num(partial)])
    summary = {"partial_sum": float(partial), "exact_terms": len(seq.exact)}
    return {cfg.output: _csv(["n", "x_n", "partial_sum"], rows)}, summary, cfg.N


def _run_verify(cfg):
    from .counterexample import verify

    results = verify(seed=cfg.seed, sigma=cfg.sigma or math.exp(-0.25), delta=cfg.delta)
    lines = []
    for r in results:
        status = "PASS" if r.passed else ("FAIL" if r.enforced else "INFO")
        lines.append(f"{status}  {r.name}: {r.detail}\n")
    failed = [r.name for r in results if r.enforced and not r.passed]
    summary = {"passed": len(results) - len(failed), "failed": failed}
    return {cfg.output: "".join(lines)}, summary, 0


def _run_suggest(cfg):
    from .measures import suggest_sigma

    fmap = cfg.build_map()
    sigma, lyap = suggest_sigma(fmap, cfg.n, cfg.n_orbits, cfg.seed)
    summary = {"schema_version": SCHEMA_VERSION, "sigma": sigma, "lyapunov": lyap}
    out = {cfg.output: _dumps(summary)}
    return out, summary, cfg.n * cfg.n_orbits


RUNNERS = {
    "scan": _run_scan,
    "h-stats": _run_h_stats,
    "density": _run_density,
    "birkhoff": _run_birkhoff,
    "example-series": _run_series,
    "example-verify": _run_verify,
    "suggest-sigma": _run_suggest,
}


def run_experiment(cfg: ExperimentConfig) -> RunReport:
    """Run ``cfg.command``; output texts are returned in ``artifacts``, keyed
    by destination path (``-`` is stdout).  Nothing is written here."""
    start = time.perf_counter()
    try:
        artifacts, summary, steps = RUNNERS[cfg.command](cfg)
    except HypTimesError as exc:
        exc.experiment = f"{cfg.command} on {cfg.map} (seed {cfg.seed})"
        raise
    return RunReport(command=cfg.command, config=cfg.to_dict(), summary=summary,
                     artifacts=artifacts, wall_clock=time.perf_counter() - start, steps=steps)


def _write(path: str, text: str, stdout):
    if path == "-":
        stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyptimes", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value file; flags override it")
        for key, (_, default, help_text) in DEFAULTS.items():
            if key == "command":
                continue
            p.add_argument(f"--{key}", dest=key, default=None, metavar="VALUE",
                           help=f"{help_text} (default: {default})")
    return parser


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    overrides = {k: v for k, v in vars(args).items()
                 if k in DEFAULTS and v is not None}
    text = ""
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            print(f"error: cannot read config: {exc}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        cfg = parse_config(text, overrides, source=args.config or "config")
        report = run_experiment(cfg)
    except ConfigError as exc:
        for v in exc.violations:
            print(f"config error: {v}", file=sys.stderr)
        return EXIT_CONFIG
    except HypTimesError as exc:
        print(f"error in {getattr(exc, 'experiment', args.command)}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for path, body in report.artifacts.items():
        _write(path, body, stdout)
    if cfg.report:
        _write(cfg.report, report.to_json() + "\n", stdout)
    log.info("%s finished in %.2fs (%d steps)", cfg.command, report.wall_clock, report.steps)
    if cfg.command == "example-verify" and report.summary["failed"]:
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
