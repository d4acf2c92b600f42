"""Command-line interface.

Subcommands mirror the library layers: ``quantile`` calibrates critical
values, ``band`` builds a CDF band over a score file, ``thresholds`` turns a
band into a threshold curve, ``simulate`` runs the replication harness, and
``compare`` emits side-by-side bands for plotting.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure
(infeasible constraint system or non-convergent special function).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import bands, harness, pac, rwset, scores

_STATISTICS = ("dw", "bjo", "ad", "eicker", "ks", "rw")
_BAND_METHODS = ("dkw", "dw", "bjo", "ad", "eicker", "rw")


def _parse_restrict(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"--restrict expects 'A0,A1', got {text!r}")
    return float(parts[0]), float(parts[1])


def _write_text(out: str | None, text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
            if not text.endswith("\n"):
                fh.write("\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simpac", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    q = sub.add_parser("quantile", help="Monte Carlo critical value table for a band statistic")
    q.add_argument("--statistic", required=True, choices=_STATISTICS)
    q.add_argument("--m", required=True, type=int, help="calibration sample size")
    q.add_argument("--delta", required=True, type=float, action="append", help="repeatable")
    q.add_argument("--nu", type=float, default=1.5)
    q.add_argument("--reps", type=int, default=100_000)
    q.add_argument("--seed", required=True, type=int)
    q.add_argument("--restrict", type=_parse_restrict, default=None, metavar="A0,A1")
    q.add_argument("--family", choices=("sparse", "all"), default="sparse", help="interval family (rw)")
    q.add_argument("--out", default=None, help="output path, '-' for stdout")

    b = sub.add_parser("band", help="build a CDF confidence band over a score file")
    b.add_argument("--method", required=True, choices=_BAND_METHODS)
    b.add_argument("--scores", required=True, help="CSV, one score per line")
    b.add_argument("--delta", required=True, type=float)
    b.add_argument("--nu", type=float, default=1.5)
    b.add_argument("--kappa-file", default=None, help="quantile-table JSON with the critical value")
    b.add_argument("--restrict", type=_parse_restrict, default=None, metavar="A0,A1")
    b.add_argument("--one-sided", action="store_true", help="lower-only variant (dkw)")
    b.add_argument("--family", choices=("sparse", "all"), default="sparse", help="interval family (rw)")
    b.add_argument("--reps", type=int, default=100_000, help="Monte Carlo size when no --kappa-file")
    b.add_argument("--seed", type=int, default=None, help="required when calibrating without --kappa-file")
    b.add_argument("--sidecar", default=None, help="audit JSON for the rw interval family")
    b.add_argument("--out", default=None)

    t = sub.add_parser("thresholds", help="threshold curve CSV from a band JSON")
    t.add_argument("--band", required=True)
    grid = t.add_mutually_exclusive_group(required=True)
    grid.add_argument("--alphas", default=None, help="comma-separated levels")
    grid.add_argument("--alpha-range", default=None, metavar="A0:A1:STEP")
    t.add_argument("--out", default=None)

    s = sub.add_parser("simulate", help="replication harness; JSON config in, report JSON + CSV out")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default="report", help="output prefix (writes PREFIX.json and PREFIX.csv)")

    c = sub.add_parser("compare", help="side-by-side band CSV over one score file")
    c.add_argument("--scores", required=True)
    c.add_argument("--delta", required=True, type=float)
    c.add_argument("--methods", default="dkw,dw,bjo,ad,eicker", help="comma-separated subset of "
                   + ",".join(_BAND_METHODS))
    c.add_argument("--nu", type=float, default=1.5)
    c.add_argument("--reps", type=int, default=20_000)
    c.add_argument("--seed", required=True, type=int)
    c.add_argument("--family", choices=("sparse", "all"), default="sparse")
    c.add_argument("--out", default=None)
    return parser


def _cmd_quantile(args) -> int:
    table = bands.quantile_table(
        args.statistic,
        args.m,
        args.delta,
        nu=args.nu,
        restriction=args.restrict,
        reps=args.reps,
        seed=args.seed,
        rw_family=args.family,
    )
    _write_text(args.out, json.dumps(table.to_dict(), indent=1))
    return 0


def _kappa_for(args, statistic: str, m: int) -> float:
    if args.kappa_file is not None:
        table = bands.load_quantile_table(args.kappa_file)
        if table.statistic != statistic:
            raise ValueError(f"table holds statistic {table.statistic!r}, band needs {statistic!r}")
        if table.m != m:
            raise ValueError(f"table was calibrated at m={table.m}, scores have m={m}")
        return table.kappa(args.delta)
    if args.seed is None:
        raise ValueError("either --kappa-file or --seed is required to calibrate this band")
    return bands.mc_quantile(
        statistic,
        m,
        args.delta,
        nu=args.nu,
        restriction=getattr(args, "restrict", None),
        reps=args.reps,
        seed=args.seed,
        rw_family=getattr(args, "family", "sparse"),
    )


def _cmd_band(args) -> int:
    score_set = scores.load_scores(args.scores)
    m = score_set.m
    if args.method == "dkw":
        band = bands.dkw_band(score_set, args.delta, sided="lower-only" if args.one_sided else "two-sided")
    elif args.method == "dw":
        kappa = _kappa_for(args, "dw", m)
        band = bands.dw_band(score_set, args.delta, kappa, nu=args.nu, restriction=args.restrict)
    elif args.method == "rw":
        if args.restrict is not None:
            raise ValueError("--restrict is not defined for the interval-family band")
        kappa = _kappa_for(args, "rw", m)
        band = rwset.rw_band(score_set, args.delta, kappa, all_intervals=(args.family == "all"))
        if args.sidecar:
            fam = rwset.build_family(score_set, all_intervals=(args.family == "all"))
            rwset.save_rw_sidecar(rwset.interval_bounds(score_set, fam, kappa), args.sidecar)
    else:
        if args.restrict is not None:
            raise ValueError(f"--restrict is only supported for the dw method, not {args.method!r}")
        kappa = _kappa_for(args, args.method, m)
        band = bands.comparison_band(score_set, args.delta, args.method, kappa)
    _write_text(args.out, json.dumps(band.to_dict(), indent=1))
    return 0


def _parse_alpha_grid(args) -> np.ndarray:
    if args.alphas is not None:
        return np.array([float(a) for a in args.alphas.split(",")])
    a0, a1, step = (float(v) for v in args.alpha_range.split(":"))
    if step <= 0 or a1 < a0:
        raise ValueError(f"bad --alpha-range {args.alpha_range!r}")
    return np.arange(a0, a1 + step / 2.0, step)


def _cmd_thresholds(args) -> int:
    band = bands.load_band(args.band)
    curve = pac.simultaneous_thresholds(band, _parse_alpha_grid(args))
    _write_text(args.out, curve.csv_text())
    return 0


def _cmd_simulate(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        config = harness.SimConfig.from_dict(json.load(fh))
    report = harness.evaluate_methods(config)
    report.to_json(args.out + ".json")
    report.per_alpha_csv(args.out + ".csv")
    sys.stdout.write(f"wrote {args.out}.json and {args.out}.csv\n")
    return 0


def _cmd_compare(args) -> int:
    score_set = scores.load_scores(args.scores)
    m = score_set.m
    wanted = [w.strip() for w in args.methods.split(",") if w.strip()]
    unknown = [w for w in wanted if w not in _BAND_METHODS]
    if unknown:
        raise ValueError(f"unknown methods {unknown}; available: {list(_BAND_METHODS)}")
    built: dict[str, bands.StepBand] = {}
    for name in wanted:
        if name == "dkw":
            built[name] = bands.dkw_band(score_set, args.delta)
            continue
        kappa = bands.mc_quantile(
            name,
            m,
            args.delta,
            nu=args.nu,
            reps=args.reps,
            seed=args.seed,
            rw_family=args.family,
        )
        if name == "dw":
            built[name] = bands.dw_band(score_set, args.delta, kappa, nu=args.nu)
        elif name == "rw":
            built[name] = rwset.rw_band(score_set, args.delta, kappa, all_intervals=(args.family == "all"))
        else:
            built[name] = bands.comparison_band(score_set, args.delta, name, kappa)
    header = ["index", "breakpoint"]
    for name in wanted:
        header += [f"{name}_lower", f"{name}_upper"]
    lines = [",".join(header)]
    bp = score_set.sorted_values
    for j in range(m + 1):
        row = [str(j), "" if j == 0 else f"{bp[j - 1]!r}"]
        for name in wanted:
            row += [f"{built[name].lower[j]:.10g}", f"{built[name].upper[j]:.10g}"]
        lines.append(",".join(row))
    _write_text(args.out, "\n".join(lines))
    return 0


_COMMANDS = {
    "quantile": _cmd_quantile,
    "band": _cmd_band,
    "thresholds": _cmd_thresholds,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (rwset.InfeasibleSystemError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
