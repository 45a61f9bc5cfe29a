"""Command-line front end.

Exit status: 0 success, 1 usage or configuration error, 2 data error,
3 analysis degenerate (for example no CDW events).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import logging
import sys
from pathlib import Path

from . import __version__, kernels
from . import io as eio
from .cdw import cdw_figure_data, find_cdw_events, regression_table
from .chain import average_matrices, chain_product, estimate_intervals
from .config import Config, load_config
from .core import build_cohort, split_cohort, summarize_cohort
from .errors import AnalysisError, DataError, InvalidConfig, NoCdwEvents
from .fit import ModelVariant, VariantKind, fit_is_plausible, fit_series
from .paths import path_proportions
from .sim import OMITTED_YEAR_STATIONARY, REFERENCE_BASELINE, SimConfig, dropout_for_total, \
    reversible_chain, simulate_cohort
from .svg import bar_chart, line_chart

log = logging.getLogger("edss_markov")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class Run:
    """Collects emitted artifacts and writes the run manifest."""

    def __init__(self, command: str, argv: list[str], cfg: Config, out: Path):
        self.command = command
        self.argv = argv
        self.cfg = cfg
        self.out = out
        self.inputs: dict[str, str] = {}
        self.artifacts: list[str] = []
        self.warnings: list[str] = []
        self.started = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        out.mkdir(parents=True, exist_ok=True)

    def path(self, name: str) -> Path:
        self.artifacts.append(name)
        return self.out / name

    def add_input(self, p) -> None:
        self.inputs[str(p)] = eio.sha256(p)

    def warn(self, msg: str) -> None:
        log.warning(msg)
        self.warnings.append(msg)

    def finish(self, status: str = "ok") -> None:
        eio.write_json(
            {
                "tool": "edss-markov",
                "version": __version__,
                "backend": kernels.BACKEND,
                "command": self.command,
                "arguments": self.argv,
                "config": self.cfg.snapshot(),
                "seed": self.cfg.seed,
                "inputs": self.inputs,
                "artifacts": sorted(self.artifacts),
                "warnings": self.warnings,
                "status": status,
                "started_at": self.started,
                "finished_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            },
            self.out / "manifest.json",
        )


def _load_cohort(path, cfg: Config, run: Run):
    if path is None:
        raise UsageError("--input is required")
    run.add_input(path)
    cohort = build_cohort(eio.read_visits_csv(path), cfg.interval_months, cfg.horizon_months,
                          cfg.grouping())
    if cohort.dropped_visits:
        run.warn(f"{path}: dropped {cohort.dropped_visits} off-schedule visits")
    if cohort.truncated_visits:
        run.warn(f"{path}: ignored {cohort.truncated_visits} visits beyond month {cfg.horizon_months}")
    if cohort.excluded_subjects:
        run.warn(f"{path}: excluded {cohort.excluded_subjects} subjects without a month-0 visit")
    return cohort


def _tag(m) -> str:
    return f"{m.from_month:02d}_{m.to_month:02d}"


def _intervals(cohort, run, from_month=0):
    ms = estimate_intervals(cohort, from_month, skip_empty=True)
    have = {m.from_month for m in ms}
    for t in range(from_month, cohort.horizon_months, cohort.interval_months):
        if t not in have:
            run.warn(f"no transitions observed from month {t}; interval skipped")
    if not ms:
        raise DataError("no interval has any observed transition")
    for m in ms:
        for i, z in enumerate(m.zero_rows):
            if z:
                run.warn(f"interval {m.from_month}-{m.to_month}: group {cohort.grouping.labels[i]} "
                         "had no transitions, replaced by a self-loop")
    return ms


def cmd_estimate(args, cfg, run):
    cohort = _load_cohort(args.input, cfg, run)
    ms = _intervals(cohort, run, args.from_month[0])
    for m in ms:
        eio.write_matrix_csv(m, run.path(f"interval_{_tag(m)}.csv"))
    avg = average_matrices(ms, cfg.average_mode)
    eio.write_matrix_csv(avg, run.path("averaged.csv"))
    chained = []
    prefix = []
    for m in ms:
        if prefix and prefix[-1].to_month != m.from_month:
            break
        prefix.append(m)
        prod = chain_product(prefix)
        chained.append(prod)
        eio.write_matrix_csv(prod, run.path(f"chained_{_tag(prod)}.csv"))
    eio.write_json(
        {
            "labels": list(cohort.grouping.labels),
            "n_subjects": len(cohort),
            "intervals": [eio.matrix_to_dict(m) for m in ms],
            "averaged": eio.matrix_to_dict(avg),
            "chained": [eio.matrix_to_dict(m) for m in chained],
            "warnings": run.warnings,
        },
        run.path("report.json"),
    )


def _variants(args):
    kinds = list(VariantKind) if args.variant in (None, "all") else [VariantKind.parse(args.variant)]
    return [ModelVariant(k, f) for f in args.from_month for k in kinds]


def cmd_fit(args, cfg, run):
    disc = _load_cohort(args.input, cfg, run)
    if args.validation is not None:
        val = _load_cohort(args.validation, cfg, run)
    else:
        disc, val = split_cohort(disc, cfg.n_validation, cfg.seed)
        run.warn(f"no --validation given; set aside {len(val)} random subjects (seed {cfg.seed})")
    n = disc.grouping.n_groups
    header = (["month", "chi_sq", "df", "p_value", "n_remaining"]
              + [f"observed_{i}" for i in range(n)] + [f"expected_{i}" for i in range(n)])
    summary = {}
    all_series = {}
    for v in _variants(args):
        pts = fit_series(v, disc, val, cfg.average_mode, cfg.pooling)
        rows = [[p.month, eio.fmt(p.chi_sq), p.df, eio.fmt(p.p_value), p.n_remaining]
                + [int(x) for x in p.observed_counts] + [eio.fmt(x) for x in p.expected_counts]
                for p in pts]
        eio.write_rows_csv(run.path(f"fit_{v.name}.csv"), header, rows)
        series = [(p.month, p.chi_sq) for p in pts]
        all_series[v.name] = series
        run.path(f"fit_{v.name}.svg").write_text(
            line_chart({v.name: series}, f"Chi-squared fit: {v.name}", "month", "chi-squared"),
            encoding="utf-8")
        plausible = fit_is_plausible(pts)
        summary[v.name] = {
            "variant": v.kind.name,
            "from_month": v.from_month,
            "first_month": pts[0].month if pts else None,
            "fit": "plausible" if plausible else "poor",
            "points": [{"month": p.month, "chi_sq": p.chi_sq, "df": p.df, "p_value": p.p_value,
                        "excluded_cells": list(p.excluded)} for p in pts],
        }
        for p in pts:
            if p.excluded:
                run.warn(f"{v.name} month {p.month}: cells {list(p.excluded)} had zero expected count")
    run.path("fit_all.svg").write_text(
        line_chart(all_series, "Chi-squared fit by model variant", "month", "chi-squared"),
        encoding="utf-8")
    eio.write_json({"variants": summary, "n_discovery": len(disc), "n_validation": len(val),
                    "warnings": run.warnings}, run.path("report.json"))


def cmd_classify(args, cfg, run):
    cohort = _load_cohort(args.input, cfg, run)
    res = path_proportions(cohort, cfg.classify_level)
    eio.write_rows_csv(run.path("labels.csv"), ["subject_id", "label"],
                       [[sid, lab.value] for sid, lab in sorted(res.labels.items())])
    if res.excluded:
        run.warn(f"{len(res.excluded)} subjects had no follow-up visit and were not classified")
    d = res.to_dict()
    d["warnings"] = run.warnings
    eio.write_json(d, run.path("summary.json"))


def cmd_cdw(args, cfg, run):
    cohort = _load_cohort(args.input, cfg, run)
    rule = cfg.rule()
    found = find_cdw_events(cohort, rule)
    eio.write_rows_csv(
        run.path("cdw_events.csv"),
        ["subject_id", "onset_month", "trigger_edss", "threshold_edss", "regressed", "regression_month"],
        [[ev.subject_id, ev.onset_month, f"{ev.trigger_edss:.1f}", f"{ev.threshold_edss:.1f}",
          "true" if reg else "false", reg.month if reg else ""] for _, ev, reg in found],
    )
    if not found:
        raise NoCdwEvents("no subject met the confirmed disability worsening definition")
    ms = _intervals(cohort, run, args.from_month[0])
    avg = average_matrices(ms, cfg.average_mode)
    table = regression_table(cohort, avg, rule, cfg.regression_mode, cfg.regression_horizon_steps,
                             cfg.threshold_mode, cfg.representative_edss)
    eio.write_rows_csv(
        run.path("regression_table.csv"),
        ["edss_at_cdw", "expected", "observed", "n", "t_value", "p_value"],
        [[r.label, eio.fmt(r.expected), eio.fmt(r.observed), r.n, eio.fmt(r.t_value), eio.fmt(r.p_value)]
         for r in table.rows],
    )
    fig = cdw_figure_data(cohort, avg, table, rule, cfg.threshold_mode, cfg.representative_edss)
    eio.write_rows_csv(
        run.path("cdw_figure.csv"),
        ["group", "baseline_n", "cdw_observed", "cdw_predicted", "cdw_n", "regression_expected",
         "regression_observed"],
        [[f.label, f.baseline_n, eio.fmt(f.cdw_observed), eio.fmt(f.cdw_predicted), f.cdw_n,
          eio.fmt(f.regression_expected), eio.fmt(f.regression_observed)] for f in fig],
    )
    run.path("cdw_figure.svg").write_text(bar_chart(
        [f.label for f in fig],
        {"CDW observed": [f.cdw_observed for f in fig],
         "CDW predicted": [f.cdw_predicted for f in fig],
         "regression predicted": [f.regression_expected for f in fig],
         "regression observed": [f.regression_observed for f in fig]},
        "CDW and regression from CDW by EDSS group", "EDSS group", "proportion"), encoding="utf-8")
    eio.write_json({
        "n_subjects": len(cohort),
        "n_cdw": len(found),
        "aggregate_regression_observed": table.aggregate_observed,
        "aggregate_regression_expected": table.aggregate_expected,
        "rows": [r.__dict__ for r in table.rows],
        "warnings": run.warnings,
    }, run.path("report.json"))


def _sim_config(cfg: Config) -> SimConfig:
    g = cfg.grouping()
    init = REFERENCE_BASELINE if cfg.initial_distribution == "reference" else \
        tuple(float(x) for x in cfg.initial_distribution.split(","))
    if cfg.matrix == "calibrated":
        matrix = reversible_chain(OMITTED_YEAR_STATIONARY, cfg.mobility, g)
    else:
        matrix = eio.read_matrix_csv(cfg.resolve(cfg.matrix))
    n_steps = cfg.horizon_months // cfg.interval_months
    return SimConfig(cfg.n_subjects, init, matrix, dropout_for_total(cfg.dropout_total, n_steps),
                     cfg.horizon_months, cfg.interval_months, cfg.seed, cfg.representative_edss, g)


def cmd_simulate(args, cfg, run):
    sc = _sim_config(cfg)
    cohort = simulate_cohort(sc)
    eio.write_cohort_csv(cohort, run.path("cohort.csv"))
    eio.write_matrix_csv(sc.matrices, run.path("truth_matrix.csv"))


def cmd_report(args, cfg, run):
    cohort = _load_cohort(args.input, cfg, run)
    d = summarize_cohort(cohort).to_dict()
    d["paths"] = path_proportions(cohort, cfg.classify_level).to_dict()
    d["warnings"] = run.warnings
    eio.write_json(d, run.path("summary.json"))


COMMANDS = {
    "estimate": cmd_estimate,
    "fit": cmd_fit,
    "classify": cmd_classify,
    "cdw": cmd_cdw,
    "simulate": cmd_simulate,
    "report": cmd_report,
}


def _from_months(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --from-month {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="edss-markov", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=fn.__name__.replace("cmd_", ""))
        sp.add_argument("--config", help="key = value configuration file")
        sp.add_argument("--input", help="visits CSV (subject_id,month,edss)")
        sp.add_argument("--validation", help="validation cohort CSV (fit only)")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--seed", type=int, help="overrides the config seed")
        sp.add_argument("--variant", help="baseline, homogeneous, inhomogeneous or all")
        sp.add_argument("--from-month", type=_from_months, default=[0],
                        help="month modeling starts at; comma list for several fits")
        sp.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"edss-markov: usage error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    run = None
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg.seed = args.seed
        run = Run(args.command, argv, cfg, Path(args.out))
        if args.config:
            run.add_input(args.config)
        COMMANDS[args.command](args, cfg, run)
    except (UsageError, InvalidConfig) as exc:
        print(f"edss-markov: {type(exc).__name__}: {exc}", file=sys.stderr)
        status = 1
    except (DataError, OSError) as exc:
        print(f"edss-markov: {type(exc).__name__}: {exc}", file=sys.stderr)
        status = 2
    except AnalysisError as exc:
        print(f"edss-markov: {type(exc).__name__}: {exc}", file=sys.stderr)
        status = 3
    else:
        status = 0
    if run is not None:
        run.finish("ok" if status == 0 else f"exit {status}")
    return status


if __name__ == "__main__":
    sys.exit(main())
