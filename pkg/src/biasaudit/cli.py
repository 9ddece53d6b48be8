"""Command-line interface: ``biasaudit {audit,simulate,corr,sweep,compare-tests}``.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 some attribute
not measurable (outputs are still written).
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import logging
import os
import sys

from . import __version__
from .audit import AuditConfig, compare_detectors, compare_test_strategies, correlate_with_proportions, run_audit, subsample_sweep
from .exceptions import BiasAuditError, ValidationError
from .report import OutputError, emit_matrix, emit_reports, emit_strategies, emit_sweep, rows_to_csv, to_json, _write_text
from .schema import read_schema
from .scores import read_scores, write_scores
from .simulate import load_sim_spec, simulate

logger = logging.getLogger("biasaudit")

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NOT_MEASURABLE = 0, 2, 3, 4


def _split_scores_arg(value):
    path, sep, name = value.rpartition(":")
    if sep and path and name and "/" not in name and "\\" not in name:
        return path, name
    return value, None


def _stem(path):
    return os.path.splitext(os.path.basename(path))[0]


def _load_tables(schema, score_args):
    tables, names = [], set()
    for arg in score_args:
        path, name = _split_scores_arg(arg)
        name = name or _stem(path)
        if name in names:
            raise ValidationError(f"duplicate detector name {name!r}; use PATH:NAME")
        names.add(name)
        try:
            tables.append(read_scores(path, schema, detector=name, dataset=_stem(path)))
        except BiasAuditError as exc:
            raise type(exc)(f"{path}: {exc}") from None
    return tables


def _eod_threshold(mode):
    if mode == "integrated":
        return None
    if mode.startswith("threshold="):
        try:
            return float(mode.split("=", 1)[1])
        except ValueError:
            pass
    raise ValidationError(f"--eod-mode must be 'integrated' or 'threshold=T', got {mode!r}")


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def cmd_audit(args):
    schema = read_schema(args.schema)
    tables = _load_tables(schema, args.scores)
    config = AuditConfig(
        alpha=args.alpha, n_tests=args.m, brisk_star_mode=args.brisk_star_mode,
        eod_threshold=_eod_threshold(args.eod_mode), compare=args.compare, max_skip=args.max_skip,
        attributes=args.attributes.split(",") if args.attributes else None,
        skip_binary_complements=args.skip_binary_complements, class_label=args.class_label,
        seed=args.seed,
    )
    report = run_audit(tables, config, metadata={"created_at": _now(), "output_dir": args.out})
    config_echo = dict(report.config, schema=args.schema, scores=list(args.scores))
    report = type(report)(config_echo, report.n_tests, report.threshold, report.tables, report.metadata)
    for path in emit_reports(report, args.out):
        logger.info("wrote %s", path)
    flagged = [f"{t.detector}:{r.attribute}" for t, r in report.results() if r.significant]
    print(f"{report.n_tests} test(s) at threshold {report.threshold}; significant: "
          f"{', '.join(flagged) if flagged else 'none'}")
    return EXIT_NOT_MEASURABLE if report.any_not_measurable else EXIT_OK


def cmd_simulate(args):
    schema = read_schema(args.schema)
    with open(args.spec, encoding="utf-8") as fh:
        spec = load_sim_spec(fh.read(), schema)
    table = simulate(spec)
    try:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_scores(table, fh)
    except OSError as exc:
        raise OutputError(f"cannot write {args.out}: {exc.strerror or exc}") from exc
    print(f"wrote {len(table)} records to {args.out} (prng {table.metadata['prng']}, seed {spec.seed})")
    return EXIT_OK


def read_proportions(path):
    out = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader, [])]
        if header[:2] != ["attribute", "proportion"]:
            raise ValidationError(f"{path}: row 1: expected header 'attribute,proportion'")
        for rowno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                value = float(row[1])
            except (IndexError, ValueError):
                raise ValidationError(f"{path}: row {rowno}: bad proportion") from None
            if not 0.0 <= value <= 1.0:
                raise ValidationError(f"{path}: row {rowno}: proportion {value} outside [0, 1]")
            out[row[0].strip()] = value
    return out


def _report_vectors(report_doc, metric):
    vectors = {}
    for t in report_doc["tables"]:
        vectors[t["detector"]] = {
            a["attribute"]: (a["bias"] or {}).get(metric) for a in t["attributes"]
        }
    return vectors


def cmd_corr(args):
    path = os.path.join(args.reports, "report.json") if os.path.isdir(args.reports) else args.reports
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: malformed report ({exc.msg})") from None
    n_detectors = len(doc.get("tables", []))
    if n_detectors < 2 and not args.proportions:
        raise ValidationError("need at least two detectors in the report, or --proportions")
    written = []
    if n_detectors >= 2:
        for metric in ("brisk", "brisk_star"):
            matrix = compare_detectors(_report_vectors(doc, metric), metric, args.method)
            written += emit_matrix(matrix, args.out)
    if args.proportions:
        proportions = read_proportions(args.proportions)
        rows = []
        for detector, vec in _report_vectors(doc, "brisk").items():
            result, missing = correlate_with_proportions(vec, proportions, args.method)
            rows.append({"detector": detector, "coefficient": result.coefficient, "n": result.n,
                         "method": result.method, "missing": ";".join(missing)})
        os.makedirs(args.out, exist_ok=True)
        written.append(_write_text(os.path.join(args.out, "proportions.csv"),
                                   rows_to_csv(rows, ("detector", "coefficient", "n", "method", "missing"))))
        written.append(_write_text(os.path.join(args.out, "proportions.json"), to_json({"correlations": rows})))
    for p in written:
        logger.info("wrote %s", p)
    return EXIT_OK


def cmd_sweep(args):
    schema = read_schema(args.schema)
    (table,) = _load_tables(schema, [args.scores])
    try:
        fractions = [float(f) for f in args.fractions.split(",")]
    except ValueError:
        raise ValidationError(f"bad --fractions {args.fractions!r}") from None
    sweep = subsample_sweep(table, fractions, args.reps, args.seed)
    emit_sweep(sweep, args.out)
    for p in sweep.points:
        print(f"fraction {p.fraction}: mean |EOD| {p.mean} std {p.std} (failed {p.failed_repetitions})")
    return EXIT_OK


def cmd_compare_tests(args):
    schema = read_schema(args.schema)
    (table,) = _load_tables(schema, [args.scores])
    comparisons = compare_test_strategies(table)
    emit_strategies(comparisons, args.out)
    for c in comparisons[:10]:
        d = c.to_dict()
        print(f"{c.attribute}: classical p={d['classical_p']} paired p={d['paired_p']}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="biasaudit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("audit", help="bias report for one or more score tables")
    p.add_argument("--schema", required=True)
    p.add_argument("--scores", required=True, action="append", metavar="CSV[:NAME]")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--m", type=int, default=None, help="Bonferroni denominator (default: executed tests)")
    p.add_argument("--brisk-star-mode", choices=("signed", "literal"), default="signed")
    p.add_argument("--eod-mode", default="integrated", help="integrated | threshold=T")
    p.add_argument("--compare", default="pooled", help="pooled | pairwise=LABEL")
    p.add_argument("--max-skip", type=float, default=0.1)
    p.add_argument("--attributes", default=None, help="comma-separated attribute names")
    p.add_argument("--skip-binary-complements", action="store_true")
    p.add_argument("--class", dest="class_label", choices=("synthetic", "real"), default="synthetic")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("simulate", help="draw a synthetic score table")
    p.add_argument("--schema", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("corr", help="detector and training-proportion correlations")
    p.add_argument("--reports", required=True)
    p.add_argument("--proportions", default=None)
    p.add_argument("--method", choices=("pearson", "spearman"), default="pearson")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_corr)

    p = sub.add_parser("sweep", help="EOD stability under subsampling")
    p.add_argument("--schema", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--fractions", default="1,0.5,0.1,0.05,0.01")
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare-tests", help="classical vs subgroup-paired p-values")
    p.add_argument("--schema", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare_tests)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BiasAuditError as exc:
        print(f"biasaudit: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"biasaudit: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
