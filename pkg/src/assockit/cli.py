"""Command-line interface: ``assockit {analyze,ca,compare,power,reliability,csi}``."""

from __future__ import annotations

import argparse
import csv
import io
import re
import sys
from importlib import resources
from pathlib import Path

from . import __version__
from .ca import coordinates_csv, biplot_svg, fit_ca
from .compare import agreement_rates, hcluster, procrustes_fit, procrustes_test, tanglegram_export
from .errors import AssocError, DimensionUnavailable, KOutOfRange
from .io import read_codings, read_configuration, read_mentions, read_tables, write_atomic
from .power import OMEGA_GRID, PowerQuery, chi2_power, omega_label, required_n
from .reliability import cognitive_salience, cohens_kappa, krippendorff_alpha
from .report import SCHEMA_VERSION, analyze_table, dumps, summarize_reports, summary_csv
from .svg import heatmap
from .table import prune_empty

DEMO_TABLE = "demo_12x6.csv"


def demo_path() -> Path:
    return Path(str(resources.files("assockit") / "data" / DEMO_TABLE))


def _slug(text) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", str(text)).strip("_") or "split"


def _stem(path, split=None) -> str:
    stem = Path(path).stem
    return f"{stem}__{_slug(split)}" if split is not None else stem


def _parse_dims(text):
    try:
        dims = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid --dims {text!r}; expected e.g. 1,2") from None
    return dims


def _emit(text: str, out_dir, name):
    if out_dir is not None:
        write_atomic(Path(out_dir) / name, text)
    sys.stdout.write(text)


def cmd_analyze(args) -> int:
    files = [str(f) for f in args.tables]
    if args.demo:
        files.append(str(demo_path()))
    if not files:
        raise AssocError("no input tables given (pass CSV files or --demo)")
    out = Path(args.out)
    reports = []
    written = []
    for path in files:
        for table in read_tables(path):
            rep = analyze_table(
                table,
                source=Path(path).name,
                alpha=args.alpha,
                yates=args.yates,
                replicates=args.replicates,
                seed=args.seed,
                correction=args.correction,
                fisher=not args.no_fisher,
                prune=args.prune,
                workers=args.workers,
            )
            stem = _stem(path, table.split_label)
            written.append(write_atomic(out / f"{stem}.json", dumps(rep)))
            labels = rep["input"]
            written.append(write_atomic(
                out / f"{stem}_pct_diff.svg",
                heatmap(rep["pct_diff"], labels["row_labels"], labels["col_labels"],
                        title=f"{stem}: % difference from expected"),
            ))
            if args.format == "csv":
                written.append(write_atomic(out / f"{stem}_cells.csv", _cells_csv(rep)))
            for w in rep["warnings"]:
                print(f"warning [{w['module']}] {stem}: {w['message']}", file=sys.stderr)
            reports.append(rep)
    summary = summarize_reports(reports)
    written.append(write_atomic(out / "summary.json", dumps(summary)))
    written.append(write_atomic(out / "summary_tables.csv", summary_csv(summary["tables"])))
    written.append(write_atomic(out / "summary_cells.csv", summary_csv(summary["cells"])))
    print(dumps({"reports": len(reports), "written": [str(p) for p in written]}), end="")
    return 0


def _cells_csv(rep) -> str:
    buf = io.StringIO()
    cells = rep["cellwise"]["cells"]
    w = csv.DictWriter(buf, fieldnames=sorted(cells[0]), lineterminator="\n")
    w.writeheader()
    for cell in cells:
        w.writerow(cell)
    return buf.getvalue()


def cmd_ca(args) -> int:
    out = Path(args.out)
    written = []
    for table in read_tables(args.table):
        if args.prune:
            table, dropped = prune_empty(table)
            for axis, lab in dropped:
                print(f"warning [tabular_core]: pruned empty {axis} {lab!r}", file=sys.stderr)
        k = min(table.shape) - 1
        ndim = args.ndim if args.ndim is not None else min(2, k)
        sol = fit_ca(table, ndim)
        if args.dims is not None:
            dims = args.dims
        else:
            dims = (1, 2) if sol.ndim >= 2 else (1,)
        if any(d > sol.ndim or d < 1 for d in dims):
            raise DimensionUnavailable(
                f"--dims {','.join(map(str, dims))} unavailable; solution has {sol.ndim} dimension(s)")
        warnings = []
        if sol.rank == 0:
            warnings.append({"module": "correspondence",
                             "message": "table is exactly independent; all points sit at the origin"})
        for w in warnings:
            print(f"warning [{w['module']}]: {w['message']}", file=sys.stderr)
        stem = _stem(args.table, table.split_label)
        written.append(write_atomic(out / f"{stem}_biplot.svg", biplot_svg(sol, dims, title=stem)))
        if args.format == "csv":
            written.append(write_atomic(out / f"{stem}_coords.csv", coordinates_csv(sol)))
        else:
            doc = {
                "schema_version": SCHEMA_VERSION,
                "input": {"file": Path(args.table).name, "split": table.split_label,
                          "shape": list(table.shape), "n": table.n},
                "dims": list(dims),
                "summary": sol.summary(),
                "rows": {lab: sol.row_coords[i].tolist() for i, lab in enumerate(sol.row_labels)},
                "cols": {lab: sol.col_coords[i].tolist() for i, lab in enumerate(sol.col_labels)},
                "warnings": warnings,
            }
            written.append(write_atomic(out / f"{stem}_ca.json", dumps(doc)))
    print(dumps({"written": [str(p) for p in written]}), end="")
    return 0


def cmd_compare(args) -> int:
    a = read_configuration(args.config_a)
    b = read_configuration(args.config_b).aligned_to(a.labels)
    fit = procrustes_fit(a, b)
    p, _ = procrustes_test(a, b, permutations=args.permutations, seed=args.seed)
    max_k = args.max_k if args.max_k is not None else a.n - 2
    if max_k < 1:
        raise KOutOfRange(f"need at least 3 points for agreement rates, got {a.n}")
    agree = agreement_rates(a, b, max_k)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "inputs": {"a": Path(args.config_a).name, "b": Path(args.config_b).name, "n": a.n},
        "procrustes": {**fit.as_dict(), "p": p, "permutations": args.permutations, "seed": args.seed},
        "agreement": agree.as_dict(),
    }
    out = Path(args.out) if args.out is not None else None
    if args.tanglegram:
        svg, coph = tanglegram_export(hcluster(a), hcluster(b), title="Tanglegram")
        doc["cophenetic_correlation"] = coph
        write_atomic((out or Path(".")) / "tanglegram.svg", svg)
    _emit(dumps(doc), out, "compare.json")
    return 0


def cmd_power(args) -> int:
    rows = []
    omegas = args.omega if args.omega else list(OMEGA_GRID)
    if args.solve_n:
        if args.power is None:
            raise AssocError("--solve-n needs --power")
        for w in omegas:
            n = required_n(w, args.df, args.alpha, args.power)
            rows.append({"omega": w, "label": omega_label(w), "df": args.df, "alpha": args.alpha,
                         "power": args.power, "n": n, "n_ceil": int(-(-n // 1))})
    else:
        if args.n is None:
            raise AssocError("--n is required unless --solve-n is given")
        for w in omegas:
            pw = chi2_power(PowerQuery(w, args.n, args.df, args.alpha))
            rows.append({"omega": w, "label": omega_label(w), "df": args.df, "alpha": args.alpha,
                         "n": args.n, "power": pw})
    out = Path(args.out) if args.out is not None else None
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        _emit(buf.getvalue(), out, "power.csv")
    else:
        _emit(dumps({"schema_version": SCHEMA_VERSION, "rows": rows}), out, "power.json")
    return 0


def cmd_reliability(args) -> int:
    m = read_codings(args.codings)
    doc = {"schema_version": SCHEMA_VERSION, "units": len(m.units), "coders": list(m.coders),
           "metric": args.metric}
    if len(m.coders) == 2 and not m.has_missing:
        doc["cohens_kappa"] = cohens_kappa(m)
    else:
        doc["cohens_kappa"] = None
        doc["note"] = "Cohen's kappa needs exactly two coders and no missing codes"
    doc["krippendorff_alpha"] = krippendorff_alpha(m, metric=args.metric)
    out = Path(args.out) if args.out is not None else None
    _emit(dumps(doc), out, "reliability.json")
    return 0


def cmd_csi(args) -> int:
    mentions = read_mentions(args.mentions)
    doc = {"schema_version": SCHEMA_VERSION, "subjects": mentions.n_subjects,
           "categories": cognitive_salience(mentions)}
    out = Path(args.out) if args.out is not None else None
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["category", "n", "mean_rank", "csi"])
        for cat, v in doc["categories"].items():
            w.writerow([cat, v["n"], repr(v["mean_rank"]), repr(v["csi"])])
        _emit(buf.getvalue(), out, "csi.csv")
    else:
        _emit(dumps(doc), out, "csi.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="assockit", description="Contingency-table association analysis.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="chi-squared/Fisher tests, effect sizes, power, cellwise tests")
    p.add_argument("tables", nargs="*", help="wide or long CSV files")
    p.add_argument("--demo", action="store_true", help="also analyze the bundled 12x6 demo table")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--yates", choices=["auto", "on", "off"], default="auto")
    p.add_argument("--replicates", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--correction", choices=["none", "bonferroni", "holm"], default="none")
    p.add_argument("--no-fisher", action="store_true", help="skip the Fisher test")
    p.add_argument("--prune", action="store_true", help="drop empty rows/columns instead of failing")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("ca", help="correspondence analysis coordinates and biplot")
    p.add_argument("table")
    p.add_argument("--ndim", type=int, default=None, help="dimensions to keep (default 2)")
    p.add_argument("--dims", type=_parse_dims, default=None, help="biplot dimensions, e.g. 1,2")
    p.add_argument("--prune", action="store_true")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_ca)

    p = sub.add_parser("compare", help="Procrustes and neighbourhood agreement between configurations")
    p.add_argument("config_a")
    p.add_argument("config_b")
    p.add_argument("--permutations", type=int, default=999)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-k", type=int, default=None)
    p.add_argument("--tanglegram", action="store_true", help="write tanglegram.svg")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("power", help="power of the chi-squared test, or required n")
    p.add_argument("--omega", type=float, nargs="+", default=None)
    p.add_argument("--n", type=float, default=None)
    p.add_argument("--df", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--solve-n", action="store_true")
    p.add_argument("--power", type=float, default=None)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("reliability", help="Cohen's kappa and Krippendorff's alpha")
    p.add_argument("codings", help="CSV with unit,coder,label")
    p.add_argument("--metric", choices=["nominal"], default="nominal")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_reliability)

    p = sub.add_parser("csi", help="cognitive salience index")
    p.add_argument("mentions", help="CSV with subject,rank,category")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_csi)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AssocError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
