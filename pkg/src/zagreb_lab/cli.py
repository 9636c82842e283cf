"""``zagreb-lab`` command line driver.

Every subcommand prints its primary result to stdout.  With ``--out DIR`` the
results are written to files instead, next to a ``manifest.json`` that
records the parameters, the seed and a SHA-256 digest per file.

Exit codes: 0 success, 1 validation failure, 2 resource limit, 64 usage.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import secrets
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, exact, montecarlo, suites
from . import asymptotics as asy
from .errors import ResourceError, ZagrebLabError
from .trees import TreeModel, count_trees, dump_tree, generate, leftmost_subtree_size, load_tree
from .zagreb import root_degree, zagreb_index, zagreb_index_edge_form

EXIT_OK, EXIT_FAIL, EXIT_RESOURCE, EXIT_USAGE = 0, 1, 2, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _dumps(obj) -> str:
    return json.dumps(suites._json_safe(obj), indent=2, sort_keys=True) + "\n"


class Output:
    """Named text artifacts; without ``--out`` the first goes to stdout, the rest to stderr."""

    def __init__(self, command: str, params: dict, seed=None):
        self.command = command
        self.params = params
        self.seed = seed
        self.files: list[tuple[str, str]] = []
        self.started = datetime.now(timezone.utc).isoformat()

    def add(self, name: str, text: str) -> None:
        self.files.append((name, text))

    def emit(self, out_dir: str | None) -> None:
        if out_dir is None:
            for pos, (_, text) in enumerate(self.files):
                (sys.stdout if pos == 0 else sys.stderr).write(text)
            return
        root = Path(out_dir)
        root.mkdir(parents=True, exist_ok=True)
        digests = {}
        for name, text in self.files:
            data = text.encode()
            (root / name).write_bytes(data)
            digests[name] = hashlib.sha256(data).hexdigest()
        manifest = {
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "version": __version__,
            "started": self.started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "files": digests,
        }
        (root / "manifest.json").write_text(_dumps(manifest))
        sys.stdout.write(f"wrote {len(self.files)} file(s) to {root}\n")


def _seed(args) -> int:
    return args.seed if args.seed is not None else secrets.randbits(64)


# ------------------------------------------------------------ subcommands

def cmd_generate(args, out: Output) -> int:
    seed = _seed(args)
    out.seed = out.params["seed"] = seed
    model = TreeModel.parse(args.model)
    rows = []
    dumps = []
    for t in range(args.count):
        tree = generate(model, args.n, seed + t)
        z2 = zagreb_index(tree, 2) if tree.n >= 1 else 0
        first = leftmost_subtree_size(tree) if tree.n >= 2 else 0
        rows.append([t, seed + t, tree.n, root_degree(tree), first, z2])
        if args.dump:
            dumps.append(f"# tree {t} seed {seed + t} model {model.value} n {tree.n}\n" + dump_tree(tree))
    if args.dump:
        out.add("trees.tsv", "".join(dumps))
    else:
        out.add("trees.csv", _csv(["tree", "seed", "n", "root_degree", "leftmost_subtree", "zagreb2"], rows))
    return EXIT_OK


def cmd_index(args, out: Output) -> int:
    text = Path(args.input).read_text() if args.input and args.input != "-" else sys.stdin.read()
    tree = load_tree(text, args.model)
    tree.check()
    rows = []
    for k in args.k:
        v, e = zagreb_index(tree, k), zagreb_index_edge_form(tree, k)
        rows.append([k, v, e])
    out.add("index.csv", _csv(["k", "vertex_form", "edge_form"], rows))
    return EXIT_OK if all(r[1] == r[2] for r in rows) else EXIT_FAIL


def cmd_split_law(args, out: Output) -> int:
    law = exact.split_law(args.model, args.n)
    rows = [[j, w.numerator, w.denominator] for j, w in enumerate(law.weights, start=1)]
    out.add("split_law.csv", _csv(["j", "numerator", "denominator"], rows))
    return EXIT_OK


def cmd_exact(args, out: Output) -> int:
    W = args.weight_cap if args.weight_cap is not None else 2 * args.k
    tab = exact.moment_table(args.model, args.k, args.n_max, W, kind=args.kind, n_limit=args.n_limit)
    if args.kind == "exact":
        rows = [
            [n, i, l, m.numerator, m.denominator]
            for n in range(1, args.n_max + 1)
            for (i, l), m in tab[n].items()
        ]
        out.add("moments.csv", _csv(["n", "i", "l", "numerator", "denominator"], rows))
    else:
        rows = [[n, i, l, repr(float(m))] for n in range(1, args.n_max + 1) for (i, l), m in tab[n].items()]
        out.add("moments.csv", _csv(["n", "i", "l", "value"], rows))
    return EXIT_OK


def cmd_pmf(args, out: Output) -> int:
    pmf = exact.joint_pmf(args.model, args.k, args.n)
    rows = [[z, d, p.numerator, p.denominator] for (z, d), p in pmf.entries.items()]
    out.add("pmf.csv", _csv(["z", "d", "numerator", "denominator"], rows))
    return EXIT_OK


def cmd_enumerate(args, out: Output) -> int:
    res = exact.enumerate_all(args.model, args.n, n_limit=args.n_limit)
    W = args.weight_cap if args.weight_cap is not None else 2 * args.k
    rows = []
    for i, l in exact.weight_entries(args.k, W):
        m = res.moment(args.k, i, l)
        rows.append([args.n, i, l, m.numerator, m.denominator])
    expected = count_trees(args.model, args.n)
    text = f"# histories {res.histories}\n" + _csv(["n", "i", "l", "numerator", "denominator"], rows)
    out.add("enumeration.csv", text)
    return EXIT_OK if res.histories == expected else EXIT_FAIL


def cmd_constants(args, out: Output) -> int:
    c = asy.limit_constants(args.k, args.J, args.var_J)
    out.add("constants.json", _dumps(c.to_json()))
    return EXIT_OK


def cmd_gtable(args, out: Output) -> int:
    table = asy.g_table(args.k, args.r_max, args.s_max)
    rows = []
    for r, s, lg in table.items():
        g = table.value(r, s)
        rows.append([args.k, r, s, repr(lg), repr(g) if math.isfinite(g) else ""])
    out.add("gtable.csv", _csv(["k", "r", "s", "log_g", "g"], rows))
    reports = {
        "consistency": asy.g_consistency_check(table).to_json(),
        "appendix_bound": asy.appendix_bound_check(table).to_json(),
    }
    if args.r_max >= 2:
        reports["carleman"] = asy.carleman_diagnostic(table).to_json()
    out.add("gtable_reports.json", _dumps(reports))
    return EXIT_OK if reports["consistency"]["passed"] and reports["appendix_bound"]["passed"] else EXIT_FAIL


def _parse_hist(text: str | None):
    if text is None:
        return None
    try:
        stat, lo, hi, bins = text.split(":")
        return montecarlo.HistSpec(stat, float(lo), float(hi), int(bins))
    except ValueError as exc:
        raise UsageError(f"--hist expects stat:lo:hi:bins, got {text!r}") from exc


def cmd_simulate(args, out: Output) -> int:
    seed = _seed(args)
    out.seed = out.params["seed"] = seed
    cfg = montecarlo.SimConfig(
        args.model, args.k, tuple(args.sizes), args.replicates, seed, args.workers, args.r_max, _parse_hist(args.hist)
    )
    summary = montecarlo.simulate(cfg)
    out.add("summary.json", summary.dumps() + "\n")
    if args.csv:
        out.add("summary.csv", summary.to_csv())
    if cfg.hist is not None:
        for n in cfg.sizes:
            out.add(f"histogram_n{n}.csv", summary.histogram_csv(n))
    return EXIT_OK


def cmd_verify(args, out: Output) -> int:
    out.seed = args.seed
    names = list(suites.SUITES) if args.suite == "all" else [args.suite]
    results = []
    for name in names:
        fn = suites.SUITES[name]
        if name == "oracle":
            res = fn(n_max=args.n_max)
        elif name in suites.SEEDED:
            kwargs = {"seed": args.seed, "workers": args.workers}
            if args.replicates is not None:
                kwargs["replicates"] = args.replicates
            res = fn(**kwargs)
        else:
            res = fn()
        results.append(res.to_json())
    report = {"seed": args.seed, "passed": all(r["passed"] for r in results), "suites": results}
    report["failures"] = [f"{r['suite']}:{name}" for r in results for name in r["failures"]]
    out.add("verify.json", _dumps(report))
    return EXIT_OK if report["passed"] else EXIT_FAIL


# ---------------------------------------------------------------- parser

def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _sizes(text: str) -> list[int]:
    try:
        return [int(float(x)) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from exc


def _int(text: str) -> int:
    # accepts 1e5 style sizes
    v = float(text)
    if v != int(v):
        raise argparse.ArgumentTypeError(f"expected an integer, got {text}")
    return int(v)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="write result files and manifest.json to DIR")

    p = _Parser(prog="zagreb-lab", description="Zagreb index of random recursive trees.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    models = [m.value for m in TreeModel]

    g = sub.add_parser("generate", parents=[common], help="sample trees")
    g.add_argument("--model", choices=models, required=True)
    g.add_argument("--n", type=_int, required=True)
    g.add_argument("--seed", type=int)
    g.add_argument("--count", type=_positive, default=1)
    g.add_argument("--dump", action="store_true", help="emit tree dumps instead of a summary table")
    g.set_defaults(func=cmd_generate)

    ix = sub.add_parser("index", parents=[common], help="Zagreb index of a dumped tree")
    ix.add_argument("--k", type=int, action="append", required=True)
    ix.add_argument("--model", choices=models, default="nonplane")
    ix.add_argument("input", nargs="?", default="-", help="tree dump file (default stdin)")
    ix.set_defaults(func=cmd_index)

    s = sub.add_parser("split-law", parents=[common], help="exact split law")
    s.add_argument("--model", choices=models, required=True)
    s.add_argument("--n", type=int, required=True)
    s.set_defaults(func=cmd_split_law)

    e = sub.add_parser("exact", parents=[common], help="mixed moment table")
    e.add_argument("--model", choices=models, required=True)
    e.add_argument("--k", type=int, required=True)
    e.add_argument("--n-max", type=_int, required=True)
    e.add_argument("--weight-cap", type=int)
    e.add_argument("--kind", choices=("exact", "float"), default="exact")
    e.add_argument("--n-limit", type=_int, default=exact.EXACT_N_LIMIT)
    e.set_defaults(func=cmd_exact)

    pm = sub.add_parser("pmf", parents=[common], help="exact joint law of index and root degree")
    pm.add_argument("--model", choices=models, required=True)
    pm.add_argument("--k", type=int, required=True)
    pm.add_argument("--n", type=int, required=True)
    pm.set_defaults(func=cmd_pmf)

    en = sub.add_parser("enumerate", parents=[common], help="exhaustive enumeration")
    en.add_argument("--model", choices=models, required=True)
    en.add_argument("--n", type=int, required=True)
    en.add_argument("--k", type=int, required=True)
    en.add_argument("--weight-cap", type=int)
    en.add_argument("--n-limit", type=int, default=exact.ENUMERATION_N_LIMIT)
    en.set_defaults(func=cmd_enumerate)

    c = sub.add_parser("constants", parents=[common], help="non-plane limit constants")
    c.add_argument("--k", type=int, required=True)
    c.add_argument("--J", type=_int, default=10_000)
    c.add_argument("--var-J", type=_int, default=2000)
    c.set_defaults(func=cmd_constants)

    gt = sub.add_parser("gtable", parents=[common], help="plane limit moments")
    gt.add_argument("--k", type=int, required=True)
    gt.add_argument("--r-max", type=int, required=True)
    gt.add_argument("--s-max", type=int, required=True)
    gt.set_defaults(func=cmd_gtable)

    sm = sub.add_parser("simulate", parents=[common], help="Monte Carlo summary")
    sm.add_argument("--model", choices=models, required=True)
    sm.add_argument("--k", type=int, required=True)
    sm.add_argument("--sizes", type=_sizes, required=True, help="comma separated, ascending")
    sm.add_argument("--replicates", type=_int, required=True)
    sm.add_argument("--seed", type=int)
    sm.add_argument("--workers", type=_positive)
    sm.add_argument("--r-max", type=int, default=4)
    sm.add_argument("--hist", help="histogram spec stat:lo:hi:bins, stat in " + ",".join(montecarlo.HIST_STATS))
    sm.add_argument("--csv", action="store_true", help="also emit the per-size CSV")
    sm.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("--suite", choices=[*suites.SUITES, "all"], required=True)
    v.add_argument("--seed", type=int, required=True)
    v.add_argument("--n-max", type=int, default=7)
    v.add_argument("--replicates", type=_int, help="override the Monte Carlo replicate count")
    v.add_argument("--workers", type=_positive)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    params = {k: v for k, v in vars(args).items() if k not in ("func", "out")}
    out = Output(args.command, params, getattr(args, "seed", None))
    try:
        code = args.func(args, out)
    except UsageError as exc:
        print(f"zagreb-lab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceError as exc:
        print(f"zagreb-lab: resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ZagrebLabError, ValueError) as exc:
        print(f"zagreb-lab: {exc}", file=sys.stderr)
        return EXIT_FAIL
    out.emit(args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
