"""Command-line entry point: ``fexpo <command> [options]``."""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import beta_oracle as bo
from . import exponent_calc as ec
from . import expansion_engine as ee
from . import fbm_engine as fe
from . import graph_core as gc
from . import graph_rewrite as gr
from .errors import FexpoError, ValidationError
from .regression import run_regression


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def hurst(text: str) -> float:
    try:
        return ec.check_hurst(float(text))
    except (ValueError, ValidationError) as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def seed64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def t_set_arg(text: str) -> list[frozenset[int]]:
    return [frozenset(int_list(block)) for block in text.split(";") if block.strip()]


class Output:
    """CSV sink with optional ``#`` metadata lines above the header."""

    def __init__(self, path: str | None, timestamp: bool):
        self.path = path
        self.buf = io.StringIO()
        if timestamp:
            self.buf.write(f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat()}\n")
        self.writer = csv.writer(self.buf, lineterminator="\n")

    def meta(self, key: str, value) -> None:
        self.buf.write(f"# {key}={value}\n")

    def row(self, *values) -> None:
        self.writer.writerow([v if isinstance(v, str) else num(v) for v in values])

    def close(self) -> None:
        text = self.buf.getvalue()
        if self.path:
            Path(self.path).write_text(text)
        else:
            sys.stdout.write(text)


def _read_graph(path: str) -> gc.WeightedGraph:
    return gc.parse_graph(Path(path).read_text())


# -- commands ----------------------------------------------------------------

def cmd_exponent(a) -> int:
    g = _read_graph(a.graph)
    if a.second:
        e = ec.second_exponent(a.alpha, g, t_set_arg(a.t_set or ""))
    else:
        e = ec.first_exponent(a.alpha, g)
    print(f"symbolic: {e.canonical().render()}")
    if a.H is not None:
        print(f"value: {num(e.evaluate(a.H))}")
    return 0


def cmd_rewrite(a) -> int:
    g = _read_graph(a.graph)
    if a.kind == "first":
        fam = gr.du_rewrite_first(gr.GraphSumSpec(a.alpha, g))
    else:
        spec = gr.GraphSumSpec(a.alpha, g, t_set_arg(a.t_set or ""), gc.Taxonomy.SECOND)
        fam = gr.du_rewrite_second(spec)
    out = Output(a.out, not a.no_timestamp)
    out.meta("case", fam.case_tag)
    out.meta("max_exponent", fam.max_exponent.canonical().render())
    out.meta("predicted", fam.predicted.canonical().render())
    out.meta("law_holds", fam.law_holds())
    out.row("index", "alpha", "multiplicity", "exponent", "graph", "provenance")
    for i, it in enumerate(fam.items):
        graph = gc.format_graph(it.graph).strip().replace("\n", "; ")
        out.row(i, it.alpha.canonical().render(), it.multiplicity,
                it.exponent().canonical().render(), graph, it.provenance)
    out.close()
    return 0


def cmd_beta_slope(a) -> int:
    if a.graph:
        g = _read_graph(a.graph)
        f = lambda n: bo.graph_beta_sum(g, n, a.H, a.T)  # noqa: E731
    elif a.cycle:
        f = lambda n: bo.cycle_sum(n, a.cycle, a.H, a.T)  # noqa: E731
    else:
        raise ValidationError("give --graph or --cycle")
    vals = [f(n) for n in a.n_grid]
    fit = bo.fit_order(a.n_grid, vals)
    out = Output(a.out, not a.no_timestamp)
    out.meta("slope", num(fit.slope))
    out.meta("r_squared", num(fit.r_squared))
    out.meta("dropped", fit.dropped)
    out.row("n", "value")
    for n, v in zip(a.n_grid, vals):
        out.row(n, v)
    out.close()
    return 0


def random_chaos_config(rng: np.random.Generator):
    k = int(rng.integers(1, 5))
    q = {v: int(rng.integers(1, 4)) for v in range(1, k + 1)}
    if sum(q.values()) % 2:
        q[1] = q[1] + 1 if q[1] < 3 else q[1] - 1
    A = rng.standard_normal((k, k + 1))
    return q, A @ A.T


def chaos_check(configs: int, seed: int) -> tuple[float, int]:
    """Worst relative error between the contraction expansion and the pairing oracle."""
    rng = np.random.default_rng(seed)
    worst, bad = 0.0, 0
    for _ in range(configs):
        q, gram = random_chaos_config(rng)
        x = gr.contraction_expectation(q, gram)
        y = bo.gaussian_moment_oracle(q, gram)
        err = abs(x - y) / max(abs(y), 1e-300) if y else abs(x)
        worst = max(worst, err)
        bad += err >= 1e-10
    return worst, bad


def cmd_chaos_check(a) -> int:
    worst, bad = chaos_check(a.configs, a.seed)
    print(f"configs: {a.configs}")
    print(f"max_relative_error: {num(worst)}")
    print(f"failures: {bad}")
    return 2 if bad else 0


def cmd_simulate_fou(a) -> int:
    run = fe.simulate_fou_qv(a.H, a.b, a.sigma, a.x0, a.T, a.n, a.paths, a.substeps,
                             a.seed, a.method, a.threads)
    out = Output(a.out, not a.no_timestamp)
    out.meta("v_inf", num(run.v_inf))
    out.meta("r_n", num(run.r_n))
    out.row("path", "v_n", "z_n")
    for i, (v, z) in enumerate(zip(run.v_n, run.z_n)):
        out.row(i, v, z)
    out.close()
    return 0


def _fou_density(a) -> ee.ExpansionDensity:
    return ee.fou_expansion(a.b, a.sigma, a.x0, a.H, a.T, a.n)


def cmd_expand_fou(a) -> int:
    d = _fou_density(a)
    out = Output(a.out, not a.no_timestamp)
    out.meta("c1", num(d.symbol.coefficient(1)))
    out.meta("g_inf", num(d.g_inf))
    out.meta("r_n", num(d.r_n))
    half = a.width * np.sqrt(d.g_inf)
    z = np.linspace(-half, half, a.points)
    out.row("z", "density")
    for zi, p in zip(z, ee.expansion_density(d, z)):
        out.row(zi, p)
    out.close()
    return 0


def _read_samples(path: str, column: str) -> np.ndarray:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    if not rows or column not in rows[0]:
        raise ValidationError(f"column {column!r} not found in {path}")
    return np.array([float(r[column]) for r in rows])


def cmd_compare(a) -> int:
    x = _read_samples(a.samples, a.column)
    d = _fou_density(a)
    cmp = ee.compare_distances(x, d, ee.gaussian_model(d.g_inf), a.bootstrap, a.seed)
    print(json.dumps({
        "samples": int(x.size),
        "d_expansion": num(cmp.d_expansion),
        "d_gaussian": num(cmp.d_gaussian),
        "diff_ci_low": num(cmp.diff_ci[0]),
        "diff_ci_high": num(cmp.diff_ci[1]),
        "improved": cmp.improved,
    }, indent=2))
    return 0


def cmd_regression(a) -> int:
    results = run_regression()
    for r in results:
        c = r.case
        status = "PASS" if r.ok else "FAIL"
        print(f"{status} {c.name}: {c.kind}({c.alpha}, {c.graph}) = {r.computed} (expected {c.expected})")
    return 0 if all(r.ok for r in results) else 2


# -- parser ------------------------------------------------------------------

def _fou_args(p, n_default=256):
    p.add_argument("--H", type=hurst, default=0.6)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--n", type=int, default=n_default)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--no-timestamp", action="store_true", help="omit the timestamp line")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (FEXPO_THREADS overrides)")

    p = _Parser(prog="fexpo", description="Exponent bookkeeping and expansion experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("exponent", parents=[common], help="exponent of a graph functional")
    s.add_argument("--graph", required=True)
    s.add_argument("--alpha", required=True, type=ec.parse_expr)
    s.add_argument("--H", type=hurst)
    s.add_argument("--second", action="store_true", help="use the sharper second exponent")
    s.add_argument("--t-set", help="components as '1,2;4,5'")
    s.set_defaults(func=cmd_exponent)

    s = sub.add_parser("rewrite", parents=[common], help="apply the D_u rewrite")
    s.add_argument("--graph", required=True)
    s.add_argument("--alpha", required=True, type=ec.parse_expr)
    s.add_argument("--kind", choices=("first", "second"), default="first")
    s.add_argument("--t-set")
    s.set_defaults(func=cmd_rewrite)

    s = sub.add_parser("beta-slope", parents=[common], help="log-log slope of a beta sum")
    s.add_argument("--graph")
    s.add_argument("--cycle", type=int, help="cycle length k")
    s.add_argument("--H", type=hurst, default=0.6)
    s.add_argument("--T", type=float, default=1.0)
    s.add_argument("--n-grid", type=int_list, default=[512, 1024, 2048, 4096])
    s.set_defaults(func=cmd_beta_slope)

    s = sub.add_parser("chaos-check", parents=[common], help="contraction expansion vs pairing oracle")
    s.add_argument("--configs", type=int, default=200)
    s.add_argument("--seed", type=seed64, default=0)
    s.set_defaults(func=cmd_chaos_check)

    s = sub.add_parser("simulate-fou", parents=[common], help="Monte Carlo of V_n and Z_n")
    _fou_args(s)
    s.add_argument("--paths", type=int, default=10_000)
    s.add_argument("--substeps", type=int, default=fe.DEFAULT_SUBSTEPS)
    s.add_argument("--seed", type=seed64, default=0)
    s.add_argument("--method", choices=("auto", "cholesky", "circulant"), default="auto")
    s.set_defaults(func=cmd_simulate_fou)

    s = sub.add_parser("expand-fou", parents=[common], help="tabulate the fOU expansion density")
    _fou_args(s)
    s.add_argument("--points", type=int, default=201)
    s.add_argument("--width", type=float, default=5.0, help="half-width in units of sqrt(G)")
    s.set_defaults(func=cmd_expand_fou)

    s = sub.add_parser("compare", parents=[common], help="Kolmogorov distances of samples")
    _fou_args(s)
    s.add_argument("--samples", required=True)
    s.add_argument("--column", default="z_n")
    s.add_argument("--bootstrap", type=int, default=200)
    s.add_argument("--seed", type=seed64, default=0)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("regression", parents=[common], help="check the reference exponent table")
    s.set_defaults(func=cmd_regression)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (FexpoError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
