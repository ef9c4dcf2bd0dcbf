"""``curvelab`` command-line interface.

Exit codes: 0 success, 2 input/parse error, 3 solver failure, 4 cross-check
discrepancy above 1e-6, 5 a theorem-backed check failed.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import comparison as cmp
from . import curvature as cv
from . import heat
from .errors import CurvelabError, ParseError, SolverFailure, TooLarge
from .generators import GENERATORS, generate
from .graph import BirthDeathChain, WeightedGraph, to_graph
from .io import format_graph, read_graph, read_measure
from .transport import FiniteMeasure, wasserstein, wasserstein_dual

SCHEMA = "curvelab/1"
CROSS_TOL = 1e-6

EXIT_OK, EXIT_INPUT, EXIT_SOLVER, EXIT_CROSS, EXIT_THEOREM = 0, 2, 3, 4, 5


class CrossCheckFailed(Exception):
    pass


class TheoremCheckFailed(Exception):
    pass


# ------------------------------------------------------------ formatting

def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return None
        x = float(f"{x:.12g}")
        return 0.0 if x == 0 else x
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    return _num(obj)


def _cell(x):
    x = _num(x)
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


class Document:
    """Ordered metadata plus named tables; rendered as json, csv or table."""

    def __init__(self, command: str):
        self.meta = {"schema": SCHEMA, "command": command}
        self.tables = []

    def table(self, name, columns, rows):
        self.tables.append((name, list(columns), [list(r) for r in rows]))

    def render(self, fmt: str) -> str:
        if fmt == "json":
            doc = dict(self.meta)
            doc["tables"] = {name: [dict(zip(cols, r)) for r in rows] for name, cols, rows in self.tables}
            return json.dumps(_clean(doc), indent=2, sort_keys=False) + "\n"
        out = _io.StringIO()
        meta = [f"{k}={_cell(v) if not isinstance(v, (dict, list)) else json.dumps(_clean(v))}"
                for k, v in self.meta.items()]
        if fmt == "csv":
            out.write("# " + " ".join(meta) + "\n")
            for name, cols, rows in self.tables:
                out.write(f"# table: {name}\n")
                w = csv.writer(out, lineterminator="\n")
                w.writerow(cols)
                for r in rows:
                    w.writerow([_cell(c) for c in r])
            return out.getvalue()
        for m in meta:
            out.write(m + "\n")
        for name, cols, rows in self.tables:
            cells = [cols] + [[_cell(c) for c in r] for r in rows]
            widths = [max(len(row[j]) for row in cells) for j in range(len(cols))]
            out.write(f"\n[{name}]\n")
            for k, row in enumerate(cells):
                out.write("  ".join(c.rjust(widths[j]) for j, c in enumerate(row)).rstrip() + "\n")
                if k == 0:
                    out.write("  ".join("-" * wd for wd in widths) + "\n")
        return out.getvalue()


# ------------------------------------------------------------- helpers

def _vertex(G: WeightedGraph, token: str) -> int:
    if G.labels is not None and token in G.labels:
        return G.labels.index(token)
    try:
        v = int(token)
    except ValueError:
        raise ParseError(f"unknown vertex {token!r}") from None
    if not 0 <= v < G.n:
        raise ParseError(f"vertex {v} outside 0..{G.n - 1}")
    return v


def _name(G: WeightedGraph, v: int) -> str:
    return G.labels[v] if G.labels is not None else str(v)


def _load(path: str) -> WeightedGraph:
    try:
        return read_graph(path)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}") from exc


def _pair_job(args):
    G, u, v, method = args
    return cv.curvature(G, u, v, method)


def _sweep(G, pairs, method, jobs):
    tasks = [(G, u, v, method) for u, v in pairs]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(_pair_job, tasks, chunksize=8))
    return [_pair_job(t) for t in tasks]


def _engines_for(G, u, v):
    names = ["dual_lp", "transport_lp"]
    if G.is_combinatorial and G.adjacent(u, v):
        names += ["combinatorial", "bruteforce"]
    return names


# ------------------------------------------------------------ commands

def cmd_curvature(a) -> Document:
    G = _load(a.graph)
    if a.pair:
        pairs = [(_vertex(G, a.pair[0]), _vertex(G, a.pair[1]))]
        if pairs[0][0] == pairs[0][1]:
            raise ParseError("--pair needs two distinct vertices")
    else:
        pairs = list(G.edges)
    reports = _sweep(G, pairs, a.method, a.jobs)
    doc = Document("curvature")
    doc.meta.update({"graph": a.graph, "n": G.n, "method": a.method, "pairs": len(pairs)})
    cols = ["x", "y", "kappa", "method"]
    rows = []
    worst = 0.0
    if a.verify:
        cols += ["engines", "max_discrepancy"]
    for (u, v), rep in zip(pairs, reports):
        row = [_name(G, u), _name(G, v), rep.kappa, rep.method]
        if a.verify:
            vals = {}
            for name in _engines_for(G, u, v):
                try:
                    vals[name] = cv.curvature(G, u, v, name).kappa
                except TooLarge:
                    continue
            disc = max(vals.values()) - min(vals.values())
            worst = max(worst, disc)
            row += ["+".join(vals), disc]
        rows.append(row)
    doc.table("curvature", cols, rows)
    if a.witness:
        wrows = []
        for (u, v), rep in zip(pairs, reports):
            if rep.witness_potential is not None:
                for z, val in rep.witness_potential.items():
                    wrows.append([_name(G, u), _name(G, v), "potential", _name(G, z), "", val])
            if rep.witness_coupling is not None:
                c = rep.witness_coupling
                for i, r in enumerate(c.rows):
                    for j, s in enumerate(c.cols):
                        if c.mass[i, j] > 0:
                            wrows.append([_name(G, u), _name(G, v), "coupling", _name(G, r), _name(G, s), c.mass[i, j]])
        doc.table("witness", ["x", "y", "kind", "u", "v", "value"], wrows)
    if a.verify:
        doc.meta["max_discrepancy"] = worst
        if worst > CROSS_TOL:
            doc.meta["status"] = "discrepancy"
            raise CrossCheckFailed(doc)
    return doc


def cmd_profile(a) -> Document:
    G = _load(a.graph)
    x0 = _vertex(G, a.root)
    cache: dict = {}
    prof = cmp.comparison_profile(G, x0, cache=cache)
    diam = cmp.improved_diameter_check(G, x0, cache=cache)
    chain = cmp.associated_bdc(G, x0)
    R = prof.R_max
    dist = G.distance_matrix[x0]
    rows = []
    sum_t = sum_g = 0.0
    comparison_ok = True
    for r in range(R + 1):
        sel = dist == r
        lap_max = float(prof.lap_values[sel].max())
        if r == 0:
            rows.append([0, "", prof.phi[0], lap_max, "", "", "", ""])
            continue
        kt = cv.bdc_curvature(chain, r - 1, r)
        sum_t += kt
        sum_g += prof.kappa[r - 1]
        comparison_ok &= sum_t >= sum_g - cmp.TOL * max(1.0, abs(sum_g))
        rec = diam.records[r - 1]
        rows.append([r, prof.kappa[r - 1], prof.phi[r], lap_max, kt, sum_t, sum_g, rec.slack])
    doc = Document("profile")
    sharp = prof.sharpness_defect(G) <= 1e-10
    transfer = cmp.bdc_comparison_transfer(G, x0, prof.phi)
    doc.meta.update({"graph": a.graph, "root": _name(G, x0), "R_max": R,
                     "violations": len(prof.violations), "sharp": sharp,
                     "transfer_holds": transfer, "curvature_comparison_holds": bool(comparison_ok),
                     "diameter_holds": diam.holds, "derived_diameter_bound": diam.derived_bound})
    doc.table("profile", ["r", "kappa", "phi", "lap_max", "kappa_tilde", "sum_kappa_tilde",
                          "sum_kappa", "diameter_slack"], rows)
    if prof.violations:
        doc.table("violations", ["vertex", "excess"], [[_name(G, v), e] for v, e in prof.violations])
    if prof.violations or not transfer or not comparison_ok or not diam.holds:
        raise TheoremCheckFailed(doc)
    return doc


def _parse_f(G, spec, n):
    if spec is None:
        return np.eye(n)[0]
    kind, _, arg = spec.partition(":")
    if kind == "indicator":
        return np.eye(n)[_vertex(G, arg)]
    if kind == "distance":
        return G.distance_matrix[_vertex(G, arg)].astype(float)
    if kind == "file":
        vals = read_measure(arg, n)
        f = np.zeros(n)
        for k, x in vals.items():
            f[k] = x
        return f
    raise ParseError(f"bad --f spec {spec!r} (indicator:X, distance:X or file:PATH)")


def cmd_heat(a) -> Document:
    G = _load(a.graph)
    times = [float(t) for t in a.times]
    if any(t < 0 for t in times):
        raise ParseError("times must be nonnegative")
    f = _parse_f(G, a.f, G.n)
    P = heat.propagator(G)
    ric = cv.ric_lower_bound(G)
    doc = Document("heat")
    doc.meta.update({"graph": a.graph, "K": ric})
    doc.table("semigroup", ["t"] + [f"u{_name(G, v)}" for v in range(G.n)],
              [[t] + list(P.apply(t, f)) for t in times])
    grad = heat.gradient_decay_check(G, f, ric, times, ric=ric, P=P)
    doc.table("gradient_decay", ["t", "bound", "observed", "holds"],
              [[t, b, o, h] for t, o, b, h in grad.rows])
    ok = grad.passed
    if a.pair:
        x, y = _vertex(G, a.pair[0]), _vertex(G, a.pair[1])
    else:
        x, y = G.edges[0] if G.edges else (0, 0)
    if x != y:
        kc = heat.kernel_contraction_check(G, x, y, ric, times, ric=ric, P=P)
        doc.table("kernel_contraction", ["t", "bound", "observed", "holds"],
                  [[t, b, o, h] for t, o, b, h in kc.rows])
        ok &= kc.passed
        if a.recovery:
            rec = heat.curvature_recovery(G, x, y, P=P)
            doc.table("recovery", ["t", "estimate"], list(zip(rec.times, rec.estimates)))
            doc.meta.update({"pair": [_name(G, x), _name(G, y)], "recovery_limit": rec.limit,
                             "kappa": rec.kappa_ref, "recovery_error": rec.error,
                             "wpm_ratio_max": rec.wpm_max})
    if a.cutoff:
        vals = read_measure(a.cutoff, G.n)
        phi = np.zeros(G.n)
        for k, v in vals.items():
            phi[k] = v
        W = [k for k in range(G.n) if phi[k] > 0]
        indicator = bool(W) and all(phi[k] == 1.0 for k in W)
        fw = np.minimum(f, phi)
        rows = []
        for t in times:
            cut = heat.cutoff_limit(G, phi, t, fw, P=P).values
            row = [t] + list(cut)
            if indicator:
                dv = heat.dirichlet_semigroup(G, W, t, fw)
                row.append(float(np.abs(cut - dv).max()))
            rows.append(row)
        cols = ["t"] + [f"c{_name(G, v)}" for v in range(G.n)]
        if indicator:
            cols.append("dirichlet_diff")
        doc.table("cutoff", cols, rows)
    doc.meta["checks_passed"] = bool(ok)
    if not ok:
        raise TheoremCheckFailed(doc)
    return doc


def _floats(s):
    return [float(x) for x in s.split(",") if x.strip()]


def _range(s):
    if s is None:
        return None
    lo, hi = _floats(s)
    return (lo, hi)


def _gen_params(a):
    k = a.kind
    if k in ("path", "cycle", "complete"):
        return {"n": a.n}
    if k == "star":
        return {"leaves": a.n}
    if k == "hypercube":
        return {"dim": a.n}
    if k == "random":
        return {"n": a.n, "p": a.p, "seed": a.seed, "weights": _range(a.weights),
                "measures": _range(a.measures), "max_degree": a.max_degree}
    if k == "bdc_from_rates":
        if a.w_up is None or a.m is None:
            raise ParseError("bdc_from_rates needs --w-up and --m")
        return {"w_up": _floats(a.w_up), "m": _floats(a.m)}
    if k == "two_sided_geometric":
        return {"N": a.n}
    if k == "g_epsilon":
        return {"eps": a.eps, "N": a.n}
    if k == "intrinsic_example":
        return {"eps": a.eps, "N": a.n}
    if k == "finite_optimal":
        spec = a.k or "geometric:0.5"
        name, _, q = spec.partition(":")
        if name != "geometric":
            raise ParseError("--k must be geometric:<q>")
        return {"k": ("geometric", float(q)), "N": a.n}
    if k == "positive_curv_infinite":
        out = {"K": a.K, "N": a.n}
        if a.w_up is not None:
            out["rates"] = _floats(a.w_up)
        if a.m0 is not None:
            out["m0"] = a.m0
        return out
    raise ParseError(f"unknown generator {k!r}")


def cmd_generate(a) -> str:
    params = _gen_params(a)
    obj = generate(a.kind, **params)
    G = to_graph(obj) if isinstance(obj, BirthDeathChain) else obj
    shown = {k: (list(v) if isinstance(v, tuple) else v) for k, v in params.items()}
    comments = [f"generator: {a.kind}", f"params: {json.dumps(_clean(shown), sort_keys=True)}",
                f"seed: {a.seed if a.seed is not None else 'none'}"]
    if isinstance(obj, BirthDeathChain):
        comments.append(f"birth-death chain truncated at N={obj.N}, root 0")
    return format_graph(G, comments)


def _as_chain(G: WeightedGraph, root):
    """Read a path graph rooted at 0 as a truncated chain, or reduce via ``root``."""
    if root is not None:
        c = cmp.associated_bdc(G, root)
        return BirthDeathChain(c.w_up, c.m)
    is_path = all(G.neighbors(v) == tuple(u for u in (v - 1, v + 1) if 0 <= u < G.n) for v in range(G.n))
    if not is_path:
        raise ParseError("input is not a birth-death chain 0-1-...-N; pass --root")
    return BirthDeathChain(tuple(G.w[r, r + 1] for r in range(G.n - 1)), tuple(G.m))


def cmd_stochastic(a) -> Document:
    G = _load(a.graph)
    root = _vertex(G, a.root) if a.root is not None else None
    chain = _as_chain(G, root)
    v = cmp.stochastic_completeness_bdc(chain)
    dv = cmp.curvature_decay_verdict(chain, C=a.C)
    doc = Document("stochastic")
    doc.meta.update({"graph": a.graph, "N": chain.N, "status": v.status, "criterion": v.criterion,
                     "alpha": v.evidence.get("alpha"), "beta": v.evidence.get("beta"),
                     "decay_status": dv.status, "decay_passed": dv.passed, "decay_C": a.C,
                     "decay_early_failures": len(dv.evidence["early_failures"]),
                     "decay_tail_failures": len(dv.evidence["tail_failures"]),
                     "caveat": v.caveat or ""})
    kap = dv.evidence["kappa"]
    rows = []
    ev = v.evidence
    for i, r in enumerate(ev["r"]):
        rows.append([r, kap[r - 1] if 1 <= r <= len(kap) else None, ev["summand"][i], ev["partial_sum"][i]])
    doc.table("evidence", ["r", "kappa", "summand", "partial_sum"], rows)
    return doc


def cmd_transport(a) -> Document:
    G = _load(a.graph)
    mu = FiniteMeasure.from_dict(read_measure(a.mu, G.n))
    nu = FiniteMeasure.from_dict(read_measure(a.nu, G.n))
    W, coup = wasserstein(G, mu, nu)
    Wd, pot = wasserstein_dual(G, mu, nu)
    doc = Document("transport")
    gap = abs(W - Wd)
    doc.meta.update({"graph": a.graph, "W": W, "dual": Wd, "gap": gap})
    rows = [[_name(G, r), _name(G, c), coup.mass[i, j]]
            for i, r in enumerate(coup.rows) for j, c in enumerate(coup.cols) if coup.mass[i, j] > 0]
    doc.table("coupling", ["x", "y", "mass"], rows)
    doc.table("potential", ["vertex", "f"], [[_name(G, v), x] for v, x in pot.items()])
    if gap > CROSS_TOL:
        raise CrossCheckFailed(doc)
    return doc


# --------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvelab", description="Ollivier-type curvature of weighted graphs.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, graph=True):
        if graph:
            sp.add_argument("graph", help="curvegraph v1 file")
        sp.add_argument("--format", choices=("json", "csv", "table"), default="json")
        sp.add_argument("-o", "--output", help="write to this file instead of stdout")

    s = sub.add_parser("curvature", help="edge or pair curvatures")
    common(s)
    s.add_argument("--pair", nargs=2, metavar=("X", "Y"))
    s.add_argument("--method", choices=tuple(cv.ENGINES), default="dual_lp")
    s.add_argument("--verify", action="store_true", help="run every applicable engine and compare")
    s.add_argument("--witness", action="store_true", help="emit optimality witnesses")
    s.add_argument("--jobs", type=int, default=1)

    s = sub.add_parser("profile", help="comparison profile around a root")
    common(s)
    s.add_argument("--root", required=True)

    s = sub.add_parser("heat", help="heat semigroup checks")
    common(s)
    s.add_argument("--times", nargs="+", required=True)
    s.add_argument("--f", help="indicator:X, distance:X or file:PATH")
    s.add_argument("--pair", nargs=2, metavar=("X", "Y"))
    s.add_argument("--cutoff", help="cutoff function file (v <index> <value> lines)")
    s.add_argument("--recovery", action="store_true", help="curvature recovery from the heat kernel")

    s = sub.add_parser("generate", help="write a generated graph")
    s.add_argument("kind", choices=tuple(GENERATORS))
    s.add_argument("-o", "--output")
    s.add_argument("--n", type=int, default=10, help="size, or truncation radius N for chains")
    s.add_argument("--p", type=float, default=0.1)
    s.add_argument("--seed", type=int)
    s.add_argument("--weights", help="lo,hi")
    s.add_argument("--measures", help="lo,hi")
    s.add_argument("--max-degree", type=int)
    s.add_argument("--eps", type=float, default=1.0)
    s.add_argument("--K", type=float, default=1.0)
    s.add_argument("--k", help="geometric:<q>")
    s.add_argument("--w-up", help="comma separated rates")
    s.add_argument("--m", help="comma separated measures")
    s.add_argument("--m0", type=float)

    s = sub.add_parser("stochastic", help="stochastic completeness verdicts")
    common(s)
    s.add_argument("--root")
    s.add_argument("--C", type=float, default=1.0)

    s = sub.add_parser("transport", help="W between two measure files")
    common(s)
    s.add_argument("mu")
    s.add_argument("nu")
    return p


COMMANDS = {
    "curvature": cmd_curvature,
    "profile": cmd_profile,
    "heat": cmd_heat,
    "stochastic": cmd_stochastic,
    "transport": cmd_transport,
}


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        if a.command == "generate":
            _emit(cmd_generate(a), a.output)
            return EXIT_OK
        doc = COMMANDS[a.command](a)
        _emit(doc.render(a.format), a.output)
        return EXIT_OK
    except CrossCheckFailed as exc:
        _emit(exc.args[0].render(a.format), getattr(a, "output", None))
        print("cross-check discrepancy above tolerance", file=sys.stderr)
        return EXIT_CROSS
    except TheoremCheckFailed as exc:
        _emit(exc.args[0].render(a.format), getattr(a, "output", None))
        print("theorem-backed check failed", file=sys.stderr)
        return EXIT_THEOREM
    except SolverFailure as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (CurvelabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
