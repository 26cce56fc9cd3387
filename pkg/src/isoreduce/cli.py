"""Command-line front end.

Exit codes: 0 success, 1 domain error (non-structural set, lambda in the
excluded set, invalid chain parameters), 2 input or parse error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from ._complex import format_complex, parse_complex
from .errors import (
    DomainError,
    InputParseError,
    NotAnEigenvalueError,
    NumericalError,
)
from .graph_core import compute_depths, is_structural_set, parse_graph, sigma_values
from .markov_family import (
    monte_carlo_stationary,
    parse_params,
    stationary_closed_form,
    total_variation,
    truncation_convergence,
)
from .reduction import (
    SchurReducer,
    find_reduced_roots,
    reduce_branches,
    reduce_linear_solve,
    reduced_spectrum,
    reconstruct_eigenvector,
)

EXIT_OK, EXIT_DOMAIN, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass
class RunReport:
    command: list[str]
    input_digest: str
    results: dict = field(default_factory=dict)
    truncation: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    duration: float | None = None
    text: list[str] = field(default_factory=list)
    exit_code: int = EXIT_OK

    def to_json(self) -> str:
        doc = {
            "command": self.command,
            "input_digest": self.input_digest,
            "results": self.results,
            "truncation": self.truncation,
            "warnings": self.warnings,
            "duration": self.duration,
        }
        return json.dumps(doc, indent=2, sort_keys=False)

    def to_text(self) -> str:
        lines = ["command: " + " ".join(self.command), f"input_sha256: {self.input_digest}"]
        lines += self.text
        for rep in self.truncation:
            lines.append("truncation:")
            lines += [f"  {k} = {v}" for k, v in rep.items()]
        lines.append("warnings: " + ("; ".join(self.warnings) if self.warnings else "none"))
        if self.duration is not None:
            lines.append(f"duration: {self.duration:.3f} s")
        return "\n".join(lines)


def _c(z) -> str:
    return format_complex(z)


def _matrix_lines(M, labels) -> list[str]:
    cells = [[_c(z) for z in row] for row in M]
    width = max((len(c) for row in cells for c in row), default=0)
    head = "      " + " ".join(f"{lab:>{width}}" for lab in labels)
    body = [f"{lab:>5} " + " ".join(f"{c:>{width}}" for c in row) for lab, row in zip(labels, cells)]
    return [head] + body


def _read(path) -> tuple[str, str]:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise InputParseError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InputParseError(f"{path} is not UTF-8") from exc
    return text, hashlib.sha256(data).hexdigest()


def _load_graph(path):
    text, digest = _read(path)
    g, S = parse_graph(text)
    return g, S, digest


def _lambda(text):
    try:
        return parse_complex(text)
    except ValueError as exc:
        raise InputParseError(str(exc)) from exc


def cmd_check(args, report: RunReport):
    g, S, report.input_digest = _load_graph(args.graph)
    verdict = is_structural_set(g, S)
    sigma = sorted(sigma_values(g, S), key=lambda z: (z.real, z.imag))
    report.results["structural"] = verdict.structural
    report.results["S"] = list(S)
    report.results["sigma"] = [_c(z) for z in sigma]
    report.text.append("verdict: " + ("structural" if verdict else "not structural"))
    report.text.append("S: " + " ".join(map(str, S)))
    report.text.append("sigma: " + (", ".join(_c(z) for z in sigma) or "(empty)"))
    if not verdict:
        report.results["witness"] = list(verdict.witness)
        report.text.append("witness: " + " -> ".join(map(str, verdict.witness)))
        report.exit_code = EXIT_DOMAIN
        return
    depths = compute_depths(g, S)
    report.results["depth"] = {str(v): depths.depth[v] for v in g.vertices}
    report.text.append("vertex  depth")
    report.text += [f"{v:>6}  {depths.depth[v]:>5}" for v in g.vertices]


def cmd_reduce(args, report: RunReport):
    g, S, report.input_digest = _load_graph(args.graph)
    lam = _lambda(args.lam)
    results = {}
    if args.method in ("solve", "both"):
        results["solve"] = reduce_linear_solve(g, S, lam)
    if args.method in ("branches", "both"):
        results["branches"] = reduce_branches(g, S, lam)
    main = results.get("solve") or results["branches"]
    report.results["lambda"] = _c(lam)
    report.results["S"] = list(main.S)
    report.results["method"] = args.method
    report.results["digits"] = 15
    report.text.append(f"lambda: {_c(lam)}")
    report.text.append(f"method: {args.method}")
    for name, ev in results.items():
        report.results[f"R_{name}"] = [[_c(z) for z in row] for row in ev.entries]
        report.text.append(f"reduced matrix ({name}, 15 significant digits):")
        report.text += _matrix_lines(ev.entries, ev.S)
    if args.method == "both":
        disc = float(np.abs(results["solve"].entries - results["branches"].entries).max())
        report.results["max_discrepancy"] = disc
        report.text.append(f"max_discrepancy: {disc:.3e}")


def cmd_spectrum(args, report: RunReport):
    g, S, report.input_digest = _load_graph(args.graph)
    if args.reduced_only:
        roots = find_reduced_roots(g, S)
        sigma = sorted(SchurReducer(g, S).sigma, key=lambda z: (z.real, z.imag))
        report.results["mode"] = "reduced-only"
        report.results["roots"] = [{"lambda": _c(r), "residual": res} for r, res in roots]
        report.results["sigma"] = [_c(z) for z in sigma]
        report.text.append("mode: reduced-only (Newton on det(R(lambda) - lambda I))")
        report.text.append("sigma: " + (", ".join(_c(z) for z in sigma) or "(empty)"))
        report.text.append(f"{'k':>3}  {'lambda':<44} residual")
        report.text += [f"{k:>3}  {_c(r):<44} {res:.3e}" for k, (r, res) in enumerate(roots, 1)]
        return
    rep = reduced_spectrum(g, S)
    report.results["mode"] = "full"
    report.results["sigma_tol"] = rep.sigma_tol
    report.results["sigma"] = [_c(z) for z in rep.sigma]
    report.results["reduced"] = [{"lambda": _c(z), "residual": r} for z, r in rep.reduced_spectrum]
    report.results["excluded"] = [_c(z) for z in rep.excluded]
    report.text.append(f"sigma_tol: {rep.sigma_tol:.3e}")
    report.text.append("sigma: " + (", ".join(_c(z) for z in rep.sigma) or "(empty)"))
    report.text.append(f"{'k':>3}  {'lambda':<44} residual")
    report.text += [f"{k:>3}  {_c(z):<44} {r:.3e}" for k, (z, r) in enumerate(rep.reduced_spectrum, 1)]
    report.text.append("excluded: " + (", ".join(_c(z) for z in rep.excluded) or "(none)"))


def cmd_reconstruct(args, report: RunReport):
    g, S, report.input_digest = _load_graph(args.graph)
    if args.lambda0 is not None:
        lam0 = _lambda(args.lambda0)
    else:
        reduced = reduced_spectrum(g, S).reduced_spectrum
        if not 1 <= args.k <= len(reduced):
            raise NotAnEigenvalueError(f"index {args.k} outside 1..{len(reduced)} of the reduced spectrum")
        lam0 = reduced[args.k - 1][0]
    red = SchurReducer(g, S)
    R = red(lam0)
    mu, vecs = np.linalg.eig(R - lam0 * np.eye(len(red.S)))
    best = int(np.argmin(np.abs(mu)))
    scale = max(1.0, abs(lam0), float(np.abs(R).max()))
    if abs(mu[best]) > args.tol * scale:
        raise NotAnEigenvalueError(
            f"{_c(lam0)} is not an eigenvalue of R(lambda0): nearest gap {abs(mu[best]):.3e}"
        )
    v = vecs[:, best]
    u = reconstruct_eigenvector(g, red.S, lam0, v)
    pivot = u[int(np.argmax(np.abs(u)))]
    u = u / pivot
    A = g.to_dense()
    resid = float(np.linalg.norm(A @ u - lam0 * u) / np.linalg.norm(u))
    report.results["lambda0"] = _c(lam0)
    report.results["u"] = [_c(z) for z in u]
    report.results["residual"] = resid
    report.results["eigen_tol"] = args.tol
    report.text.append(f"lambda0: {_c(lam0)}")
    report.text.append("vertex  u (scaled so the largest entry is 1)")
    report.text += [f"{i:>6}  {_c(z)}" for i, z in enumerate(u, 1)]
    report.text.append(f"residual |Au - lambda0 u| / |u|: {resid:.3e}")


def _load_params(path, report):
    text, report.input_digest = _read(path)
    return parse_params(text).validate()


def cmd_markov(args, report: RunReport):
    p = _load_params(args.params, report)
    tol = args.tol if args.tol is not None else 1e-12
    report.results["params"] = p.label
    report.results["tol"] = tol
    if args.action == "stationary":
        st = stationary_closed_form(p, tol=tol, window=args.window)
        report.results["q"] = st.q.tolist()
        report.results["tail_bound"] = st.tail_bound
        report.results["mass"] = float(st.q.sum() + st.tail_bound)
        report.results["v"] = list(st.v)
        report.truncation.append(st.report.to_dict())
        report.text.append(f"params: {p.label}")
        report.text.append(f"v: ({st.v[0]:.15g}, {st.v[1]:.15g})")
        report.text.append(f"{'i':>4}  q(i)")
        report.text += [f"{i:>4}  {x:.15g}" for i, x in enumerate(st.q, 1)]
        report.text.append(f"tail_bound: {st.tail_bound:.6e}")
        report.text.append(f"sum q + tail: {st.q.sum() + st.tail_bound:.15g}")
    elif args.action == "convergence":
        table = truncation_convergence(p, args.n_list, tol=tol)
        report.results["window"] = table.window
        report.results["rows"] = [
            {"n": r.n, "gap": r.gap, "two_max_b": r.gap_exact, "two_C_rho_n": r.gap_bound, "tv_distance": r.tv_distance}
            for r in table.rows
        ]
        report.results["monotone"] = table.monotone
        report.warnings += table.warnings
        report.text.append(f"params: {p.label}")
        report.text.append(f"window: {table.window}")
        report.text.append(f"{'n':>4}  {'gap':>22}  {'2 max b_i':>22}  {'2 C rho^n':>12}  {'tv_distance':>12}")
        report.text += [
            f"{r.n:>4}  {r.gap:>22.15g}  {r.gap_exact:>22.15g}  {r.gap_bound:>12.6e}  {r.tv_distance:>12.6e}"
            for r in table.rows
        ]
    else:
        st = stationary_closed_form(p, tol=tol, window=args.window)
        emp = monte_carlo_stationary(p, steps=args.steps, seed=args.seed, window=args.window)
        tv = total_variation(emp.freq, st.q)
        report.results.update(
            seed=args.seed, steps=emp.steps, burn_in=emp.burn_in,
            freq=emp.freq.tolist(), above_window=emp.above_window, tv_distance=tv,
        )
        report.text.append(f"params: {p.label}")
        report.text.append(f"seed: {args.seed}  steps: {emp.steps}  burn_in: {emp.burn_in}")
        report.text.append(f"{'i':>4}  {'empirical':>10}  {'closed form':>12}")
        report.text += [f"{i:>4}  {f:>10.6f}  {q:>12.6f}" for i, (f, q) in enumerate(zip(emp.freq, st.q), 1)]
        report.text.append(f"above_window: {emp.above_window:.6f}")
        report.text.append(f"tv_distance: {tv:.6e}")


def _int_list(text):
    try:
        values = [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit a JSON report")
    common.add_argument("--no-timestamp", action="store_true", help="omit the wall-clock duration")

    parser = argparse.ArgumentParser(prog="isoreduce", description="Isospectral reduction of weighted graphs.")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("check", parents=[common], help="verify the declared structural set")
    p.add_argument("graph")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("reduce", parents=[common], help="evaluate the reduced matrix at lambda")
    p.add_argument("graph")
    p.add_argument("--lambda", dest="lam", required=True, metavar="Z")
    p.add_argument("--method", choices=("branches", "solve", "both"), default="solve")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalues split by the excluded set")
    p.add_argument("graph")
    p.add_argument("--reduced-only", action="store_true", help="find zeros of det(R(lambda) - lambda I) directly")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("reconstruct", parents=[common], help="eigenvector from the reduced problem")
    p.add_argument("graph")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--lambda0", metavar="Z")
    which.add_argument("-k", type=int, help="1-based index into the reduced spectrum")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("markov", parents=[common], help="stationary measure of the two-state-reducible chain")
    p.add_argument("action", choices=("stationary", "convergence", "simulate"))
    p.add_argument("params")
    p.add_argument("--window", type=int, default=40)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=1_000_000)
    p.add_argument("--n-list", type=_int_list, default=[3, 5, 8, 12])
    p.set_defaults(func=cmd_markov)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    report = RunReport(command=["isoreduce"] + argv, input_digest="")
    start = time.perf_counter()
    try:
        args.func(args, report)
    except InputParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if not args.no_timestamp:
        report.duration = time.perf_counter() - start
    print(report.to_json() if args.json else report.to_text())
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
