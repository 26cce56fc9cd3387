"""Countable weighted graphs given by weight oracles.

Every computation is windowed to the vertices ``1..window``. Results that
depend on the truncation carry a :class:`TruncationReport`; certificates for
the structural-set conditions are finite-sample checks on the window, never
proofs.

The weight function is split into its diagonal ``d(z) = w(z, z)`` and the
off-diagonal kernel. Interior diagonal values enter as denominators
``lam - d(z)``; they form the excluded set ``Sigma_d``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BudgetExceededError, ConvergenceError, SigmaError
from .graph_core import WeightedGraph

SIGMA_EVAL_TOL = 1e-12


@dataclass(frozen=True)
class CountableGraph:
    """Weight oracle on the vertices ``1, 2, 3, ...``.

    ``row_support(i, window)`` must yield every ``j <= window`` with
    ``w(i, j) != 0``; finite rows should also yield their entries beyond the
    window so that escapes can be detected. ``col_support`` is the same for
    columns.
    """

    weight: Callable[[int, int], complex]
    row_support: Callable[[int, int], Iterable[int]]
    col_support: Callable[[int, int], Iterable[int]]
    norm_bound: float = math.inf
    sigma_closure: tuple = ()
    size: int | None = None
    open_rows: frozenset = frozenset()

    @classmethod
    def from_graph(cls, g: WeightedGraph) -> "CountableGraph":
        cols = {j: [] for j in g.vertices}
        for (i, j) in g.weights:
            cols[j].append(i)
        for j in cols:
            cols[j].sort()

        def weight(i, j):
            return g.weight(i, j)

        def rows(i, window):
            return g.successors(i) if i <= g.n else ()

        def col(j, window):
            return cols.get(j, ())

        norm = max(
            (sum(abs(g.weight(i, j)) for i in cols[j]) for j in cols), default=0.0
        )
        return cls(weight, rows, col, norm_bound=norm, size=g.n)

    def diag(self, z) -> complex:
        return complex(self.weight(z, z))

    def probe_norm(self, window: int) -> float:
        """Largest column ``l1`` mass over columns ``1..window``."""
        best = 0.0
        for j in range(1, window + 1):
            best = max(best, sum(abs(self.weight(i, j)) for i in set(self.col_support(j, window))))
        return best


@dataclass
class TruncationReport:
    terms_used: int
    last_term_norm: float
    window: int
    tail_bound: float | None = None
    warnings: list[str] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [
            f"terms_used = {self.terms_used}",
            f"last_term_norm = {self.last_term_norm:.6e}",
        ]
        if self.tail_bound is not None:
            lines.append(f"tail_bound = {self.tail_bound:.6e}")
        lines.append(f"window = {self.window}")
        lines.append("warnings = " + ("; ".join(self.warnings) if self.warnings else "none"))
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "terms_used": self.terms_used,
            "last_term_norm": self.last_term_norm,
            "tail_bound": self.tail_bound,
            "window": self.window,
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class Violation:
    """A failed structural-set condition. ``condition`` names the failing item
    (``"1"``, ``"2"``, ``"3"`` for type B, ``"bound"`` for type A)."""

    condition: str
    witness: tuple
    detail: str = ""


@dataclass
class TypeBCertificate:
    S: frozenset
    M: dict
    nS: dict
    weighted_sum: float
    tail_bound: float
    window: int
    inconclusive: list[int] = field(default_factory=list)


@dataclass
class TypeACertificate:
    S: frozenset
    t: dict
    max_ratio: float
    slope_diagnostic: list[tuple[int, float]]
    eventually_decreasing: bool
    window: int
    n_max: int


@dataclass
class DepthSets:
    levels: list[frozenset]
    unresolved: frozenset

    def depth(self, x) -> int | None:
        for k, level in enumerate(self.levels):
            if x in level:
                return k
        return None


def _sigma_d(g: CountableGraph, S, window) -> list[complex]:
    values = {g.diag(z) for z in range(1, window + 1) if z not in S}
    values.update(complex(c) for c in g.sigma_closure)
    return sorted(values, key=lambda z: (z.real, z.imag))


def _check_lambda(g, S, lam, window):
    for s in _sigma_d(g, S, window):
        if abs(lam - s) <= SIGMA_EVAL_TOL:
            raise SigmaError(lam, s)


def taboo_measure(
    g: CountableGraph, S, n: int, x: int, window: int, node_budget: int = 10**7
) -> dict[int, complex]:
    """``j -> tau_{S,n}(x, {j})`` for ``j <= window``: summed weight of the
    length-``n`` paths from ``x`` whose intermediate vertices avoid ``S``.

    Paths are accumulated by propagating a frontier, so the cost is linear in
    the number of edges visited. Intermediate vertices beyond the window are
    dropped.
    """
    if n < 2:
        raise ValueError("taboo measure needs n >= 2")
    S = frozenset(S)
    visits = 0
    front = {x: 1.0 + 0j}
    for _ in range(n - 1):
        new: dict[int, complex] = {}
        for z, c in front.items():
            for y in g.row_support(z, window):
                visits += 1
                if y in S or y > window:
                    continue
                new[y] = new.get(y, 0j) + c * g.weight(z, y)
        if visits > node_budget:
            raise BudgetExceededError(f"taboo path enumeration exceeded {node_budget} visits")
        front = {z: c for z, c in new.items() if c != 0}
        if not front:
            return {}
    out: dict[int, complex] = {}
    for z, c in front.items():
        for j in g.row_support(z, window):
            if j <= window:
                out[j] = out.get(j, 0j) + c * g.weight(z, j)
    return out


def taboo_weight(g: CountableGraph, S, n: int, x: int, j: int, window: int, node_budget: int = 10**7) -> complex:
    return taboo_measure(g, S, n, x, window, node_budget).get(j, 0j)


def _interior_successors(g, S, z, window):
    return [y for y in g.row_support(z, window) if y not in S and y != z and g.weight(z, y) != 0]


def _find_interior_cycle(g, S, start, window):
    """Cycle reachable from ``start`` inside the interior (loops count)."""
    path, on_path, done = [], {}, set()

    def dfs(v):
        on_path[v] = len(path)
        path.append(v)
        for y in g.row_support(v, window):
            if y in S or y > window or g.weight(v, y) == 0:
                continue
            if y in on_path:
                return tuple(path[on_path[y]:]) + (y,)
            if y not in done:
                found = dfs(y)
                if found:
                    return found
        path.pop()
        del on_path[v]
        done.add(v)
        return None

    return dfs(start)


def check_type_B(
    g: CountableGraph,
    S,
    M: Callable[[int], float] | None,
    window: int,
    tail_bound: float = 0.0,
) -> TypeBCertificate | Violation:
    """Check the finite-escape conditions on the interior vertices of the window.

    ``M(x)`` bounds ``|w(x, y)|`` over interior ``y``; when omitted the
    smallest such bound observed on the window is used. ``tail_bound`` is a
    user-declared bound on the contribution of vertices beyond the window
    to ``sum n_S(x) M(x)``.
    """
    S = frozenset(S)
    if window < max(S):
        raise ValueError("window must contain S")
    inside = [x for x in range(1, window + 1) if x not in S]
    limit = len(inside) + 1
    nS, Ms, inconclusive = {}, {}, []
    for x in inside:
        succ = [y for y in g.row_support(x, window) if y not in S and g.weight(x, y) != 0]
        m = M(x) if M is not None else max((abs(g.weight(x, y)) for y in succ), default=0.0)
        Ms[x] = m
        for y in succ:
            if abs(g.weight(x, y)) > m * (1 + 1e-12):
                return Violation("2", (x, y), f"|w({x},{y})| = {abs(g.weight(x, y)):.6g} > M({x}) = {m:.6g}")
        level = {x}
        k = 0
        escaped = False
        while level:
            k += 1
            nxt = set()
            for z in level:
                for y in g.row_support(z, window):
                    if y in S or g.weight(z, y) == 0:
                        continue
                    if y > window:
                        escaped = True
                        continue
                    nxt.add(y)
            if escaped:
                break
            level = nxt
            if k > limit:
                cycle = _find_interior_cycle(g, S, x, window)
                return Violation("1", cycle or (x,), f"orbit of {x} never vanishes")
        if escaped:
            inconclusive.append(x)
            continue
        nS[x] = k
    total = sum(nS[x] * Ms[x] for x in nS) + tail_bound
    if not math.isfinite(total):
        return Violation("3", (), "weighted sum of n_S * M is not finite")
    return TypeBCertificate(S, Ms, nS, total, tail_bound, window, inconclusive)


def check_type_A(
    g: CountableGraph,
    S,
    t: Callable[[int], float],
    M_bound: Callable[[int, int], float],
    window: int,
    n_max: int,
) -> TypeACertificate | Violation:
    """Check ``|tau_{S,n}(x, {j})| <= t(n) M(x, j)`` for ``2 <= n <= n_max`` and
    ``x, j <= window``. The first failing triple is returned as a violation."""
    S = frozenset(S)
    max_ratio = 0.0
    tvals = {}
    for n in range(2, n_max + 1):
        tn = t(n)
        tvals[n] = tn
        for x in range(1, window + 1):
            for j, tau in taboo_measure(g, S, n, x, window).items():
                if tau == 0:
                    continue
                bound = tn * M_bound(x, j)
                if abs(tau) > bound * (1 + 1e-12):
                    return Violation(
                        "bound", (n, x, j), f"|tau| = {abs(tau):.6g} > t_n M = {bound:.6g}"
                    )
                if bound > 0:
                    max_ratio = max(max_ratio, abs(tau) / bound)
    slope = [(n, math.log(tvals[n]) / n) for n in sorted(tvals) if tvals[n] > 0]
    tail = [s for _, s in slope[-4:]]
    decreasing = len(tail) >= 2 and all(a > b for a, b in zip(tail, tail[1:]))
    return TypeACertificate(S, tvals, max_ratio, slope, decreasing, window, n_max)


def depth_sets(g: CountableGraph, S, window: int) -> DepthSets:
    """Levels ``S_0 = S``, ``S_k = S_{k-1} + {x : supp(x) minus x lies in S_{k-1}}``
    restricted to the window. Vertices whose support leaves the window or
    never settles are reported as unresolved."""
    S = frozenset(S)
    current = frozenset(v for v in S)
    levels = [current]
    support = {
        x: {y for y in g.row_support(x, window) if y != x and g.weight(x, y) != 0}
        for x in range(1, window + 1)
        if x not in S
    }
    while True:
        added = {x for x, sup in support.items() if x not in current and sup <= current}
        if not added:
            break
        current = current | added
        levels.append(current)
    unresolved = frozenset(x for x in support if x not in current)
    return DepthSets(levels, unresolved)


def reduced_series(
    g: CountableGraph,
    S: Sequence[int],
    lam: complex,
    tol: float = 1e-12,
    n_max: int = 200,
    window: int = 100,
) -> tuple[np.ndarray, TruncationReport]:
    """Reduced matrix on ``S`` at ``lam`` by summing the path series.

    Entry ``(i, j)`` is ``w(i, j)`` plus, for every ``n >= 2``, the weight of
    interior paths ``i -> z_1 -> ... -> z_{n-1} -> j`` divided by
    ``prod (lam - d(z_p))``. Summation stops once a term and the remaining
    interior frontier both fall below ``tol``, or the frontier is empty.
    """
    S = tuple(S)
    Sset = frozenset(S)
    lam = complex(lam)
    _check_lambda(g, Sset, lam, window)
    index = {s: a for a, s in enumerate(S)}
    k = len(S)
    R = np.array([[complex(g.weight(i, j)) for j in S] for i in S], dtype=complex)
    warnings: list[str] = []
    escaped = 0.0
    touched_open = {i for i in S if i in g.open_rows}
    fronts = []
    for i in S:
        front = {}
        for z in g.row_support(i, window):
            if z in Sset:
                continue
            if z > window:
                escaped += abs(g.weight(i, z))
                continue
            front[z] = front.get(z, 0j) + g.weight(i, z)
        fronts.append(front)
    norms = []
    n = 1
    last = 0.0
    while True:
        if all(not f for f in fronts):
            break
        if n >= n_max:
            if last > tol and len(norms) > 2 and last >= norms[len(norms) // 2]:
                raise ConvergenceError(
                    f"series terms not decaying up to n_max={n_max} (last term {last:.3e})"
                )
            warnings.append(f"n_max={n_max} reached with last term {last:.3e}")
            break
        n += 1
        term = np.zeros((k, k), dtype=complex)
        new_fronts = []
        mass = 0.0
        for a, front in enumerate(fronts):
            new = {}
            for z, c in front.items():
                if z in g.open_rows:
                    touched_open.add(z)
                c = c / (lam - g.diag(z))
                for y in g.row_support(z, window):
                    if y == z:
                        continue
                    wzy = g.weight(z, y)
                    if wzy == 0:
                        continue
                    if y in Sset:
                        term[a, index[y]] += c * wzy
                    elif y > window:
                        escaped += abs(c * wzy)
                    else:
                        new[y] = new.get(y, 0j) + c * wzy
            new_fronts.append(new)
            mass += sum(abs(c) for c in new.values())
        R += term
        fronts = new_fronts
        last = float(np.abs(term).max())
        norms.append(last)
        if last < tol and mass < tol:
            break
    if escaped > 0:
        warnings.append(f"path weight {escaped:.3e} left the window and was dropped")
    if touched_open:
        rows = ", ".join(map(str, sorted(touched_open)))
        warnings.append(f"rows {rows} are infinite; paths through vertices beyond the window were not included")
    return R, TruncationReport(n, last, window, warnings=warnings)


def _dq_matrix(g: CountableGraph, S, lam, window):
    """Dense ``D(lam) Q`` on the window plus the number of rows that reach past it."""
    Sset = frozenset(S)
    DQ = np.zeros((window, window), dtype=complex)
    leaks = 0
    for z in range(1, window + 1):
        if z in Sset:
            continue
        denom = lam - g.diag(z)
        if z in g.open_rows:
            leaks += 1
        for y in g.row_support(z, window):
            if y == z:
                continue
            if y > window:
                if g.weight(z, y) != 0:
                    leaks += 1
                continue
            DQ[z - 1, y - 1] = g.weight(z, y) / denom
    return DQ, leaks


def reconstruct_fixed_point(
    g: CountableGraph,
    S: Sequence[int],
    lam0: complex,
    v: Sequence[complex],
    f: Sequence[complex] | None = None,
    tol: float = 1e-13,
    window: int = 100,
    max_iter: int | None = None,
) -> tuple[np.ndarray, TruncationReport]:
    """Solve ``u = (vbar - D f) + D Q u`` on the window by Neumann iteration.

    ``vbar`` extends ``v`` by zero, ``(D h)(z) = h(z) / (lam0 - d(z))`` off
    ``S`` and vanishes on ``S``, ``Q`` is the off-diagonal kernel. With
    ``f = 0`` this is the reconstruction operator. Iteration stops when
    successive iterates differ by less than ``tol`` in ``l1``; the budget
    defaults to ``10 * window`` iterations.
    """
    S = tuple(S)
    lam0 = complex(lam0)
    _check_lambda(g, frozenset(S), lam0, window)
    DQ, leaks = _dq_matrix(g, S, lam0, window)
    base = np.zeros(window, dtype=complex)
    for s, val in zip(S, v):
        base[s - 1] = val
    if f is not None:
        f = np.asarray(f, dtype=complex)[:window]
        for z in range(1, window + 1):
            if z not in S:
                base[z - 1] -= f[z - 1] / (lam0 - g.diag(z))
    budget = 10 * window if max_iter is None else max_iter
    u = base.copy()
    diff = math.inf
    for it in range(1, budget + 1):
        nxt = base + DQ @ u
        diff = float(np.abs(nxt - u).sum())
        u = nxt
        if diff < tol:
            break
    else:
        raise ConvergenceError(f"fixed-point iteration did not contract within {budget} steps (last change {diff:.3e})")
    warnings = []
    if leaks:
        warnings.append(f"{leaks} interior rows reference vertices beyond the window")
    return u, TruncationReport(it, diff, window, warnings=warnings)


def reconstruct_by_depth(g: CountableGraph, S: Sequence[int], lam0: complex, v, window: int) -> np.ndarray:
    """Level-by-level reconstruction over :func:`depth_sets`; unresolved
    vertices are left as NaN."""
    S = tuple(S)
    lam0 = complex(lam0)
    _check_lambda(g, frozenset(S), lam0, window)
    levels = depth_sets(g, S, window)
    u = np.full(window, np.nan, dtype=complex)
    for s, val in zip(S, v):
        u[s - 1] = val
    for prev, level in zip(levels.levels, levels.levels[1:]):
        for z in sorted(level - prev):
            acc = 0j
            for y in g.row_support(z, window):
                if y != z and y in prev:
                    acc += g.weight(z, y) * u[y - 1]
            u[z - 1] = acc / (lam0 - g.diag(z))
    return u


def one_inf_norm_gap(g1: CountableGraph, g2: CountableGraph, window: int) -> float:
    """``sup_{j <= window} sum_i |w1(i, j) - w2(i, j)|``."""
    best = 0.0
    for j in range(1, window + 1):
        rows = set(g1.col_support(j, window)) | set(g2.col_support(j, window))
        best = max(best, sum(abs(g1.weight(i, j) - g2.weight(i, j)) for i in rows))
    return best
