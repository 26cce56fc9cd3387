"""Finite weighted directed graphs.

Vertices are labelled ``1..n``. The weight ``w(i, j)`` is the entry ``A[i, j]``
of the weighted adjacency matrix, so the operator acts as
``(A f)(i) = sum_j w(i, j) f(j)`` and a path ``(i_0, ..., i_p)`` requires
``w(i_l, i_{l+1}) != 0``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import GraphParseError, NotStructuralError


@dataclass(frozen=True)
class WeightedGraph:
    n: int
    weights: Mapping[tuple[int, int], complex]
    _succ: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a graph needs at least one vertex")
        clean = {}
        succ = {i: [] for i in range(1, self.n + 1)}
        for (i, j), w in self.weights.items():
            if not (1 <= i <= self.n and 1 <= j <= self.n):
                raise ValueError(f"edge ({i}, {j}) outside 1..{self.n}")
            w = complex(w)
            if not (math.isfinite(w.real) and math.isfinite(w.imag)):
                raise ValueError(f"non-finite weight on ({i}, {j})")
            if w == 0:
                raise ValueError(f"explicit zero weight on ({i}, {j})")
            clean[(i, j)] = w
            succ[i].append(j)
        for i in succ:
            succ[i].sort()
        object.__setattr__(self, "weights", clean)
        object.__setattr__(self, "_succ", succ)

    @classmethod
    def from_edges(cls, n, edges):
        """Build from ``(i, j, w)`` triples, dropping zero weights."""
        weights = {}
        for i, j, w in edges:
            if w != 0:
                weights[(i, j)] = complex(w)
        return cls(n, weights)

    @classmethod
    def from_dense(cls, A):
        A = np.asarray(A)
        n = A.shape[0]
        weights = {
            (i + 1, j + 1): complex(A[i, j])
            for i in range(n)
            for j in range(n)
            if A[i, j] != 0
        }
        return cls(n, weights)

    @property
    def vertices(self):
        return range(1, self.n + 1)

    def weight(self, i, j) -> complex:
        return self.weights.get((i, j), 0j)

    def successors(self, i) -> list[int]:
        """Vertices ``j`` with ``w(i, j) != 0``, ascending."""
        return self._succ[i]

    def to_dense(self) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=complex)
        for (i, j), w in self.weights.items():
            A[i - 1, j - 1] = w
        return A

    def inf_norm(self) -> float:
        rows = np.zeros(self.n)
        for (i, _), w in self.weights.items():
            rows[i - 1] += abs(w)
        return float(rows.max())


@dataclass(frozen=True)
class StructuralVerdict:
    structural: bool
    witness: tuple[int, ...] | None = None

    def __bool__(self):
        return self.structural


@dataclass(frozen=True)
class DepthAssignment:
    S: frozenset
    depth: dict
    sigma: frozenset

    def level_sets(self) -> list[frozenset]:
        """``[S_0, S_1, ...]`` where ``S_k`` holds the vertices of depth ``<= k``."""
        top = max(self.depth.values())
        return [
            frozenset(v for v, d in self.depth.items() if d <= k) for k in range(top + 1)
        ]

    def order(self) -> list[int]:
        """Interior vertices sorted by (depth, label)."""
        return sorted((v for v in self.depth if v not in self.S), key=lambda v: (self.depth[v], v))


def _check_subset(g: WeightedGraph, S) -> frozenset:
    S = frozenset(S)
    if not S:
        raise ValueError("structural set must be nonempty")
    bad = [v for v in S if not 1 <= v <= g.n]
    if bad:
        raise ValueError(f"vertices {sorted(bad)} outside 1..{g.n}")
    return S


def interior(g: WeightedGraph, S) -> list[int]:
    S = frozenset(S)
    return [v for v in g.vertices if v not in S]


def sigma_values(g: WeightedGraph, S) -> frozenset:
    """Diagonal weights of the vertices outside ``S`` (zero included)."""
    return frozenset(g.weight(v, v) for v in interior(g, S))


def _find_cycle(g: WeightedGraph, S: frozenset):
    """First non-loop cycle inside ``V \\ S`` found by DFS in vertex order."""
    inside = [v for v in g.vertices if v not in S]
    state = dict.fromkeys(inside, 0)  # 0 new, 1 on stack, 2 done
    for root in inside:
        if state[root]:
            continue
        stack = [(root, iter(g.successors(root)))]
        path = [root]
        state[root] = 1
        while stack:
            v, it = stack[-1]
            for y in it:
                if y == v or y in S:
                    continue
                if state[y] == 1:
                    k = path.index(y)
                    return tuple(path[k:]) + (y,)
                if state[y] == 0:
                    state[y] = 1
                    path.append(y)
                    stack.append((y, iter(g.successors(y))))
                    break
            else:
                state[v] = 2
                stack.pop()
                path.pop()
    return None


def is_structural_set(g: WeightedGraph, S: Iterable[int]) -> StructuralVerdict:
    """Check that every non-loop cycle of ``g`` meets ``S``.

    Equivalently, the subgraph induced on ``V \\ S`` with loops removed is
    acyclic. On failure the verdict carries a witness cycle written as a
    closed vertex sequence, e.g. ``(2, 3, 2)``.
    """
    S = _check_subset(g, S)
    cycle = _find_cycle(g, S)
    if cycle is None:
        return StructuralVerdict(True)
    return StructuralVerdict(False, cycle)


def topological_interior(g: WeightedGraph, S) -> list[int]:
    """Kahn order of the loop-stripped interior so that every edge
    ``z -> y`` between interior vertices has ``y`` before ``z``.

    Raises NotStructuralError if the interior has a non-loop cycle.
    """
    S = frozenset(S)
    inside = [v for v in g.vertices if v not in S]
    # count interior successors; a vertex is ready once all of them are placed
    pending = {v: sum(1 for y in g.successors(v) if y != v and y not in S) for v in inside}
    preds = {v: [] for v in inside}
    for v in inside:
        for y in g.successors(v):
            if y != v and y not in S:
                preds[y].append(v)
    ready = deque(sorted(v for v in inside if pending[v] == 0))
    order = []
    while ready:
        y = ready.popleft()
        order.append(y)
        for v in preds[y]:
            pending[v] -= 1
            if pending[v] == 0:
                ready.append(v)
    if len(order) != len(inside):
        raise NotStructuralError("interior contains a non-loop cycle", _find_cycle(g, S))
    return order


def compute_depths(g: WeightedGraph, S: Iterable[int]) -> DepthAssignment:
    """Depth of every vertex relative to the structural set ``S``.

    Vertices of ``S`` have depth 0; an interior vertex has depth one more
    than the largest depth among its successors, self-loops ignored.
    """
    S = _check_subset(g, S)
    depth = dict.fromkeys(S, 0)
    for v in topological_interior(g, S):
        depth[v] = 1 + max((depth[y] for y in g.successors(v) if y != v), default=0)
    return DepthAssignment(S, depth, sigma_values(g, S))


def enumerate_branches(g: WeightedGraph, S: Iterable[int], i: int, j: int) -> list[tuple[int, ...]]:
    """All branches from ``i`` to ``j``: simple paths whose interior vertices
    avoid ``S``. Sorted lexicographically."""
    S = _check_subset(g, S)
    found = []
    path = [i]
    on_path = {i}

    def walk(v):
        for y in g.successors(v):
            if y == j:
                found.append(tuple(path) + (j,))
            if y not in S and y not in on_path:
                path.append(y)
                on_path.add(y)
                walk(y)
                path.pop()
                on_path.discard(y)

    walk(i)
    found.sort()
    return found


def all_branches(g: WeightedGraph, S: Iterable[int]) -> dict:
    """Branch lists for every ordered pair in ``S``, keyed by ``(i, j)``."""
    S = sorted(_check_subset(g, S))
    return {(i, j): enumerate_branches(g, S, i, j) for i in S for j in S}


def parse_graph(text: str) -> tuple[WeightedGraph, tuple[int, ...]]:
    """Parse the edge-list format::

        # comment
        n 3
        S 1
        e 1 2 0.5        # weight 0.5
        e 2 1 1.0 -2.0   # weight 1-2i

    Returns the graph and the declared structural set (as given, in order).
    """
    n = None
    S = None
    weights = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "n":
            if n is not None:
                raise GraphParseError("duplicate 'n' line", lineno)
            if len(rest) != 1:
                raise GraphParseError("expected 'n <count>'", lineno)
            try:
                n = int(rest[0])
            except ValueError:
                raise GraphParseError(f"bad vertex count {rest[0]!r}", lineno) from None
            if n < 1:
                raise GraphParseError("vertex count must be >= 1", lineno)
        elif head == "S":
            if S is not None:
                raise GraphParseError("duplicate 'S' line", lineno)
            if not rest:
                raise GraphParseError("structural set is empty", lineno)
            try:
                S = tuple(int(t) for t in rest)
            except ValueError:
                raise GraphParseError("bad vertex in 'S' line", lineno) from None
            if len(set(S)) != len(S):
                raise GraphParseError("repeated vertex in 'S' line", lineno)
            S_line = lineno
        elif head == "e":
            if n is None:
                raise GraphParseError("'e' line before 'n' line", lineno)
            if len(rest) not in (3, 4):
                raise GraphParseError("expected 'e <i> <j> <re> [<im>]'", lineno)
            try:
                i, j = int(rest[0]), int(rest[1])
                w = complex(float(rest[2]), float(rest[3]) if len(rest) == 4 else 0.0)
            except ValueError:
                raise GraphParseError("malformed edge line", lineno) from None
            if not (1 <= i <= n and 1 <= j <= n):
                raise GraphParseError(f"vertex out of range 1..{n}", lineno)
            if not (math.isfinite(w.real) and math.isfinite(w.imag)):
                raise GraphParseError("non-finite weight", lineno)
            if (i, j) in weights:
                raise GraphParseError(f"duplicate edge ({i}, {j})", lineno)
            weights[(i, j)] = w
        else:
            raise GraphParseError(f"unknown directive {head!r}", lineno)
    if n is None:
        raise GraphParseError("missing 'n' line")
    if S is None:
        raise GraphParseError("missing 'S' line")
    if any(not 1 <= v <= n for v in S):
        raise GraphParseError(f"structural vertex out of range 1..{n}", S_line)
    g = WeightedGraph(n, {k: w for k, w in weights.items() if w != 0})
    return g, S


def serialize_graph(g: WeightedGraph, S: Iterable[int]) -> str:
    lines = [f"n {g.n}", "S " + " ".join(str(v) for v in S)]
    for (i, j), w in sorted(g.weights.items()):
        if w.imag == 0:
            lines.append(f"e {i} {j} {w.real!r}")
        else:
            lines.append(f"e {i} {j} {w.real!r} {w.imag!r}")
    return "\n".join(lines) + "\n"


def random_structural_graph(
    rng: np.random.Generator,
    n: int,
    s_size: int | None = None,
    density: float = 0.4,
    loop_prob: float = 0.5,
) -> tuple[WeightedGraph, tuple[int, ...]]:
    """Random graph with a planted structural set.

    Interior edges only run from later to earlier vertices of a random
    interior order, so the interior is acyclic apart from loops. Weights are
    uniform in the complex unit disk.
    """
    if s_size is None:
        s_size = int(rng.integers(1, n + 1))
    perm = rng.permutation(np.arange(1, n + 1))
    S = tuple(sorted(int(v) for v in perm[:s_size]))
    inner = [int(v) for v in perm[s_size:]]
    rank = {v: k for k, v in enumerate(inner)}

    def draw():
        r = math.sqrt(rng.random())
        t = 2 * math.pi * rng.random()
        return complex(r * math.cos(t), r * math.sin(t))

    weights = {}
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i == j:
                if rng.random() < loop_prob:
                    weights[(i, i)] = draw()
                continue
            if i in rank and j in rank and rank[j] >= rank[i]:
                continue
            if rng.random() < density:
                weights[(i, j)] = draw()
    weights = {k: w for k, w in weights.items() if w != 0}
    return WeightedGraph(n, weights), S
