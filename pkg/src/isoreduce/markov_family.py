"""A countable Markov chain with a two-state structural set.

From state 1 the chain jumps to state ``i`` with probability ``a_i``; from
state ``i >= 3`` it steps down to ``i - 1`` with probability ``b_{i-1}`` and
returns to 1 otherwise; state 2 stays with probability ``1 - b_1``. With the
column convention ``w(i, j) = P(j -> i)`` the matrix is column-stochastic.

The stationary measure is computed from the 2x2 reduced matrix on ``{1, 2}``
and verified independently by power iteration on a folded finite surrogate
and by Monte Carlo simulation.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    ConvergenceError,
    InvalidParamsError,
    NumericalError,
    ParamsParseError,
    WindowTooSmallError,
)
from .infinite import CountableGraph, TruncationReport, one_inf_norm_gap, reconstruct_fixed_point

STRUCTURAL_SET = (1, 2)


@dataclass(frozen=True)
class FamilyParams:
    """Transition probabilities plus the analytic bounds the truncations need.

    ``a_tail_bound(N)`` must bound ``sum_{i >= N} a_i`` from above, and
    ``b_i < C * rho**i`` must hold for every index.
    """

    a: Callable[[int], float]
    b: Callable[[int], float]
    C: float
    rho: float
    a_tail_bound: Callable[[int], float]
    label: str = "custom"

    @classmethod
    def geometric(cls, alpha: float = 0.5, beta: float = 0.5, rho: float = 0.6, C: float = 1.01) -> "FamilyParams":
        """``a_i = (1 - alpha) alpha^(i-1)`` and ``b_i = beta rho^i``."""
        return cls(
            a=lambda i: (1.0 - alpha) * alpha ** (i - 1),
            b=lambda i: beta * rho**i,
            C=C,
            rho=rho,
            a_tail_bound=lambda N: alpha ** (N - 1),
            label=f"geometric(alpha={alpha!r}, beta={beta!r}, rho={rho!r}, C={C!r})",
        )

    @classmethod
    def reference(cls) -> "FamilyParams":
        return cls.geometric(0.5, 0.5, 0.6, 1.01)

    def validate(self, probe: int = 200, eps: float = 1e-12) -> "FamilyParams":
        """Check both conditions on indices ``1..probe``; raises
        :class:`InvalidParamsError` naming the violated one (``B1`` or ``B2``)."""
        if not self.C > 1:
            raise InvalidParamsError("B2", f"C must exceed 1, got {self.C}")
        if not 0 < self.rho < 1:
            raise InvalidParamsError("B2", f"rho must lie in (0, 1), got {self.rho}")
        partial = 0.0
        checkpoints = {1, 2, 5, 10, 20, 50, 100, probe}
        for i in range(1, probe + 1):
            ai, bi = self.a(i), self.b(i)
            if not 0 < ai < 1:
                raise InvalidParamsError("B1", f"a_{i} = {ai} is not in (0, 1)")
            if not 0 < bi < 1:
                raise InvalidParamsError("B1", f"b_{i} = {bi} is not in (0, 1)")
            if not bi < self.C * self.rho**i:
                raise InvalidParamsError("B2", f"b_{i} = {bi} >= C rho^{i} = {self.C * self.rho ** i}")
            partial += ai
            if i in checkpoints:
                total = partial + self.a_tail_bound(i + 1)
                if abs(total - 1.0) > eps:
                    raise InvalidParamsError("B1", f"sum of a_i up to {i} plus tail bound is {total!r}, not 1")
        return self

    def b_product(self, n: int) -> float:
        """``t_n = prod_{i=1}^{n-1} b_i``."""
        return math.prod(self.b(i) for i in range(1, n))

    def type_a_sequence(self, n: int) -> float:
        """Majorant of the taboo weights: ``C^2 (rho^3 + rho^(n+1)/(1-rho)) prod_{k=1}^{n-3} C rho^k``."""
        C, rho = self.C, self.rho
        head = C**2 * (rho**3 + rho ** (n + 1) / (1 - rho))
        return head * math.prod(C * rho**k for k in range(1, n - 2))

    def type_a_mass(self, i: int, j: int) -> float:
        return self.rho ** (i - 1)


def parse_params(text: str) -> FamilyParams:
    """Parse a ``key = value`` parameter file. Only ``family = geometric`` is
    available from text; other families are built in code."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParamsParseError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ParamsParseError(f"duplicate key {key!r}", lineno)
        values[key] = value
    family = values.pop("family", "geometric")
    if family != "geometric":
        raise ParamsParseError(f"unknown family {family!r}")
    kwargs = {}
    for key in ("alpha", "beta", "rho", "C"):
        if key in values:
            try:
                kwargs[key] = float(values.pop(key))
            except ValueError as exc:
                raise ParamsParseError(f"{key} is not a number") from exc
    if values:
        raise ParamsParseError(f"unknown keys: {', '.join(sorted(values))}")
    return FamilyParams.geometric(**kwargs)


def family_weight(p: FamilyParams, i: int, j: int) -> float:
    """Transition probability from state ``j`` to state ``i``."""
    if j == 1:
        return p.a(i)
    if i == 2 and j == 2:
        return 1.0 - p.b(1)
    if i == j - 1:
        return p.b(i)
    if i == 1 and j >= 3:
        return 1.0 - p.b(j - 1)
    return 0.0


def truncated_weight(p: FamilyParams, n: int, i: int, j: int) -> float:
    """The approximating chain ``w_n``: states above ``n`` return straight to 1."""
    if n < 2:
        raise ValueError("truncation order must be at least 2")
    if j == 1:
        return p.a(i)
    if i == 2 and j == 2:
        return 1.0 - p.b(1)
    if i == j - 1 and j <= n:
        return p.b(i)
    if i == 1 and j > n:
        return 1.0
    if i == 1 and j >= 3:
        return 1.0 - p.b(j - 1)
    return 0.0


def _graph(weight, rows, cols) -> CountableGraph:
    # row 1 holds the return probabilities of every state, so it never ends
    return CountableGraph(weight, rows, cols, norm_bound=1.0, open_rows=frozenset({1}))


def family_graph(p: FamilyParams) -> CountableGraph:
    def rows(i, window):
        if i == 1:
            return range(1, window + 1)
        return (1, 2, 3) if i == 2 else (1, i + 1)

    def cols(j, window):
        if j == 1:
            return range(1, window + 1)
        return (1, 2) if j == 2 else (1, j - 1)

    return _graph(lambda i, j: family_weight(p, i, j), rows, cols)


def truncated_graph(p: FamilyParams, n: int) -> CountableGraph:
    def rows(i, window):
        if i == 1:
            return range(1, window + 1)
        if i == 2:
            return (1, 2, 3) if n >= 3 else (1, 2)
        return (1, i + 1) if i + 1 <= n else (1,)

    def cols(j, window):
        if j == 1:
            return range(1, window + 1)
        if j == 2:
            return (1, 2)
        return (1, j - 1) if j <= n else (1,)

    return _graph(lambda i, j: truncated_weight(p, n, i, j), rows, cols)


def reduced_2x2(p: FamilyParams, tol: float = 1e-14, max_terms: int = 10_000) -> tuple[np.ndarray, TruncationReport]:
    """Reduced matrix on ``{1, 2}`` at ``lam = 1``.

    ``s`` sums the probabilities of leaving state 2 downward to 1 through
    the interior, ``a_2 + b_2 a_3 + b_2 b_3 a_4 + ...``; the series stops at
    the first ``L`` with ``prod_{k=1}^{L} b_{k+1} < tol``, which also bounds
    the remainder because the ``a_i`` sum to at most 1.
    """
    s = 0.0
    prod = 1.0
    ell = 0
    last = 0.0
    while True:
        last = prod * p.a(ell + 2)
        s += last
        ell += 1
        prod *= p.b(ell + 1)
        if prod < tol:
            break
        if ell >= max_terms:
            raise ConvergenceError(f"b products did not drop below {tol} within {max_terms} terms")
    b1 = p.b(1)
    R = np.array([[1.0 - s, b1], [s, 1.0 - b1]])
    return R, TruncationReport(ell, last, window=ell + 2, tail_bound=prod)


@dataclass
class StationaryMeasure:
    window: int
    q: np.ndarray
    tail_bound: float
    u: np.ndarray
    v: tuple[float, float]
    reduced: np.ndarray
    report: TruncationReport

    def prob(self, i: int) -> float:
        return float(self.q[i - 1])


def _chain_sum(p: FamilyParams, i: int, stop: int | None, tol: float) -> tuple[float, float]:
    """``sum_k (prod_{l=0}^{k-2} b_{i+l}) a_{i+k-1}`` and a bound on what was left out.

    With ``stop`` the sum is finite (``k <= stop``); otherwise it runs until
    the running product times the ``a`` tail is below ``tol``.
    """
    total = 0.0
    prod = 1.0
    k = 1
    while True:
        total += prod * p.a(i + k - 1)
        if stop is not None and k >= stop:
            return total, 0.0
        prod *= p.b(i + k - 1)
        k += 1
        rest = prod * p.a_tail_bound(i + k - 1)
        if stop is None and rest < tol:
            return total, rest


def stationary_closed_form(p: FamilyParams, tol: float = 1e-12, window: int = 40) -> StationaryMeasure:
    """Stationary probabilities on ``1..window`` from the reduced 2x2 matrix.

    ``v = (b_1, s)`` spans the fixed vectors of the reduced matrix; every
    state ``i >= 3`` is reached only through 1, so ``u(i)`` is ``v(1)`` times
    the probability of the descending routes from ``i`` back to 1. The mass
    beyond the window is bounded by
    ``v(1) (A_{W+1} + A_{W+2} C rho^(W+1) / (1 - rho))`` with ``A_N`` the
    declared ``a`` tail.
    """
    if window < 3:
        raise ValueError("window must be at least 3")
    R, rep = reduced_2x2(p, tol=min(tol, 1e-14))
    s = float(R[1, 0])
    v = (p.b(1), s)
    resid = np.abs((R - np.eye(2)) @ np.array(v)).sum()
    if resid > 10 * tol:
        raise NumericalError(f"eigenvector check failed: |(R - I) v| = {resid:.3e}")
    u = np.zeros(window)
    u[0], u[1] = v
    dropped = 0.0
    for i in range(3, window + 1):
        val, rest = _chain_sum(p, i, None, tol * 1e-3)
        u[i - 1] = v[0] * val
        dropped += v[0] * rest
    if (u < 0).any():
        raise NumericalError("negative stationary weight")
    W = window
    tail = v[0] * (p.a_tail_bound(W + 1) + p.a_tail_bound(W + 2) * p.C * p.rho ** (W + 1) / (1 - p.rho))
    tail += dropped
    Z = u.sum() + tail
    if tail / Z > tol:
        raise WindowTooSmallError(f"tail bound {tail / Z:.3e} beyond window {W} exceeds tol {tol:.1e}")
    warnings = list(rep.warnings)
    report = TruncationReport(rep.terms_used, rep.last_term_norm, W, tail_bound=tail / Z, warnings=warnings)
    return StationaryMeasure(W, u / Z, tail / Z, u, v, R, report)


def folded_transition_matrix(p: FamilyParams, n_states: int) -> np.ndarray:
    """Column-stochastic matrix on ``1..n_states``; mass the chain sends above
    ``n_states`` is redirected to state 1."""
    N = n_states
    W = np.zeros((N, N))
    for j in range(1, N + 1):
        for i in (range(1, N + 1) if j == 1 else (1, 2, j - 1)):
            W[i - 1, j - 1] = family_weight(p, i, j)
    W[0, 0] += p.a_tail_bound(N + 1)
    return W


def stationary_power_iteration(
    p: FamilyParams, n_states: int = 60, tol: float = 1e-14, max_iter: int = 100_000
) -> np.ndarray:
    if n_states < 3:
        raise ValueError("need at least 3 states")
    W = folded_transition_matrix(p, n_states)
    x = np.full(n_states, 1.0 / n_states)
    for _ in range(max_iter):
        nxt = W @ x
        nxt /= nxt.sum()
        if np.abs(nxt - x).sum() < tol:
            return nxt
        x = nxt
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")


@dataclass
class EmpiricalDistribution:
    freq: np.ndarray
    above_window: float
    steps: int
    burn_in: int
    seed: int | None

    @property
    def window(self) -> int:
        return len(self.freq)


class _JumpSampler:
    """Inverse CDF of ``(a_i)`` with the table extended on demand."""

    def __init__(self, p: FamilyParams, initial: int = 64):
        self.p = p
        self.cdf: list[float] = []
        self._grow(initial)

    def _grow(self, upto):
        total = self.cdf[-1] if self.cdf else 0.0
        for i in range(len(self.cdf) + 1, upto + 1):
            total += self.p.a(i)
            self.cdf.append(total)

    def __call__(self, x: float) -> int:
        while x >= self.cdf[-1]:
            if self.p.a_tail_bound(len(self.cdf) + 1) < 1e-300 or len(self.cdf) > 100_000:
                return len(self.cdf)
            self._grow(2 * len(self.cdf))
        return bisect.bisect_right(self.cdf, x) + 1


def monte_carlo_stationary(
    p: FamilyParams, steps: int = 1_000_000, seed: int | None = 0, window: int = 40, burn_in: int | None = None
) -> EmpiricalDistribution:
    """Occupation frequencies of the chain started at state 1.

    Uses numpy's PCG64 ``default_rng(seed)``; a burn-in of ``steps // 10``
    transitions is discarded.
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    burn = steps // 10 if burn_in is None else burn_in
    rng = np.random.default_rng(seed)
    draws = rng.random(burn + steps).tolist()
    jump = _JumpSampler(p)
    b = [p.b(i) for i in range(1, 256)]

    def b_at(i):
        return b[i - 1] if i <= len(b) else p.b(i)

    counts = [0] * (window + 1)
    above = 0
    state = 1
    for t, x in enumerate(draws):
        if state == 1:
            state = jump(x)
        elif state == 2:
            state = 1 if x < b_at(1) else 2
        else:
            state = state - 1 if x < b_at(state - 1) else 1
        if t >= burn:
            if state <= window:
                counts[state] += 1
            else:
                above += 1
    freq = np.array(counts[1:], dtype=float) / steps
    return EmpiricalDistribution(freq, above / steps, steps, burn, seed)


def merge_empirical(runs: Sequence[EmpiricalDistribution]) -> EmpiricalDistribution:
    """Step-weighted average of independent runs on the same window."""
    total = sum(r.steps for r in runs)
    freq = sum(r.freq * r.steps for r in runs) / total
    above = sum(r.above_window * r.steps for r in runs) / total
    return EmpiricalDistribution(freq, above, total, sum(r.burn_in for r in runs), None)


def total_variation(q1, q2) -> float:
    n = max(len(q1), len(q2))
    x = np.zeros(n)
    y = np.zeros(n)
    x[: len(q1)] = q1
    y[: len(q2)] = q2
    return 0.5 * float(np.abs(x - y).sum())


def truncated_closed_sum(p: FamilyParams, n: int, i: int, v1: float) -> float:
    """``u_n(i)``: ``a_i v(1)`` for ``i >= n`` and the finite descending sum below ``n``."""
    if i >= n:
        return p.a(i) * v1
    return _chain_sum(p, i, n - i + 1, 0.0)[0] * v1


@dataclass
class ConvergenceRow:
    n: int
    gap: float
    gap_exact: float
    gap_bound: float
    tv_distance: float


@dataclass
class ConvergenceTable:
    rows: list[ConvergenceRow]
    window: int
    tol: float
    warnings: list[str] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        tv = [r.tv_distance for r in self.rows]
        return all(b <= a + self.tol for a, b in zip(tv, tv[1:]))


def truncated_stationary(p: FamilyParams, n: int, v: Sequence[float], window: int, tol: float = 1e-13):
    """``q_n = u_n / |u_n|_1`` with ``u_n`` reconstructed on ``w_n`` at ``lam = 1``.

    Returns ``(q_n, u_n, report)``; the mass of ``u_n`` above the window is
    ``v(1) A_{W+1}`` exactly because those states only feed on state 1.
    """
    if window < n:
        raise ValueError("window must reach the truncation order")
    u, report = reconstruct_fixed_point(truncated_graph(p, n), STRUCTURAL_SET, 1.0, v, tol=tol, window=window)
    u = u.real
    norm = u.sum() + v[0] * p.a_tail_bound(window + 1)
    return u / norm, u, report


def truncation_convergence(
    p: FamilyParams, n_values: Sequence[int], tol: float = 1e-12, window: int | None = None
) -> ConvergenceTable:
    """Norm gap ``|w - w_n|_{1,inf}`` and total variation between ``q_n`` and ``q``.

    The gap is attained at column ``n + 1``, so the window spans at least
    ``max(n) + 5`` states (and 60 by default).
    """
    n_values = list(n_values)
    if any(n < 2 for n in n_values):
        raise ValueError("truncation orders must be at least 2")
    W = window if window is not None else max(max(n_values) + 5, 60)
    exact = stationary_closed_form(p, tol=tol, window=W)
    full = family_graph(p)
    rows = []
    for n in n_values:
        gap = one_inf_norm_gap(full, truncated_graph(p, n), W + 1)
        expected = 2 * max(p.b(i) for i in range(n, W + 1))
        if abs(gap - expected) > 1e-12:
            raise NumericalError(f"norm gap {gap!r} differs from 2 max b_i = {expected!r} at n={n}")
        qn, _, _ = truncated_stationary(p, n, exact.v, W)
        tv = total_variation(qn, exact.q)
        rows.append(ConvergenceRow(n, gap, expected, 2 * p.C * p.rho**n, tv))
    table = ConvergenceTable(rows, W, tol)
    if not table.monotone:
        table.warnings.append("total variation is not monotone in n")
    return table
