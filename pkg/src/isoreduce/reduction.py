"""Reduced operator of a finite graph over a structural set.

Two independent evaluations are provided: the branch sum (definitional, exponential
in the worst case) and the Schur complement solve (production path). Spectra are
compared against the dense eigenvalues of the full matrix, and eigenvectors are
restricted to and reconstructed from the structural set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .errors import EigenSolverError, NotStructuralError, SigmaError
from .graph_core import (
    WeightedGraph,
    all_branches,
    compute_depths,
    is_structural_set,
    sigma_values,
    topological_interior,
)

# |lambda - sigma| below this is treated as lambda in sigma when evaluating
SIGMA_EVAL_TOL = 1e-12


@dataclass(frozen=True)
class ReducedEvaluation:
    S: tuple[int, ...]
    lam: complex
    entries: np.ndarray

    def char_det(self) -> complex:
        """``det(R_S(lam) - lam I)``."""
        k = len(self.S)
        return complex(np.linalg.det(self.entries - self.lam * np.eye(k)))


@dataclass
class SpectrumReport:
    full_spectrum: list[complex]
    sigma: list[complex]
    reduced_spectrum: list[tuple[complex, float]]
    excluded: list[complex]
    sigma_tol: float = 0.0
    warnings: list[str] = field(default_factory=list)


def spectral_order(values):
    """Descending modulus, ties broken by descending real then imaginary part."""
    return sorted(values, key=lambda z: (-round(abs(z), 12), -round(z.real, 12), -round(z.imag, 12)))


def _structural(g, S):
    S = tuple(sorted(set(S)))
    verdict = is_structural_set(g, S)
    if not verdict:
        raise NotStructuralError(f"{set(S)} is not a structural set", verdict.witness)
    return S


def _check_off_sigma(lam, sigma, tol=SIGMA_EVAL_TOL):
    for s in sigma:
        if abs(lam - s) <= tol:
            raise SigmaError(lam, s)


def branch_weight(g: WeightedGraph, branch: Sequence[int], lam: complex) -> complex:
    """lambda-weight of a branch: the first edge weight times
    ``w(i_l, i_{l+1}) / (lam - w(i_l, i_l))`` over interior positions."""
    value = g.weight(branch[0], branch[1])
    for a, b in zip(branch[1:-1], branch[2:]):
        gap = lam - g.weight(a, a)
        if abs(gap) <= SIGMA_EVAL_TOL:
            raise SigmaError(lam, g.weight(a, a))
        value *= g.weight(a, b) / gap
    return value


def reduce_branches(g: WeightedGraph, S, lam: complex, branches: dict | None = None) -> ReducedEvaluation:
    """Entry ``(i, j)`` is the sum of lambda-weights over branches from ``i`` to ``j``.

    ``branches`` may carry a precomputed result of ``all_branches`` to avoid
    re-enumerating paths when evaluating at many ``lam``.
    """
    S = _structural(g, S)
    lam = complex(lam)
    _check_off_sigma(lam, sigma_values(g, S))
    if branches is None:
        branches = all_branches(g, S)
    k = len(S)
    R = np.zeros((k, k), dtype=complex)
    for a, i in enumerate(S):
        for b, j in enumerate(S):
            R[a, b] = sum((branch_weight(g, br, lam) for br in branches[(i, j)]), 0j)
    return ReducedEvaluation(S, lam, R)


class SchurReducer:
    """Partitioned matrix of ``(g, S)`` for repeated Schur complement solves.

    Interior vertices are kept in topological order (successors first), which
    makes ``lam I - A[I,I]`` lower triangular. Forward substitution then
    leaves structurally zero entries of the reduced matrix exactly zero.
    """

    def __init__(self, g: WeightedGraph, S):
        self.S = _structural(g, S)
        self.g = g
        A = g.to_dense()
        s_idx = [v - 1 for v in self.S]
        self.interior = topological_interior(g, self.S)
        i_idx = [v - 1 for v in self.interior]
        self.A_SS = A[np.ix_(s_idx, s_idx)]
        self.A_SI = A[np.ix_(s_idx, i_idx)]
        self.A_II = A[np.ix_(i_idx, i_idx)]
        self.A_IS = A[np.ix_(i_idx, s_idx)]
        self.sigma = sigma_values(g, self.S)

    def __call__(self, lam) -> np.ndarray:
        lam = complex(lam)
        _check_off_sigma(lam, self.sigma)
        m = self.A_II.shape[0]
        if m == 0:
            return self.A_SS.copy()
        M = lam * np.eye(m) - self.A_II
        try:
            X = solve_triangular(M, self.A_IS, lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SigmaError(lam, sorted(self.sigma, key=lambda s: abs(lam - s))[0]) from exc
        return self.A_SS + self.A_SI @ X

    def char_det(self, lam) -> complex:
        R = self(lam)
        return complex(np.linalg.det(R - complex(lam) * np.eye(R.shape[0])))


def reduce_linear_solve(g: WeightedGraph, S, lam: complex) -> ReducedEvaluation:
    """``A[S,S] + A[S,I] (lam I - A[I,I])^{-1} A[I,S]`` with ``I = V \\ S``."""
    red = SchurReducer(g, S)
    return ReducedEvaluation(red.S, complex(lam), red(lam))


def sigma_tolerance(g: WeightedGraph) -> float:
    return 1e-9 * max(1.0, g.inf_norm()) if g.weights else 1e-9


def reduced_spectrum(g: WeightedGraph, S) -> SpectrumReport:
    """Eigenvalues of ``A`` split by membership in sigma, with the reduced
    determinant residual ``|det(R_S(lam) - lam I)|`` at every non-excluded one."""
    red = SchurReducer(g, S)
    try:
        eig = np.linalg.eigvals(g.to_dense())
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc
    tol = sigma_tolerance(g)
    sigma = sorted(red.sigma, key=lambda z: (z.real, z.imag))
    reduced, excluded = [], []
    for lam in spectral_order(complex(z) for z in eig):
        if any(abs(lam - s) <= tol for s in sigma):
            excluded.append(lam)
        else:
            reduced.append((lam, abs(red.char_det(lam))))
    return SpectrumReport(list(spectral_order(complex(z) for z in eig)), sigma, reduced, excluded, tol)


def find_reduced_roots(
    g: WeightedGraph,
    S,
    grid: int = 12,
    radius: float | None = None,
    max_iter: int = 200,
) -> list[tuple[complex, float]]:
    """Zeros of ``det(R_S(lam) - lam I)`` away from sigma, without the full eigensolver.

    Newton's method on the determinant with the known poles (one per interior
    vertex, at its diagonal weight) and already found roots divided out. The
    cleared function has exactly ``n`` zeros, which fixes the stopping rule.
    Seeds come from a square grid covering the disc ``|lam| <= ||A||_inf``.
    The derivative is a central difference. Returns ``(root, |det|)`` pairs
    in spectral order; roots inside sigma are dropped.
    """
    red = SchurReducer(g, S)
    poles = [g.weight(v, v) for v in g.vertices if v not in set(red.S)]
    scale = max(1.0, g.inf_norm() if g.weights else 1.0)
    radius = 1.05 * scale if radius is None else radius
    guard = 1e-9 * scale

    def det(lam):
        # step radially off poles rather than fail on them
        for p in poles:
            gap = lam - p
            if abs(gap) <= guard:
                lam = p + 2 * guard * (gap / abs(gap) if gap else 1.0)
        return red.char_det(lam)

    def log_derivative(lam, roots):
        h = 1e-6 * max(1.0, abs(lam))
        f0 = det(lam)
        if f0 == 0:
            return f0, math.inf
        dlog = (det(lam + h) - det(lam - h)) / (2 * h * f0)
        dlog += sum(1.0 / (lam - p) for p in poles if lam != p)
        dlog -= sum(1.0 / (lam - r) for r in roots if lam != r)
        return f0, dlog

    axis = np.linspace(-radius, radius, grid)
    # seeds slightly off-axis so that symmetric graphs don't stall on the real line
    seeds = [complex(x, y) + complex(0.0123, 0.0071) * scale for y in axis for x in axis]
    roots: list[complex] = []
    for z0 in seeds:
        if len(roots) >= g.n:
            break
        z = z0
        converged = False
        for _ in range(max_iter):
            f0, dlog = log_derivative(z, roots)
            if dlog == math.inf:
                converged = True
                break
            if dlog == 0 or not np.isfinite(dlog):
                break
            step = 1.0 / dlog
            z = z - step
            if abs(z) > 10 * radius + 10:
                break
            if abs(step) <= 1e-14 * max(1.0, abs(z)):
                converged = True
                break
        if converged:
            roots.append(z)
    tol = sigma_tolerance(g)
    out = []
    for r in spectral_order(roots):
        if any(abs(r - p) <= max(tol, 1e-7 * scale) for p in poles):
            continue
        out.append((r, abs(det(r))))
    return out


def restrict_eigenvector(u, S) -> np.ndarray:
    """Entries of ``u`` (indexed by vertices ``1..n``) at ``S``, in ``S``'s order."""
    u = np.asarray(u)
    return u[[v - 1 for v in S]].copy()


def reconstruct_eigenvector(g: WeightedGraph, S, lam0: complex, v) -> np.ndarray:
    """Extend ``v`` on ``S`` to all vertices by the depth recursion.

    ``u(l) = sum_{j != l} w(l, j) u(j) / (lam0 - w(l, l))`` for interior ``l``,
    filled in increasing depth so every ``u(j)`` on the right is known.
    If ``R_S(lam0) v = lam0 v`` the result is an eigenvector of ``A``.
    """
    S_sorted = tuple(sorted(set(S)))
    lam0 = complex(lam0)
    depths = compute_depths(g, S_sorted)
    _check_off_sigma(lam0, depths.sigma)
    v = np.asarray(v, dtype=complex)
    u = np.zeros(g.n, dtype=complex)
    for s, val in zip(S, v):
        u[s - 1] = val
    for ell in depths.order():
        acc = 0j
        for j in g.successors(ell):
            if j != ell:
                acc += g.weight(ell, j) * u[j - 1]
        u[ell - 1] = acc / (lam0 - g.weight(ell, ell))
    return u
