"""Laplacian and replicator operators and their spectra.

``L = D - W`` drives the conservative flow and ``R = alpha*I - W`` the
non-conservative one.  Both are represented as ``diag(c) - W`` with a
per-node diagonal ``c`` (degrees, or alpha), so a single CSR kernel serves
both.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .graph import Graph, connected_components

logger = logging.getLogger(__name__)

DENSE_THRESHOLD = 512
GAP_EPS = 1e-12


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, residual=None, partial=None):
        super().__init__(message)
        self.residual = residual
        self.partial = partial


@dataclass(frozen=True)
class Laplacian:
    """Conservative flow operator ``D - W``."""

    name = "laplacian"

    def diagonal(self, g: Graph) -> np.ndarray:
        return np.asarray(g.degrees, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Replicator:
    """Non-conservative flow operator ``alpha*I - W``.

    ``alpha`` is a scalar or a per-node array (one value per component when
    components carry their own largest adjacency eigenvalue).
    """

    alpha: float | np.ndarray
    name = "replicator"

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=np.float64)
        if not np.all(np.isfinite(a)):
            raise ValueError("replicator alpha must be finite")

    def diagonal(self, g: Graph) -> np.ndarray:
        a = np.asarray(self.alpha, dtype=np.float64)
        if a.ndim == 0:
            return np.full(g.num_nodes, float(a))
        if a.shape != (g.num_nodes,):
            raise ValueError(f"per-node alpha has shape {a.shape}, expected ({g.num_nodes},)")
        return a


OperatorKind = Laplacian | Replicator


@dataclass
class PerronPair:
    """Largest adjacency eigenvalue and its positive unit eigenvector."""

    lambda_max: float
    vector: np.ndarray
    iterations: int = 0
    residual: float = 0.0


@dataclass
class SpectralSummary:
    """Ascending eigenvalues with per-value residuals ``|Av - lv| / |v|``."""

    eigenvalues: np.ndarray
    residuals: np.ndarray
    tol: float
    converged: np.ndarray = field(default=None)

    def __post_init__(self):
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=np.float64)
        self.residuals = np.asarray(self.residuals, dtype=np.float64)
        if self.converged is None:
            self.converged = self.residuals <= self.tol * np.maximum(1.0, np.abs(self.eigenvalues))

    @property
    def k(self) -> int:
        return int(self.eigenvalues.size)

    def to_csv(self, out: TextIO) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["rank", "eigenvalue", "residual"])
        for r, (lam, res) in enumerate(zip(self.eigenvalues, self.residuals), start=1):
            w.writerow([r, repr(float(lam)), repr(float(res))])


def _as_columns(x, n):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != n or x.ndim not in (1, 2):
        raise ValueError(f"vector has shape {x.shape}, graph has N={n}")
    return np.ascontiguousarray(x.reshape(n, -1))


def apply_operator(kind: OperatorKind, g: Graph, x, num_threads: int = 1) -> np.ndarray:
    """Return ``L x`` or ``R x`` without forming a dense matrix.

    ``x`` may be a vector of length N or an (N, Y) block of vectors.
    """
    n = g.num_nodes
    cols = _as_columns(x, n)
    out = np.empty_like(cols)
    kernels.operator_apply(g.indptr, g.indices, g.data, kind.diagonal(g), cols, out,
                           num_threads)
    return out.reshape(np.shape(x))


def operator_matrix(kind: OperatorKind, g: Graph) -> sp.csr_matrix:
    """Sparse ``diag(c) - W``."""
    return (sp.diags(kind.diagonal(g)) - g.adjacency_matrix()).tocsr()


def largest_adjacency_eigenpair(g: Graph, tol: float = 1e-12, max_iters: int = 100_000,
                                residual_tol: float = 1e-10) -> PerronPair:
    """Perron eigenpair of ``W`` by power iteration from the all-ones vector.

    Iterates on ``W + c*I`` with ``c`` half the maximum degree.  The shift
    leaves the eigenvectors alone but breaks the ``+-lambda_max`` tie of
    bipartite graphs, where unshifted iteration oscillates.  Stops once
    successive Rayleigh quotients agree to ``tol`` (relative) and the
    relative residual is below ``residual_tol``.

    Raises
    ------
    ValueError
        If ``g`` is empty or disconnected.
    ConvergenceError
        If ``max_iters`` is exhausted; ``.residual`` holds the last residual.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    n = g.num_nodes
    if n == 0:
        raise ValueError("graph has no nodes")
    if len(connected_components(g)) > 1:
        raise ValueError("largest_adjacency_eigenpair needs a connected graph")
    if n == 1:
        return PerronPair(0.0, np.ones(1), 0, 0.0)
    shift = 0.5 * float(g.degrees.max())
    zero = np.zeros(n)
    x = np.full((n, 1), 1.0 / np.sqrt(n))
    wx = np.empty_like(x)
    rho_prev = np.inf
    residual = np.inf
    for it in range(1, max_iters + 1):
        kernels.operator_apply(g.indptr, g.indices, g.data, zero, x, wx)
        wx = -wx  # operator_apply gives 0*x - W x
        rho = float(x[:, 0] @ wx[:, 0])
        residual = float(np.linalg.norm(wx - rho * x)) / max(abs(rho), 1e-300)
        if abs(rho - rho_prev) < tol * abs(rho) and residual <= residual_tol:
            break
        rho_prev = rho
        y = wx + shift * x
        x = y / np.linalg.norm(y)
    else:
        raise ConvergenceError(
            f"power iteration did not converge in {max_iters} iterations "
            f"(last relative residual {residual:.3e})",
            residual=residual,
        )
    v = x[:, 0]
    if v.sum() < 0:
        v = -v
    return PerronPair(rho, v.copy(), it, residual)


def component_perron_pairs(g: Graph, comps=None, **kwargs) -> list[PerronPair]:
    """Perron pair for each connected component (vectors in component order)."""
    if comps is None:
        comps = connected_components(g)
    pairs = []
    for c in comps:
        sub, _ = g.subgraph(c)
        pairs.append(largest_adjacency_eigenpair(sub, **kwargs))
    return pairs


def canonical_replicator(g: Graph, mode: str = "per-component", comps=None,
                         pairs=None) -> Replicator:
    """Replicator whose alpha is the largest adjacency eigenvalue.

    ``mode="per-component"`` gives each component its own alpha;
    ``mode="global"`` uses the single largest value for every node.
    """
    if comps is None:
        comps = connected_components(g)
    if pairs is None:
        pairs = component_perron_pairs(g, comps)
    lams = [p.lambda_max for p in pairs]
    if mode == "global":
        return Replicator(float(max(lams)))
    if mode != "per-component":
        raise ValueError(f"unknown alpha mode {mode!r}")
    alpha = np.empty(g.num_nodes)
    for c, lam in zip(comps, lams):
        alpha[c] = lam
    return Replicator(alpha)


def _residuals(a, vals, vecs):
    r = a @ vecs - vecs * vals[None, :]
    return np.linalg.norm(r, axis=0) / np.linalg.norm(vecs, axis=0)


def smallest_eigenvalues(kind: OperatorKind, g: Graph, k: int, tol: float = 1e-9,
                         dense_threshold: int = DENSE_THRESHOLD) -> SpectralSummary:
    """The ``k`` algebraically smallest eigenvalues of the operator.

    Dense ``eigh`` up to ``dense_threshold`` nodes, ARPACK shift-invert
    above it.  Raises :class:`ConvergenceError` carrying the partial
    summary in ``.partial`` if any residual exceeds ``tol``.
    """
    n = g.num_nodes
    if not 1 <= k <= n:
        raise ValueError(f"k={k} must be between 1 and N={n}")
    a = operator_matrix(kind, g)
    if n <= dense_threshold or k >= n - 1:
        dense = a.toarray()
        vals, vecs = np.linalg.eigh(dense)
        vals, vecs = vals[:k], vecs[:, :k]
        res = _residuals(dense, vals, vecs)
    else:
        # shift just below the spectrum so (A - sigma I) is definite
        lo = float(np.min(kind.diagonal(g) - g.degrees))
        sigma = min(lo, 0.0) - 1e-6 * max(1.0, float(g.degrees.max()))
        try:
            vals, vecs = spla.eigsh(a.tocsc(), k=k, sigma=sigma, which="LM", tol=tol * 1e-2)
        except spla.ArpackNoConvergence as exc:
            vals, vecs = exc.eigenvalues, exc.eigenvectors
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        res = _residuals(a, vals, vecs)
    summary = SpectralSummary(vals, res, tol)
    if not np.all(summary.converged):
        bad = int(np.sum(~summary.converged))
        raise ConvergenceError(f"{bad} of {k} eigenvalues above residual tolerance {tol}",
                               residual=float(res.max()), partial=summary)
    return summary


def operator_max_eigenvalue(kind: OperatorKind, g: Graph,
                            dense_threshold: int = DENSE_THRESHOLD) -> float:
    """Largest eigenvalue of the operator (sets the explicit-Euler step bound)."""
    n = g.num_nodes
    a = operator_matrix(kind, g)
    if n <= dense_threshold:
        return float(np.linalg.eigvalsh(a.toarray())[-1])
    val = spla.eigsh(a, k=1, which="LA", tol=1e-8, return_eigenvectors=False)
    # eigsh tolerance is relative; pad so the step bound stays conservative
    return float(val[0]) * (1.0 + 1e-6)


def community_count_signature(summary: SpectralSummary, rel_floor: float = 1e-3,
                              eps: float = GAP_EPS) -> tuple[int, float]:
    """Estimate the number of communities from the low end of a spectrum.

    Picks ``C`` maximising ``lambda_{C+1} / max(lambda_C, floor)`` where the
    floor is ``max(eps, rel_floor * lambda_k)``.  Returns ``(C, ratio)``;
    a flat spectrum gives ``(1, 0.0)``.
    """
    vals = np.sort(np.asarray(summary.eigenvalues, dtype=np.float64))
    if vals.size < 2:
        raise ValueError("need at least two eigenvalues")
    if np.allclose(vals, vals[0], rtol=0, atol=eps):
        return 1, 0.0
    floor = max(eps, rel_floor * float(vals[-1]))
    ratios = vals[1:] / np.maximum(vals[:-1], floor)
    c = int(np.argmax(ratios))
    return c + 1, float(ratios[c])
