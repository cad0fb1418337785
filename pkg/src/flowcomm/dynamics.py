"""Opinion dynamics under conservative and non-conservative flows.

Opinions evolve as ``d theta/dt = -Op theta`` with ``Op`` the Laplacian
(conservative) or the replicator (non-conservative), integrated by explicit
Euler steps.  All runs of a simulation are advanced together as the
columns of an (N, Y) block; every column sees the same arithmetic as a
single-run simulation would.
"""

from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from . import kernels
from .graph import Graph, component_labels
from .operators import (
    DENSE_THRESHOLD,
    Laplacian,
    OperatorKind,
    PerronPair,
    Replicator,
    canonical_replicator,
    component_perron_pairs,
    largest_adjacency_eigenpair,
    operator_matrix,
    operator_max_eigenvalue,
)

logger = logging.getLogger(__name__)

MODELS = ("conservative", "nonconservative")
ALPHA_MODES = ("per-component", "global")
STEADY_ZERO_TOL = 1e-12


class InstabilityError(RuntimeError):
    """Euler integration produced non-finite opinions."""

    def __init__(self, run, step):
        super().__init__(f"non-finite opinions in run {run} at step {step}; reduce the step size")
        self.run = run
        self.step = step


class Regime(str, enum.Enum):
    DECAYING = "decaying"
    STEADY = "steady"
    DIVERGING = "diverging"


@dataclass
class SimulationConfig:
    """Parameters of a batch of simulations.

    ``step_size=None`` selects half the explicit-Euler stability bound,
    ``1 / (2 lambda_max(Op))``.
    """

    model: str = "conservative"
    step_size: float | None = None
    num_steps: int = 100
    num_runs: int = 100
    seed: int = 0
    snapshot_times: Sequence[int] = ()
    alpha_mode: str = "per-component"
    workers: int = 1

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.alpha_mode not in ALPHA_MODES:
            raise ValueError(f"alpha_mode must be one of {ALPHA_MODES}")
        if self.num_runs < 1:
            raise ValueError("num_runs must be >= 1")
        if self.num_steps < 0:
            raise ValueError("num_steps must be >= 0")
        if self.step_size is not None and not self.step_size > 0:
            raise ValueError("step_size must be positive")
        times = tuple(int(t) for t in self.snapshot_times) or (self.num_steps,)
        if any(t < 0 or t > self.num_steps for t in times):
            raise ValueError(f"snapshot times must lie in [0, {self.num_steps}]")
        self.snapshot_times = tuple(sorted(set(times)))
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class OpinionState:
    theta: np.ndarray
    time: float = 0.0


@dataclass
class SteadyState:
    """Long-time limit of a run.

    ``kind`` is ``"consensus"`` (constant per component) or ``"centrality"``
    (a multiple of each component's Perron vector).
    """

    theta_s: np.ndarray
    kind: str


@dataclass
class TrajectoryBundle:
    """Snapshots of all runs.

    ``theta[k]`` is the (Y, N) block of opinions at step ``snapshot_times[k]``;
    ``steady`` is the (Y, N) block of steady states.
    """

    config: SimulationConfig
    step_size: float
    snapshot_times: tuple
    theta: np.ndarray
    steady: np.ndarray
    steady_kind: str
    theta0: np.ndarray

    @property
    def num_runs(self) -> int:
        return self.theta.shape[1]

    def snapshot(self, step: int) -> np.ndarray:
        try:
            k = self.snapshot_times.index(step)
        except ValueError:
            raise KeyError(f"no snapshot at step {step}; have {self.snapshot_times}") from None
        return self.theta[k]

    def write_snapshots_csv(self, g: Graph, out: TextIO) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["run", "step", "node_id", "theta"])
        for k, step in enumerate(self.snapshot_times):
            for y in range(self.num_runs):
                for nid, val in zip(g.node_ids, self.theta[k, y]):
                    w.writerow([y, step, nid, repr(float(val))])

    def write_steady_csv(self, g: Graph, out: TextIO) -> None:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["run", "node_id", "theta_s"])
        for y in range(self.num_runs):
            for nid, val in zip(g.node_ids, self.steady[y]):
                w.writerow([y, nid, repr(float(val))])


def run_rng(seed: int, run: int) -> np.random.Generator:
    """Counter-based generator for run ``run``; independent of execution order."""
    key = np.array([seed % 2**64, run % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def init_opinions(n: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. uniform opinions on [-pi, pi]."""
    if n < 1:
        raise ValueError("need at least one node")
    return rng.uniform(-math.pi, math.pi, size=n)


@dataclass
class Flow:
    """Operator for a model on a given graph plus the data its steady state needs."""

    model: str
    operator: OperatorKind
    labels: np.ndarray
    components: list
    perron: list | None = None
    _lambda_max_op: float | None = field(default=None, repr=False)

    def lambda_max_op(self, g: Graph) -> float:
        if self._lambda_max_op is None:
            self._lambda_max_op = operator_max_eigenvalue(self.operator, g)
        return self._lambda_max_op

    def default_step(self, g: Graph) -> float:
        lam = self.lambda_max_op(g)
        return 1.0 / (2.0 * lam) if lam > 0 else 1.0


def prepare_flow(g: Graph, model: str, alpha_mode: str = "per-component") -> Flow:
    """Build the operator for ``model``; replicator alpha = largest adjacency eigenvalue."""
    labels, comps = component_labels(g)
    if model == "conservative":
        return Flow(model, Laplacian(), labels, comps)
    if model == "nonconservative":
        pairs = component_perron_pairs(g, comps)
        op = canonical_replicator(g, alpha_mode, comps, pairs)
        return Flow(model, op, labels, comps, pairs)
    raise ValueError(f"model must be one of {MODELS}, got {model!r}")


def step_euler(kind: OperatorKind, g: Graph, s: OpinionState, h: float,
               num_threads: int = 1) -> OpinionState:
    """One explicit-Euler step ``theta <- theta - h * Op theta``."""
    theta = np.asarray(s.theta, dtype=np.float64)
    if theta.shape[0] != g.num_nodes:
        raise ValueError(f"state has length {theta.shape[0]}, graph has N={g.num_nodes}")
    x = np.ascontiguousarray(theta.reshape(g.num_nodes, -1))
    out = np.empty_like(x)
    kernels.euler_step(g.indptr, g.indices, g.data, kind.diagonal(g), x, float(h), out,
                       num_threads)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite opinions after Euler step; step size unstable")
    return OpinionState(out.reshape(theta.shape), s.time + h)


def _steady_from_flow(flow: Flow, g: Graph, theta0: np.ndarray,
                      allow_trivial: bool = False) -> SteadyState:
    theta0 = np.asarray(theta0, dtype=np.float64)
    out = np.zeros_like(theta0)
    if flow.model == "conservative":
        for c in flow.components:
            out[c] = theta0[c].mean(axis=0)
        return SteadyState(out, "consensus")
    diag = flow.operator.diagonal(g)
    for c, pair in zip(flow.components, flow.perron):
        alpha = diag[c[0]]
        gap = alpha - pair.lambda_max
        scale = max(1.0, abs(pair.lambda_max))
        if abs(gap) <= 1e-8 * scale:
            v = pair.vector
            out[c] = np.multiply.outer(v, v @ theta0[c]) if theta0.ndim == 2 else v * (v @ theta0[c])
        elif gap > 0 and allow_trivial:
            continue
        else:
            raise ValueError(
                f"no non-trivial steady state: alpha={alpha!r} but lambda_max={pair.lambda_max!r}"
            )
    return SteadyState(out, "centrality")


def steady_state(kind: OperatorKind, g: Graph, theta0, allow_trivial: bool = False) -> SteadyState:
    """Analytic long-time limit of the flow started at ``theta0``.

    Laplacian: each component's mean of ``theta0``.  Replicator: per
    component, ``(v . theta0) v`` with ``v`` the unit Perron vector; this
    requires alpha to equal the component's largest adjacency eigenvalue.
    With ``allow_trivial`` a component whose alpha exceeds it gets the zero
    limit instead of an error.
    """
    labels, comps = component_labels(g)
    if isinstance(kind, Laplacian):
        flow = Flow("conservative", kind, labels, comps)
    else:
        flow = Flow("nonconservative", kind, labels, comps, component_perron_pairs(g, comps))
    return _steady_from_flow(flow, g, theta0, allow_trivial)


def simulate(cfg: SimulationConfig, g: Graph, theta0=None, flow: Flow | None = None) -> TrajectoryBundle:
    """Run ``cfg.num_runs`` independent Euler trajectories.

    Run ``y`` starts from ``theta0[y]`` if given (shape (Y, N)), otherwise
    from :func:`init_opinions` with :func:`run_rng` ``(cfg.seed, y)``.

    Raises
    ------
    ValueError
        Step size at or beyond the stability bound ``2 / lambda_max(Op)``.
    InstabilityError
        Non-finite opinions; names the first offending run and step.
    """
    n = g.num_nodes
    if n == 0:
        raise ValueError("graph has no nodes")
    if flow is None:
        flow = prepare_flow(g, cfg.model, cfg.alpha_mode)
    h = cfg.step_size if cfg.step_size is not None else flow.default_step(g)
    lam = flow.lambda_max_op(g)
    if lam > 0 and h >= 2.0 / lam:
        raise ValueError(f"step size {h} violates the stability bound 2/lambda_max = {2.0 / lam}")

    ny = cfg.num_runs
    if theta0 is None:
        theta0 = np.stack([init_opinions(n, run_rng(cfg.seed, y)) for y in range(ny)])
    else:
        theta0 = np.array(theta0, dtype=np.float64).reshape(ny, n)
    x = np.array(theta0.T, order="C")  # always a copy; the step buffers are swapped in place
    buf = np.empty_like(x)
    diag = np.ascontiguousarray(flow.operator.diagonal(g))
    times = cfg.snapshot_times
    snaps = np.empty((len(times), ny, n))
    k = 0
    for step in range(cfg.num_steps + 1):
        while k < len(times) and times[k] == step:
            snaps[k] = x.T
            k += 1
        if step == cfg.num_steps:
            break
        kernels.euler_step(g.indptr, g.indices, g.data, diag, x, h, buf, cfg.workers)
        x, buf = buf, x
        if not np.isfinite(x).all():
            bad_run = int(np.flatnonzero(~np.isfinite(x).all(axis=0))[0])
            raise InstabilityError(bad_run, step + 1)

    steady = _steady_from_flow(flow, g, theta0.T, allow_trivial=cfg.alpha_mode == "global")
    return TrajectoryBundle(
        config=cfg,
        step_size=h,
        snapshot_times=tuple(times),
        theta=snaps,
        steady=np.ascontiguousarray(steady.theta_s.T),
        steady_kind=steady.kind,
        theta0=theta0,
    )


def exact_evolution(kind: OperatorKind, g: Graph, theta0, time: float,
                    dense_threshold: int = DENSE_THRESHOLD) -> np.ndarray:
    """Closed-form ``theta(t) = X exp(-Lambda t) X^T theta0`` by dense eigendecomposition.

    Intended as a reference for small graphs; refuses N above
    ``dense_threshold``.
    """
    n = g.num_nodes
    if n > dense_threshold:
        raise ValueError(f"exact_evolution is limited to N <= {dense_threshold}, got {n}")
    theta0 = np.asarray(theta0, dtype=np.float64)
    a = operator_matrix(kind, g).toarray()
    lam, vecs = np.linalg.eigh(a)
    coef = vecs.T @ theta0
    decay = np.exp(-lam * time)
    if theta0.ndim == 2:
        decay = decay[:, None]
    return vecs @ (decay * coef)


def norm_growth_rate(kind: OperatorKind, g: Graph, theta0, t: float) -> float:
    """Log-norm growth per unit time between ``t/2`` and ``t`` under the exact flow."""
    a = np.linalg.norm(exact_evolution(kind, g, theta0, 0.5 * t))
    b = np.linalg.norm(exact_evolution(kind, g, theta0, t))
    return math.log(b / a) / (0.5 * t)


def alpha_regime(g: Graph, alpha: float, theta0, t: float = 200.0, tau: float = 1e-6,
                 pair: PerronPair | None = None) -> Regime:
    """Classify the long-time behaviour of the replicator flow with decay rate ``alpha``.

    ``alpha > lambda_max + tau`` decays to zero, ``|alpha - lambda_max| <= tau``
    reaches a non-trivial steady state, and ``alpha < lambda_max - tau``
    diverges.  The result is cross-checked against the observed norm growth
    over ``[t/2, t]`` when the graph is small enough for the exact flow.
    """
    theta0 = np.asarray(theta0, dtype=np.float64)
    if pair is None:
        pair = largest_adjacency_eigenpair(g)
    if abs(pair.vector @ theta0) < 1e-12 * max(1.0, np.linalg.norm(theta0)):
        raise ValueError("theta0 is orthogonal to the Perron vector; regime undefined")
    gap = pair.lambda_max - alpha
    if gap > tau:
        regime = Regime.DIVERGING
    elif gap < -tau:
        regime = Regime.DECAYING
    else:
        regime = Regime.STEADY
    if g.num_nodes <= DENSE_THRESHOLD and regime is not Regime.STEADY:
        rate = norm_growth_rate(Replicator(alpha), g, theta0, t)
        if (rate > 0) != (regime is Regime.DIVERGING):
            logger.warning("norm growth %.3g over horizon %g disagrees with %s; horizon too short?",
                           rate, t, regime.value)
    return regime
