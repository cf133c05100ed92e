"""Baselines and projected-gradient solvers for worst-case subspace fitting.

The exact baselines (pooled, separate, average-covariance PCA) reduce to
eigendecompositions. The worst-case problems

    maximize  min_e Var(V; Sigma_e)        (Var, NormVar)
    minimize  max_e L(V; Sigma_e)          (RCS, NormRCS, Reg, NormReg)

are solved by projected gradient descent on the Stiefel manifold: at each
iterate the active domain (the one attaining the worst case, smallest index
on ties) supplies the subgradient, an Adam step is taken in the ambient
p x k space, and the result is projected back via ``stiefel_project``. All
six objectives share one update direction because the Euclidean gradient of
the active domain's loss is +/- 2 Sigma_a V (divided by the trace for
normalized kinds, and unchanged for the regret kinds whose baseline does not
depend on V).

The step size anneals geometrically from ``step_size`` down to
``step_size / 100`` over the iteration budget; a constant step leaves Adam
oscillating at the step scale near a max-min optimum where the active domain
alternates. Restart r draws its initial frame from stream r of
``cfg.seed`` (a counter-offset of the same Philox key), so runs are
reproducible and restarts are independent.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInput, InvalidKind, InvalidRank, NumericalFailure
from .linalg import haar_frame, orthocomplement_frame, stiefel_project, sym_eigen
from .losses import (
    MIN_KINDS,
    NORMALIZED_KINDS,
    REGRET_KINDS,
    DomainCollection,
    DomainSpec,
    LossKind,
    as_kind,
    average_covariance,
    pooled_covariance,
    top_k_eigensum,
    worst_case,
)
from .rng import make_rng, spawn_seed

__all__ = [
    "SolverConfig",
    "FitResult",
    "pool_pca",
    "sep_pca",
    "avgcov_pca",
    "solve_wcpca",
    "sequential_minpca",
    "order_basis",
]

# Stop a PGD run when the best objective has improved by less than
# cfg.tol_objective over this many iterations.
_PLATEAU_WINDOW = 50
# Domains within this absolute gap of the worst-case value count as active.
_ACTIVE_TOL = 1e-6
# Reduced covariances whose trace falls below this get a diagonal jitter so
# they remain valid DomainSpec inputs (trace must be positive).
_TRACE_JITTER = 1e-15


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters for the projected-gradient solvers."""

    max_iters: int = 2000
    step_size: float = 1e-2
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    restarts: int = 5
    tol_objective: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidInput(f"max_iters must be >= 1, got {self.max_iters}")
        if self.restarts < 1:
            raise InvalidInput(f"restarts must be >= 1, got {self.restarts}")
        if not self.step_size > 0.0:
            raise InvalidInput(f"step_size must be positive, got {self.step_size}")


@dataclass(frozen=True)
class FitResult:
    """A fitted frame with its objective and solver diagnostics.

    ``active_domains`` holds the indices of domains within 1e-6 of the
    worst-case value at the returned frame. Exact baselines report an empty
    set (pooled/average PCA) or the selected domain (separate PCA), zero
    iterations, and restart 0.
    """

    frame: np.ndarray
    objective: float
    active_domains: frozenset[int]
    iterations_used: int
    restart_index: int


def _ensure_collection(domains) -> DomainCollection:
    if isinstance(domains, DomainCollection):
        return domains
    return DomainCollection(tuple(domains))


def _top_frame_of(sigma, k: int) -> np.ndarray:
    spec = sym_eigen(sigma)
    p = spec.eigenvalues.shape[0]
    if not 1 <= k <= p:
        raise InvalidRank(f"k must be in 1..{p}, got {k}")
    return spec.eigenvectors[:, :k].copy()


def pool_pca(domains, k: int) -> FitResult:
    """PCA on the weighted pooled covariance sum_e w_e Sigma_e.

    The reported objective is the explained variance of the frame on the
    pooled covariance.
    """
    domains = _ensure_collection(domains)
    sigma = pooled_covariance(domains)
    frame = _top_frame_of(sigma, k)
    objective = float(np.sum(frame * (sigma @ frame)))
    return FitResult(frame, objective, frozenset(), 0, 0)


def sep_pca(domains, k: int) -> FitResult:
    """Per-domain PCA, keeping the domain whose own top-k eigensum is minimal.

    Ties go to the smallest domain index. The objective is the chosen
    domain's own explained variance and ``active_domains`` holds its index.
    """
    domains = _ensure_collection(domains)
    best_idx = -1
    best_value = np.inf
    for idx, d in enumerate(domains):
        own = top_k_eigensum(d.covariance, k)
        if own < best_value:
            best_idx, best_value = idx, own
    frame = _top_frame_of(domains[best_idx].covariance, k)
    return FitResult(frame, best_value, frozenset({best_idx}), 0, 0)


def avgcov_pca(domains, k: int) -> FitResult:
    """PCA on the unweighted average covariance (1/E) sum_e Sigma_e."""
    domains = _ensure_collection(domains)
    sigma = average_covariance(domains)
    frame = _top_frame_of(sigma, k)
    objective = float(np.sum(frame * (sigma @ frame)))
    return FitResult(frame, objective, frozenset(), 0, 0)


def _domain_values(kind, v, covs, traces, eigsums):
    """Per-domain losses of frame v, plus the active (worst-case) index."""
    values = np.empty(len(covs))
    for e, c in enumerate(covs):
        var = float(np.sum(v * (c @ v)))
        if kind is LossKind.VAR:
            values[e] = var
        elif kind is LossKind.NORM_VAR:
            values[e] = var / traces[e]
        elif kind is LossKind.RCS:
            values[e] = traces[e] - var
        elif kind is LossKind.NORM_RCS:
            values[e] = (traces[e] - var) / traces[e]
        elif kind is LossKind.REG:
            values[e] = eigsums[e] - var
        else:
            values[e] = (eigsums[e] - var) / traces[e]
    idx = int(np.argmin(values)) if kind in MIN_KINDS else int(np.argmax(values))
    return values, idx


def _pgd_restart(kind, covs, traces, eigsums, v0, cfg):
    """One PGD run from v0; returns (best frame, best objective, iterations)."""
    maximize = kind in MIN_KINDS
    normalized = kind in NORMALIZED_KINDS
    m = np.zeros_like(v0)
    u = np.zeros_like(v0)
    v = v0
    values, idx = _domain_values(kind, v, covs, traces, eigsums)
    best_obj = float(values[idx])
    best_v = v
    best_hist = [best_obj]
    iterations = cfg.max_iters
    for t in range(1, cfg.max_iters + 1):
        # Subgradient through the active domain only; the minimization
        # direction is the same expression for all six kinds.
        trn = traces[idx] if normalized else 1.0
        g = (-2.0 / trn) * (covs[idx] @ v)
        # The moments must see only the tangential part: the radial component
        # never flips sign, and Adam's coordinatewise normalization would
        # inflate it into a bias that stalls equalized optima off the KKT
        # point (Example-1-type instances expose this).
        vg = v.T @ g
        g = g - v @ ((vg + vg.T) / 2.0)
        m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g
        u = cfg.adam_beta2 * u + (1.0 - cfg.adam_beta2) * (g * g)
        mhat = m / (1.0 - cfg.adam_beta1**t)
        uhat = u / (1.0 - cfg.adam_beta2**t)
        step = cfg.step_size * 0.01 ** (t / cfg.max_iters)
        v = v - step * mhat / (np.sqrt(uhat) + cfg.adam_eps)
        if not np.all(np.isfinite(v)):
            raise NumericalFailure(f"non-finite iterate at iteration {t}")
        v = stiefel_project(v)
        values, idx = _domain_values(kind, v, covs, traces, eigsums)
        obj = float(values[idx])
        if (obj > best_obj) if maximize else (obj < best_obj):
            best_obj = obj
            best_v = v
        best_hist.append(best_obj)
        if t >= _PLATEAU_WINDOW:
            if abs(best_hist[-1] - best_hist[-1 - _PLATEAU_WINDOW]) < cfg.tol_objective:
                iterations = t
                break
    return best_v, best_obj, iterations


def solve_wcpca(kind, domains, k: int, cfg: SolverConfig | None = None) -> FitResult:
    """Solve a worst-case PCA problem by multi-restart projected gradient.

    Runs ``cfg.restarts`` independent PGD runs from Haar-random initial
    frames (restart r uses stream r of ``cfg.seed``) and keeps the best final
    objective. Non-convergence is not an error: the best frame found is
    returned with ``iterations_used == cfg.max_iters``. The degenerate case
    k = p short-circuits to the identity frame, where every objective is
    constant over the manifold.
    """
    kind = as_kind(kind)
    domains = _ensure_collection(domains)
    cfg = cfg or SolverConfig()
    p = domains.p
    if not 1 <= k <= p:
        raise InvalidRank(f"k must be in 1..{p}, got {k}")
    covs = [d.covariance for d in domains]
    traces = np.array([d.trace for d in domains])
    eigsums = (
        np.array([top_k_eigensum(c, k) for c in covs]) if kind in REGRET_KINDS else None
    )

    if k == p:
        frame = np.eye(p)
        values, idx = _domain_values(kind, frame, covs, traces, eigsums)
        active = frozenset(
            int(i) for i in np.flatnonzero(np.abs(values - values[idx]) <= _ACTIVE_TOL)
        )
        return FitResult(frame, float(values[idx]), active, 0, 0)

    maximize = kind in MIN_KINDS
    best = None
    for r in range(cfg.restarts):
        v0 = haar_frame(p, k, make_rng(cfg.seed, r))
        v, obj, iters = _pgd_restart(kind, covs, traces, eigsums, v0, cfg)
        if best is None or ((obj > best[1]) if maximize else (obj < best[1])):
            best = (v, obj, iters, r)

    frame, _, iters, restart = best
    values, idx = _domain_values(kind, frame, covs, traces, eigsums)
    active = frozenset(
        int(i) for i in np.flatnonzero(np.abs(values - values[idx]) <= _ACTIVE_TOL)
    )
    return FitResult(frame, float(values[idx]), active, iters, restart)


def _jitter_if_flat(m: np.ndarray) -> np.ndarray:
    # A domain fully explained by the directions chosen so far reduces to a
    # zero matrix, which DomainSpec rejects; nudge it back to positive trace.
    if float(np.trace(m)) <= _TRACE_JITTER:
        return m + _TRACE_JITTER * np.eye(m.shape[0])
    return m


def _reduced_collection(domains, basis, scale_by_trace: bool) -> DomainCollection:
    """Project each domain covariance into the coordinates of ``basis``.

    With ``scale_by_trace`` the reduced matrices are divided by the original
    full-space traces, so a plain Var solve on the result optimizes the
    NormVar objective of the original problem (the denominator must stay
    Tr(Sigma_e), not the trace of the reduced block).
    """
    specs = []
    for d in domains:
        m = basis.T @ (d.covariance @ basis)
        m = (m + m.T) / 2.0
        if scale_by_trace:
            m = m / d.trace
        specs.append(DomainSpec(id=d.id, covariance=_jitter_if_flat(m), weight=d.weight, n=d.n))
    return DomainCollection(tuple(specs))


def sequential_minpca(kind, domains, k: int, cfg: SolverConfig | None = None) -> list[np.ndarray]:
    """Greedy variant: pick rank-1 worst-case directions one at a time.

    Direction j is the rank-1 solution of the worst-case problem restricted
    to the orthogonal complement of the directions chosen so far. Only the
    Var and NormVar objectives are defined for this scheme. Returns the
    ordered unit vectors; their joint worst-case value can be strictly worse
    than the rank-k solve, which is the point of having both.
    """
    kind = as_kind(kind)
    if kind not in MIN_KINDS:
        raise InvalidKind(f"sequential variant is defined for var and norm-var, got {kind.value}")
    domains = _ensure_collection(domains)
    cfg = cfg or SolverConfig()
    p = domains.p
    if not 1 <= k <= p:
        raise InvalidRank(f"k must be in 1..{p}, got {k}")
    comp_rng = make_rng(spawn_seed(cfg.seed, 0))
    directions: list[np.ndarray] = []
    for j in range(k):
        if j == 0:
            basis = np.eye(p)
        else:
            chosen = np.column_stack(directions)
            basis = orthocomplement_frame(chosen, p - j, comp_rng)
        reduced = _reduced_collection(domains, basis, kind is LossKind.NORM_VAR)
        inner_cfg = replace(cfg, seed=spawn_seed(cfg.seed, j + 1))
        res = solve_wcpca(LossKind.VAR, reduced, 1, inner_cfg)
        u = basis @ res.frame[:, 0]
        directions.append(u / np.linalg.norm(u))
    return directions


def order_basis(kind, frame, domains, cfg: SolverConfig | None = None) -> np.ndarray:
    """Reorder a fitted frame so every column prefix is worst-case optimal.

    Working inside the span of ``frame``, repeatedly find and remove the unit
    direction whose removal maximizes the worst-case explained variance of
    what remains. On the unit sphere the removal objective
    ``min_e (Tr(M_e) - a.T M_e a)`` equals ``min_e a.T (Tr(M_e) I - M_e) a``,
    so each removal is a rank-1 Var solve on the PSD matrices
    ``Tr(M_e) I - M_e`` and reuses the main PGD solver. The last direction
    standing is the best single direction in the span and comes first; the
    direction removed first needed the least and comes last. The output spans
    the same subspace as the input.
    """
    kind = as_kind(kind)
    if kind not in MIN_KINDS:
        raise InvalidKind(f"basis ordering is defined for var and norm-var, got {kind.value}")
    domains = _ensure_collection(domains)
    cfg = cfg or SolverConfig()
    b = np.asarray(frame, dtype=np.float64)
    if b.ndim == 1:
        b = b[:, None]
    if b.shape[0] != domains.p:
        raise InvalidInput(f"frame rows {b.shape[0]} do not match domain dimension {domains.p}")
    k = b.shape[1]
    if k == 1:
        return b.copy()
    comp_rng = make_rng(spawn_seed(cfg.seed, 0))
    removed: list[np.ndarray] = []
    b = b.copy()
    for j in range(k, 1, -1):
        specs = []
        for d in domains:
            m = b.T @ (d.covariance @ b)
            m = (m + m.T) / 2.0
            if kind is LossKind.NORM_VAR:
                m = m / d.trace
            m = _jitter_if_flat(m)
            kmat = float(np.trace(m)) * np.eye(j) - m
            specs.append(DomainSpec(id=d.id, covariance=kmat, weight=d.weight, n=d.n))
        inner_cfg = replace(cfg, seed=spawn_seed(cfg.seed, j))
        res = solve_wcpca(LossKind.VAR, DomainCollection(tuple(specs)), 1, inner_cfg)
        a = res.frame[:, 0]
        removed.append(b @ a)
        b = b @ orthocomplement_frame(a, j - 1, comp_rng)
    columns = [b[:, 0]] + removed[::-1]
    return np.column_stack(columns)
