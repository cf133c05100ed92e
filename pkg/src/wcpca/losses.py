"""The six loss functionals and their worst-case aggregation over domains.

All losses are expressed in covariance form. For a frame V and covariance S
with trace t and top-k eigenvalue sum s_k:

    Var      Tr(V.T S V)          explained variance (higher is better)
    NormVar  Var / t              scale-free explained variance
    RCS      t - Var              reconstruction error
    NormRCS  RCS / t              scale-free reconstruction error
    Reg      s_k - Var            regret against the domain-optimal subspace
    NormReg  Reg / t              scale-free regret

Var and NormVar are "min over domains" objectives (the worst case is the
least-explained domain); the other four take the max.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidInput, InvalidKind, InvalidWeights, ZeroTrace
from .linalg import as_covariance, sym_eigen

__all__ = [
    "LossKind",
    "as_kind",
    "MIN_KINDS",
    "NORMALIZED_KINDS",
    "REGRET_KINDS",
    "DomainSpec",
    "DomainCollection",
    "make_collection",
    "top_k_eigensum",
    "loss",
    "worst_case",
    "pooled_covariance",
    "average_covariance",
]


class LossKind(str, Enum):
    """Enumeration of the six supported loss functionals."""

    VAR = "var"
    NORM_VAR = "norm-var"
    RCS = "rcs"
    NORM_RCS = "norm-rcs"
    REG = "reg"
    NORM_REG = "norm-reg"


# Worst case = min over domains for these; max for everything else.
MIN_KINDS = frozenset({LossKind.VAR, LossKind.NORM_VAR})
NORMALIZED_KINDS = frozenset({LossKind.NORM_VAR, LossKind.NORM_RCS, LossKind.NORM_REG})
REGRET_KINDS = frozenset({LossKind.REG, LossKind.NORM_REG})


@dataclass(frozen=True)
class DomainSpec:
    """One data source: a covariance plus sampling weight and sample count.

    The covariance is symmetrized on construction and must have strictly
    positive trace; the weight must be positive. ``n`` is optional and only
    informational here (preprocessing fills it from data).
    """

    id: str
    covariance: np.ndarray
    weight: float = 1.0
    n: int | None = None

    def __post_init__(self):
        cov = as_covariance(self.covariance)
        if float(np.trace(cov)) <= 0.0:
            raise ZeroTrace(f"domain {self.id!r} has nonpositive trace")
        if not self.weight > 0.0:
            raise InvalidWeights(f"domain {self.id!r} has nonpositive weight {self.weight}")
        if self.n is not None and self.n < 1:
            raise InvalidInput(f"domain {self.id!r} has nonpositive sample count {self.n}")
        object.__setattr__(self, "covariance", cov)

    @property
    def p(self) -> int:
        return self.covariance.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.covariance))


@dataclass(frozen=True)
class DomainCollection:
    """Nonempty ordered set of domains sharing one dimension p."""

    domains: tuple[DomainSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "domains", tuple(self.domains))
        if not self.domains:
            raise InvalidInput("domain collection is empty")
        dims = {d.p for d in self.domains}
        if len(dims) != 1:
            raise InvalidInput(f"domains disagree on dimension: {sorted(dims)}")

    @property
    def p(self) -> int:
        return self.domains[0].p

    def __len__(self) -> int:
        return len(self.domains)

    def __iter__(self):
        return iter(self.domains)

    def __getitem__(self, idx) -> DomainSpec:
        return self.domains[idx]


def make_collection(covariances, ids=None, weights=None, ns=None) -> DomainCollection:
    """Build a DomainCollection from raw covariance matrices.

    Ids default to d0, d1, ...; weights default to 1/E each.
    """
    covs = list(covariances)
    count = len(covs)
    if ids is None:
        ids = [f"d{i}" for i in range(count)]
    if weights is None:
        weights = [1.0 / count] * count
    if ns is None:
        ns = [None] * count
    if not (len(ids) == len(weights) == len(ns) == count):
        raise InvalidInput("covariances, ids, weights, and ns must have equal length")
    return DomainCollection(
        tuple(
            DomainSpec(id=str(i), covariance=c, weight=float(w), n=n)
            for i, c, w, n in zip(ids, covs, weights, ns)
        )
    )


def _as_frame(v) -> np.ndarray:
    a = np.asarray(v, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise InvalidInput(f"frame must be 2-D, got shape {a.shape}")
    return a


def as_kind(kind) -> LossKind:
    """Coerce a LossKind or its string value, mapping bad names to InvalidKind."""
    try:
        return LossKind(kind)
    except ValueError:
        known = ", ".join(m.value for m in LossKind)
        raise InvalidKind(f"unknown loss kind {kind!r}; known kinds: {known}") from None


def top_k_eigensum(sigma, k: int, cache: dict | None = None, key=None) -> float:
    """Sum of the k largest eigenvalues of ``sigma``.

    ``cache`` is an explicit memo dict (never hidden global state) keyed by
    ``(key, k)``; pass a stable ``key`` such as a domain id to reuse
    eigendecompositions across calls.
    """
    if cache is not None and key is not None:
        hit = cache.get((key, k))
        if hit is not None:
            return hit
    value = float(sym_eigen(sigma).eigenvalues[:k].sum())
    if cache is not None and key is not None:
        cache[(key, k)] = value
    return value


def loss(kind, v, sigma, k: int | None = None, cache: dict | None = None, cache_key=None) -> float:
    """Evaluate one loss functional at frame ``v`` under covariance ``sigma``.

    ``k`` defaults to the frame width and, for the regret kinds, must equal
    it (the regret baseline is the top-k eigenvalue sum of ``sigma``).
    Normalized kinds require a strictly positive trace.
    """
    kind = as_kind(kind)
    frame = _as_frame(v)
    s = np.asarray(sigma, dtype=np.float64)
    if s.shape[0] != frame.shape[0]:
        raise InvalidInput(f"frame rows {frame.shape[0]} do not match covariance dim {s.shape[0]}")
    if k is None:
        k = frame.shape[1]
    if kind in REGRET_KINDS and k != frame.shape[1]:
        raise InvalidInput(f"regret baseline rank {k} must equal the frame width {frame.shape[1]}")
    var = float(np.sum(frame * (s @ frame)))
    if kind is LossKind.VAR:
        return var
    if kind is LossKind.RCS:
        return float(np.trace(s)) - var
    if kind is LossKind.REG:
        return top_k_eigensum(s, k, cache, cache_key) - var
    tr = float(np.trace(s))
    if tr <= 0.0:
        raise ZeroTrace(f"normalized loss needs positive trace, got {tr}")
    if kind is LossKind.NORM_VAR:
        return var / tr
    if kind is LossKind.NORM_RCS:
        return (tr - var) / tr
    return (top_k_eigensum(s, k, cache, cache_key) - var) / tr


def worst_case(kind, v, domains, return_index: bool = False, cache: dict | None = None):
    """Worst-case loss of ``v`` over a domain collection.

    Min over domains for Var/NormVar, max for the other kinds. Ties go to the
    smallest domain index. With ``return_index=True`` the attaining index is
    returned alongside the value.
    """
    kind = as_kind(kind)
    specs = list(domains)
    if not specs:
        raise InvalidInput("worst_case needs at least one domain")
    values = [loss(kind, v, d.covariance, cache=cache, cache_key=d.id) for d in specs]
    idx = int(np.argmin(values)) if kind in MIN_KINDS else int(np.argmax(values))
    value = float(values[idx])
    return (value, idx) if return_index else value


def pooled_covariance(domains) -> np.ndarray:
    """Weighted combination sum_e w_e Sigma_e; weights must sum to 1."""
    specs = list(domains)
    if not specs:
        raise InvalidInput("pooled_covariance needs at least one domain")
    total = sum(d.weight for d in specs)
    if abs(total - 1.0) > 1e-8:
        raise InvalidWeights(f"domain weights sum to {total!r}, expected 1")
    out = np.zeros_like(specs[0].covariance)
    for d in specs:
        out += d.weight * d.covariance
    return out


def average_covariance(domains) -> np.ndarray:
    """Unweighted mean covariance (1/E) sum_e Sigma_e."""
    specs = list(domains)
    if not specs:
        raise InvalidInput("average_covariance needs at least one domain")
    out = np.zeros_like(specs[0].covariance)
    for d in specs:
        out += d.covariance
    return out / len(specs)
