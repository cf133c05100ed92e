"""Loss functionals and their exact algebraic identities.

The six kinds satisfy, for any frame V and covariance S:
    var + rcs = trace(S)
    norm-var + norm-rcs = 1
    reg = (sum of k largest eigenvalues) - var, and reg >= 0

Worst case means min over domains for var / norm-var, max for the rest.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wcpca import (
    DomainCollection,
    DomainSpec,
    InvalidInput,
    InvalidKind,
    InvalidWeights,
    LossKind,
    MIN_KINDS,
    ZeroTrace,
    average_covariance,
    haar_frame,
    loss,
    make_collection,
    make_rng,
    pooled_covariance,
    top_k_eigensum,
    worst_case,
)
from conftest import random_covariance


def _instance(seed, p=6, k=2):
    rng = make_rng(seed)
    return haar_frame(p, k, rng), random_covariance(rng, p)


class TestIdentities:
    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_var_plus_rcs_is_trace(self, seed):
        v, sigma = _instance(seed)
        total = loss(LossKind.VAR, v, sigma) + loss(LossKind.RCS, v, sigma)
        assert total == pytest.approx(np.trace(sigma), abs=1e-12)

    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_normalized_pair_sums_to_one(self, seed):
        v, sigma = _instance(seed)
        total = loss(LossKind.NORM_VAR, v, sigma) + loss(LossKind.NORM_RCS, v, sigma)
        assert total == pytest.approx(1.0, abs=1e-12)

    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_regret_decomposition(self, seed):
        v, sigma = _instance(seed)
        reg = loss(LossKind.REG, v, sigma, k=2)
        expected = top_k_eigensum(sigma, 2) - loss(LossKind.VAR, v, sigma)
        assert reg == pytest.approx(expected, abs=1e-10)
        assert reg >= -1e-10  # no frame beats the top-k eigenspace


class TestLossValues:
    def test_var_on_axis(self):
        sigma = np.diag([4.0, 1.0, 0.0])
        assert loss(LossKind.VAR, np.eye(3)[:, :1], sigma) == pytest.approx(4.0)
        assert loss(LossKind.RCS, np.eye(3)[:, :1], sigma) == pytest.approx(1.0)

    def test_regret_zero_at_top_frame(self):
        sigma = np.diag([4.0, 1.0, 0.5])
        v = np.eye(3)[:, :2]
        assert loss(LossKind.REG, v, sigma, k=2) == pytest.approx(0.0, abs=1e-12)

    def test_regret_needs_matching_k(self):
        with pytest.raises(InvalidInput):
            loss(LossKind.REG, np.eye(3)[:, :2], np.eye(3), k=1)

    def test_normalized_rejects_zero_trace(self):
        with pytest.raises(ZeroTrace):
            loss(LossKind.NORM_VAR, np.eye(2)[:, :1], np.zeros((2, 2)))

    def test_unknown_kind(self):
        with pytest.raises(InvalidKind):
            loss("variance", np.eye(2)[:, :1], np.eye(2))

    def test_string_kinds_accepted(self):
        sigma = np.diag([2.0, 1.0])
        v = np.eye(2)[:, :1]
        assert loss("var", v, sigma) == loss(LossKind.VAR, v, sigma)


class TestWorstCase:
    def test_min_for_var_max_for_rcs(self, example1):
        v = np.eye(3)[:, :1]
        # domain a: var 0.9 / rcs 0.1; domain b: var 0.0 / rcs 1.0
        assert worst_case(LossKind.VAR, v, example1) == pytest.approx(0.0)
        assert worst_case(LossKind.RCS, v, example1) == pytest.approx(1.0)

    def test_return_index_breaks_ties_low(self):
        coll = make_collection([np.eye(2), np.eye(2)])
        _, idx = worst_case(LossKind.VAR, np.eye(2)[:, :1], coll, return_index=True)
        assert idx == 0

    def test_kind_partition(self):
        assert LossKind.VAR in MIN_KINDS and LossKind.NORM_VAR in MIN_KINDS
        assert len(MIN_KINDS) == 2


class TestCollections:
    def test_default_ids_and_weights(self):
        coll = make_collection([np.eye(2), 2 * np.eye(2)])
        assert [d.id for d in coll] == ["d0", "d1"]
        assert sum(d.weight for d in coll) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInput):
            make_collection([np.eye(2), np.eye(3)])

    def test_domain_spec_symmetrizes(self):
        d = DomainSpec(id="x", covariance=np.array([[1.0, 1e-8], [0.0, 1.0]]))
        np.testing.assert_allclose(d.covariance, d.covariance.T)

    def test_pooled_needs_unit_weights(self):
        specs = (
            DomainSpec(id="a", covariance=np.eye(2), weight=0.9),
            DomainSpec(id="b", covariance=np.eye(2), weight=0.3),
        )
        with pytest.raises(InvalidWeights):
            pooled_covariance(DomainCollection(specs))

    def test_pooled_and_average(self, example1):
        pooled = pooled_covariance(example1)
        np.testing.assert_allclose(pooled, np.diag([0.45, 0.25, 0.3]), atol=1e-15)
        np.testing.assert_allclose(average_covariance(example1), pooled, atol=1e-15)


class TestEigensumCache:
    def test_cache_reused(self):
        sigma = np.diag([3.0, 2.0, 1.0])
        cache = {}
        a = top_k_eigensum(sigma, 2, cache=cache, key="s")
        assert ("s", 2) in cache
        # poison the cache entry to prove the memo is honored
        cache[("s", 2)] = -1.0
        assert top_k_eigensum(sigma, 2, cache=cache, key="s") == -1.0
        assert a == pytest.approx(5.0)
