import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from backbone import (
    DomainError,
    GaussianModel,
    JointDistribution,
    expected_entropy,
    gaussian_local_entropy,
    local_conditional_entropy,
    local_entropy,
)
from conftest import brute_entropy, brute_marginal, random_distribution


def test_xor_entropies(xor):
    assert expected_entropy(xor) == pytest.approx(2.0, abs=1e-12)
    assert local_entropy(xor, (0, 1, 1)) == pytest.approx(2.0, abs=1e-12)
    # failing the output loses nothing, it is determined by the inputs
    assert local_conditional_entropy(xor, (0, 1, 1), [2]) == pytest.approx(0.0, abs=1e-12)
    assert local_conditional_entropy(xor, (0, 1, 1), [0, 1]) == pytest.approx(1.0, abs=1e-12)


def test_off_support_state_raises(and_gate):
    with pytest.raises(DomainError, match="outside support"):
        local_entropy(and_gate, (1, 1, 0))


def test_normalization_is_checked():
    with pytest.raises(ValueError):
        JointDistribution([[0], [1]], [0.5, 0.499], [2])
    with pytest.raises(ValueError):
        JointDistribution([[0], [1]], [1.5, -0.5], [2])
    with pytest.raises(ValueError):
        JointDistribution([[0], [2]], [0.5, 0.5], [2])


def test_duplicates_merge_and_zeros_drop():
    d = JointDistribution([[0], [0], [1]], [0.25, 0.25, 0.5], [3])
    assert d.support_size == 2 and d.prob((0,)) == pytest.approx(0.5)
    assert d.prob((2,)) == 0.0


def test_marginalize_empty_keep_is_trivial(xor):
    m = xor.marginalize([])
    assert m.k == 0 and m.probs.tolist() == [1.0]


def test_condition(and_gate):
    c = and_gate.condition(2, 1)
    assert c.k == 2 and c.support_size == 1 and c.prob((1, 1)) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        and_gate.condition(0, 0).condition(1, 1)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_marginals_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    dist, pmf = random_distribution(rng, max_k=4, max_alphabet=3, sparsity=0.3)
    keep = [i for i in range(dist.k) if rng.random() < 0.5]
    got = dist.marginal_probs_at(keep)
    want = [brute_marginal(pmf, s, keep) for s in map(tuple, dist.states)]
    np.testing.assert_allclose(got, want, atol=1e-12)
    assert expected_entropy(dist) == pytest.approx(brute_entropy(pmf), abs=1e-10)
    np.testing.assert_allclose(dist.marginalize(keep).probs.sum(), 1.0, atol=1e-12)


def test_product_of_marginals(xor):
    prod = xor.product_of_marginals()
    assert prod.support_size == 8
    np.testing.assert_allclose(prod.probs, 1 / 8)


def test_gaussian_local_entropy_matches_closed_form():
    cov = np.array([[2.0, 0.5], [0.5, 1.0]])
    g = GaussianModel(np.zeros(2), cov)
    x = np.array([0.3, -1.0])
    quad = x @ np.linalg.solve(cov, x)
    want = 0.5 * (2 * math.log(2 * math.pi) + math.log(np.linalg.det(cov)) + quad)
    assert gaussian_local_entropy(g, x) == pytest.approx(want, abs=1e-12)
    assert g.marginal([]).dim == 0


def test_gaussian_rejects_bad_covariance():
    with pytest.raises(DomainError):
        GaussianModel([0, 0], [[1, 2], [2, 1]])
    with pytest.raises(DomainError):
        GaussianModel([0, 0], [[1, 0.1], [0.2, 1]])
