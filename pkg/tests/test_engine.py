import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from backbone import (
    Aggregator,
    Exact,
    InfeasibleStrategyError,
    Mode,
    SetFunction,
    alpha_synergy,
    backbone,
    robustness,
    verify_desiderata,
)
from backbone.engine import EXACT_LIMIT
from conftest import AGG, atoms_of


def coverage_function(rng, k, universe=12):
    """Weighted coverage: a monotone, non-negative set function."""
    covers = [set(np.flatnonzero(rng.random(universe) < 0.3)) for _ in range(k)]
    weight = rng.exponential(size=universe)

    def f(survivors):
        covered = set().union(*(covers[i] for i in survivors)) if survivors else set()
        return float(sum(weight[j] for j in covered))
    return f


def brute_backbone(f, k, agg):
    full = frozenset(range(k))
    syn = []
    for a in range(1, k + 1):
        syn.append(AGG[agg]([f(full) - f(full - set(c)) for c in itertools.combinations(range(k), a)]))
    return syn


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 7), st.sampled_from(["min", "max", "mean"]))
def test_exact_matches_enumeration(seed, k, agg):
    f = coverage_function(np.random.default_rng(seed), k)
    spec = backbone(SetFunction.from_survivors(f, k), agg, Exact())
    want = brute_backbone(f, k, agg)
    np.testing.assert_allclose(spec.alpha_synergy, want, atol=1e-12)
    np.testing.assert_allclose(spec.partial_atoms, atoms_of(want), atol=1e-12)
    # sum identity: atoms add up to the full loss
    assert spec.partial_atoms.sum() == pytest.approx(f(frozenset(range(k))), abs=1e-9)
    assert spec.monotone_violations == ()


def test_winners_attain_the_value():
    rng = np.random.default_rng(3)
    f = coverage_function(rng, 6)
    sf = SetFunction.from_survivors(f, 6)
    for agg in ("min", "max"):
        spec = backbone(sf, agg)
        for a, w in enumerate(spec.winning_subsets, 1):
            assert w.alpha == a
            assert sf.loss(w.mask) == pytest.approx(spec.alpha_synergy[a - 1], abs=1e-12)


def test_min_ties_break_to_smallest_mask():
    sf = SetFunction(4, lambda m: float(bin(m).count("1")), Mode.LOSS)
    spec = backbone(sf, "min")
    assert [w.mask for w in spec.winning_subsets] == [0b1, 0b11, 0b111, 0b1111]


def test_loss_and_raw_modes_agree():
    rng = np.random.default_rng(7)
    f = coverage_function(rng, 5)
    raw = SetFunction.from_survivors(f, 5)
    table = [raw.loss(m) for m in range(32)]
    loss = SetFunction.from_loss_table(table)
    for agg in Aggregator:
        np.testing.assert_allclose(backbone(raw, agg).alpha_synergy,
                                   backbone(loss, agg).alpha_synergy, atol=1e-12)


def test_alpha_synergy_validates_alpha():
    sf = SetFunction(3, lambda m: 0.0, Mode.LOSS)
    with pytest.raises(ValueError):
        alpha_synergy(sf, 0)
    with pytest.raises(ValueError):
        alpha_synergy(sf, 4)


def test_exact_limit():
    sf = SetFunction(EXACT_LIMIT + 1, lambda m: 0.0, Mode.LOSS)
    with pytest.raises(InfeasibleStrategyError):
        backbone(sf, "min", Exact())


def test_robustness_of_disjoint_parts():
    # additive function: losing any one part costs its weight
    w = [1.0, 2.0, 3.0]
    sf = SetFunction.from_survivors(lambda s: sum(w[i] for i in s), 3)
    assert robustness(sf) == pytest.approx(5.0)
    spec = backbone(sf, "min")
    np.testing.assert_allclose(spec.partial_atoms, [1, 2, 3])


def test_non_monotone_function_reports_dips():
    # losing element 0 alone costs more than losing everything
    table = np.array([0, 5, 1, 5, 1, 5, 1, 2], dtype=float)
    sf = SetFunction.from_loss_table(table)
    spec = backbone(sf, "max")
    assert spec.monotone_violations == (3,)
    report = verify_desiderata(sf)
    assert not report.admissible and report.monotonicity


def test_verify_desiderata_accepts_coverage():
    f = coverage_function(np.random.default_rng(11), 6)
    assert verify_desiderata(SetFunction.from_survivors(f, 6)).admissible


def test_verify_desiderata_flags_negative_values():
    sf = SetFunction.from_survivors(lambda s: len(s) - 1.0, 2)
    rep = verify_desiderata(sf)
    assert [s.indices() for s in rep.nonnegativity] == [[]]


def test_mean_large_scale_is_sampled_without_bias():
    # additive weights: every alpha-subset mean is alpha * mean weight
    k = 30
    w = np.linspace(0.5, 2.0, k)
    sf = SetFunction(k, lambda m: float(sum(w[i] for i in range(k) if m >> i & 1)), Mode.LOSS)
    v, _ = alpha_synergy(sf, 15, "mean", Exact(mean_samples=3000))
    assert v == pytest.approx(15 * w.mean(), rel=0.02)


def test_empty_ground_set():
    spec = backbone(SetFunction(0, lambda m: 0.0, Mode.LOSS), "min")
    assert spec.ground_size == 0 and spec.total == 0.0
