"""Shared fixtures and brute-force oracles.

The oracles work on plain ``{state: p}`` dicts with itertools and math only,
so they share no code with the library under test.
"""
from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from backbone import JointDistribution

AGG = {"min": min, "max": max, "mean": lambda xs: sum(xs) / len(xs)}


def brute_marginal(pmf: dict, state, keep) -> float:
    return sum(p for s, p in pmf.items() if all(s[i] == state[i] for i in keep))


def brute_entropy_synergy(pmf: dict, state, agg="min", base=2.0) -> list[float]:
    """Alpha-synergy of the local entropy -log P(state), by enumeration."""
    k = len(state)
    h = -math.log(pmf[tuple(state)], base)
    out = []
    for a in range(1, k + 1):
        losses = []
        for failed in itertools.combinations(range(k), a):
            keep = [i for i in range(k) if i not in failed]
            p_keep = brute_marginal(pmf, state, keep) if keep else 1.0
            losses.append(h + math.log(p_keep, base))
        out.append(AGG[agg](losses))
    return out


def atoms_of(syn) -> list[float]:
    return [syn[0]] + [syn[i] - syn[i - 1] for i in range(1, len(syn))]


def brute_kl_atoms(post: dict, prior: dict, agg="min", base=2.0):
    """(expected atoms, {state: local atoms}) of D(post || prior)."""
    local = {}
    for s, p in post.items():
        if p == 0:
            continue
        local[s] = [q - r for q, r in zip(atoms_of(brute_entropy_synergy(prior, s, agg, base)),
                                          atoms_of(brute_entropy_synergy(post, s, agg, base)))]
    k = len(next(iter(post)))
    expected = [sum(post[s] * local[s][i] for s in local) for i in range(k)]
    return expected, local


def brute_kl(post: dict, prior: dict, base=2.0) -> float:
    return sum(p * math.log(p / prior[s], base) for s, p in post.items() if p > 0)


def brute_entropy(pmf: dict, base=2.0) -> float:
    return -sum(p * math.log(p, base) for p in pmf.values() if p > 0)


def random_pmf(rng: np.random.Generator, sizes, sparsity: float = 0.0) -> dict:
    states = list(itertools.product(*[range(a) for a in sizes]))
    w = rng.exponential(size=len(states))
    if sparsity:
        w[rng.random(len(states)) < sparsity] = 0.0
        if not w.any():
            w[0] = 1.0
    w /= w.sum()
    return {s: float(p) for s, p in zip(states, w) if p > 0}


def random_distribution(rng, max_k=6, max_alphabet=4, sparsity=0.0):
    k = int(rng.integers(1, max_k + 1))
    sizes = [int(a) for a in rng.integers(2, max_alphabet + 1, size=k)]
    # keep the full product manageable
    while math.prod(sizes) > 1500:
        sizes[int(np.argmax(sizes))] -= 1
    pmf = random_pmf(rng, sizes, sparsity)
    return JointDistribution.from_pmf(pmf, sizes), pmf


def _gate(fn):
    pmf = {(a, b, fn(a, b)): 0.25 for a in (0, 1) for b in (0, 1)}
    return JointDistribution.from_pmf(pmf, [2, 2, 2], ["X1", "X2", "Y"])


@pytest.fixture
def xor():
    return _gate(lambda a, b: a ^ b)


@pytest.fixture
def and_gate():
    return _gate(lambda a, b: a & b)


@pytest.fixture
def data_dir():
    from pathlib import Path
    return Path(__file__).resolve().parent.parent / "demos" / "data"


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
