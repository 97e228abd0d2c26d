"""Backbone decompositions of entropy, KL divergence, negentropy, total correlation and mutual information.

Every measure here reduces to local entropies. For a state ``x`` and a
failure set ``a`` the loss is ``h(x) - h(x_surviving)``; the engine turns
those losses into a synergy series per state, and expectations are taken
under the distribution that generated the states. Divergence atoms are
differences of prior and posterior entropy atoms, state by state, so they can
be negative.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from math import log
from typing import Callable

import numpy as np

from .distribution import GaussianModel, JointDistribution, expected_entropy
from .engine import (
    EXACT_LIMIT,
    Exact,
    Mode,
    SearchStrategy,
    SetFunction,
    backbone,
    exact_sweep,
    reseed,
)
from .errors import DomainError
from .search import running_max
from .spectrum import Aggregator, BackboneSpectrum, find_violations, partial_atoms
from .subsets import SubsetMask, indices_from_mask

__all__ = [
    "MiFormulation",
    "DivergenceSpectrum",
    "entropy_loss_function",
    "entropy_backbone_local",
    "entropy_backbone_expected",
    "kl_backbone",
    "negentropy_backbone",
    "total_correlation_backbone",
    "mi_backbone",
    "gaussian_entropy_backbone",
    "kl_divergence",
    "mutual_information",
]


class MiFormulation(str, Enum):
    CONDITIONAL = "conditional"  # one atom per source
    JOINT = "joint"              # sources and target together: k + 1 atoms


@dataclass(frozen=True, eq=False)
class DivergenceSpectrum:
    """Partial divergence atoms and the two entropy spectra they come from.

    ``atoms[a] = prior_spectrum.partial_atoms[a] - posterior_spectrum.partial_atoms[a]``
    and ``total`` is the divergence computed directly from the
    distributions. For expected decompositions, ``states``, ``weights`` and
    ``local_atoms`` hold the per-state atoms that were averaged.
    """

    atoms: np.ndarray
    prior_spectrum: BackboneSpectrum
    posterior_spectrum: BackboneSpectrum
    total: float
    states: np.ndarray | None = None
    weights: np.ndarray | None = None
    local_atoms: np.ndarray | None = None
    warnings: tuple[str, ...] = field(default=())

    @property
    def alpha_synergy(self) -> np.ndarray:
        """Cumulative divergence lost at each scale (prior minus posterior synergy)."""
        return np.cumsum(self.atoms)

    @property
    def atom_sum(self) -> float:
        return float(np.sum(self.atoms))

    @property
    def monotone_violations(self) -> tuple[int, ...]:
        return tuple(sorted(set(self.prior_spectrum.monotone_violations)
                            | set(self.posterior_spectrum.monotone_violations)))

    def local(self, state) -> np.ndarray:
        """Atoms of one state from an expected decomposition."""
        if self.states is None:
            raise ValueError("no per-state atoms stored")
        s = np.asarray(state).reshape(1, -1)
        hit = np.flatnonzero(np.all(self.states == s, axis=1))
        if not hit.size:
            raise KeyError(f"state {tuple(s[0])} not in the decomposition")
        return self.local_atoms[hit[0]]


# ---------------------------------------------------------------------------
# loss tables

class _LossTable:
    """Losses ``h(x) - h(x_surviving)`` for a batch of query states.

    ``log_prob(keep)`` returns natural-log probabilities (or densities) of
    the kept coordinates of every query state. Results are memoised per
    surviving set so a sweep touching every subset computes each marginal once.
    """

    def __init__(self, log_prob: Callable[[list[int]], np.ndarray], k: int, base: float):
        self._log_prob = log_prob
        self.k = k
        self.full = (1 << k) - 1
        self._scale = 1.0 / log(base)
        self._cache: dict[int, np.ndarray] = {}
        self._log_full = self.log_marginal(self.full)
        self.n = self._log_full.shape[0]

    def log_marginal(self, surviving: int) -> np.ndarray:
        v = self._cache.get(surviving)
        if v is None:
            v = np.asarray(self._log_prob(indices_from_mask(surviving)), dtype=np.float64)
            v.setflags(write=False)
            self._cache[surviving] = v
        return v

    def columns(self, failed_masks) -> np.ndarray:
        cols = [self.log_marginal(self.full & ~int(m)) for m in failed_masks]
        if not cols:
            return np.zeros((self.n, 0))
        return (np.stack(cols, axis=1) - self._log_full[:, None]) * self._scale

    def setfunction(self, i: int, label: str = "") -> SetFunction:
        def one(m: int) -> float:
            return float((self.log_marginal(self.full & ~m)[i] - self._log_full[i]) * self._scale)

        return SetFunction(self.k, one, Mode.LOSS, label,
                           evaluate_many=lambda ms: self.columns(ms)[i])


def _discrete_table(dist: JointDistribution, query: np.ndarray, base: float) -> _LossTable:
    def log_prob(keep):
        with np.errstate(divide="ignore"):
            return np.log(dist.marginal_probs_at(keep, query))
    return _LossTable(log_prob, dist.k, base)


@dataclass
class _Spectra:
    """Synergy series for every query state of one loss table."""

    syn: np.ndarray                 # (n, k), repaired when requested
    raw: np.ndarray | None          # (n, k) as computed, only when repaired
    winners: list | None            # per state list of SubsetMask | None
    violations: list[tuple[int, ...]]
    tag: str
    notes: tuple[str, ...]


def _sweep(table: _LossTable, agg: Aggregator, strat: SearchStrategy, repair: bool,
           workers: int, seed_path: tuple[int, ...] = ()) -> _Spectra:
    k, n = table.k, table.n
    if isinstance(strat, Exact) and k <= EXACT_LIMIT:
        syn, win = exact_sweep(table.columns, k, agg)
        winners = None if win is None else [
            [SubsetMask.from_int(int(m), k) for m in row] for row in win]
        notes: tuple[str, ...] = ()
    else:
        def one(i):
            return backbone(table.setfunction(i), agg, reseed(strat, *seed_path, i))
        if workers > 1 and n > 1:
            with ThreadPoolExecutor(max_workers=workers) as ex:
                specs = list(ex.map(one, range(n)))
        else:
            specs = [one(i) for i in range(n)]
        syn = np.array([s.alpha_synergy for s in specs]).reshape(n, k)
        winners = [list(s.winning_subsets) for s in specs]
        notes = tuple(sorted({note for s in specs for note in s.notes}))
    violations = [tuple(find_violations(row)) for row in syn]
    raw = None
    if repair:
        raw, syn = syn, running_max(syn)
    return _Spectra(syn, raw, winners, violations, strat.tag, notes)


def _local_spectrum(sp: _Spectra, i: int, agg: Aggregator, label: str) -> BackboneSpectrum:
    syn = sp.syn[i]
    winners = sp.winners[i] if sp.winners is not None else None
    return BackboneSpectrum(syn, partial_atoms(syn) if len(syn) else syn,
                            tuple(winners) if winners else (None,) * len(syn),
                            agg, sp.tag, sp.violations[i],
                            None if sp.raw is None else sp.raw[i], label, sp.notes)


def _expected_spectrum(sp: _Spectra, weights: np.ndarray, agg: Aggregator, label: str) -> BackboneSpectrum:
    syn = weights @ sp.syn
    k = sp.syn.shape[1]
    viol = sorted({a for v, w in zip(sp.violations, weights) if w > 0 for a in v})
    return BackboneSpectrum(syn, partial_atoms(syn) if k else syn, (None,) * k, agg, sp.tag,
                            tuple(viol), None if sp.raw is None else weights @ sp.raw,
                            label, sp.notes)


def _resolve(agg, strat) -> tuple[Aggregator, SearchStrategy]:
    return Aggregator(agg), (strat if strat is not None else Exact())


def _find_state(dist: JointDistribution, state) -> np.ndarray:
    s = np.asarray(state, dtype=np.int64).reshape(1, -1)
    if s.shape[1] != dist.k:
        raise ValueError(f"state has length {s.shape[1]}, expected {dist.k}")
    if dist.prob(s[0]) <= 0:
        raise DomainError(f"state outside support: {tuple(s[0].tolist())}")
    return s


# ---------------------------------------------------------------------------
# entropy

def entropy_loss_function(dist: JointDistribution, state, base: float = 2) -> SetFunction:
    """Local entropy of ``state`` as a LOSS-mode set function over the variables."""
    s = _find_state(dist, state)
    return _discrete_table(dist, s, base).setfunction(0, label="entropy")


def entropy_backbone_local(dist: JointDistribution, state, aggregator=Aggregator.MIN,
                           strategy: SearchStrategy | None = None, base: float = 2,
                           repair: bool = False) -> BackboneSpectrum:
    """Backbone of the local entropy ``h(state)``; atoms sum to ``h(state)``."""
    agg, strat = _resolve(aggregator, strategy)
    s = _find_state(dist, state)
    sp = _sweep(_discrete_table(dist, s, base), agg, strat, repair, 1)
    return _local_spectrum(sp, 0, agg, "entropy")


def entropy_backbone_expected(dist: JointDistribution, aggregator=Aggregator.MIN,
                              strategy: SearchStrategy | None = None, base: float = 2,
                              repair: bool = False, workers: int = 1) -> BackboneSpectrum:
    """Probability-weighted average of the local entropy backbones.

    The atoms sum to the Shannon entropy of ``dist``.
    """
    agg, strat = _resolve(aggregator, strategy)
    sp = _sweep(_discrete_table(dist, dist.states, base), agg, strat, repair, workers)
    return _expected_spectrum(sp, dist.probs, agg, "entropy")


# ---------------------------------------------------------------------------
# divergences

def kl_divergence(posterior: JointDistribution, prior: JointDistribution, base: float = 2) -> float:
    """``sum_x P(x) log P(x)/Q(x)``, computed directly."""
    q = prior.marginal_probs_at(range(prior.k), posterior.states)
    if np.any(q <= 0):
        raise DomainError("KL undefined: prior assigns zero to a posterior-support state")
    return float(np.sum(posterior.probs * (np.log(posterior.probs) - np.log(q))) / log(base))


def mutual_information(joint: JointDistribution, target_index: int, base: float = 2) -> float:
    """``I(sources; target)`` from joint and marginal entropies."""
    sources = [i for i in range(joint.k) if i != target_index]
    return (expected_entropy(joint.marginalize(sources), base)
            + expected_entropy(joint.marginalize([target_index]), base)
            - expected_entropy(joint, base))


def _check_compatible(posterior: JointDistribution, prior: JointDistribution):
    if posterior.k != prior.k:
        raise ValueError(f"posterior has {posterior.k} variables, prior has {prior.k}")
    if posterior.alphabet_sizes != prior.alphabet_sizes:
        raise ValueError("posterior and prior alphabets differ")


def kl_backbone(posterior: JointDistribution, prior: JointDistribution,
                aggregator=Aggregator.MIN, strategy: SearchStrategy | None = None,
                state=None, base: float = 2, repair: bool = False,
                workers: int = 1) -> DivergenceSpectrum:
    """Backbone decomposition of ``D(posterior || prior)``.

    Each posterior-support state gets a prior and a posterior entropy
    backbone; their atom-wise difference is the local divergence spectrum.
    With ``state`` given, only that state is decomposed and ``total`` is the
    local divergence ``log P(x)/Q(x)``. Otherwise atoms are averaged under
    the posterior and sum to the KL divergence.

    Raises
    ------
    DomainError
        If the prior gives zero probability to a state the posterior supports.
    """
    agg, strat = _resolve(aggregator, strategy)
    _check_compatible(posterior, prior)
    query = posterior.states if state is None else _find_state(posterior, state)
    q = prior.marginal_probs_at(range(prior.k), query)
    if np.any(q <= 0):
        raise DomainError("KL undefined: prior assigns zero to a posterior-support state")
    weights = posterior.probs if state is None else np.ones(1)

    post_sp = _sweep(_discrete_table(posterior, query, base), agg, strat, repair, workers, (0,))
    prior_sp = _sweep(_discrete_table(prior, query, base), agg, strat, repair, workers, (1,))
    post_atoms = partial_atoms(post_sp.syn) if posterior.k else post_sp.syn
    prior_atoms = partial_atoms(prior_sp.syn) if posterior.k else prior_sp.syn
    local_atoms = prior_atoms - post_atoms
    atoms = weights @ local_atoms

    if state is None:
        total = kl_divergence(posterior, prior, base)
        post_spec = _expected_spectrum(post_sp, weights, agg, "posterior entropy")
        prior_spec = _expected_spectrum(prior_sp, weights, agg, "prior entropy")
    else:
        total = float((np.log(posterior.prob(query[0])) - np.log(q[0])) / log(base))
        post_spec = _local_spectrum(post_sp, 0, agg, "posterior entropy")
        prior_spec = _local_spectrum(prior_sp, 0, agg, "prior entropy")
    local_atoms.setflags(write=False)
    return DivergenceSpectrum(atoms, prior_spec, post_spec, total,
                              np.array(query), np.array(weights), local_atoms)


def negentropy_backbone(dist: JointDistribution, aggregator=Aggregator.MIN,
                        strategy: SearchStrategy | None = None, state=None, base: float = 2,
                        repair: bool = False, workers: int = 1) -> DivergenceSpectrum:
    """KL backbone of ``dist`` from the uniform distribution on its alphabet product."""
    uniform = JointDistribution.uniform(dist.alphabet_sizes, dist.variable_names)
    return kl_backbone(dist, uniform, aggregator, strategy, state, base, repair, workers)


def total_correlation_backbone(dist: JointDistribution, aggregator=Aggregator.MIN,
                               strategy: SearchStrategy | None = None, state=None,
                               base: float = 2, repair: bool = False,
                               workers: int = 1) -> DivergenceSpectrum:
    """KL backbone of ``dist`` from the product of its first-order marginals."""
    return kl_backbone(dist, dist.product_of_marginals(), aggregator, strategy, state,
                       base, repair, workers)


def _independent_joint(joint: JointDistribution, target_index: int) -> JointDistribution:
    """``P(sources) P(target)`` laid out on the same variables as ``joint``."""
    sources = [i for i in range(joint.k) if i != target_index]
    px = joint.marginalize(sources)
    py = joint.marginalize([target_index])
    ix = np.repeat(np.arange(px.support_size), py.support_size)
    iy = np.tile(np.arange(py.support_size), px.support_size)
    states = np.empty((len(ix), joint.k), dtype=np.int64)
    states[:, sources] = px.states[ix]
    states[:, target_index] = py.states[iy, 0]
    return JointDistribution(states, px.probs[ix] * py.probs[iy],
                             joint.alphabet_sizes, joint.variable_names)


def mi_backbone(joint: JointDistribution, target_index: int,
                formulation: MiFormulation | str = MiFormulation.CONDITIONAL,
                aggregator=Aggregator.MIN, strategy: SearchStrategy | None = None,
                state=None, base: float = 2, repair: bool = False,
                workers: int = 1) -> DivergenceSpectrum:
    """Backbone decomposition of the information the other variables carry about one target.

    CONDITIONAL averages, over target values ``y``, the KL backbone of
    ``P(sources | y)`` from ``P(sources)``: one atom per source. JOINT
    decomposes the KL divergence of the joint from ``P(sources) P(target)``:
    one atom per variable, target included. Both sum to ``I(sources; target)``.

    A target with a single value yields all-zero atoms and a warning.
    """
    agg, strat = _resolve(aggregator, strategy)
    form = MiFormulation(formulation)
    k = joint.k
    if not 0 <= target_index < k:
        raise ValueError(f"target index {target_index} out of range for {k} variables")
    sources = [i for i in range(k) if i != target_index]
    notes = []
    py = joint.marginalize([target_index])
    if py.support_size == 1:
        msg = f"degenerate target {joint.variable_names[target_index]}: a single value"
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
        notes.append(msg)

    if form is MiFormulation.JOINT:
        res = kl_backbone(joint, _independent_joint(joint, target_index), agg, strat,
                          state, base, repair, workers)
        total = res.total if state is not None else mutual_information(joint, target_index, base)
        return DivergenceSpectrum(res.atoms, res.prior_spectrum, res.posterior_spectrum,
                                  total, res.states, res.weights, res.local_atoms, tuple(notes))

    px = joint.marginalize(sources)
    if state is not None:
        s = _find_state(joint, state)[0]
        y = int(s[target_index])
        res = kl_backbone(joint.condition(target_index, y), px, agg, reseed(strat, y),
                          s[sources], base, repair, workers)
        return DivergenceSpectrum(res.atoms, res.prior_spectrum, res.posterior_spectrum,
                                  res.total, s[None, :], np.ones(1), res.local_atoms, tuple(notes))

    atoms = np.zeros(len(sources))
    local_atoms = np.zeros((joint.support_size, len(sources)))
    prior_parts, post_parts = [], []
    for y, p_y in zip(py.states[:, 0].tolist(), py.probs):
        res = kl_backbone(joint.condition(target_index, y), px, agg, reseed(strat, y),
                          None, base, repair, workers)
        atoms += p_y * res.atoms
        full_states = np.empty((res.states.shape[0], k), dtype=np.int64)
        full_states[:, sources] = res.states
        full_states[:, target_index] = y
        rows = [joint.state_index(r) for r in full_states]
        local_atoms[rows] = res.local_atoms
        prior_parts.append((p_y, res.prior_spectrum))
        post_parts.append((p_y, res.posterior_spectrum))
    local_atoms.setflags(write=False)
    return DivergenceSpectrum(atoms, _mix(prior_parts, "prior entropy"),
                              _mix(post_parts, "posterior entropy"),
                              mutual_information(joint, target_index, base),
                              np.array(joint.states), np.array(joint.probs), local_atoms,
                              tuple(notes))


def _mix(parts: list[tuple[float, BackboneSpectrum]], label: str) -> BackboneSpectrum:
    first = parts[0][1]
    syn = sum(w * s.alpha_synergy for w, s in parts)
    raw = None if not first.repaired else sum(w * s.raw_alpha_synergy for w, s in parts)
    viol = sorted({a for _, s in parts for a in s.monotone_violations})
    return BackboneSpectrum(syn, partial_atoms(syn) if len(syn) else syn,
                            (None,) * len(syn), first.aggregator, first.strategy,
                            tuple(viol), raw, label, first.notes)


# ---------------------------------------------------------------------------
# Gaussian

def gaussian_entropy_backbone(model: GaussianModel, points, aggregator=Aggregator.MIN,
                              strategy: SearchStrategy | None = None, base: float = np.e,
                              repair: bool = False, workers: int = 1) -> BackboneSpectrum:
    """Backbone of the local differential entropy under a multivariate normal.

    ``points`` is one point (1-D) for a local decomposition or an ``(m, d)``
    array whose local spectra are averaged with equal weight. Local
    differential entropy can be negative, so unlike the discrete case the
    synergy series may dip; dips are reported in ``monotone_violations``.
    """
    agg, strat = _resolve(aggregator, strategy)
    pts = np.asarray(points, dtype=np.float64)
    local = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != model.dim:
        raise ValueError(f"points must have {model.dim} coordinates")

    table = _LossTable(lambda keep: model.marginal(keep).log_density_many(pts[:, keep]),
                       model.dim, base)
    sp = _sweep(table, agg, strat, repair, workers)
    if local:
        return _local_spectrum(sp, 0, agg, "gaussian entropy")
    return _expected_spectrum(sp, np.full(pts.shape[0], 1.0 / pts.shape[0]), agg,
                              "gaussian entropy")
