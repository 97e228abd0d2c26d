"""Generic alpha-synergy decomposition of a monotone set function.

A :class:`SetFunction` assigns a value to every subset of a ground set of
``k`` elements. Failing the elements in ``a`` costs
``loss(a) = f(ground) - f(ground minus a)``; the alpha-synergy is the loss
summarised (min, max or mean) over every failure set of size alpha, and the
partial atoms are its successive differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from math import comb
from typing import Callable, Iterable, Union

import numpy as np

from .errors import InfeasibleStrategyError
from .search import (
    TIE_TOL,
    AnnealSchedule,
    anneal_min_bipartition,
    derive_seed,
    sample_mean_loss,
    sample_min_bipartition,
)
from .spectrum import MONOTONE_TOL, Aggregator, BackboneSpectrum, partial_atoms
from .subsets import SubsetMask, indices_from_mask, masks_of_size

__all__ = [
    "Mode",
    "SetFunction",
    "Exact",
    "Sampled",
    "Annealed",
    "SearchStrategy",
    "DesiderataReport",
    "alpha_synergy",
    "backbone",
    "partial_atoms",
    "robustness",
    "verify_desiderata",
    "EXACT_LIMIT",
    "MEAN_ENUMERATION_LIMIT",
]

# Largest ground set swept exhaustively by MIN/MAX (2**20 subsets).
EXACT_LIMIT = 20
# MEAN enumerates a scale exhaustively while comb(k, alpha) stays below this.
MEAN_ENUMERATION_LIMIT = 10 ** 6
DEFAULT_MEAN_SAMPLES = 100_000


class Mode(str, Enum):
    """What :attr:`SetFunction.evaluate` returns for a failure set."""

    RAW_F = "raw"   # f on the surviving elements
    LOSS = "loss"   # f(ground) - f(survivors)


MaskLike = Union[int, SubsetMask, Iterable[int]]


def _as_mask(m: MaskLike) -> int:
    if isinstance(m, SubsetMask):
        return m.mask
    if isinstance(m, (int, np.integer)):
        return int(m)
    out = 0
    for i in m:
        out |= 1 << int(i)
    return out


class SetFunction:
    """A set function on ``range(ground_size)``, queried by failure set.

    Parameters
    ----------
    ground_size : int
    evaluate : callable
        Takes the *failed* elements as an int bitmask (bit ``i`` set when
        element ``i`` failed). Returns ``f(survivors)`` in ``RAW_F`` mode or
        ``f(ground) - f(survivors)`` in ``LOSS`` mode.
    mode : Mode
    label : str
    evaluate_many : callable, optional
        Vectorised ``evaluate`` over an int64 array of masks.
    """

    def __init__(self, ground_size: int, evaluate: Callable[[int], float],
                 mode: Mode | str = Mode.RAW_F, label: str = "",
                 evaluate_many: Callable[[np.ndarray], np.ndarray] | None = None):
        if ground_size < 0:
            raise ValueError("ground_size must be non-negative")
        self.ground_size = int(ground_size)
        self.mode = Mode(mode)
        self.label = label
        self._evaluate = evaluate
        self._evaluate_many = evaluate_many
        self.full_mask = (1 << self.ground_size) - 1
        # RAW_F is turned into a loss once, here, so each query is one call.
        self._intact = float(evaluate(0)) if self.mode is Mode.RAW_F else None

    @classmethod
    def from_survivors(cls, fn: Callable[[frozenset], float], ground_size: int,
                       label: str = "") -> "SetFunction":
        """Wrap ``fn(surviving elements) -> value`` as a RAW_F set function."""
        full = (1 << ground_size) - 1
        return cls(ground_size, lambda m: fn(frozenset(indices_from_mask(full & ~m))),
                   Mode.RAW_F, label)

    @classmethod
    def from_loss_table(cls, table, label: str = "") -> "SetFunction":
        """LOSS function backed by an array indexed by failure mask."""
        table = np.asarray(table, dtype=np.float64)
        k = int(round(np.log2(table.size)))
        if 1 << k != table.size:
            raise ValueError("loss table length must be a power of two")
        return cls(k, lambda m: float(table[m]), Mode.LOSS, label,
                   evaluate_many=lambda ms: table[np.asarray(ms, dtype=np.int64)])

    def raw(self, failed: MaskLike) -> float:
        """``f(survivors)``; only defined in RAW_F mode."""
        if self.mode is not Mode.RAW_F:
            raise TypeError("raw values are unavailable for a LOSS-mode function")
        return float(self._evaluate(_as_mask(failed)))

    def loss(self, failed: MaskLike) -> float:
        v = float(self._evaluate(_as_mask(failed)))
        return self._intact - v if self._intact is not None else v

    def losses(self, masks) -> np.ndarray:
        masks = np.asarray(masks, dtype=np.int64)
        if self._evaluate_many is not None:
            v = np.asarray(self._evaluate_many(masks), dtype=np.float64)
        else:
            v = np.array([float(self._evaluate(int(m))) for m in masks], dtype=np.float64)
        return self._intact - v if self._intact is not None else v

    def __call__(self, failed: MaskLike) -> float:
        return self.loss(failed)

    def __repr__(self):
        return f"SetFunction(ground_size={self.ground_size}, mode={self.mode.value}, label={self.label!r})"


# ---------------------------------------------------------------------------
# strategies

@dataclass(frozen=True)
class Exact:
    """Exhaustive sweep over every failure set of each size."""

    mean_samples: int = DEFAULT_MEAN_SAMPLES

    @property
    def tag(self) -> str:
        return "EXACT"


@dataclass(frozen=True)
class Sampled:
    num_samples: int
    seed: int = 0

    def __post_init__(self):
        if self.num_samples < 1:
            raise ValueError("num_samples must be positive")

    @property
    def tag(self) -> str:
        return f"SAMPLED({self.num_samples},seed={self.seed})"


@dataclass(frozen=True)
class Annealed:
    schedule: AnnealSchedule = field(default_factory=AnnealSchedule)
    seed: int = 0

    @property
    def tag(self) -> str:
        s = self.schedule
        t = "auto" if s.initial_temp is None else repr(s.initial_temp)
        return (f"ANNEALED(temp={t},cooling={s.cooling},steps={s.steps_per_temp},"
                f"restarts={s.restarts},seed={self.seed})")


SearchStrategy = Union[Exact, Sampled, Annealed]


def reseed(strat: SearchStrategy, *path: int) -> SearchStrategy:
    """Same strategy with its seed replaced by the derived seed at ``path``."""
    if isinstance(strat, Sampled):
        return Sampled(strat.num_samples, derive_seed(strat.seed, *path))
    if isinstance(strat, Annealed):
        return Annealed(strat.schedule, derive_seed(strat.seed, *path))
    return strat


def _seed_of(strat: SearchStrategy) -> int:
    return getattr(strat, "seed", 0)


# ---------------------------------------------------------------------------
# exhaustive sweeps, vectorised over many instances at once

def _exact_extreme(values: np.ndarray, masks: np.ndarray, maximize: bool):
    """Row-wise extreme of ``values`` (instances x masks) and the smallest tied mask."""
    best = values.max(axis=1) if maximize else values.min(axis=1)
    tol = TIE_TOL * np.maximum(1.0, np.abs(best))
    near = np.abs(values - best[:, None]) <= tol[:, None]
    # masks are ascending, so the first tied column is the smallest bitmask
    return best, masks[np.argmax(near, axis=1)]


def exact_sweep(loss_columns: Callable[[np.ndarray], np.ndarray], k: int,
                aggregator: Aggregator) -> tuple[np.ndarray, np.ndarray | None]:
    """Exact alpha-synergy for a batch of instances sharing one ground set.

    ``loss_columns(masks)`` returns an ``(n_instances, len(masks))`` array of
    losses. Returns synergy ``(n, k)`` and winning masks ``(n, k)`` (``None``
    for MEAN).
    """
    aggregator = Aggregator(aggregator)
    if k > EXACT_LIMIT:
        raise InfeasibleStrategyError(
            f"exact sweep over {k} elements exceeds the {EXACT_LIMIT}-element limit; "
            "use a sampled or annealed strategy")
    syn, win = [], []
    for a in range(1, k + 1):
        masks = masks_of_size(k, a)
        vals = np.atleast_2d(loss_columns(masks))
        if aggregator is Aggregator.MEAN:
            syn.append(vals.mean(axis=1))
        else:
            v, w = _exact_extreme(vals, masks, aggregator is Aggregator.MAX)
            syn.append(v)
            win.append(w)
    n = syn[0].shape[0] if syn else 1
    syn_arr = np.stack(syn, axis=1) if syn else np.zeros((n, 0))
    win_arr = None if aggregator is Aggregator.MEAN else (
        np.stack(win, axis=1) if win else np.zeros((n, 0), dtype=np.int64))
    return syn_arr, win_arr


# ---------------------------------------------------------------------------
# public operations

def alpha_synergy(f: SetFunction, alpha: int, aggregator: Aggregator | str = Aggregator.MIN,
                  strategy: SearchStrategy | None = None,
                  workers: int = 1) -> tuple[float, SubsetMask | None]:
    """Loss summarised over all failure sets of size ``alpha``.

    Returns the value and, for MIN/MAX, the winning failure set (ties go to
    the smallest bitmask). MEAN has no winner.

    Raises
    ------
    ValueError
        If ``alpha`` is outside ``[1, f.ground_size]``.
    InfeasibleStrategyError
        For an exact MIN/MAX sweep over more than ``EXACT_LIMIT`` elements.
    """
    value, winner, _ = _alpha_synergy(f, alpha, Aggregator(aggregator), strategy or Exact(), workers)
    return value, winner


def _alpha_synergy(f, alpha, agg, strat, workers):
    k = f.ground_size
    if not 1 <= alpha <= k:
        raise ValueError(f"alpha={alpha} outside [1, {k}]")
    if alpha == k:
        # a single failure set: everything
        return f.loss(f.full_mask), (None if agg is Aggregator.MEAN
                                     else SubsetMask.full(k)), None
    if agg is Aggregator.MEAN:
        if isinstance(strat, Sampled):
            v, _ = sample_mean_loss(f, alpha, strat.num_samples, strat.seed)
            return v, None, None
        if comb(k, alpha) <= MEAN_ENUMERATION_LIMIT:
            v, _ = sample_mean_loss(f, alpha, MEAN_ENUMERATION_LIMIT, 0)
            return v, None, None
        n = strat.mean_samples if isinstance(strat, Exact) else DEFAULT_MEAN_SAMPLES
        seed = derive_seed(_seed_of(strat), alpha)
        v, _ = sample_mean_loss(f, alpha, n, seed)
        return v, None, f"alpha={alpha}: mean over {n} sampled subsets (seed {seed})"
    maximize = agg is Aggregator.MAX
    if isinstance(strat, Exact):
        if k > EXACT_LIMIT:
            raise InfeasibleStrategyError(
                f"exact sweep over {k} elements exceeds the {EXACT_LIMIT}-element limit; "
                "use a sampled or annealed strategy")
        masks = masks_of_size(k, alpha)
        v, w = _exact_extreme(f.losses(masks)[None, :], masks, maximize)
        return float(v[0]), SubsetMask.from_int(int(w[0]), k), None
    if isinstance(strat, Sampled):
        v, w = sample_min_bipartition(f, alpha, strat.num_samples, strat.seed, maximize)
        return v, w, None
    if isinstance(strat, Annealed):
        v, w = anneal_min_bipartition(f, alpha, strat.schedule, strat.seed, maximize, workers)
        return v, w, None
    raise TypeError(f"unknown strategy {strat!r}")


def backbone(f: SetFunction, aggregator: Aggregator | str = Aggregator.MIN,
             strategy: SearchStrategy | None = None, workers: int = 1) -> BackboneSpectrum:
    """Alpha-synergy for every scale 1..k and the resulting partial atoms.

    Heuristic strategies use a separate seed per scale, derived from the
    strategy seed. Decreases in the synergy series are reported in
    ``monotone_violations``, never silently repaired.
    """
    agg = Aggregator(aggregator)
    strat = strategy or Exact()
    k = f.ground_size
    if isinstance(strat, Exact) and agg is not Aggregator.MEAN and k:
        syn, win = exact_sweep(lambda ms: f.losses(ms)[None, :], k, agg)
        winners = [SubsetMask.from_int(int(m), k) for m in win[0]]
        return BackboneSpectrum.from_synergy(syn[0], agg, strat.tag, winners, label=f.label)
    syn, winners, notes = [], [], []
    for a in range(1, k + 1):
        v, w, note = _alpha_synergy(f, a, agg, reseed(strat, a), workers)
        syn.append(v)
        winners.append(w)
        if note:
            notes.append(note)
    return BackboneSpectrum.from_synergy(syn, agg, strat.tag, winners, label=f.label, notes=notes)


def robustness(f: SetFunction) -> float:
    """Total loss minus the exact MIN 1-synergy: what survives any single failure."""
    if f.ground_size < 1:
        raise ValueError("robustness needs a non-empty ground set")
    syn1, _ = alpha_synergy(f, 1, Aggregator.MIN, Exact())
    return f.loss(f.full_mask) - syn1


@dataclass(frozen=True)
class DesiderataReport:
    """Admissibility check of a set function.

    ``monotonicity`` holds ``(subset, superset)`` pairs of surviving sets,
    differing by one element, where the value decreases; any violation of
    monotonicity shows up as at least one such pair. ``nonnegativity`` holds
    the surviving sets with a negative value (for LOSS functions, the
    surviving sets whose loss is negative).
    """

    monotonicity: tuple[tuple[SubsetMask, SubsetMask], ...]
    nonnegativity: tuple[SubsetMask, ...]

    @property
    def admissible(self) -> bool:
        return not self.monotonicity and not self.nonnegativity

    def __bool__(self):
        return not self.admissible


def verify_desiderata(f: SetFunction, tol: float = MONOTONE_TOL) -> DesiderataReport:
    """Exhaustively check non-negativity and monotonicity.

    RAW_F functions are checked on ``f`` itself. LOSS functions only expose
    ``f(ground) - f(survivors)``, so their losses are checked for being
    non-negative and non-decreasing in the failure set, which is the same
    monotonicity condition.
    """
    k = f.ground_size
    if k > EXACT_LIMIT:
        raise InfeasibleStrategyError(
            f"cannot check all subsets of a {k}-element ground set (limit {EXACT_LIMIT})")
    full = f.full_mask
    failed = np.arange(1 << k, dtype=np.int64)
    surviving = full & ~failed
    # value[s] is a monotone proxy for f on the surviving set s
    value = np.empty(1 << k)
    if f.mode is Mode.RAW_F:
        raw = np.array([f.raw(int(m)) for m in failed]) if f._evaluate_many is None \
            else np.asarray(f._evaluate_many(failed), dtype=np.float64)
        value[surviving] = raw
        negative = surviving[raw < -tol]
    else:
        loss = f.losses(failed)
        value[surviving] = -loss
        negative = surviving[loss < -tol]
    neg = [SubsetMask.from_int(int(m), k) for m in np.sort(negative)]
    pairs = []
    for i in range(k):
        bit = 1 << i
        small = failed[(failed & bit) == 0]
        bad = small[value[small] > value[small | bit] + tol]
        pairs.extend((SubsetMask.from_int(int(m), k), SubsetMask.from_int(int(m | bit), k))
                     for m in bad)
    pairs.sort(key=lambda p: (p[0].mask, p[1].mask))
    return DesiderataReport(tuple(pairs), tuple(neg))
