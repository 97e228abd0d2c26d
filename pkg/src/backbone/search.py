"""Heuristic search for the extremal size-alpha failure set, plus monotonicity diagnostics.

Exhaustive sweeps touch every subset of the ground set, which stops being
practical somewhere past twenty elements. The two searches here trade
exactness for reach: uniform random sampling of failure sets and simulated
annealing over them. Both can only miss the optimum in one direction (a MIN
search never reports a value below the true minimum), and a miss at one
scale can make the synergy series dip, which :func:`monotonicity_check`
detects and :func:`enforce_monotone` optionally repairs.

Every random draw comes from a ``numpy.random.SeedSequence`` keyed on the
caller's seed plus a fixed path (restart number, scale, state index), so a
result depends only on its inputs, never on how work is split across threads.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from math import comb, exp, isfinite
from typing import TYPE_CHECKING

import numpy as np

from .spectrum import MONOTONE_TOL, BackboneSpectrum, find_violations, partial_atoms
from .subsets import MAX_BATCH_GROUND, SubsetMask, masks_of_size

if TYPE_CHECKING:
    from .engine import SetFunction

__all__ = [
    "AnnealSchedule",
    "ViolationReport",
    "derive_seed",
    "sample_min_bipartition",
    "anneal_min_bipartition",
    "default_initial_temp",
    "monotonicity_check",
    "enforce_monotone",
    "running_max",
    "WITHOUT_REPLACEMENT_BUDGET",
]

# Above this many draws, sample with replacement instead of tracking uniqueness.
WITHOUT_REPLACEMENT_BUDGET = 2 ** 20
# Annealing stops once the temperature falls below this fraction of the start.
FINAL_TEMP_RATIO = 1e-3
# Number of random failure sets used to scale the default start temperature.
TEMP_PROBE_SIZE = 32
# Values closer than this are treated as tied; ties go to the smaller bitmask.
TIE_TOL = 1e-12


def derive_seed(seed: int, *path: int) -> int:
    """64-bit seed for the sub-task at ``path`` beneath ``seed``."""
    ss = np.random.SeedSequence(int(seed) % 2 ** 64, spawn_key=tuple(int(p) for p in path))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(hi) << 32 | int(lo)


def _rng(seed: int, *path: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(int(seed) % 2 ** 64, spawn_key=tuple(int(p) for p in path)))


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric cooling schedule.

    ``initial_temp=None`` picks the start temperature from the data (see
    :func:`default_initial_temp`).
    """

    initial_temp: float | None = None
    cooling: float = 0.95
    steps_per_temp: int = 50
    restarts: int = 4

    def __post_init__(self):
        if self.initial_temp is not None and not (self.initial_temp > 0 and isfinite(self.initial_temp)):
            raise ValueError("initial_temp must be a positive finite number")
        if not 0 < self.cooling < 1:
            raise ValueError("cooling must lie strictly inside (0, 1)")
        if self.steps_per_temp < 0:
            raise ValueError("steps_per_temp must be non-negative")
        if self.restarts < 1:
            raise ValueError("restarts must be positive")


# ---------------------------------------------------------------------------
# random failure sets

def _random_masks(rng: np.random.Generator, k: int, alpha: int, n: int) -> np.ndarray:
    """``n`` independent uniform size-``alpha`` subsets as int64 masks."""
    if alpha == 0:
        return np.zeros(n, dtype=np.int64)
    keys = rng.random((n, k))
    picks = np.argpartition(keys, alpha - 1, axis=1)[:, :alpha]
    return np.bitwise_or.reduce(np.left_shift(np.int64(1), picks.astype(np.int64)), axis=1)


def _random_mask_int(rng: np.random.Generator, k: int, alpha: int) -> int:
    m = 0
    for i in rng.choice(k, size=alpha, replace=False):
        m |= 1 << int(i)
    return m


def _all_masks(k: int, alpha: int) -> np.ndarray:
    if k <= 26:
        return masks_of_size(k, alpha)
    from itertools import combinations
    return np.array([sum(1 << i for i in c) for c in combinations(range(k), alpha)],
                    dtype=np.int64)


def _draw_masks(rng: np.random.Generator, k: int, alpha: int, num_samples: int) -> tuple[np.ndarray, bool]:
    """Candidate failure sets; second value is True when they cover every subset."""
    total = comb(k, alpha)
    if total <= num_samples:
        return _all_masks(k, alpha), True
    if k > MAX_BATCH_GROUND:
        raise ValueError(f"ground set of {k} elements exceeds the {MAX_BATCH_GROUND}-element batch limit")
    if num_samples > WITHOUT_REPLACEMENT_BUDGET:
        return _random_masks(rng, k, alpha, num_samples), False
    seen = np.empty(0, dtype=np.int64)
    while seen.size < num_samples:
        need = num_samples - seen.size
        fresh = _random_masks(rng, k, alpha, need + need // 4 + 8)
        # keep first occurrences in draw order so the result is a fixed function of the seed
        merged = np.concatenate([seen, fresh])
        _, first = np.unique(merged, return_index=True)
        seen = merged[np.sort(first)][:num_samples]
    return seen, False


def _pick(values: np.ndarray, masks: np.ndarray, maximize: bool) -> tuple[float, int]:
    target = float(values.max() if maximize else values.min())
    near = np.abs(values - target) <= TIE_TOL * max(1.0, abs(target))
    return target, int(masks[near].min())


def sample_min_bipartition(f: "SetFunction", alpha: int, num_samples: int, seed: int,
                           maximize: bool = False) -> tuple[float, SubsetMask]:
    """Best loss over randomly drawn size-``alpha`` failure sets.

    Draws are distinct as long as ``num_samples`` stays within
    ``WITHOUT_REPLACEMENT_BUDGET``. When ``comb(k, alpha) <= num_samples``
    the sweep is exhaustive and the result equals the exact optimum.
    """
    k = f.ground_size
    if not 1 <= alpha <= k:
        raise ValueError(f"alpha={alpha} outside [1, {k}]")
    if num_samples < 1:
        raise ValueError("num_samples must be positive")
    masks, _ = _draw_masks(_rng(seed), k, alpha, num_samples)
    values = f.losses(masks)
    value, winner = _pick(values, masks, maximize)
    return value, SubsetMask.from_int(winner, k)


def sample_mean_loss(f: "SetFunction", alpha: int, num_samples: int, seed: int) -> tuple[float, bool]:
    """Unbiased mean loss over size-``alpha`` failure sets (exhaustive when small)."""
    k = f.ground_size
    total = comb(k, alpha)
    if total <= num_samples:
        return float(np.mean(f.losses(_all_masks(k, alpha)))), True
    masks = _random_masks(_rng(seed), k, alpha, num_samples)
    return float(np.mean(f.losses(masks))), False


# ---------------------------------------------------------------------------
# simulated annealing

def default_initial_temp(f: "SetFunction", alpha: int, seed: int) -> float:
    """Sample standard deviation of the loss over a few random failure sets.

    Falls back to a vanishing temperature (pure descent) when the probe sees
    no spread.
    """
    k = f.ground_size
    rng = _rng(seed, 0)
    if k <= MAX_BATCH_GROUND:
        vals = f.losses(_random_masks(rng, k, alpha, TEMP_PROBE_SIZE))
    else:
        vals = np.array([f.loss(_random_mask_int(rng, k, alpha)) for _ in range(TEMP_PROBE_SIZE)])
    sd = float(np.std(vals, ddof=1))
    return sd if sd > 0 and isfinite(sd) else 1e-12


def _anneal_chain(loss, k: int, alpha: int, sched: AnnealSchedule, t0: float,
                  rng: np.random.Generator, sign: float) -> tuple[float, int]:
    failed = [int(i) for i in np.sort(rng.choice(k, size=alpha, replace=False))]
    in_failed = set(failed)
    surv = [i for i in range(k) if i not in in_failed]
    mask = 0
    for i in failed:
        mask |= 1 << i
    cur = sign * loss(mask)
    best, best_mask = cur, mask
    if alpha in (0, k) or sched.steps_per_temp == 0:
        return best, best_mask
    n_in, n_out, steps = alpha, k - alpha, sched.steps_per_temp
    temp, t_stop = t0, t0 * FINAL_TEMP_RATIO
    while temp >= t_stop:
        ii = rng.integers(0, n_in, steps)
        jj = rng.integers(0, n_out, steps)
        uu = rng.random(steps)
        accepted = 0
        for s in range(steps):
            i, j = int(ii[s]), int(jj[s])
            a, b = failed[i], surv[j]
            new = mask ^ (1 << a) ^ (1 << b)
            val = sign * loss(new)
            delta = val - cur
            if delta <= 0 or uu[s] < exp(-delta / temp):
                failed[i], surv[j] = b, a
                mask, cur = new, val
                accepted += 1
                if val < best or (val == best and new < best_mask):
                    best, best_mask = val, new
        if accepted == 0:
            break
        temp *= sched.cooling
    return best, best_mask


def anneal_min_bipartition(f: "SetFunction", alpha: int, sched: AnnealSchedule | None = None,
                           seed: int = 0, maximize: bool = False,
                           workers: int = 1) -> tuple[float, SubsetMask]:
    """Simulated annealing over size-``alpha`` failure sets.

    A move swaps one failed element with one surviving element, so the
    subset size never changes. Moves are accepted by the Metropolis rule and
    the best failure set seen over all restarts is returned. Each restart
    draws from its own seed-derived stream; ``workers`` only changes how many
    restarts run at once.
    """
    sched = sched or AnnealSchedule()
    k = f.ground_size
    if not 1 <= alpha <= k:
        raise ValueError(f"alpha={alpha} outside [1, {k}]")
    sign = -1.0 if maximize else 1.0
    t0 = sched.initial_temp if sched.initial_temp is not None else default_initial_temp(f, alpha, seed)

    cache: dict[int, float] = {}

    def loss(m: int) -> float:
        v = cache.get(m)
        if v is None:
            v = cache[m] = f.loss(m)
        return v

    def run(r: int):
        return _anneal_chain(loss, k, alpha, sched, t0, _rng(seed, 1, r), sign)

    if workers > 1 and sched.restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(run, range(sched.restarts)))
    else:
        results = [run(r) for r in range(sched.restarts)]
    best, best_mask = results[0]
    for val, m in results[1:]:
        if val < best or (val == best and m < best_mask):
            best, best_mask = val, m
    return sign * best, SubsetMask.from_int(best_mask, k)


# ---------------------------------------------------------------------------
# monotonicity diagnostics

@dataclass(frozen=True)
class ViolationReport:
    """Scales whose synergy fell below the previous scale.

    Each entry of ``violations`` is a dict with keys ``alpha``, ``value`` and
    ``previous``.
    """

    violations: tuple[dict, ...]
    repaired: tuple[float, ...] | None = None

    def __bool__(self):
        return bool(self.violations)

    def __len__(self):
        return len(self.violations)


def monotonicity_check(spectrum: BackboneSpectrum | np.ndarray, tol: float = MONOTONE_TOL) -> ViolationReport:
    """Flag every scale whose synergy is below the previous scale's by more than ``tol``.

    Checks the series as it currently stands, so a repaired spectrum passes.
    """
    syn = spectrum.alpha_synergy if isinstance(spectrum, BackboneSpectrum) else np.asarray(spectrum, float)
    padded = np.concatenate([[0.0], syn])
    return ViolationReport(tuple(
        {"alpha": a, "value": float(padded[a]), "previous": float(padded[a - 1])}
        for a in find_violations(syn, tol)))


def running_max(alpha_synergy) -> np.ndarray:
    """Running maximum of a synergy series (or of each row of a 2-D array), seeded with 0."""
    syn = np.asarray(alpha_synergy, dtype=np.float64)
    pad = np.zeros(syn.shape[:-1] + (1,))
    return np.maximum.accumulate(np.concatenate([pad, syn], axis=-1), axis=-1)[..., 1:]


def enforce_monotone(spectrum: BackboneSpectrum) -> BackboneSpectrum:
    """Replace the synergy series by its running maximum and recompute the atoms.

    The values as computed are kept on ``raw_alpha_synergy`` and the scales
    that dipped stay listed in ``monotone_violations``. Already-monotone
    input comes back with unchanged values.
    """
    raw = spectrum.raw_alpha_synergy if spectrum.repaired else spectrum.alpha_synergy
    fixed = running_max(spectrum.alpha_synergy)
    violations = sorted(set(spectrum.monotone_violations) | set(find_violations(raw)))
    return replace(spectrum, alpha_synergy=fixed,
                   partial_atoms=partial_atoms(fixed) if len(fixed) else fixed,
                   monotone_violations=tuple(violations), raw_alpha_synergy=np.array(raw))
