"""Finite discrete joint distributions and exact local entropy primitives.

A :class:`JointDistribution` stores only its support: an ``(n, k)`` integer
array of states and the matching probabilities. Everything else (marginals,
local entropies, conditional entropies) is derived from those two arrays, so
the same code serves a three-variable logic gate and a sparse 30-variable
system alike.

Discrete quantities are reported in bits unless ``base`` says otherwise. The
Gaussian path works in nats.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import log, prod
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError
from .subsets import SubsetMask, indices_from_mask

__all__ = [
    "JointDistribution",
    "GaussianModel",
    "marginalize",
    "local_entropy",
    "local_conditional_entropy",
    "expected_entropy",
    "gaussian_local_entropy",
    "NORMALIZATION_TOL",
]

NORMALIZATION_TOL = 1e-9

# Largest product of alphabet sizes that can be packed into an int64 code.
_MAX_CODE = 2 ** 62


def _keep_indices(keep, k: int) -> list[int]:
    if isinstance(keep, SubsetMask):
        if keep.ground_size != k:
            raise ValueError(
                f"mask over {keep.ground_size} elements used on {k} variables")
        return keep.indices()
    if isinstance(keep, (int, np.integer)):
        idx = indices_from_mask(int(keep))
    else:
        idx = sorted({int(i) for i in keep})
    if idx and (idx[0] < 0 or idx[-1] >= k):
        raise ValueError(f"variable index out of range for k={k}")
    return idx


def _encode(states: np.ndarray, sizes: Sequence[int]) -> np.ndarray | None:
    """Mixed-radix integer code for each row; ``None`` if it would overflow."""
    if prod(sizes) >= _MAX_CODE:
        return None
    code = np.zeros(states.shape[0], dtype=np.int64)
    for col, size in enumerate(sizes):
        code = code * int(size) + states[:, col]
    return code


class JointDistribution:
    """Probability mass function over ``k`` finite-alphabet variables.

    Parameters
    ----------
    states : array_like, shape (n, k)
        Support states. Duplicates are merged; zero-probability rows dropped.
    probs : array_like, shape (n,)
        Probabilities of ``states``. Must sum to one within ``1e-9``.
    alphabet_sizes : sequence of int, optional
        Alphabet size of each variable. Inferred as ``max symbol + 1`` when
        omitted.
    variable_names : sequence of str, optional
        Defaults to ``X0, X1, ...``.

    Instances are immutable.
    """

    def __init__(self, states, probs, alphabet_sizes=None, variable_names=None):
        states = np.asarray(states, dtype=np.int64)
        probs = np.asarray(probs, dtype=np.float64)
        if states.ndim == 1:
            states = states.reshape(-1, 1) if states.size else states.reshape(0, 0)
        if states.ndim != 2 or states.shape[0] != probs.shape[0]:
            raise ValueError("states must be (n, k) with one probability per row")
        k = states.shape[1]
        if alphabet_sizes is None:
            alphabet_sizes = (states.max(axis=0) + 1).tolist() if states.size else [1] * k
        alphabet_sizes = tuple(int(a) for a in alphabet_sizes)
        if len(alphabet_sizes) != k:
            raise ValueError(f"{len(alphabet_sizes)} alphabet sizes for {k} variables")
        if any(a < 1 for a in alphabet_sizes):
            raise ValueError("alphabet sizes must be positive")
        if variable_names is None:
            variable_names = [f"X{i}" for i in range(k)]
        variable_names = tuple(str(v) for v in variable_names)
        if len(variable_names) != k:
            raise ValueError(f"{len(variable_names)} names for {k} variables")

        if not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be finite")
        if np.any(probs < 0):
            raise ValueError("probabilities must be non-negative")
        if states.size and (np.any(states < 0)
                            or np.any(states >= np.array(alphabet_sizes))):
            raise ValueError("state symbol outside its alphabet")
        total = float(probs.sum())
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")

        keep = probs > 0
        states, probs = states[keep], probs[keep]
        if k == 0:
            states = np.zeros((1, 0), dtype=np.int64)
            probs = np.array([1.0])
        else:
            # canonical order + merge duplicates
            uniq, inv = np.unique(states, axis=0, return_inverse=True)
            probs = np.bincount(inv.ravel(), weights=probs, minlength=len(uniq))
            states = uniq
        states.setflags(write=False)
        probs.setflags(write=False)
        self._states = states
        self._probs = probs
        self._sizes = alphabet_sizes
        self._names = variable_names
        codes = _encode(states, alphabet_sizes)
        self._codes = codes
        self._index = None if codes is not None else {
            tuple(row): i for i, row in enumerate(states.tolist())}

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_pmf(cls, pmf: Mapping[Sequence[int], float], alphabet_sizes=None,
                 variable_names=None) -> "JointDistribution":
        items = list(pmf.items())
        if not items:
            raise ValueError("empty pmf")
        states = np.array([list(s) for s, _ in items], dtype=np.int64)
        probs = np.array([p for _, p in items], dtype=np.float64)
        return cls(states, probs, alphabet_sizes, variable_names)

    @classmethod
    def from_dense(cls, table, variable_names=None) -> "JointDistribution":
        table = np.asarray(table, dtype=np.float64)
        states = np.argwhere(table > 0)
        return cls(states, table[tuple(states.T)], table.shape, variable_names)

    @classmethod
    def uniform(cls, alphabet_sizes: Sequence[int], variable_names=None) -> "JointDistribution":
        sizes = tuple(int(a) for a in alphabet_sizes)
        n = prod(sizes)
        states = np.array(np.unravel_index(np.arange(n), sizes)).T.reshape(n, len(sizes))
        return cls(states, np.full(n, 1.0 / n), sizes, variable_names)

    # -- accessors --------------------------------------------------------
    @property
    def k(self) -> int:
        return self._states.shape[1]

    @property
    def alphabet_sizes(self) -> tuple[int, ...]:
        return self._sizes

    @property
    def variable_names(self) -> tuple[str, ...]:
        return self._names

    @property
    def states(self) -> np.ndarray:
        """Support states, lexicographically sorted, shape ``(n, k)``."""
        return self._states

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def support_size(self) -> int:
        return len(self._probs)

    def pmf(self) -> dict[tuple[int, ...], float]:
        return {tuple(s): float(p) for s, p in zip(self._states.tolist(), self._probs)}

    def to_dense(self) -> np.ndarray:
        table = np.zeros(self._sizes)
        table[tuple(self._states.T)] = self._probs
        return table

    def _check_state(self, state) -> np.ndarray:
        s = np.asarray(state, dtype=np.int64).reshape(-1)
        if s.shape[0] != self.k:
            raise ValueError(f"state has length {s.shape[0]}, expected {self.k}")
        return s

    def state_index(self, state) -> int | None:
        """Row of ``state`` in :attr:`states`, or ``None`` if off-support."""
        s = self._check_state(state)
        if np.any(s < 0) or np.any(s >= np.array(self._sizes, dtype=np.int64)):
            return None
        if self._codes is not None:
            c = _encode(s[None, :], self._sizes)[0]
            i = int(np.searchsorted(self._codes, c))
            return i if i < len(self._codes) and self._codes[i] == c else None
        return self._index.get(tuple(s.tolist()))

    def prob(self, state) -> float:
        i = self.state_index(state)
        return 0.0 if i is None else float(self._probs[i])

    # -- marginals --------------------------------------------------------
    def marginalize(self, keep) -> "JointDistribution":
        idx = _keep_indices(keep, self.k)
        if len(idx) == self.k:
            return self
        sub = self._states[:, idx]
        return JointDistribution(
            sub, self._probs,
            [self._sizes[i] for i in idx], [self._names[i] for i in idx])

    def marginal_probs_at(self, keep, states=None) -> np.ndarray:
        """Marginal probability ``P(x_S)`` of the kept coordinates of each query state.

        ``states`` defaults to this distribution's own support, which is the
        common case during a sweep. Query states off the marginal support get 0.
        """
        idx = _keep_indices(keep, self.k)
        query = self._states if states is None else np.asarray(states, dtype=np.int64)
        if query.ndim != 2 or query.shape[1] != self.k:
            raise ValueError("query states must have shape (m, k)")
        if not idx:
            return np.ones(query.shape[0])
        if len(idx) == self.k and states is None:
            return self._probs.copy()
        sizes = [self._sizes[i] for i in idx]
        own = _encode(self._states[:, idx], sizes)
        if own is not None:
            uniq, inv = np.unique(own, return_inverse=True)
            sums = np.bincount(inv, weights=self._probs, minlength=len(uniq))
            if states is None:
                return sums[inv]
            q = query[:, idx]
            inside = np.all((q >= 0) & (q < np.array(sizes)), axis=1)
            qc = _encode(np.where(inside[:, None], q, 0), sizes)
            pos = np.clip(np.searchsorted(uniq, qc), 0, len(uniq) - 1)
            hit = inside & (uniq[pos] == qc)
            return np.where(hit, sums[pos], 0.0)
        # alphabet product too large for int64 codes
        table: dict[tuple, float] = {}
        for row, p in zip(self._states[:, idx].tolist(), self._probs):
            key = tuple(row)
            table[key] = table.get(key, 0.0) + p
        return np.array([table.get(tuple(r), 0.0) for r in query[:, idx].tolist()])

    def product_of_marginals(self) -> "JointDistribution":
        """Independent joint distribution with the same first-order marginals."""
        marg = [self.marginalize([i]) for i in range(self.k)]
        grids = np.meshgrid(*[np.arange(len(m.probs)) for m in marg], indexing="ij")
        picks = [g.ravel() for g in grids]
        states = np.stack([m.states[p, 0] for m, p in zip(marg, picks)], axis=1)
        probs = np.ones(states.shape[0])
        for m, p in zip(marg, picks):
            probs = probs * m.probs[p]
        probs = probs / probs.sum()
        return JointDistribution(states, probs, self._sizes, self._names)

    def condition(self, index: int, value: int) -> "JointDistribution":
        """Distribution of the other variables given ``X_index = value``."""
        rows = self._states[:, index] == value
        mass = float(self._probs[rows].sum())
        if mass <= 0:
            raise DomainError(f"cannot condition on zero-probability event "
                              f"{self._names[index]}={value}")
        others = [i for i in range(self.k) if i != index]
        return JointDistribution(
            self._states[rows][:, others], self._probs[rows] / mass,
            [self._sizes[i] for i in others], [self._names[i] for i in others])

    def __eq__(self, other):
        if not isinstance(other, JointDistribution):
            return NotImplemented
        return (self._sizes == other._sizes
                and self._states.shape == other._states.shape
                and np.array_equal(self._states, other._states)
                and np.allclose(self._probs, other._probs, rtol=0, atol=1e-12))

    __hash__ = None

    def __repr__(self):
        return (f"JointDistribution(k={self.k}, alphabet_sizes={self._sizes}, "
                f"support_size={self.support_size})")


def marginalize(dist: JointDistribution, keep) -> JointDistribution:
    """Marginal distribution over the variables in ``keep``.

    An empty ``keep`` gives the trivial distribution on the empty tuple.
    """
    return dist.marginalize(keep)


def _log(p, base):
    return np.log(p) / log(base)


def local_entropy(dist: JointDistribution, state, base: float = 2) -> float:
    """Surprisal ``-log P(state)``.

    Raises
    ------
    DomainError
        If ``state`` has probability zero.
    """
    p = dist.prob(state)
    if p <= 0:
        raise DomainError(f"state outside support: {tuple(np.ravel(state).tolist())}")
    return float(-_log(p, base)) + 0.0


def local_conditional_entropy(dist: JointDistribution, state, failed,
                              base: float = 2) -> float:
    """Surprisal of the failed coordinates given the surviving ones.

    Equal to ``h(x) - h(x_surviving)``; never negative.
    """
    s = dist._check_state(state)
    failed_idx = _keep_indices(failed, dist.k)
    p = dist.prob(s)
    if p <= 0:
        raise DomainError(f"state outside support: {tuple(s.tolist())}")
    survivors = [i for i in range(dist.k) if i not in set(failed_idx)]
    p_surv = float(dist.marginal_probs_at(survivors, s[None, :])[0])
    return max(float(_log(p_surv, base) - _log(p, base)), 0.0)


def expected_entropy(dist: JointDistribution, base: float = 2) -> float:
    """Shannon entropy of the joint distribution."""
    p = dist.probs
    return float(-np.sum(p * _log(p, base))) + 0.0


@dataclass(frozen=True)
class GaussianModel:
    """Multivariate normal with mean vector and positive-definite covariance."""

    mean: np.ndarray
    covariance: np.ndarray
    _chol: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        cov = np.asarray(self.covariance, dtype=np.float64)
        if cov.size == 0:
            cov = cov.reshape(0, 0)
        if cov.shape != (mean.size, mean.size):
            raise DomainError(f"covariance shape {cov.shape} does not match mean of length {mean.size}")
        if not np.all(np.isfinite(cov)) or not np.all(np.isfinite(mean)):
            raise DomainError("non-finite mean or covariance")
        if np.max(np.abs(cov - cov.T), initial=0.0) > 1e-12:
            raise DomainError("covariance is not symmetric")
        try:
            chol = np.linalg.cholesky(cov) if mean.size else cov
        except np.linalg.LinAlgError:
            raise DomainError("covariance is not positive definite") from None
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)
        object.__setattr__(self, "_chol", chol)

    @property
    def dim(self) -> int:
        return self.mean.size

    def marginal(self, keep) -> "GaussianModel":
        idx = _keep_indices(keep, self.dim)
        return GaussianModel(self.mean[idx], self.covariance[np.ix_(idx, idx)])

    def log_density(self, point) -> float:
        x = np.asarray(point, dtype=np.float64).reshape(1, -1)
        return float(self.log_density_many(x)[0])

    def log_density_many(self, points) -> np.ndarray:
        """Natural-log density at each row of ``points``."""
        x = np.asarray(points, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ValueError(f"points must have shape (m, {self.dim})")
        if self.dim == 0:
            return np.zeros(x.shape[0])
        z = np.linalg.solve(self._chol, (x - self.mean).T)
        logdet = 2.0 * np.sum(np.log(np.diag(self._chol)))
        return -0.5 * np.sum(z * z, axis=0) - 0.5 * (self.dim * log(2 * np.pi) + logdet)


def gaussian_local_entropy(model: GaussianModel, point, base: float = np.e) -> float:
    """Local differential entropy ``-log N(point; mean, cov)``, in nats by default.

    Can be negative when the density exceeds one.
    """
    return -model.log_density(point) / log(base)
