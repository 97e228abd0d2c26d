"""The backbone spectrum: per-scale synergy values and their partial atoms."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .subsets import SubsetMask

__all__ = [
    "Aggregator",
    "BackboneSpectrum",
    "partial_atoms",
    "find_violations",
    "MONOTONE_TOL",
]

MONOTONE_TOL = 1e-9


class Aggregator(str, Enum):
    """How losses over all size-alpha failure sets are summarised."""

    MIN = "min"
    MAX = "max"
    MEAN = "mean"


def partial_atoms(alpha_synergy: Sequence[float]) -> np.ndarray:
    """Partial atoms from a synergy series by telescoping differences.

    ``atom[a] = syn[a] - sum(atom[b] for b < a)``, with the zero-failure
    synergy taken as 0.

    >>> partial_atoms([1.0, 1.0, 1.0]).tolist()
    [1.0, 0.0, 0.0]
    """
    syn = np.asarray(alpha_synergy, dtype=np.float64)
    if syn.ndim < 1 or syn.shape[-1] == 0:
        raise ValueError("need at least one synergy value")
    return np.diff(syn, axis=-1, prepend=0.0)


def find_violations(alpha_synergy: Sequence[float], tol: float = MONOTONE_TOL) -> list[int]:
    """1-based scales where the synergy drops below its predecessor by more than ``tol``."""
    syn = np.concatenate([[0.0], np.asarray(alpha_synergy, dtype=np.float64)])
    return [a for a in range(1, len(syn)) if syn[a] < syn[a - 1] - tol]


@dataclass(frozen=True, eq=False)
class BackboneSpectrum:
    """Synergy values for alpha = 1..k, partial atoms, and winning failure sets.

    ``winning_subsets[a-1]`` is the failure set that attained the alpha-synergy
    (``None`` for the MEAN aggregator and for expected spectra, which average
    over many local winners). ``monotone_violations`` lists the scales where
    the series as computed dipped; for an expected spectrum that is any scale
    where some local spectrum dipped. After
    :func:`backbone.search.enforce_monotone`, ``raw_alpha_synergy`` keeps the
    values as computed.
    """

    alpha_synergy: np.ndarray
    partial_atoms: np.ndarray
    winning_subsets: tuple[SubsetMask | None, ...]
    aggregator: Aggregator
    strategy: str
    monotone_violations: tuple[int, ...] = ()
    raw_alpha_synergy: np.ndarray | None = None
    label: str = ""
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        for name in ("alpha_synergy", "partial_atoms", "raw_alpha_synergy"):
            v = getattr(self, name)
            if v is not None:
                v = np.array(v, dtype=np.float64)
                v.setflags(write=False)
                object.__setattr__(self, name, v)

    @classmethod
    def from_synergy(cls, alpha_synergy, aggregator, strategy, winners=None,
                     label="", notes=()) -> "BackboneSpectrum":
        syn = np.asarray(alpha_synergy, dtype=np.float64)
        if winners is None:
            winners = (None,) * len(syn)
        return cls(syn, partial_atoms(syn) if len(syn) else syn.copy(), tuple(winners),
                   Aggregator(aggregator), strategy, tuple(find_violations(syn)),
                   label=label, notes=tuple(notes))

    @property
    def ground_size(self) -> int:
        return len(self.alpha_synergy)

    @property
    def total(self) -> float:
        """The decomposed quantity, ``syn[k]`` (sum of the atoms)."""
        return float(self.alpha_synergy[-1]) if len(self.alpha_synergy) else 0.0

    @property
    def repaired(self) -> bool:
        return self.raw_alpha_synergy is not None

    def display_atoms(self, tol: float = 1e-9) -> np.ndarray:
        """Atoms with near-zero noise (|atom| <= tol) clamped to exactly 0."""
        a = self.partial_atoms.copy()
        a[np.abs(a) <= tol] = 0.0
        return a

    def with_label(self, label: str) -> "BackboneSpectrum":
        return replace(self, label=label)

    def to_records(self) -> list[dict]:
        viol = set(self.monotone_violations)
        return [
            {
                "alpha": a + 1,
                "synergy": float(self.alpha_synergy[a]),
                "partial": float(self.partial_atoms[a]),
                "winner": None if w is None else w.indices(),
                "violation": (a + 1) in viol,
            }
            for a, w in enumerate(self.winning_subsets)
        ]

    def __str__(self):
        rows = [f"{'alpha':>5} {'synergy':>14} {'partial':>14}"]
        for a, (s, p) in enumerate(zip(self.alpha_synergy, self.display_atoms()), 1):
            rows.append(f"{a:>5} {s:>14.9g} {p:>14.9g}")
        return "\n".join(rows)
