"""Threshold-weight statistics of the attachment tree.

For a tree with j edges, F(k) is the total degree carried by vertices of
degree at least k:

    F(k) = sum over v of deg(v) * [deg(v) >= k]

so F(1) = 2j always, F is non-increasing in k, and F(k) > 0 iff some vertex
has degree >= k. The vector evolves by a simple rule when a leaf attaches to
a vertex of old degree D: F(1) += 2, F(k) += 1 for 2 <= k <= D, and
F(D+1) += D+1.

Under min-of-two size-biased candidate selection the chosen old degree D
satisfies P(D >= d) = (F(d)/2j)^2, which lets the whole vector evolve as a
standalone Markov chain driven by one uniform per step (``chain_step``):
D is the largest d with u < (F(d)/2j)^2, a nested (inverse-CDF) selection.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np


class KMaxExceededError(RuntimeError):
    """A vertex degree outgrew the tracked threshold range."""


class ThresholdVector:
    """Counts F(k) for k = 1..k_max, plus the current edge count j."""

    __slots__ = ("counts", "j", "k_max")

    def __init__(self, k_max: int = 64):
        if k_max < 1:
            raise ValueError("k_max must be >= 1")
        self.k_max = int(k_max)
        self.counts = np.zeros(self.k_max + 1, dtype=np.int64)  # counts[0] unused
        self.j = 0

    @classmethod
    def from_degrees(cls, degrees: Iterable[int], k_max: int = 64) -> "ThresholdVector":
        """Exact evaluation of the defining sum over a degree sequence."""
        deg = np.asarray(list(degrees) if not isinstance(degrees, np.ndarray) else degrees,
                         dtype=np.int64)
        total = int(deg.sum())
        if total % 2 != 0:
            raise ValueError("degree sum must be even (twice the edge count)")
        fv = cls(k_max)
        fv.j = total // 2
        small = deg[deg <= k_max]
        if small.size:
            hist = np.bincount(small)
            mass = hist * np.arange(hist.shape[0], dtype=np.int64)
            suffix = mass[::-1].cumsum()[::-1]
            upto = min(k_max, hist.shape[0] - 1)
            fv.counts[1 : upto + 1] = suffix[1 : upto + 1]
        # degrees beyond k_max sit above every tracked threshold
        excess = int(deg[deg > k_max].sum())
        if excess:
            fv.counts[1:] += excess
        return fv

    def update_on_attach(self, chosen_old_degree: int, *, saturate: bool = False) -> None:
        """Apply one attachment to a vertex whose degree was ``chosen_old_degree``.

        With ``saturate`` the update is truncated at k_max instead of raising,
        for model variants whose max degree legitimately outgrows the table.
        """
        d = int(chosen_old_degree)
        if d < 1:
            raise ValueError(f"chosen degree must be >= 1, got {d}")
        if self.counts[min(d, self.k_max)] <= 0:
            raise ValueError(f"inconsistent chosen degree {d}: no such vertex tracked")
        new_deg = d + 1
        if new_deg > self.k_max and not saturate:
            raise KMaxExceededError(
                f"degree {new_deg} exceeds tracked k_max={self.k_max}"
            )
        self.counts[1] += 2
        top = min(d, self.k_max)
        if top >= 2:
            self.counts[2 : top + 1] += 1
        if new_deg <= self.k_max:
            self.counts[new_deg] += new_deg
        self.j += 1

    def chain_step(self, u: float) -> int:
        """One step of the standalone vector chain; returns the driven degree D.

        D = max{d >= 1 : u < (F(d)/2j)^2}, evaluated as u*(2j)^2 < F(d)^2 and
        half-open so the outcome is deterministic given u.
        """
        if self.j < 1:
            raise ValueError("chain requires at least one edge (F(1) = 2j > 0)")
        tw = float(2 * self.j)
        t = u * (tw * tw)
        d = 1
        counts = self.counts
        while d + 1 <= self.k_max:
            c = float(counts[d + 1])
            if t < c * c:
                d += 1
            else:
                break
        self.update_on_attach(d)
        return d

    def empirical_alpha(self) -> list[float]:
        """F(k)/j for k = 1..k_max; converges to the alpha_k limits."""
        if self.j < 1:
            raise ValueError("empirical ratios require j >= 1")
        return [float(c) / self.j for c in self.counts[1:]]

    def max_degree(self) -> int:
        """Largest k with F(k) > 0 (the tree's max degree while tracked)."""
        nz = np.nonzero(self.counts[1:])[0]
        return int(nz[-1]) + 1 if nz.size else 0

    def as_tuple(self) -> tuple[int, ...]:
        return tuple(int(c) for c in self.counts[1:])

    def validate(self) -> None:
        """Raise if any structural invariant is broken."""
        c = self.counts
        if c[1] != 2 * self.j:
            raise AssertionError(f"F(1)={c[1]} != 2j={2 * self.j}")
        if (c[1:] < 0).any():
            raise AssertionError("negative threshold count")
        if (np.diff(c[1:]) > 0).any():
            raise AssertionError("F must be non-increasing in k")

    def copy(self) -> "ThresholdVector":
        fv = ThresholdVector(self.k_max)
        fv.counts[:] = self.counts
        fv.j = self.j
        return fv


def compute_from_degrees(state, k_max: int = 64) -> ThresholdVector:
    """ThresholdVector of a tree state (anything exposing ``degrees``)."""
    degrees = state.degrees if hasattr(state, "degrees") else state
    return ThresholdVector.from_degrees(degrees, k_max)


def decay_trace(history: Sequence[tuple[int, int]]) -> float:
    """Least-squares slope of log(F_j(k)/2j) against log j.

    ``history`` holds (j, F_j(k)) pairs for one fixed k. Points with
    F = 0 carry no information for the fit and are dropped. Exploratory
    diagnostic only.
    """
    pts = [(j, f) for j, f in history if f > 0 and j > 0]
    if len(pts) < 3:
        raise ValueError("decay_trace needs at least 3 usable (j, F) points")
    x = np.array([math.log(j) for j, _ in pts])
    y = np.array([math.log(f / (2.0 * j)) for j, f in pts])
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)
