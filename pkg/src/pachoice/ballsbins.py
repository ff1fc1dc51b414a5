"""Two-choice balls-and-bins and its monotone coupling to the tree process.

Balls are placed sequentially; each placement picks two bins independently
and uniformly and the less-loaded one (fair coin on ties) receives the ball.
N(k) counts bins holding at least k balls, so the load of the chosen bin
satisfies P(load >= l) = (N(l)/n)^2 — the same nested structure as the tree's
threshold weights, where P(chosen degree >= d) = (F(d)/2j)^2.

``coupled_run`` drives both chains with one shared uniform per step through
inverse-CDF level selection. Because the selection thresholds are nested and
2j <= n throughout, domination N_j(k) <= F_j(k) is preserved step by step;
the run asserts it after every step, so the domination holds as a checked
runtime certificate rather than an abstract argument.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .fstats import KMaxExceededError, ThresholdVector
from .rng import RandomSource, pick_index

#: int64 squares and exact float64 comparison both need (2m)^2 < 2^53
MAX_COUPLED_EDGES = 1 << 26


class DominationError(RuntimeError):
    """The coupled run observed N_j(k) > F_j(k): an implementation bug."""

    def __init__(self, j: int, k: int, levels, f_counts):
        self.j = int(j)
        self.k = int(k)
        self.levels = tuple(int(x) for x in levels)
        self.f_counts = tuple(int(x) for x in f_counts)
        super().__init__(
            f"domination violated at j={j}, k={k}: "
            f"N={self.levels[1:]} F={self.f_counts[1:]}"
        )


class BinsState:
    """n bins, their loads, and the level counts N(k)."""

    __slots__ = ("n", "loads", "levels", "j")

    def __init__(self, n: int, k_max: int = 64):
        if n < 1:
            raise ValueError("need at least one bin")
        self.n = int(n)
        self.loads = np.zeros(self.n, dtype=np.int32)
        self.levels = np.zeros(k_max + 1, dtype=np.int64)
        self.levels[0] = self.n
        self.j = 0

    def place(self, rng: RandomSource) -> int:
        """Place one ball by the two-choice rule; returns the chosen bin."""
        b1 = pick_index(rng.uniform(), self.n)
        b2 = pick_index(rng.uniform(), self.n)
        l1 = int(self.loads[b1])
        l2 = int(self.loads[b2])
        if l1 < l2:
            w = b1
        elif l2 < l1:
            w = b2
        else:
            w = b1 if pick_index(rng.uniform(), 2) == 0 else b2
        new = int(self.loads[w]) + 1
        if new >= self.levels.shape[0]:
            raise KMaxExceededError(f"bin load {new} outgrew the level table")
        self.loads[w] = new
        self.levels[new] += 1
        self.j += 1
        return w

    def run(self, balls_target: int, rng: RandomSource,
            use_kernel: bool | None = None) -> "BinsState":
        """Place balls until ``j == balls_target`` (same stream as ``place``)."""
        if balls_target < self.j:
            raise ValueError("cannot un-place balls")
        if use_kernel is None:
            use_kernel = _kernels.HAVE_NUMBA
        if not use_kernel:
            while self.j < balls_target:
                self.place(rng)
            return self
        while True:
            remaining = balls_target - self.j
            rng.ensure(min(max(3 * remaining + 8, 4096), 1 << 21))
            j, upos, status = _kernels.place_balls(
                self.loads, self.levels, self.n, self.j, balls_target,
                rng.buffer, rng.position,
            )
            self.j = j
            rng.commit(upos)
            if status == _kernels.REFILL:
                continue
            if status == _kernels.DONE:
                return self
            raise KMaxExceededError("bin load outgrew the level table")

    def max_load(self) -> int:
        nz = np.nonzero(self.levels[1:])[0]
        return int(nz[-1]) + 1 if nz.size else 0

    def recompute_levels(self) -> np.ndarray:
        """N(k) recomputed from raw loads (consistency oracle)."""
        k_cap = self.levels.shape[0]
        out = np.zeros(k_cap, dtype=np.int64)
        hist = np.bincount(self.loads, minlength=1)
        tail = hist[::-1].cumsum()[::-1]
        upto = min(k_cap - 1, hist.shape[0] - 1)
        out[: upto + 1] = tail[: upto + 1]
        out[0] = self.n
        return out

    def copy(self) -> "BinsState":
        c = object.__new__(BinsState)
        c.n = self.n
        c.loads = self.loads.copy()
        c.levels = self.levels.copy()
        c.j = self.j
        return c


def level_chain_step(levels: np.ndarray, n: int, u: float) -> int:
    """One step of the level-count chain: the projection of a two-choice
    placement onto N. Picks L = max{l >= 0 : u < (N(l)/n)^2} and increments
    N(L+1). Returns L."""
    k_max = levels.shape[0] - 1
    tn = float(n)
    t = u * (tn * tn)
    lev = 0
    while lev + 1 <= k_max:
        c = float(levels[lev + 1])
        if t < c * c:
            lev += 1
        else:
            break
    if lev + 1 > k_max:
        raise KMaxExceededError(f"level {lev + 1} outgrew the level table")
    levels[lev + 1] += 1
    return lev


@dataclass(frozen=True)
class CouplingReport:
    m: int
    n: int
    seed: int
    k_max: int
    steps: int
    violations: int
    bins_max_level: int
    tree_max_degree: int

    def as_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "seed": self.seed,
            "k_max": self.k_max,
            "steps": self.steps,
            "violations": self.violations,
            "bins_max_level": self.bins_max_level,
            "tree_max_degree": self.tree_max_degree,
        }


def coupled_run(m: int, seed: int = 0, *, k_max: int = 64,
                use_kernel: bool | None = None) -> CouplingReport:
    """Run the F chain and the N level chain on shared uniforms up to m edges
    (n = 2m bins), asserting N_j(k) <= F_j(k) at every step and level.

    Raises :class:`DominationError` with a diagnostic dump if the assertion
    ever fails — the shared-uniform construction preserves domination
    inductively, so a violation signals an implementation bug.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if m > MAX_COUPLED_EDGES:
        raise ValueError(f"coupled run supports m <= {MAX_COUPLED_EDGES}")
    n = 2 * m
    fvec = ThresholdVector(k_max)
    fvec.counts[1] = 2
    fvec.j = 1
    levels = np.zeros(k_max + 1, dtype=np.int64)
    levels[0] = n
    levels[1] = 1  # the first ball lands at level 0 for every uniform
    if levels[1] > fvec.counts[1]:
        raise DominationError(1, 1, levels, fvec.counts)
    rng = RandomSource([seed])
    if use_kernel is None:
        use_kernel = _kernels.HAVE_NUMBA

    if use_kernel:
        while True:
            rng.ensure(min(max(m - fvec.j + 8, 4096), 1 << 21))
            j, upos, bad_k, status = _kernels.coupled_chains(
                fvec.counts, levels, k_max, n, fvec.j, m, rng.buffer, rng.position,
            )
            fvec.j = j
            rng.commit(upos)
            if status == _kernels.REFILL:
                continue
            if status == _kernels.DONE:
                break
            if status == _kernels.VIOLATION:
                raise DominationError(j, bad_k, levels, fvec.counts)
            raise KMaxExceededError(f"chain level outgrew k_max={k_max} at j={j}")
    else:
        while fvec.j < m:
            u = rng.uniform()
            fvec.chain_step(u)
            level_chain_step(levels, n, u)
            if (levels[1:] > fvec.counts[1:]).any():
                bad = int(np.nonzero(levels[1:] > fvec.counts[1:])[0][0]) + 1
                raise DominationError(fvec.j, bad, levels, fvec.counts)

    nz = np.nonzero(levels[1:])[0]
    return CouplingReport(
        m=m,
        n=n,
        seed=seed,
        k_max=k_max,
        steps=m,
        violations=0,
        bins_max_level=int(nz[-1]) + 1 if nz.size else 0,
        tree_max_degree=fvec.max_degree(),
    )


def run_two_choice(n: int, balls: int, seed: int = 0, *, k_max: int = 64,
                   use_kernel: bool | None = None) -> BinsState:
    """Fresh n-bin state after placing ``balls`` two-choice balls."""
    bins = BinsState(n, k_max)
    bins.run(balls, RandomSource([seed]), use_kernel=use_kernel)
    return bins
