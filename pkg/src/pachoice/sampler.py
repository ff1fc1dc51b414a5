"""Weighted vertex sampling structures.

Two structures cover the attachment laws used by the tree process:

* ``EndpointList`` — flat list of edge endpoints. A uniform pick from the
  list lands on vertex v with probability deg(v) / 2m, exactly, in O(1).
  Every recorded edge appends its two endpoints, so vertex v occurs exactly
  deg(v) times.
* ``WeightIndex`` — binary sum tree over per-vertex weights deg(v)**alpha,
  for attachment proportional to a power of the degree. Update and sample
  are O(log n).

Both consume exactly one uniform per sample from a :class:`~pachoice.rng.RandomSource`.
"""

from __future__ import annotations

import math

import numpy as np

from .rng import RandomSource, pick_index

#: weights are float64; alpha * log2(degree) must stay below this many bits
MAX_WEIGHT_LOG2 = 1000.0


def degree_weight(degree: int, alpha: float) -> float:
    """Sampling weight degree**alpha.

    Small integer exponents are computed by repeated multiplication so the
    result is exact and identical between the Python and compiled paths.
    """
    if alpha == 1.0:
        return float(degree)
    if alpha == 0.0:
        return 1.0
    if alpha == int(alpha) and 0.0 < alpha <= 64.0:
        w = 1.0
        d = float(degree)
        for _ in range(int(alpha)):
            w *= d
    else:
        w = float(degree) ** alpha
    if not math.isfinite(w) or (degree > 1 and alpha * math.log2(degree) > MAX_WEIGHT_LOG2):
        raise OverflowError(
            f"weight deg**alpha overflows float64 (deg={degree}, alpha={alpha})"
        )
    return w


class EndpointList:
    """Append-only list of edge endpoints; length is always 2m."""

    __slots__ = ("_a", "_n")

    def __init__(self, capacity: int = 16):
        self._a = np.empty(max(int(capacity), 4), dtype=np.int32)
        self._n = 0

    def __len__(self) -> int:
        return self._n

    @property
    def entries(self) -> np.ndarray:
        """View of the recorded endpoints (do not mutate)."""
        return self._a[: self._n]

    def record_edge(self, u: int, v: int) -> None:
        """Append both endpoints of a new edge."""
        if self._n + 2 > self._a.shape[0]:
            grown = np.empty(max(2 * self._a.shape[0], self._n + 2), dtype=np.int32)
            grown[: self._n] = self._a[: self._n]
            self._a = grown
        self._a[self._n] = u
        self._a[self._n + 1] = v
        self._n += 2

    def sample(self, rng: RandomSource) -> int:
        """Uniform endpoint; induced vertex law is deg(v)/2m."""
        if self._n == 0:
            raise ValueError("cannot sample from an empty endpoint list")
        return int(self._a[pick_index(rng.uniform(), self._n)])

    def sample_block(self, rng: RandomSource, count: int) -> np.ndarray:
        """``count`` independent samples (consumes ``count`` uniforms)."""
        if self._n == 0:
            raise ValueError("cannot sample from an empty endpoint list")
        idx = (rng.uniform_block(count) * self._n).astype(np.int64)
        np.minimum(idx, self._n - 1, out=idx)
        return self._a[idx]

    def vertex_counts(self, n_vertices: int) -> np.ndarray:
        """Multiplicity of each vertex id; equals the degree sequence."""
        return np.bincount(self.entries, minlength=n_vertices)

    def copy(self) -> "EndpointList":
        c = EndpointList(self._a.shape[0])
        c._a[: self._n] = self._a[: self._n]
        c._n = self._n
        return c


class WeightIndex:
    """Binary sum tree over weights deg(v)**alpha.

    1-based heap layout: root at index 1, children of i at 2i and 2i+1,
    leaf for vertex v at ``capacity + v``. The root holds the total weight.
    """

    __slots__ = ("alpha", "_cap", "_tree", "_n")

    def __init__(self, alpha: float, capacity: int = 2):
        if alpha < 0:
            raise ValueError("alpha must be non-negative")
        self.alpha = float(alpha)
        cap = 1
        while cap < max(capacity, 2):
            cap <<= 1
        self._cap = cap
        self._tree = np.zeros(2 * cap, dtype=np.float64)
        self._n = 0

    def __len__(self) -> int:
        return self._n

    @property
    def total_weight(self) -> float:
        return float(self._tree[1])

    @property
    def tree(self) -> np.ndarray:
        return self._tree

    @property
    def capacity(self) -> int:
        return self._cap

    def weight(self, v: int) -> float:
        self._check(v)
        return float(self._tree[self._cap + v])

    def append(self, degree: int = 1) -> int:
        """Add the next vertex with the given degree; returns its id."""
        if self._n == self._cap:
            self._grow()
        v = self._n
        self._n += 1
        self._set(v, degree_weight(degree, self.alpha))
        return v

    def update(self, v: int, new_degree: int) -> None:
        """Reset vertex v's weight to new_degree**alpha."""
        self._check(v)
        self._set(v, degree_weight(new_degree, self.alpha))

    def sample(self, rng: RandomSource) -> int:
        """Vertex v with probability weight(v) / total_weight."""
        if self._n == 0 or self._tree[1] <= 0.0:
            raise ValueError("cannot sample: total weight is zero")
        target = rng.uniform() * self._tree[1]
        node = 1
        cap = self._cap
        tree = self._tree
        while node < cap:
            node <<= 1
            s = tree[node]
            if target >= s:
                target -= s
                node += 1
        v = node - cap
        if v >= self._n:  # float-boundary safety, probability ~0
            v = self._n - 1
        return v

    def leaf_weights(self) -> np.ndarray:
        return self._tree[self._cap : self._cap + self._n].copy()

    def copy(self) -> "WeightIndex":
        c = WeightIndex.__new__(WeightIndex)
        c.alpha = self.alpha
        c._cap = self._cap
        c._tree = self._tree.copy()
        c._n = self._n
        return c

    def _check(self, v: int) -> None:
        if not 0 <= v < self._n:
            raise ValueError(f"unknown vertex {v}")

    def _set(self, v: int, w: float) -> None:
        # assign the leaf exactly, then push the delta up to the root
        node = self._cap + v
        delta = w - self._tree[node]
        self._tree[node] = w
        node >>= 1
        while node >= 1:
            self._tree[node] += delta
            node >>= 1

    def _grow(self) -> None:
        # rebuild at double capacity; internal sums are recomputed, which can
        # move them by an ulp relative to incremental maintenance
        old = self.leaf_weights()
        cap = self._cap * 2
        tree = np.zeros(2 * cap, dtype=np.float64)
        tree[cap : cap + old.shape[0]] = old
        for i in range(cap - 1, 0, -1):
            tree[i] = tree[2 * i] + tree[2 * i + 1]
        self._cap = cap
        self._tree = tree
