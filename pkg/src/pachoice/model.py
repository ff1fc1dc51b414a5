"""Evolution of the attachment tree under a choice rule.

Each step draws d candidate vertices i.i.d. from the size-biased law
(probability deg(v)/2m, or deg(v)**alpha-proportional for alpha != 1),
selects the candidate of smallest degree ("min" rule), largest degree
("max"), or the single candidate ("classic", d = 1), breaking ties uniformly
among the tied candidate slots, and attaches a new leaf to the selection.

Pinned randomness, per step: d candidate draws, then one tie-break draw only
if two or more slots are tied. See :mod:`pachoice.rng` for the generator
contract. Vertex ids are dense integers in arrival order; vertices 0 and 1
form the initial edge.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .fstats import KMaxExceededError, ThresholdVector
from .rng import RandomSource, pick_index
from .sampler import EndpointList, WeightIndex

RULES = ("min", "max", "classic")
MAX_CHOICES = _kernels.MAX_CHOICES
MAX_EDGES = 2**31 - 2  # vertex ids are int32


@dataclass(frozen=True)
class ModelSpec:
    """Attachment rule: which candidate wins, how many are drawn, and how."""

    rule: str = "min"
    choices: int = 2
    alpha: float = 1.0
    dgrow_a: float | None = None  # d(m) = max(1, floor(A * ln m)) when set

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"rule must be one of {RULES}, got {self.rule!r}")
        if self.rule == "classic":
            object.__setattr__(self, "choices", 1)  # classic forces d = 1
        if not 1 <= self.choices <= MAX_CHOICES:
            raise ValueError(f"choices must be in [1, {MAX_CHOICES}]")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")
        if self.dgrow_a is not None and self.dgrow_a <= 0:
            raise ValueError("d-growth coefficient must be positive")

    def effective_choices(self, m: int) -> int:
        """Number of candidates for the step taken at edge count m."""
        if self.dgrow_a is None:
            return self.choices
        return max(1, int(self.dgrow_a * math.log(m)))

    @property
    def uses_endpoints(self) -> bool:
        return self.alpha == 1.0

    @property
    def strict_kmax(self) -> bool:
        """Min-choice asserts max degree stays inside the tracked table;
        classic/max-choice max degrees legitimately outgrow it, so their
        threshold tracking saturates instead."""
        return self.rule == "min"


@dataclass(frozen=True)
class GrowthSnapshot:
    """Immutable per-checkpoint statistics handed to observers."""

    j: int
    max_degree: int
    f: tuple[int, ...]
    elapsed_ns: int


class TreeState:
    """Growing tree: degree counts, sampler structure, edge count."""

    __slots__ = ("_deg", "_nv", "m", "delta", "endpoints", "weights", "_parents")

    def __init__(self):
        raise TypeError("use pachoice.model.init() to create a TreeState")

    @property
    def degrees(self) -> np.ndarray:
        """Degree of each vertex, indexed by vertex id (view)."""
        return self._deg[: self._nv]

    @property
    def vertex_count(self) -> int:
        return self._nv

    @property
    def parents(self) -> np.ndarray | None:
        return None if self._parents is None else self._parents[: self._nv]

    def max_degree(self) -> int:
        return int(self.delta)

    def ensure_capacity(self, m_target: int) -> None:
        need_v = m_target + 1
        if need_v > self._deg.shape[0]:
            grown = np.zeros(need_v, dtype=np.int32)
            grown[: self._nv] = self._deg[: self._nv]
            self._deg = grown
            if self._parents is not None:
                gp = np.full(need_v, -1, dtype=np.int32)
                gp[: self._nv] = self._parents[: self._nv]
                self._parents = gp
        if self.endpoints is not None:
            ne = 2 * m_target
            if ne > self.endpoints._a.shape[0]:
                grown = np.empty(ne, dtype=np.int32)
                grown[: len(self.endpoints)] = self.endpoints.entries
                self.endpoints._a = grown
        elif self.weights is not None:
            while self.weights.capacity < need_v:
                self.weights._grow()

    def copy(self) -> "TreeState":
        c = object.__new__(TreeState)
        c._deg = self._deg.copy()
        c._nv = self._nv
        c.m = self.m
        c.delta = self.delta
        c.endpoints = self.endpoints.copy() if self.endpoints is not None else None
        c.weights = self.weights.copy() if self.weights is not None else None
        c._parents = self._parents.copy() if self._parents is not None else None
        return c

    def validate(self) -> None:
        """Raise if any structural invariant is broken (test hook)."""
        deg = self.degrees
        if int(deg.sum()) != 2 * self.m:
            raise AssertionError("degree sum != 2m")
        if self._nv != self.m + 1:
            raise AssertionError("vertex count != m + 1")
        if (deg < 1).any():
            raise AssertionError("vertex with degree < 1")
        if self.endpoints is not None:
            counts = self.endpoints.vertex_counts(self._nv)
            if not np.array_equal(counts, deg):
                raise AssertionError("endpoint multiplicities != degrees")


def init(spec: ModelSpec = ModelSpec(), *, m_capacity: int | None = None,
         track_parents: bool = False) -> TreeState:
    """The one-edge tree: vertices 0 and 1, degrees [1, 1], m = 1."""
    cap_v = (m_capacity + 1) if m_capacity else 16
    st = object.__new__(TreeState)
    st._deg = np.zeros(cap_v, dtype=np.int32)
    st._deg[0] = st._deg[1] = 1
    st._nv = 2
    st.m = 1
    st.delta = 1
    if spec.uses_endpoints:
        st.endpoints = EndpointList(capacity=2 * m_capacity if m_capacity else 16)
        st.endpoints.record_edge(0, 1)
        st.weights = None
    else:
        st.endpoints = None
        st.weights = WeightIndex(spec.alpha, capacity=cap_v)
        st.weights.append(1)
        st.weights.append(1)
    st._parents = np.full(cap_v, -1, dtype=np.int32) if track_parents else None
    return st


def _select(state: TreeState, spec: ModelSpec, rng: RandomSource) -> tuple[int, int]:
    """Draw candidates and pick the winner; no mutation. Returns (vertex, degree)."""
    d = spec.effective_choices(state.m)
    if d > MAX_CHOICES:
        raise ValueError(f"effective d={d} exceeds the supported maximum {MAX_CHOICES}")
    deg = state._deg
    if state.endpoints is not None:
        arr = state.endpoints._a
        ne = 2 * state.m
        cands = [int(arr[pick_index(rng.uniform(), ne)]) for _ in range(d)]
    else:
        cands = [state.weights.sample(rng) for _ in range(d)]
    if spec.rule == "max":
        best = max(deg[c] for c in cands)
    else:
        best = min(deg[c] for c in cands)
    tied = [c for c in cands if deg[c] == best]
    if len(tied) > 1:
        y = tied[pick_index(rng.uniform(), len(tied))]
    else:
        y = tied[0]
    return y, int(deg[y])


def _attach(state: TreeState, y: int) -> None:
    nv = state._nv
    if nv + 1 > state._deg.shape[0] or (
        state.endpoints is not None and 2 * state.m + 2 > state.endpoints._a.shape[0]
    ):
        state.ensure_capacity(max(2 * state.m, state.m + 1))
    old = int(state._deg[y])
    state._deg[y] = old + 1
    state._deg[nv] = 1
    if state._parents is not None:
        state._parents[nv] = y
    if state.endpoints is not None:
        state.endpoints.record_edge(y, nv)
    else:
        state.weights.update(y, old + 1)
        state.weights.append(1)
    state.m += 1
    state._nv += 1
    if old + 1 > state.delta:
        state.delta = old + 1


def step(state: TreeState, spec: ModelSpec, rng: RandomSource) -> tuple[int, int]:
    """One attachment step, in place. Returns (chosen vertex, its old degree)."""
    y, old = _select(state, spec, rng)
    _attach(state, y)
    return y, old


def max_degree(state: TreeState) -> int:
    """Largest degree in the tree."""
    return state.max_degree()


def grow(state: TreeState, spec: ModelSpec, rng: RandomSource, m_target: int, *,
         k_max: int = 64,
         checkpoints: Iterable[int] = (),
         observers: Sequence[Callable[[GrowthSnapshot], None]] = (),
         use_kernel: bool | None = None) -> TreeState:
    """Run steps until the tree has ``m_target`` edges.

    Observers are called with a :class:`GrowthSnapshot` at every checkpoint
    edge count reached during growth. Deterministic given (spec, rng stream);
    the checkpoint schedule and the compiled/Python path do not affect the
    trajectory.
    """
    if m_target < state.m:
        raise ValueError(f"m_target={m_target} below current edge count {state.m}")
    if m_target > MAX_EDGES:
        raise ValueError(f"m_target={m_target} exceeds the id-type cap {MAX_EDGES}")
    if spec.dgrow_a is not None and m_target >= 2:
        if int(spec.dgrow_a * math.log(m_target)) > MAX_CHOICES:
            raise ValueError("d-growth would exceed the supported candidate maximum")
    if use_kernel is None:
        use_kernel = _kernels.HAVE_NUMBA
    strict = spec.strict_kmax
    state.ensure_capacity(m_target)
    fvec = ThresholdVector.from_degrees(state.degrees, k_max)
    if strict and state.max_degree() > k_max:
        raise KMaxExceededError(f"max degree {state.max_degree()} already above k_max={k_max}")

    cps = sorted({int(c) for c in checkpoints if state.m < c <= m_target})
    boundaries = cps if cps and cps[-1] == m_target else cps + [m_target]
    cp_set = set(cps)

    for stop_j in boundaries:
        t0 = time.perf_counter_ns()
        if use_kernel:
            _advance_kernel(state, spec, rng, fvec, stop_j, strict)
        else:
            _advance_python(state, spec, rng, fvec, stop_j, strict)
        if stop_j in cp_set and observers:
            snap = GrowthSnapshot(
                j=state.m,
                max_degree=state.max_degree(),
                f=fvec.as_tuple(),
                elapsed_ns=time.perf_counter_ns() - t0,
            )
            for obs in observers:
                obs(snap)
    return state


def _advance_python(state, spec, rng, fvec, stop_j, strict):
    k_max = fvec.k_max
    while state.m < stop_j:
        y, old = _select(state, spec, rng)
        if strict and old + 1 > k_max:
            raise KMaxExceededError(
                f"degree {old + 1} exceeds tracked k_max={k_max} at j={state.m}"
            )
        _attach(state, y)
        fvec.update_on_attach(old, saturate=not strict)


def _advance_kernel(state, spec, rng, fvec, stop_j, strict):
    K = _kernels
    rule = K.RULE_MAX if spec.rule == "max" else K.RULE_MIN
    d_fixed = spec.choices
    dgrow = spec.dgrow_a if spec.dgrow_a is not None else 0.0
    d_top = spec.effective_choices(max(stop_j, 2))
    parents = state._parents if state._parents is not None else np.empty(1, dtype=np.int32)
    track = 1 if state._parents is not None else 0
    alpha_int = -1
    if state.weights is not None:
        a = state.weights.alpha
        alpha_int = int(a) if a == int(a) and 0.0 <= a <= 64.0 else -1
    while True:
        remaining = stop_j - state.m
        rng.ensure(min(max(remaining * (d_top + 1) + 8, 4096), 1 << 21))
        if state.endpoints is not None:
            nv, j, upos, delta, status = K.grow_endpoints(
                state._deg, state.endpoints._a, parents, fvec.counts, fvec.k_max,
                state._nv, state.m, stop_j, rule, d_fixed, dgrow,
                1 if strict else 0, track, rng.buffer, rng.position, state.delta,
            )
            state.endpoints._n = 2 * j
        else:
            w = state.weights
            nv, j, upos, delta, status = K.grow_weighted(
                state._deg, w._tree, w._cap, parents, fvec.counts, fvec.k_max,
                state._nv, state.m, stop_j, rule, d_fixed, dgrow,
                w.alpha, alpha_int, 1 if strict else 0, track,
                rng.buffer, rng.position, state.delta,
            )
            w._n = nv
        state._nv = nv
        state.m = j
        state.delta = delta
        fvec.j = j
        rng.commit(upos)
        if status == K.REFILL:
            continue
        if status == K.DONE:
            return
        if status == K.KMAX:
            raise KMaxExceededError(
                f"degree exceeds tracked k_max={fvec.k_max} at j={state.m}"
            )
        if status == K.OVERFLOW:
            raise OverflowError("vertex weight deg**alpha overflows float64")
        raise RuntimeError(f"unexpected kernel status {status}")
