"""Compiled hot loops (numba). Pure-Python fallbacks keep identical semantics.

Every kernel consumes float64 uniforms from a buffer starting at ``upos`` in
the pinned order (d candidate draws, then one tie-break draw only when two or
more candidate slots are tied), so a kernel-driven run reproduces the
step-by-step Python path bit for bit. Kernels return a status instead of
raising: DONE, REFILL (buffer exhausted, re-enter after topping up), KMAX
(degree outgrew the tracked table), OVERFLOW (weight overflow), VIOLATION
(coupling domination failed).
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


DONE = 0
REFILL = 1
KMAX = 2
OVERFLOW = 3
VIOLATION = 4

RULE_MIN = 0
RULE_MAX = 1

MAX_CHOICES = 64


@njit(cache=True)
def _weight(degree, alpha, alpha_int):
    if alpha_int >= 0:
        w = 1.0
        d = float(degree)
        for _ in range(alpha_int):
            w *= d
        return w
    return float(degree) ** alpha


@njit(cache=True)
def grow_endpoints(degrees, endpoints, parents, f, k_max, nv, j, stop_j,
                   rule, d_fixed, dgrow_a, strict, track_parents,
                   ubuf, upos, delta):
    cand = np.empty(MAX_CHOICES, dtype=np.int64)
    nu = ubuf.shape[0]
    ne = 2 * j
    while j < stop_j:
        if dgrow_a > 0.0:
            d = int(dgrow_a * np.log(float(j)))
            if d < 1:
                d = 1
        else:
            d = d_fixed
        if upos + d + 1 > nu:
            return nv, j, upos, delta, REFILL
        for i in range(d):
            u = ubuf[upos]
            upos += 1
            p = int(u * ne)
            if p >= ne:
                p = ne - 1
            cand[i] = endpoints[p]
        best = degrees[cand[0]]
        if rule == RULE_MAX:
            for i in range(1, d):
                dg = degrees[cand[i]]
                if dg > best:
                    best = dg
        else:
            for i in range(1, d):
                dg = degrees[cand[i]]
                if dg < best:
                    best = dg
        cnt = 0
        for i in range(d):
            if degrees[cand[i]] == best:
                cand[cnt] = cand[i]
                cnt += 1
        if cnt > 1:
            u = ubuf[upos]
            upos += 1
            w = int(u * cnt)
            if w >= cnt:
                w = cnt - 1
            y = cand[w]
        else:
            y = cand[0]
        old = degrees[y]
        new_deg = old + 1
        if strict != 0 and new_deg > k_max:
            return nv, j, upos, delta, KMAX
        degrees[y] = new_deg
        degrees[nv] = 1
        if track_parents != 0:
            parents[nv] = y
        endpoints[ne] = y
        endpoints[ne + 1] = nv
        ne += 2
        nv += 1
        f[1] += 2
        top = old if old < k_max else k_max
        for k in range(2, top + 1):
            f[k] += 1
        if new_deg <= k_max:
            f[new_deg] += new_deg
        if new_deg > delta:
            delta = new_deg
        j += 1
    return nv, j, upos, delta, DONE


@njit(cache=True)
def grow_weighted(degrees, tree, cap, parents, f, k_max, nv, j, stop_j,
                  rule, d_fixed, dgrow_a, alpha, alpha_int, strict,
                  track_parents, ubuf, upos, delta):
    cand = np.empty(MAX_CHOICES, dtype=np.int64)
    nu = ubuf.shape[0]
    while j < stop_j:
        if dgrow_a > 0.0:
            d = int(dgrow_a * np.log(float(j)))
            if d < 1:
                d = 1
        else:
            d = d_fixed
        if upos + d + 1 > nu:
            return nv, j, upos, delta, REFILL
        for i in range(d):
            u = ubuf[upos]
            upos += 1
            target = u * tree[1]
            node = 1
            while node < cap:
                node <<= 1
                s = tree[node]
                if target >= s:
                    target -= s
                    node += 1
            v = node - cap
            if v >= nv:
                v = nv - 1
            cand[i] = v
        best = degrees[cand[0]]
        if rule == RULE_MAX:
            for i in range(1, d):
                dg = degrees[cand[i]]
                if dg > best:
                    best = dg
        else:
            for i in range(1, d):
                dg = degrees[cand[i]]
                if dg < best:
                    best = dg
        cnt = 0
        for i in range(d):
            if degrees[cand[i]] == best:
                cand[cnt] = cand[i]
                cnt += 1
        if cnt > 1:
            u = ubuf[upos]
            upos += 1
            w = int(u * cnt)
            if w >= cnt:
                w = cnt - 1
            y = cand[w]
        else:
            y = cand[0]
        old = degrees[y]
        new_deg = old + 1
        if strict != 0 and new_deg > k_max:
            return nv, j, upos, delta, KMAX
        w_new = _weight(new_deg, alpha, alpha_int)
        if not np.isfinite(w_new) or (new_deg > 1 and alpha * np.log2(float(new_deg)) > 1000.0):
            return nv, j, upos, delta, OVERFLOW
        degrees[y] = new_deg
        degrees[nv] = 1
        if track_parents != 0:
            parents[nv] = y
        # leaf assignment + delta propagation, matching WeightIndex._set
        node = cap + y
        dw = w_new - tree[node]
        tree[node] = w_new
        node >>= 1
        while node >= 1:
            tree[node] += dw
            node >>= 1
        node = cap + nv
        dw = 1.0 - tree[node]
        tree[node] = 1.0
        node >>= 1
        while node >= 1:
            tree[node] += dw
            node >>= 1
        nv += 1
        f[1] += 2
        top = old if old < k_max else k_max
        for k in range(2, top + 1):
            f[k] += 1
        if new_deg <= k_max:
            f[new_deg] += new_deg
        if new_deg > delta:
            delta = new_deg
        j += 1
    return nv, j, upos, delta, DONE


@njit(cache=True)
def place_balls(loads, levels, n, j, stop_j, ubuf, upos):
    nu = ubuf.shape[0]
    lv_cap = levels.shape[0]
    while j < stop_j:
        if upos + 3 > nu:
            return j, upos, REFILL
        u = ubuf[upos]
        upos += 1
        b1 = int(u * n)
        if b1 >= n:
            b1 = n - 1
        u = ubuf[upos]
        upos += 1
        b2 = int(u * n)
        if b2 >= n:
            b2 = n - 1
        l1 = loads[b1]
        l2 = loads[b2]
        if l1 < l2:
            w = b1
        elif l2 < l1:
            w = b2
        else:
            u = ubuf[upos]
            upos += 1
            c = int(u * 2)
            if c >= 2:
                c = 1
            w = b1 if c == 0 else b2
        lw = loads[w] + 1
        if lw >= lv_cap:
            return j, upos, KMAX
        loads[w] = lw
        levels[lw] += 1
        j += 1
    return j, upos, DONE


@njit(cache=True)
def coupled_chains(f, levels, k_max, n, j, stop_j, ubuf, upos):
    """F-vector chain and two-choice level chain on one shared uniform per step.

    Returns (j, upos, bad_k, status); bad_k is the violated level on VIOLATION.
    """
    nu = ubuf.shape[0]
    while j < stop_j:
        if upos >= nu:
            return j, upos, -1, REFILL
        u = ubuf[upos]
        upos += 1
        tw = 2.0 * j
        t = u * (tw * tw)
        d = 1
        while d + 1 <= k_max:
            c = float(f[d + 1])
            if t < c * c:
                d += 1
            else:
                break
        if d + 1 > k_max:
            return j, upos, -1, KMAX
        f[1] += 2
        for k in range(2, d + 1):
            f[k] += 1
        f[d + 1] += d + 1
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
            return j, upos, -1, KMAX
        levels[lev + 1] += 1
        j += 1
        for k in range(1, k_max + 1):
            if levels[k] > f[k]:
                return j, upos, k, VIOLATION
    return j, upos, -1, DONE


@njit(cache=True)
def replicate_small_trees(runs, m_target, rule, d, stride, ubuf, out):
    """Many independent small tree runs; out[r] = base-32 code of the sorted
    degree multiset. Each run reads its own stride of the uniform buffer."""
    degs = np.zeros(8, dtype=np.int64)
    ends = np.zeros(16, dtype=np.int64)
    cand = np.empty(8, dtype=np.int64)
    for r in range(runs):
        pos = r * stride
        for i in range(8):
            degs[i] = 0
        degs[0] = 1
        degs[1] = 1
        ends[0] = 0
        ends[1] = 1
        nv = 2
        j = 1
        ne = 2
        while j < m_target:
            for i in range(d):
                u = ubuf[pos]
                pos += 1
                p = int(u * ne)
                if p >= ne:
                    p = ne - 1
                cand[i] = ends[p]
            best = degs[cand[0]]
            if rule == RULE_MAX:
                for i in range(1, d):
                    if degs[cand[i]] > best:
                        best = degs[cand[i]]
            else:
                for i in range(1, d):
                    if degs[cand[i]] < best:
                        best = degs[cand[i]]
            cnt = 0
            for i in range(d):
                if degs[cand[i]] == best:
                    cand[cnt] = cand[i]
                    cnt += 1
            if cnt > 1:
                u = ubuf[pos]
                pos += 1
                w = int(u * cnt)
                if w >= cnt:
                    w = cnt - 1
                y = cand[w]
            else:
                y = cand[0]
            degs[y] += 1
            degs[nv] = 1
            ends[ne] = y
            ends[ne + 1] = nv
            ne += 2
            nv += 1
            j += 1
        # insertion-sort the nv degrees descending, then encode base 32
        for a in range(1, nv):
            key = degs[a]
            b = a - 1
            while b >= 0 and degs[b] < key:
                degs[b + 1] = degs[b]
                b -= 1
            degs[b + 1] = key
        code = 0
        for i in range(nv):
            code = code * 32 + degs[i]
        out[r] = code
    return runs
