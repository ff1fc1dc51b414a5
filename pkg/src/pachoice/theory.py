"""Closed-form recurrences and constants behind the max-degree law.

The limiting threshold ratios alpha_k are defined by alpha_1 = 2 and
alpha_k = rho(k, alpha_{k-1}) with

    rho(k, t) = (sqrt(4 + (k-1)*k*t^2) - 2) / (k - 1),

evaluated here in the algebraically identical conjugate form
k*t^2 / (sqrt(4 + (k-1)*k*t^2) + 2), which stays accurate when t is tiny
(the naive form cancels to 0 once (k-1)*k*t^2 drops below machine epsilon).
alpha_k decays doubly exponentially; in float64 the values underflow to 0
around k = 16.

The tail-bound sequence starts at f(10) = 1/100 and squares its way down:
f(k+1) = f(k)^2 * (k+1). With g(j) = -ln f(10+j), the ratio g(j)/2^j equals
ln 100 minus the partial sums of ln(10+i)/2^i, which is how it is computed:
the partial sums are monotone under rounding, so the reported extremal
constants c1 = max_j g(j)/2^j = ln 100 and c2 = min_j are exact bounds for
every computed j by construction.

Everything here is pure and cheap; heavy lifting lives in the simulators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

#: first index of the squared-decay regime
K0 = 10
#: f(K0)
F_K0 = 0.01
#: empirical max-degree band around the reference curve: [ref - BAND_BELOW,
#: ref + R_EMP]. The theory pins the band width only up to unspecified
#: additive constants; these are desk-scale stand-ins.
BAND_BELOW = 3
R_EMP = 8


def rho(k: int, t: float) -> float:
    """The degree-recursion map rho(k, t); requires k >= 2 and t > 0."""
    if k < 2:
        raise ValueError(f"rho requires k >= 2, got k={k}")
    if t <= 0:
        raise ValueError(f"rho requires t > 0, got t={t}")
    a = (k - 1) * k * t * t
    return k * t * t / (math.sqrt(4.0 + a) + 2.0)


def alpha_seq(K: int) -> list[float]:
    """alpha_1..alpha_K. Entries underflow to exactly 0.0 around k = 16."""
    if K < 1:
        raise ValueError("K must be >= 1")
    out = [2.0]
    for k in range(2, K + 1):
        t = out[-1]
        out.append(rho(k, t) if t > 0.0 else 0.0)
    return out


def _ratio_seq(J: int) -> list[float]:
    # g(j)/2^j = ln 100 - sum_{i=1..j} ln(10+i)/2^i ; the partial sum of
    # positive terms never decreases under rounding, so the ratios never
    # increase and the maximum sits at j = 0 exactly.
    c1 = math.log(100.0)
    out = [c1]
    s = 0.0
    for i in range(1, J + 1):
        s += math.log(10.0 + i) / 2.0**i
        out.append(c1 - s)
    return out


def f_log_seq(K: int) -> list[float]:
    """ln f(k) for k = K0..K (log-space; the values themselves underflow)."""
    if K < K0:
        raise ValueError(f"K must be >= {K0}")
    ratios = _ratio_seq(K - K0)
    return [-(ratios[j] * 2.0**j) for j in range(K - K0 + 1)]


def f_seq(K: int) -> list[float]:
    """f(K0)..f(K); entries below ~1e-308 come back as 0.0."""
    out = []
    for lf in f_log_seq(K):
        try:
            out.append(math.exp(lf))
        except OverflowError:
            out.append(0.0)
    return out


@dataclass(frozen=True)
class DerivedConstants:
    c1: float
    c2: float
    monotone: bool
    ratios: tuple[float, ...]


def derive_c1_c2(J: int = 60) -> DerivedConstants:
    """Extremal constants of the two-sided bound exp(-c1*2^j) <= f(K0+j)
    <= exp(-c2*2^j) over 0 <= j <= J, with a monotonicity report."""
    if J < 10:
        raise ValueError("J must be >= 10")
    ratios = _ratio_seq(J)
    monotone = all(ratios[j + 1] <= ratios[j] for j in range(J))
    return DerivedConstants(
        c1=max(ratios), c2=min(ratios), monotone=monotone, ratios=tuple(ratios)
    )


def choose_C(c1: float | None = None) -> int:
    """Smallest integer C with ln C > max(c1, ln 4 + c1 * 2^-K0)."""
    if c1 is None:
        c1 = math.log(100.0)
    target = max(c1, math.log(4.0) + c1 * 2.0**-K0)
    C = 2
    while math.log(C) <= target:
        C += 1
    return C


def k_star(m: int, C: int | None = None) -> int:
    """Smallest integer k >= 1 with 2^(k+1) * ln C >= (ln m)/2.

    The literal asymptotic definition can yield k <= 0 at desk scale; the
    floor at 1 keeps downstream formulas meaningful.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    if C is None:
        C = choose_C()
    half_log_m = math.log(m) / 2.0
    k = 1
    while 2.0 ** (k + 1) * math.log(C) < half_log_m:
        k += 1
    return k


def rho_m(m: int) -> int:
    """ceil((ln ln m)^(1/3)) — the paper-style slowly growing prefactor.

    Distinct from :func:`rho`; the source material overloads the symbol.
    """
    if m < 16:
        raise ValueError("m must be >= 16")
    return math.ceil(math.log(math.log(m)) ** (1.0 / 3.0))


def phi_log(m: int, k: int, C: int | None = None) -> float:
    """ln of the burn-in horizon rho_m(m) * C^(2^(k+1)), which itself
    overflows any machine range already for small k."""
    if m < 16:
        raise ValueError("m must be >= 16")
    if k < 0:
        raise ValueError("k must be >= 0")
    if C is None:
        C = choose_C()
    return math.log(rho_m(m)) + 2.0 ** (k + 1) * math.log(C)


def reference_curve(m: int) -> float:
    """ln ln m / ln 2, the leading term of the max-degree law."""
    if m < 16:
        raise ValueError("m must be >= 16")
    return math.log(math.log(m)) / math.log(2.0)


@dataclass(frozen=True)
class RecurrenceTable:
    """All derived constants bundled for reporting."""

    alpha: tuple[float, ...]
    f_log: tuple[float, ...]
    c1: float
    c2: float
    C: int
    monotone_ratios: bool
    band_below: int = BAND_BELOW
    r_emp: int = R_EMP
    k0: int = field(default=K0)

    @classmethod
    def build(cls, k_alpha: int = 20, k_f: int = 40, j_ratio: int = 60) -> "RecurrenceTable":
        dc = derive_c1_c2(j_ratio)
        return cls(
            alpha=tuple(alpha_seq(k_alpha)),
            f_log=tuple(f_log_seq(k_f)),
            c1=dc.c1,
            c2=dc.c2,
            C=choose_C(dc.c1),
            monotone_ratios=dc.monotone,
        )

    def k_star(self, m: int) -> int:
        return k_star(m, self.C)

    def phi_log(self, m: int, k: int) -> float:
        return phi_log(m, k, self.C)

    def to_dict(self, m: int | None = None) -> dict:
        d = {
            "alpha": list(self.alpha),
            "f_log": list(self.f_log),
            "f": [math.exp(v) if v > -700 else 0.0 for v in self.f_log],
            "c1": self.c1,
            "c2": self.c2,
            "C": self.C,
            "k0": self.k0,
            "monotone_ratios": self.monotone_ratios,
            "band": {"below": self.band_below, "above": self.r_emp},
        }
        if m is not None:
            ks = self.k_star(m)
            d["m"] = m
            d["k_star"] = ks
            if m >= 16:
                d["rho_m"] = rho_m(m)
                d["reference_curve"] = reference_curve(m)
                d["phi_log"] = {str(k): self.phi_log(m, k) for k in range(ks + 2)}
        return d
