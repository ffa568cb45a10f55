"""Explicit scalar constants of the stability argument and their audits."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import mpmath
import numpy as np

from .lattice import (
    ORIGIN,
    DualSite,
    Vertex,
    boundary_size,
    build_volume,
    graph_distance,
    plaquettes_of,
    volume_size,
)

EPSILON = 0.03


def f(x: float) -> float:
    """(x + 1 - sqrt(x^2 + 1)) / x."""
    return (x + 1 - math.sqrt(x * x + 1)) / x


MU = 2 * 9 ** 0.2
F_AT_2E_MU = f(2 * math.e * MU)
KAPPA = 4 / math.e + math.log(MU)


def threshold_beta(epsilon: float = EPSILON) -> float:
    """Minimum decay rate: 4/e + ln(mu / f(2 e mu)) + epsilon."""
    return 4 / math.e + math.log(MU / F_AT_2E_MU) + epsilon


def alpha(d: int, epsilon: float = EPSILON) -> float:
    if d < 0:
        raise ValueError("d must be non-negative")
    return d * math.log(3) - threshold_beta(epsilon)


def _iv_alpha(d: int, epsilon: str = "0.03"):
    iv = mpmath.iv
    mu = 2 * iv.mpf(9) ** (iv.mpf(1) / 5)
    x = 2 * iv.e * mu
    fx = (x + 1 - iv.sqrt(x * x + 1)) / x
    return d * iv.log(3) - 4 / iv.e - iv.log(mu / fx) - iv.mpf(epsilon)


def alpha_sign(d: int, epsilon: str = "0.03") -> int:
    """Sign of alpha(d) certified by outward-rounded interval arithmetic (0 if undecided)."""
    with mpmath.workdps(30):
        a = _iv_alpha(d, epsilon)
        if a.a > 0:
            return 1
        if a.b < 0:
            return -1
        return 0


def alpha_interval(d: int, epsilon: str = "0.03") -> tuple[float, float]:
    with mpmath.workdps(30):
        a = _iv_alpha(d, epsilon)
        return float(a.a), float(a.b)


def indistinguishability_regime(d: int) -> bool:
    return alpha_sign(d) > 0


def cluster_ratio(epsilon: float = EPSILON) -> tuple[float, float]:
    """r(eps) and r/(1-r)."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    g = MU * F_AT_2E_MU * math.exp(1 - epsilon)
    h = F_AT_2E_MU * math.exp(-epsilon)
    if g >= 1:
        raise ValueError("ratio undefined: mu f(2 e mu) e^(1-eps) >= 1")
    r = g / ((1 - g) * (1 - h))
    return r, (r / (1 - r) if r < 1 else math.inf)


def F_alpha(n: int, k: int, d: int, exponent: int = 2, epsilon: float = EPSILON) -> float:
    """102 k e^{-exponent * alpha (n-k)}.

    ``exponent=2`` is the statement form; ``exponent=1`` is the single-alpha
    form used in one derivation.  Both are exposed.
    """
    return 102 * k * math.exp(-exponent * alpha(d, epsilon) * (n - k))


def F_alpha_from_boundary(n: int, k: int, d: int, exponent: int = 2) -> float:
    return 17 * boundary_size(build_volume(ORIGIN, k, d)) * math.exp(-exponent * alpha(d) * (n - k))


def indistinguishability_bound(n: int, k: int, d: int, exponent: int = 2) -> float:
    if not 1 <= k < n:
        raise ValueError("need 1 <= k < n")
    F = F_alpha(n, k, d, exponent)
    return 2 * F * math.exp(F)


def log_C_alpha(d: int) -> float:
    """log of 68 e^{51/(alpha e)} (the constant itself overflows a double near d = 5)."""
    a = alpha(d)
    if a <= 0:
        return math.inf
    return math.log(68) + 51 / (a * math.e)


def ltqo_envelope(r: float, d: int) -> mpmath.mpf:
    """G(r) = C e^{-2 alpha r}, as an mpmath number."""
    return mpmath.e ** (log_C_alpha(d) - 2 * alpha(d) * r)


def ltqo_grid_check(d: int, k_max: int = 20, n_max: int = 200) -> bool:
    """4 F e^F <= |boundary of the k-volume| G(n-k) for all n >= 2k >= 2."""
    logC = log_C_alpha(d)
    a = alpha(d)
    for k in range(1, k_max + 1):
        bd = 6 * k
        for n in range(2 * k, n_max + 1):
            F = F_alpha(n, k, d)
            lhs = math.log(4 * F) + F
            rhs = math.log(bd) + logC - 2 * a * (n - k)
            if lhs > rhs + 1e-9:
                return False
    return True


def ltqo_summable(d: int, nu0: float = 2, nu: float = 2) -> bool:
    """sum_n n^(nu0 + nu/2) G(n) converges iff the decay rate is positive."""
    return alpha(d) > 0


def entropy_bound(N: int, K: int, d: int, exponent: int = 2) -> float:
    """17 |boundary of the K-volume| e^{-exponent alpha (N-K)}."""
    if not N > K >= 1:
        raise ValueError("need N > K >= 1")
    return 17 * 6 * K * math.exp(-exponent * alpha(d) * (N - K))


def l1_from_divergence(D: float) -> float:
    """L1 distance bound D e^D from a sup-log divergence D."""
    return D * math.exp(D)


def regularity_holds(n_max: int = 8, d_max: int = 4) -> bool:
    return all(
        volume_size(n, d) <= 3 * (3 * d + 2) * n * n
        for n in range(1, n_max + 1) for d in range(d_max + 1)
    )


# ---------------------------------------------------------------------------
# summability constant for the interaction decay


class Divergent(ValueError):
    pass


def _series_tail(s: float, c: float, theta: float, n0: int) -> float:
    """Integral bound for sum_{n > n0} n^s e^{-c n^theta} once the summand decreases."""
    a = (s + 1) / theta
    with mpmath.workdps(30):
        val = mpmath.gammainc(a, c * n0 ** theta) / theta * mpmath.mpf(c) ** (-a)
    return float(val)


def lr_series(s: float, c: float, theta: float, rtol: float = 1e-12) -> tuple[float, float]:
    """sum_{n>=1} n^s e^{-c n^theta} and a certified bound on the omitted tail."""
    if c <= 0 or theta <= 0:
        raise Divergent("series diverges unless a' < a and theta > 0")
    peak = (s / (c * theta)) ** (1 / theta) if s > 0 else 0.0
    total = 0.0
    n = 0
    while True:
        n += 1
        total += n ** s * math.exp(-c * n ** theta)
        if n >= peak + 1:
            tail = _series_tail(s, c, theta, n)
            if tail < rtol * total:
                return total, tail
        if n > 10**7:
            raise Divergent("series did not settle")


def lr_constant(d: int, a: float, a_prime: float, theta: float, p: float) -> float:
    """81 (3d+2) sum_n n^{p+4} e^{-(a-a') n^theta}."""
    if not a_prime < a:
        raise Divergent("need a' < a")
    if not 0 < theta <= 1:
        raise ValueError("need 0 < theta <= 1")
    if p < 0:
        raise ValueError("need p >= 0")
    total, tail = lr_series(p + 4, a - a_prime, theta)
    return 81 * (3 * d + 2) * (total + tail)


def lr_constant_closed_form(d: int, c: float, p: int) -> float:
    """theta = 1 case through the polylogarithm."""
    with mpmath.workdps(30):
        return float(81 * (3 * d + 2) * mpmath.polylog(-(p + 4), mpmath.e ** (-c)))


def _plaquette_index(x: Vertex) -> list[DualSite]:
    return [DualSite(*s) for s in plaquettes_of(x)]


@dataclass
class LRCheck:
    x: str
    y: str
    d: int
    distance: int
    lhs: float
    lhs_tail: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs + self.lhs_tail <= self.rhs


def lr_lhs(x: Vertex, y: Vertex, d: int, a: float, theta: float, n_max: int | None = None) -> tuple[float, float]:
    """sum over (z, n) with x, y in the n-volume around z of |volume| e^{-a n^theta}.

    Exact up to ``n_max`` plus an integral bound for the rest.  The default
    ``n_max`` is at least 60 and past the peak of n^4 e^{-a n^theta}, where
    the integral bound becomes valid.
    """
    if n_max is None:
        n_max = max(60, math.ceil((4 / (a * theta)) ** (1 / theta)) + 1)
    ix = np.array(_plaquette_index(x))
    iy = np.array(_plaquette_index(y))
    cx = ix[0]
    total = 0.0
    for n in range(1, n_max + 1):
        r = n - 1
        # candidate centres lie within r of some plaquette of x
        ks, ls = np.meshgrid(np.arange(-r - 2, r + 3), np.arange(-r - 2, r + 3), indexing="ij")
        zk = ks.ravel() + cx[0]
        zl = ls.ravel() + cx[1]
        dx = np.min([_dual_dist_vec(zk - p[0], zl - p[1]) for p in ix], axis=0)
        dy = np.min([_dual_dist_vec(zk - p[0], zl - p[1]) for p in iy], axis=0)
        count = int(np.count_nonzero((dx <= r) & (dy <= r)))
        if count:
            total += count * volume_size(n, d) * math.exp(-a * n ** theta)
    # at most 3 |ball of radius n-1| <= 9 n^2 centres, volumes <= 3(3d+2) n^2
    tail = 27 * (3 * d + 2) * _series_tail(4, a, theta, n_max) if n_max >= (4 / (a * theta)) ** (1 / theta) else math.inf
    return total, tail


def _dual_dist_vec(dk: np.ndarray, dl: np.ndarray) -> np.ndarray:
    same = dk * dl >= 0
    return np.where(same, np.maximum(np.abs(dk), np.abs(dl)), np.abs(dk) + np.abs(dl))


def lr_rhs(distance: int, d: int, a: float, a_prime: float, theta: float, p: float) -> float:
    s = distance / (4 * (d + 1)) + 0.25
    return lr_constant(d, a, a_prime, theta, p) * math.exp(-a_prime * s ** theta) / s ** p


def lr_check(x: Vertex, y: Vertex, d: int, a: float, a_prime: float, theta: float, p: float,
             n_max: int | None = None) -> LRCheck:
    dist = graph_distance(x, y, d)
    lhs, tail = lr_lhs(x, y, d, a, theta, n_max)
    return LRCheck(str(x), str(y), d, dist, lhs, tail, lr_rhs(dist, d, a, a_prime, theta, p))


# ---------------------------------------------------------------------------
# report


@dataclass
class ConstantsReport:
    d: int
    epsilon: float
    mu: float
    f_2emu: float
    kappa_bound: float
    beta_threshold: float
    r: float
    r_over_1mr: float
    alpha: float
    alpha_interval: tuple
    alpha_sign: int
    regime: bool
    log_C_alpha: float
    C_alpha: str
    G_alpha_examples: dict
    kappa_regularity: tuple
    lr: dict
    F_alpha_examples: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def constants_report(d: int, epsilon: float = EPSILON,
                     lr_params: tuple = (1.0, 0.5, 1.0, 0.0)) -> ConstantsReport:
    r, ratio = cluster_ratio(epsilon)
    examples, envelope = {}, {}
    c_alpha = "inf"
    if alpha(d) > 0:
        for n, k in ((10, 1), (100, 1), (1000, 10)):
            examples[f"{n},{k}"] = {"exp2": F_alpha(n, k, d, 2), "exp1": F_alpha(n, k, d, 1)}
        c_alpha = mpmath.nstr(mpmath.e ** log_C_alpha(d), 12)
        for rr in (1, 10**3, 10**6):
            envelope[str(rr)] = mpmath.nstr(ltqo_envelope(rr, d), 12)
    a, ap, theta, p = lr_params
    lr = {"a": a, "a_prime": ap, "theta": theta, "p": p, "C": lr_constant(d, a, ap, theta, p)}
    return ConstantsReport(
        d=d, epsilon=epsilon, mu=MU, f_2emu=F_AT_2E_MU, kappa_bound=KAPPA,
        beta_threshold=threshold_beta(epsilon), r=r, r_over_1mr=ratio, alpha=alpha(d, epsilon),
        alpha_interval=alpha_interval(d), alpha_sign=alpha_sign(d), regime=indistinguishability_regime(d),
        log_C_alpha=log_C_alpha(d), C_alpha=c_alpha, G_alpha_examples=envelope,
        kappa_regularity=(3 * (3 * d + 2), 2), lr=lr, F_alpha_examples=examples,
    )
