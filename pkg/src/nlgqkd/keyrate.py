"""Finite-size and asymptotic key length arithmetic.

The finite key length is

    n g(w - d) - d1 sqrt(n) - d0 - (2 - w + d) n (gamma + kappa)
        - 2 theta(eps_s - eps_s' - 2 eps_s'') - l_EC - lambda_EC
        - 2 log2(1 / (eps_sec - 2 eps_s))

for an affine per-round entropy bound ``g``, observed winning probability
``w`` and tolerance ``d``. Logarithms are base 2 except inside the
Chernoff and Hoeffding exponents, which are natural.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from .entropy import (
    LOWER,
    UPPER,
    AffineBound,
    BoundCurve,
    affine_moe_bound,
    binary_entropy,
    constrained_affine_bound,
    min_tradeoff_from_g,
    tangent_of_curve,
)
from .games import msg_win_prob_closed_form

LN2 = math.log(2)
ETA = 2 * LN2 / (1 + 2 * LN2)
#: Extra bits subtracted in conservative mode.
CONSERVATIVE_BITS = 2.0


def _prob(x, name, lo_open=True):
    if not (0.0 < x <= 1.0 if lo_open else 0.0 <= x <= 1.0):
        raise ValueError(f"{name}={x} out of range")
    return float(x)


@dataclass(frozen=True)
class SecurityBudget:
    """Security parameters and the free smoothing split.

    ``eps_s`` bounds the smoothing of the final min-entropy; ``eps_s_prime``
    and ``eps_s_dprime`` are spent on the accumulated min-entropy and on the
    count of test rounds; ``eps_a`` lower-bounds the probability of passing
    parameter estimation.
    """

    eps_sec: float
    eps_corr: float
    eps_com_pe: float
    eps_com_ec: float
    eps_s: float
    eps_s_prime: float
    eps_s_dprime: float
    eps_a: float

    def __post_init__(self):
        for name in ("eps_sec", "eps_corr", "eps_com_pe", "eps_com_ec"):
            _prob(getattr(self, name), name)
        if not 0 < self.eps_s < self.eps_sec / 2:
            raise ValueError("eps_s must lie in (0, eps_sec/2)")
        if not 0 < self.eps_a <= self.eps_sec / 2:
            raise ValueError("eps_a must lie in (0, eps_sec/2]")
        if self.eps_s_prime <= 0 or self.eps_s_dprime <= 0:
            raise ValueError("eps_s_prime and eps_s_dprime must be positive")
        if self.smoothing_gap <= 0:
            raise ValueError("need eps_s - eps_s_prime - 2 eps_s_dprime > 0")

    @property
    def smoothing_gap(self):
        return self.eps_s - self.eps_s_prime - 2 * self.eps_s_dprime

    @classmethod
    def pedagogical(cls, eps_sec, eps_s=None, eps_corr=1e-6, eps_com_pe=1e-2, eps_com_ec=1e-2):
        """The standard split ``eps_a = eps_sec/2``, ``eps_s' = eps_s/2``, ``eps_s'' = eps_s/8``.

        ``eps_s`` defaults to ``eps_sec / 4``.
        """
        eps_s = eps_sec / 4 if eps_s is None else eps_s
        return cls(eps_sec, eps_corr, eps_com_pe, eps_com_ec, eps_s, eps_s / 2, eps_s / 8, eps_sec / 2)

    def with_split(self, eps_s, prime_frac=0.5, dprime_frac=0.125):
        return replace(
            self,
            eps_s=eps_s,
            eps_s_prime=prime_frac * eps_s,
            eps_s_dprime=dprime_frac * eps_s,
            eps_a=self.eps_sec / 2,
        )


def completeness_gamma(omega_exp, delta_tol, n, eps_com_pe):
    """Testing probability that makes honest parameter estimation fail w.p. at most ``eps``.

    ``(2(1 - w) + d) / (d^2 n) * ln(1/eps)``; the caller clamps it to at most 1.
    """
    if delta_tol <= 0:
        raise ValueError("delta_tol must be positive")
    if n < 1:
        raise ValueError("n must be at least 1")
    _prob(eps_com_pe, "eps_com_pe")
    return (2 * (1 - omega_exp) + delta_tol) / (delta_tol**2 * n) * math.log(1 / eps_com_pe)


def pe_failure_bound(omega_exp, delta_tol, n, gamma):
    """Chernoff bound on honest parameter-estimation failure; inverse of :func:`completeness_gamma`."""
    return math.exp(-(delta_tol**2) * gamma * n / (2 * (1 - omega_exp) + delta_tol))


def min_lec_for_correctness(eps_corr):
    """Hash length ``ceil(log2(1/eps_corr))`` for the verification step."""
    _prob(eps_corr, "eps_corr")
    return max(0, math.ceil(-math.log2(eps_corr)))


def theta(delta):
    """``-log2(1 - sqrt(1 - delta^2))``: smoothing cost, zero at ``delta = 1``."""
    if not 0 < delta <= 1:
        raise ValueError(f"smoothing parameter {delta} not in (0, 1]")
    # 1 - sqrt(1 - d^2) = d^2 / (1 + sqrt(1 - d^2)) avoids cancellation for small d.
    return -math.log2(delta**2 / (1 + math.sqrt(1 - delta**2)))


def kappa_min(n, eps_s_dprime):
    """Hoeffding slack on the fraction of test rounds: ``sqrt(-ln eps) / sqrt(n)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    _prob(eps_s_dprime, "eps_s_dprime")
    return math.sqrt(-math.log(eps_s_dprime)) / math.sqrt(n)


@dataclass(frozen=True)
class GeatConstants:
    d1: float
    d0: float
    eta: float
    V: float


def geat_constants(g, gamma, budget):
    """Second- and higher-order correction constants for an affine bound ``g``."""
    tradeoff = min_tradeoff_from_g(g, gamma)
    spread = tradeoff.max_f - tradeoff.min_sigma_bound
    V = math.log2(17) + math.sqrt(2 + tradeoff.var_bound)
    th = theta(budget.eps_s_prime)
    log_a = math.log2(1 / budget.eps_a)
    eta = ETA
    d1 = math.sqrt(2 * LN2 * V**2 / eta * (th + (2 - eta) * log_a))
    d0 = (
        ((2 - eta) * eta**2 * log_a + eta**2 * th)
        / (3 * LN2**2 * V**2 * (2 * eta - 1) ** 3)
        * 2 ** ((1 - eta) / eta * (2 + spread))
        * math.log(2 ** (2 + spread) + math.e**2) ** 3
    )
    return GeatConstants(d1, d0, eta, V)


@dataclass(frozen=True)
class ProtocolParams:
    """Protocol knobs: rounds, testing rate, tolerance and error-correction sizes."""

    n: int
    gamma: float
    delta_tol: float
    omega_exp: float
    lambda_ec: int
    l_ec: int
    xi: float = 1.1

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if not 0 < self.gamma <= 1:
            raise ValueError(f"gamma={self.gamma} not in (0, 1]")
        if self.delta_tol <= 0:
            raise ValueError("delta_tol must be positive")
        if not 0 <= self.omega_exp <= 1:
            raise ValueError("omega_exp must be a probability")
        if self.lambda_ec < 0 or self.l_ec < 0:
            raise ValueError("error-correction lengths must be nonnegative")

    @property
    def qber(self):
        return 1 - self.omega_exp

    @classmethod
    def standard(cls, n, omega_exp, eps_com_pe=1e-2, eps_corr=1e-6, xi=1.1, delta_tol=None):
        """Tolerance ``n^(-1/3)``, the matching testing rate, and ``lambda_EC = xi n h(Q)``."""
        d = n ** (-1 / 3) if delta_tol is None else delta_tol
        gamma = min(1.0, completeness_gamma(omega_exp, d, n, eps_com_pe))
        if gamma <= 0:
            raise ValueError("eps_com_pe = 1 gives a zero testing rate")
        q = max(0.0, 1 - omega_exp)
        lam = math.ceil(xi * n * binary_entropy(q) - 1e-9)
        return cls(int(n), gamma, d, omega_exp, max(lam, 0), min_lec_for_correctness(eps_corr), xi)


@dataclass(frozen=True)
class KeyRateReport:
    n: int
    l_key: int
    rate: float
    raw: float
    feasible: bool
    leading: float
    d1: float
    d0: float
    kappa: float
    theta_term: float
    V: float
    eta: float
    gamma: float
    delta_tol: float
    beta: float = float("nan")
    eps_s: float = float("nan")
    eps_s_prime: float = float("nan")
    eps_s_dprime: float = float("nan")
    conservative: bool = False
    terms: dict = field(default_factory=dict, compare=False)


def finite_key_length(g, params, budget, conservative=False, beta=float("nan")):
    """Secure key length for one choice of bound and smoothing split.

    ``l_key`` is the floor of the bound clamped at zero; ``raw`` keeps the
    real-valued bound. ``conservative`` subtracts two further bits.
    """
    if budget.eps_sec - 2 * budget.eps_s <= 0:
        raise ValueError("need eps_sec - 2 eps_s > 0")
    n, w, d = params.n, params.omega_exp, params.delta_tol
    c = geat_constants(g, params.gamma, budget)
    kappa = kappa_min(n, budget.eps_s_dprime)
    terms = {
        "leading": n * g(w - d),
        "d1": c.d1 * math.sqrt(n),
        "d0": c.d0,
        "test_rounds": (2 - w + d) * n * (params.gamma + kappa),
        "theta": 2 * theta(budget.smoothing_gap),
        "l_ec": float(params.l_ec),
        "lambda_ec": float(params.lambda_ec),
        "pa": 2 * math.log2(1 / (budget.eps_sec - 2 * budget.eps_s)),
        "conservative": CONSERVATIVE_BITS if conservative else 0.0,
    }
    raw = terms["leading"] - sum(v for k, v in terms.items() if k != "leading")
    l_key = max(0, math.floor(raw)) if math.isfinite(raw) else 0
    return KeyRateReport(
        n=n,
        l_key=l_key,
        rate=l_key / n,
        raw=raw,
        feasible=raw > 0,
        leading=terms["leading"],
        d1=c.d1,
        d0=c.d0,
        kappa=kappa,
        theta_term=terms["theta"],
        V=c.V,
        eta=c.eta,
        gamma=params.gamma,
        delta_tol=d,
        beta=beta,
        eps_s=budget.eps_s,
        eps_s_prime=budget.eps_s_prime,
        eps_s_dprime=budget.eps_s_dprime,
        conservative=conservative,
        terms=terms,
    )


def asymptotic_rate(g, omega_exp, qber=None, xi=1.0):
    """``g(w) - xi h(Q)`` with ``Q = 1 - w`` unless given."""
    q = 1 - omega_exp if qber is None else qber
    return float(g(omega_exp)) - xi * binary_entropy(min(max(q, 0.0), 1.0))


def devetak_winter(h_bound, qber):
    """One-way rate ``H(S_A|E) - h(Q)`` from an entropy lower bound."""
    if not 0 <= h_bound <= 1 or not 0 <= qber <= 0.5:
        raise ValueError("need h_bound in [0, 1] and qber in [0, 1/2]")
    return h_bound - binary_entropy(qber)


# Families of affine bounds indexed by the tangent point beta


class BoundFamily:
    """Affine bounds ``g_beta`` for ``beta`` in ``beta_range``."""

    beta_range = (0.0, 1.0)

    def bound(self, beta):
        raise NotImplementedError

    def clip(self, beta):
        lo, hi = self.beta_range
        return min(max(beta, lo), hi)

    def best_value(self, omega):
        """``max_beta g_beta(omega)``.

        Every family here is the set of tangents of a convex function, so the
        best tangent at ``omega`` is the one touching there (or at the nearest
        end of the range).
        """
        return float(self.bound(self.clip(omega))(omega))


@dataclass(frozen=True)
class MoeFamily(BoundFamily):
    """Tangents of ``-log2(1 - p + omega3)`` for ``beta`` in ``[omega3, omega2]``."""

    omega2: float
    omega3: float

    def __post_init__(self):
        if not 0 <= self.omega3 <= self.omega2 <= 1:
            raise ValueError("need 0 <= omega3 <= omega2 <= 1")

    @property
    def beta_range(self):
        return (self.omega3, self.omega2)

    def bound(self, beta):
        return affine_moe_bound(beta, self.omega3)


@dataclass(frozen=True, eq=False)
class CurveFamily(BoundFamily):
    """Tangents built from a tabulated curve of either kind."""

    curve: BoundCurve

    @property
    def beta_range(self):
        return self.curve.domain

    def bound(self, beta):
        if self.curve.kind == UPPER:
            return constrained_affine_bound(beta, self.curve)
        return tangent_of_curve(self.curve, beta)


class ZeroFamily(BoundFamily):
    """The trivial bound ``g = 0``."""

    def bound(self, beta):
        return AffineBound(0.0, 0.0)


def as_family(source):
    """Accept a family, a curve, an ``(omega2, omega3)`` pair or ``None`` (trivial bound)."""
    if isinstance(source, BoundFamily):
        return source
    if isinstance(source, BoundCurve):
        return CurveFamily(source)
    if source is None:
        return ZeroFamily()
    omega2, omega3 = source
    return MoeFamily(omega2, omega3)


def _eps_grid(eps_sec, points):
    return np.geomspace(eps_sec * 1e-10, eps_sec / 2, points + 1)[:-1]


def _split_grid():
    fracs = np.geomspace(1e-3, 0.9, 8)
    return [(a, b) for a in fracs for b in fracs if a + 2 * b < 0.999]


def optimize_finite_rate(
    source,
    params,
    budget,
    conservative=False,
    eps_s_grid=None,
    n_eps=60,
    beta_tol=1e-6,
    beta_scan=33,
    exhaustive=False,
):
    """Maximise the finite key length over ``beta`` and the smoothing split.

    For each ``eps_s`` on a log grid in ``(0, eps_sec/2)`` the tangent point
    is found by a coarse scan followed by a bounded scalar search to width
    ``beta_tol``. The split ``eps_s' = eps_s/2``, ``eps_s'' = eps_s/8`` is
    fixed unless ``exhaustive`` also grids those fractions. Everything is
    deterministic in its inputs.
    """
    family = as_family(source)
    lo, hi = family.beta_range
    grid = _eps_grid(budget.eps_sec, n_eps) if eps_s_grid is None else np.asarray(eps_s_grid)
    splits = _split_grid() if exhaustive else [(0.5, 0.125)]

    def evaluate(beta, b):
        g = family.bound(beta)
        if g.slope < 0:
            return None
        return finite_key_length(g, params, b, conservative, beta)

    best = None
    for eps_s in grid:
        for fp, fd in splits:
            b = budget.with_split(float(eps_s), fp, fd)

            def objective(beta, b=b):
                r = evaluate(beta, b)
                return math.inf if r is None else -r.raw

            betas = np.linspace(lo, hi, beta_scan) if hi > lo else np.array([lo])
            vals = [objective(x) for x in betas]
            k = int(np.argmin(vals))
            cands = [betas[k]]
            if hi > lo:
                a, c = betas[max(k - 1, 0)], betas[min(k + 1, len(betas) - 1)]
                res = minimize_scalar(objective, bounds=(a, c), method="bounded", options={"xatol": beta_tol})
                cands.append(float(res.x))
            for beta in cands:
                r = evaluate(float(beta), b)
                if r is not None and (best is None or r.raw > best.raw):
                    best = r
    if best is None:
        raise ValueError("no admissible bound in the family")
    return best


def fixed_point_rate(source, params, budget, beta, conservative=False):
    """Key length at one fixed ``beta`` and the budget's own split."""
    g = as_family(source).bound(beta)
    return finite_key_length(g, params, budget, conservative, beta)


# Positivity and noise robustness


@dataclass(frozen=True)
class RegionCell:
    omega2: float
    omega3: float
    rate: float
    positive: bool


def positivity_cell(omega2, omega3, xi=1.1):
    """Best asymptotic rate of the generic affine bound for one game's values."""
    fam = MoeFamily(omega2, omega3)
    rate = fam.best_value(omega2) - xi * binary_entropy(1 - omega2)
    return RegionCell(float(omega2), float(omega3), float(rate), bool(rate > 0))


def positivity_region(omega2_values, omega3_values, xi=1.1):
    """Evaluate every grid cell with ``omega3 <= omega2``, sorted by (omega2, omega3)."""
    cells = [
        positivity_cell(w2, w3, xi)
        for w2 in sorted(omega2_values)
        for w3 in sorted(omega3_values)
        if w3 <= w2
    ]
    return cells


def noisy_asymptotic_rate(source, q, xi=1.0, noise=msg_win_prob_closed_form):
    """Best asymptotic rate at depolarizing strength ``q``."""
    omega = noise(q)
    fam = as_family(source)
    lo, hi = fam.beta_range
    # below the bound's domain only the trivial bound H >= 0 is available
    value = fam.best_value(omega) if omega >= lo else 0.0
    return value - xi * binary_entropy(min(max(1 - omega, 0.0), 1.0))


@dataclass(frozen=True)
class Threshold:
    q_star: float
    rate_at_zero: float
    rate_at_max: float
    bracketed: bool


def robustness_threshold(source, xi=1.0, tol=1e-5, q_max=0.5, noise=msg_win_prob_closed_form):
    """Noise level where the asymptotic rate first reaches zero, by bisection.

    Without a sign change the endpoint is reported: 0 if the rate is never
    positive, ``q_max`` if it never drops to zero.
    """

    def rate(q):
        return noisy_asymptotic_rate(source, q, xi, noise)

    r0, r1 = rate(0.0), rate(q_max)
    if r0 <= 0:
        return Threshold(0.0, r0, r1, False)
    if r1 > 0:
        return Threshold(q_max, r0, r1, False)
    q = bisect(rate, 0.0, q_max, xtol=tol)
    return Threshold(float(q), r0, r1, True)
