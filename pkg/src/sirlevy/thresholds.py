"""Closed-form persistence and extinction thresholds for the perturbed SIR model.

The deterministic system has reproduction number ``R0 = beta*A / (mu1*(mu2+gamma))``.
Under white noise on mortality (sigma1) and transmission (sigma2) plus
compensated multiplicative jumps, persistence in the mean is governed by

    R0s = (mu2 + gamma + sigma1^2/2)^-1
          * (beta*A/mu1 - A^2*sigma2^2/(mu1*chi3) - J)

with ``chi3 = 2*mu1 - sigma1^2 - integral((1+eta)^2 - 1 - eta)`` and jump
penalty ``J = integral(eta - ln(1+eta))``.  Extinction holds when either
``R0s_hat < 1`` together with ``sigma2^2 <= mu1*beta/A``, or the transmission
noise is strong enough that ``beta^2/(2*sigma2^2) - (mu2+gamma+sigma1^2/2) - J < 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import NonpositiveChi2, NonpositiveChi3
from .jumps import JumpMeasure, chi2_margin, jump_penalty, levy_moment

PEXP_CANDIDATES = (0.5, 0.75, 1.0, 1.5, 2.0)


@dataclass(frozen=True)
class EpidemicParameters:
    """Deterministic rates: recruitment a, mortalities mu1/mu2, transmission
    beta, recovery gamma.  mu2 = mu1 + alpha holds by construction."""

    a: float
    mu1: float
    alpha: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("a", "mu1", "alpha", "beta", "gamma"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")

    @property
    def mu2(self) -> float:
        return self.mu1 + self.alpha

    @classmethod
    def from_mortalities(cls, a, mu1, mu2, beta, gamma) -> "EpidemicParameters":
        if not mu2 > mu1:
            raise ValueError("mu2 must equal mu1 + alpha with alpha > 0")
        return cls(a=a, mu1=mu1, alpha=mu2 - mu1, beta=beta, gamma=gamma)

    def endemic_equilibrium(self) -> tuple[float, float, float]:
        """Stationary point of the noise-free system (meaningful for R0 > 1)."""
        s = (self.mu2 + self.gamma) / self.beta
        i = (self.a - self.mu1 * s) / (self.beta * s)
        r = self.gamma * i / self.mu1
        return s, i, r


@dataclass(frozen=True)
class NoiseSpec:
    """White-noise intensities plus the jump measure."""

    sigma1: float
    sigma2: float
    jump: JumpMeasure

    def __post_init__(self):
        if self.sigma1 < 0 or self.sigma2 < 0:
            raise ValueError("noise intensities must be nonnegative")


class Classification(Enum):
    PERSISTENT = "persistent"
    EXTINCT = "extinct"
    INDETERMINATE = "indeterminate"


def r0_deterministic(p: EpidemicParameters) -> float:
    # association matches the noise-adjusted thresholds so the noise-free
    # reduction is bit-exact
    return p.beta * p.a / p.mu1 / (p.mu2 + p.gamma)


def chi3(p: EpidemicParameters, n: NoiseSpec) -> float:
    """2*mu1 - sigma1^2 - integral((1+eta)^2 - 1 - eta); must be > 0 for R0s."""
    return 2.0 * p.mu1 - n.sigma1**2 - levy_moment(n.jump, 1.0)


def chi1_chi2(p: EpidemicParameters, n: NoiseSpec, pexp: float = 1.0) -> tuple[float, float]:
    """Growth/decay pair for the 2p-th moment of the total population.

    chi2 = mu1 - (2p-1)/2*sigma1^2 - ell(p)/(2p) must be positive;
    chi1 = sup_{x>0} (a*x^(2p-1) - chi2/2 * x^(2p)), attained at
    x* = (2p-1)*a / (p*chi2) for p > 1/2 and equal to a in the p = 1/2 limit.
    """
    if pexp < 0.5:
        raise ValueError(f"moment exponent must be >= 1/2, got {pexp}")
    c2 = chi2_margin(n.jump, n.sigma1, p.mu1, pexp)
    if c2 <= 0.0:
        raise NonpositiveChi2(f"chi2({pexp}) = {c2} <= 0")
    if pexp == 0.5:
        return p.a, c2
    xstar = (2.0 * pexp - 1.0) * p.a / (pexp * c2)
    c1 = p.a * xstar ** (2.0 * pexp - 1.0) - 0.5 * c2 * xstar ** (2.0 * pexp)
    return c1, c2


def r0s(p: EpidemicParameters, n: NoiseSpec) -> float:
    """Persistence threshold; requires chi3 > 0."""
    c3 = chi3(p, n)
    if c3 <= 0.0:
        raise NonpositiveChi3(f"chi3 = {c3} <= 0")
    num = p.beta * p.a / p.mu1 - p.a**2 * n.sigma2**2 / (p.mu1 * c3) - jump_penalty(n.jump)
    return num / (p.mu2 + p.gamma + 0.5 * n.sigma1**2)


def r0s_hat(p: EpidemicParameters, n: NoiseSpec) -> float:
    """Extinction-side threshold; defined for every valid input."""
    num = (
        p.beta * p.a / p.mu1
        - n.sigma2**2 * p.a**2 / (2.0 * p.mu1**2)
        - jump_penalty(n.jump)
    )
    return num / (p.mu2 + p.gamma + 0.5 * n.sigma1**2)


@dataclass(frozen=True)
class ThresholdReport:
    """Every derived scalar plus the persistence/extinction verdict.

    ``r0s``, ``chi1``..., and the persistence bound are None when chi3 <= 0
    (flagged in ``flags``).  Both sides of the mild-noise extinction condition
    are recorded: ``cond1_margin_sigma2`` (sigma2^2 - mu1*beta/a, the form the
    classification uses) and ``cond1_margin_sigma1`` (sigma1^2 - mu1*beta/a).
    """

    r0_det: float
    r0s: float | None
    r0s_hat: float
    chi1: float
    chi2: float
    chi3: float
    ell: float
    penalty: float
    persistence_lower_bound: float | None
    extinction_bound_cond2: float
    cond1_ok: bool
    cond2_ok: bool
    cond1_margin_sigma2: float
    cond1_margin_sigma1: float
    classification: Classification
    conflict: bool
    pexp: float
    pexp_feasible: float
    flags: tuple[str, ...]

    def to_record(self) -> dict[str, object]:
        """Flat key/value record, one row per scenario."""
        rec = {
            "r0_det": self.r0_det,
            "r0s": float("nan") if self.r0s is None else self.r0s,
            "r0s_hat": self.r0s_hat,
            "chi1": self.chi1,
            "chi2": self.chi2,
            "chi3": self.chi3,
            "ell": self.ell,
            "penalty": self.penalty,
            "persistence_lower_bound": (
                float("nan") if self.persistence_lower_bound is None else self.persistence_lower_bound
            ),
            "extinction_bound_cond2": self.extinction_bound_cond2,
            "cond1_ok": self.cond1_ok,
            "cond2_ok": self.cond2_ok,
            "cond1_margin_sigma2": self.cond1_margin_sigma2,
            "cond1_margin_sigma1": self.cond1_margin_sigma1,
            "classification": self.classification.value,
            "conflict": self.conflict,
            "pexp": self.pexp,
            "pexp_feasible": self.pexp_feasible,
            "flags": ",".join(self.flags),
        }
        return rec


def feasible_pexp(p: EpidemicParameters, n: NoiseSpec) -> float:
    """Largest candidate moment exponent with chi2(p) > 0 (p = 1/2 always works)."""
    best = 0.5
    for cand in PEXP_CANDIDATES:
        if chi2_margin(n.jump, n.sigma1, p.mu1, cand) > 0.0:
            best = max(best, cand)
    return best


def classify(p: EpidemicParameters, n: NoiseSpec, pexp: float = 1.0) -> ThresholdReport:
    """Fill every scalar and decide persistent / extinct / indeterminate.

    Persistence fires on R0s > 1, extinction on either sufficient condition.
    The conditions are sufficient but not exclusive, so a simultaneous fire is
    reported as indeterminate with ``conflict=True`` rather than resolved.
    """
    flags: list[str] = []
    c3 = chi3(p, n)
    pen = jump_penalty(n.jump)
    ell = levy_moment(n.jump, pexp)

    p_feasible = feasible_pexp(p, n)
    p_used = pexp
    try:
        c1, c2 = chi1_chi2(p, n, pexp)
    except NonpositiveChi2:
        p_used = p_feasible
        flags.append(f"chi2_nonpositive_at_p={pexp:g}")
        c1, c2 = chi1_chi2(p, n, p_used)

    value_r0s: float | None = None
    bound: float | None = None
    if c3 > 0.0:
        value_r0s = r0s(p, n)
        bound = (
            p.mu1
            / (p.beta * (p.mu2 + p.gamma))
            * (p.mu2 + p.gamma + 0.5 * n.sigma1**2)
            * (value_r0s - 1.0)
        )
    else:
        flags.append("nonpositive_chi3")

    hat = r0s_hat(p, n)
    m_s2 = n.sigma2**2 - p.mu1 * p.beta / p.a
    m_s1 = n.sigma1**2 - p.mu1 * p.beta / p.a
    cond1 = hat < 1.0 and m_s2 <= 0.0
    if n.sigma2**2 > 0.0:
        bound2 = p.beta**2 / (2.0 * n.sigma2**2) - (p.mu2 + p.gamma + 0.5 * n.sigma1**2) - pen
        cond2 = bound2 < 0.0
    else:
        # the quadratic-in-S bound degenerates as sigma2 -> 0
        bound2 = math.inf
        cond2 = False

    persistent = value_r0s is not None and value_r0s > 1.0
    extinct = cond1 or cond2
    conflict = persistent and extinct
    if conflict:
        classification = Classification.INDETERMINATE
    elif persistent:
        classification = Classification.PERSISTENT
    elif extinct:
        classification = Classification.EXTINCT
    else:
        classification = Classification.INDETERMINATE

    return ThresholdReport(
        r0_det=r0_deterministic(p),
        r0s=value_r0s,
        r0s_hat=hat,
        chi1=c1,
        chi2=c2,
        chi3=c3,
        ell=ell,
        penalty=pen,
        persistence_lower_bound=bound,
        extinction_bound_cond2=bound2,
        cond1_ok=cond1,
        cond2_ok=cond2,
        cond1_margin_sigma2=m_s2,
        cond1_margin_sigma1=m_s1,
        classification=classification,
        conflict=conflict,
        pexp=p_used,
        pexp_feasible=p_feasible,
        flags=tuple(flags),
    )
