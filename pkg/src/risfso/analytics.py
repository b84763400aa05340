"""End-to-end outage, ASEP and high-SNR asymptotics for the dual-hop link."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, special

from . import specfun
from .channels import (
    FsoHopParams,
    RfHopParams,
    degree_weights,
    fso_cdf,
    fso_constants,
    rf_selected_cdf,
)

# relative cancellation error above which the closed-form ASEP is abandoned
ASEP_CANCEL_RTOL = 1e-8
# rounding assumed per closed-form term when estimating that error
_TERM_ROUNDING = 1e-15
NEAR_POLE_TOL = 1e-6


@dataclass(frozen=True)
class Modulation:
    """Constants of the conditional error ``a Q(sqrt(2 b gamma))``."""

    a: float = 1.0
    b: float = 1.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError("modulation constants must be positive")


BPSK = Modulation(1.0, 1.0)


@dataclass(frozen=True)
class SystemParams:
    rf: RfHopParams
    fso: FsoHopParams
    gamma_out: float = 1.0
    modulation: Modulation = BPSK

    def __post_init__(self):
        if not self.gamma_out > 0:
            raise ValueError(f"gamma_out must be positive, got {self.gamma_out}")

    def with_snr(self, gamma_bar_ur: Optional[float] = None, gamma_bar_rd: Optional[float] = None):
        rf = self.rf if gamma_bar_ur is None else replace(self.rf, gamma_bar_ur=gamma_bar_ur)
        fso = self.fso if gamma_bar_rd is None else replace(self.fso, gamma_bar_rd=gamma_bar_rd)
        return replace(self, rf=rf, fso=fso)


# --------------------------------------------------------------------------
# CDF and outage
# --------------------------------------------------------------------------


def e2e_cdf(gamma, params: SystemParams, form: str = "product"):
    """CDF of min(first hop, second hop) SNR.

    ``form="product"`` is ``F1 + F2 - F1 F2``; ``form="expanded"`` is the
    fully expanded binomial sum with the FSO CDF distributed over it.
    """
    F2 = np.asarray(fso_cdf(gamma, params.fso))
    if form == "product":
        F1 = np.asarray(rf_selected_cdf(gamma, params.rf))
        out = F1 + F2 - F1 * F2
    elif form == "expanded":
        rf = params.rf
        x = np.asarray(gamma, dtype=float) / (rf.C * rf.gamma_bar_ur)
        acc = np.zeros_like(x)
        for k in range(rf.K + 1):
            w = degree_weights(k, rf.N).coeffs
            acc = acc + special.comb(rf.K, k) * (-1) ** k * np.exp(-k * x) * (
                np.polynomial.polynomial.polyval(x, w)
            )
        out = acc * (1.0 - F2) + F2
    else:
        raise ValueError(f"unknown form {form!r}")
    return float(out) if np.ndim(gamma) == 0 else out


def outage(params: SystemParams) -> float:
    """Probability that the end-to-end SNR is at most ``gamma_out``."""
    return e2e_cdf(params.gamma_out, params)


# --------------------------------------------------------------------------
# ASEP
# --------------------------------------------------------------------------


def sep_kernel(gamma, a: float, b: float):
    """Conditional symbol error ``a Q(sqrt(2 b gamma))``."""
    return a * special.ndtr(-np.sqrt(2.0 * b * np.asarray(gamma, dtype=float)))


def _asep_meijer(params: SystemParams, s: int, lam: float) -> float:
    """A * G^{3r,2}_{r+2,3r+1}[B / (lam gamma_rd) | 1/2 - s, 1, chi1; chi2, 0]."""
    fso = params.fso
    k = fso_constants(fso)
    r = fso.r
    spec = specfun.MeijerGSpec(
        3 * r, 2, r + 2, 3 * r + 1,
        (0.5 - s, 1.0) + k.chi1,
        k.chi2 + (0.0,),
        k.B / (lam * fso.gamma_bar_rd),
    )
    return k.A * specfun.meijer_g(spec)


@dataclass(frozen=True)
class AsepBreakdown:
    value: float
    terms: tuple[float, ...]
    error_estimate: float
    used_fallback: bool


def asep_closed_terms(params: SystemParams) -> AsepBreakdown:
    """Closed-form ASEP with the error bookkeeping exposed.

    The k = 0 term and the standalone Meijer term cancel exactly and are
    replaced by a/2; the remaining k >= 1 corrections are summed with
    ``math.fsum``.
    """
    rf, mod = params.rf, params.modulation
    a, b = mod.a, mod.b
    pref = a * math.sqrt(b) / (2.0 * math.sqrt(math.pi))
    cg = rf.C * rf.gamma_bar_ur
    terms = [a / 2.0]
    magnitude = a / 2.0
    for k in range(1, rf.K + 1):
        lam = k / cg + b
        log_binom = special.gammaln(rf.K + 1) - special.gammaln(k + 1) - special.gammaln(rf.K - k + 1)
        sign = -1.0 if k % 2 else 1.0
        weights = degree_weights(k, rf.N).coeffs
        for s, c_s in enumerate(weights):
            log_w = log_binom + math.log(c_s) - s * math.log(cg) - (s + 0.5) * math.log(lam)
            w = pref * math.exp(log_w)
            gam = math.gamma(s + 0.5)
            mg = _asep_meijer(params, s, lam)
            terms.append(sign * w * (gam - mg))
            magnitude += w * (gam + abs(mg))
    value = math.fsum(terms)
    err = _TERM_ROUNDING * magnitude
    return AsepBreakdown(value, tuple(terms), err, False)


def asep_closed(params: SystemParams) -> float:
    """Average symbol error probability from the closed form.

    Falls back to :func:`asep_quadrature` when the alternating binomial sum
    cancels beyond ``ASEP_CANCEL_RTOL`` relative error.
    """
    res = asep_closed_terms(params)
    if res.value <= 0 or res.error_estimate > ASEP_CANCEL_RTOL * abs(res.value):
        return asep_quadrature(params)
    return res.value


def _quadrature_breaks(params: SystemParams, upper: float) -> list[float]:
    # SNR scales where the hop CDFs change shape, mapped to t = sqrt(gamma)
    k = fso_constants(params.fso)
    scales = [params.rf.C * params.rf.gamma_bar_ur, params.fso.gamma_bar_rd / k.B]
    pts = set()
    for sc in scales:
        for mult in (1e-2, 1e-1, 1.0, 10.0):
            t = math.sqrt(sc * mult)
            if 0 < t < upper:
                pts.add(t)
    return sorted(pts)


def asep_quadrature(
    params: SystemParams, cdf: Optional[Callable[[np.ndarray], np.ndarray]] = None
) -> float:
    """ASEP = (a sqrt(b) / 2 sqrt(pi)) * int_0^inf exp(-b g) g^(-1/2) F_D(g) dg.

    Computed as ``2 int_0^inf exp(-b t^2) F_D(t^2) dt`` so the endpoint
    singularity disappears. ``cdf`` replaces F_D (for degenerate checks).
    """
    a, b = params.modulation.a, params.modulation.b
    F = cdf if cdf is not None else (lambda g: e2e_cdf(g, params))
    upper = math.sqrt(745.0 / b)

    def integrand(t):
        return math.exp(-b * t * t) * float(F(t * t))

    breaks = [0.0] + _quadrature_breaks(params, upper) + [upper]
    total = 0.0
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-11, limit=200)
        total += val
    return a * math.sqrt(b) / math.sqrt(math.pi) * total


# --------------------------------------------------------------------------
# asymptotics
# --------------------------------------------------------------------------


class Hop(enum.Enum):
    RF = "RF"
    FSO = "FSO"
    TIE = "TIE"


@dataclass(frozen=True)
class AsymptoteReport:
    """High-SNR outage ``P ~ first_hop_term + second_hop_term``."""

    diversity_order: float
    coding_gain: Optional[float]
    dominant_hop: Hop
    upsilon: float
    rf_exponent: int
    fso_exponent: float
    rf_coding_gain: float
    fso_coding_gain: float
    near_degenerate: bool
    gamma_out: float
    C: float
    N: int
    K: int

    def first_hop_term_at(self, gamma_bar_ur: float) -> float:
        return (self.rf_coding_gain * gamma_bar_ur) ** (-self.rf_exponent)

    def second_hop_term_at(self, gamma_bar_rd: float) -> float:
        return (self.fso_coding_gain * gamma_bar_rd) ** (-self.fso_exponent)

    def outage_at(self, gamma_bar_ur: float, gamma_bar_rd: float) -> float:
        return self.first_hop_term_at(gamma_bar_ur) + self.second_hop_term_at(gamma_bar_rd)


# level of the leading FSO term at which a degenerate Upsilon is pinned
UPSILON_REFERENCE_LEVEL = 1e-4


def _upsilon(fso: FsoHopParams) -> tuple[float, bool]:
    """Constant of the small-SNR FSO law ``F ~ Upsilon (g / g_bar)^(nu / r)``.

    Keeps only the pole at nu / r. When another pole sits within
    NEAR_POLE_TOL (for instance beta = zeta^2) the law picks up a slowly
    varying log factor and no true constant exists; the pair is then
    summed at +/- perturbed parameters and Upsilon is read off at
    ``g / g_bar = UPSILON_REFERENCE_LEVEL^(r / nu)``, or at the first
    decade below it where the log-corrected term is positive. The second
    value returned flags that case.
    """
    k = fso_constants(fso)
    r = fso.r
    a = (1.0,) + k.chi1
    b = list(k.chi2) + [0.0]
    m = 3 * r
    lead = int(np.argmin(b[:m]))
    exponent = b[lead]
    near = [j for j in range(m) if j != lead and abs(b[j] - b[lead]) < NEAR_POLE_TOL]
    if not near and not specfun.pole_layout(m, b).has_collision:
        c = specfun.leading_residue(m, 1, a, b, lead)
        return k.A * c * k.B ** exponent, False
    group = [lead] + near
    movers = list(near)
    for grp in specfun.pole_layout(m, b).collision_groups:
        anchor = lead if lead in grp else grp[0]
        movers += [j for j in grp if j != anchor and j not in movers]
    pairs = []
    for sgn in (1.0, -1.0):
        bp = list(b)
        for rank, j in enumerate(movers, start=1):
            bp[j] += sgn * rank * specfun.PERTURB_EPS
        pairs.append([(specfun.leading_residue(m, 1, a, bp, j), bp[j]) for j in group])

    def leading(x):
        # leading FSO CDF term at g / g_bar = x
        return k.A * 0.5 * sum(c * (k.B * x) ** e for terms in pairs for c, e in terms)

    if not near:
        return leading(1.0), False
    # the log-corrected leading term can be negative at moderate SNR; step
    # down until it is positive
    x = UPSILON_REFERENCE_LEVEL ** (1.0 / exponent)
    for _ in range(60):
        val = leading(x)
        if val > 0:
            break
        x *= 0.1
    else:
        raise ArithmeticError("could not pin a positive Upsilon near the degenerate pole pair")
    return val / x ** exponent, True


def asymptote(params: SystemParams) -> AsymptoteReport:
    """Diversity order, coding gain and the dominant hop at high SNR."""
    rf, fso = params.rf, params.fso
    KN = rf.K * rf.N
    fso_exp = fso.nu / fso.r
    ups, degenerate = _upsilon(fso)
    rf_gain = rf.C * math.factorial(rf.N) ** (1.0 / rf.N) / params.gamma_out
    fso_gain = ups ** (-1.0 / fso_exp) / params.gamma_out
    if math.isclose(KN, fso_exp, rel_tol=1e-12):
        hop, gain = Hop.TIE, None
    elif KN < fso_exp:
        hop, gain = Hop.RF, rf_gain
    else:
        hop, gain = Hop.FSO, fso_gain
    return AsymptoteReport(
        diversity_order=min(KN, fso_exp),
        coding_gain=gain,
        dominant_hop=hop,
        upsilon=ups,
        rf_exponent=KN,
        fso_exponent=fso_exp,
        rf_coding_gain=rf_gain,
        fso_coding_gain=fso_gain,
        near_degenerate=degenerate,
        gamma_out=params.gamma_out,
        C=rf.C,
        N=rf.N,
        K=rf.K,
    )


def asymptotic_outage(params: SystemParams) -> float:
    rep = asymptote(params)
    return rep.outage_at(params.rf.gamma_bar_ur, params.fso.gamma_bar_rd)


class DegenerateFitError(ValueError):
    pass


def fit_diversity_slope(curve: Sequence[tuple[float, float]]) -> float:
    """Negated least-squares slope of log10(P) against SNR_dB / 10."""
    pts = np.asarray(curve, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 4:
        raise DegenerateFitError("need at least 4 (SNR_dB, probability) points")
    x, p = pts[:, 0] / 10.0, pts[:, 1]
    if np.any(p <= 0):
        raise DegenerateFitError("probabilities must be positive")
    if np.any(np.diff(x) <= 0):
        raise DegenerateFitError("SNR values must be strictly increasing")
    if np.ptp(x) == 0:
        raise DegenerateFitError("zero spread in SNR")
    slope = np.polyfit(x, np.log10(p), 1)[0]
    return float(-slope)
