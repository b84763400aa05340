"""Per-hop SNR laws: the RIS-assisted RF hop and the Gamma-Gamma FSO hop.

Every analytic CDF/PDF here has a sampler that draws from the physical
model, so the two can be checked against each other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import special

from .specfun import meijer_g_array

CDF_SLACK = 1e-9


class CdfRangeError(ArithmeticError):
    """An evaluated CDF left [0, 1] by more than rounding noise."""


def _clamp_probability(p: np.ndarray, what: str) -> np.ndarray:
    bad = (p < -CDF_SLACK) | (p > 1 + CDF_SLACK) | np.isnan(p)
    if np.any(bad):
        raise CdfRangeError(f"{what} evaluated outside [0, 1]: {p[bad][:5]}")
    return np.clip(p, 0.0, 1.0)


def _as_output(x, like):
    return float(x) if np.ndim(like) == 0 else x


# --------------------------------------------------------------------------
# RF hop
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class RfHopParams:
    """K i.i.d. RIS-assisted sources with N reflecting elements each."""

    K: int
    N: int
    gamma_bar_ur: float

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K}")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if not self.gamma_bar_ur > 0:
            raise ValueError(f"gamma_bar_ur must be positive, got {self.gamma_bar_ur}")

    @property
    def C(self) -> float:
        return rf_constant(self.N)


def rf_constant(N: int) -> float:
    """C = 1 + (N - 1) Gamma(3/2)^2 = 1 + (N - 1) pi / 4."""
    return 1.0 + (N - 1) * math.pi / 4.0


@dataclass(frozen=True)
class DegreeWeights:
    """Coefficients of ``(sum_{j<N} x^j / j!)^k``, lowest degree first."""

    k: int
    N: int
    coeffs: np.ndarray

    def __len__(self):
        return len(self.coeffs)


_WEIGHT_CACHE: dict[tuple[int, int], np.ndarray] = {}


def degree_weights(k: int, N: int) -> DegreeWeights:
    """Collapse the k nested sums over j_1..j_k of prod 1/j_n! by total degree.

    Built by repeated convolution, so the cost is polynomial in k and N.
    """
    if k < 0 or N < 1:
        raise ValueError("need k >= 0 and N >= 1")
    key = (k, N)
    if key not in _WEIGHT_CACHE:
        base = 1.0 / special.factorial(np.arange(N), exact=False)
        out = np.ones(1)
        for _ in range(k):
            out = np.convolve(out, base)
        out.setflags(write=False)
        _WEIGHT_CACHE[key] = out
    return DegreeWeights(k, N, _WEIGHT_CACHE[key])


def rf_single_cdf(gamma, params: RfHopParams):
    """CDF of one source's SNR under the Gamma(N, C * gamma_bar) approximation.

    ``1 - exp(-x) sum_{i<N} x^i / i!`` is the regularised lower incomplete
    gamma P(N, x); evaluating it that way avoids the cancellation at small x.
    """
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SNR must be nonnegative")
    out = special.gammainc(params.N, g / (params.C * params.gamma_bar_ur))
    return _as_output(out, gamma)


def rf_selected_cdf(gamma, params: RfHopParams, form: str = "power"):
    """CDF of the max-SNR source among K.

    ``form="power"`` raises the single-source CDF to the K-th power;
    ``form="binomial"`` sums the binomial expansion with degree weights.
    """
    if form == "power":
        out = np.asarray(rf_single_cdf(gamma, params)) ** params.K
        return _as_output(out, gamma)
    if form != "binomial":
        raise ValueError(f"unknown form {form!r}")
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SNR must be nonnegative")
    x = g / (params.C * params.gamma_bar_ur)
    total = np.zeros_like(x)
    for k in range(params.K + 1):
        w = degree_weights(k, params.N).coeffs
        poly = np.polynomial.polynomial.polyval(x, w)
        total = total + special.comb(params.K, k) * (-1) ** k * np.exp(-k * x) * poly
    return _as_output(total, gamma)


def rf_sample(rng: np.random.Generator, params: RfHopParams, size: int) -> np.ndarray:
    """Selected-source SNR from the exact coherent sum of Rayleigh amplitudes.

    Amplitudes have E[a^2] = 1 (Rayleigh scale 1/sqrt(2)); the RIS phases
    are assumed perfectly aligned so amplitudes add.
    """
    amps = rng.rayleigh(scale=math.sqrt(0.5), size=(size, params.K, params.N))
    per_source = params.gamma_bar_ur * amps.sum(axis=2) ** 2
    return per_source.max(axis=1)


# --------------------------------------------------------------------------
# FSO hop
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FsoHopParams:
    """Gamma-Gamma turbulence with pointing errors.

    ``r`` is 1 for heterodyne detection and 2 for IM/DD.
    """

    alpha: float
    beta: float
    zeta2: float
    r: int
    gamma_bar_rd: float

    def __post_init__(self):
        for name in ("alpha", "beta", "zeta2", "gamma_bar_rd"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.r not in (1, 2):
            raise ValueError(f"r must be 1 or 2, got {self.r}")

    @property
    def nu(self) -> float:
        return min(self.alpha, self.beta, self.zeta2)


@dataclass(frozen=True)
class FsoCdfConstants:
    A: float
    B: float
    chi1: tuple[float, ...]
    chi2: tuple[float, ...]


def fso_constants(params: FsoHopParams) -> FsoCdfConstants:
    r, al, be, z2 = params.r, params.alpha, params.beta, params.zeta2
    logA = (
        (al + be - 2) * math.log(r)
        + math.log(z2)
        - (r - 1) * math.log(2 * math.pi)
        - math.lgamma(al)
        - math.lgamma(be)
    )
    B = (al * be) ** r / r ** (2 * r)
    chi1 = tuple((z2 + i) / r for i in range(1, r + 1))
    chi2 = (
        tuple((z2 + i - 1) / r for i in range(1, r + 1))
        + tuple((al + i - 1) / r for i in range(1, r + 1))
        + tuple((be + i - 1) / r for i in range(1, r + 1))
    )
    return FsoCdfConstants(math.exp(logA), B, chi1, chi2)


def fso_pdf(gamma, params: FsoHopParams):
    """SNR density of the FSO hop (Meijer G^{3,0}_{1,3} form)."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g <= 0):
        raise ValueError("the FSO density is defined for gamma > 0")
    al, be, z2, r = params.alpha, params.beta, params.zeta2, params.r
    arg = al * be * (g / params.gamma_bar_rd) ** (1.0 / r)
    G = meijer_g_array(3, 0, (z2 + 1,), (z2, al, be), arg)
    out = z2 / (r * g * math.gamma(al) * math.gamma(be)) * G
    # the contour leaves rounding noise of order 1e-16 * peak at deep tails
    out = np.where((out < 0) & (out > -1e-14 * max(float(np.max(out)), 1e-300)), 0.0, out)
    if np.any(out < 0):
        raise CdfRangeError(f"FSO density evaluated negative: {out[out < 0][:5]}")
    return _as_output(out, gamma)


def fso_cdf(gamma, params: FsoHopParams):
    """FSO hop CDF, ``A G^{3r,1}_{r+1,3r+1}[(B / gamma_bar) gamma | 1, chi1; chi2, 0]``."""
    g = np.asarray(gamma, dtype=float)
    if np.any(g < 0):
        raise ValueError("SNR must be nonnegative")
    k = fso_constants(params)
    r = params.r
    out = np.zeros(g.shape)
    pos = g > 0
    if np.any(pos):
        z = k.B * g[pos] / params.gamma_bar_rd
        out[pos] = k.A * meijer_g_array(3 * r, 1, (1.0,) + k.chi1, k.chi2 + (0.0,), z)
    return _as_output(_clamp_probability(out, "FSO CDF"), gamma)


def fso_sample(rng: np.random.Generator, params: FsoHopParams, size: int) -> np.ndarray:
    """FSO SNR draws: gamma_bar * (I_a * U^(1/zeta^2))^r.

    I_a is the product of unit-mean Gamma(alpha) and Gamma(beta) variates;
    U^(1/zeta^2) is the normalised pointing-error gain, since a Rayleigh
    radial jitter makes exp(-2R^2/w^2) distributed as U^(1/zeta^2).
    """
    x = rng.gamma(params.alpha, 1.0 / params.alpha, size)
    y = rng.gamma(params.beta, 1.0 / params.beta, size)
    u = rng.random(size)
    # U = 0 has probability 2^-53; map it to the smallest positive double
    u = np.where(u == 0.0, np.finfo(float).tiny, u)
    return fso_transform(x * y, u, params)


def fso_transform(irradiance, uniform, params: FsoHopParams):
    return params.gamma_bar_rd * (irradiance * uniform ** (1.0 / params.zeta2)) ** params.r


# --------------------------------------------------------------------------
# bundles
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HopDistribution:
    """Analytic law of one hop with a sampler for the same hop."""

    name: str
    cdf: Callable[[np.ndarray], np.ndarray]
    sample: Callable[[np.random.Generator, int], np.ndarray]
    pdf: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exact: bool = True


def rf_hop(params: RfHopParams) -> HopDistribution:
    return HopDistribution(
        "RF",
        cdf=lambda g: rf_selected_cdf(g, params),
        sample=lambda rng, size: rf_sample(rng, params, size),
        exact=params.N == 1,
    )


def fso_hop(params: FsoHopParams) -> HopDistribution:
    return HopDistribution(
        "FSO",
        cdf=lambda g: fso_cdf(g, params),
        sample=lambda rng, size: fso_sample(rng, params, size),
        pdf=lambda g: fso_pdf(g, params),
    )
