"""Gamma-family helpers and real-argument Meijer G evaluation.

Two independent evaluators are provided:

* ``meijer_g_series`` sums the residues of the right-hand pole families
  (the small-argument expansion, continued to all orders).
* ``meijer_g_contour`` integrates the Mellin-Barnes integrand along a
  vertical line.

``meijer_g`` dispatches between them and repairs pole collisions by
symmetric parameter perturbation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import mpmath
import numpy as np
from scipy import optimize, special

COLLISION_TOL = 1e-9
PERTURB_EPS = 1e-5
REPAIR_EPS = 1e-3
_RICHARDSON = (1.5, -0.6, 0.1)
SERIES_RTOL = 1e-16
SERIES_MAX_TERMS = 500
CONTOUR_DECAY = 1e-18
_LOOKAHEAD = 4


class MeijerGError(ArithmeticError):
    """Base class for Meijer G evaluation failures."""


class PoleCollisionError(MeijerGError):
    """Two lower parameters of the residue families differ by an integer."""


class SeriesConvergenceError(MeijerGError):
    """Residue series did not converge or lost too many digits."""


class ContourError(MeijerGError):
    """No separating contour exists or the line integral failed."""


class GammaPoleError(ValueError):
    """Gamma function evaluated at a non-positive integer."""


def _is_nonpositive_int(x: float) -> bool:
    return x <= 0 and x == math.floor(x)


def ln_gamma(x: float) -> float:
    """Return ``log|Gamma(x)|``; the sign is available from :func:`gamma_sign`."""
    x = float(x)
    if _is_nonpositive_int(x):
        raise GammaPoleError(f"Gamma has a pole at x={x}")
    return math.lgamma(x)


def gamma_sign(x: float) -> int:
    x = float(x)
    if _is_nonpositive_int(x):
        raise GammaPoleError(f"Gamma has a pole at x={x}")
    if x > 0:
        return 1
    return -1 if math.floor(x) % 2 else 1


@dataclass(frozen=True)
class MeijerGSpec:
    """Real Meijer G-function ``G^{m,n}_{p,q}[z | a; b]`` with z > 0."""

    m: int
    n: int
    p: int
    q: int
    a_params: tuple[float, ...]
    b_params: tuple[float, ...]
    z: float

    def __post_init__(self):
        object.__setattr__(self, "a_params", tuple(float(v) for v in self.a_params))
        object.__setattr__(self, "b_params", tuple(float(v) for v in self.b_params))
        if len(self.a_params) != self.p or len(self.b_params) != self.q:
            raise ValueError(
                f"expected {self.p} upper and {self.q} lower parameters, got "
                f"{len(self.a_params)} and {len(self.b_params)}"
            )
        if not (0 <= self.n <= self.p and 0 <= self.m <= self.q):
            raise ValueError(f"invalid orders m={self.m}, n={self.n}, p={self.p}, q={self.q}")
        if self.p > self.q:
            raise ValueError("only p <= q is supported")
        if not self.z > 0 or not math.isfinite(self.z):
            raise ValueError(f"z must be a positive finite real, got {self.z}")

    @property
    def shape(self) -> tuple:
        return (self.m, self.n, self.a_params, self.b_params)

    def with_z(self, z: float) -> "MeijerGSpec":
        return MeijerGSpec(self.m, self.n, self.p, self.q, self.a_params, self.b_params, z)

    def with_b(self, b_params) -> "MeijerGSpec":
        return MeijerGSpec(self.m, self.n, self.p, self.q, self.a_params, tuple(b_params), self.z)


@dataclass(frozen=True)
class PoleLayout:
    """Right-hand pole families of a spec, grouped by integer-spaced collisions.

    ``simple_poles`` lists ``(b_k, ok)`` for k < m where ``ok`` means the
    residue series may be used for that family as is.
    """

    simple_poles: tuple[tuple[float, bool], ...]
    collision_groups: tuple[tuple[int, ...], ...] = field(default=())

    @property
    def has_collision(self) -> bool:
        return any(len(g) > 1 for g in self.collision_groups)


def pole_layout(m: int, b_params, tol: float = COLLISION_TOL) -> PoleLayout:
    b = list(b_params[:m])
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(m):
        for j in range(i + 1, m):
            d = b[i] - b[j]
            if abs(d - round(d)) < tol:
                parent[find(j)] = find(i)
    groups: dict[int, list[int]] = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    collision_groups = tuple(tuple(g) for g in sorted(groups.values()))
    in_collision = {i for g in collision_groups if len(g) > 1 for i in g}
    simple = tuple((b[i], i not in in_collision) for i in range(m))
    return PoleLayout(simple, collision_groups)


# --------------------------------------------------------------------------
# residue series
# --------------------------------------------------------------------------


_LD = np.longdouble
_LD_EPS = float(np.finfo(_LD).eps)
# accepted rounding error of a series value, relative to the value; the
# estimate is (largest term) * (terms used) * eps, since each term carries
# error proportional to its index from the recurrence and from z^l
SERIES_ACCURACY = 1e-13


def _mp_recip_gamma(x):
    return mpmath.rgamma(x)


@lru_cache(maxsize=8192)
def _residue_coefficients(m: int, n: int, a: tuple, b: tuple):
    """Per-pole base residues and term ratios for the z^(b_k + l) series.

    Returns ``(base, ratio)``: ``base[k]`` is the l = 0 coefficient of the
    k-th family as a long double, ``ratio[k, l]`` is ``c_{l+1} / c_l``
    (without the factor z). The base values come from 30-digit Gamma
    products so only the recurrence carries extended-double rounding.
    """
    base = np.zeros(m, dtype=_LD)
    ratio = np.zeros((m, SERIES_MAX_TERMS), dtype=_LD)
    ell = np.arange(SERIES_MAX_TERMS, dtype=_LD)
    a_ld = np.asarray(a, dtype=_LD)
    b_ld = np.asarray(b, dtype=_LD)
    with mpmath.workdps(30):
        for k in range(m):
            bk = mpmath.mpf(b[k])
            c = mpmath.mpf(1)
            for j in range(m):
                if j != k:
                    c *= mpmath.gamma(mpmath.mpf(b[j]) - bk)
            for j in range(n):
                x = 1 - mpmath.mpf(a[j]) + bk
                if x <= 0 and x == mpmath.floor(x):
                    raise ContourError(
                        f"left pole family of a_{j + 1} meets right pole b_{k + 1}={b[k]}; "
                        "no separating contour exists"
                    )
                c *= mpmath.gamma(x)
            for j in range(m, len(b)):
                c *= _mp_recip_gamma(1 - mpmath.mpf(b[j]) + bk)
            for j in range(n, len(a)):
                c *= _mp_recip_gamma(mpmath.mpf(a[j]) - bk)
            base[k] = _LD(mpmath.nstr(c, 25, strip_zeros=False)) if c != 0 else _LD(0)
            bkl = b_ld[k]
            num = np.ones(SERIES_MAX_TERMS, dtype=_LD)
            den = ell + 1
            for j in range(n):
                num = num * (1 - a_ld[j] + bkl + ell)
            for j in range(n, len(a)):
                num = num * (a_ld[j] - bkl - ell - 1)
            for j in range(m):
                if j != k:
                    den = den * (b_ld[j] - bkl - ell - 1)
            for j in range(m, len(b)):
                den = den * (1 - b_ld[j] + bkl + ell)
            zero_den = den == 0
            if zero_den.any():
                # 1/Gamma(1 - b_j + b_k + l) vanishes for a leading run of l;
                # the recurrence cannot restart from zero, so rebuild from scratch
                ratio[k] = np.nan
            else:
                ratio[k] = -num / den
    return base, ratio


def _direct_coefficients(m, n, a, b, k, count):
    """Coefficients of pole family k computed one by one (slow path)."""
    out = np.zeros(count, dtype=_LD)
    with mpmath.workdps(30):
        bk = mpmath.mpf(b[k])
        for ell in range(count):
            c = (-1) ** ell / mpmath.factorial(ell)
            for j in range(m):
                if j != k:
                    c *= mpmath.gamma(mpmath.mpf(b[j]) - bk - ell)
            for j in range(n):
                c *= mpmath.gamma(1 - mpmath.mpf(a[j]) + bk + ell)
            for j in range(m, len(b)):
                c *= _mp_recip_gamma(1 - mpmath.mpf(b[j]) + bk + ell)
            for j in range(n, len(a)):
                c *= _mp_recip_gamma(mpmath.mpf(a[j]) - bk - ell)
            out[ell] = _LD(mpmath.nstr(c, 25)) if c != 0 else _LD(0)
    return out


@lru_cache(maxsize=1024)
def _direct_cached(m, n, a, b, k):
    return _direct_coefficients(m, n, a, b, k, 120)


def _pole_terms(m, n, a, b, k, lz: np.ndarray, n_terms: int) -> np.ndarray:
    """Terms c_l z^(b_k + l) for l < n_terms; rows follow ``lz = log z``."""
    base, ratio = _residue_coefficients(m, n, a, b)
    lz = lz.astype(_LD)
    lead = np.exp(_LD(b[k]) * lz)[:, None]
    if np.isnan(ratio[k, 0]):
        coef = _direct_cached(m, n, a, b, k)[:n_terms]
        if coef.size < n_terms:
            coef = np.concatenate([coef, np.zeros(n_terms - coef.size, dtype=_LD)])
        return lead * coef[None, :] * np.exp(np.arange(n_terms, dtype=_LD)[None, :] * lz[:, None])
    steps = ratio[k, : n_terms - 1][None, :] * np.exp(lz)[:, None]
    with np.errstate(over="ignore", invalid="ignore"):
        prod = np.concatenate([np.ones((lz.size, 1), dtype=_LD), np.cumprod(steps, axis=1)], axis=1)
    with np.errstate(over="ignore", invalid="ignore"):
        return base[k] * lead * prod


def _check_series_ready(spec: MeijerGSpec) -> None:
    layout = pole_layout(spec.m, spec.b_params)
    if layout.has_collision:
        groups = [g for g in layout.collision_groups if len(g) > 1]
        raise PoleCollisionError(
            f"lower parameters {groups} differ by integers; perturb before using the series"
        )


def _terms_needed(m, n, a, b, lz_max: float) -> int:
    """Series length that settles every pole family at the largest z of a batch."""
    base, ratio = _residue_coefficients(m, n, a, b)
    need = 1 + _LOOKAHEAD
    for k in range(m):
        if np.isnan(ratio[k, 0]):
            return SERIES_MAX_TERMS
        with np.errstate(divide="ignore"):
            steps = np.log(np.abs(ratio[k].astype(float))) + lz_max
        logt = np.concatenate([[0.0], np.cumsum(steps[:-1])])
        finite = np.isfinite(logt)
        if not finite.any():
            continue
        peak = np.max(logt[finite])
        big = np.nonzero(finite & (logt > peak + math.log(SERIES_RTOL) - 4.0))[0]
        need = max(need, int(big.max()) + 2 + 2 * _LOOKAHEAD)
    return min(need, SERIES_MAX_TERMS)


def _series_many(m: int, n: int, a: tuple, b: tuple, z: np.ndarray, accuracy: float = SERIES_ACCURACY):
    """Residue series at an array of z.

    Returns ``(values, ok)``; ``ok`` is False where a pole family failed to
    settle within 500 terms or the estimated rounding error exceeds
    ``accuracy`` relative to the result.
    """
    z = np.asarray(z, dtype=float)
    out = np.zeros(z.size)
    ok = np.ones(z.size, dtype=bool)
    if m == 0:
        return out.reshape(z.shape), ok.reshape(z.shape)
    _residue_coefficients(m, n, a, b)
    flat_z = z.ravel()
    chunk = 256
    for start in range(0, flat_z.size, chunk):
        # log z in extended precision: an error in it grows with the term index
        lz = np.log(flat_z[start:start + chunk].astype(_LD))
        n_terms = _terms_needed(m, n, a, b, float(lz.max()))
        total = np.zeros(lz.size, dtype=_LD)
        biggest = np.zeros(lz.size, dtype=_LD)
        good = np.ones(lz.size, dtype=bool)
        for k in range(m):
            terms = _pole_terms(m, n, a, b, k, lz, n_terms)
            with np.errstate(invalid="ignore", over="ignore"):
                partial = np.cumsum(terms, axis=1)
                small = np.abs(terms) <= SERIES_RTOL * np.abs(partial)
            padded = np.concatenate([small, np.zeros((lz.size, _LOOKAHEAD), dtype=bool)], axis=1)
            win = np.ones(small.shape, dtype=bool)
            for d in range(_LOOKAHEAD + 1):
                win &= padded[:, d:d + n_terms]
            converged = win.any(axis=1)
            stop = np.where(converged, np.argmax(win, axis=1), n_terms - 1)
            rows = np.arange(lz.size)
            with np.errstate(invalid="ignore"):
                total += partial[rows, stop]
            with np.errstate(invalid="ignore"):
                masked = np.where(np.arange(n_terms)[None, :] <= stop[:, None], np.abs(terms), 0)
            biggest = np.maximum(biggest, masked.max(axis=1) * (stop + 1).astype(_LD))
            good &= converged & np.isfinite(partial[rows, stop])
        with np.errstate(invalid="ignore", over="ignore"):
            good &= (biggest == 0) | (biggest * _LD(_LD_EPS) <= _LD(accuracy) * np.abs(total))
        with np.errstate(over="ignore"):
            out[start:start + chunk] = total.astype(float)
        ok[start:start + chunk] = good & np.isfinite(out[start:start + chunk])
    return out.reshape(z.shape), ok.reshape(z.shape)


def leading_residue(m: int, n: int, a_params, b_params, k: int) -> float:
    """Coefficient of ``z^(b_k)`` in the small-z expansion of G (k is 0-based).

    Standard form: prod_{j!=k} Gamma(b_j - b_k) prod_{j<=n} Gamma(1 - a_j + b_k)
    over prod_{j>m} Gamma(1 - b_j + b_k) prod_{j>n} Gamma(a_j - b_k).
    """
    if not 0 <= k < m:
        raise IndexError(f"pole index {k} outside 0..{m - 1}")
    base, _ = _residue_coefficients(
        m, n, tuple(float(v) for v in a_params), tuple(float(v) for v in b_params)
    )
    return float(base[k])


def meijer_g_series(spec: MeijerGSpec, accuracy: float = SERIES_ACCURACY) -> float:
    """Sum of residues at the poles of ``Gamma(b_j - s)``, j <= m.

    Raises :class:`PoleCollisionError` when two of those families overlap
    and :class:`SeriesConvergenceError` when the series does not settle in
    500 terms per pole or its rounding estimate exceeds ``accuracy``.
    """
    _check_series_ready(spec)
    val, ok = _series_many(
        spec.m, spec.n, spec.a_params, spec.b_params, np.array([spec.z]), accuracy
    )
    if not ok[0]:
        raise SeriesConvergenceError(f"residue series unusable at z={spec.z}")
    return float(val[0])


# --------------------------------------------------------------------------
# Mellin-Barnes contour
# --------------------------------------------------------------------------

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)


def _log_integrand(spec: MeijerGSpec, s):
    m, n = spec.m, spec.n
    a, b = spec.a_params, spec.b_params
    acc = s * math.log(spec.z)
    for j in range(m):
        acc = acc + special.loggamma(b[j] - s)
    for j in range(n):
        acc = acc + special.loggamma(1.0 - a[j] + s)
    for j in range(m, len(b)):
        acc = acc - special.loggamma(1.0 - b[j] + s)
    for j in range(n, len(a)):
        acc = acc - special.loggamma(a[j] - s)
    return acc


def _log_modulus_real(spec: MeijerGSpec, c: np.ndarray) -> np.ndarray:
    m, n = spec.m, spec.n
    a, b = spec.a_params, spec.b_params
    acc = c * math.log(spec.z)
    for j in range(m):
        acc = acc + special.gammaln(b[j] - c)
    for j in range(n):
        acc = acc + special.gammaln(1.0 - a[j] + c)
    for j in range(m, len(b)):
        acc = acc - special.gammaln(1.0 - b[j] + c)
    for j in range(n, len(a)):
        acc = acc - special.gammaln(a[j] - c)
    return acc


def contour_abscissa(spec: MeijerGSpec) -> float:
    """Real part of the integration line.

    The line must lie strictly between the left poles (``a_j - 1 - l``,
    j <= n) and the right poles (``b_j + l``, j <= m). Inside that strip we
    take the point where the integrand modulus on the real axis is
    smallest, which keeps the integral from being a difference of large
    numbers at both small and large z.
    """
    m, n = spec.m, spec.n
    right = min(spec.b_params[:m]) if m else math.inf
    left = max(a - 1.0 for a in spec.a_params[:n]) if n else -math.inf
    if left >= right:
        raise ContourError(f"left poles reach {left} but right poles start at {right}")
    # with no left poles the saddle drifts left like -z^(1/(q-p))
    reach = 20.0 + 4.0 * min(spec.z, 1e30) ** (1.0 / max(spec.q - spec.p, 1))
    lo = left if math.isfinite(left) else (right if math.isfinite(right) else 0.0) - reach
    hi = right if math.isfinite(right) else lo + 2 * reach
    width = hi - lo
    grid = lo + width * np.linspace(0.002, 0.998, 400)
    with np.errstate(all="ignore"):
        vals = _log_modulus_real(spec, grid)
    vals = np.where(np.isnan(vals), np.inf, vals)
    i = int(np.argmin(vals))
    a_br = grid[max(i - 1, 0)]
    b_br = grid[min(i + 1, grid.size - 1)]
    if b_br > a_br:
        res = optimize.minimize_scalar(
            lambda c: float(_log_modulus_real(spec, np.array([c]))[0]),
            bounds=(a_br, b_br),
            method="bounded",
            options={"xatol": 1e-6 * width},
        )
        if res.success and res.fun <= vals[i]:
            return float(res.x)
    return float(grid[i])


def _truncation_height(spec: MeijerGSpec, c: float) -> tuple[float, float]:
    cutoff = math.log(CONTOUR_DECAY)
    step = 0.25
    t0 = 0.0
    peak = -math.inf
    prev = math.inf
    while t0 < 5000.0:
        t = t0 + step * np.arange(64)
        lm = np.real(_log_integrand(spec, c + 1j * t))
        for tv, v in zip(t, lm):
            peak = max(peak, v)
            if v < peak + cutoff and v < prev:
                return float(tv), peak
            prev = v
        t0 = t[-1] + step
        step *= 2
    raise ContourError("integrand does not decay along the contour")


def _panel_sum(spec: MeijerGSpec, c: float, edges: np.ndarray) -> float:
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    t = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    w = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    vals = np.real(np.exp(_log_integrand(spec, c + 1j * t)))
    return float(np.dot(w, vals))


def meijer_g_contour(spec: MeijerGSpec, rtol: float = 1e-13) -> float:
    """Mellin-Barnes line integral, independent of the residue machinery.

    ``G = (1/pi) * int_0^inf Re[I(c + i t)] dt`` where I is the Gamma-ratio
    integrand times ``z^s``. Composite Gauss-Legendre panels are halved
    until two successive estimates agree.
    """
    kappa = spec.m + spec.n - 0.5 * (spec.p + spec.q)
    if kappa <= 0:
        raise ContourError("integrand does not decay along vertical lines for these orders")
    c = contour_abscissa(spec)
    if float(_log_modulus_real(spec, np.array([c]))[0]) < -800.0:
        # the whole integrand sits far below the double underflow threshold
        return 0.0
    height, log_peak = _truncation_height(spec, c)
    # resolve the nearest pole's Lorentzian width and the z^{it} oscillation
    dists = [abs(bj - c) for bj in spec.b_params[: spec.m]]
    dists += [abs(c - (aj - 1.0)) for aj in spec.a_params[: spec.n]]
    h = min([1.0, math.pi / max(abs(math.log(spec.z)), 1e-3)] + [0.5 * d for d in dists])
    n_panels = max(4, int(math.ceil(height / h)))
    scale = math.exp(log_peak) * height
    prev = None
    for _ in range(12):
        edges = np.linspace(0.0, height, n_panels + 1)
        est = _panel_sum(spec, c, edges) / math.pi
        # the absolute floor covers results in the subnormal range
        if prev is not None and abs(est - prev) <= max(rtol * abs(est), 1e-16 * scale, 1e-300):
            return est
        prev = est
        n_panels *= 2
    raise ContourError(f"contour quadrature did not converge (last two: {prev}, {est})")


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------


def _perturbed_pair(spec: MeijerGSpec, eps: float = PERTURB_EPS):
    up, down = _shifted_family(spec, (eps, -eps))
    return up, down


def _shifted_family(spec: MeijerGSpec, shifts) -> list[MeijerGSpec]:
    """Copies of ``spec`` with each collision group spread by ``rank * shift``."""
    layout = pole_layout(spec.m, spec.b_params)
    # a shift can land on a third parameter (b = 1, 1, 1 + eps); try a few
    # step sizes and keep the first that leaves every family simple
    for scale in (1.0, 0.73, 1.37, 0.51):
        out = []
        for shift in shifts:
            moved = list(spec.b_params)
            for group in layout.collision_groups:
                for rank, j in enumerate(group[1:], start=1):
                    moved[j] += rank * shift * scale
            out.append(spec.with_b(moved))
        if not any(pole_layout(spec.m, o.b_params).has_collision for o in out):
            break
    return out


def _repaired_series_many(spec: MeijerGSpec, z: np.ndarray, accuracy: float = SERIES_ACCURACY):
    """Residue series that tolerates colliding poles.

    The +/- average over a parameter shift h is even in h. Averages at
    h, 2h and 3h combined with weights (3/2, -3/5, 1/10) cancel the h^2 and
    h^4 terms, which allows a shift large enough that the perturbed terms
    stay small.
    """
    m, n, a = spec.m, spec.n, spec.a_params
    if not pole_layout(m, spec.b_params).has_collision:
        return _series_many(m, n, a, spec.b_params, z, accuracy)
    h = REPAIR_EPS
    family = _shifted_family(spec, [sgn * k * h for k in (1, 2, 3) for sgn in (1, -1)])
    vals, oks = zip(*(_series_many(m, n, a, f.b_params, z, accuracy) for f in family))
    # rejected points may hold inf; they are replaced by the caller
    with np.errstate(invalid="ignore", over="ignore"):
        total = sum(w * 0.5 * (vals[2 * i] + vals[2 * i + 1]) for i, w in enumerate(_RICHARDSON))
    return total, np.logical_and.reduce(oks)


def _series_with_repair(spec: MeijerGSpec) -> float:
    val, ok = _repaired_series_many(spec, np.array([spec.z]))
    if not ok[0]:
        raise SeriesConvergenceError(f"repaired residue series unusable at z={spec.z}")
    return float(val[0])


def meijer_g(spec: MeijerGSpec) -> float:
    """Evaluate a real Meijer G-function.

    Residue series first (with +/- perturbation averaging on collisions),
    Mellin-Barnes contour if the series rejects.
    """
    try:
        return _series_with_repair(spec)
    except (SeriesConvergenceError, PoleCollisionError, ContourError) as series_err:
        try:
            return meijer_g_contour(spec)
        except MeijerGError as contour_err:
            raise MeijerGError(
                f"series failed ({series_err}); contour failed ({contour_err})"
            ) from contour_err


def meijer_g_array(m: int, n: int, a_params, b_params, z) -> np.ndarray:
    """Vectorised :func:`meijer_g` over an array of positive z."""
    a = tuple(float(v) for v in a_params)
    b = tuple(float(v) for v in b_params)
    z_in = np.asarray(z, dtype=float)
    z = np.atleast_1d(z_in).ravel()
    if np.any(~(z > 0)):
        raise ValueError("z must be positive")
    template = MeijerGSpec(m, n, len(a), len(b), a, b, 1.0)
    try:
        vals, ok = _repaired_series_many(template, z)
    except ContourError:
        vals, ok = np.zeros(z.shape), np.zeros(z.shape, dtype=bool)
    for i in np.flatnonzero(~ok):
        vals[i] = meijer_g_contour(template.with_z(float(z[i])))
    return vals.reshape(z_in.shape)
