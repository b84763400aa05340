import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from risfso import specfun
from risfso.channels import FsoHopParams, fso_constants
from risfso.specfun import MeijerGSpec


def exp_spec(z):
    return MeijerGSpec(1, 0, 0, 1, (), (0.0,), z)


def cdf_spec(alpha, beta, zeta2, r, z):
    k = fso_constants(FsoHopParams(alpha, beta, zeta2, r, 1.0))
    return MeijerGSpec(3 * r, 1, r + 1, 3 * r + 1, (1.0,) + k.chi1, k.chi2 + (0.0,), z)


# --- ln_gamma -------------------------------------------------------------


@pytest.mark.parametrize("x, want", [
    (1.0, 0.0),
    (1.5, math.log(math.sqrt(math.pi) / 2)),
    (10.0, math.log(362880.0)),
])
def test_ln_gamma_known_values(x, want):
    assert specfun.ln_gamma(x) == pytest.approx(want, abs=1e-13)


@pytest.mark.parametrize("x", [0.0, -1.0, -7.0])
def test_ln_gamma_rejects_poles(x):
    with pytest.raises(specfun.GammaPoleError):
        specfun.ln_gamma(x)


def test_ln_gamma_reflection():
    rng = np.random.default_rng(3)
    for x in rng.uniform(-4.0, 5.0, 50):
        if abs(x - round(x)) < 1e-3:
            continue
        lhs = specfun.ln_gamma(x) + specfun.ln_gamma(1 - x)
        sign = specfun.gamma_sign(x) * specfun.gamma_sign(1 - x)
        rhs = math.pi / math.sin(math.pi * x)
        assert sign * math.exp(lhs) == pytest.approx(rhs, rel=1e-11)


def test_ln_gamma_matches_mpmath_on_range():
    for x in np.geomspace(1e-3, 1e3, 40):
        want = float(mpmath.log(abs(mpmath.gamma(x))))
        assert specfun.ln_gamma(x) == pytest.approx(want, rel=1e-13, abs=1e-15)


def test_gamma_sign_negative_arguments():
    assert specfun.gamma_sign(-0.5) == -1
    assert specfun.gamma_sign(-1.5) == 1
    assert specfun.gamma_sign(2.0) == 1


# --- spec validation and pole layout --------------------------------------


@pytest.mark.parametrize("kwargs", [
    dict(m=2, n=0, p=0, q=1, a_params=(), b_params=(0.0,), z=1.0),
    dict(m=1, n=0, p=0, q=1, a_params=(), b_params=(0.0,), z=0.0),
    dict(m=1, n=0, p=2, q=1, a_params=(1.0, 1.0), b_params=(0.0,), z=1.0),
    dict(m=1, n=0, p=0, q=2, a_params=(), b_params=(0.0,), z=1.0),
])
def test_spec_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        MeijerGSpec(**kwargs)


def test_pole_layout_groups_integer_spaced():
    lay = specfun.pole_layout(4, (0.5, 1.5, 0.7, 3.5))
    assert lay.has_collision
    assert sorted(map(sorted, lay.collision_groups)) == [[0, 1, 3], [2]]
    assert [ok for _, ok in lay.simple_poles] == [False, False, True, False]
    # groups partition the indices
    flat = sorted(i for g in lay.collision_groups for i in g)
    assert flat == [0, 1, 2, 3]


def test_pole_layout_simple():
    lay = specfun.pole_layout(3, (1.1, 4.2, 1.4))
    assert not lay.has_collision
    assert all(ok for _, ok in lay.simple_poles)
    assert len(lay.collision_groups) == 3


# --- series ---------------------------------------------------------------


@pytest.mark.parametrize("z", [0.1, 1.0, 5.0])
def test_series_exponential_identity(z):
    assert specfun.meijer_g_series(exp_spec(z)) == pytest.approx(math.exp(-z), rel=1e-12)


def test_series_refuses_collision():
    with pytest.raises(specfun.PoleCollisionError):
        specfun.meijer_g_series(MeijerGSpec(2, 0, 0, 2, (), (0.5, -0.5), 1.0))


def test_series_rejects_large_argument():
    with pytest.raises(specfun.SeriesConvergenceError):
        specfun.meijer_g_series(cdf_spec(4.2, 1.4, 1.1, 1, 1e4))


def test_series_pdf_form_against_mpmath():
    # frozen from mpmath.meijerg at 30 digits
    spec = MeijerGSpec(3, 0, 1, 3, (2.2,), (1.2, 2.5, 1.8), 0.7)
    assert specfun.meijer_g_series(spec) == pytest.approx(0.250022757917298909890582895191, rel=1e-12)
    assert specfun.meijer_g_series(spec) == pytest.approx(specfun.meijer_g_contour(spec), rel=1e-8)


def test_leading_residue_matches_gamma_ratio():
    # G^{1,0}_{0,1}: residue at b=0 is 1
    assert specfun.leading_residue(1, 0, (), (0.0,), 0) == pytest.approx(1.0)
    # G^{3,0}_{1,3}[.|a; b1,b2,b3] lead coefficient Gamma(b2-b1)Gamma(b3-b1)/Gamma(a-b1)
    a, b = (2.2,), (1.2, 2.5, 1.8)
    want = math.gamma(1.3) * math.gamma(0.6) / math.gamma(1.0)
    assert specfun.leading_residue(3, 0, a, b, 0) == pytest.approx(want, rel=1e-13)


# --- contour --------------------------------------------------------------


@pytest.mark.parametrize("z", [0.1, 2.0, 5.0])
def test_contour_exponential_identity(z):
    assert specfun.meijer_g_contour(exp_spec(z)) == pytest.approx(math.exp(-z), rel=1e-11)


def test_contour_bessel_form():
    # G^{2,0}_{0,2}[z | 1/2, -1/2] = 2 K_1(2 sqrt z)
    want = float(2 * mpmath.besselk(1, 2))
    got = specfun.meijer_g_contour(MeijerGSpec(2, 0, 0, 2, (), (0.5, -0.5), 1.0))
    assert got == pytest.approx(want, rel=1e-10)
    assert want == pytest.approx(0.279731763633044854569197614071, rel=1e-15)


def test_contour_abscissa_separates_poles():
    spec = cdf_spec(4.2, 1.4, 1.1, 1, 0.3)
    c = specfun.contour_abscissa(spec)
    # right poles at s = b_j + k (j <= m); left poles at s = a_j - 1 - k (j <= n)
    assert spec.a_params[0] - 1 < c < min(spec.b_params[: spec.m])


def test_contour_refuses_interleaved_families():
    # a_1 = 2 puts a left-family pole at s = 1, right of the first right pole at 0.5
    with pytest.raises(specfun.ContourError):
        specfun.meijer_g_contour(MeijerGSpec(1, 1, 1, 1, (2.0,), (0.5,), 1.0))


def test_contour_deep_tail_underflows_to_zero_not_negative():
    spec = MeijerGSpec(3, 0, 1, 3, (2.1,), (1.1, 4.2, 1.4), 1e5)
    v = specfun.meijer_g_contour(spec)
    assert v >= 0.0
    assert v == pytest.approx(float(mpmath.meijerg([[], [2.1]], [[1.1, 4.2, 1.4], []], 1e5)), rel=1e-6, abs=1e-300)


# --- dispatch -------------------------------------------------------------


def test_dispatch_collision_case_matches_mpmath():
    # alpha = beta = 2, zeta^2 = 1.5, r = 1; frozen mpmath value
    spec = MeijerGSpec(3, 1, 2, 4, (1.0, 2.5), (1.5, 2.0, 2.0, 0.0), 0.5)
    want = 0.155112007018107649997735722967
    assert specfun.meijer_g(spec) == pytest.approx(want, rel=1e-6)
    assert specfun.meijer_g(spec) == pytest.approx(specfun.meijer_g_contour(spec), rel=1e-6)


def test_dispatch_falls_back_to_contour():
    spec = cdf_spec(2.5, 1.8, 1.2, 1, 2e3)
    assert specfun.meijer_g(spec) == pytest.approx(specfun.meijer_g_contour(spec), rel=1e-12)


def test_small_argument_vanishes():
    vals = [specfun.meijer_g(cdf_spec(2.5, 1.8, 1.2, 1, z)) for z in (1e-2, 1e-4, 1e-8)]
    assert vals[0] > vals[1] > vals[2] > 0
    assert vals[2] < 1e-8


def test_array_matches_scalar_and_keeps_shape():
    z = np.array([[1e-3, 0.5], [3.0, 400.0]])
    spec = cdf_spec(4.2, 1.4, 1.1, 1, 1.0)
    got = specfun.meijer_g_array(spec.m, spec.n, spec.a_params, spec.b_params, z)
    assert got.shape == z.shape
    for zi, gi in zip(z.ravel(), got.ravel()):
        assert gi == pytest.approx(specfun.meijer_g(spec.with_z(zi)), rel=1e-10)
    scalar = specfun.meijer_g_array(spec.m, spec.n, spec.a_params, spec.b_params, 0.5)
    assert np.ndim(scalar) == 0


def test_random_cross_oracle_sweep():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(25):
        al, be = rng.uniform(1, 6, 2)
        z2 = rng.uniform(0.5, 12)
        r = int(rng.integers(1, 3))
        spec = cdf_spec(al, be, z2, r, 10 ** rng.uniform(-4, 1))
        s = specfun.meijer_g_series(spec)
        c = specfun.meijer_g_contour(spec)
        worst = max(worst, abs(s - c) / max(abs(c), 1e-300))
    assert worst <= 1e-7


@given(
    alpha=st.floats(1.0, 6.0), beta=st.floats(1.0, 6.0), zeta2=st.floats(0.5, 12.0),
    r=st.sampled_from([1, 2]), logz=st.floats(-4.0, 1.0),
)
def test_dispatch_equals_contour(alpha, beta, zeta2, r, logz):
    spec = cdf_spec(alpha, beta, zeta2, r, 10 ** logz)
    c = specfun.meijer_g_contour(spec)
    assert specfun.meijer_g(spec) == pytest.approx(c, rel=1e-7, abs=1e-300)


@given(z=st.floats(1e-3, 30.0))
def test_exponential_identity_property(z):
    assert specfun.meijer_g(exp_spec(z)) == pytest.approx(math.exp(-z), rel=1e-11)
