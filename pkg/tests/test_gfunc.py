"""Core evaluator tests: log-gamma, hypergeometric series, residue-series
G-function values against elementary and exact-rational oracles."""

import math
from fractions import Fraction

import numpy as np
import pytest

from gridgefit.errors import DivergenceError, NonConvergence, PoleError
from gridgefit.gfunc import (
    EvalPolicy,
    H_CONFIGS,
    MeijerGParams,
    insert_cancel_pair,
    ln_gamma,
    meijer_g,
    pfq,
    reduce_check,
)

TIGHT = EvalPolicy(series_tol=1e-12, max_terms=600)


def exp_config():
    return MeijerGParams(1, 0, 0, 1, a=[], b=[0.0], extended=True)


def rational_config():
    return MeijerGParams(1, 1, 1, 1, a=[1.0], b=[1.0], extended=True)


def log_config():
    return MeijerGParams(1, 2, 2, 2, a=[1.0, 1.0], b=[1.0, 0.0], extended=True)


def sin_config():
    # sqrt(pi) * G^{1,0}_{0,2}(z | -; 1/2, 0) = sin(2 sqrt(z))
    return MeijerGParams(1, 0, 0, 2, a=[], b=[0.5, 0.0])


class TestLnGamma:
    def test_gamma_one(self):
        val, sign = ln_gamma(1.0)
        assert val == 0.0 and sign == 1.0

    def test_gamma_half(self):
        val, sign = ln_gamma(0.5)
        assert sign == 1.0
        assert val == pytest.approx(math.log(math.sqrt(math.pi)), abs=1e-14)

    def test_gamma_five(self):
        val, sign = ln_gamma(5.0)
        assert val == pytest.approx(math.log(24.0), rel=1e-14)
        assert sign == 1.0

    def test_pole(self):
        for x in (0.0, -1.0, -7.0):
            with pytest.raises(PoleError):
                ln_gamma(x)

    def test_sign_tracking(self):
        # Gamma alternates sign between consecutive negative integers
        assert ln_gamma(-0.5)[1] == -1.0
        assert ln_gamma(-1.5)[1] == 1.0

    def test_precision_against_mpmath(self):
        import mpmath as mp

        xs = np.concatenate([np.linspace(0.05, 50, 57), -np.linspace(0.3, 49.7, 31)])
        for x in xs:
            if x <= 0 and abs(x - round(x)) < 1e-9:
                continue
            val, sign = ln_gamma(float(x))
            ref = mp.log(abs(mp.gamma(mp.mpf(float(x)))))
            assert val == pytest.approx(float(ref), rel=1e-12, abs=1e-12)


def _pfq_rational_oracle(a_num, b_den, z: Fraction, terms: int) -> float:
    """Exact-rational direct summation, independent of the float path."""
    total = Fraction(1)
    term = Fraction(1)
    for k in range(terms):
        num = Fraction(1)
        for a in a_num:
            num *= Fraction(a) + k
        den = Fraction(k + 1)
        for b in b_den:
            den *= Fraction(b) + k
        term = term * num / den * z
        total += term
    return float(total)


class TestPfq:
    def test_0f0_is_exp(self):
        assert pfq([], [], 0.5, TIGHT) == pytest.approx(math.exp(0.5), rel=1e-12)

    def test_1f0_is_geometric(self):
        assert pfq([1.0], [], 0.5, TIGHT) == pytest.approx(2.0, rel=1e-11)

    def test_0f1_against_rational_summation(self):
        want = _pfq_rational_oracle([], [Fraction(3, 2)], Fraction(-1, 4), 30)
        got = pfq([], [1.5], -0.25, TIGHT)
        assert got == pytest.approx(want, abs=1e-14)
        # same series is sin(1) through the half-integer reduction
        assert got == pytest.approx(math.sin(1.0), abs=1e-14)

    def test_divergent_orders(self):
        with pytest.raises(DivergenceError):
            pfq([1.0, 2.0, 3.0], [1.5], 0.3)

    def test_unit_disk_boundary(self):
        with pytest.raises(DivergenceError):
            pfq([1.0, 2.0], [1.5], 1.0)
        assert np.isfinite(pfq([1.0, 2.0], [1.5], 0.5))

    def test_lower_parameter_pole(self):
        with pytest.raises(PoleError):
            pfq([1.0], [-2.0], 0.5)

    def test_terminating_series(self):
        # upper parameter -2 terminates after three terms: 2F1 polynomial
        got = pfq([-2.0, 1.0], [1.0], 0.7, TIGHT)
        assert got == pytest.approx(1 - 2 * 0.7 + 0.7**2, rel=1e-13)

    def test_max_terms_exhaustion(self):
        with pytest.raises(NonConvergence):
            pfq([1.0], [], 0.95, EvalPolicy(series_tol=1e-10, max_terms=20))

    def test_vectorized_matches_scalar(self):
        zs = np.linspace(-0.8, 0.8, 9)
        vec = pfq([0.7], [1.3, 0.9], zs, TIGHT)
        for z, v in zip(zs, vec):
            assert pfq([0.7], [1.3, 0.9], float(z), TIGHT) == v


class TestMeijerG:
    def test_exp_identity(self):
        g = exp_config()
        for z in np.arange(1, 10) / 10:
            assert meijer_g(g, z, TIGHT) == pytest.approx(math.exp(-z), abs=1e-10)

    def test_rational_identity(self):
        g = rational_config()
        assert meijer_g(g, 0.5, TIGHT) == pytest.approx(1.0 / 3.0, abs=1e-10)

    def test_log_identity(self):
        g = log_config()
        assert meijer_g(g, 0.5, TIGHT) == pytest.approx(math.log(1.5), abs=1e-10)

    def test_sin_identity(self):
        g = sin_config()
        for z in np.arange(1, 10) / 10:
            want = math.sin(2 * math.sqrt(z)) / math.sqrt(math.pi)
            assert meijer_g(g, z, TIGHT) == pytest.approx(want, abs=1e-10)

    def test_inner_transform(self):
        # G(s * z^r) for the exp family is exp(-s z^r)
        g = MeijerGParams(1, 0, 0, 1, a=[], b=[0.0], r=2.0, s=0.7, extended=True)
        assert meijer_g(g, 0.6, TIGHT) == pytest.approx(math.exp(-0.7 * 0.36), abs=1e-10)

    def test_config_whitelist(self):
        with pytest.raises(ValueError):
            MeijerGParams(1, 0, 0, 1, a=[], b=[0.0])  # not in H, needs extended
        for cfg in H_CONFIGS:
            m, n, p, q = cfg
            MeijerGParams(m, n, p, q, a=np.zeros(p) + 0.3, b=np.linspace(0.1, 0.4, q))

    def test_s_positive_required(self):
        with pytest.raises(ValueError):
            MeijerGParams(1, 0, 0, 1, a=[], b=[0.0], s=-1.0, extended=True)

    def test_param_length_validation(self):
        with pytest.raises(ValueError):
            MeijerGParams(1, 0, 0, 2, a=[], b=[0.0])

    def test_clamping_of_z(self):
        g = exp_config()
        assert meijer_g(g, 0.0) == meijer_g(g, 1e-6)
        assert meijer_g(g, 1.0) == meijer_g(g, 1.0 - 1e-6)

    def test_determinism(self):
        g = MeijerGParams(2, 2, 3, 3, a=[0.3, -0.2, 0.7], b=[0.9, 0.1, -0.4])
        zs = np.linspace(0.05, 0.95, 50)
        first = meijer_g(g, zs)
        for _ in range(3):
            assert np.array_equal(meijer_g(g, zs), first)

    def test_jitter_handles_integer_b_differences(self):
        # b_1 - b_2 = 1 inside the ascending block would be a double pole
        g = MeijerGParams(2, 0, 1, 3, a=[0.4], b=[1.2, 0.2, -0.5])
        val = meijer_g(g, 0.5)
        assert np.isfinite(val)

    def test_vectorized_matches_scalar(self):
        g = MeijerGParams(2, 1, 2, 3, a=[0.3, -0.6], b=[0.8, 0.2, -0.3])
        zs = np.linspace(0.05, 0.95, 13)
        vec = meijer_g(g, zs)
        for z, v in zip(zs, vec):
            assert meijer_g(g, float(z)) == v


class TestInclusion:
    ZS = np.arange(1, 10) / 10

    def test_identical_params_zero(self):
        g = exp_config()
        assert reduce_check(g, g, self.ZS) == 0.0

    def test_n_branch_exp_embedding(self):
        # the appended pair cancels a Gamma factor pairwise
        g_small = exp_config()
        g_big = insert_cancel_pair(g_small, math.pi, "n")
        assert g_big.config == (1, 1, 1, 2)
        assert list(g_big.a) == [math.pi]
        assert list(g_big.b) == [0.0, math.pi]
        assert reduce_check(g_big, g_small, self.ZS) < 1e-8

    def test_m_branch_vanishing_family(self):
        g_small = MeijerGParams(0, 1, 1, 1, a=[1.0], b=[2.0], extended=True)
        g_big = MeijerGParams(1, 1, 2, 2, a=[1.0, math.pi], b=[math.pi, 2.0],
                              extended=True)
        assert reduce_check(g_big, g_small, self.ZS) < 1e-8

    @pytest.mark.parametrize("branch", ["m", "n"])
    def test_embedding_into_search_set(self, branch):
        base = MeijerGParams(1, 0, 0, 2, a=[], b=[0.45, -0.2])
        g_big = insert_cancel_pair(base, 0.77 * math.pi, branch)
        assert reduce_check(g_big, base, self.ZS) < 1e-8
