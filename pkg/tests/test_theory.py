import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twinbeam.errors import ConditioningError, DomainError
from twinbeam.photon_stats import binomial_thin, dist_stats, nb_dist, nb_pmf
from twinbeam.theory import (
    TwbParams,
    conditional_fano_formula,
    conditional_signal_pmf,
    exact_conditional_fano,
    exact_nrf,
    fano_detected_relation,
    heralding_probability,
    joint_detected_pmf,
    nrf_formula,
    photon_posterior,
)

from conftest import brute_joint, posterior_fano


def closed_fano_fraction(M, mu, eta, m2):
    M, mu, eta = Fraction(M), Fraction(mu), Fraction(eta)
    num = (1 - eta) * M * (m2 + mu) * (M + eta * mu)
    den = (M + mu) * ((m2 + mu) * (M + eta * mu) - eta * mu * (M + mu) + 1)
    return num / den


class TestParams:
    def test_validation(self):
        for bad in [(-1, 1, .1, .1), (1, 0, .1, .1), (1, 1, 1.1, .1), (1, 1, .1, -.1)]:
            with pytest.raises(DomainError):
                TwbParams(*bad)

    def test_detected_mean(self):
        p = TwbParams.from_detected_mean(1.0, 10, 0.15)
        assert p.N == pytest.approx(20 / 3)
        assert (p.M1, p.M2) == pytest.approx((1.0, 1.0))

    def test_unbalanced_eta(self):
        p = TwbParams(2, 5, 0.3, 0.075)
        assert p.eta == pytest.approx(0.15)


class TestJoint:
    def test_perfect_detection_is_diagonal(self):
        j = joint_detected_pmf(TwbParams.balanced(2, 3, 1.0))
        photons = nb_dist(2, 3)
        np.testing.assert_allclose(np.diag(j.probs), photons.probs, atol=1e-15)
        assert np.all(j.probs[~np.eye(len(photons), dtype=bool)] == 0)

    def test_normalization(self):
        j = joint_detected_pmf(TwbParams(4, 2, 0.3, 0.6), 1e-12)
        assert abs(j.mass - 1) <= 1e-12

    def test_marginal_thinning_closure(self):
        j = joint_detected_pmf(TwbParams.balanced(1, 2, 0.5))
        direct = nb_dist(0.5, 2)
        marg = j.marginal(1).probs
        np.testing.assert_allclose(marg[:len(direct)], direct.probs, atol=1e-10)
        assert np.all(marg[len(direct):] <= 1e-10)

    def test_matches_brute_force(self):
        N, mu, e1, e2 = 0.8, 2.5, 0.4, 0.7
        j = joint_detected_pmf(TwbParams(N, mu, e1, e2), 1e-12)
        n_max = j.probs.shape[0] - 1
        ref = np.array(brute_joint(N, mu, e1, e2, n_max))
        np.testing.assert_allclose(j.probs, ref, atol=1e-15, rtol=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(N=st.floats(0.0, 8.0), mu=st.floats(0.5, 50.0),
           e1=st.floats(0.0, 1.0), e2=st.floats(0.0, 1.0))
    def test_marginal_consistency(self, N, mu, e1, e2):
        p = TwbParams(N, mu, e1, e2)
        j = joint_detected_pmf(p)
        for arm, eta in ((1, e1), (2, e2)):
            direct = binomial_thin(nb_dist(N, mu), eta).probs
            np.testing.assert_allclose(j.marginal(arm).probs, direct, atol=2 * j.tail_bound + 1e-15)

    @settings(max_examples=25, deadline=None)
    @given(N=st.floats(0.01, 3.0), mu=st.floats(0.5, 50.0),
           e1=st.floats(0.0, 1.0), e2=st.floats(0.0, 1.0))
    def test_covariance_law(self, N, mu, e1, e2):
        j = joint_detected_pmf(TwbParams(N, mu, e1, e2))
        *_, cov = j.moments()
        photons = nb_dist(N, mu)
        # the detected covariance is the thinned variance of the stored photon pmf
        assert cov == pytest.approx(e1 * e2 * dist_stats(photons).variance, abs=1e-12)
        # and deviates from the untruncated law only through the omitted tail
        n = np.arange(len(photons), len(photons) + 4000)
        tail = nb_pmf(n, N, mu)
        slack = e1 * e2 * (math.fsum(n * n * tail) + 2 * N * math.fsum(n * tail)
                           + (N * (1 + N / mu) + N**2) * photons.tail_bound)
        assert abs(cov - e1 * e2 * N * (1 + N / mu)) <= slack + 1e-12


class TestConditional:
    def test_perfect_correlation(self):
        j = joint_detected_pmf(TwbParams.balanced(2, 3, 1.0))
        d = conditional_signal_pmf(j, 3)
        assert d.probs[3] == pytest.approx(1.0)
        assert math.fsum(d.probs) == pytest.approx(1.0)

    def test_no_information(self):
        p = TwbParams(2, 3, 0.4, 0.0)
        d = conditional_signal_pmf(joint_detected_pmf(p), 0)
        direct = binomial_thin(nb_dist(2, 3), 0.4)
        np.testing.assert_allclose(d.probs, direct.probs / direct.mass, atol=1e-14)

    def test_normalized(self):
        p = TwbParams.balanced(1, 10, 0.15)
        d = conditional_signal_pmf(joint_detected_pmf(p), 1)
        assert math.fsum(d.probs) == pytest.approx(1.0, abs=1e-15)
        _, expected = posterior_fano(1, 10, 0.15, 0.15, 1)
        assert dist_stats(d).fano == pytest.approx(expected, abs=1e-10)

    def test_impossible_conditioning(self):
        j = joint_detected_pmf(TwbParams.balanced(1, 1, 0.0))
        with pytest.raises(ConditioningError):
            conditional_signal_pmf(j, 1)
        with pytest.raises(ConditioningError):
            conditional_signal_pmf(j, 10_000)


class TestExactFano:
    def test_fock_like(self):
        for k in (1, 2, 5):
            assert exact_conditional_fano(TwbParams.balanced(3, 4, 1.0), k) == 0.0

    def test_vacuum_conditional_is_nan(self):
        assert math.isnan(exact_conditional_fano(TwbParams.balanced(3, 4, 1.0), 0))

    @pytest.mark.parametrize("eta", [1e-2, 1e-3, 1e-4])
    def test_vanishing_efficiency(self, eta):
        f = exact_conditional_fano(TwbParams.balanced(5.0, 10, eta), 1)
        # F_m - 1 = eta (F_n - 1) with F_n bounded for fixed N
        assert abs(f - 1.0) <= eta

    def test_reference_point(self):
        p = TwbParams.from_detected_mean(1.0, 10, 0.15)
        _, expected = posterior_fano(p.N, 10, 0.15, 0.15, 1)
        assert exact_conditional_fano(p, 1) == pytest.approx(expected, abs=1e-10)
        # the closed form sits far below the model at this point
        assert conditional_fano_formula(1.0, 10, 0.15, 1) < exact_conditional_fano(p, 1) - 0.5

    def test_low_heralding_rejected(self):
        with pytest.raises(ConditioningError):
            exact_conditional_fano(TwbParams.balanced(0.01, 1, 0.01), 6)

    @settings(max_examples=30, deadline=None)
    @given(N=st.floats(0.05, 15.0), mu=st.floats(0.5, 100.0),
           e1=st.floats(0.01, 1.0), e2=st.floats(0.05, 1.0), k=st.integers(1, 3))
    def test_posterior_oracle(self, N, mu, e1, e2, k):
        p = TwbParams(N, mu, e1, e2)
        eps = 1e-15
        if heralding_probability(p, k, eps) <= 1e-9:
            return
        f_n, f_m = posterior_fano(N, mu, e1, e2, k)
        assert dist_stats(photon_posterior(p, k, eps)).fano == pytest.approx(f_n, rel=1e-8)
        assert exact_conditional_fano(p, k, eps) == pytest.approx(f_m, rel=1e-8)

    @settings(max_examples=30, deadline=None)
    @given(N=st.floats(0.05, 15.0), mu=st.floats(0.5, 100.0),
           eta=st.floats(0.01, 1.0), k=st.integers(0, 3))
    def test_detected_fano_identity(self, N, mu, eta, k):
        p = TwbParams.balanced(N, mu, eta)
        if heralding_probability(p, k) <= 1e-9:
            return
        f_n = dist_stats(photon_posterior(p, k)).fano
        f = exact_conditional_fano(p, k)
        if math.isnan(f):
            return
        assert f == pytest.approx(fano_detected_relation(f_n, eta), abs=1e-9)


class TestClosedFano:
    def test_unit_efficiency(self):
        assert conditional_fano_formula(2.0, 5, 1.0, 1) == 0.0

    def test_spot_value(self):
        expected = closed_fano_fraction(1, 10, Fraction(15, 100), 1)
        assert expected == Fraction(23375, 132000)
        assert conditional_fano_formula(1.0, 10, 0.15, 1) == pytest.approx(float(expected), abs=1e-15)
        assert float(expected) == pytest.approx(0.1770833, abs=1e-7)

    def test_weaker_beam_more_sub_poissonian(self):
        assert conditional_fano_formula(0.5, 10, 0.15, 1) < conditional_fano_formula(2, 10, 0.15, 1)

    def test_domain(self):
        with pytest.raises(DomainError):
            conditional_fano_formula(-1, 10, 0.15, 1)
        with pytest.raises(DomainError):
            conditional_fano_formula(1, 10, 1.5, 1)


class TestNrfFormula:
    def test_balanced(self):
        assert nrf_formula(0.5, 0.5, 0.15, 10) == pytest.approx(0.85, abs=1e-15)

    def test_unbalanced(self):
        expected = 1 - 2 * 0.15 * math.sqrt(0.24) / 1.0 + 0.2**2 / (10 * 1.0)
        assert nrf_formula(0.6, 0.4, 0.15, 10) == pytest.approx(expected, abs=1e-15)
        assert expected == pytest.approx(0.8570306, abs=1e-7)

    @pytest.mark.parametrize("M", [0.1, 1.0, 3.2])
    def test_variant_difference(self, M):
        gap = nrf_formula(M, M, 0.15, 10, "product") - nrf_formula(M, M, 0.15, 10, "difference")
        assert gap == pytest.approx(M**4 / (2 * M * 10), rel=1e-12)

    def test_errors(self):
        with pytest.raises(DomainError):
            nrf_formula(0, 0, 0.15, 10)
        with pytest.raises(DomainError):
            nrf_formula(1, 1, 0.15, 10, "typo")


class TestExactNrf:
    @pytest.mark.parametrize("N, mu, eta", [(0.5, 1, 0.06), (2, 10, 0.15), (21.3, 2, 0.17), (3, 200, 0.5)])
    def test_balanced_is_one_minus_eta(self, N, mu, eta):
        assert exact_nrf(TwbParams.balanced(N, mu, eta)) == pytest.approx(1 - eta, abs=1e-9)

    def test_noiseless(self):
        assert exact_nrf(TwbParams.balanced(2, 3, 1.0)) == pytest.approx(0.0, abs=1e-12)

    def test_brute_force_unbalanced(self):
        N, mu, e1, e2 = 0.7, 1.5, 0.6, 0.2
        p = TwbParams(N, mu, e1, e2)
        n_max = joint_detected_pmf(p).probs.shape[0] - 1
        ref = brute_joint(N, mu, e1, e2, n_max)
        mass = math.fsum(v for row in ref for v in row)
        mean1 = math.fsum(a * v for a, row in enumerate(ref) for v in row) / mass
        mean2 = math.fsum(b * v for row in ref for b, v in enumerate(row)) / mass
        d_mean = mean1 - mean2
        var_d = math.fsum((a - b - d_mean) ** 2 * v
                          for a, row in enumerate(ref) for b, v in enumerate(row)) / mass
        assert exact_nrf(p) == pytest.approx(var_d / (mean1 + mean2), abs=1e-12)

    def test_unbalanced_matches_difference_formula(self):
        p = TwbParams(2, 5, 0.3, 0.075)
        r = exact_nrf(p)
        assert r == pytest.approx(nrf_formula(p.M1, p.M2, p.eta, 5), abs=1e-9)
        assert r >= 1 - p.eta

    def test_errors(self):
        with pytest.raises(DomainError):
            exact_nrf(TwbParams.balanced(0, 3, 0.5))
        with pytest.raises(DomainError):
            exact_nrf(TwbParams.balanced(1, 3, 0.0))


class TestHeralding:
    def test_vacuum(self):
        assert heralding_probability(TwbParams.balanced(0, 3, 0.5), 1) == 0.0

    def test_thermal(self):
        m = 0.15
        assert heralding_probability(TwbParams(m, 1, 1.0, 1.0), 1) == \
            pytest.approx(m / (1 + m) ** 2, rel=1e-13)
        assert m / (1 + m) ** 2 == pytest.approx(0.113422, abs=1e-6)

    def test_matches_joint_column(self):
        p = TwbParams(3, 4, 0.2, 0.35)
        j = joint_detected_pmf(p)
        for k in range(5):
            assert heralding_probability(p, k) == pytest.approx(j.probs[:, k].sum(), abs=1e-14)

    def test_normalization(self):
        p = TwbParams(3, 4, 0.2, 0.35)
        n_max = joint_detected_pmf(p).probs.shape[0]
        total = math.fsum(heralding_probability(p, k) for k in range(n_max))
        assert total == pytest.approx(1.0, abs=1e-12)


class TestFanoRelation:
    def test_values(self):
        assert fano_detected_relation(1.0, 0.37) == pytest.approx(1.0)
        assert fano_detected_relation(3.0, 0.0) == 1.0
        assert fano_detected_relation(0.0, 0.15) == pytest.approx(0.85)

    def test_domain(self):
        with pytest.raises(DomainError):
            fano_detected_relation(-0.1, 0.5)


class TestTrends:
    @pytest.mark.parametrize("m2", [1, 2])
    @pytest.mark.parametrize("mu", [2, 10, 100])
    def test_closed_form_increasing_in_mean(self, m2, mu):
        vals = [conditional_fano_formula(M, mu, 0.15, m2) for M in np.linspace(0.1, 3.2, 32)]
        assert np.all(np.diff(vals) > 0)

    @pytest.mark.parametrize("m2", [1, 2])
    @pytest.mark.parametrize("M", [0.5, 1, 2, 3.2])
    def test_closed_form_decreasing_in_modes(self, m2, M):
        vals = [conditional_fano_formula(M, mu, 0.15, m2) for mu in np.geomspace(2, 200, 30)]
        assert np.all(np.diff(vals) < 0)
