import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from gof import chi2_pvalue, ks_pvalue, majority_pass
from invdiv.distributions import (
    GigModel,
    GigtMixtureModel,
    GigtModel,
    IgtModel,
    MigtModel,
    gig_pdf,
    gigt_mixture_pdf,
    gigt_pdf,
    igt_pdf,
    quadrature_mean,
)
from invdiv.divergence import inverse_div
from invdiv.funcs import make_g
from invdiv.sampling import (
    RngStream,
    gig_envelope_acceptance,
    sample_contaminated,
    sample_gig,
    sample_gigt,
    sample_igt,
    sample_migt,
    sample_mixture,
    sample_model,
    sample_radial,
    solve_root_pair,
)

GAUSS = make_g("gauss_kernel")
STUDENT5 = make_g("student", (5.0,))
CAUCHY = make_g("cauchy_like")
TRICUBE = make_g("tricube_like")


class TestRngStream:
    def test_reproducible(self):
        a = RngStream(123, 4).generator.uniform(size=10)
        b = RngStream(123, 4).generator.uniform(size=10)
        np.testing.assert_array_equal(a, b)

    def test_streams_differ(self):
        a = RngStream(123, 0).generator.uniform(size=10)
        b = RngStream(123, 1).generator.uniform(size=10)
        assert not np.allclose(a, b)

    def test_sampler_determinism_across_runs(self):
        m = IgtModel(2.0, 3.0, STUDENT5)
        x1 = sample_igt(m, RngStream(9, 2), size=64)
        x2 = sample_igt(m, RngStream(9, 2), size=64)
        np.testing.assert_array_equal(x1, x2)


class TestRootPair:
    def test_zero_level(self):
        rp = solve_root_pair(0.0, 3.0, 2.0)
        assert rp.x_low == rp.x_high == 3.0

    def test_unit_case(self):
        rp = solve_root_pair(1.0, 1.0, 1.0)
        assert rp.x_high == pytest.approx((3.0 + math.sqrt(5.0)) / 2.0, rel=1e-14)
        assert rp.x_low == pytest.approx((3.0 - math.sqrt(5.0)) / 2.0, rel=1e-14)
        assert rp.x_low * rp.x_high == pytest.approx(1.0, rel=1e-14)

    @given(
        t=st.floats(min_value=1e-7, max_value=1e4),
        theta=st.floats(min_value=0.1, max_value=10.0),
        lam=st.floats(min_value=0.1, max_value=10.0),
    )
    def test_invariants(self, t, theta, lam):
        rp = solve_root_pair(t, theta, lam)
        assert rp.x_low <= theta <= rp.x_high
        assert rp.x_low * rp.x_high == pytest.approx(theta ** 2, rel=1e-12)
        for x in (rp.x_low, rp.x_high):
            assert inverse_div(x, theta, lam) == pytest.approx(t, rel=1e-10)
            h = math.sqrt(x) / (x + theta)
            expected = (math.sqrt(lam) / theta) / math.sqrt(t + 4.0 * lam / theta)
            assert h == pytest.approx(expected, rel=1e-10)

    def test_branch_probability_at_zero_level(self):
        rp = solve_root_pair(0.0, 2.0, 1.0)
        assert rp.theta / (rp.theta + rp.x_low) == 0.5


class TestRadial:
    def test_gauss_half_is_chisquare1(self):
        n = 100_000
        t = sample_radial(GAUSS, 0.5, RngStream(1), size=n)
        assert abs(t.mean() - 1.0) < 5.0 * math.sqrt(2.0 / n)

    def test_gauss_three_halves_is_chisquare3(self):
        n = 100_000
        t = sample_radial(GAUSS, 1.5, RngStream(2), size=n)
        assert abs(t.mean() - 3.0) < 5.0 * math.sqrt(6.0 / n)

    def test_student_against_quadrature_cdf(self):
        from invdiv.distributions import radial_pdf

        def run(seed):
            t = sample_radial(STUDENT5, 0.5, RngStream(seed), size=50_000)
            return ks_pvalue(t, lambda v: radial_pdf(STUDENT5, 0.5, v))

        assert majority_pass(run)

    def test_scalar_draw(self):
        t = sample_radial(STUDENT5, 0.5, RngStream(3))
        assert isinstance(t, float) and t >= 0


def classical_inverse_gaussian(theta, lam, rng, n):
    """Textbook transformation sampler, independent implementation."""
    gen = rng.generator
    y = gen.standard_normal(n) ** 2
    x = theta + theta ** 2 * y / (2.0 * lam) - (theta / (2.0 * lam)) * np.sqrt(
        4.0 * theta * lam * y + theta ** 2 * y ** 2
    )
    u = gen.uniform(size=n)
    return np.where(u <= theta / (theta + x), x, theta ** 2 / x)


class TestIgtSampler:
    def test_gauss_chi2_gof(self):
        m = IgtModel(2.0, 3.0, GAUSS)
        edges = np.linspace(0.35, 6.5, 51)

        def run(seed):
            x = sample_igt(m, RngStream(seed), size=100_000)
            return chi2_pvalue(x, lambda v: igt_pdf(m, v), edges)

        assert majority_pass(run)

    def test_matches_classical_construction(self):
        m = IgtModel(2.0, 3.0, GAUSS)
        x = sample_igt(m, RngStream(5), size=100_000)
        y = classical_inverse_gaussian(2.0, 3.0, RngStream(6), 100_000)
        assert stats.ks_2samp(x, y).pvalue > 0.01

    def test_mean_converges(self):
        m = IgtModel(2.0, 3.0, GAUSS)
        x = sample_igt(m, RngStream(7), size=1_000_000)
        assert abs(x.mean() - 2.0) < 4.0 * math.sqrt((2.0 ** 3 / 3.0) / 1_000_000)

    @pytest.mark.parametrize("g", [STUDENT5, CAUCHY, TRICUBE], ids=lambda g: g.spec)
    def test_generic_generators_ks(self, g):
        m = IgtModel(2.0, 3.0, g)

        def run(seed):
            x = sample_igt(m, RngStream(seed), size=50_000)
            return ks_pvalue(x, lambda v: igt_pdf(m, v))

        assert majority_pass(run)

    def test_divergence_statistic_follows_radial_law(self):
        # draw x through the generic inverse-CDF route, push through the
        # divergence, and compare against direct radial draws
        m = GigtModel(2.0, 3.0, -0.5, STUDENT5)
        x = sample_gigt(m, RngStream(11), size=50_000, method="inverse_cdf")
        t_push = inverse_div(x, 2.0, 3.0)
        t_direct = sample_radial(STUDENT5, 0.5, RngStream(12), size=50_000)
        assert stats.ks_2samp(t_push, t_direct).pvalue > 0.01


class TestGigtSampler:
    def test_generic_nu_gof(self):
        m = GigtModel(2.0, 3.0, 0.0, STUDENT5)

        def run(seed):
            x = sample_gigt(m, RngStream(seed), size=50_000)
            return ks_pvalue(x, lambda v: gigt_pdf(m, v))

        assert majority_pass(run)


class TestMigtSampler:
    def test_d1_matches_igt(self):
        mv = MigtModel([2.0], [3.0], STUDENT5)
        ms = IgtModel(2.0, 3.0, STUDENT5)
        x = sample_migt(mv, RngStream(21), size=50_000)[:, 0]
        y = sample_igt(ms, RngStream(22), size=50_000)
        assert stats.ks_2samp(x, y).pvalue > 0.01

    def test_gauss_marginals_are_inverse_gaussian(self):
        theta = np.array([1.0, 2.0, 1.5])
        lam = np.array([1.0, 0.5, 2.0])
        m = MigtModel(theta, lam, GAUSS)
        x = sample_migt(m, RngStream(23), size=50_000)
        for j in range(3):
            y = classical_inverse_gaussian(theta[j], lam[j], RngStream(30 + j), 50_000)
            assert stats.ks_2samp(x[:, j], y).pvalue > 0.01

    def test_d2_level_share_is_arcsine(self):
        m = MigtModel([1.0, 2.0], [1.0, 1.0], GAUSS)
        x = sample_migt(m, RngStream(24), size=50_000)
        t1 = inverse_div(x[:, 0], 1.0, 1.0)
        t2 = inverse_div(x[:, 1], 2.0, 1.0)
        share = t1 / (t1 + t2)
        assert stats.kstest(share, stats.beta(0.5, 0.5).cdf).pvalue > 0.01

    def test_coordinate_means(self):
        m = MigtModel([1.0, 2.0], [1.0, 1.0], STUDENT5)
        x = sample_migt(m, RngStream(25), size=100_000)
        se = x.std(axis=0, ddof=1) / math.sqrt(x.shape[0])
        assert np.all(np.abs(x.mean(axis=0) - m.theta) < 4.0 * se)


class TestGigSampler:
    def test_nu_half_matches_igt(self):
        theta, lam = 2.0, 3.0
        m = GigModel(lam / theta, theta, -0.5)
        base = IgtModel(theta, lam, GAUSS)
        x = sample_gig(m, RngStream(41), size=50_000)
        y = sample_igt(base, RngStream(42), size=50_000)
        assert stats.ks_2samp(x, y).pvalue > 0.01

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 5.0])
    @pytest.mark.parametrize("nu", [-1.0, 0.0, 1.0])
    def test_envelope_acceptance(self, alpha, nu):
        assert gig_envelope_acceptance(GigModel(alpha, 1.0, nu)) > 0.3

    def test_gof_and_mean(self):
        m = GigModel(1.5, 2.0, 1.0)

        def run(seed):
            x = sample_gig(m, RngStream(seed), size=50_000)
            return ks_pvalue(x, lambda v: gig_pdf(m, v))

        assert majority_pass(run)
        x = sample_gig(m, RngStream(43), size=100_000)
        se = x.std(ddof=1) / math.sqrt(x.size)
        assert abs(x.mean() - quadrature_mean(m)) < 4.0 * se


class TestMixtureSampler:
    def test_component_frequency_matches_weight(self):
        m = GigtMixtureModel(2.0, 2.0, GAUSS)  # alpha = 1
        n = 100_000
        _, picked0 = sample_mixture(m, RngStream(51), size=n, return_components=True)
        freq = np.mean(picked0)
        w = m.weight
        assert abs(freq - w) < 3.0 * math.sqrt(w * (1.0 - w) / n)

    def test_gauss_gof(self):
        m = GigtMixtureModel(2.0, 2.0, GAUSS)
        edges = np.linspace(0.2, 9.0, 51)

        def run(seed):
            x = sample_mixture(m, RngStream(seed), size=100_000)
            return chi2_pvalue(x, lambda v: gigt_mixture_pdf(m, v), edges)

        assert majority_pass(run)

    def test_generic_generator_gof(self):
        m = GigtMixtureModel(2.0, 3.0, STUDENT5)

        def run(seed):
            x = sample_mixture(m, RngStream(seed), size=50_000)
            return ks_pvalue(x, lambda v: gigt_mixture_pdf(m, v))

        assert majority_pass(run)

    def test_degenerate_weight_edge(self):
        m = GigtMixtureModel(2.0, 2.0, GAUSS)
        forced = object.__new__(GigtMixtureModel)
        for field in ("theta", "lam", "g", "comp0", "comp1"):
            object.__setattr__(forced, field, getattr(m, field))
        object.__setattr__(forced, "weight", 1.0)
        _, picked0 = sample_mixture(forced, RngStream(52), size=256, return_components=True)
        assert np.all(picked0)


class TestContamination:
    def test_eps_zero_is_pure(self):
        base = IgtModel(2.0, 3.0, GAUSS)
        outlier = IgtModel(20.0, 3.0, GAUSS)
        data, labels = sample_contaminated(base, outlier, 0.0, 500, RngStream(61))
        assert not labels.any()
        assert data.shape == (500,)

    def test_eps_one_rejected(self):
        base = IgtModel(2.0, 3.0, GAUSS)
        with pytest.raises(ValueError):
            sample_contaminated(base, base, 1.0, 10, RngStream(62))

    def test_label_frequency(self):
        base = IgtModel(2.0, 3.0, GAUSS)
        outlier = IgtModel(20.0, 3.0, GAUSS)
        n, eps = 20_000, 0.1
        _, labels = sample_contaminated(base, outlier, eps, n, RngStream(63))
        assert abs(labels.mean() - eps) < 4.0 * math.sqrt(eps * (1 - eps) / n)

    def test_dispatch_covers_all_models(self):
        rng = RngStream(64)
        for spec in [
            "igt(theta=2,lambda=3,g=gauss)",
            "gigt(theta=2,lambda=3,nu=0,g=student:5)",
            "gigt_mixture(theta=2,lambda=2,g=gauss)",
            "gig(alpha=1,eta=2,nu=0)",
            "migt(theta=[1,2],lambda=[1,1],g=gauss)",
            "gaussian(theta=0,sigma2=1)",
            "gamma(theta=2,k=3)",
        ]:
            from invdiv.distributions import parse_model

            draw = sample_model(parse_model(spec), rng, size=8)
            assert np.all(np.isfinite(draw))
