#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "robin/spectral.hpp"

using namespace robin;

namespace {

SpectrumOptions hermitian_options()
{
    SpectrumOptions o;
    o.arnoldi.hermitian = true;
    return o;
}

/// Ground state of -psi'' + (alpha0 + c * smoothstep)^2 psi by shooting.
double shooting_step(double alpha0, double c, double a, double w, double mu_lo)
{
    auto v = [=](double x) {
        const double al = alpha0 + c * oracle::step_profile(x, a, w);
        return al * al;
    };
    const double edge = a + 0.5 * w;
    std::vector<double> breaks{-edge, -(a - 0.5 * w)};
    return oracle::shooting_ground_state(v, alpha0 * alpha0, edge, breaks, mu_lo, alpha0 * alpha0 - 1e-14);
}

} // namespace

TEST(Enclosure, PointChecks)
{
    EXPECT_FALSE(check_enclosure(cplx(1.0, 0.0), 0.0, 1.0));
    EXPECT_FALSE(check_enclosure(cplx(1.0, 2.0), 0.0, 1.0));
    EXPECT_TRUE(check_enclosure(cplx(1.0, 2.1), 0.0, 1.0));
    EXPECT_FALSE(check_enclosure(cplx(1.0, 2.1), 0.011, 1.0));
    const auto v = check_enclosure(cplx(-1e-6, 0.0), 0.0, 1.0);
    ASSERT_TRUE(v);
    EXPECT_GT(v->re_excess, 0.0);
    EXPECT_FALSE(check_enclosure(cplx(-1e-9, 0.0), 0.0, 0.0));
    EXPECT_TRUE(check_enclosure(cplx(0.0, 1e-3), 0.0, 5.0));
}

TEST(Spectrum, ZeroCouplingIsRealAndMatchesLateralLaplacian)
{
    const auto g = build_grid(2, 3.0, 31, 0.2, 5, LateralBC::dirichlet);
    const auto ops = assemble_operators(g, BoundaryCoupling::constant(0.0));
    const auto r = lowest_spectrum(ops, OperatorKind::H_eps, 4);
    ASSERT_TRUE(r.complete);
    const double h = g.h_lat;
    const double m = static_cast<double>(ops.free_lateral.size());
    for (int j = 0; j < 4; ++j) {
        const cplx z = r.eigenvalues[static_cast<std::size_t>(j)];
        EXPECT_GE(z.real(), -1e-10);
        EXPECT_LE(std::abs(z.imag()), 1e-10);
        const double exact = 2.0 / (h * h) * (1.0 - std::cos((j + 1) * std::numbers::pi / (m + 1.0)));
        EXPECT_NEAR(z.real(), exact, 1e-9 * (1.0 + exact));
    }
    EXPECT_TRUE(r.enclosure_violations.empty());
}

TEST(Spectrum, H0ConstantCouplingShiftsLaplacian)
{
    const auto g = build_grid(2, 5.0, 101, 0.1, 2, LateralBC::dirichlet);
    const auto ops = assemble_operators(g, BoundaryCoupling::constant(1.5));
    const auto r = lowest_spectrum(ops, OperatorKind::H0, 3, hermitian_options());
    ASSERT_TRUE(r.complete);
    const double h = g.h_lat, m = static_cast<double>(ops.free_lateral.size());
    for (int j = 0; j < 3; ++j) {
        const double exact = 2.25 + 2.0 / (h * h) * (1.0 - std::cos((j + 1) * std::numbers::pi / (m + 1.0)));
        EXPECT_NEAR(r.eigenvalues[static_cast<std::size_t>(j)].real(), exact, 1e-10);
        EXPECT_EQ(r.eigenvalues[static_cast<std::size_t>(j)].imag(), 0.0);
    }
    // nothing below the threshold beyond the truncation band
    EXPECT_TRUE(r.below_threshold.empty());
    EXPECT_DOUBLE_EQ(r.threshold, 2.25);
    EXPECT_DOUBLE_EQ(r.delta, 10.0 * g.box_mode_energy());
}

TEST(Spectrum, LowerTargetSitsBelowSpectrum)
{
    const auto g = build_grid(2, 5.0, 51, 0.1, 4, LateralBC::dirichlet);
    const auto ops = assemble_operators(g, BoundaryCoupling::gaussian(1.0, -0.5, 1.0, 1.0));
    EXPECT_NEAR(lower_target(ops), 0.25 - 0.1, 1e-3);
    const auto r = lowest_spectrum(ops, OperatorKind::H_eps, 3);
    for (auto z : r.eigenvalues) EXPECT_GT(z.real(), lower_target(ops));
    for (std::size_t i = 1; i < r.eigenvalues.size(); ++i)
        EXPECT_LE(r.eigenvalues[i - 1].real(), r.eigenvalues[i].real());
}

TEST(Spectrum, SharpStepAgainstShooting)
{
    const double c = -0.2;
    const auto g = build_grid(2, 40.0, 1601, 0.1, 2, LateralBC::dirichlet);
    const auto ops = assemble_operators(g, BoundaryCoupling::step(1.0, c, 1.0));
    const auto r = lowest_spectrum(ops, OperatorKind::H0, 3, hermitian_options());
    ASSERT_TRUE(r.complete);
    ASSERT_EQ(r.below_threshold.size(), 1u);
    const double ref = shooting_step(1.0, c, 1.0, 0.0, 0.64 + 1e-9);
    const double mu = r.below_threshold[0].real();
    RecordProperty("shooting", std::to_string(ref));
    EXPECT_NEAR(mu, ref, 5e-5 * ref);
}

TEST(Spectrum, PositiveStepDoesNotBind)
{
    const auto g = build_grid(2, 40.0, 801, 0.1, 2, LateralBC::dirichlet);
    const auto ops = assemble_operators(g, BoundaryCoupling::step(1.0, 0.3, 1.0, 1.0, 0.5));
    const auto r = lowest_spectrum(ops, OperatorKind::H0, 2, hermitian_options());
    EXPECT_TRUE(r.below_threshold.empty());
    EXPECT_GT(r.eigenvalues[0].real(), 1.0);
}

TEST(WeakCoupling, MatchesShootingAndAsymptotics)
{
    const auto g = build_grid(2, 600.0, 24001, 0.1, 2, LateralBC::dirichlet);
    const auto profile = BoundaryCoupling::step(1.0, 1.0, 1.0, 1.0, 0.5);
    const std::vector<double> cs{-0.01, -0.02, -0.04, 0.01, 0.02, 0.0};
    const auto r = weak_coupling_sweep(g, 1.0, profile, cs, OperatorKind::H0, hermitian_options());
    EXPECT_DOUBLE_EQ(r.profile_integral, 2.0);
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (cs[i] < 0.0) {
            ASSERT_TRUE(r.present[i]) << "c = " << cs[i];
            const double ref = shooting_step(1.0, cs[i], 1.0, 0.5, 0.9);
            EXPECT_NEAR(r.mu[i], ref, 5e-5 * (1.0 - ref));
            EXPECT_NEAR(r.prediction[i], 1.0 - cs[i] * cs[i] * 4.0, 1e-15);
            lo = std::min(lo, r.residual_over_c3[i]);
            hi = std::max(hi, r.residual_over_c3[i]);
        } else {
            EXPECT_FALSE(r.present[i]) << "c = " << cs[i];
            EXPECT_GT(r.mu[i], 1.0 - r.delta);
        }
    }
    EXPECT_LE(hi - lo, 2.0);
    EXPECT_DOUBLE_EQ(r.K_fit, hi);
}

TEST(Trajectory, ZeroBaselineHasNothingBelowAndIsSymmetric)
{
    const auto g = build_grid(2, 20.0, 401, 0.1, 2, LateralBC::dirichlet);
    const auto profile = BoundaryCoupling::gaussian(0.0, 1.0, 1.0, 1.0);
    const std::vector<double> cs{-1.0, -0.5, 0.0, 0.5, 1.0};
    const auto t = coupling_trajectory(g, 0.0, profile, cs, hermitian_options(), 2);
    EXPECT_FALSE(t.emergence);
    for (const auto& p : t.points) {
        EXPECT_FALSE(p.below);
        EXPECT_GE(p.lowest, 0.0);
    }
    EXPECT_EQ(t.points[0].lowest, t.points[4].lowest);
    EXPECT_EQ(t.points[1].lowest, t.points[3].lowest);
}

TEST(Trajectory, EmergesDeepensAndReturns)
{
    const auto g = build_grid(2, 40.0, 1601, 0.1, 2, LateralBC::dirichlet);
    const auto profile = BoundaryCoupling::step(1.0, 1.0, 1.0, 1.0, 0.5);
    std::vector<double> cs;
    for (int i = 0; i <= 30; ++i) cs.push_back(-0.1 * i);
    const auto t = coupling_trajectory(g, 1.0, profile, cs, hermitian_options(), 4);
    ASSERT_TRUE(t.emergence);
    ASSERT_TRUE(t.minimum_c);
    ASSERT_TRUE(t.reabsorption);
    EXPECT_GE(*t.emergence, -0.2);
    EXPECT_LT(*t.emergence, 0.0);
    // the well alpha^2 is deepest at alpha0 + c = 0
    EXPECT_NEAR(*t.minimum_c, -1.0, 0.11);
    EXPECT_LT(*t.minimum_value, 0.6);
    EXPECT_GE(*t.reabsorption, -2.3);
    EXPECT_LE(*t.reabsorption, -1.9);
    for (const auto& p : t.points) EXPECT_FALSE(p.rejected) << "c = " << p.c;
}

TEST(Compare, ConstantCouplingGapIsTransverseDiscretization)
{
    // for constant alpha the layer spectrum is the lateral spectrum plus the ground state of
    // the discrete transverse pencil, which differs from alpha^2 by O(h_t^2)
    const double a = 1.0;
    for (double eps : {0.2, 0.1}) {
        const Index nt = 6;
        const auto g = build_grid(2, 4.0, 41, eps, nt, LateralBC::periodic);
        const auto pr = compare_heps_h0_spectra(g, BoundaryCoupling::constant(a), 4);
        const auto tp = oracle::transverse_pencil(static_cast<int>(nt), eps, a);
        cplx ground = 1e300;
        for (auto mu : oracle::pencil_eigenvalues(tp.k, tp.m))
            if (std::abs(mu - a * a) < std::abs(ground - a * a)) ground = mu;
        EXPECT_NEAR(pr.max_distance, std::abs(ground - a * a), 1e-9);
        const double ht = eps / static_cast<double>(nt - 1);
        EXPECT_LE(pr.max_distance, a * a * a * a * ht * ht);
        EXPECT_EQ(pr.pairs.size(), 4u);
    }
}

TEST(Compare, BenchmarkConvergesAsLayerThins)
{
    const auto c = BoundaryCoupling::gaussian(1.0, 1.0, 0.5, 1.0);
    std::vector<double> dist, imag;
    for (double eps : {0.2, 0.1, 0.05}) {
        const auto g = build_grid(2, 12.0, 241, eps, 6, LateralBC::dirichlet);
        const auto pr = compare_heps_h0_spectra(g, c, 4);
        ASSERT_EQ(pr.pairs.size(), 4u);
        dist.push_back(pr.max_distance);
        double im = 0.0;
        for (const auto& p : pr.pairs) im = std::max(im, std::abs(p.lambda_eps.imag()));
        imag.push_back(im);
    }
    for (std::size_t i = 1; i < dist.size(); ++i) {
        EXPECT_LT(dist[i], dist[i - 1] / 3.0);
        EXPECT_LE(imag[i], imag[i - 1] * (1.0 + 1e-9));
    }
    EXPECT_LT(dist.back(), 1e-4);
}

TEST(Compare, BoundStateFollowsEffectiveOperator)
{
    const auto profile = BoundaryCoupling::step(1.0, -0.3, 1.0, 1.0, 0.5);
    std::vector<double> dist;
    for (double eps : {0.2, 0.1}) {
        const auto g = build_grid(2, 20.0, 401, eps, 6, LateralBC::dirichlet);
        const auto pr = compare_heps_h0_spectra(g, profile, 1, true);
        ASSERT_EQ(pr.pairs.size(), 1u);
        dist.push_back(pr.max_distance);
    }
    EXPECT_LT(dist[1], dist[0]);
}

TEST(Enclosure, HoldsAcrossCouplingsAndWidths)
{
    const std::vector<BoundaryCoupling> couplings{BoundaryCoupling::gaussian(1.0, 1.0, 0.5, 1.0),
                                                  BoundaryCoupling::step(1.0, -0.5, 1.0, 1.0, 0.5),
                                                  BoundaryCoupling::gaussian(2.0, -1.0, 3.0, 0.7)};
    for (const auto& c : couplings)
        for (double eps : {0.2, 0.1, 0.05}) {
            const auto g = build_grid(2, 8.0, 161, eps, 6, LateralBC::dirichlet);
            const auto ops = assemble_operators(g, c);
            const auto r = lowest_spectrum(ops, OperatorKind::H_eps, 6);
            EXPECT_TRUE(r.complete);
            EXPECT_TRUE(r.enclosure_violations.empty());
            const double a = c.sup_norms().alpha;
            for (std::size_t i = 0; i < r.eigenvalues.size(); ++i) {
                const cplx z = r.eigenvalues[i];
                EXPECT_GE(z.real(), -1e-8);
                EXPECT_LE(std::abs(z.imag()), 2.0 * a * std::sqrt(std::max(z.real(), 0.0)) + 10.0 * r.residuals[i]);
            }
            const auto h0 = lowest_spectrum(ops, OperatorKind::H0, 3, hermitian_options());
            for (auto z : h0.eigenvalues) EXPECT_LE(std::abs(z.imag()), 1e-10);
        }
}
