#include "fceval/quadrature.hpp"

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "fceval/errors.hpp"

namespace fceval {
namespace {

TEST(IntegrateAdaptive, Polynomial) {
	// Gauss-Kronrod 15 is exact for degree <= 22.
	EXPECT_NEAR(integrate_adaptive([](double x) { return x * x * x; }, 0.0, 2.0), 4.0, 1e-14);
}

TEST(IntegrateAdaptive, SmoothAndPeaked) {
	EXPECT_NEAR(integrate_adaptive([](double x) { return std::sin(x); }, 0.0, M_PI), 2.0, 1e-13);
	// Narrow Gaussian: int exp(-x^2 / (2 s^2)) = s sqrt(2 pi).
	const double s = 1e-3;
	const double v = integrate_adaptive([&](double x) { return std::exp(-x * x / (2 * s * s)); }, -1.0, 1.0);
	EXPECT_NEAR(v / (s * std::sqrt(2 * M_PI)), 1.0, 1e-12);
}

TEST(IntegrateAdaptive, EndpointSingularity) {
	// int_0^1 x^{-1/2} = 2
	const double v = integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0,
	                                    AdaptiveInterval{1e-10, 1e-10, 4000});
	EXPECT_NEAR(v, 2.0, 1e-8);
}

TEST(IntegrateAdaptive, MomentPairOnSharedNodes) {
	const std::vector<double> bp{0.0, 1.0, 5.0, 40.0};
	const auto r = integrate_adaptive([](double x) { return MomentPair{std::exp(-x), x * std::exp(-x)}; }, bp,
	                                  AdaptiveInterval{});
	EXPECT_NEAR(r.value[0], 1.0 - std::exp(-40.0), 1e-14);
	EXPECT_NEAR(r.value[1], 1.0 - 41.0 * std::exp(-40.0), 1e-14);
	EXPECT_GE(r.intervals, 3u);
	EXPECT_LE(r.error[0], 1e-13);
}

TEST(IntegrateAdaptive, Errors) {
	const std::vector<double> one{0.0};
	EXPECT_THROW(integrate_adaptive([](double) { return MomentPair{1, 1}; }, one, AdaptiveInterval{}), DomainError);
	// An oscillating integrand with a tiny budget cannot converge.
	try {
		integrate_adaptive([](double x) { return std::sin(1e4 * x * x); }, 0.0, 10.0, AdaptiveInterval{1e-15, 1e-15, 3});
		FAIL() << "expected QuadratureError";
	} catch (const QuadratureError &e) {
		EXPECT_GT(e.achieved_tolerance(), 1e-15);
		EXPECT_EQ(e.requested_tolerance(), 1e-15);
	}
}

TEST(QuadratureSpec, Validation) {
	EXPECT_NO_THROW(QuadratureSpec{}.validate());
	EXPECT_THROW((QuadratureSpec{AdaptiveInterval{0.0, 1e-10, 100}, 1e-12}.validate()), ConfigError);
	EXPECT_THROW((QuadratureSpec{GaussLaguerre{8}, 1e-12}.validate()), ConfigError);
	EXPECT_THROW((QuadratureSpec{AdaptiveInterval{}, 0.0}.validate()), ConfigError);
	EXPECT_THROW((QuadratureSpec{AdaptiveInterval{}, 1.0}.validate()), ConfigError);
}

TEST(GaussLaguerreRule, WeightsAndMoments) {
	for (std::size_t n : {16u, 32u, 64u, 128u}) {
		const LaguerreRule &rule = gauss_laguerre_rule(n);
		ASSERT_EQ(rule.nodes.size(), n);
		double w = 0.0;
		double m1 = 0.0;
		double m5 = 0.0;
		for (std::size_t i = 0; i < n; ++i) {
			w += rule.weights[i];
			m1 += rule.weights[i] * rule.nodes[i];
			m5 += rule.weights[i] * std::pow(rule.nodes[i], 5);
			EXPECT_NEAR(rule.scaled_weights[i] / (rule.weights[i] * std::exp(rule.nodes[i])), 1.0, 1e-9)
			    << n << " " << i;
		}
		// int x^k e^{-x} = k!
		EXPECT_NEAR(w, 1.0, 1e-13) << n;
		EXPECT_NEAR(m1, 1.0, 1e-13) << n;
		EXPECT_NEAR(m5, 120.0, 1e-10) << n;
	}
	EXPECT_EQ(&gauss_laguerre_rule(64), &gauss_laguerre_rule(64));
	EXPECT_THROW(gauss_laguerre_rule(1), DomainError);
}

TEST(GaussLaguerreRule, KnownNodesForFour) {
	// Roots of L_4, from the closed-form polynomial x^4 - 16x^3 + 72x^2 - 96x + 24.
	const LaguerreRule &rule = gauss_laguerre_rule(4);
	for (double x : rule.nodes) {
		EXPECT_NEAR(((x - 16) * x + 72) * x * x - 96 * x + 24, 0.0, 1e-10);
	}
}

TEST(IntegrateLaguerre, ShiftedAndScaled) {
	// int_1^inf e^{-r/2} dr = 2 e^{-1/2}; second component r e^{-r/2}: 6 e^{-1/2}.
	const MomentPair v = integrate_laguerre(
	    [](double r) { return MomentPair{std::exp(-r / 2), r * std::exp(-r / 2)}; }, 1.0, 2.0,
	    gauss_laguerre_rule(64));
	EXPECT_NEAR(v[0], 2.0 * std::exp(-0.5), 1e-13);
	EXPECT_NEAR(v[1], 6.0 * std::exp(-0.5), 1e-12);
}

} // namespace
} // namespace fceval
