#pragma once

// Independent reference computations for the unit and acceptance tests. They
// use Boost's tanh-sinh / exp-sinh quadrature and plain truncated series, and
// never call into the library's own quadrature or closed forms.

#include <cmath>
#include <functional>
#include <limits>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace fceval::test {

inline double integrate_finite(const std::function<double(double)> &f, double a, double b) {
	boost::math::quadrature::tanh_sinh<double> integrator;
	return integrator.integrate(f, a, b, 1e-14);
}

inline double integrate_half_line(const std::function<double(double)> &f) {
	boost::math::quadrature::exp_sinh<double> integrator;
	return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
}

/// Poisson pmf by direct evaluation, independent of the library's log-space
/// implementation.
inline double poisson_pmf_direct(long s, double r) {
	if (r == 0.0) {
		return s == 0 ? 1.0 : 0.0;
	}
	return std::exp(s * std::log(r) - r - std::lgamma(s + 1.0));
}

inline double gamma_pdf_direct(double r, double shape, double rate) {
	if (r <= 0.0) {
		return r == 0.0 && shape == 1.0 ? rate : 0.0;
	}
	return std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(r) - rate * r - std::lgamma(shape));
}

/// Sum of f(s) for s = 0, 1, ... until the accumulated pmf mass exceeds
/// 1 - tail, where pmf(s) is the probability of s.
inline double truncated_series(const std::function<double(long)> &pmf, const std::function<double(long)> &f,
                               double tail = 1e-12, long cap = 1'000'000) {
	double mass = 0.0;
	double acc = 0.0;
	for (long s = 0; s < cap && mass <= 1.0 - tail; ++s) {
		const double p = pmf(s);
		mass += p;
		acc += f(s) * p;
	}
	return acc;
}

} // namespace fceval::test
