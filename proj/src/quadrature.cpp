#include "fceval/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>

#include <Eigen/Eigenvalues>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fceval/errors.hpp"
#include "overloaded.hpp"

namespace fceval {
namespace {

using Kronrod = boost::math::quadrature::gauss_kronrod<double, 15>;
using Gauss = boost::math::quadrature::gauss<double, 7>;

struct Panel {
	double a;
	double b;
	MomentPair value;
	MomentPair error;
};

Panel evaluate_panel(const std::function<MomentPair(double)> &f, double a, double b) {
	const auto &x = Kronrod::abscissa();
	const auto &wk = Kronrod::weights();
	const auto &wg = Gauss::weights();
	const double center = 0.5 * (a + b);
	const double half = 0.5 * (b - a);

	// Gauss order 7 is odd: the centre node and every other Kronrod node
	// belong to the embedded Gauss rule.
	MomentPair kronrod{};
	MomentPair gauss{};
	const MomentPair f0 = f(center);
	for (int k = 0; k < 2; ++k) {
		kronrod[k] = f0[k] * wk[0];
		gauss[k] = f0[k] * wg[0];
	}
	for (std::size_t i = 1; i < x.size(); ++i) {
		const MomentPair fp = f(center + half * x[i]);
		const MomentPair fm = f(center - half * x[i]);
		for (int k = 0; k < 2; ++k) {
			const double s = fp[k] + fm[k];
			kronrod[k] += s * wk[i];
			if (i % 2 == 0) {
				gauss[k] += s * wg[i / 2];
			}
		}
	}
	Panel p{a, b, {}, {}};
	for (int k = 0; k < 2; ++k) {
		p.value[k] = half * kronrod[k];
		p.error[k] = std::max(std::abs(half * (kronrod[k] - gauss[k])),
		                      2.0 * std::numeric_limits<double>::epsilon() * std::abs(p.value[k]));
	}
	return p;
}

// Extended precision: node polish and weights lose ~log10(n) digits otherwise.
long double laguerre(std::size_t n, long double x) {
	long double prev = 1.0L;
	long double cur = 1.0L - x;
	if (n == 0) {
		return prev;
	}
	for (std::size_t k = 1; k < n; ++k) {
		const long double next = ((2.0L * k + 1.0L - x) * cur - k * prev) / (k + 1.0L);
		prev = cur;
		cur = next;
	}
	return cur;
}

LaguerreRule build_laguerre_rule(std::size_t n) {
	// Jacobi matrix of the Laguerre recurrence: diagonal 2i+1, off-diagonal i.
	Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
	for (std::size_t i = 0; i < n; ++i) {
		const auto ii = static_cast<Eigen::Index>(i);
		jacobi(ii, ii) = 2.0 * static_cast<double>(i) + 1.0;
		if (i + 1 < n) {
			jacobi(ii, ii + 1) = static_cast<double>(i + 1);
			jacobi(ii + 1, ii) = static_cast<double>(i + 1);
		}
	}
	const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);

	LaguerreRule rule;
	rule.nodes.resize(n);
	rule.weights.resize(n);
	rule.scaled_weights.resize(n);
	const double log_norm = 2.0 * std::log(static_cast<double>(n) + 1.0);
	for (std::size_t i = 0; i < n; ++i) {
		long double x = solver.eigenvalues()(static_cast<Eigen::Index>(i));
		// Newton polish: L_n'(x) = n (L_n(x) - L_{n-1}(x)) / x.
		for (int it = 0; it < 4; ++it) {
			const long double ln = laguerre(n, x);
			const long double dln = static_cast<long double>(n) * (ln - laguerre(n - 1, x)) / x;
			if (dln == 0.0L) {
				break;
			}
			x -= ln / dln;
		}
		const double log_w =
		    static_cast<double>(std::log(x) - log_norm - 2.0L * std::log(std::abs(laguerre(n + 1, x))));
		rule.nodes[i] = static_cast<double>(x);
		rule.weights[i] = std::exp(log_w);
		rule.scaled_weights[i] = std::exp(log_w + rule.nodes[i]);
	}
	return rule;
}

} // namespace

void QuadratureSpec::validate() const {
	std::visit(detail::Overloaded{
	               [](const AdaptiveInterval &a) {
		               if (!(a.abs_tol > 0.0) || !(a.rel_tol > 0.0)) {
			               throw ConfigError("quadrature: tolerances must be > 0");
		               }
		               if (a.max_subdivisions == 0) {
			               throw ConfigError("quadrature: max_subdivisions must be >= 1");
		               }
	               },
	               [](const GaussLaguerre &g) {
		               if (g.node_count < 16) {
			               throw ConfigError("quadrature: Gauss-Laguerre needs node_count >= 16");
		               }
	               },
	           },
	           scheme);
	if (!(upper_cutoff_mass > 0.0 && upper_cutoff_mass < 1.0)) {
		throw ConfigError("quadrature: upper_cutoff_mass must lie in (0, 1)");
	}
}

AdaptiveResult integrate_adaptive(const std::function<MomentPair(double)> &f, std::span<const double> breakpoints,
                                  const AdaptiveInterval &tolerance) {
	if (breakpoints.size() < 2) {
		throw DomainError("integrate_adaptive: need at least two breakpoints");
	}
	std::vector<Panel> panels;
	for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
		if (breakpoints[i + 1] > breakpoints[i]) {
			panels.push_back(evaluate_panel(f, breakpoints[i], breakpoints[i + 1]));
		}
	}
	AdaptiveResult result;
	if (panels.empty()) {
		return result;
	}

	for (;;) {
		MomentPair total{};
		MomentPair error{};
		for (const Panel &p : panels) {
			for (int k = 0; k < 2; ++k) {
				total[k] += p.value[k];
				error[k] += p.error[k];
			}
		}
		MomentPair allowed{};
		bool converged = true;
		for (int k = 0; k < 2; ++k) {
			allowed[k] = std::max(tolerance.abs_tol, tolerance.rel_tol * std::abs(total[k]));
			converged = converged && error[k] <= allowed[k];
		}
		result.value = total;
		result.error = error;
		result.intervals = panels.size();
		if (converged) {
			return result;
		}
		if (panels.size() >= tolerance.max_subdivisions) {
			const double achieved = std::max(error[0] / std::max(std::abs(total[0]), tolerance.abs_tol),
			                                 error[1] / std::max(std::abs(total[1]), tolerance.abs_tol));
			throw QuadratureError("adaptive quadrature did not converge", achieved, tolerance.rel_tol);
		}
		auto worst = std::max_element(panels.begin(), panels.end(), [&](const Panel &x, const Panel &y) {
			return std::max(x.error[0] / allowed[0], x.error[1] / allowed[1]) <
			       std::max(y.error[0] / allowed[0], y.error[1] / allowed[1]);
		});
		const double a = worst->a;
		const double b = worst->b;
		const double mid = 0.5 * (a + b);
		if (!(mid > a && mid < b)) {
			const double achieved = std::max(error[0] / std::max(std::abs(total[0]), tolerance.abs_tol),
			                                 error[1] / std::max(std::abs(total[1]), tolerance.abs_tol));
			throw QuadratureError("adaptive quadrature exhausted floating-point resolution", achieved,
			                      tolerance.rel_tol);
		}
		*worst = evaluate_panel(f, a, mid);
		panels.push_back(evaluate_panel(f, mid, b));
	}
}

double integrate_adaptive(const std::function<double(double)> &f, double a, double b,
                          const AdaptiveInterval &tolerance) {
	const std::array<double, 2> bounds{a, b};
	// Second component is a copy of the first so the tolerance test is unchanged.
	const AdaptiveResult r = integrate_adaptive(
	    [&](double x) {
		    const double v = f(x);
		    return MomentPair{v, v};
	    },
	    bounds, tolerance);
	return r.value[0];
}

const LaguerreRule &gauss_laguerre_rule(std::size_t node_count) {
	static std::mutex mutex;
	static std::map<std::size_t, std::unique_ptr<LaguerreRule>> cache;
	if (node_count < 2) {
		throw DomainError("gauss_laguerre_rule: need at least 2 nodes");
	}
	const std::lock_guard lock(mutex);
	auto &slot = cache[node_count];
	if (!slot) {
		slot = std::make_unique<LaguerreRule>(build_laguerre_rule(node_count));
	}
	return *slot;
}

MomentPair integrate_laguerre(const std::function<MomentPair(double)> &f, double lower, double scale,
                              const LaguerreRule &rule) {
	MomentPair acc{};
	for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
		const MomentPair v = f(lower + scale * rule.nodes[i]);
		for (int k = 0; k < 2; ++k) {
			acc[k] += rule.scaled_weights[i] * v[k];
		}
	}
	return {scale * acc[0], scale * acc[1]};
}

} // namespace fceval
