#include "fceval/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "fceval/errors.hpp"
#include "overloaded.hpp"

namespace fceval {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using detail::Overloaded;

void require(bool ok, const std::string &message) {
	if (!ok) {
		throw DomainError(message);
	}
}

double log_sum_exp(double a, double b) {
	if (a == -kInf) {
		return b;
	}
	if (b == -kInf) {
		return a;
	}
	const double m = std::max(a, b);
	return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double lgamma_safe(double x) { return boost::math::lgamma(x); }

} // namespace

// ---------------------------------------------------------------------------
// construction

RatePrior RatePrior::gamma(double shape, double rate) {
	require(std::isfinite(shape) && shape > 0.0, "gamma prior: shape must be finite and > 0");
	require(std::isfinite(rate) && rate > 0.0, "gamma prior: rate must be finite and > 0");
	return RatePrior(GammaPrior{shape, rate});
}

RatePrior RatePrior::lognormal(double mu, double sigma) {
	require(std::isfinite(mu), "lognormal prior: mu must be finite");
	require(std::isfinite(sigma) && sigma > 0.0, "lognormal prior: sigma must be finite and > 0");
	return RatePrior(LogNormalPrior{mu, sigma});
}

RatePrior RatePrior::uniform(double lo, double hi) {
	require(std::isfinite(lo) && lo >= 0.0, "uniform prior: lo must be finite and >= 0");
	require(std::isfinite(hi) && hi > lo, "uniform prior: hi must be finite and > lo");
	return RatePrior(UniformPrior{lo, hi});
}

RatePrior RatePrior::mixture(std::vector<double> weights, std::vector<RatePrior> components) {
	require(!components.empty(), "mixture prior: needs at least one component");
	require(weights.size() == components.size(), "mixture prior: weights and components differ in length");
	for (double w : weights) {
		require(std::isfinite(w) && w >= 0.0, "mixture prior: weights must be finite and >= 0");
	}
	const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
	require(std::abs(total - 1.0) <= 1e-12, "mixture prior: weights must sum to 1 within 1e-12");
	return RatePrior(MixturePrior{std::move(weights), std::move(components)});
}

DemandProcess DemandProcess::negative_binomial(double blur_shape) {
	require(std::isfinite(blur_shape) && blur_shape > 0.0, "negative binomial process: shape must be finite and > 0");
	return DemandProcess(NegativeBinomialProcess{blur_shape});
}

// ---------------------------------------------------------------------------
// prior

double gamma_log_density(double r, double shape, double rate) {
	if (r < 0.0) {
		return -kInf;
	}
	const double norm = shape * std::log(rate) - lgamma_safe(shape);
	if (r == 0.0) {
		if (shape == 1.0) {
			return norm;
		}
		return shape < 1.0 ? kInf : -kInf;
	}
	return norm + (shape - 1.0) * std::log(r) - rate * r;
}

double prior_log_density(const RatePrior &prior, double r) {
	return std::visit(Overloaded{
	                      [&](const GammaPrior &g) { return gamma_log_density(r, g.shape, g.rate); },
	                      [&](const LogNormalPrior &l) {
		                      if (r <= 0.0) {
			                      return -kInf;
		                      }
		                      const double z = (std::log(r) - l.mu) / l.sigma;
		                      return -0.5 * z * z - std::log(r * l.sigma) - 0.5 * std::log(2.0 * M_PI);
	                      },
	                      [&](const UniformPrior &u) {
		                      if (r < u.lo || r > u.hi) {
			                      return -kInf;
		                      }
		                      return -std::log(u.hi - u.lo);
	                      },
	                      [&](const MixturePrior &m) {
		                      double acc = -kInf;
		                      for (std::size_t i = 0; i < m.components.size(); ++i) {
			                      if (m.weights[i] > 0.0) {
				                      acc = log_sum_exp(acc, std::log(m.weights[i]) +
				                                                 prior_log_density(m.components[i], r));
			                      }
		                      }
		                      return acc;
	                      },
	                  },
	                  prior.kind());
}

double prior_density(const RatePrior &prior, double r) { return std::exp(prior_log_density(prior, r)); }

double prior_mean(const RatePrior &prior) {
	return std::visit(Overloaded{
	                      [](const GammaPrior &g) { return g.shape / g.rate; },
	                      [](const LogNormalPrior &l) { return std::exp(l.mu + 0.5 * l.sigma * l.sigma); },
	                      [](const UniformPrior &u) { return 0.5 * (u.lo + u.hi); },
	                      [](const MixturePrior &m) {
		                      double acc = 0.0;
		                      for (std::size_t i = 0; i < m.components.size(); ++i) {
			                      acc += m.weights[i] * prior_mean(m.components[i]);
		                      }
		                      return acc;
	                      },
	                  },
	                  prior.kind());
}

double prior_survival(const RatePrior &prior, double r) {
	return std::visit(Overloaded{
	                      [&](const GammaPrior &g) {
		                      return r <= 0.0 ? 1.0 : boost::math::gamma_q(g.shape, g.rate * r);
	                      },
	                      [&](const LogNormalPrior &l) {
		                      if (r <= 0.0) {
			                      return 1.0;
		                      }
		                      return 0.5 * boost::math::erfc((std::log(r) - l.mu) / (l.sigma * M_SQRT2));
	                      },
	                      [&](const UniformPrior &u) {
		                      if (r <= u.lo) {
			                      return 1.0;
		                      }
		                      if (r >= u.hi) {
			                      return 0.0;
		                      }
		                      return (u.hi - r) / (u.hi - u.lo);
	                      },
	                      [&](const MixturePrior &m) {
		                      double acc = 0.0;
		                      for (std::size_t i = 0; i < m.components.size(); ++i) {
			                      acc += m.weights[i] * prior_survival(m.components[i], r);
		                      }
		                      return acc;
	                      },
	                  },
	                  prior.kind());
}

double prior_upper_quantile(const RatePrior &prior, double tail_mass) {
	require(tail_mass > 0.0 && tail_mass < 1.0, "tail mass must lie in (0, 1)");
	return std::visit(Overloaded{
	                      [&](const GammaPrior &g) { return boost::math::gamma_q_inv(g.shape, tail_mass) / g.rate; },
	                      [&](const LogNormalPrior &l) {
		                      return std::exp(l.mu + l.sigma * M_SQRT2 * boost::math::erfc_inv(2.0 * tail_mass));
	                      },
	                      [&](const UniformPrior &u) { return u.hi - tail_mass * (u.hi - u.lo); },
	                      [&](const MixturePrior &m) {
		                      // Every component quantile bounds the mixture quantile from above.
		                      double hi = 0.0;
		                      for (const auto &c : m.components) {
			                      hi = std::max(hi, prior_upper_quantile(c, tail_mass));
		                      }
		                      double lo = 0.0;
		                      for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
			                      const double mid = 0.5 * (lo + hi);
			                      if (prior_survival(prior, mid) <= tail_mass) {
				                      hi = mid;
			                      } else {
				                      lo = mid;
			                      }
		                      }
		                      return hi;
	                      },
	                  },
	                  prior.kind());
}

Support prior_support(const RatePrior &prior) {
	return std::visit(Overloaded{
	                      [](const GammaPrior &) { return Support{0.0, kInf}; },
	                      [](const LogNormalPrior &) { return Support{0.0, kInf}; },
	                      [](const UniformPrior &u) { return Support{u.lo, u.hi}; },
	                      [](const MixturePrior &m) {
		                      Support s{kInf, -kInf};
		                      for (std::size_t i = 0; i < m.components.size(); ++i) {
			                      if (m.weights[i] > 0.0) {
				                      const Support c = prior_support(m.components[i]);
				                      s.lo = std::min(s.lo, c.lo);
				                      s.hi = std::max(s.hi, c.hi);
			                      }
		                      }
		                      return s;
	                      },
	                  },
	                  prior.kind());
}

double sample_rate(const RatePrior &prior, RandomStream &rng) {
	return std::visit(Overloaded{
	                      [&](const GammaPrior &g) {
		                      std::gamma_distribution<double> dist(g.shape, 1.0 / g.rate);
		                      return dist(rng.engine());
	                      },
	                      [&](const LogNormalPrior &l) {
		                      std::lognormal_distribution<double> dist(l.mu, l.sigma);
		                      return dist(rng.engine());
	                      },
	                      [&](const UniformPrior &u) { return u.lo + (u.hi - u.lo) * rng.uniform01(); },
	                      [&](const MixturePrior &m) {
		                      const double u = rng.uniform01();
		                      double cumulative = 0.0;
		                      std::size_t pick = m.components.size() - 1;
		                      for (std::size_t i = 0; i < m.components.size(); ++i) {
			                      cumulative += m.weights[i];
			                      if (u < cumulative && m.weights[i] > 0.0) {
				                      pick = i;
				                      break;
			                      }
		                      }
		                      return sample_rate(m.components[pick], rng);
	                      },
	                  },
	                  prior.kind());
}

// ---------------------------------------------------------------------------
// process

double poisson_log_pmf(Count s, double r) {
	if (r == 0.0) {
		return s == 0 ? 0.0 : -kInf;
	}
	const double sd = static_cast<double>(s);
	return sd * std::log(r) - r - lgamma_safe(sd + 1.0);
}

double negative_binomial_log_pmf(Count s, double mean, double shape) {
	if (mean == 0.0) {
		return s == 0 ? 0.0 : -kInf;
	}
	const double sd = static_cast<double>(s);
	const double log_choose = lgamma_safe(sd + shape) - lgamma_safe(shape) - lgamma_safe(sd + 1.0);
	const double log_fail = -shape * std::log1p(mean / shape);
	const double log_succ = s == 0 ? 0.0 : sd * (std::log(mean) - std::log(shape + mean));
	return log_choose + log_fail + log_succ;
}

double process_log_pmf(const DemandProcess &process, Count s, double r) {
	if (s < 0) {
		throw DomainError("process pmf: count must be >= 0");
	}
	if (!(r >= 0.0) || !std::isfinite(r)) {
		throw DomainError("process pmf: rate must be finite and >= 0");
	}
	return std::visit(Overloaded{
	                      [&](const PoissonProcess &) { return poisson_log_pmf(s, r); },
	                      [&](const NegativeBinomialProcess &nb) {
		                      return negative_binomial_log_pmf(s, r, nb.blur_shape);
	                      },
	                  },
	                  process.kind());
}

double process_pmf(const DemandProcess &process, Count s, double r) {
	return std::exp(process_log_pmf(process, s, r));
}

Count sample_poisson(double r, RandomStream &rng) {
	if (!(r >= 0.0) || !std::isfinite(r)) {
		throw DomainError("poisson sampler: rate must be finite and >= 0");
	}
	if (r == 0.0) {
		return 0;
	}
	if (r < 10.0) {
		const double u = rng.uniform01();
		double p = std::exp(-r);
		double cdf = p;
		Count k = 0;
		// Rounding can leave cdf a hair below u in the far tail; the cap keeps
		// that from running away.
		while (u > cdf && k < 1000) {
			++k;
			p *= r / static_cast<double>(k);
			cdf += p;
		}
		return k;
	}

	const double slam = std::sqrt(r);
	const double loglam = std::log(r);
	const double b = 0.931 + 2.53 * slam;
	const double a = -0.059 + 0.02483 * b;
	const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
	const double vr = 0.9277 - 3.6224 / (b - 2.0);
	for (;;) {
		const double u = rng.uniform01() - 0.5;
		const double v = rng.uniform01();
		const double us = 0.5 - std::abs(u);
		const double k = std::floor((2.0 * a / us + b) * u + r + 0.43);
		if (us >= 0.07 && v <= vr) {
			return static_cast<Count>(k);
		}
		if (k < 0.0 || (us < 0.013 && v > us)) {
			continue;
		}
		if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <= -r + k * loglam - lgamma_safe(k + 1.0)) {
			return static_cast<Count>(k);
		}
	}
}

Count sample_sales(const DemandProcess &process, double r, RandomStream &rng) {
	if (!(r >= 0.0) || !std::isfinite(r)) {
		throw DomainError("sales sampler: rate must be finite and >= 0");
	}
	return std::visit(Overloaded{
	                      [&](const PoissonProcess &) { return sample_poisson(r, rng); },
	                      [&](const NegativeBinomialProcess &nb) {
		                      if (r == 0.0) {
			                      return Count{0};
		                      }
		                      std::gamma_distribution<double> blur(nb.blur_shape, r / nb.blur_shape);
		                      return sample_poisson(blur(rng.engine()), rng);
	                      },
	                  },
	                  process.kind());
}

} // namespace fceval
