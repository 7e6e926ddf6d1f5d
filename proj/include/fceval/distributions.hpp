#pragma once

#include <cstdint>
#include <limits>
#include <variant>
#include <vector>

#include "fceval/random.hpp"

namespace fceval {

/// Unit sales of one item on one day.
using Count = std::int64_t;

struct GammaPrior {
	double shape; ///< alpha > 0
	double rate;  ///< beta > 0
};

struct LogNormalPrior {
	double mu;
	double sigma; ///< > 0
};

struct UniformPrior {
	double lo; ///< >= 0
	double hi; ///< > lo
};

class RatePrior;

struct MixturePrior {
	std::vector<double> weights;
	std::vector<RatePrior> components;
};

enum class PriorFamily { Gamma, LogNormal, Uniform, Mixture };

/// Distribution of selling rates across an assortment. Immutable and validated
/// at construction; all parameters are rates per day.
class RatePrior {
public:
	using Kind = std::variant<GammaPrior, LogNormalPrior, UniformPrior, MixturePrior>;

	static RatePrior gamma(double shape, double rate);
	static RatePrior lognormal(double mu, double sigma);
	static RatePrior uniform(double lo, double hi);
	/// Weights must be nonnegative and sum to 1 within 1e-12.
	static RatePrior mixture(std::vector<double> weights, std::vector<RatePrior> components);

	const Kind &kind() const noexcept { return kind_; }
	PriorFamily family() const noexcept { return static_cast<PriorFamily>(kind_.index()); }

private:
	explicit RatePrior(Kind kind) : kind_(std::move(kind)) {}

	Kind kind_;
};

/// Closed interval containing the prior's support. `hi` may be +inf.
struct Support {
	double lo;
	double hi;
};

double prior_density(const RatePrior &prior, double r);
/// log of prior_density; -inf outside the support.
double prior_log_density(const RatePrior &prior, double r);
double prior_mean(const RatePrior &prior);
/// P(R > r).
double prior_survival(const RatePrior &prior, double r);
/// Smallest R with prior_survival(R) <= tail_mass (bisection for mixtures).
double prior_upper_quantile(const RatePrior &prior, double tail_mass);
Support prior_support(const RatePrior &prior);
double sample_rate(const RatePrior &prior, RandomStream &rng);

struct PoissonProcess {};

/// Poisson sales whose rate is blurred by a gamma with mean rho (the
/// prediction) and shape kappa; marginally negative binomial with mean rho.
struct NegativeBinomialProcess {
	double blur_shape; ///< kappa > 0
};

enum class ProcessKind { Poisson, NegativeBinomial };

/// Conditional count distribution P(s | r). Both kinds have mean r.
class DemandProcess {
public:
	using Kind = std::variant<PoissonProcess, NegativeBinomialProcess>;

	static DemandProcess poisson() { return DemandProcess(PoissonProcess{}); }
	static DemandProcess negative_binomial(double blur_shape);

	const Kind &kind() const noexcept { return kind_; }
	ProcessKind process_kind() const noexcept { return static_cast<ProcessKind>(kind_.index()); }

private:
	explicit DemandProcess(Kind kind) : kind_(kind) {}

	Kind kind_;
};

double process_log_pmf(const DemandProcess &process, Count s, double r);
double process_pmf(const DemandProcess &process, Count s, double r);
Count sample_sales(const DemandProcess &process, double r, RandomStream &rng);

/// Poisson variate: sequential-search inversion for r < 10, PTRS
/// transformed rejection (Hormann 1993) for r >= 10.
Count sample_poisson(double r, RandomStream &rng);

double poisson_log_pmf(Count s, double r);
/// Negative binomial with mean `mean` and shape `shape`.
double negative_binomial_log_pmf(Count s, double mean, double shape);
double gamma_log_density(double r, double shape, double rate);

} // namespace fceval
