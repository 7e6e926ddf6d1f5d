#pragma once

#include <span>
#include <vector>

#include "fceval/distributions.hpp"
#include "fceval/quadrature.hpp"

namespace fceval {

/// The (rate prior, sales process) pair that defines ground truth, plus how
/// integrals over rates are evaluated.
struct OracleContext {
	RatePrior prior;
	DemandProcess process;
	QuadratureSpec quadrature{};
};

enum class OracleMethod {
	Automatic,  ///< closed form when registered, quadrature otherwise
	ClosedForm, ///< DomainError if no closed form is registered
	Quadrature,
};

/// A registered closed form for one (prior family, process kind) pair.
struct ClosedFormEntry {
	PriorFamily prior;
	ProcessKind process;
	double (*log_target_pmf)(const OracleContext &, Count);
	double (*hindsight_mean)(const OracleContext &, Count);
};

/// Explicit dispatch table consulted by OracleMethod::Automatic.
std::span<const ClosedFormEntry> closed_form_table();
const ClosedFormEntry *find_closed_form(const OracleContext &ctx);

/// log of the marginal outcome probability: log int P_rate(r) P(s|r) dr.
double log_target_pmf(const OracleContext &ctx, Count s, OracleMethod method = OracleMethod::Automatic);
double target_pmf(const OracleContext &ctx, Count s, OracleMethod method = OracleMethod::Automatic);

/// E(s | r). Both process kinds are mean-parameterized, so this is r.
double forward_mean(const OracleContext &ctx, double r);

/// Bayes-reversed density P(r | s) = P(s|r) P_rate(r) / P_target(s).
/// Zero for r < 0; DomainError when s has zero target mass.
double hindsight_density(const OracleContext &ctx, double r, Count s);

/// E(r | s), the mean prediction an outcome s should be expected to carry.
double hindsight_mean(const OracleContext &ctx, Count s, OracleMethod method = OracleMethod::Automatic);

struct HindsightPoint {
	Count outcome;
	double target_probability;
	double hindsight_mean;
};

/// hindsight_mean for s = 0..s_max, skipping outcomes with zero target mass.
std::vector<HindsightPoint> hindsight_curve(const OracleContext &ctx, Count s_max,
                                            OracleMethod method = OracleMethod::Automatic);

} // namespace fceval
