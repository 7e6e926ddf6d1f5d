#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace fceval {

/// Neumaier (improved Kahan-Babuska) compensated accumulator.
class CompensatedSum {
public:
	CompensatedSum() = default;
	explicit CompensatedSum(double initial) : sum_(initial) {}

	void add(double x) noexcept {
		const double t = sum_ + x;
		if (std::abs(sum_) >= std::abs(x)) {
			compensation_ += (sum_ - t) + x;
		} else {
			compensation_ += (x - t) + sum_;
		}
		sum_ = t;
	}

	CompensatedSum &operator+=(double x) noexcept {
		add(x);
		return *this;
	}

	/// Merges a partial sum computed elsewhere.
	CompensatedSum &operator+=(const CompensatedSum &other) noexcept {
		add(other.sum_);
		add(other.compensation_);
		return *this;
	}

	double value() const noexcept { return sum_ + compensation_; }

private:
	double sum_ = 0.0;
	double compensation_ = 0.0;
};

inline double compensated_sum(std::span<const double> values) noexcept {
	CompensatedSum acc;
	for (double v : values) {
		acc.add(v);
	}
	return acc.value();
}

/// Arithmetic mean with compensated summation. Empty input yields NaN.
inline double compensated_mean(std::span<const double> values) noexcept {
	if (values.empty()) {
		return std::nan("");
	}
	return compensated_sum(values) / static_cast<double>(values.size());
}

} // namespace fceval
