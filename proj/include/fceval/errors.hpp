#pragma once

#include <cstddef>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace fceval {

/// Invalid argument to a distribution or oracle (negative count, negative rate,
/// bad family parameters, conditioning on an impossible outcome).
class DomainError : public std::domain_error {
public:
	using std::domain_error::domain_error;
};

/// Malformed or out-of-contract input data. Carries the 1-based line number
/// when the data came from a file.
class DataError : public std::runtime_error {
public:
	explicit DataError(const std::string &what, std::size_t line = 0)
	    : std::runtime_error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

	std::size_t line() const noexcept { return line_; }

private:
	std::size_t line_;
};

/// Configuration or usage error.
class ConfigError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

/// Numerical integration did not reach the requested tolerance.
class QuadratureError : public std::runtime_error {
public:
	QuadratureError(const std::string &what, double achieved, double requested)
	    : std::runtime_error(what + " (achieved relative error " + sci(achieved) + ", requested " + sci(requested) +
	                         ")"),
	      achieved_(achieved), requested_(requested) {}

	double achieved_tolerance() const noexcept { return achieved_; }
	double requested_tolerance() const noexcept { return requested_; }

	/// Copy whose message is prefixed with `context`.
	QuadratureError with_context(const std::string &context) const {
		return QuadratureError(Prefixed{}, context + what(), achieved_, requested_);
	}

private:
	struct Prefixed {};
	static std::string sci(double v) {
		char buf[32];
		std::snprintf(buf, sizeof buf, "%.3g", v);
		return buf;
	}
	QuadratureError(Prefixed, const std::string &full, double achieved, double requested)
	    : std::runtime_error(full), achieved_(achieved), requested_(requested) {}

	double achieved_;
	double requested_;
};

} // namespace fceval
