#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fceval/synthetic_market.hpp"

namespace fceval {

/// Reads forecast/outcome pairs from CSV with header columns `item_id`,
/// `prediction` and `outcome` (any order, extra columns ignored). Numbers are
/// parsed locale-independently. Throws DataError naming the 1-based line of
/// the first malformed row; empty and header-only inputs are errors too.
std::vector<ForecastOutcomePair> parse_pairs(std::istream &in);
std::vector<ForecastOutcomePair> load_pairs(const std::filesystem::path &path);

/// Writes the same CSV contract (LF line endings, shortest round-trip numbers).
void write_pairs(std::ostream &out, std::span<const ForecastOutcomePair> pairs);

/// Shortest decimal that round-trips, '.' as decimal point.
std::string format_number(double value);

} // namespace fceval
