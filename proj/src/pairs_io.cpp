#include "fceval/pairs_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string_view>

#include "fceval/errors.hpp"

namespace fceval {
namespace {

std::string_view trim(std::string_view s) {
	while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
		s.remove_prefix(1);
	}
	while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
		s.remove_suffix(1);
	}
	return s;
}

std::vector<std::string_view> split(std::string_view line) {
	std::vector<std::string_view> fields;
	std::size_t start = 0;
	while (true) {
		const auto comma = line.find(',', start);
		fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
		if (comma == std::string_view::npos) {
			break;
		}
		start = comma + 1;
	}
	return fields;
}

template <class T> std::optional<T> parse_exact(std::string_view field) {
	T value{};
	const char *begin = field.data();
	const char *end = field.data() + field.size();
	if (!field.empty() && field.front() == '+') {
		++begin;
	}
	const auto [ptr, ec] = std::from_chars(begin, end, value);
	if (ec != std::errc{} || ptr != end || begin == end) {
		return std::nullopt;
	}
	return value;
}

} // namespace

std::vector<ForecastOutcomePair> parse_pairs(std::istream &in) {
	std::string line;
	std::size_t line_no = 0;
	std::optional<std::array<std::size_t, 3>> columns;
	std::size_t column_count = 0;
	std::vector<ForecastOutcomePair> pairs;

	while (std::getline(in, line)) {
		++line_no;
		std::string_view view = line;
		if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) {
			view.remove_prefix(3);
		}
		if (trim(view).empty()) {
			continue;
		}
		const std::vector<std::string_view> fields = split(view);
		if (!columns) {
			std::array<std::size_t, 3> idx{};
			constexpr std::array<std::string_view, 3> names{"item_id", "prediction", "outcome"};
			for (std::size_t c = 0; c < names.size(); ++c) {
				const auto it = std::find(fields.begin(), fields.end(), names[c]);
				if (it == fields.end()) {
					throw DataError("missing column '" + std::string(names[c]) + "' in header", line_no);
				}
				idx[c] = static_cast<std::size_t>(it - fields.begin());
			}
			columns = idx;
			column_count = fields.size();
			continue;
		}
		if (fields.size() != column_count) {
			throw DataError("expected " + std::to_string(column_count) + " fields, found " +
			                    std::to_string(fields.size()),
			                line_no);
		}
		const auto id = parse_exact<std::int64_t>(fields[(*columns)[0]]);
		if (!id) {
			throw DataError("item_id '" + std::string(fields[(*columns)[0]]) + "' is not an integer", line_no);
		}
		const auto prediction = parse_exact<double>(fields[(*columns)[1]]);
		if (!prediction || !std::isfinite(*prediction)) {
			throw DataError("prediction '" + std::string(fields[(*columns)[1]]) + "' is not a finite number", line_no);
		}
		if (*prediction < 0.0) {
			throw DataError("prediction must be >= 0 (got " + std::string(fields[(*columns)[1]]) + ")", line_no);
		}
		const auto outcome = parse_exact<Count>(fields[(*columns)[2]]);
		if (!outcome) {
			throw DataError("outcome '" + std::string(fields[(*columns)[2]]) + "' is not an integer count", line_no);
		}
		if (*outcome < 0) {
			throw DataError("outcome must be >= 0 (got " + std::to_string(*outcome) + ")", line_no);
		}
		pairs.push_back({*id, *prediction, *outcome});
	}
	if (!columns) {
		throw DataError("empty input: no header");
	}
	if (pairs.empty()) {
		throw DataError("no data rows after header");
	}
	return pairs;
}

std::vector<ForecastOutcomePair> load_pairs(const std::filesystem::path &path) {
	std::ifstream in(path, std::ios::binary);
	if (!in) {
		throw DataError("cannot open '" + path.string() + "'");
	}
	return parse_pairs(in);
}

std::string format_number(double value) {
	std::array<char, 32> buf{};
	const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
	if (ec != std::errc{}) {
		return "nan";
	}
	return std::string(buf.data(), ptr);
}

void write_pairs(std::ostream &out, std::span<const ForecastOutcomePair> pairs) {
	out << "item_id,prediction,outcome\n";
	for (const auto &p : pairs) {
		out << std::to_string(p.item_id) << ',' << format_number(p.prediction) << ',' << std::to_string(p.outcome) << '\n';
	}
}

} // namespace fceval
