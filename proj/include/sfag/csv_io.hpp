#pragma once

#include "sfag/series.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace sfag {

struct CsvError : std::runtime_error {
    enum class Kind { Io, Empty, Header, MalformedRow, DuplicateDate, BadValue };
    Kind kind;
    int line; // 1-based file line; 0 when not row-specific

    CsvError(Kind k, int line_, const std::string& msg)
        : std::runtime_error(msg), kind(k), line(line_) {}
};

/// Parsed `date,close` or `date,return` file, rows sorted by date.
/// Origin/seed are in-memory metadata only; they do not survive a CSV
/// round-trip.
struct IngestResult {
    enum class Kind { Prices, Returns } kind = Kind::Returns;
    std::vector<std::string> dates;
    PricePath prices;      // Kind::Prices only
    ReturnSeries returns;  // Kind::Returns only
};

IngestResult ingest_csv(const std::string& path);

/// Ingests either schema and yields returns (prices become log returns).
ReturnSeries ingest_returns(const std::string& path);

/// Writes `date,return` rows under sequential calendar dates so the file
/// re-ingests in identical order. %.17g values round-trip exactly.
void write_returns_csv(const std::string& path, const ReturnSeries& r,
                       const std::string& start_date = "2000-01-03");
void write_returns_csv(const std::string& path, const ReturnSeries& r,
                       const std::vector<std::string>& dates);
void write_prices_csv(const std::string& path, const PricePath& p);

} // namespace sfag
