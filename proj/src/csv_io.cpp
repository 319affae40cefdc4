#include "sfag/csv_io.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sfag {

namespace {

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

bool valid_date(const std::string& d) {
    if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(d[i]))) return false;
    const int month = (d[5] - '0') * 10 + (d[6] - '0');
    const int day = (d[8] - '0') * 10 + (d[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

double parse_number(const std::string& s, int line) {
    const char* begin = s.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin || *end != '\0')
        throw CsvError(CsvError::Kind::MalformedRow, line,
                       "line " + std::to_string(line) + ": unparseable value '" + s + "'");
    return v;
}

struct Row {
    std::string date;
    double value;
    int line;
};

} // namespace

IngestResult ingest_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw CsvError(CsvError::Kind::Io, 0, "cannot open '" + path + "'");

    std::string header;
    if (!std::getline(in, header))
        throw CsvError(CsvError::Kind::Empty, 0, "'" + path + "' is empty");
    header = strip_cr(header);
    std::string lowered = header;
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return std::tolower(c); });

    IngestResult out;
    if (lowered == "date,close") out.kind = IngestResult::Kind::Prices;
    else if (lowered == "date,return") out.kind = IngestResult::Kind::Returns;
    else
        throw CsvError(CsvError::Kind::Header, 1,
                       "header must be 'date,close' or 'date,return', got '" + header + "'");
    const bool prices = out.kind == IngestResult::Kind::Prices;

    std::vector<Row> rows;
    std::string raw;
    int line = 1;
    while (std::getline(in, raw)) {
        ++line;
        raw = strip_cr(raw);
        if (raw.empty()) continue;
        const auto comma = raw.find(',');
        if (comma == std::string::npos || raw.find(',', comma + 1) != std::string::npos)
            throw CsvError(CsvError::Kind::MalformedRow, line,
                           "line " + std::to_string(line) + ": expected two fields");
        Row row;
        row.date = raw.substr(0, comma);
        row.line = line;
        if (!valid_date(row.date))
            throw CsvError(CsvError::Kind::MalformedRow, line,
                           "line " + std::to_string(line) + ": bad date '" + row.date + "'");
        row.value = parse_number(raw.substr(comma + 1), line);
        if (!std::isfinite(row.value))
            throw CsvError(CsvError::Kind::BadValue, line,
                           "line " + std::to_string(line) + ": non-finite value");
        if (prices && row.value <= 0.0)
            throw CsvError(CsvError::Kind::BadValue, line,
                           "line " + std::to_string(line) + ": non-positive close " +
                               std::to_string(row.value));
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw CsvError(CsvError::Kind::Empty, 0, "'" + path + "' has no data rows");

    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].date == rows[i - 1].date)
            throw CsvError(CsvError::Kind::DuplicateDate, rows[i].line,
                           "line " + std::to_string(rows[i].line) + ": duplicate date " +
                               rows[i].date);

    out.dates.reserve(rows.size());
    for (const Row& row : rows) out.dates.push_back(row.date);
    if (prices) {
        out.prices.dates = out.dates;
        out.prices.values.reserve(rows.size());
        for (const Row& row : rows) out.prices.values.push_back(row.value);
        out.prices.validate();
    } else {
        out.returns.values.reserve(rows.size());
        for (const Row& row : rows) out.returns.values.push_back(row.value);
        out.returns.validate();
    }
    return out;
}

ReturnSeries ingest_returns(const std::string& path) {
    IngestResult res = ingest_csv(path);
    if (res.kind == IngestResult::Kind::Returns) return std::move(res.returns);
    return log_returns(res.prices);
}

namespace {

std::chrono::year_month_day parse_ymd(const std::string& s) {
    if (!valid_date(s))
        throw std::invalid_argument("bad start date '" + s + "'");
    const int y = std::stoi(s.substr(0, 4));
    const unsigned m = static_cast<unsigned>(std::stoi(s.substr(5, 2)));
    const unsigned d = static_cast<unsigned>(std::stoi(s.substr(8, 2)));
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) throw std::invalid_argument("bad start date '" + s + "'");
    return ymd;
}

std::string format_ymd(std::chrono::sys_days d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

void write_rows(const std::string& path, const char* header,
                const std::vector<std::string>& dates, const std::vector<double>& values) {
    std::ofstream out(path);
    if (!out) throw CsvError(CsvError::Kind::Io, 0, "cannot write '" + path + "'");
    out << header << '\n';
    char buf[40];
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
        out << dates[i] << ',' << buf << '\n';
    }
    if (!out) throw CsvError(CsvError::Kind::Io, 0, "write failed for '" + path + "'");
}

} // namespace

void write_returns_csv(const std::string& path, const ReturnSeries& r,
                       const std::string& start_date) {
    r.validate();
    const std::chrono::sys_days start{parse_ymd(start_date)};
    std::vector<std::string> dates;
    dates.reserve(r.values.size());
    for (std::size_t i = 0; i < r.values.size(); ++i)
        dates.push_back(format_ymd(start + std::chrono::days{static_cast<long>(i)}));
    write_rows(path, "date,return", dates, r.values);
}

void write_returns_csv(const std::string& path, const ReturnSeries& r,
                       const std::vector<std::string>& dates) {
    r.validate();
    if (dates.size() != r.values.size())
        throw std::invalid_argument("need one date per return: " + std::to_string(dates.size()) +
                                    " dates for " + std::to_string(r.values.size()) + " values");
    write_rows(path, "date,return", dates, r.values);
}

void write_prices_csv(const std::string& path, const PricePath& p) {
    p.validate();
    if (p.dates.size() != p.values.size())
        throw std::invalid_argument("price path needs a date per value to serialize");
    write_rows(path, "date,close", p.dates, p.values);
}

} // namespace sfag
