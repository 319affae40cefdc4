#include "sfag/csv_io.hpp"
#include "sfag/garch.hpp"
#include "sfag/report.hpp"
#include "sfag/rng.hpp"
#include "sfag/series.hpp"
#include "sfag/stylized_facts.hpp"
#include "sfag/version.hpp"

#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

using namespace sfag;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("sfag_io_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

CsvError caught(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const CsvError& e) {
        return e;
    }
    return CsvError(CsvError::Kind::Io, -1, "<no CsvError thrown>");
}

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

} // namespace

TEST_SUITE("csv") {

    TEST_CASE("two-row close file yields a one-return series") {
        TempDir tmp;
        const auto p = tmp.file("prices.csv");
        spit(p, "date,close\n2020-01-02,100\n2020-01-03,110\n");
        const auto res = ingest_csv(p);
        REQUIRE(res.kind == IngestResult::Kind::Prices);
        REQUIRE(res.prices.values.size() == 2);
        CHECK(res.prices.values[0] == 100.0);
        CHECK(res.prices.values[1] == 110.0);
        CHECK(res.dates == std::vector<std::string>{"2020-01-02", "2020-01-03"});

        const auto r = ingest_returns(p);
        REQUIRE(r.size() == 1);
        CHECK(r.values[0] == doctest::Approx(std::log(1.1)).epsilon(1e-12));
    }

    TEST_CASE("return files parse without a price conversion") {
        TempDir tmp;
        const auto p = tmp.file("returns.csv");
        spit(p, "date,return\n2020-01-02,0.01\n2020-01-03,-0.02\n2020-01-06,0\n");
        const auto res = ingest_csv(p);
        REQUIRE(res.kind == IngestResult::Kind::Returns);
        CHECK(res.returns.values == std::vector<double>{0.01, -0.02, 0.0});
        CHECK(ingest_returns(p).values == res.returns.values);
    }

    TEST_CASE("negative close is rejected with its line number") {
        TempDir tmp;
        const auto p = tmp.file("bad.csv");
        std::string text = "date,close\n";
        for (int d = 1; d <= 5; ++d) text += "2020-01-0" + std::to_string(d) + ",100\n";
        text += "2020-01-06,-5\n"; // file line 7
        spit(p, text);
        const auto e = caught([&] { ingest_csv(p); });
        CHECK(e.kind == CsvError::Kind::BadValue);
        CHECK(e.line == 7);
        CHECK(std::string(e.what()).find("line 7") != std::string::npos);
    }

    TEST_CASE("unsorted dates ingest identically to sorted ones") {
        TempDir tmp;
        const auto sorted_path = tmp.file("sorted.csv");
        const auto shuffled_path = tmp.file("shuffled.csv");
        spit(sorted_path, "date,close\n"
                          "2020-01-02,100\n2020-01-03,103\n2020-01-06,99\n"
                          "2020-01-07,104\n2020-01-08,101\n");
        spit(shuffled_path, "date,close\n"
                            "2020-01-07,104\n2020-01-02,100\n2020-01-08,101\n"
                            "2020-01-03,103\n2020-01-06,99\n");
        const auto a = ingest_csv(sorted_path);
        const auto b = ingest_csv(shuffled_path);
        CHECK(a.dates == b.dates);
        CHECK(a.prices.values == b.prices.values);
        CHECK(ingest_returns(sorted_path).values == ingest_returns(shuffled_path).values);
    }

    TEST_CASE("duplicate dates are rejected naming the later line") {
        TempDir tmp;
        const auto p = tmp.file("dup.csv");
        spit(p, "date,return\n2020-01-02,0.01\n2020-01-03,0.02\n"
                "2020-01-06,0.03\n2020-01-03,0.04\n");
        const auto e = caught([&] { ingest_csv(p); });
        CHECK(e.kind == CsvError::Kind::DuplicateDate);
        CHECK(e.line == 5);
        CHECK(std::string(e.what()).find("2020-01-03") != std::string::npos);
    }

    TEST_CASE("each failure mode has its own error kind") {
        TempDir tmp;

        SUBCASE("missing file") {
            const auto e = caught([&] { ingest_csv(tmp.file("absent.csv")); });
            CHECK(e.kind == CsvError::Kind::Io);
            CHECK(e.line == 0);
        }
        SUBCASE("empty file") {
            const auto p = tmp.file("empty.csv");
            spit(p, "");
            CHECK(caught([&] { ingest_csv(p); }).kind == CsvError::Kind::Empty);
        }
        SUBCASE("header only") {
            const auto p = tmp.file("headeronly.csv");
            spit(p, "date,return\n");
            const auto e = caught([&] { ingest_csv(p); });
            CHECK(e.kind == CsvError::Kind::Empty);
            CHECK(std::string(e.what()).find("no data rows") != std::string::npos);
        }
        SUBCASE("unknown header") {
            const auto p = tmp.file("badheader.csv");
            spit(p, "time,close\n2020-01-02,100\n");
            const auto e = caught([&] { ingest_csv(p); });
            CHECK(e.kind == CsvError::Kind::Header);
            CHECK(e.line == 1);
        }
        SUBCASE("three fields") {
            const auto p = tmp.file("threefields.csv");
            spit(p, "date,return\n2020-01-02,0.01,extra\n");
            const auto e = caught([&] { ingest_csv(p); });
            CHECK(e.kind == CsvError::Kind::MalformedRow);
            CHECK(e.line == 2);
        }
        SUBCASE("bad date") {
            const auto p = tmp.file("baddate.csv");
            spit(p, "date,return\n2020-13-01,0.01\n");
            const auto e = caught([&] { ingest_csv(p); });
            CHECK(e.kind == CsvError::Kind::MalformedRow);
            CHECK(std::string(e.what()).find("2020-13-01") != std::string::npos);
        }
        SUBCASE("unparseable value") {
            const auto p = tmp.file("badvalue.csv");
            spit(p, "date,return\n2020-01-02,abc\n");
            const auto e = caught([&] { ingest_csv(p); });
            CHECK(e.kind == CsvError::Kind::MalformedRow);
            CHECK(std::string(e.what()).find("abc") != std::string::npos);
        }
        SUBCASE("non-finite value") {
            const auto p = tmp.file("nan.csv");
            spit(p, "date,return\n2020-01-02,nan\n");
            CHECK(caught([&] { ingest_csv(p); }).kind == CsvError::Kind::BadValue);
        }
    }

    TEST_CASE("blank lines and CRLF endings are tolerated") {
        TempDir tmp;
        const auto p = tmp.file("crlf.csv");
        spit(p, "date,return\r\n2020-01-02,0.01\r\n\r\n2020-01-03,0.02\r\n");
        const auto r = ingest_returns(p);
        CHECK(r.values == std::vector<double>{0.01, 0.02});
    }

    TEST_CASE("header matching is case-insensitive") {
        TempDir tmp;
        const auto p = tmp.file("upper.csv");
        spit(p, "Date,Close\n2020-01-02,100\n2020-01-03,101\n");
        CHECK(ingest_csv(p).kind == IngestResult::Kind::Prices);
    }

    TEST_CASE("written returns round-trip bit-exactly") {
        TempDir tmp;
        Rng rng(51);
        ReturnSeries r;
        r.origin = Origin::Synthetic;
        for (int i = 0; i < 300; ++i) r.values.push_back(0.0123 * rng.normal());
        const auto p = tmp.file("roundtrip.csv");
        write_returns_csv(p, r);

        const auto back = ingest_csv(p);
        REQUIRE(back.kind == IngestResult::Kind::Returns);
        CHECK(back.returns.values == r.values);
        CHECK(back.dates.front() == "2000-01-03");
        CHECK(back.dates.back() > back.dates.front());
        // Origin/seed are in-memory metadata and do not survive the trip.
        CHECK(back.returns.origin == Origin::Real);
        CHECK_FALSE(back.returns.seed.has_value());
    }

    TEST_CASE("written prices round-trip bit-exactly") {
        TempDir tmp;
        PricePath path;
        Rng rng(52);
        double px = 100.0;
        for (int i = 0; i < 50; ++i) {
            px *= std::exp(0.01 * rng.normal());
            path.values.push_back(px);
        }
        ReturnSeries dates_only;
        dates_only.values.assign(path.values.size(), 0.0);
        // Borrow the sequential-date writer to get matching labels.
        const auto datefile = tmp.file("dates.csv");
        write_returns_csv(datefile, dates_only);
        path.dates = ingest_csv(datefile).dates;

        const auto p = tmp.file("prices_rt.csv");
        write_prices_csv(p, path);
        const auto back = ingest_csv(p);
        REQUIRE(back.kind == IngestResult::Kind::Prices);
        CHECK(back.prices.values == path.values);
        CHECK(back.dates == path.dates);
    }

    TEST_CASE("writer rejects mismatched dates and undated prices") {
        TempDir tmp;
        ReturnSeries r;
        r.values = {0.01, 0.02};
        const std::vector<std::string> one_date = {"2020-01-02"};
        CHECK_THROWS_AS(write_returns_csv(tmp.file("x.csv"), r, one_date),
                        std::invalid_argument);
        PricePath p;
        p.values = {100.0, 101.0};
        CHECK_THROWS_AS(write_prices_csv(tmp.file("y.csv"), p), std::invalid_argument);
        CHECK_THROWS_AS(write_returns_csv(tmp.file("z.csv"), r, "2020/01/02"),
                        std::invalid_argument);
    }

    TEST_CASE("date arithmetic crosses month and year boundaries") {
        TempDir tmp;
        ReturnSeries r;
        r.values.assign(3, 0.001);
        const auto p = tmp.file("newyear.csv");
        write_returns_csv(p, r, "2019-12-31");
        const auto back = ingest_csv(p);
        CHECK(back.dates ==
              std::vector<std::string>{"2019-12-31", "2020-01-01", "2020-01-02"});
    }
}

TEST_SUITE("report") {

    TEST_CASE("envelope carries schema, tool, command, and config") {
        Json cfg{{"seed", 42}, {"iterations", 10}};
        const Json j = report_envelope("train", cfg);
        CHECK(j.at("schema_version").get<int>() == kReportSchemaVersion);
        CHECK(j.at("tool").get<std::string>() == "sfag");
        CHECK(j.at("tool_version").get<std::string>() == kToolVersion);
        CHECK(j.at("command").get<std::string>() == "train");
        CHECK(j.at("config") == cfg);
        // No timestamps: two calls serialize to identical bytes.
        CHECK(j.dump() == report_envelope("train", cfg).dump());
    }

    TEST_CASE("backtest result round-trips through a json file") {
        TempDir tmp;
        BacktestResult r;
        r.ann_return = 0.123456789012345;
        r.ann_vol = 0.2;
        r.sharpe = r.ann_return / r.ann_vol;
        r.max_drawdown = 0.31;
        r.var95 = -0.021;
        r.cvar95 = -0.034;
        r.n_days = 440;
        r.n_trades = 17;
        const auto p = tmp.file("bt.json");
        write_json(p, to_json(r));
        const Json back = read_json(p);
        CHECK(json_number(back.at("ann_return")) == r.ann_return);
        CHECK(json_number(back.at("ann_vol")) == r.ann_vol);
        CHECK(json_number(back.at("sharpe")) == r.sharpe);
        CHECK(json_number(back.at("max_drawdown")) == r.max_drawdown);
        CHECK(json_number(back.at("var95")) == r.var95);
        CHECK(json_number(back.at("cvar95")) == r.cvar95);
        CHECK(back.at("n_days").get<int>() == 440);
        CHECK(back.at("n_trades").get<int>() == 17);
        CHECK(back == to_json(r));
    }

    TEST_CASE("NaN metrics serialize as null and read back as NaN") {
        TempDir tmp;
        BacktestResult r;
        r.ann_vol = 0.0;
        r.sharpe = std::nan("");
        r.var95 = std::nan("");
        r.cvar95 = std::nan("");
        r.n_days = 12;
        const auto p = tmp.file("nan.json");
        write_json(p, to_json(r));
        CHECK(slurp(p).find("null") != std::string::npos);
        const Json back = read_json(p);
        CHECK(back.at("sharpe").is_null());
        CHECK(std::isnan(json_number(back.at("sharpe"))));
        CHECK(std::isnan(json_number(back.at("var95"))));
        CHECK(json_number(back.at("ann_vol")) == 0.0);
    }

    TEST_CASE("json_number accepts plain numerics") {
        CHECK(json_number(Json(1.5)) == 1.5);
        CHECK(json_number(Json(3)) == 3.0);
        CHECK(std::isnan(json_number(Json(nullptr))));
    }

    TEST_CASE("train log records serialize without wall-clock time") {
        TrainLogRecord rec;
        rec.iteration = 7;
        rec.critic_loss = 1.25;
        rec.total = -0.5;
        rec.anneal = 0.35;
        rec.tail_skipped = 2;
        rec.wall_seconds = 123.0;
        const Json j = to_json(rec);
        CHECK_FALSE(j.contains("wall_seconds"));
        CHECK(j.size() == 12);
        CHECK(j.at("iteration").get<int>() == 7);
        CHECK(j.at("critic_loss").get<double>() == 1.25);
        CHECK(j.at("anneal").get<double>() == 0.35);
        CHECK(j.at("tail_skipped").get<int>() == 2);
    }

    TEST_CASE("read_json reports unreadable and invalid input") {
        TempDir tmp;
        CHECK_THROWS_AS(read_json(tmp.file("missing.json")), std::runtime_error);
        const auto p = tmp.file("broken.json");
        spit(p, "{ not json");
        try {
            read_json(p);
            FAIL("expected a parse error");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find("invalid JSON") != std::string::npos);
        }
    }

    TEST_CASE("evaluation reports keep full estimator payloads") {
        const auto real = simulate_garch(3000, 61);
        const auto ev = evaluate_paths(real, {real});
        const Json j = to_json(ev);
        CHECK(j.at("gaps").at("gpd_gap").get<double>() == 0.0);
        CHECK(j.at("real").at("tail").at("n_exceed").get<int>() ==
              ev.real.tail.n_exceed);
        CHECK(j.at("real").at("acf_abs").at("values").size() == 20);
        CHECK(j.at("real").at("cfvc").at("windows") == Json::array({5, 20, 60, 120}));
        CHECK(j.at("synth").at("tail_excess").size() ==
              static_cast<std::size_t>(ev.synth.tail.n_exceed));
        // Lossless double round trip through text.
        const Json back = Json::parse(j.dump());
        CHECK(back.at("real").at("tail").at("xi").get<double>() == ev.real.tail.xi);
        CHECK(back.at("real").at("leverage").get<double>() == ev.real.leverage);
    }

    TEST_CASE("figure data covers the six panels") {
        TempDir tmp;
        const auto real = simulate_garch(3000, 62);
        const auto ev = evaluate_paths(real, {simulate_garch(3000, 63)});
        Json report;
        report["real"] = to_json(ev.real);
        report["runs"] = Json::array();
        report["runs"].push_back(Json{{"synth", to_json(ev.synth)}, {"gaps", to_json(ev.gaps)}});

        write_figure_data(tmp.path.string(), report);

        const auto acf = slurp(tmp.file("fig_acf.csv"));
        CHECK(acf.rfind("lag,real,synth\n", 0) == 0);
        CHECK(count_lines(acf) == 21); // header + 20 lags

        const auto tail_real = slurp(tmp.file("fig_tail_real.csv"));
        CHECK(tail_real.rfind("p,empirical_excess,fitted_excess\n", 0) == 0);
        CHECK(count_lines(tail_real) == 1 + ev.real.tail.n_exceed);
        const auto tail_synth = slurp(tmp.file("fig_tail_synth.csv"));
        CHECK(count_lines(tail_synth) == 1 + ev.synth.tail.n_exceed);

        const auto cfvc_real = slurp(tmp.file("fig_cfvc_real.csv"));
        CHECK(cfvc_real.rfind("window,w5,w20,w60,w120\n", 0) == 0);
        CHECK(count_lines(cfvc_real) == 5); // header + 4 windows
        CHECK(count_lines(slurp(tmp.file("fig_cfvc_synth.csv"))) == 5);

        const auto gaps = slurp(tmp.file("fig_gaps.csv"));
        CHECK(gaps.rfind("metric,real,synth,gap\n", 0) == 0);
        CHECK(gaps.find("tail_xi,") != std::string::npos);
        CHECK(gaps.find("leverage,") != std::string::npos);
        CHECK(gaps.find("acf_mse,") != std::string::npos);
        CHECK(gaps.find("cfvc_frobenius,") != std::string::npos);
    }
}
