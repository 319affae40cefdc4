#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "sfag/csv_io.hpp"
#include "sfag/model.hpp"
#include "sfag/report.hpp"
#include "sfag/rng.hpp"
#include "sfag/series.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using sfag::Json;
namespace fs = std::filesystem;

namespace {

std::string g_bin; // path to the sfag executable, from argv[1]

struct CmdResult {
    int code;
    std::string output;
};

CmdResult run_cli(const std::string& args) {
    const std::string cmd = g_bin + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) out.append(buf, got);
    const int status = pclose(pipe);
    REQUIRE(WIFEXITED(status));
    return {WEXITSTATUS(status), out};
}

struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path() /
               ("sfag_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    std::string sub(const std::string& name) const { return (path / name).string(); }
};

void spit(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_config(const std::string& path, const Json& j) { spit(path, j.dump(2) + "\n"); }

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

Json small_train_config(const std::string& input, int iterations) {
    return Json{{"input", input},
                {"arch",
                 Json{{"latent_dim", 8},
                      {"seq_len", 128},
                      {"gen_hidden", Json::array({16})},
                      {"critic_hidden", Json::array({16, 8})}}},
                {"iterations", iterations},
                {"n_critic", 2},
                {"batch", 4},
                {"checkpoint_every", 2},
                {"seed", 3}};
}

} // namespace

TEST_SUITE("cli") {

    TEST_CASE("version flag and missing subcommand") {
        const auto v = run_cli("--version");
        CHECK(v.code == 0);
        CHECK(v.output.find("0.1.0") != std::string::npos);
        CHECK(run_cli("").code == 2);
        CHECK(run_cli("frobnicate").code == 2);
    }

    TEST_CASE("simulate writes a schema-complete, seed-deterministic csv") {
        TempDir tmp;
        const auto cfg = tmp.file("sim.json");
        write_config(cfg, Json{{"n", 1000}, {"seed", 5}});

        CHECK(run_cli("simulate --config " + cfg + " --out " + tmp.sub("a")).code == 0);
        CHECK(run_cli("simulate --config " + cfg + " --out " + tmp.sub("b")).code == 0);
        const auto csv_a = slurp(tmp.sub("a") + "/returns.csv");
        CHECK(csv_a == slurp(tmp.sub("b") + "/returns.csv"));
        CHECK(count_lines(csv_a) == 1001); // header + n rows
        CHECK(csv_a.rfind("date,return\n", 0) == 0);

        const Json rep = sfag::read_json(tmp.sub("a") + "/simulate_report.json");
        CHECK(rep.at("schema_version").get<int>() == 1);
        CHECK(rep.at("tool").get<std::string>() == "sfag");
        CHECK(rep.at("command").get<std::string>() == "simulate");
        CHECK(rep.at("config").at("n").get<int>() == 1000);
        CHECK(rep.at("config").at("seed").get<int>() == 5);
        CHECK(rep.at("summary").at("std").get<double>() > 0.0);

        // --seed overrides the config seed and changes the sample.
        CHECK(run_cli("simulate --config " + cfg + " --seed 6 --out " + tmp.sub("c")).code == 0);
        CHECK(slurp(tmp.sub("c") + "/returns.csv") != csv_a);
        const Json rep_c = sfag::read_json(tmp.sub("c") + "/simulate_report.json");
        CHECK(rep_c.at("config").at("seed").get<int>() == 6);
    }

    TEST_CASE("ingest converts prices and preserves return dates") {
        TempDir tmp;
        const auto prices = tmp.file("prices.csv");
        spit(prices, "date,close\n2020-01-08,104\n2020-01-02,100\n"
                     "2020-01-03,102\n2020-01-06,101\n2020-01-07,103\n");
        CHECK(run_cli("ingest --input " + prices + " --out " + tmp.sub("p")).code == 0);
        const Json rep = sfag::read_json(tmp.sub("p") + "/ingest_report.json");
        CHECK(rep.at("detected").get<std::string>() == "prices");
        CHECK(rep.at("rows").get<int>() == 4);
        const auto out = sfag::ingest_csv(tmp.sub("p") + "/returns.csv");
        REQUIRE(out.kind == sfag::IngestResult::Kind::Returns);
        // Returns are labeled with the date they realize on, sorted.
        CHECK(out.dates == std::vector<std::string>{"2020-01-03", "2020-01-06", "2020-01-07",
                                                    "2020-01-08"});

        // A returns-schema file passes through with its own dates intact.
        const auto rets = tmp.file("rets.csv");
        spit(rets, "date,return\n2021-03-05,0.01\n2021-03-01,-0.02\n2021-03-03,0.005\n");
        CHECK(run_cli("ingest --input " + rets + " --out " + tmp.sub("r")).code == 0);
        const auto back = sfag::ingest_csv(tmp.sub("r") + "/returns.csv");
        CHECK(back.dates ==
              std::vector<std::string>{"2021-03-01", "2021-03-03", "2021-03-05"});
        CHECK(back.returns.values == std::vector<double>{-0.02, 0.005, 0.01});
    }

    TEST_CASE("ingest output is a fixed point of ingestion") {
        TempDir tmp;
        const auto cfg = tmp.file("sim.json");
        write_config(cfg, Json{{"n", 200}, {"seed", 17}});
        REQUIRE(run_cli("simulate --config " + cfg + " --out " + tmp.sub("sim")).code == 0);
        const auto first = tmp.sub("sim") + "/returns.csv";
        REQUIRE(run_cli("ingest --input " + first + " --out " + tmp.sub("again")).code == 0);
        CHECK(slurp(tmp.sub("again") + "/returns.csv") == slurp(first));
    }

    TEST_CASE("end-to-end pipeline over a small model") {
        TempDir tmp;

        // simulate -----------------------------------------------------
        const auto sim_cfg = tmp.file("sim.json");
        write_config(sim_cfg, Json{{"n", 1000}, {"seed", 11}});
        REQUIRE(run_cli("simulate --config " + sim_cfg + " --out " + tmp.sub("sim")).code == 0);
        const auto real_csv = tmp.sub("sim") + "/returns.csv";

        // train --------------------------------------------------------
        const auto train_cfg = tmp.file("train.json");
        write_config(train_cfg, small_train_config(real_csv, 3));
        const auto tr = run_cli("train --config " + train_cfg + " --out " + tmp.sub("train"));
        REQUIRE(tr.code == 0);
        for (const char* f : {"gen_final.sfag", "critic_final.sfag", "train_log.jsonl",
                              "train_report.json", "gen_iter_000002.sfag",
                              "critic_iter_000002.sfag"})
            CHECK(fs::exists(tmp.sub("train") + "/" + f));

        const auto log_text = slurp(tmp.sub("train") + "/train_log.jsonl");
        REQUIRE(count_lines(log_text) == 3);
        std::istringstream log_in(log_text);
        std::string line;
        int iter = 0;
        while (std::getline(log_in, line)) {
            const Json rec = Json::parse(line);
            CHECK(rec.at("iteration").get<int>() == ++iter);
            CHECK(rec.contains("critic_loss"));
            CHECK(rec.contains("total"));
            CHECK_FALSE(rec.contains("wall_seconds"));
        }
        const Json trep = sfag::read_json(tmp.sub("train") + "/train_report.json");
        CHECK(trep.at("config").at("iterations").get<int>() == 3);
        CHECK(trep.contains("targets")); // alignment active by default
        CHECK(trep.at("final").at("iteration").get<int>() == 3);

        // train re-run from the embedded config is bit-identical -------
        const auto train_cfg2 = tmp.file("train2.json");
        write_config(train_cfg2, trep.at("config"));
        REQUIRE(run_cli("train --config " + train_cfg2 + " --out " + tmp.sub("train2")).code == 0);
        CHECK(slurp(tmp.sub("train2") + "/gen_final.sfag") ==
              slurp(tmp.sub("train") + "/gen_final.sfag"));
        CHECK(slurp(tmp.sub("train2") + "/train_log.jsonl") == log_text);

        // generate -----------------------------------------------------
        const auto gen_ckpt = tmp.sub("train") + "/gen_final.sfag";
        const std::string gen_args =
            "generate --checkpoint " + gen_ckpt + " --n-paths 6 --seed 9 --out ";
        REQUIRE(run_cli(gen_args + tmp.sub("gen")).code == 0);
        REQUIRE(run_cli(gen_args + tmp.sub("gen2")).code == 0);
        std::vector<std::string> path_files;
        for (int i = 0; i < 6; ++i) {
            char name[24];
            std::snprintf(name, sizeof(name), "path_%03d.csv", i);
            const auto p = tmp.sub("gen") + "/" + name;
            REQUIRE(fs::exists(p));
            CHECK(slurp(p) == slurp(tmp.sub("gen2") + "/" + name)); // same seed, same bytes
            CHECK(count_lines(slurp(p)) == 129);                    // header + seq_len
            path_files.push_back(p);
        }
        const Json grep_ = sfag::read_json(tmp.sub("gen") + "/generate_report.json");
        CHECK(grep_.at("arch").at("seq_len").get<int>() == 128);
        CHECK(grep_.at("outputs").size() == 6);

        // evaluate -----------------------------------------------------
        std::string eval_args = "evaluate --real " + real_csv + " --paths";
        for (const auto& p : path_files) eval_args += " " + p;
        REQUIRE(run_cli(eval_args + " --out " + tmp.sub("eval")).code == 0);
        const Json erep = sfag::read_json(tmp.sub("eval") + "/evaluate_report.json");
        CHECK(erep.at("real").at("tail").at("n_exceed").get<int>() >= 30);
        REQUIRE(erep.at("runs").size() == 1);
        const Json& gaps = erep.at("runs").at(0).at("gaps");
        for (const char* k : {"gpd_gap", "acf_gap", "leverage_gap", "cfvc_gap"}) {
            CHECK(gaps.at(k).get<double>() >= 0.0);
            CHECK(erep.at("mean_gaps").at(k) == gaps.at(k)); // single run
        }

        // evaluate re-run from the embedded config is bit-identical ----
        const auto eval_cfg = tmp.file("eval.json");
        write_config(eval_cfg, erep.at("config"));
        REQUIRE(run_cli("evaluate --config " + eval_cfg + " --out " + tmp.sub("eval2")).code == 0);
        CHECK(slurp(tmp.sub("eval2") + "/evaluate_report.json") ==
              slurp(tmp.sub("eval") + "/evaluate_report.json"));

        // evaluating the real series against itself zeroes the gaps ----
        REQUIRE(run_cli("evaluate --real " + real_csv + " --paths " + real_csv + " --out " +
                        tmp.sub("self")).code == 0);
        const Json self = sfag::read_json(tmp.sub("self") + "/evaluate_report.json");
        for (const char* k : {"gpd_gap", "acf_gap", "leverage_gap", "cfvc_gap"})
            CHECK(self.at("runs").at(0).at("gaps").at(k).get<double>() == 0.0);

        // backtest -----------------------------------------------------
        std::string bt_args = "backtest --paths";
        for (const auto& p : path_files) bt_args += " " + p;
        const auto bt_cfg = tmp.file("bt.json");
        write_config(bt_cfg, Json{{"strategy", Json{{"lookback", 20}, {"cost_bps", 5.0}}}});
        REQUIRE(run_cli(bt_args + " --config " + bt_cfg + " --out " + tmp.sub("bt")).code == 0);
        const Json brep = sfag::read_json(tmp.sub("bt") + "/backtest_report.json");
        REQUIRE(brep.at("paths").size() == 6);
        for (const auto& row : brep.at("paths")) {
            CHECK(row.at("n_days").get<int>() == 108);
            CHECK(row.contains("file"));
        }
        for (const char* k :
             {"ann_return", "ann_vol", "sharpe", "max_drawdown", "var95", "cvar95"}) {
            CHECK(brep.at("mean").contains(k));
            CHECK(brep.at("stddev").contains(k));
        }

        // backtest re-run from the embedded config is bit-identical ----
        const auto bt_cfg2 = tmp.file("bt2.json");
        write_config(bt_cfg2, brep.at("config"));
        REQUIRE(run_cli("backtest --config " + bt_cfg2 + " --out " + tmp.sub("bt2")).code == 0);
        CHECK(slurp(tmp.sub("bt2") + "/backtest_report.json") ==
              slurp(tmp.sub("bt") + "/backtest_report.json"));

        // report -------------------------------------------------------
        REQUIRE(run_cli("report --evaluate " + tmp.sub("eval") + "/evaluate_report.json" +
                        " --backtest " + tmp.sub("bt") + "/backtest_report.json" + " --out " +
                        tmp.sub("rep")).code == 0);
        const Json rrep = sfag::read_json(tmp.sub("rep") + "/report.json");
        CHECK(rrep.at("evaluate").at("command").get<std::string>() == "evaluate");
        CHECK(rrep.at("backtest").at("command").get<std::string>() == "backtest");
        for (const char* f : {"fig_acf.csv", "fig_tail_real.csv", "fig_tail_synth.csv",
                              "fig_cfvc_real.csv", "fig_cfvc_synth.csv", "fig_gaps.csv"})
            CHECK(fs::exists(tmp.sub("rep") + "/" + f));
        CHECK(slurp(tmp.sub("rep") + "/fig_acf.csv").rfind("lag,real,synth\n", 0) == 0);
    }

    TEST_CASE("multi-run evaluate averages the per-run gaps") {
        TempDir tmp;
        for (int seed : {21, 22, 23}) {
            const auto cfg = tmp.file("sim" + std::to_string(seed) + ".json");
            write_config(cfg, Json{{"n", 1000}, {"seed", seed}});
            REQUIRE(run_cli("simulate --config " + cfg + " --out " +
                            tmp.sub("s" + std::to_string(seed))).code == 0);
        }
        const auto real = tmp.sub("s21") + "/returns.csv";
        const auto eval_cfg = tmp.file("eval.json");
        write_config(
            eval_cfg,
            Json{{"real", real},
                 {"runs",
                  Json::array(
                      {Json{{"label", "sfag"},
                            {"paths", Json::array({tmp.sub("s22") + "/returns.csv"})}},
                       Json{{"label", "baseline"},
                            {"paths", Json::array({tmp.sub("s23") + "/returns.csv"})}}})}});
        REQUIRE(run_cli("evaluate --config " + eval_cfg + " --out " + tmp.sub("ev")).code == 0);
        const Json rep = sfag::read_json(tmp.sub("ev") + "/evaluate_report.json");
        REQUIRE(rep.at("runs").size() == 2);
        CHECK(rep.at("runs").at(0).at("label").get<std::string>() == "sfag");
        CHECK(rep.at("runs").at(1).at("label").get<std::string>() == "baseline");
        for (const char* k : {"gpd_gap", "acf_gap", "leverage_gap", "cfvc_gap"}) {
            const double g0 = rep.at("runs").at(0).at("gaps").at(k).get<double>();
            const double g1 = rep.at("runs").at(1).at("gaps").at(k).get<double>();
            CHECK(rep.at("mean_gaps").at(k).get<double>() == (g0 + g1) / 2.0);
        }
    }

    TEST_CASE("error conditions map to distinct exit codes") {
        TempDir tmp;

        SUBCASE("usage and config errors exit 2") {
            CHECK(run_cli("simulate --config " + tmp.file("absent.json")).code == 2);
            const auto bad = tmp.file("bad.json");
            spit(bad, "{ not json");
            CHECK(run_cli("simulate --config " + bad).code == 2);
            const auto unknown = tmp.file("unknown.json");
            write_config(unknown, Json{{"n", 100}, {"bogus_key", 1}});
            CHECK(run_cli("simulate --config " + unknown + " --out " + tmp.sub("o")).code == 2);
            const auto tiny = tmp.file("tiny.json");
            write_config(tiny, Json{{"n", 1}});
            CHECK(run_cli("simulate --config " + tiny + " --out " + tmp.sub("o")).code == 2);
            CHECK(run_cli("train --out " + tmp.sub("o")).code == 2);
            CHECK(run_cli("evaluate --real x.csv --out " + tmp.sub("o")).code == 2);
        }

        SUBCASE("unreadable input files exit 3") {
            CHECK(run_cli("ingest --input " + tmp.file("absent.csv") + " --out " +
                          tmp.sub("o")).code == 3);
            CHECK(run_cli("report --evaluate " + tmp.file("absent.json") + " --out " +
                          tmp.sub("o")).code == 3);
        }

        SUBCASE("malformed csv data exits 4") {
            const auto bad = tmp.file("bad.csv");
            spit(bad, "date,close\n2020-01-02,100\n2020-01-03,-5\n");
            CHECK(run_cli("ingest --input " + bad + " --out " + tmp.sub("o")).code == 4);
        }

        SUBCASE("checkpoint problems exit 5") {
            CHECK(run_cli("generate --checkpoint " + tmp.file("absent.sfag") + " --out " +
                          tmp.sub("o")).code == 5);
            const auto junk = tmp.file("junk.sfag");
            spit(junk, "XFAGgarbage");
            CHECK(run_cli("generate --checkpoint " + junk + " --out " + tmp.sub("o")).code == 5);
        }

        SUBCASE("incompatible inputs exit 6") {
            sfag::ArchSpec arch;
            arch.latent_dim = 8;
            arch.seq_len = 128;
            arch.gen_hidden = {16};
            arch.critic_hidden = {16, 8};
            sfag::Rng rng(71);
            const auto critic_path = tmp.file("critic.sfag");
            sfag::save_checkpoint(sfag::init_critic(arch, rng), critic_path);
            CHECK(run_cli("generate --checkpoint " + critic_path + " --out " +
                          tmp.sub("o")).code == 6);

            // Paths shorter than the longest CFVC window cannot be evaluated.
            sfag::ReturnSeries okr, shortr;
            for (int i = 0; i < 200; ++i) okr.values.push_back(i % 2 == 0 ? 0.01 : -0.011);
            for (int i = 0; i < 50; ++i) shortr.values.push_back(i % 2 == 0 ? 0.01 : -0.011);
            const auto ok_csv = tmp.file("ok.csv");
            const auto short_csv = tmp.file("short.csv");
            sfag::write_returns_csv(ok_csv, okr);
            sfag::write_returns_csv(short_csv, shortr);
            CHECK(run_cli("evaluate --real " + ok_csv + " --paths " + short_csv + " --out " +
                          tmp.sub("o")).code == 6);
            CHECK(run_cli("evaluate --real " + short_csv + " --paths " + ok_csv + " --out " +
                          tmp.sub("o")).code == 6);
        }

        SUBCASE("domain validation failures exit 2") {
            sfag::ReturnSeries r;
            for (int i = 0; i < 10; ++i) r.values.push_back(0.01);
            const auto csv = tmp.file("ten.csv");
            sfag::write_returns_csv(csv, r);
            // Ten rows cannot support the default 60-day lookback.
            CHECK(run_cli("backtest --paths " + csv + " --out " + tmp.sub("o")).code == 2);
        }

        SUBCASE("estimator failures exit 7") {
            // A constant series defeats the GPD threshold (degenerate tail).
            sfag::ReturnSeries flat;
            flat.values.assign(200, 0.001);
            const auto csv = tmp.file("flat.csv");
            sfag::write_returns_csv(csv, flat);
            CHECK(run_cli("evaluate --real " + csv + " --paths " + csv + " --out " +
                          tmp.sub("o")).code == 7);
        }
    }
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: %s <path-to-sfag-binary> [doctest args]\n", argv[0]);
        return 1;
    }
    g_bin = argv[1];
    std::vector<char*> args;
    args.push_back(argv[0]);
    for (int i = 2; i < argc; ++i) args.push_back(argv[i]);
    doctest::Context ctx(static_cast<int>(args.size()), args.data());
    return ctx.run();
}
