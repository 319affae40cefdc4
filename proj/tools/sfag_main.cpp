#include "sfag/backtest.hpp"
#include "sfag/csv_io.hpp"
#include "sfag/garch.hpp"
#include "sfag/losses.hpp"
#include "sfag/model.hpp"
#include "sfag/report.hpp"
#include "sfag/rng.hpp"
#include "sfag/stylized_facts.hpp"
#include "sfag/trainer.hpp"
#include "sfag/version.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using sfag::Json;

namespace {

// Exit codes: 0 ok, 2 usage/config, 3 file I/O, 4 malformed input data,
// 5 checkpoint, 6 incompatible inputs, 7 numeric/training failure.
constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kIo = 3;
constexpr int kData = 4;
constexpr int kCheckpoint = 5;
constexpr int kIncompatible = 6;
constexpr int kNumeric = 7;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IncompatibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Estimation failed on otherwise well-formed inputs (degenerate tail,
// zero-variance windows, ...); reported as a numeric failure, not usage.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string config;
    std::string out = ".";
    std::optional<long long> seed;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--config", c.config, "JSON config file");
    sub->add_option("--out", c.out, "output directory (default: current)");
    sub->add_option("--seed", c.seed, "seed override");
}

Json load_config(const Common& c) {
    if (c.config.empty()) return Json::object();
    std::ifstream in(c.config);
    if (!in) throw UsageError("cannot open config '" + c.config + "'");
    try {
        Json j;
        in >> j;
        if (!j.is_object()) throw UsageError("config must be a JSON object");
        return j;
    } catch (const Json::parse_error& e) {
        throw UsageError("invalid JSON in config '" + c.config + "': " + e.what());
    }
}

template <typename T>
T take(Json& j, const char* key, T def) {
    if (!j.contains(key)) return def;
    try {
        T v = j.at(key).get<T>();
        j.erase(key);
        return v;
    } catch (const Json::exception&) {
        throw UsageError(std::string("config key '") + key + "' has the wrong type");
    }
}

Json take_obj(Json& j, const char* key) {
    if (!j.contains(key)) return Json::object();
    Json v = j.at(key);
    if (!v.is_object()) throw UsageError(std::string("config key '") + key + "' must be an object");
    j.erase(key);
    return v;
}

void expect_empty(const Json& j, const char* ctx) {
    if (j.empty()) return;
    throw UsageError(std::string("unknown config key '") + j.begin().key() + "' for " + ctx);
}

void ensure_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "'");
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

// ---- simulate ----------------------------------------------------------

int run_simulate(const Common& common) {
    Json cfg = load_config(common);
    auto n = take<std::int64_t>(cfg, "n", 4096);
    sfag::GarchParams p;
    p.omega = take(cfg, "omega", p.omega);
    p.alpha = take(cfg, "alpha", p.alpha);
    p.beta = take(cfg, "beta", p.beta);
    auto burn_in = take<std::int64_t>(cfg, "burn_in", 500);
    auto seed = take<std::int64_t>(cfg, "seed", 0);
    if (common.seed) seed = *common.seed;
    expect_empty(cfg, "simulate");
    if (n < 2) throw UsageError("simulate needs n >= 2");
    if (burn_in < 0) throw UsageError("burn_in must be >= 0");

    const sfag::ReturnSeries r = sfag::simulate_garch(
        static_cast<std::size_t>(n), static_cast<std::uint64_t>(seed), p,
        static_cast<std::size_t>(burn_in));
    ensure_out_dir(common.out);
    sfag::write_returns_csv(join(common.out, "returns.csv"), r);

    Json echo{{"n", n},       {"omega", p.omega},     {"alpha", p.alpha},
              {"beta", p.beta}, {"burn_in", burn_in}, {"seed", seed}};
    Json rep = sfag::report_envelope("simulate", echo);
    rep["outputs"] = Json{{"returns", "returns.csv"}};
    rep["summary"] = Json{{"n", n},
                          {"mean", sfag::mean_of(r.values)},
                          {"std", sfag::sample_std(r.values)}};
    sfag::write_json(join(common.out, "simulate_report.json"), rep);
    return kOk;
}

// ---- ingest ------------------------------------------------------------

int run_ingest(const Common& common, const std::string& input_flag) {
    Json cfg = load_config(common);
    auto input = take<std::string>(cfg, "input", "");
    if (!input_flag.empty()) input = input_flag;
    expect_empty(cfg, "ingest");
    if (input.empty()) throw UsageError("ingest needs an input CSV (--input or config)");

    sfag::IngestResult res = sfag::ingest_csv(input);
    sfag::ReturnSeries r;
    std::vector<std::string> dates;
    const char* detected;
    if (res.kind == sfag::IngestResult::Kind::Prices) {
        detected = "prices";
        r = sfag::log_returns(res.prices);
        dates.assign(res.dates.begin() + 1, res.dates.end());
    } else {
        detected = "returns";
        r = std::move(res.returns);
        dates = res.dates;
    }
    ensure_out_dir(common.out);
    sfag::write_returns_csv(join(common.out, "returns.csv"), r, dates);

    Json rep = sfag::report_envelope("ingest", Json{{"input", input}});
    rep["detected"] = detected;
    rep["rows"] = r.values.size();
    rep["outputs"] = Json{{"returns", "returns.csv"}};
    sfag::write_json(join(common.out, "ingest_report.json"), rep);
    return kOk;
}

// ---- train -------------------------------------------------------------

struct TrainSetup {
    std::string input;
    bool baseline = false;
    sfag::ArchSpec arch;
    sfag::TrainConfig train;
};

TrainSetup parse_train_config(Json cfg, const Common& common, const std::string& input_flag,
                              std::optional<int> iters_flag, bool baseline_flag) {
    TrainSetup s;
    s.input = take<std::string>(cfg, "input", "");
    if (!input_flag.empty()) s.input = input_flag;
    s.baseline = take(cfg, "baseline", false) || baseline_flag;

    Json arch = take_obj(cfg, "arch");
    s.arch.latent_dim = take(arch, "latent_dim", s.arch.latent_dim);
    s.arch.seq_len = take(arch, "seq_len", s.arch.seq_len);
    s.arch.gen_hidden = take(arch, "gen_hidden", s.arch.gen_hidden);
    s.arch.critic_hidden = take(arch, "critic_hidden", s.arch.critic_hidden);
    s.arch.leaky_slope = take(arch, "leaky_slope", s.arch.leaky_slope);
    expect_empty(arch, "train.arch");

    sfag::TrainConfig& t = s.train;
    t.iterations = take(cfg, "iterations", t.iterations);
    if (iters_flag) t.iterations = *iters_flag;
    t.n_critic = take(cfg, "n_critic", t.n_critic);
    t.lr = take(cfg, "lr", t.lr);
    t.beta1 = take(cfg, "beta1", t.beta1);
    t.beta2 = take(cfg, "beta2", t.beta2);
    t.lambda_gp = take(cfg, "lambda_gp", t.lambda_gp);
    t.batch = take(cfg, "batch", t.batch);
    t.anneal_frac = take(cfg, "anneal_frac", t.anneal_frac);
    t.checkpoint_every = take(cfg, "checkpoint_every", t.checkpoint_every);
    auto seed = take<std::int64_t>(cfg, "seed", 0);
    if (common.seed) seed = *common.seed;
    t.seed = static_cast<std::uint64_t>(seed);

    Json w = take_obj(cfg, "weights");
    t.weights.gpd = take(w, "gpd", t.weights.gpd);
    t.weights.acf = take(w, "acf", t.weights.acf);
    t.weights.lev = take(w, "lev", t.weights.lev);
    t.weights.cfvc = take(w, "cfvc", t.weights.cfvc);
    expect_empty(w, "train.weights");
    t.weights.gp = t.lambda_gp;

    Json a = take_obj(cfg, "alignment");
    t.alignment.acf_lags = take(a, "acf_lags", t.alignment.acf_lags);
    t.alignment.lev_horizon = take(a, "lev_horizon", t.alignment.lev_horizon);
    t.alignment.tail_q = take(a, "tail_q", t.alignment.tail_q);
    t.alignment.min_tail_exceed = take(a, "min_tail_exceed", t.alignment.min_tail_exceed);
    expect_empty(a, "train.alignment");

    expect_empty(cfg, "train");
    if (s.input.empty()) throw UsageError("train needs an input returns CSV");
    return s;
}

Json echo_train_config(const TrainSetup& s) {
    const sfag::TrainConfig& t = s.train;
    return Json{
        {"input", s.input},
        {"baseline", s.baseline},
        {"arch",
         Json{{"latent_dim", s.arch.latent_dim},
              {"seq_len", s.arch.seq_len},
              {"gen_hidden", s.arch.gen_hidden},
              {"critic_hidden", s.arch.critic_hidden},
              {"leaky_slope", s.arch.leaky_slope}}},
        {"iterations", t.iterations},
        {"n_critic", t.n_critic},
        {"lr", t.lr},
        {"beta1", t.beta1},
        {"beta2", t.beta2},
        {"lambda_gp", t.lambda_gp},
        {"batch", t.batch},
        {"anneal_frac", t.anneal_frac},
        {"checkpoint_every", t.checkpoint_every},
        {"seed", static_cast<std::int64_t>(t.seed)},
        {"weights",
         Json{{"gpd", t.weights.gpd},
              {"acf", t.weights.acf},
              {"lev", t.weights.lev},
              {"cfvc", t.weights.cfvc}}},
        {"alignment",
         Json{{"acf_lags", t.alignment.acf_lags},
              {"lev_horizon", t.alignment.lev_horizon},
              {"tail_q", t.alignment.tail_q},
              {"min_tail_exceed", t.alignment.min_tail_exceed}}}};
}

int run_train(const Common& common, const std::string& input_flag,
              std::optional<int> iters_flag, bool baseline_flag) {
    TrainSetup s =
        parse_train_config(load_config(common), common, input_flag, iters_flag, baseline_flag);
    const sfag::ReturnSeries real = sfag::ingest_returns(s.input);
    ensure_out_dir(common.out);

    std::ofstream log(join(common.out, "train_log.jsonl"));
    if (!log) throw std::runtime_error("cannot write training log in '" + common.out + "'");
    sfag::TrainHooks hooks;
    hooks.on_record = [&](const sfag::TrainLogRecord& rec) {
        log << sfag::to_json(rec).dump() << '\n';
    };
    hooks.on_checkpoint = [&](int iter, const sfag::ModelParams& gen,
                              const sfag::ModelParams& critic) {
        char name[48];
        std::snprintf(name, sizeof(name), "gen_iter_%06d.sfag", iter);
        sfag::save_checkpoint(gen, join(common.out, name));
        std::snprintf(name, sizeof(name), "critic_iter_%06d.sfag", iter);
        sfag::save_checkpoint(critic, join(common.out, name));
    };

    const sfag::TrainResult result = s.baseline
                                         ? sfag::train_wgan_gp(real, s.arch, s.train, hooks)
                                         : sfag::train(real, s.arch, s.train, hooks);
    log.flush();
    sfag::save_checkpoint(result.generator, join(common.out, "gen_final.sfag"));
    sfag::save_checkpoint(result.critic, join(common.out, "critic_final.sfag"));

    Json rep = sfag::report_envelope("train", echo_train_config(s));
    rep["outputs"] = Json{{"generator", "gen_final.sfag"},
                          {"critic", "critic_final.sfag"},
                          {"log", "train_log.jsonl"}};
    if (result.targets) {
        const sfag::RealTargets& tg = *result.targets;
        Json cfvc = Json::array();
        for (const auto& row : tg.cfvc) cfvc.push_back(row);
        rep["targets"] = Json{{"xi_tail", tg.xi_tail},
                              {"acf_sq", tg.acf_sq},
                              {"leverage", tg.leverage},
                              {"cfvc", cfvc}};
    }
    if (!result.log.empty()) rep["final"] = sfag::to_json(result.log.back());
    sfag::write_json(join(common.out, "train_report.json"), rep);
    return kOk;
}

// ---- generate ----------------------------------------------------------

int run_generate(const Common& common, const std::string& ckpt_flag,
                 std::optional<int> n_paths_flag) {
    Json cfg = load_config(common);
    auto checkpoint = take<std::string>(cfg, "checkpoint", "");
    if (!ckpt_flag.empty()) checkpoint = ckpt_flag;
    auto n_paths = take<int>(cfg, "n_paths", 10);
    if (n_paths_flag) n_paths = *n_paths_flag;
    auto seed = take<std::int64_t>(cfg, "seed", 0);
    if (common.seed) seed = *common.seed;
    expect_empty(cfg, "generate");
    if (checkpoint.empty()) throw UsageError("generate needs a checkpoint path");
    if (n_paths < 1) throw UsageError("n_paths must be >= 1");

    const sfag::ModelParams gen = sfag::load_checkpoint(checkpoint);
    if (gen.role != sfag::ModelRole::Generator)
        throw IncompatibleError("checkpoint '" + checkpoint + "' holds a critic, not a generator");

    ensure_out_dir(common.out);
    sfag::Rng rng(static_cast<std::uint64_t>(seed));
    Json outputs = Json::array();
    for (int i = 0; i < n_paths; ++i) {
        sfag::ad::Tensor z(1, gen.arch.latent_dim);
        for (double& x : z.data) x = rng.normal();
        const sfag::ad::Tensor path = sfag::generate(gen, z);
        sfag::ReturnSeries r;
        r.values = path.data;
        r.origin = sfag::Origin::Synthetic;
        r.seed = seed;
        char name[32];
        std::snprintf(name, sizeof(name), "path_%03d.csv", i);
        sfag::write_returns_csv(join(common.out, name), r);
        outputs.push_back(name);
    }

    Json rep = sfag::report_envelope(
        "generate", Json{{"checkpoint", checkpoint}, {"n_paths", n_paths}, {"seed", seed}});
    rep["arch"] = Json{{"latent_dim", gen.arch.latent_dim}, {"seq_len", gen.arch.seq_len}};
    rep["outputs"] = outputs;
    sfag::write_json(join(common.out, "generate_report.json"), rep);
    return kOk;
}

// ---- evaluate ----------------------------------------------------------

sfag::ReturnSeries load_path_checked(const std::string& file, int min_len, const char* what) {
    sfag::ReturnSeries r = sfag::ingest_returns(file);
    if (static_cast<int>(r.values.size()) < min_len)
        throw IncompatibleError(std::string(what) + " '" + file + "' has " +
                                std::to_string(r.values.size()) + " returns; evaluation needs >= " +
                                std::to_string(min_len));
    return r;
}

int run_evaluate(const Common& common, const std::string& real_flag,
                 const std::vector<std::string>& paths_flag) {
    Json cfg = load_config(common);
    auto real_path = take<std::string>(cfg, "real", "");
    if (!real_flag.empty()) real_path = real_flag;

    Json runs_cfg = Json::array();
    if (cfg.contains("runs")) {
        runs_cfg = cfg.at("runs");
        cfg.erase("runs");
        if (!runs_cfg.is_array()) throw UsageError("config key 'runs' must be an array");
    }
    auto paths = take<std::vector<std::string>>(cfg, "paths", {});
    if (!paths_flag.empty()) paths = paths_flag;
    if (!paths.empty()) runs_cfg.push_back(Json{{"label", "run0"}, {"paths", paths}});

    sfag::EvalConfig ec;
    Json e = take_obj(cfg, "eval");
    ec.tail_quantile = take(e, "tail_quantile", ec.tail_quantile);
    ec.acf_lags = take(e, "acf_lags", ec.acf_lags);
    ec.lev_horizon = take(e, "lev_horizon", ec.lev_horizon);
    expect_empty(e, "evaluate.eval");
    expect_empty(cfg, "evaluate");

    if (real_path.empty()) throw UsageError("evaluate needs a real series (--real or config)");
    if (runs_cfg.empty()) throw UsageError("evaluate needs at least one run of paths");

    const int min_len = sfag::CfvcMatrix::kWindows.back() + 2;
    const sfag::ReturnSeries real = load_path_checked(real_path, min_len, "real series");

    Json runs_out = Json::array();
    sfag::StylizedFactReport mean;
    Json real_side;
    for (std::size_t i = 0; i < runs_cfg.size(); ++i) {
        Json rc = runs_cfg[i];
        auto label = take<std::string>(rc, "label", "run" + std::to_string(i));
        auto run_paths = take<std::vector<std::string>>(rc, "paths", {});
        expect_empty(rc, "evaluate.runs entry");
        if (run_paths.empty()) throw UsageError("evaluate run '" + label + "' lists no paths");
        std::vector<sfag::ReturnSeries> series;
        series.reserve(run_paths.size());
        for (const std::string& f : run_paths)
            series.push_back(load_path_checked(f, min_len, "path"));
        sfag::RunEvaluation ev;
        try {
            ev = sfag::evaluate_paths(real, series, ec);
        } catch (const std::invalid_argument& e) {
            throw NumericError(e.what());
        }
        real_side = sfag::to_json(ev.real);
        runs_out.push_back(Json{{"label", label},
                                {"paths", run_paths},
                                {"synth", sfag::to_json(ev.synth)},
                                {"gaps", sfag::to_json(ev.gaps)}});
        mean.gpd_gap += ev.gaps.gpd_gap;
        mean.acf_gap += ev.gaps.acf_gap;
        mean.leverage_gap += ev.gaps.leverage_gap;
        mean.cfvc_gap += ev.gaps.cfvc_gap;
    }
    const double nr = static_cast<double>(runs_out.size());
    mean.gpd_gap /= nr;
    mean.acf_gap /= nr;
    mean.leverage_gap /= nr;
    mean.cfvc_gap /= nr;

    Json echo{{"real", real_path},
              {"runs", runs_cfg},
              {"eval",
               Json{{"tail_quantile", ec.tail_quantile},
                    {"acf_lags", ec.acf_lags},
                    {"lev_horizon", ec.lev_horizon}}}};
    Json rep = sfag::report_envelope("evaluate", echo);
    rep["real"] = real_side;
    rep["runs"] = runs_out;
    rep["mean_gaps"] = sfag::to_json(mean);
    ensure_out_dir(common.out);
    sfag::write_json(join(common.out, "evaluate_report.json"), rep);
    return kOk;
}

// ---- backtest ----------------------------------------------------------

int run_backtest(const Common& common, const std::vector<std::string>& paths_flag) {
    Json cfg = load_config(common);
    auto paths = take<std::vector<std::string>>(cfg, "paths", {});
    if (!paths_flag.empty()) paths = paths_flag;
    sfag::StrategyConfig sc;
    Json st = take_obj(cfg, "strategy");
    sc.lookback = take(st, "lookback", sc.lookback);
    sc.cost_bps = take(st, "cost_bps", sc.cost_bps);
    expect_empty(st, "backtest.strategy");
    expect_empty(cfg, "backtest");
    if (paths.empty()) throw UsageError("backtest needs at least one returns CSV");

    Json per_path = Json::array();
    std::vector<sfag::BacktestResult> results;
    for (const std::string& file : paths) {
        const sfag::ReturnSeries r = sfag::ingest_returns(file);
        auto [daily, res] = sfag::run_momentum(r, sc);
        Json row = sfag::to_json(res);
        row["file"] = file;
        per_path.push_back(std::move(row));
        results.push_back(res);
    }

    auto metric_stats = [&](auto get) {
        const double n = static_cast<double>(results.size());
        double m = 0.0;
        for (const auto& r : results) m += get(r);
        m /= n;
        double s2 = 0.0;
        for (const auto& r : results) {
            const double d = get(r) - m;
            s2 += d * d;
        }
        const double sd = results.size() > 1 ? std::sqrt(s2 / (n - 1.0)) : 0.0;
        return std::pair<double, double>{m, sd};
    };
    Json mean, stddev;
    const std::pair<const char*, double sfag::BacktestResult::*> fields[] = {
        {"ann_return", &sfag::BacktestResult::ann_return},
        {"ann_vol", &sfag::BacktestResult::ann_vol},
        {"sharpe", &sfag::BacktestResult::sharpe},
        {"max_drawdown", &sfag::BacktestResult::max_drawdown},
        {"var95", &sfag::BacktestResult::var95},
        {"cvar95", &sfag::BacktestResult::cvar95}};
    for (const auto& [name, member] : fields) {
        const auto [m, sd] = metric_stats([&](const sfag::BacktestResult& r) { return r.*member; });
        mean[name] = m;
        stddev[name] = sd;
    }

    Json echo{{"paths", paths},
              {"strategy", Json{{"lookback", sc.lookback}, {"cost_bps", sc.cost_bps}}}};
    Json rep = sfag::report_envelope("backtest", echo);
    rep["paths"] = per_path;
    rep["mean"] = mean;
    rep["stddev"] = stddev;
    ensure_out_dir(common.out);
    sfag::write_json(join(common.out, "backtest_report.json"), rep);
    return kOk;
}

// ---- report ------------------------------------------------------------

int run_report(const Common& common, const std::string& eval_flag,
               const std::string& backtest_flag) {
    Json cfg = load_config(common);
    auto eval_path = take<std::string>(cfg, "evaluate", "");
    if (!eval_flag.empty()) eval_path = eval_flag;
    auto bt_path = take<std::string>(cfg, "backtest", "");
    if (!backtest_flag.empty()) bt_path = backtest_flag;
    expect_empty(cfg, "report");
    if (eval_path.empty() && bt_path.empty())
        throw UsageError("report needs an evaluate and/or backtest report path");

    for (const std::string& p : {eval_path, bt_path})
        if (!p.empty() && !std::ifstream(p))
            throw IoError("cannot open report input '" + p + "'");

    Json echo = Json::object();
    if (!eval_path.empty()) echo["evaluate"] = eval_path;
    if (!bt_path.empty()) echo["backtest"] = bt_path;
    Json rep = sfag::report_envelope("report", echo);
    ensure_out_dir(common.out);
    if (!eval_path.empty()) {
        const Json ev = sfag::read_json(eval_path);
        rep["evaluate"] = ev;
        sfag::write_figure_data(common.out, ev);
    }
    if (!bt_path.empty()) rep["backtest"] = sfag::read_json(bt_path);
    sfag::write_json(join(common.out, "report.json"), rep);
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SFAG return-series generation and audit toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", sfag::kToolVersion);
    app.footer("Exit codes: 0 ok, 2 usage/config, 3 file I/O, 4 bad input data, "
               "5 checkpoint, 6 incompatible inputs, 7 numeric failure.");

    Common c_sim, c_ing, c_tr, c_gen, c_ev, c_bt, c_rep;
    std::string ingest_input, train_input, ckpt, eval_real, report_eval, report_bt;
    std::vector<std::string> eval_paths, bt_paths;
    std::optional<int> train_iters, n_paths;
    bool baseline = false;

    CLI::App* sim = app.add_subcommand("simulate", "write a GARCH(1,1) returns CSV");
    add_common(sim, c_sim);

    CLI::App* ing = app.add_subcommand("ingest", "normalize a date,close or date,return CSV");
    add_common(ing, c_ing);
    ing->add_option("--input", ingest_input, "input CSV");

    CLI::App* tr = app.add_subcommand("train", "train the generator on a returns CSV");
    add_common(tr, c_tr);
    tr->add_option("--input", train_input, "training returns CSV");
    tr->add_option("--iterations", train_iters, "generator iterations");
    tr->add_flag("--baseline", baseline, "adversarial-only training");

    CLI::App* gen = app.add_subcommand("generate", "sample return paths from a checkpoint");
    add_common(gen, c_gen);
    gen->add_option("--checkpoint", ckpt, "generator .sfag checkpoint");
    gen->add_option("--n-paths", n_paths, "number of paths");

    CLI::App* ev = app.add_subcommand("evaluate", "stylized-fact gaps of paths vs a real series");
    add_common(ev, c_ev);
    ev->add_option("--real", eval_real, "real returns CSV");
    ev->add_option("--paths", eval_paths, "generated returns CSVs");

    CLI::App* bt = app.add_subcommand("backtest", "momentum backtest over returns CSVs");
    add_common(bt, c_bt);
    bt->add_option("--paths", bt_paths, "returns CSVs");

    CLI::App* rp = app.add_subcommand("report", "merge reports and emit figure data");
    add_common(rp, c_rep);
    rp->add_option("--evaluate", report_eval, "evaluate_report.json path");
    rp->add_option("--backtest", report_bt, "backtest_report.json path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kOk : kUsage;
    }

    try {
        if (sim->parsed()) return run_simulate(c_sim);
        if (ing->parsed()) return run_ingest(c_ing, ingest_input);
        if (tr->parsed()) return run_train(c_tr, train_input, train_iters, baseline);
        if (gen->parsed()) return run_generate(c_gen, ckpt, n_paths);
        if (ev->parsed()) return run_evaluate(c_ev, eval_real, eval_paths);
        if (bt->parsed()) return run_backtest(c_bt, bt_paths);
        if (rp->parsed()) return run_report(c_rep, report_eval, report_bt);
        return kUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const sfag::CsvError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.kind == sfag::CsvError::Kind::Io ? kIo : kData;
    } catch (const sfag::CheckpointError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kCheckpoint;
    } catch (const IncompatibleError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIncompatible;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumeric;
    }
}
