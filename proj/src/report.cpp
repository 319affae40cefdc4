#include "sfag/report.hpp"

#include "sfag/version.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace sfag {

Json report_envelope(const std::string& command, Json config) {
    Json j;
    j["schema_version"] = kReportSchemaVersion;
    j["tool"] = "sfag";
    j["tool_version"] = kToolVersion;
    j["command"] = command;
    j["config"] = std::move(config);
    return j;
}

Json to_json(const BacktestResult& r) {
    return Json{{"ann_return", r.ann_return}, {"ann_vol", r.ann_vol},
                {"sharpe", r.sharpe},         {"max_drawdown", r.max_drawdown},
                {"var95", r.var95},           {"cvar95", r.cvar95},
                {"n_days", r.n_days},         {"n_trades", r.n_trades}};
}

Json to_json(const StylizedFactReport& r) {
    return Json{{"gpd_gap", r.gpd_gap},
                {"acf_gap", r.acf_gap},
                {"leverage_gap", r.leverage_gap},
                {"cfvc_gap", r.cfvc_gap}};
}

Json to_json(const GpdFit& f) {
    return Json{{"threshold", f.threshold},
                {"xi", f.xi},
                {"beta", f.beta},
                {"n_exceed", f.n_exceed}};
}

Json to_json(const AcfVector& a) {
    return Json{{"lags", a.lags}, {"values", a.values}};
}

Json to_json(const CfvcMatrix& m) {
    Json rows = Json::array();
    for (const auto& row : m.corr) rows.push_back(row);
    Json windows = Json::array();
    for (int w : CfvcMatrix::kWindows) windows.push_back(w);
    return Json{{"windows", windows}, {"corr", rows}};
}

Json to_json(const SideEstimates& s) {
    return Json{{"tail", to_json(s.tail)},
                {"tail_excess", s.tail_excess},
                {"acf_abs", to_json(s.acf_abs)},
                {"leverage", s.leverage},
                {"cfvc", to_json(s.cfvc)}};
}

Json to_json(const RunEvaluation& ev) {
    return Json{{"real", to_json(ev.real)},
                {"synth", to_json(ev.synth)},
                {"gaps", to_json(ev.gaps)}};
}

Json to_json(const TrainLogRecord& rec) {
    return Json{{"iteration", rec.iteration},
                {"critic_loss", rec.critic_loss},
                {"wasserstein", rec.wasserstein},
                {"penalty", rec.penalty},
                {"gen_adv", rec.gen_adv},
                {"gpd", rec.gpd},
                {"acf", rec.acf},
                {"lev", rec.lev},
                {"cfvc", rec.cfvc},
                {"total", rec.total},
                {"anneal", rec.anneal},
                {"tail_skipped", rec.tail_skipped}};
}

double json_number(const Json& j) {
    if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.get<double>();
}

void write_json(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

Json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    Json j;
    try {
        in >> j;
    } catch (const Json::parse_error& e) {
        throw std::runtime_error("invalid JSON in '" + path + "': " + e.what());
    }
    return j;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Quantile of the fitted GPD excess distribution at probability p.
double gpd_excess_quantile(double xi, double beta, double p) {
    if (std::abs(xi) < 1e-9) return -beta * std::log1p(-p);
    return beta / xi * (std::pow(1.0 - p, -xi) - 1.0);
}

void write_tail_scatter(const std::string& path, const Json& side) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "p,empirical_excess,fitted_excess\n";
    const auto& excess = side.at("tail_excess");
    const double xi = side.at("tail").at("xi").get<double>();
    const double beta = side.at("tail").at("beta").get<double>();
    const auto m = excess.size();
    for (std::size_t i = 0; i < m; ++i) {
        const double p = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
        out << fmt(p) << ',' << fmt(excess[i].get<double>()) << ','
            << fmt(gpd_excess_quantile(xi, beta, p)) << '\n';
    }
}

void write_cfvc_csv(const std::string& path, const Json& cfvc) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << "window";
    for (const auto& w : cfvc.at("windows")) out << ",w" << w.get<int>();
    out << '\n';
    const auto& corr = cfvc.at("corr");
    for (std::size_t i = 0; i < corr.size(); ++i) {
        out << 'w' << cfvc.at("windows")[i].get<int>();
        for (const auto& v : corr[i]) out << ',' << fmt(v.get<double>());
        out << '\n';
    }
}

} // namespace

void write_figure_data(const std::string& dir, const Json& evaluate_report) {
    const Json& real = evaluate_report.at("real");
    // Figure panels come from the first run; multi-run reports keep per-run
    // data in JSON form.
    const Json& run = evaluate_report.at("runs").at(0);
    const Json& synth = run.at("synth");
    const Json& gaps = run.at("gaps");

    {
        std::ofstream out(dir + "/fig_acf.csv");
        if (!out) throw std::runtime_error("cannot write figure data in '" + dir + "'");
        out << "lag,real,synth\n";
        const auto& rv = real.at("acf_abs").at("values");
        const auto& sv = synth.at("acf_abs").at("values");
        for (std::size_t k = 0; k < rv.size(); ++k)
            out << (k + 1) << ',' << fmt(rv[k].get<double>()) << ','
                << fmt(sv[k].get<double>()) << '\n';
    }
    write_tail_scatter(dir + "/fig_tail_real.csv", real);
    write_tail_scatter(dir + "/fig_tail_synth.csv", synth);
    write_cfvc_csv(dir + "/fig_cfvc_real.csv", real.at("cfvc"));
    write_cfvc_csv(dir + "/fig_cfvc_synth.csv", synth.at("cfvc"));
    {
        std::ofstream out(dir + "/fig_gaps.csv");
        if (!out) throw std::runtime_error("cannot write figure data in '" + dir + "'");
        out << "metric,real,synth,gap\n";
        out << "tail_xi," << fmt(real.at("tail").at("xi").get<double>()) << ','
            << fmt(synth.at("tail").at("xi").get<double>()) << ','
            << fmt(gaps.at("gpd_gap").get<double>()) << '\n';
        out << "leverage," << fmt(real.at("leverage").get<double>()) << ','
            << fmt(synth.at("leverage").get<double>()) << ','
            << fmt(gaps.at("leverage_gap").get<double>()) << '\n';
        out << "acf_mse,,," << fmt(gaps.at("acf_gap").get<double>()) << '\n';
        out << "cfvc_frobenius,,," << fmt(gaps.at("cfvc_gap").get<double>()) << '\n';
    }
}

} // namespace sfag
