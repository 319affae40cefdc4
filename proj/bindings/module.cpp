// Python surface for the core pipeline: simulate, estimate, train, generate,
// evaluate, backtest. Thin wrappers over the C++ API; reports cross the
// boundary as plain dicts so callers never see the json library.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sfag/backtest.hpp"
#include "sfag/csv_io.hpp"
#include "sfag/garch.hpp"
#include "sfag/model.hpp"
#include "sfag/report.hpp"
#include "sfag/rng.hpp"
#include "sfag/series.hpp"
#include "sfag/stylized_facts.hpp"
#include "sfag/trainer.hpp"
#include "sfag/version.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace sfag;

namespace {

ReturnSeries as_series(std::vector<double> values, Origin origin) {
    ReturnSeries r;
    r.values = std::move(values);
    r.origin = origin;
    r.validate();
    return r;
}

Tail parse_tail(const std::string& s) {
    if (s == "lower") return Tail::Lower;
    if (s == "upper") return Tail::Upper;
    throw std::invalid_argument("tail must be 'lower' or 'upper'");
}

py::object json_to_py(const Json& j) {
    switch (j.type()) {
    case Json::value_t::null: return py::none();
    case Json::value_t::boolean: return py::bool_(j.get<bool>());
    case Json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
    case Json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
    case Json::value_t::number_float: return py::float_(j.get<double>());
    case Json::value_t::string: return py::str(j.get<std::string>());
    case Json::value_t::array: {
        py::list out;
        for (const Json& item : j) out.append(json_to_py(item));
        return out;
    }
    case Json::value_t::object: {
        py::dict out;
        for (const auto& [key, value] : j.items()) out[py::str(key)] = json_to_py(value);
        return out;
    }
    default: throw std::runtime_error("unsupported json node");
    }
}

std::vector<std::vector<double>> draw_paths(const ModelParams& gen, int n_paths,
                                            std::uint64_t seed) {
    if (gen.role != ModelRole::Generator)
        throw std::invalid_argument("generate requires a generator model");
    if (n_paths < 1) throw std::invalid_argument("n_paths must be positive");
    Rng rng(seed);
    ad::Tensor z(n_paths, gen.arch.latent_dim);
    for (double& x : z.data) x = rng.normal();
    const ad::Tensor out = generate(gen, z);
    std::vector<std::vector<double>> paths;
    paths.reserve(static_cast<std::size_t>(n_paths));
    for (int i = 0; i < n_paths; ++i)
        paths.emplace_back(
            out.data.begin() + static_cast<std::ptrdiff_t>(i) * gen.arch.seq_len,
            out.data.begin() + static_cast<std::ptrdiff_t>(i + 1) * gen.arch.seq_len);
    return paths;
}

TrainConfig make_train_config(int iterations, int n_critic, int batch, double lr,
                              double lambda_gp, double anneal_frac, std::uint64_t seed,
                              double w_gpd, double w_acf, double w_lev, double w_cfvc) {
    TrainConfig cfg;
    cfg.iterations = iterations;
    cfg.n_critic = n_critic;
    cfg.batch = batch;
    cfg.lr = lr;
    cfg.lambda_gp = lambda_gp;
    cfg.anneal_frac = anneal_frac;
    cfg.seed = seed;
    cfg.weights.gpd = w_gpd;
    cfg.weights.acf = w_acf;
    cfg.weights.lev = w_lev;
    cfg.weights.cfvc = w_cfvc;
    cfg.checkpoint_every = iterations + 1; // hooks are a CLI concern
    return cfg;
}

py::list log_to_py(const std::vector<TrainLogRecord>& log) {
    py::list out;
    for (const TrainLogRecord& rec : log) out.append(json_to_py(to_json(rec)));
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "sfag core: stylized-fact-aligned generative modeling of return series";
    m.attr("__version__") = kToolVersion;

    py::register_exception<CsvError>(m, "CsvError", PyExc_ValueError);
    py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_ValueError);

    // -- simulation and io ------------------------------------------------
    m.def(
        "simulate_garch",
        [](std::size_t n, std::uint64_t seed, double omega, double alpha, double beta) {
            return simulate_garch(n, seed, {omega, alpha, beta}).values;
        },
        py::arg("n"), py::arg("seed") = 0, py::arg("omega") = 1e-6, py::arg("alpha") = 0.09,
        py::arg("beta") = 0.90,
        "Simulate a GARCH(1,1) log-return series with Gaussian innovations.");

    m.def(
        "ingest_returns", [](const std::string& path) { return ingest_returns(path).values; },
        py::arg("path"),
        "Read a date,close or date,return CSV; prices become log returns.");

    m.def(
        "write_returns_csv",
        [](const std::string& path, std::vector<double> values) {
            write_returns_csv(path, as_series(std::move(values), Origin::Real));
        },
        py::arg("path"), py::arg("values"),
        "Write a date,return CSV under sequential calendar dates.");

    // -- stylized facts ---------------------------------------------------
    py::class_<GpdFit>(m, "GpdFit")
        .def_readonly("threshold", &GpdFit::threshold)
        .def_readonly("xi", &GpdFit::xi)
        .def_readonly("beta", &GpdFit::beta)
        .def_readonly("n_exceed", &GpdFit::n_exceed)
        .def("__repr__", [](const GpdFit& f) {
            return "GpdFit(xi=" + std::to_string(f.xi) + ", beta=" + std::to_string(f.beta) +
                   ", threshold=" + std::to_string(f.threshold) +
                   ", n_exceed=" + std::to_string(f.n_exceed) + ")";
        });

    m.def(
        "fit_gpd_pot",
        [](std::vector<double> values, double quantile, const std::string& tail) {
            return fit_gpd_pot(as_series(std::move(values), Origin::Real), quantile,
                               parse_tail(tail));
        },
        py::arg("values"), py::arg("quantile") = 0.95, py::arg("tail") = "lower",
        "Peaks-over-threshold GPD fit at the given quantile.");

    m.def(
        "acf", [](std::vector<double> x, int lags) { return acf(x, lags).values; },
        py::arg("x"), py::arg("lags") = 20,
        "Autocorrelations for lags 1..lags; index k-1 holds lag k.");

    m.def(
        "leverage_corr",
        [](std::vector<double> values, int horizon) {
            return leverage_corr(as_series(std::move(values), Origin::Real), horizon);
        },
        py::arg("values"), py::arg("horizon") = 20,
        "Correlation between r_t and forward realized volatility.");

    m.def(
        "cfvc_matrix",
        [](std::vector<double> values) {
            const CfvcMatrix c = cfvc_matrix(as_series(std::move(values), Origin::Real));
            std::vector<std::vector<double>> rows;
            for (const auto& row : c.corr) rows.emplace_back(row.begin(), row.end());
            return rows;
        },
        py::arg("values"),
        "Pairwise correlations of rolling vols at windows 5/20/60/120.");

    m.def(
        "evaluate_paths",
        [](std::vector<double> real, std::vector<std::vector<double>> paths) {
            ReturnSeries r = as_series(std::move(real), Origin::Real);
            std::vector<ReturnSeries> ps;
            ps.reserve(paths.size());
            for (auto& p : paths) ps.push_back(as_series(std::move(p), Origin::Synthetic));
            return json_to_py(to_json(evaluate_paths(r, ps)));
        },
        py::arg("real"), py::arg("paths"),
        "Stylized-fact estimates and gaps for generated paths vs one real series.");

    // -- models and training ----------------------------------------------
    py::class_<ModelParams>(m, "Model")
        .def_property_readonly(
            "role",
            [](const ModelParams& p) {
                return p.role == ModelRole::Generator ? "generator" : "critic";
            })
        .def_property_readonly("latent_dim",
                               [](const ModelParams& p) { return p.arch.latent_dim; })
        .def_property_readonly("seq_len", [](const ModelParams& p) { return p.arch.seq_len; })
        .def_property_readonly("n_params",
                               [](const ModelParams& p) { return p.total_size(); })
        .def("save", [](const ModelParams& p, const std::string& path) {
            save_checkpoint(p, path);
        }, py::arg("path"), "Write a versioned .sfag checkpoint.")
        .def("generate", &draw_paths, py::arg("n_paths"), py::arg("seed") = 0,
             "Sample n_paths return paths of length seq_len.")
        .def("__repr__", [](const ModelParams& p) {
            return std::string("Model(role=") +
                   (p.role == ModelRole::Generator ? "generator" : "critic") +
                   ", seq_len=" + std::to_string(p.arch.seq_len) +
                   ", n_params=" + std::to_string(p.total_size()) + ")";
        });

    m.def(
        "load_checkpoint", [](const std::string& path) { return load_checkpoint(path); },
        py::arg("path"), "Load a .sfag checkpoint.");

    m.def(
        "train",
        [](std::vector<double> real, int iterations, int n_critic, int batch, double lr,
           double lambda_gp, double anneal_frac, std::uint64_t seed, double w_gpd,
           double w_acf, double w_lev, double w_cfvc, int latent_dim, int seq_len,
           std::vector<int> gen_hidden, std::vector<int> critic_hidden, bool baseline) {
            const ReturnSeries r = as_series(std::move(real), Origin::Real);
            ArchSpec arch;
            arch.latent_dim = latent_dim;
            arch.seq_len = seq_len;
            arch.gen_hidden = std::move(gen_hidden);
            arch.critic_hidden = std::move(critic_hidden);
            const TrainConfig cfg =
                make_train_config(iterations, n_critic, batch, lr, lambda_gp, anneal_frac,
                                  seed, w_gpd, w_acf, w_lev, w_cfvc);
            TrainResult res;
            {
                py::gil_scoped_release release;
                res = baseline ? train_wgan_gp(r, arch, cfg) : train(r, arch, cfg);
            }
            return py::make_tuple(res.generator, res.critic, log_to_py(res.log));
        },
        py::arg("real"), py::arg("iterations") = 2000, py::arg("n_critic") = 5,
        py::arg("batch") = 24, py::arg("lr") = 2e-4, py::arg("lambda_gp") = 10.0,
        py::arg("anneal_frac") = 0.20, py::arg("seed") = 0, py::arg("w_gpd") = 1.0,
        py::arg("w_acf") = 1.0, py::arg("w_lev") = 1.0, py::arg("w_cfvc") = 1.0,
        py::arg("latent_dim") = 100, py::arg("seq_len") = 256,
        py::arg("gen_hidden") = std::vector<int>{256, 512},
        py::arg("critic_hidden") = std::vector<int>{512, 256}, py::arg("baseline") = false,
        "Train a generator on one return series. Returns (generator, critic, log).\n"
        "baseline=True drops the alignment losses and runs plain WGAN-GP.");

    // -- backtest ---------------------------------------------------------
    m.def(
        "run_momentum",
        [](std::vector<double> values, int lookback, double cost_bps) {
            StrategyConfig cfg;
            cfg.lookback = lookback;
            cfg.cost_bps = cost_bps;
            const auto [daily, res] =
                run_momentum(as_series(std::move(values), Origin::Real), cfg);
            py::dict out;
            out["daily"] = daily;
            out["metrics"] = json_to_py(to_json(res));
            return out;
        },
        py::arg("values"), py::arg("lookback") = 60, py::arg("cost_bps") = 5.0,
        "Sign-of-trailing-return momentum backtest with turnover costs.");
}
