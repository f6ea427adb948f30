// advinv: experiment driver for the advection inverse problem.
//
//   advinv generate    [--config F] [--out D] [--ic d|c] [--seed S]
//   advinv convergence [--config F] [--dataset F] [--scheme S] [--jobs N]
//   advinv fit         [--config F] [--dataset F] [--scheme S] [--step H] [--auto]
//   advinv confidence  [--config F] [--dataset F] [--scheme S] [--auto] [--jobs N]
//   advinv decompose   [--config F] [--dataset F] [--scheme S] [--at-truth]
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.

#include "advinv/advinv.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace advinv;

namespace {

constexpr const char* kVersion = "1.0.0";

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

std::uint64_t fnv1a(const std::string& s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

struct ExperimentConfig {
    InitialCondition ic = InitialCondition::Discontinuous;
    ParameterVector theta0 = default_theta0(InitialCondition::Discontinuous);
    std::size_t M = 6;
    /// (N, eta) cells; empty means the standard sweep for the initial condition.
    std::vector<std::pair<std::size_t, double>> cells;
    std::uint64_t seed = 1;
    std::vector<SchemeKind> schemes{std::begin(kAllSchemes), std::end(kAllSchemes)};
    std::vector<double> hs = default_h_ladder();
    double fit_h = 1.0 / 160.0;
    std::optional<double> lambda;
    double courant = 0.8;
    OptimizerOptions optimizer;
    double level = 0.95;
    std::string out = "advinv_out";
    std::optional<std::string> dataset;
    bool autocorrelative = false;
    bool at_truth = false;
};

ExperimentConfig parse_config(const json& j)
{
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    static const std::vector<std::string> known{"ic",      "theta0", "M",       "N",         "eta",     "cells",
                                                "seed",    "schemes", "h",      "fit_h",     "lambda",  "courant",
                                                "optimizer", "level", "out",    "dataset",   "auto",    "at_truth"};
    for (const auto& [key, value] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown config key '" + key + "'");

    ExperimentConfig c;
    try {
        if (j.contains("ic")) c.ic = parse_initial_condition(j["ic"].get<std::string>());
        c.theta0 = j.contains("theta0") ? parameter_from_json(j["theta0"], "theta0") : default_theta0(c.ic);
        c.M = j.value("M", c.M);
        if (j.contains("cells")) {
            for (const auto& cell : j["cells"]) c.cells.emplace_back(cell.at(0).get<std::size_t>(), cell.at(1).get<double>());
        } else if (j.contains("N") || j.contains("eta")) {
            const auto standard = sweep_configs(c.ic);
            std::vector<std::size_t> Ns;
            std::vector<double> etas;
            for (const auto& [n, e] : standard) {
                if (std::find(Ns.begin(), Ns.end(), n) == Ns.end()) Ns.push_back(n);
                if (std::find(etas.begin(), etas.end(), e) == etas.end()) etas.push_back(e);
            }
            if (j.contains("N")) Ns = j["N"].is_array() ? j["N"].get<std::vector<std::size_t>>()
                                                        : std::vector<std::size_t>{j["N"].get<std::size_t>()};
            if (j.contains("eta")) etas = j["eta"].is_array() ? j["eta"].get<std::vector<double>>()
                                                              : std::vector<double>{j["eta"].get<double>()};
            for (auto n : Ns)
                for (double e : etas) c.cells.emplace_back(n, e);
        }
        c.seed = j.value("seed", c.seed);
        if (j.contains("schemes")) {
            c.schemes.clear();
            for (const auto& s : j["schemes"]) c.schemes.push_back(parse_scheme(s.get<std::string>()));
        }
        if (j.contains("h")) c.hs = j["h"].get<std::vector<double>>();
        c.fit_h = j.value("fit_h", c.fit_h);
        if (j.contains("lambda") && !j["lambda"].is_null()) c.lambda = j["lambda"].get<double>();
        c.courant = j.value("courant", c.courant);
        if (j.contains("optimizer")) {
            const auto& o = j["optimizer"];
            if (o.contains("starts")) {
                c.optimizer.starts.clear();
                for (const auto& s : o["starts"]) c.optimizer.starts.push_back(parameter_from_json(s, "optimizer.starts"));
            }
            c.optimizer.initial_step = o.value("initial_step", c.optimizer.initial_step);
            c.optimizer.xtol = o.value("xtol", c.optimizer.xtol);
            c.optimizer.ftol = o.value("ftol", c.optimizer.ftol);
            c.optimizer.max_evals = o.value("max_evals", c.optimizer.max_evals);
        }
        c.level = j.value("level", c.level);
        c.out = j.value("out", c.out);
        if (j.contains("dataset") && !j["dataset"].is_null()) c.dataset = j["dataset"].get<std::string>();
        c.autocorrelative = j.value("auto", c.autocorrelative);
        c.at_truth = j.value("at_truth", c.at_truth);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

void validate(ExperimentConfig& c)
{
    if (c.cells.empty()) c.cells = sweep_configs(c.ic);
    if (c.M < 2) throw ConfigError("M must be at least 2");
    for (const auto& [n, e] : c.cells) {
        if (n < 3) throw ConfigError("N must be at least 3");
        if (!(e >= 0.0)) throw ConfigError("eta must be >= 0");
    }
    if (!c.theta0.valid()) throw ConfigError("theta0 must be positive");
    if (c.schemes.empty()) throw ConfigError("at least one scheme is required");
    if (c.hs.size() < 3) throw ConfigError("the h ladder needs at least 3 values");
    for (double h : c.hs) detail::node_count(h);
    for (std::size_t k = 1; k < c.hs.size(); ++k)
        if (!(c.hs[k] < c.hs[k - 1])) throw ConfigError("the h ladder must be strictly decreasing");
    detail::node_count(c.fit_h);
    if (c.lambda && !(*c.lambda > 0.0)) throw ConfigError("lambda must be positive");
    if (!(c.courant > 0.0 && c.courant <= 1.0)) throw ConfigError("courant must lie in (0, 1]");
    if (!(c.level > 0.0 && c.level < 1.0)) throw ConfigError("level must lie in (0, 1)");
    if (c.optimizer.starts.empty()) throw ConfigError("optimizer needs at least one start");
}

json config_json(const ExperimentConfig& c)
{
    json cells = json::array();
    for (const auto& [n, e] : c.cells) cells.push_back(json::array({n, e}));
    json schemes = json::array();
    for (auto s : c.schemes) schemes.push_back(to_string(s));
    json starts = json::array();
    for (const auto& s : c.optimizer.starts) starts.push_back(to_json(s));
    return json{{"ic", to_string(c.ic)},
                {"theta0", to_json(c.theta0)},
                {"M", c.M},
                {"cells", cells},
                {"seed", c.seed},
                {"schemes", schemes},
                {"h", c.hs},
                {"fit_h", c.fit_h},
                {"lambda", c.lambda ? json(*c.lambda) : json(nullptr)},
                {"courant", c.courant},
                {"optimizer",
                 json{{"starts", starts},
                      {"initial_step", c.optimizer.initial_step},
                      {"xtol", c.optimizer.xtol},
                      {"ftol", c.optimizer.ftol},
                      {"max_evals", c.optimizer.max_evals}}},
                {"level", c.level},
                {"out", c.out},
                {"dataset", c.dataset ? json(*c.dataset) : json(nullptr)},
                {"auto", c.autocorrelative},
                {"at_truth", c.at_truth}};
}

SolverConfig solver_config(const ExperimentConfig& c, SchemeKind scheme, double h)
{
    SolverConfig s;
    s.h = h;
    s.scheme = scheme;
    s.lambda = c.lambda;
    s.courant = c.courant;
    return s;
}

std::string eta_tag(double eta)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", eta);
    return buf;
}

std::string dataset_name(const ExperimentConfig& c, std::size_t N, double eta)
{
    return to_string(c.ic) + "_N" + std::to_string(N) + "_eta" + eta_tag(eta) + "_seed" + std::to_string(c.seed);
}

struct NamedDataset {
    std::string name;
    Dataset data;
};

/// The dataset named in the config, else one per sweep cell generated from the config.
std::vector<NamedDataset> load_datasets(const ExperimentConfig& c, bool first_only)
{
    std::vector<NamedDataset> out;
    if (c.dataset) {
        const fs::path p(*c.dataset);
        out.push_back({p.stem().string(), read_dataset(p)});
        return out;
    }
    for (const auto& [N, eta] : c.cells) {
        out.push_back({dataset_name(c, N, eta), generate(c.theta0, make_grid(c.M, N), eta, c.seed, c.ic)});
        if (first_only) break;
    }
    return out;
}

InitialCondition dataset_ic(const ExperimentConfig& c, const Dataset& d)
{
    return d.provenance ? d.provenance->ic : c.ic;
}

class Run {
public:
    Run(std::string command, ExperimentConfig config, std::size_t jobs)
        : command_(std::move(command)), config_(std::move(config)), jobs_(jobs), start_(std::chrono::steady_clock::now())
    {
        std::error_code ec;
        fs::create_directories(out(), ec);
        if (ec || !fs::is_directory(out())) throw IoError("cannot create output directory " + config_.out);
    }

    [[nodiscard]] fs::path out() const { return fs::path(config_.out); }
    [[nodiscard]] const ExperimentConfig& config() const { return config_; }
    [[nodiscard]] std::size_t jobs() const { return jobs_; }

    void emit(const std::string& relative, const std::string& content)
    {
        write_text(out() / relative, content);
        files_.push_back(json{{"path", relative}, {"bytes", content.size()}, {"fnv1a", hex(fnv1a(content))}});
    }

    void note_seed(std::uint64_t seed)
    {
        if (std::find(seeds_.begin(), seeds_.end(), seed) == seeds_.end()) seeds_.push_back(seed);
    }

    void finish()
    {
        const json cfg = config_json(config_);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        const json manifest{{"tool", "advinv"},
                            {"version", kVersion},
                            {"command", command_},
                            {"config_hash", hex(fnv1a(cfg.dump()))},
                            {"config", cfg},
                            {"seeds", seeds_},
                            {"jobs", jobs_},
                            {"wall_clock_seconds", wall},
                            {"files", files_}};
        write_text(out() / "manifest.json", manifest.dump(2) + "\n");
    }

private:
    std::string command_;
    ExperimentConfig config_;
    std::size_t jobs_;
    std::chrono::steady_clock::time_point start_;
    json files_ = json::array();
    std::vector<std::uint64_t> seeds_;
};

void cmd_generate(Run& run)
{
    const auto& c = run.config();
    for (const auto& [N, eta] : c.cells) {
        const auto d = generate(c.theta0, make_grid(c.M, N), eta, c.seed, c.ic);
        const std::string name = "datasets/" + dataset_name(c, N, eta);
        run.emit(name + ".csv", dataset_csv(d));
        run.emit(name + ".json", provenance_json(*d.provenance, d.grid).dump(2) + "\n");
        run.note_seed(c.seed);
    }
}

std::string fmt_opt(const std::optional<OrderFit>& o, bool r2 = false)
{
    if (!o) return "nan";
    return format_double(r2 ? o->r2 : o->slope);
}

std::string subset_string(const std::vector<std::size_t>& s)
{
    std::string out;
    for (std::size_t k = 0; k < s.size(); ++k) out += (k ? ";" : "") + std::to_string(s[k] + 1);
    return out;
}

void cmd_convergence(Run& run)
{
    const auto& c = run.config();
    const auto datasets = load_datasets(c, false);

    struct Cell {
        const NamedDataset* dataset;
        SchemeKind scheme;
        std::optional<ConvergenceStudy> study;
        std::string error;
    };
    std::vector<Cell> cells;
    for (const auto& d : datasets)
        for (auto s : c.schemes) cells.push_back({&d, s, std::nullopt, {}});

    parallel_for(cells.size(), run.jobs(), [&](std::size_t k) {
        auto& cell = cells[k];
        try {
            cell.study = cost_order_study(cell.dataset->data, solver_config(c, cell.scheme, c.hs.front()),
                                          dataset_ic(c, cell.dataset->data), c.hs, c.optimizer);
        } catch (const Error& e) {
            cell.error = e.what();
        }
    });

    std::string table = "dataset,scheme,N,eta,p,p_r2,p_J,p_J_r2,p_J_subset,plateau,p_theta,p_theta_r2,status\n";
    std::string fits = study_csv_header();
    json summary = json::array();
    for (const auto& cell : cells) {
        const auto& d = cell.dataset->data;
        const double eta = d.provenance ? d.provenance->eta : std::nan("");
        const std::string prefix = cell.dataset->name + "," + to_string(cell.scheme) + "," + std::to_string(d.grid.N()) +
                                   "," + format_double(eta) + ",";
        if (!cell.study) {
            table += prefix + "nan,nan,nan,nan,,0,nan,nan,failed\n";
            summary.push_back(json{{"dataset", cell.dataset->name}, {"scheme", to_string(cell.scheme)}, {"error", cell.error}});
            continue;
        }
        const auto& st = *cell.study;
        table += prefix + fmt_opt(st.p) + "," + fmt_opt(st.p, true) + "," + format_double(st.p_J.slope) + "," +
                 format_double(st.p_J.r2) + "," + subset_string(st.p_J.subset) + "," + (st.plateau ? "1" : "0") +
                 "," + fmt_opt(st.p_theta) + "," + fmt_opt(st.p_theta, true) + ",ok\n";
        for (const auto& f : st.fits) fits += study_csv_row(f, d.grid.N(), eta);

        std::string dat = "# ln_h ln_J ln_theta_err ln_E\n";
        for (std::size_t k = 0; k < st.hs.size(); ++k) {
            auto ln = [](double v) { return v > 0.0 ? format_double(std::log(v)) : std::string("nan"); };
            dat += format_double(std::log(st.hs[k])) + " " + ln(st.costs[k]) + " " +
                   (st.errors.empty() ? "nan" : ln(st.errors[k])) + " " +
                   (st.solution_errors.empty() ? "nan" : ln(st.solution_errors[k])) + "\n";
        }
        run.emit("plots/" + cell.dataset->name + "_" + to_string(cell.scheme) + ".dat", dat);

        json j{{"dataset", cell.dataset->name}, {"scheme", to_string(cell.scheme)}, {"p_J", to_json(st.p_J)},
               {"plateau", st.plateau}};
        j["p"] = st.p ? to_json(*st.p) : json(nullptr);
        j["p_theta"] = st.p_theta ? to_json(*st.p_theta) : json(nullptr);
        summary.push_back(j);
        if (d.provenance) run.note_seed(d.provenance->seed);
    }
    run.emit("convergence.csv", table);
    run.emit("fits.csv", fits);
    run.emit("summary.json", summary.dump(2) + "\n");
    run.emit("plot.py", R"(# Plots ln J, ln ||theta_hat - theta0|| and ln E against ln h for every study cell.
import glob
import matplotlib.pyplot as plt
import numpy as np

for path in sorted(glob.glob("plots/*.dat")):
    data = np.loadtxt(path)
    fig, ax = plt.subplots()
    for col, label in ((1, "ln J"), (2, "ln |theta_hat - theta0|"), (3, "ln E")):
        ax.plot(data[:, 0], data[:, col], "o-", label=label)
    ax.set_xlabel("ln h")
    ax.legend()
    fig.savefig(path.replace(".dat", ".png"), dpi=120)
    plt.close(fig)
)");
}

std::string residual_csv(const DataGrid& g, const Matrix& r, const std::vector<double>* whitened)
{
    std::string s = whitened ? "t,x,r,whitened\n" : "t,x,r\n";
    for (std::size_t i = 0; i < g.M(); ++i)
        for (std::size_t j = 0; j < g.N(); ++j) {
            s += format_double(g.times[i]) + "," + format_double(g.positions[j]) + "," + format_double(r(i, j));
            if (whitened) s += "," + format_double((*whitened)[i * g.N() + j]);
            s += "\n";
        }
    return s;
}

void cmd_fit(Run& run)
{
    const auto& c = run.config();
    const auto ds = load_datasets(c, true).front();
    const auto ic = dataset_ic(c, ds.data);
    const auto config = solver_config(c, c.schemes.front(), c.fit_h);
    json out;
    if (c.autocorrelative) {
        const auto fit = fit_autocorrelative(ds.data, config, ic, c.optimizer);
        const auto U = numerical_solution_matrix(fit.autocorrelative.theta_hat, fit.autocorrelative.config, ic, ds.data.grid);
        const auto r = residuals(ds.data.Y, U);
        const auto w = whiten(r, fit.model);
        out = json{{"ols", fit_json(fit.ols)}, {"autocorrelative", fit_json(fit.autocorrelative)},
                   {"model", to_json(fit.model)}, {"non_diffusive_warning", fit.non_diffusive_warning}};
        run.emit("residuals.csv", residual_csv(ds.data.grid, r, &w));
        if (!fit.ols.trace.converged || !fit.autocorrelative.trace.converged) out["warning"] = "optimizer did not converge";
    } else {
        const auto fit = fit_ols(ds.data, config, ic, c.optimizer);
        if (!std::isfinite(fit.cost)) throw EstimationError("no admissible parameter found");
        const auto U = numerical_solution_matrix(fit.theta_hat, fit.config, ic, ds.data.grid);
        out = json{{"ols", fit_json(fit)}};
        run.emit("residuals.csv", residual_csv(ds.data.grid, residuals(ds.data.Y, U), nullptr));
        if (!fit.trace.converged) out["warning"] = "optimizer did not converge";
    }
    out["dataset"] = ds.name;
    run.emit("fit.json", out.dump(2) + "\n");
    if (ds.data.provenance) run.note_seed(ds.data.provenance->seed);
}

void cmd_confidence(Run& run)
{
    const auto& c = run.config();
    const auto ds = load_datasets(c, true).front();
    const auto ic = dataset_ic(c, ds.data);
    const auto scheme = c.schemes.front();

    std::vector<ConfidenceReport> reports(c.hs.size());
    parallel_for(c.hs.size(), run.jobs(), [&](std::size_t k) {
        const auto config = solver_config(c, scheme, c.hs[k]);
        FitResult fit;
        const AutocorrModel* model = nullptr;
        AutocorrelativeFit afit;
        if (c.autocorrelative) {
            afit = fit_autocorrelative(ds.data, config, ic, c.optimizer);
            fit = afit.autocorrelative;
            model = &afit.model;
        } else {
            fit = fit_ols(ds.data, config, ic, c.optimizer);
        }
        const auto U = numerical_solution_matrix(fit.theta_hat, fit.config, ic, ds.data.grid);
        const auto sens = sensitivities(fit.theta_hat, fit.config, ds.data.grid, ic);
        reports[k] = confidence_report(fit.theta_hat, residuals(ds.data.Y, U), sens, model, c.level);
    });

    std::string table = "h,alpha_hat,beta_hat,alpha_lower,alpha_upper,beta_lower,beta_upper,eta2_hat,encloses,rank_deficient\n";
    std::string ellipses = "h_index,h,alpha,beta\n";
    json all = json::array();
    for (std::size_t k = 0; k < c.hs.size(); ++k) {
        const auto& r = reports[k];
        const std::string encloses =
            ds.data.provenance ? (r.region_contains(ds.data.provenance->theta0) ? "1" : "0") : "";
        table += format_double(c.hs[k]) + "," + format_double(r.theta_hat.alpha) + "," + format_double(r.theta_hat.beta) +
                 "," + format_double(r.lower[0]) + "," + format_double(r.upper[0]) + "," + format_double(r.lower[1]) +
                 "," + format_double(r.upper[1]) + "," + format_double(r.eta2_hat) + "," + encloses + "," +
                 (r.rank_deficient ? "1" : "0") + "\n";
        if (!r.rank_deficient)
            for (const auto& p : r.ellipse_points(100))
                ellipses += std::to_string(k + 1) + "," + format_double(c.hs[k]) + "," + format_double(p.alpha) + "," +
                            format_double(p.beta) + "\n";
        json j = to_json(r);
        j["h"] = c.hs[k];
        all.push_back(j);
    }
    run.emit("confidence.csv", table);
    run.emit("ellipses.csv", ellipses);
    run.emit("confidence.json", json{{"dataset", ds.name}, {"scheme", to_string(scheme)},
                                     {"autocorrelative", c.autocorrelative}, {"reports", all}}
                                        .dump(2) +
                                    "\n");
    if (ds.data.provenance) run.note_seed(ds.data.provenance->seed);
}

void cmd_decompose(Run& run)
{
    const auto& c = run.config();
    const auto ds = load_datasets(c, true).front();
    if (!ds.data.provenance) throw ConfigError("decompose needs a synthetic dataset with a provenance sidecar");
    const auto ic = dataset_ic(c, ds.data);
    const auto theta0 = ds.data.provenance->theta0;
    const auto scheme = c.schemes.front();

    std::vector<std::pair<ParameterVector, CostBreakdown>> rows(c.hs.size());
    parallel_for(c.hs.size(), run.jobs(), [&](std::size_t k) {
        const auto config = solver_config(c, scheme, c.hs[k]);
        if (c.at_truth) {
            rows[k] = {theta0, decompose_cost(ds.data, theta0, theta0, config, ic)};
        } else {
            const auto fit = fit_ols(ds.data, config, ic, c.optimizer);
            rows[k] = {fit.theta_hat, decompose_cost(ds.data, fit.theta_hat, theta0, fit.config, ic)};
        }
    });
    std::string table = "h,alpha,beta,A,B,C,D,E,F,J,identity\n";
    for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto& [th, b] = rows[k];
        table += format_double(c.hs[k]) + "," + format_double(th.alpha) + "," + format_double(th.beta) + "," +
                 format_double(b.A) + "," + format_double(b.B) + "," + format_double(b.C) + "," + format_double(b.D) +
                 "," + format_double(b.E) + "," + format_double(b.F) + "," + format_double(b.J) + "," +
                 format_double(std::abs(b.sum() - b.J)) + "\n";
    }
    run.emit("decompose.csv", table);
    run.note_seed(ds.data.provenance->seed);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Parameter estimation for u_t + (alpha x^(1/beta) u)_x = 0"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, out_dir, ic_flag, scheme_flag, dataset_path;
    std::size_t jobs = 1;
    std::optional<std::uint64_t> seed;
    std::optional<double> h_flag;
    bool auto_flag = false, truth_flag = false;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config or a manifest.json from an earlier run");
        sub->add_option("--out", out_dir, "output directory (overrides ADVINV_OUT_DIR and the config)");
        sub->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--seed", seed, "noise seed");
        sub->add_option("--ic", ic_flag, "initial condition")->check(CLI::IsMember({"d", "c"}));
    };
    auto with_data = [&](CLI::App* sub) {
        sub->add_option("--dataset", dataset_path, "dataset CSV (provenance read from the .json sidecar)");
        sub->add_option("--scheme", scheme_flag, "numerical scheme")
            ->check(CLI::IsMember({"upwind", "lw", "bw", "upwind-fl"}));
    };
    auto* gen = app.add_subcommand("generate", "write synthetic datasets for the sweep");
    common(gen);
    auto* conv = app.add_subcommand("convergence", "orders p, p_J, p_theta over the h ladder");
    common(conv);
    with_data(conv);
    auto* fit = app.add_subcommand("fit", "OLS or autocorrelative fit at one step size");
    common(fit);
    with_data(fit);
    fit->add_option("--step", h_flag, "step size h");
    fit->add_flag("--auto", auto_flag, "two-stage autocorrelative fit");
    auto* conf = app.add_subcommand("confidence", "confidence intervals and regions over the h ladder");
    common(conf);
    with_data(conf);
    conf->add_flag("--auto", auto_flag, "use the autocorrelative model");
    auto* dec = app.add_subcommand("decompose", "cost components A-F over the h ladder");
    common(dec);
    with_data(dec);
    dec->add_flag("--at-truth", truth_flag, "evaluate at theta0 instead of theta_hat(h)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        json raw = json::object();
        if (!config_path.empty()) {
            raw = parse_json(read_text(config_path), config_path);
            if (raw.is_object() && raw.contains("config") && raw.contains("files")) raw = raw["config"];
        }
        ExperimentConfig c = parse_config(raw);
        if (!ic_flag.empty()) {
            const auto ic = parse_initial_condition(ic_flag);
            if (ic != c.ic && !raw.contains("theta0")) c.theta0 = default_theta0(ic);
            if (ic != c.ic && !raw.contains("cells") && !raw.contains("N") && !raw.contains("eta")) c.cells.clear();
            c.ic = ic;
        }
        if (seed) c.seed = *seed;
        if (!scheme_flag.empty()) c.schemes = {parse_scheme(scheme_flag)};
        if (!dataset_path.empty()) c.dataset = dataset_path;
        if (h_flag) c.fit_h = *h_flag;
        if (auto_flag) c.autocorrelative = true;
        if (truth_flag) c.at_truth = true;
        if (const char* env = std::getenv("ADVINV_OUT_DIR"); env && *env) c.out = env;
        if (!out_dir.empty()) c.out = out_dir;
        validate(c);

        const std::string command = app.get_subcommands().front()->get_name();
        Run run(command, c, jobs);
        if (command == "generate") cmd_generate(run);
        else if (command == "convergence") cmd_convergence(run);
        else if (command == "fit") cmd_fit(run);
        else if (command == "confidence") cmd_confidence(run);
        else cmd_decompose(run);
        run.finish();
        std::cout << "wrote " << (fs::path(run.config().out) / "manifest.json").string() << "\n";
        return kOk;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kIo;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumerical;
    }
}
