#pragma once

// Text formats: dataset CSV with a JSON provenance sidecar, study rows, confidence reports.

#include "advinv/datagen.hpp"
#include "advinv/estimation.hpp"
#include "advinv/uncertainty.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace advinv {

using json = nlohmann::json;

/// Shortest-safe round-trip representation of a double.
inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& content)
{
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out.flush()) throw IoError("failed writing " + path.string());
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json parse_json(const std::string& text, const std::string& where)
{
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(where + ": invalid JSON: " + e.what());
    }
}

inline json to_json(const ParameterVector& p) { return json::array({p.alpha, p.beta}); }

inline ParameterVector parameter_from_json(const json& j, const std::string& what)
{
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(what + " must be a two-element numeric array [alpha, beta]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline json provenance_json(const Provenance& p, const DataGrid& grid)
{
    return json{{"theta0", to_json(p.theta0)}, {"eta", p.eta},         {"seed", p.seed},
                {"ic", to_string(p.ic)},       {"M", grid.M()},        {"N", grid.N()}};
}

inline Provenance provenance_from_json(const json& j)
{
    try {
        Provenance p;
        p.theta0 = parameter_from_json(j.at("theta0"), "theta0");
        p.eta = j.at("eta").get<double>();
        p.seed = j.at("seed").get<std::uint64_t>();
        p.ic = parse_initial_condition(j.at("ic").get<std::string>());
        return p;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("provenance sidecar: ") + e.what());
    }
}

inline std::string dataset_csv(const Dataset& d)
{
    std::string s = "t,x,y\n";
    for (std::size_t i = 0; i < d.grid.M(); ++i)
        for (std::size_t j = 0; j < d.grid.N(); ++j)
            s += format_double(d.grid.times[i]) + "," + format_double(d.grid.positions[j]) + "," +
                 format_double(d.Y(i, j)) + "\n";
    return s;
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& csv)
{
    auto p = csv;
    p.replace_extension(".json");
    return p;
}

/// Writes `<stem>.csv` and, for synthetic data, the `<stem>.json` sidecar.
inline void write_dataset(const std::filesystem::path& csv, const Dataset& d)
{
    write_text(csv, dataset_csv(d));
    if (d.provenance) write_text(sidecar_path(csv), provenance_json(*d.provenance, d.grid).dump(2) + "\n");
}

inline Dataset parse_dataset_csv(const std::string& text, const std::string& where = "dataset")
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(where + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,x,y") throw ConfigError(where + ": expected header 't,x,y'");

    std::map<double, std::map<double, double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        double t, x, y;
        char c1, c2;
        std::istringstream ls(line);
        if (!(ls >> t >> c1 >> x >> c2 >> y) || c1 != ',' || c2 != ',')
            throw ConfigError(where + ":" + std::to_string(lineno) + ": malformed record");
        if (!std::isfinite(y)) throw ConfigError(where + ":" + std::to_string(lineno) + ": non-finite observation");
        if (!rows[t].emplace(x, y).second)
            throw ConfigError(where + ":" + std::to_string(lineno) + ": duplicate (t, x)");
    }
    if (rows.empty()) throw ConfigError(where + ": no records");

    Dataset d;
    for (const auto& [t, cols] : rows) d.grid.times.push_back(t);
    for (const auto& [x, y] : rows.begin()->second) d.grid.positions.push_back(x);
    d.Y = Matrix(d.grid.M(), d.grid.N());
    std::size_t i = 0;
    for (const auto& [t, cols] : rows) {
        if (cols.size() != d.grid.N()) throw ConfigError(where + ": observations do not form a full grid");
        std::size_t j = 0;
        for (const auto& [x, y] : cols) {
            if (x != d.grid.positions[j]) throw ConfigError(where + ": observations do not form a full grid");
            d.Y(i, j++) = y;
        }
        ++i;
    }
    try {
        validate_grid(d.grid);
    } catch (const ContractError& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return d;
}

/// Reads a dataset CSV and its sidecar when one exists next to it.
inline Dataset read_dataset(const std::filesystem::path& csv)
{
    Dataset d = parse_dataset_csv(read_text(csv), csv.string());
    const auto side = sidecar_path(csv);
    if (std::filesystem::exists(side)) {
        const json j = parse_json(read_text(side), side.string());
        d.provenance = provenance_from_json(j);
        if (j.value("M", d.grid.M()) != d.grid.M() || j.value("N", d.grid.N()) != d.grid.N())
            throw ConfigError(side.string() + ": grid size disagrees with the CSV");
    }
    return d;
}

inline std::string study_csv_header() { return "scheme,h,N,eta,alpha_hat,beta_hat,cost,converged\n"; }

inline std::string study_csv_row(const FitResult& f, std::size_t N, double eta)
{
    return to_string(f.scheme) + "," + format_double(f.h) + "," + std::to_string(N) + "," + format_double(eta) + "," +
           format_double(f.theta_hat.alpha) + "," + format_double(f.theta_hat.beta) + "," + format_double(f.cost) +
           "," + (f.trace.converged ? "1" : "0") + "\n";
}

inline json to_json(const OrderFit& o)
{
    return json{{"slope", o.slope}, {"intercept", o.intercept}, {"r2", o.r2}, {"subset", o.subset}};
}

inline json fit_json(const FitResult& f)
{
    json j{{"theta_hat", to_json(f.theta_hat)},
           {"cost", f.cost},
           {"scheme", to_string(f.scheme)},
           {"h", f.h},
           {"lambda", f.config.lambda ? json(*f.config.lambda) : json(nullptr)},
           {"evaluations", f.trace.evaluations},
           {"iterations", f.trace.iterations},
           {"restarts", f.trace.restarts},
           {"converged", f.trace.converged}};
    if (f.provenance) j["provenance"] = json{{"theta0", to_json(f.provenance->theta0)}, {"eta", f.provenance->eta},
                                             {"seed", f.provenance->seed}, {"ic", to_string(f.provenance->ic)}};
    return j;
}

inline json to_json(const AutocorrModel& m)
{
    json fronts = json::array();
    for (const auto& f : m.fronts)
        fronts.push_back(json{{"column", f.column + 1}, {"position", std::isfinite(f.position) ? json(f.position) : json(nullptr)},
                              {"beyond", f.beyond}});
    return json{{"fronts", fronts}, {"gamma_minus", m.gamma_minus}, {"gamma_plus", m.gamma_plus}};
}

inline json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const ConfidenceReport& r)
{
    auto arr = [](const auto& a) {
        json out = json::array();
        for (double v : a) out.push_back(nullable(v));
        return out;
    };
    return json{{"theta_hat", to_json(r.theta_hat)},
                {"level", r.level},
                {"dof", r.dof},
                {"t_quantile", r.t_quantile},
                {"eta2_hat", r.eta2_hat},
                {"H", arr(r.H)},
                {"covariance", arr(r.covariance)},
                {"standard_errors", arr(r.standard_errors)},
                {"lower", arr(r.lower)},
                {"upper", arr(r.upper)},
                {"ellipse",
                 json{{"center", to_json(r.ellipse.center)},
                      {"semi_axes", arr(r.ellipse.semi_axes)},
                      {"angle", r.ellipse.angle},
                      {"radius_sq", r.ellipse.radius_sq}}},
                {"rank_deficient", r.rank_deficient}};
}

} // namespace advinv
