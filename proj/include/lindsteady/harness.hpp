// harness.hpp — Run configuration (strict JSON schema), sweep grids, the batch
// engine with order-restoring parallel scheduling, CSV / matrix-dump output,
// figure presets, and the built-in oracle self-check suite.

#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lindsteady/errors.hpp"
#include "lindsteady/lindblad.hpp"
#include "lindsteady/model.hpp"
#include "lindsteady/observables.hpp"
#include "lindsteady/solvers.hpp"

namespace lindsteady {

using json = nlohmann::ordered_json;

// --------------------------------- RunConfig ---------------------------------

struct RunConfig {
    LatticeSpec lattice;
    DissipationSpec dissipation;
    SteadyStateMethod method{SteadyStateMethod::nullspace};
    EvolutionConfig evolution;
    bool emit_rho_pq{false};
    bool emit_rho_nn{false};
    LogBase log_base{LogBase::e};
    Gauge gauge{Gauge::momentum};
    std::string output_dir{"."};
    std::string dump_format{"text"};
    long seed{0};

    void validate_all(std::vector<std::string>& violations) const {
        try {
            lattice.validate();
        } catch (const std::exception& e) {
            violations.emplace_back(e.what());
        }
        try {
            dissipation.validate();
        } catch (const std::exception& e) {
            violations.emplace_back(e.what());
        }
        try {
            evolution.validate();
        } catch (const std::exception& e) {
            violations.emplace_back(e.what());
        }
        if (gauge == Gauge::momentum && lattice.boundary != Boundary::periodic) {
            violations.emplace_back("observables.gauge: momentum gauge requires periodic boundary");
        }
        if (dump_format != "text") {
            violations.emplace_back("output.format: only 'text' is supported");
        }
    }

    friend bool operator==(const RunConfig& a, const RunConfig& b) {
        return a.lattice.N == b.lattice.N && a.lattice.t == b.lattice.t &&
               a.lattice.boundary == b.lattice.boundary &&
               a.dissipation.gamma == b.dissipation.gamma &&
               a.dissipation.alpha0 == b.dissipation.alpha0 &&
               a.dissipation.alpha1 == b.dissipation.alpha1 &&
               a.dissipation.beta == b.dissipation.beta && a.dissipation.nu == b.dissipation.nu &&
               a.dissipation.boundary == b.dissipation.boundary &&
               a.dissipation.index_origin == b.dissipation.index_origin && a.method == b.method &&
               a.evolution.initial_state == b.evolution.initial_state &&
               a.evolution.localized_site == b.evolution.localized_site &&
               a.evolution.rel_tol == b.evolution.rel_tol &&
               a.evolution.abs_tol == b.evolution.abs_tol &&
               a.evolution.residual_tol == b.evolution.residual_tol &&
               a.evolution.max_integration_time == b.evolution.max_integration_time &&
               a.evolution.resymmetrize_every == b.evolution.resymmetrize_every &&
               a.emit_rho_pq == b.emit_rho_pq && a.emit_rho_nn == b.emit_rho_nn &&
               a.log_base == b.log_base && a.gauge == b.gauge && a.output_dir == b.output_dir &&
               a.dump_format == b.dump_format && a.seed == b.seed;
    }
};

// ------------------------------- Config parsing -------------------------------

namespace cfgdetail {

inline void unknown_key_check(const json& obj, const std::string& where,
                              std::initializer_list<const char*> allowed,
                              std::vector<std::string>& violations) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (item.key() == a) {
                known = true;
                break;
            }
        }
        if (!known) violations.push_back("unknown key '" + where + item.key() + "'");
    }
}

inline bool fetch_double(const json& obj, const char* key, const std::string& where, double& out,
                         std::vector<std::string>& violations) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_number()) {
        violations.push_back("field '" + where + key + "' must be a number");
        return false;
    }
    out = v.get<double>();
    return true;
}

inline bool fetch_int(const json& obj, const char* key, const std::string& where, int& out,
                      std::vector<std::string>& violations) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_number_integer()) {
        violations.push_back("field '" + where + key + "' must be an integer");
        return false;
    }
    out = v.get<int>();
    return true;
}

inline bool fetch_bool(const json& obj, const char* key, const std::string& where, bool& out,
                       std::vector<std::string>& violations) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_boolean()) {
        violations.push_back("field '" + where + key + "' must be a boolean");
        return false;
    }
    out = v.get<bool>();
    return true;
}

inline bool fetch_string(const json& obj, const char* key, const std::string& where,
                         std::string& out, std::vector<std::string>& violations) {
    if (!obj.contains(key)) return false;
    const json& v = obj.at(key);
    if (!v.is_string()) {
        violations.push_back("field '" + where + key + "' must be a string");
        return false;
    }
    out = v.get<std::string>();
    return true;
}

inline bool parse_boundary(const std::string& s, Boundary& out) {
    if (s == "periodic") {
        out = Boundary::periodic;
        return true;
    }
    if (s == "open") {
        out = Boundary::open;
        return true;
    }
    return false;
}

} // namespace cfgdetail

// Strict parse: every key must be known, every violation is reported at once.
// Top level accepts the nested groups plus scalar shorthands for the common
// physics parameters (N, t, boundary, gamma, alpha0, alpha1, beta, nu, method).
inline RunConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");

    RunConfig cfg;
    std::vector<std::string> violations;
    bool n_given = false;
    bool gauge_given = false;

    cfgdetail::unknown_key_check(doc, "",
                                 {"lattice", "dissipation", "solver", "observables", "output",
                                  "seed", "N", "t", "boundary", "gamma", "alpha0", "alpha1",
                                  "beta", "nu", "method"},
                                 violations);

    // Scalar shorthands
    n_given |= cfgdetail::fetch_int(doc, "N", "", cfg.lattice.N, violations);
    cfgdetail::fetch_double(doc, "t", "", cfg.lattice.t, violations);
    std::string bnd;
    if (cfgdetail::fetch_string(doc, "boundary", "", bnd, violations)) {
        if (!cfgdetail::parse_boundary(bnd, cfg.lattice.boundary)) {
            violations.push_back("field 'boundary' must be 'periodic' or 'open'");
        } else {
            cfg.dissipation.boundary = cfg.lattice.boundary;
        }
    }
    cfgdetail::fetch_double(doc, "gamma", "", cfg.dissipation.gamma, violations);
    cfgdetail::fetch_double(doc, "alpha0", "", cfg.dissipation.alpha0, violations);
    cfgdetail::fetch_double(doc, "alpha1", "", cfg.dissipation.alpha1, violations);
    cfgdetail::fetch_double(doc, "beta", "", cfg.dissipation.beta, violations);
    cfgdetail::fetch_double(doc, "nu", "", cfg.dissipation.nu, violations);
    std::string method;
    if (cfgdetail::fetch_string(doc, "method", "", method, violations)) {
        if (method == "nullspace") cfg.method = SteadyStateMethod::nullspace;
        else if (method == "evolution") cfg.method = SteadyStateMethod::evolution;
        else violations.push_back("field 'method' must be 'nullspace' or 'evolution'");
    }

    if (doc.contains("lattice")) {
        const json& lat = doc.at("lattice");
        if (!lat.is_object()) {
            violations.emplace_back("'lattice' must be an object");
        } else {
            cfgdetail::unknown_key_check(lat, "lattice.", {"N", "t", "boundary"}, violations);
            n_given |= cfgdetail::fetch_int(lat, "N", "lattice.", cfg.lattice.N, violations);
            cfgdetail::fetch_double(lat, "t", "lattice.", cfg.lattice.t, violations);
            std::string b;
            if (cfgdetail::fetch_string(lat, "boundary", "lattice.", b, violations)) {
                if (!cfgdetail::parse_boundary(b, cfg.lattice.boundary)) {
                    violations.push_back("field 'lattice.boundary' must be 'periodic' or 'open'");
                }
            }
        }
    }

    if (doc.contains("dissipation")) {
        const json& dis = doc.at("dissipation");
        if (!dis.is_object()) {
            violations.emplace_back("'dissipation' must be an object");
        } else {
            cfgdetail::unknown_key_check(
                dis, "dissipation.",
                {"gamma", "alpha0", "alpha1", "beta", "nu", "boundary", "index_origin"},
                violations);
            cfgdetail::fetch_double(dis, "gamma", "dissipation.", cfg.dissipation.gamma, violations);
            cfgdetail::fetch_double(dis, "alpha0", "dissipation.", cfg.dissipation.alpha0, violations);
            cfgdetail::fetch_double(dis, "alpha1", "dissipation.", cfg.dissipation.alpha1, violations);
            cfgdetail::fetch_double(dis, "beta", "dissipation.", cfg.dissipation.beta, violations);
            cfgdetail::fetch_double(dis, "nu", "dissipation.", cfg.dissipation.nu, violations);
            cfgdetail::fetch_int(dis, "index_origin", "dissipation.",
                                 cfg.dissipation.index_origin, violations);
            std::string b;
            if (cfgdetail::fetch_string(dis, "boundary", "dissipation.", b, violations)) {
                if (!cfgdetail::parse_boundary(b, cfg.dissipation.boundary)) {
                    violations.push_back(
                        "field 'dissipation.boundary' must be 'periodic' or 'open'");
                }
            }
        }
    }

    if (doc.contains("solver")) {
        const json& sol = doc.at("solver");
        if (!sol.is_object()) {
            violations.emplace_back("'solver' must be an object");
        } else {
            cfgdetail::unknown_key_check(sol, "solver.",
                                         {"method", "initial_state", "rel_tol", "abs_tol",
                                          "residual_tol", "max_integration_time",
                                          "resymmetrize_every"},
                                         violations);
            std::string m;
            if (cfgdetail::fetch_string(sol, "method", "solver.", m, violations)) {
                if (m == "nullspace") cfg.method = SteadyStateMethod::nullspace;
                else if (m == "evolution") cfg.method = SteadyStateMethod::evolution;
                else violations.push_back("field 'solver.method' must be 'nullspace' or 'evolution'");
            }
            if (sol.contains("initial_state")) {
                const json& ini = sol.at("initial_state");
                if (ini.is_string() && ini.get<std::string>() == "maximally_mixed") {
                    cfg.evolution.initial_state = InitialState::maximally_mixed;
                } else if (ini.is_object() && ini.size() == 1 && ini.contains("site_localized") &&
                           ini.at("site_localized").is_number_integer()) {
                    cfg.evolution.initial_state = InitialState::site_localized;
                    cfg.evolution.localized_site = ini.at("site_localized").get<int>();
                } else {
                    violations.push_back(
                        "field 'solver.initial_state' must be 'maximally_mixed' or "
                        "{\"site_localized\": <site>}");
                }
            }
            cfgdetail::fetch_double(sol, "rel_tol", "solver.", cfg.evolution.rel_tol, violations);
            cfgdetail::fetch_double(sol, "abs_tol", "solver.", cfg.evolution.abs_tol, violations);
            cfgdetail::fetch_double(sol, "residual_tol", "solver.", cfg.evolution.residual_tol,
                                    violations);
            cfgdetail::fetch_double(sol, "max_integration_time", "solver.",
                                    cfg.evolution.max_integration_time, violations);
            cfgdetail::fetch_int(sol, "resymmetrize_every", "solver.",
                                 cfg.evolution.resymmetrize_every, violations);
        }
    }

    if (doc.contains("observables")) {
        const json& obs = doc.at("observables");
        if (!obs.is_object()) {
            violations.emplace_back("'observables' must be an object");
        } else {
            cfgdetail::unknown_key_check(
                obs, "observables.", {"emit_rho_pq", "emit_rho_nn", "log_base", "gauge"},
                violations);
            cfgdetail::fetch_bool(obs, "emit_rho_pq", "observables.", cfg.emit_rho_pq, violations);
            cfgdetail::fetch_bool(obs, "emit_rho_nn", "observables.", cfg.emit_rho_nn, violations);
            std::string lb;
            if (cfgdetail::fetch_string(obs, "log_base", "observables.", lb, violations)) {
                if (lb == "e") cfg.log_base = LogBase::e;
                else if (lb == "2") cfg.log_base = LogBase::two;
                else violations.push_back("field 'observables.log_base' must be 'e' or '2'");
            }
            std::string g;
            if (cfgdetail::fetch_string(obs, "gauge", "observables.", g, violations)) {
                if (g == "momentum") cfg.gauge = Gauge::momentum;
                else if (g == "real_symmetric") cfg.gauge = Gauge::real_symmetric;
                else violations.push_back(
                    "field 'observables.gauge' must be 'momentum' or 'real_symmetric'");
                gauge_given = true;
            }
        }
    }

    if (doc.contains("output")) {
        const json& outp = doc.at("output");
        if (!outp.is_object()) {
            violations.emplace_back("'output' must be an object");
        } else {
            cfgdetail::unknown_key_check(outp, "output.", {"dir", "format"}, violations);
            cfgdetail::fetch_string(outp, "dir", "output.", cfg.output_dir, violations);
            cfgdetail::fetch_string(outp, "format", "output.", cfg.dump_format, violations);
        }
    }

    if (doc.contains("seed")) {
        if (!doc.at("seed").is_number_integer()) {
            violations.emplace_back("field 'seed' must be an integer");
        } else {
            cfg.seed = doc.at("seed").get<long>();
        }
    }

    if (!n_given) violations.emplace_back("field 'N' (or 'lattice.N') is required");
    if (!gauge_given && cfg.lattice.boundary == Boundary::open) {
        cfg.gauge = Gauge::real_symmetric;
    }
    cfg.validate_all(violations);

    if (!violations.empty()) {
        std::string msg = "config validation failed:";
        for (const auto& v : violations) msg += "\n  - " + v;
        throw ConfigError(msg);
    }
    return cfg;
}

// Canonical nested serialization; parse(serialize(cfg)) == cfg.
inline std::string serialize_config(const RunConfig& cfg) {
    json doc;
    doc["lattice"] = {{"N", cfg.lattice.N},
                      {"t", cfg.lattice.t},
                      {"boundary", to_string(cfg.lattice.boundary)}};
    doc["dissipation"] = {{"gamma", cfg.dissipation.gamma},
                          {"alpha0", cfg.dissipation.alpha0},
                          {"alpha1", cfg.dissipation.alpha1},
                          {"beta", cfg.dissipation.beta},
                          {"nu", cfg.dissipation.nu},
                          {"boundary", to_string(cfg.dissipation.boundary)},
                          {"index_origin", cfg.dissipation.index_origin}};
    json ini;
    if (cfg.evolution.initial_state == InitialState::site_localized) {
        ini = json{{"site_localized", cfg.evolution.localized_site}};
    } else {
        ini = "maximally_mixed";
    }
    doc["solver"] = {{"method", to_string(cfg.method)},
                     {"initial_state", ini},
                     {"rel_tol", cfg.evolution.rel_tol},
                     {"abs_tol", cfg.evolution.abs_tol},
                     {"residual_tol", cfg.evolution.residual_tol},
                     {"max_integration_time", cfg.evolution.max_integration_time},
                     {"resymmetrize_every", cfg.evolution.resymmetrize_every}};
    doc["observables"] = {{"emit_rho_pq", cfg.emit_rho_pq},
                          {"emit_rho_nn", cfg.emit_rho_nn},
                          {"log_base", to_string(cfg.log_base)},
                          {"gauge", to_string(cfg.gauge)}};
    doc["output"] = {{"dir", cfg.output_dir}, {"format", cfg.dump_format}};
    doc["seed"] = cfg.seed;
    return doc.dump(2);
}

// --------------------------------- SweepGrid ----------------------------------

enum class SweepParam { alpha1, nu, beta, N, alpha0 };

inline const char* to_string(SweepParam p) {
    switch (p) {
        case SweepParam::alpha1: return "alpha1";
        case SweepParam::nu: return "nu";
        case SweepParam::beta: return "beta";
        case SweepParam::N: return "N";
        case SweepParam::alpha0: return "alpha0";
    }
    return "?";
}

struct SweepAxis {
    SweepParam param;
    std::vector<double> values;
};

struct SweepGrid {
    std::vector<SweepAxis> axes;   // first axis is outermost (slowest)

    size_t total_points() const {
        size_t total = 1;
        for (const auto& ax : axes) total *= ax.values.size();
        return total;
    }

    // Point index -> axis values, last axis fastest
    std::vector<double> point(size_t index) const {
        std::vector<double> vals(axes.size());
        for (size_t a = axes.size(); a-- > 0;) {
            const size_t n = axes[a].values.size();
            vals[a] = axes[a].values[index % n];
            index /= n;
        }
        return vals;
    }

    void apply(RunConfig& cfg, const std::vector<double>& vals) const {
        for (size_t a = 0; a < axes.size(); ++a) {
            switch (axes[a].param) {
                case SweepParam::alpha1: cfg.dissipation.alpha1 = vals[a]; break;
                case SweepParam::nu: cfg.dissipation.nu = vals[a]; break;
                case SweepParam::beta: cfg.dissipation.beta = vals[a]; break;
                case SweepParam::alpha0: cfg.dissipation.alpha0 = vals[a]; break;
                case SweepParam::N: cfg.lattice.N = static_cast<int>(std::llround(vals[a])); break;
            }
        }
    }
};

// Grid document: {"alpha1": {"start": 0, "stop": 6, "count": 61}, "nu": [0.1, 0.6]}
// Axes iterate in document order, first axis outermost.
inline SweepGrid parse_grid(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("grid parse error: ") + e.what());
    }
    if (!doc.is_object() || doc.empty()) {
        throw ConfigError("grid must be a nonempty JSON object of axes");
    }
    SweepGrid grid;
    std::vector<std::string> violations;
    for (const auto& item : doc.items()) {
        SweepParam param;
        if (item.key() == "alpha1") param = SweepParam::alpha1;
        else if (item.key() == "nu") param = SweepParam::nu;
        else if (item.key() == "beta") param = SweepParam::beta;
        else if (item.key() == "N") param = SweepParam::N;
        else if (item.key() == "alpha0") param = SweepParam::alpha0;
        else {
            violations.push_back("unknown grid axis '" + item.key() + "'");
            continue;
        }
        std::vector<double> values;
        const json& ax = item.value();
        if (ax.is_array()) {
            for (const auto& v : ax) {
                if (!v.is_number()) {
                    violations.push_back("axis '" + item.key() + "' contains a non-number");
                    break;
                }
                values.push_back(v.get<double>());
            }
        } else if (ax.is_object()) {
            cfgdetail::unknown_key_check(ax, item.key() + ".", {"start", "stop", "count"},
                                         violations);
            double start = 0.0, stop = 0.0;
            int count = 0;
            const bool ok = cfgdetail::fetch_double(ax, "start", item.key() + ".", start, violations) &&
                            cfgdetail::fetch_double(ax, "stop", item.key() + ".", stop, violations) &&
                            cfgdetail::fetch_int(ax, "count", item.key() + ".", count, violations);
            if (ok) {
                if (count < 1) {
                    violations.push_back("axis '" + item.key() + "': count must be >= 1");
                } else if (count == 1) {
                    values.push_back(start);
                } else {
                    for (int i = 0; i < count; ++i) {
                        values.push_back(start + (stop - start) * i / (count - 1));
                    }
                }
            }
        } else {
            violations.push_back("axis '" + item.key() +
                                 "' must be a list or {start, stop, count}");
        }
        if (values.empty() && violations.empty()) {
            violations.push_back("axis '" + item.key() + "' is empty");
        }
        if (param == SweepParam::N) {
            for (double v : values) {
                if (v != std::floor(v) || v < 2) {
                    violations.push_back("axis 'N' values must be integers >= 2");
                    break;
                }
            }
        }
        grid.axes.push_back({param, std::move(values)});
    }
    if (!violations.empty()) {
        std::string msg = "grid validation failed:";
        for (const auto& v : violations) msg += "\n  - " + v;
        throw ConfigError(msg);
    }
    return grid;
}

// -------------------------------- ResultRecord --------------------------------

struct ResultRecord {
    long point{0};
    int N{0};
    double t{1.0};
    Boundary lattice_boundary{Boundary::periodic};
    double gamma{1.0};
    double alpha0{0.0};
    double alpha1{0.0};
    double beta{0.0};
    double nu{0.0};
    Boundary dissipation_boundary{Boundary::open};
    int index_origin{0};
    SteadyStateMethod method{SteadyStateMethod::nullspace};
    Gauge gauge{Gauge::momentum};
    LogBase log_base{LogBase::e};
    long seed{0};
    std::string status{"ok"};
    double residual{std::numeric_limits<double>::quiet_NaN()};
    long steps{0};
    double c_re{std::numeric_limits<double>::quiet_NaN()};
    double purity{std::numeric_limits<double>::quiet_NaN()};
    double pr{std::numeric_limits<double>::quiet_NaN()};
    double min_eig_rho{std::numeric_limits<double>::quiet_NaN()};
    double wall_time{0.0};

    bool ok() const { return status == "ok"; }
};

// ----------------------------------- I/O --------------------------------------

namespace iodetail {

inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

inline std::string sanitize_status(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
    }
    return s;
}

} // namespace iodetail

inline const char* records_csv_header() {
    return "point,N,t,lattice_boundary,gamma,alpha0,alpha1,beta,nu,dissipation_boundary,"
           "index_origin,method,gauge,log_base,seed,status,residual,steps,c_re,purity,pr,"
           "min_eig_rho,wall_time";
}

inline std::string record_to_csv_row(const ResultRecord& r) {
    using iodetail::fmt17;
    std::string row;
    row += std::to_string(r.point);
    row += ',';
    row += std::to_string(r.N);
    row += ',';
    row += fmt17(r.t);
    row += ',';
    row += to_string(r.lattice_boundary);
    row += ',';
    row += fmt17(r.gamma);
    row += ',';
    row += fmt17(r.alpha0);
    row += ',';
    row += fmt17(r.alpha1);
    row += ',';
    row += fmt17(r.beta);
    row += ',';
    row += fmt17(r.nu);
    row += ',';
    row += to_string(r.dissipation_boundary);
    row += ',';
    row += std::to_string(r.index_origin);
    row += ',';
    row += to_string(r.method);
    row += ',';
    row += to_string(r.gauge);
    row += ',';
    row += to_string(r.log_base);
    row += ',';
    row += std::to_string(r.seed);
    row += ',';
    row += iodetail::sanitize_status(r.status);
    row += ',';
    row += fmt17(r.residual);
    row += ',';
    row += std::to_string(r.steps);
    row += ',';
    row += fmt17(r.c_re);
    row += ',';
    row += fmt17(r.purity);
    row += ',';
    row += fmt17(r.pr);
    row += ',';
    row += fmt17(r.min_eig_rho);
    row += ',';
    row += fmt17(r.wall_time);
    return row;
}

inline void write_records_csv(const std::vector<ResultRecord>& records, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_records_csv: cannot open '" + path + "'");
    out << records_csv_header() << '\n';
    for (const auto& r : records) out << record_to_csv_row(r) << '\n';
    if (!out) throw IoError("write_records_csv: write failed for '" + path + "'");
}

// Matrix dump: "N <n> <basis-tag>" then N^2 lines "row col real imag",
// row-major, 1-based indices, 17 significant digits.
inline void write_matrix_dump(const Eigen::MatrixXcd& m, const std::string& path,
                              const std::string& basis_tag) {
    if (m.rows() != m.cols()) throw StructuralError("write_matrix_dump: matrix must be square");
    std::ofstream out(path);
    if (!out) throw IoError("write_matrix_dump: cannot open '" + path + "'");
    const auto N = m.rows();
    out << "N " << N << ' ' << basis_tag << '\n';
    for (Eigen::Index r = 0; r < N; ++r) {
        for (Eigen::Index c = 0; c < N; ++c) {
            out << (r + 1) << ' ' << (c + 1) << ' ' << iodetail::fmt17(m(r, c).real()) << ' '
                << iodetail::fmt17(m(r, c).imag()) << '\n';
        }
    }
    if (!out) throw IoError("write_matrix_dump: write failed for '" + path + "'");
}

inline Eigen::MatrixXcd read_matrix_dump(const std::string& path, std::string* basis_tag = nullptr) {
    std::ifstream in(path);
    if (!in) throw IoError("read_matrix_dump: cannot open '" + path + "'");
    std::string lead;
    Eigen::Index N = 0;
    std::string tag;
    in >> lead >> N >> tag;
    if (lead != "N" || N < 1) throw IoError("read_matrix_dump: malformed header in '" + path + "'");
    if (basis_tag) *basis_tag = tag;
    Eigen::MatrixXcd m(N, N);
    for (Eigen::Index i = 0; i < N * N; ++i) {
        Eigen::Index r = 0, c = 0;
        double re = 0.0, im = 0.0;
        if (!(in >> r >> c >> re >> im) || r < 1 || r > N || c < 1 || c > N) {
            throw IoError("read_matrix_dump: malformed entry in '" + path + "'");
        }
        m(r - 1, c - 1) = complexd(re, im);
    }
    return m;
}

inline void write_population_profile(const Eigen::VectorXd& pops, const std::string& path,
                                     const char* index_name, const char* value_name,
                                     const Eigen::VectorXd* energies = nullptr) {
    std::ofstream out(path);
    if (!out) throw IoError("write_population_profile: cannot open '" + path + "'");
    out << index_name;
    if (energies) out << ",energy";
    out << ',' << value_name << '\n';
    for (Eigen::Index i = 0; i < pops.size(); ++i) {
        out << (i + 1);
        if (energies) out << ',' << iodetail::fmt17((*energies)(i));
        out << ',' << iodetail::fmt17(pops(i)) << '\n';
    }
    if (!out) throw IoError("write_population_profile: write failed for '" + path + "'");
}

// --------------------------------- run_point ----------------------------------

// Execute one configuration: build model -> generator -> steady state ->
// observables -> record (+ optional dumps). Solver failures land in the status
// field; I/O failures propagate.
inline ResultRecord run_point(const RunConfig& cfg, long point_index = 0,
                              const std::string& dump_prefix = "point_00000") {
    ResultRecord rec;
    rec.point = point_index;
    rec.N = cfg.lattice.N;
    rec.t = cfg.lattice.t;
    rec.lattice_boundary = cfg.lattice.boundary;
    rec.gamma = cfg.dissipation.gamma;
    rec.alpha0 = cfg.dissipation.alpha0;
    rec.alpha1 = cfg.dissipation.alpha1;
    rec.beta = cfg.dissipation.beta;
    rec.nu = cfg.dissipation.nu;
    rec.dissipation_boundary = cfg.dissipation.boundary;
    rec.index_origin = cfg.dissipation.index_origin;
    rec.method = cfg.method;
    rec.gauge = cfg.gauge;
    rec.log_base = cfg.log_base;
    rec.seed = cfg.seed;

    SteadyStateResult result;
    try {
        result = solve_steady_state(LindbladGenerator(cfg.lattice, cfg.dissipation), cfg.method,
                                    cfg.evolution);
    } catch (const SlowGapError& e) {
        rec.status = std::string("slow-gap: ") + e.what();
        return rec;
    } catch (const DegeneracyError& e) {
        rec.status = std::string("degenerate: ") + e.what();
        return rec;
    } catch (const EigensolverError& e) {
        rec.status = std::string("eigensolver: ") + e.what();
        return rec;
    } catch (const InvalidStateError& e) {
        rec.status = std::string("invalid-state: ") + e.what();
        return rec;
    }

    rec.residual = result.residual;
    rec.steps = result.steps;
    rec.min_eig_rho = result.min_eigenvalue_of_rho;
    rec.wall_time = result.wall_time;

    const EigenBasis basis = eigenbasis(cfg.lattice, cfg.gauge);
    const bool keep_pq = cfg.emit_rho_pq;
    const ObservableSet obs =
        compute_observables(result.rho_ss.rho, basis, cfg.log_base, keep_pq);
    rec.c_re = obs.c_re;
    rec.purity = obs.purity;
    rec.pr = obs.pr;

    if (cfg.emit_rho_nn || cfg.emit_rho_pq) {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(cfg.output_dir, ec);
        if (ec) throw IoError("run_point: cannot create output dir '" + cfg.output_dir + "'");
        const std::string base = cfg.output_dir + "/" + dump_prefix;
        if (cfg.emit_rho_nn) {
            write_population_profile(obs.rho_nn, base + "_rho_nn.csv", "n", "rho_nn");
            Eigen::VectorXd energies = basis.energies;
            write_population_profile(obs.rho_pp, base + "_rho_pp.csv", "p", "rho_pp", &energies);
        }
        if (cfg.emit_rho_pq) {
            write_matrix_dump(obs.rho_pq, base + "_rho_pq.txt",
                              std::string("eigen-") + to_string(cfg.gauge));
        }
    }
    return rec;
}

// --------------------------------- run_sweep ----------------------------------

inline int default_worker_count() {
    if (const char* env = std::getenv("LINDSTEADY_WORKERS")) {
        const int w = std::atoi(env);
        if (w >= 1) return std::min(w, 256);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

// Executes every grid point; points run concurrently, output order is the
// deterministic grid order regardless of completion order. Per-point solver
// failures are recorded; infrastructure failures abort the sweep.
inline std::vector<ResultRecord> run_sweep(const RunConfig& base, const SweepGrid& grid,
                                           int workers = 0) {
    const size_t total = grid.total_points();
    if (total == 0) throw ConfigError("run_sweep: grid has no points");
    if (workers <= 0) workers = default_worker_count();
    workers = static_cast<int>(std::min<size_t>(static_cast<size_t>(workers), total));

    std::vector<ResultRecord> records(total);
    std::atomic<size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (true) {
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (first_error) return;
            }
            const size_t i = next.fetch_add(1);
            if (i >= total) return;
            RunConfig cfg = base;
            grid.apply(cfg, grid.point(i));
            char prefix[32];
            std::snprintf(prefix, sizeof(prefix), "point_%05zu", i);
            try {
                records[i] = run_point(cfg, static_cast<long>(i), prefix);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return records;
}

// ----------------------------------- Presets ----------------------------------

struct Preset {
    std::string name;
    RunConfig config;
    std::optional<SweepGrid> grid;
    std::string notes;
};

inline Preset preset(const std::string& name) {
    const double inv_golden = inverse_golden_ratio();
    const std::vector<double> size_scan = {89, 100, 120, 144, 160, 180, 200};
    const std::vector<double> nu_scan = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    std::vector<double> alpha1_scan;
    for (int i = 0; i < 61; ++i) alpha1_scan.push_back(6.0 * i / 60.0);

    Preset p;
    p.name = name;
    RunConfig& cfg = p.config;
    cfg.dissipation.beta = inv_golden;
    cfg.dissipation.nu = 0.1;

    if (name == "fig1") {
        cfg.lattice.N = 144;
        cfg.dissipation.alpha0 = 0.0;
        cfg.dissipation.alpha1 = 0.0;
        cfg.emit_rho_nn = true;
        p.notes = "Uniform dissipation reference: pure plane-wave steady state; emits "
                  "site and eigenbasis population profiles.";
    } else if (name == "fig2" || name == "fig5") {
        cfg.lattice.N = name == "fig2" ? 144 : 150;
        if (name == "fig5") cfg.dissipation.beta = 0.5;
        cfg.emit_rho_nn = true;
        p.grid = SweepGrid{{{SweepParam::nu, {0.1, 0.6}}, {SweepParam::alpha1, alpha1_scan}}};
        p.notes = "Site-population heatmap data: alpha1 axis sampled at 61 points over [0, 6] "
                  "(resolution choice of this artifact; affects plot smoothness only).";
    } else if (name == "fig3" || name == "fig6") {
        cfg.lattice.N = name == "fig3" ? 144 : 150;
        if (name == "fig6") cfg.dissipation.beta = 0.5;
        cfg.dissipation.alpha1 = 4.0;
        cfg.emit_rho_pq = true;
        p.grid = SweepGrid{{{SweepParam::nu, {0.1, 0.6}}}};
        p.notes = "Eigenbasis density-matrix heatmaps at alpha1 = 4 for slow and fast "
                  "modulation.";
    } else if (name == "fig4" || name == "fig7") {
        cfg.lattice.N = name == "fig4" ? 144 : 150;
        if (name == "fig7") cfg.dissipation.beta = 0.5;
        cfg.dissipation.alpha1 = 4.0;
        std::vector<double> sizes = size_scan;
        if (name == "fig7") sizes.insert(sizes.begin() + 4, 150);
        p.grid = SweepGrid{{{SweepParam::nu, nu_scan}, {SweepParam::N, sizes}}};
        p.notes = "Observable scans: nu axis at fixed alpha1 = 4 plus system-size axis; the "
                  "nu = 0.1 column gives the size-dependence panels, the N = " +
                  std::to_string(cfg.lattice.N) + " row gives the nu panels.";
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return p;
}

// Metadata document accompanying preset outputs; records the exact parameter
// choices, including those the underlying figures leave unstated.
inline std::string preset_metadata(const Preset& p) {
    json meta;
    meta["preset"] = p.name;
    meta["notes"] = p.notes;
    meta["dissipation_channels"] =
        p.config.dissipation.boundary == Boundary::periodic
            ? "N channels; channel N couples sites (N, 1) with phase evaluated at n = N"
            : "N-1 channels";
    meta["config"] = json::parse(serialize_config(p.config));
    if (p.grid) {
        json axes = json::object();
        for (const auto& ax : p.grid->axes) axes[to_string(ax.param)] = ax.values;
        meta["grid"] = axes;
        meta["grid_order"] = "axes nest in listed order, first axis outermost";
    }
    return meta.dump(2);
}

// ------------------------------- Self-check suite ------------------------------

struct CheckResult {
    std::string name;
    bool pass{false};
    std::string detail;
};

namespace iodetail {
inline std::string fmt_sci(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3e", x);
    return buf;
}
} // namespace iodetail

// Deterministic random Hermitian unit-trace state for cross-checks
inline Eigen::MatrixXcd random_density_matrix(std::mt19937& rng, int N) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::MatrixXcd A(N, N);
    for (int j = 0; j < N; ++j) {
        for (int i = 0; i < N; ++i) A(i, j) = complexd(dist(rng), dist(rng));
    }
    Eigen::MatrixXcd rho = A * A.adjoint();
    rho /= rho.trace().real();
    return rho;
}

inline Eigen::MatrixXcd random_hermitian(std::mt19937& rng, int N) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Eigen::MatrixXcd A(N, N);
    for (int j = 0; j < N; ++j) {
        for (int i = 0; i < N; ++i) A(i, j) = complexd(dist(rng), dist(rng));
    }
    return 0.5 * (A + A.adjoint());
}

// Fast oracle suite behind `lindsteady check`: structural identities that do
// not depend on any reported figure value.
inline std::vector<CheckResult> run_self_checks(long seed = 12345) {
    std::vector<CheckResult> results;
    std::mt19937 rng(static_cast<unsigned>(seed));
    const auto add = [&](const std::string& name, bool pass, const std::string& detail) {
        results.push_back({name, pass, detail});
    };

    // Global dark state annihilation for quantized uniform phases
    {
        double worst = 0.0;
        for (int N : {8, 12}) {
            for (int m : {0, 1, 3}) {
                DissipationSpec d;
                d.alpha0 = 2.0 * M_PI * m / N;
                d.alpha1 = 0.0;
                d.boundary = Boundary::periodic;
                const auto profile = build_phase_profile(d, N);
                const auto jumps = build_jump_operators(profile, N, Boundary::periodic);
                Eigen::VectorXcd psi(N);
                for (int n = 0; n < N; ++n) psi(n) = std::polar(1.0 / std::sqrt(N), d.alpha0 * (n + 1));
                for (const auto& j : jumps) {
                    worst = std::max(worst, (jump_matrix(j, N) * psi).norm());
                }
            }
        }
        add("dark-state annihilation (uniform alpha0 = 2 pi m / N)", worst <= 1e-12,
            "max |M psi| = " + iodetail::fmt_sci(worst));
    }

    // Trace and Hermiticity preservation of the generator
    {
        double worst_tr = 0.0, worst_herm = 0.0;
        for (int N = 2; N <= 10; ++N) {
            LatticeSpec lat;
            lat.N = N;
            DissipationSpec dis;
            dis.alpha1 = 2.0;
            dis.nu = 0.3;
            const LindbladGenerator gen(lat, dis);
            for (int trial = 0; trial < 10; ++trial) {
                const Eigen::MatrixXcd rho = random_density_matrix(rng, N);
                const Eigen::MatrixXcd L = gen.apply(rho);
                worst_tr = std::max(worst_tr, std::abs(L.trace()));
                worst_herm = std::max(worst_herm, (L - L.adjoint()).norm());
            }
        }
        add("trace preservation |Tr L[rho]|", worst_tr <= 1e-12,
            "max = " + iodetail::fmt_sci(worst_tr));
        add("Hermiticity preservation ||L[rho] - L[rho]†||", worst_herm <= 1e-11,
            "max = " + iodetail::fmt_sci(worst_herm));
    }

    // Structure-exploiting generator vs explicit superoperator
    {
        double worst = 0.0;
        for (double beta : {0.5, inverse_golden_ratio()}) {
            for (double nu : {0.1, 0.6}) {
                LatticeSpec lat;
                lat.N = 6;
                DissipationSpec dis;
                dis.alpha1 = 3.0;
                dis.beta = beta;
                dis.nu = nu;
                const LindbladGenerator gen(lat, dis);
                const auto superop = assemble_superoperator(gen);
                for (int trial = 0; trial < 12; ++trial) {
                    const Eigen::MatrixXcd rho = random_hermitian(rng, 6);
                    const double diff =
                        (vectorize(gen.apply(rho)) - superop.L * vectorize(rho)).norm();
                    worst = std::max(worst, diff);
                }
            }
        }
        add("generator vs superoperator action", worst <= 1e-11,
            "max diff = " + iodetail::fmt_sci(worst));
    }

    // Cross-solver steady-state agreement
    {
        LatticeSpec lat;
        lat.N = 8;
        DissipationSpec dis;
        dis.alpha1 = 4.0;
        dis.nu = 0.3;
        const LindbladGenerator gen(lat, dis);
        const auto null_result = steady_state_by_nullspace(gen);
        EvolutionConfig ecfg;
        ecfg.residual_tol = 1e-10;
        const auto evo_result = steady_state_by_evolution(gen, ecfg);
        const double diff = (null_result.rho_ss.rho - evo_result.rho_ss.rho).norm();
        add("cross-solver agreement (N = 8)", diff <= 1e-8,
            "Frobenius diff = " + iodetail::fmt_sci(diff));
    }

    // Observable identities
    {
        const int N = 10;
        LatticeSpec lat;
        lat.N = N;
        const EigenBasis basis = eigenbasis(lat, Gauge::momentum);
        const Eigen::MatrixXcd mixed = DensityMatrix::maximally_mixed(N).rho;
        const double p_mixed = purity(mixed);
        const double s_mixed = von_neumann_entropy(mixed);
        const double pr_site = participation_ratio(DensityMatrix::site_localized(N, 3).rho);
        const Eigen::MatrixXcd rnd = random_density_matrix(rng, N);
        const double c = relative_entropy_coherence(rnd, basis);
        const bool pass = std::abs(p_mixed - 1.0 / N) <= 1e-10 &&
                          std::abs(s_mixed - std::log(static_cast<double>(N))) <= 1e-10 &&
                          std::abs(pr_site - 1.0) <= 1e-10 && c >= -1e-10 &&
                          participation_ratio(mixed) <= N + 1e-9;
        add("observable identities (purity, entropy, PR, C_re >= 0)", pass, "");
    }

    return results;
}

} // namespace lindsteady
