// lindsteady — steady states of a dissipatively phase-modulated tight-binding
// chain. Subcommands: point, sweep, preset, check.
// Exit codes: 0 success, 1 solver failure, 2 config error, 3 I/O error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "lindsteady/harness.hpp"

namespace {

using namespace lindsteady;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in && !in.eof()) throw IoError("read failed for '" + path + "'");
    return ss.str();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir + "'");
}

int cmd_point(const std::string& config_path, const std::string& out_override) {
    RunConfig cfg = parse_config(read_file(config_path));
    if (!out_override.empty()) cfg.output_dir = out_override;
    const ResultRecord rec = run_point(cfg);
    std::cout << records_csv_header() << '\n' << record_to_csv_row(rec) << '\n';
    ensure_dir(cfg.output_dir);
    write_records_csv({rec}, cfg.output_dir + "/records.csv");
    if (!rec.ok()) {
        std::cerr << "solver failure: " << rec.status << '\n';
        return 1;
    }
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_path,
              const std::string& out_override, int workers) {
    RunConfig cfg = parse_config(read_file(config_path));
    if (!out_override.empty()) cfg.output_dir = out_override;
    const SweepGrid grid = parse_grid(read_file(grid_path));
    std::cout << "sweep: " << grid.total_points() << " points, "
              << (workers > 0 ? workers : default_worker_count()) << " workers\n";
    const auto records = run_sweep(cfg, grid, workers);
    ensure_dir(cfg.output_dir);
    const std::string out_csv = cfg.output_dir + "/records.csv";
    write_records_csv(records, out_csv);
    size_t failures = 0;
    for (const auto& r : records) {
        if (!r.ok()) ++failures;
    }
    std::cout << "wrote " << records.size() << " rows to " << out_csv;
    if (failures > 0) std::cout << " (" << failures << " failed points)";
    std::cout << '\n';
    return failures == 0 ? 0 : 1;
}

int cmd_preset(const std::string& name, const std::string& out_dir, int workers) {
    Preset p = preset(name);
    p.config.output_dir = out_dir.empty() ? "preset_" + name : out_dir;
    ensure_dir(p.config.output_dir);
    {
        std::ofstream meta(p.config.output_dir + "/preset_meta.json");
        if (!meta) throw IoError("cannot write preset metadata");
        meta << preset_metadata(p) << '\n';
    }
    std::vector<ResultRecord> records;
    if (p.grid) {
        std::cout << "preset " << name << ": " << p.grid->total_points() << " points\n";
        records = run_sweep(p.config, *p.grid, workers);
    } else {
        records.push_back(run_point(p.config));
    }
    write_records_csv(records, p.config.output_dir + "/records.csv");
    size_t failures = 0;
    for (const auto& r : records) {
        if (!r.ok()) ++failures;
    }
    std::cout << "wrote " << records.size() << " rows to " << p.config.output_dir
              << "/records.csv";
    if (failures > 0) std::cout << " (" << failures << " failed points)";
    std::cout << '\n';
    return failures == 0 ? 0 : 1;
}

int cmd_check(long seed) {
    const auto results = run_self_checks(seed);
    bool all_pass = true;
    for (const auto& r : results) {
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name;
        if (!r.detail.empty()) std::cout << "  [" << r.detail << "]";
        std::cout << '\n';
        all_pass &= r.pass;
    }
    return all_pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Steady states of a tight-binding chain under phase-modulated dissipation"};
    app.require_subcommand(1);

    std::string config_path, grid_path, out_dir, preset_name;
    int workers = 0;
    long seed = 12345;

    auto* point = app.add_subcommand("point", "solve a single configuration");
    point->add_option("config", config_path, "config file (JSON)")->required();
    point->add_option("--out", out_dir, "output directory override");

    auto* sweep = app.add_subcommand("sweep", "solve every point of a parameter grid");
    sweep->add_option("config", config_path, "config file (JSON)")->required();
    sweep->add_option("--grid", grid_path, "grid file (JSON)")->required();
    sweep->add_option("--out", out_dir, "output directory override");
    sweep->add_option("--workers", workers, "worker threads (default: LINDSTEADY_WORKERS or cores)");

    auto* pre = app.add_subcommand("preset", "run a built-in figure preset");
    pre->add_option("name", preset_name, "fig1 | fig2 | fig3 | fig4 | fig5 | fig6 | fig7")
        ->required();
    pre->add_option("--out", out_dir, "output directory (default: preset_<name>)");
    pre->add_option("--workers", workers, "worker threads");

    auto* check = app.add_subcommand("check", "run the built-in oracle/invariant suite");
    check->add_option("--seed", seed, "RNG seed for randomized cross-checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (point->parsed()) return cmd_point(config_path, out_dir);
        if (sweep->parsed()) return cmd_sweep(config_path, grid_path, out_dir, workers);
        if (pre->parsed()) return cmd_preset(preset_name, out_dir, workers);
        if (check->parsed()) return cmd_check(seed);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const ParameterError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
