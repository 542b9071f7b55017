#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lindsteady/harness.hpp"

using namespace lindsteady;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("lindsteady_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// strip the trailing wall_time column from every CSV line
std::string strip_wall_time(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) {
        const auto pos = line.rfind(',');
        out += line.substr(0, pos);
        out += '\n';
    }
    return out;
}

RunConfig random_config(std::mt19937& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::uniform_int_distribution<int> n_dist(2, 200);
    RunConfig cfg;
    cfg.lattice.N = n_dist(rng);
    cfg.lattice.t = 0.25 + uni(rng);
    cfg.lattice.boundary = uni(rng) < 0.7 ? Boundary::periodic : Boundary::open;
    cfg.dissipation.gamma = uni(rng) * 3.0;
    cfg.dissipation.alpha0 = (uni(rng) - 0.5) * 6.0;
    cfg.dissipation.alpha1 = uni(rng) * 6.0;
    cfg.dissipation.beta = uni(rng);
    cfg.dissipation.nu = uni(rng);
    cfg.dissipation.boundary = uni(rng) < 0.5 ? Boundary::open : Boundary::periodic;
    cfg.dissipation.index_origin = uni(rng) < 0.5 ? 0 : 1;
    cfg.method = uni(rng) < 0.5 ? SteadyStateMethod::nullspace : SteadyStateMethod::evolution;
    if (uni(rng) < 0.3) {
        cfg.evolution.initial_state = InitialState::site_localized;
        cfg.evolution.localized_site = std::uniform_int_distribution<int>(0, cfg.lattice.N - 1)(rng);
    }
    cfg.evolution.rel_tol = std::pow(10.0, -6.0 - 4.0 * uni(rng));
    cfg.evolution.abs_tol = std::pow(10.0, -9.0 - 4.0 * uni(rng));
    cfg.evolution.residual_tol = std::pow(10.0, -7.0 - 4.0 * uni(rng));
    cfg.evolution.max_integration_time = std::pow(10.0, 3.0 + 4.0 * uni(rng));
    cfg.evolution.resymmetrize_every = std::uniform_int_distribution<int>(1, 500)(rng);
    cfg.emit_rho_pq = uni(rng) < 0.5;
    cfg.emit_rho_nn = uni(rng) < 0.5;
    cfg.log_base = uni(rng) < 0.5 ? LogBase::e : LogBase::two;
    cfg.gauge = cfg.lattice.boundary == Boundary::periodic && uni(rng) < 0.7
                    ? Gauge::momentum
                    : Gauge::real_symmetric;
    cfg.output_dir = uni(rng) < 0.5 ? "." : "out/dir";
    cfg.seed = std::uniform_int_distribution<long>(0, 1 << 20)(rng);
    return cfg;
}

} // namespace

TEST_CASE("parse_config") {
    SECTION("minimal document takes the documented defaults") {
        const RunConfig cfg = parse_config(R"({"N": 144, "alpha1": 4.0})");
        CHECK(cfg.lattice.N == 144);
        CHECK(cfg.lattice.t == 1.0);
        CHECK(cfg.lattice.boundary == Boundary::periodic);
        CHECK(cfg.dissipation.gamma == 1.0);
        CHECK(cfg.dissipation.alpha0 == 0.0);
        CHECK(cfg.dissipation.alpha1 == 4.0);
        CHECK(cfg.dissipation.beta == inverse_golden_ratio());
        CHECK(cfg.dissipation.nu == 0.1);
        CHECK(cfg.dissipation.boundary == Boundary::open);
        CHECK(cfg.dissipation.index_origin == 0);
        CHECK(cfg.method == SteadyStateMethod::nullspace);
        CHECK(cfg.log_base == LogBase::e);
        CHECK(cfg.gauge == Gauge::momentum);
        CHECK(cfg.output_dir == ".");
        CHECK(cfg.seed == 0);
    }

    SECTION("unknown key is a hard error naming the key") {
        try {
            parse_config(R"({"N": 10, "alpha_one": 2.0})");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("alpha_one") != std::string::npos);
        }
    }

    SECTION("every violation is reported at once") {
        try {
            parse_config(R"({"N": 1, "gamma": -2.0, "bogus": 1})");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            const std::string msg = e.what();
            CHECK(msg.find("bogus") != std::string::npos);
            CHECK(msg.find("N must be >= 2") != std::string::npos);
            CHECK(msg.find("gamma") != std::string::npos);
        }
    }

    SECTION("nested groups and scalar shorthands agree") {
        const RunConfig a = parse_config(R"({"lattice": {"N": 20}, "dissipation": {"alpha1": 2.0}})");
        const RunConfig b = parse_config(R"({"N": 20, "alpha1": 2.0})");
        CHECK(a == b);
    }

    SECTION("missing N is rejected") {
        CHECK_THROWS_AS(parse_config(R"({"alpha1": 1.0})"), ConfigError);
    }

    SECTION("type errors are diagnosed") {
        CHECK_THROWS_AS(parse_config(R"({"N": "many"})"), ConfigError);
        CHECK_THROWS_AS(parse_config(R"({"N": 10, "solver": {"rel_tol": "tight"}})"), ConfigError);
        CHECK_THROWS_AS(parse_config(R"([1,2,3])"), ConfigError);
        CHECK_THROWS_AS(parse_config("{not json"), ConfigError);
    }

    SECTION("initial state forms") {
        const RunConfig a =
            parse_config(R"({"N": 8, "solver": {"initial_state": "maximally_mixed"}})");
        CHECK(a.evolution.initial_state == InitialState::maximally_mixed);
        const RunConfig b =
            parse_config(R"({"N": 8, "solver": {"initial_state": {"site_localized": 3}}})");
        CHECK(b.evolution.initial_state == InitialState::site_localized);
        CHECK(b.evolution.localized_site == 3);
        CHECK_THROWS_AS(parse_config(R"({"N": 8, "solver": {"initial_state": "vacuum"}})"),
                        ConfigError);
    }

    SECTION("open boundary defaults the gauge to real_symmetric") {
        const RunConfig cfg = parse_config(R"({"N": 12, "boundary": "open"})");
        CHECK(cfg.gauge == Gauge::real_symmetric);
        CHECK(cfg.dissipation.boundary == Boundary::open);
        CHECK_THROWS_AS(
            parse_config(R"({"N": 12, "boundary": "open", "observables": {"gauge": "momentum"}})"),
            ConfigError);
    }

    SECTION("round trip over randomized configs") {
        std::mt19937 rng(99u);
        for (int trial = 0; trial < 100; ++trial) {
            const RunConfig cfg = random_config(rng);
            const RunConfig back = parse_config(serialize_config(cfg));
            CHECK(back == cfg);
        }
    }
}

TEST_CASE("parse_grid") {
    SECTION("lists and linear ranges") {
        const SweepGrid grid = parse_grid(
            R"({"alpha1": {"start": 0.0, "stop": 6.0, "count": 61}, "nu": [0.1, 0.6]})");
        REQUIRE(grid.axes.size() == 2);
        CHECK(grid.axes[0].param == SweepParam::alpha1);
        REQUIRE(grid.axes[0].values.size() == 61);
        CHECK(grid.axes[0].values.front() == 0.0);
        CHECK(grid.axes[0].values.back() == 6.0);
        CHECK(grid.axes[1].values == std::vector<double>{0.1, 0.6});
        CHECK(grid.total_points() == 122);
    }

    SECTION("count = 1 collapses to the start value") {
        const SweepGrid grid = parse_grid(R"({"nu": {"start": 0.3, "stop": 0.9, "count": 1}})");
        REQUIRE(grid.axes[0].values.size() == 1);
        CHECK(grid.axes[0].values[0] == 0.3);
    }

    SECTION("deterministic odometer order, last axis fastest") {
        const SweepGrid grid = parse_grid(R"({"nu": [0.1, 0.6], "alpha1": [1.0, 2.0, 3.0]})");
        REQUIRE(grid.total_points() == 6);
        const std::vector<std::pair<double, double>> expect = {
            {0.1, 1.0}, {0.1, 2.0}, {0.1, 3.0}, {0.6, 1.0}, {0.6, 2.0}, {0.6, 3.0}};
        for (size_t i = 0; i < expect.size(); ++i) {
            const auto vals = grid.point(i);
            CHECK(vals[0] == expect[i].first);
            CHECK(vals[1] == expect[i].second);
        }
    }

    SECTION("axis application overrides config fields") {
        const SweepGrid grid = parse_grid(R"({"N": [89, 144], "alpha0": [0.5]})");
        RunConfig cfg = parse_config(R"({"N": 10})");
        grid.apply(cfg, grid.point(1));
        CHECK(cfg.lattice.N == 144);
        CHECK(cfg.dissipation.alpha0 == 0.5);
    }

    SECTION("errors") {
        CHECK_THROWS_AS(parse_grid(R"({"tunneling": [1.0]})"), ConfigError);
        CHECK_THROWS_AS(parse_grid(R"({"N": [1.5]})"), ConfigError);
        CHECK_THROWS_AS(parse_grid(R"({"nu": []})"), ConfigError);
        CHECK_THROWS_AS(parse_grid(R"({})"), ConfigError);
        CHECK_THROWS_AS(parse_grid(R"({"nu": {"start": 0, "stop": 1, "count": 0}})"), ConfigError);
        CHECK_THROWS_AS(parse_grid(R"({"nu": {"start": 0, "end": 1, "count": 3}})"), ConfigError);
    }
}

TEST_CASE("records CSV") {
    const fs::path dir = temp_dir("csv");

    SECTION("empty record list gives a header-only file") {
        const std::string path = (dir / "empty.csv").string();
        write_records_csv({}, path);
        CHECK(slurp(path) == std::string(records_csv_header()) + "\n");
    }

    SECTION("status text is sanitized for CSV") {
        ResultRecord rec;
        rec.status = "bad, very\nbad";
        const std::string row = record_to_csv_row(rec);
        CHECK(row.find("bad; very;bad") != std::string::npos);
    }

    SECTION("rows carry full precision") {
        ResultRecord rec;
        rec.beta = inverse_golden_ratio();
        rec.pr = 6.506512345678901;
        const std::string path = (dir / "one.csv").string();
        write_records_csv({rec}, path);
        const std::string body = slurp(path);
        CHECK(body.find("0.6180339887498949") != std::string::npos);
        CHECK(body.find("6.5065123456789") != std::string::npos);
    }
}

TEST_CASE("matrix dumps") {
    const fs::path dir = temp_dir("dumps");

    SECTION("identity dump format") {
        const std::string path = (dir / "eye.txt").string();
        write_matrix_dump(Eigen::MatrixXcd::Identity(3, 3), path, "site");
        const std::string body = slurp(path);
        std::istringstream in(body);
        std::string line;
        std::getline(in, line);
        CHECK(line == "N 3 site");
        int lines = 0;
        int diag_ok = 0;
        while (std::getline(in, line)) {
            ++lines;
            std::istringstream ls(line);
            int r, c;
            double re, im;
            ls >> r >> c >> re >> im;
            if (r == c) diag_ok += (re == 1.0 && im == 0.0);
        }
        CHECK(lines == 9);
        CHECK(diag_ok == 3);
    }

    SECTION("round trip is exact at 17 significant digits") {
        std::mt19937 rng(5u);
        const Eigen::MatrixXcd m = random_density_matrix(rng, 7);
        const std::string path = (dir / "rho.txt").string();
        write_matrix_dump(m, path, "eigen-momentum");
        std::string tag;
        const Eigen::MatrixXcd back = read_matrix_dump(path, &tag);
        CHECK(tag == "eigen-momentum");
        CHECK((m - back).norm() == 0.0);
    }

    SECTION("I/O errors carry the path") {
        CHECK_THROWS_AS(write_matrix_dump(Eigen::MatrixXcd::Identity(2, 2),
                                          "/nonexistent_dir_xyz/m.txt", "site"),
                        IoError);
        CHECK_THROWS_AS(read_matrix_dump((dir / "missing.txt").string()), IoError);
    }
}

TEST_CASE("run_point") {
    SECTION("uniform reference point: pure extended steady state") {
        RunConfig cfg = parse_config(R"({"N": 16, "alpha1": 0.0})");
        const ResultRecord rec = run_point(cfg);
        CHECK(rec.ok());
        CHECK(rec.purity >= 0.999);
        CHECK(rec.pr == Catch::Approx(16.0).margin(0.1));
        CHECK(rec.c_re == Catch::Approx(0.0).margin(1e-8));
        CHECK(rec.residual < 1e-9);
    }

    SECTION("determinism: identical rows modulo wall_time") {
        RunConfig cfg = parse_config(R"({"N": 12, "alpha1": 3.0})");
        const std::string a = record_to_csv_row(run_point(cfg));
        const std::string b = record_to_csv_row(run_point(cfg));
        CHECK(a.substr(0, a.rfind(',')) == b.substr(0, b.rfind(',')));
    }

    SECTION("dumps are emitted when requested") {
        const fs::path dir = temp_dir("pointdumps");
        RunConfig cfg = parse_config(R"({"N": 10, "alpha1": 2.0})");
        cfg.emit_rho_nn = true;
        cfg.emit_rho_pq = true;
        cfg.output_dir = dir.string();
        run_point(cfg, 0, "point_00000");
        CHECK(fs::exists(dir / "point_00000_rho_nn.csv"));
        CHECK(fs::exists(dir / "point_00000_rho_pp.csv"));
        CHECK(fs::exists(dir / "point_00000_rho_pq.txt"));
        std::string tag;
        const Eigen::MatrixXcd rho_pq = read_matrix_dump((dir / "point_00000_rho_pq.txt").string(), &tag);
        CHECK(tag == "eigen-momentum");
        CHECK(std::abs(rho_pq.trace() - complexd(1.0, 0.0)) < 1e-10);
    }

    SECTION("solver failure lands in the status field") {
        RunConfig cfg = parse_config(
            R"({"N": 8, "alpha1": 4.0, "method": "evolution",
                "solver": {"max_integration_time": 0.25}})");
        const ResultRecord rec = run_point(cfg);
        CHECK_FALSE(rec.ok());
        CHECK(rec.status.find("slow-gap") != std::string::npos);
        CHECK(std::isnan(rec.pr));
    }
}

TEST_CASE("run_sweep") {
    RunConfig base = parse_config(R"({"N": 8, "alpha1": 4.0})");
    const SweepGrid grid = parse_grid(R"({"nu": [0.1, 0.6], "alpha1": [0.0, 2.0, 4.0]})");

    SECTION("produces one row per point in grid order") {
        const auto records = run_sweep(base, grid, 2);
        REQUIRE(records.size() == 6);
        for (size_t i = 0; i < records.size(); ++i) {
            CHECK(records[i].point == static_cast<long>(i));
            CHECK(records[i].ok());
            const auto vals = grid.point(i);
            CHECK(records[i].nu == vals[0]);
            CHECK(records[i].alpha1 == vals[1]);
        }
    }

    SECTION("rows are byte-identical for 1 and 4 workers, excluding wall_time") {
        const fs::path dir = temp_dir("sweepworkers");
        const auto rec1 = run_sweep(base, grid, 1);
        const auto rec4 = run_sweep(base, grid, 4);
        write_records_csv(rec1, (dir / "w1.csv").string());
        write_records_csv(rec4, (dir / "w4.csv").string());
        CHECK(strip_wall_time(slurp(dir / "w1.csv")) == strip_wall_time(slurp(dir / "w4.csv")));
    }

    SECTION("per-point solver failures do not abort the sweep") {
        RunConfig failing = base;
        failing.method = SteadyStateMethod::evolution;
        failing.evolution.max_integration_time = 0.25;
        const auto records = run_sweep(failing, grid, 2);
        REQUIRE(records.size() == 6);
        for (const auto& r : records) {
            CHECK_FALSE(r.ok());
            CHECK(r.status.find("slow-gap") != std::string::npos);
        }
    }

    SECTION("worker count override via environment") {
        setenv("LINDSTEADY_WORKERS", "3", 1);
        CHECK(default_worker_count() == 3);
        unsetenv("LINDSTEADY_WORKERS");
        CHECK(default_worker_count() >= 1);
    }
}

TEST_CASE("presets") {
    SECTION("fig1 is the uniform reference point") {
        const Preset p = preset("fig1");
        CHECK(p.config.dissipation.alpha1 == 0.0);
        CHECK(p.config.dissipation.alpha0 == 0.0);
        CHECK(p.config.lattice.N == 144);
        CHECK(p.config.emit_rho_nn);
        CHECK_FALSE(p.grid.has_value());
    }

    SECTION("fig2 scans alpha1 over [0, 6] at 61 points") {
        const Preset p = preset("fig2");
        REQUIRE(p.grid.has_value());
        REQUIRE(p.grid->axes.size() == 2);
        CHECK(p.grid->axes[0].param == SweepParam::nu);
        CHECK(p.grid->axes[0].values == std::vector<double>{0.1, 0.6});
        CHECK(p.grid->axes[1].param == SweepParam::alpha1);
        CHECK(p.grid->axes[1].values.size() == 61);
        CHECK(p.grid->axes[1].values.front() == 0.0);
        CHECK(p.grid->axes[1].values.back() == 6.0);
    }

    SECTION("fig3 dumps the eigenbasis density matrix at alpha1 = 4") {
        const Preset p = preset("fig3");
        CHECK(p.config.dissipation.alpha1 == 4.0);
        CHECK(p.config.emit_rho_pq);
    }

    SECTION("fig4 carries the system-size axis") {
        const Preset p = preset("fig4");
        REQUIRE(p.grid.has_value());
        REQUIRE(p.grid->axes.size() == 2);
        CHECK(p.grid->axes[1].param == SweepParam::N);
        CHECK(p.grid->axes[1].values == std::vector<double>{89, 100, 120, 144, 160, 180, 200});
        CHECK(p.grid->axes[0].values == std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
    }

    SECTION("fig5 and fig6 use the commensurate chain at N = 150") {
        const Preset p5 = preset("fig5");
        CHECK(p5.config.lattice.N == 150);
        CHECK(p5.config.dissipation.beta == 0.5);
        const Preset p6 = preset("fig6");
        CHECK(p6.config.lattice.N == 150);
        CHECK(p6.config.dissipation.beta == 0.5);
    }

    SECTION("fig7 adds its own base size to the scan") {
        const Preset p = preset("fig7");
        CHECK(p.config.dissipation.beta == 0.5);
        CHECK(p.grid->axes[1].values ==
              std::vector<double>{89, 100, 120, 144, 150, 160, 180, 200});
    }

    SECTION("unknown preset rejected; metadata parses") {
        CHECK_THROWS_AS(preset("fig9"), ConfigError);
        const std::string meta = preset_metadata(preset("fig2"));
        const auto doc = nlohmann::json::parse(meta);
        CHECK(doc.contains("grid_order"));
        CHECK(doc.at("preset") == "fig2");
    }
}

TEST_CASE("self-check suite passes") {
    const auto results = run_self_checks();
    REQUIRE_FALSE(results.empty());
    for (const auto& r : results) {
        INFO(r.name << " " << r.detail);
        CHECK(r.pass);
    }
}

// Fig. 4(a-c) trend: coherence falls and localization weakens as nu grows.
// One real sweep at the production size keeps the batch path honest.
TEST_CASE("nu scan reproduces the monotone coherence/localization trend", "[heavy]") {
    RunConfig base = parse_config(R"({"N": 144, "alpha1": 4.0})");
    const SweepGrid grid = parse_grid(R"({"nu": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6]})");
    const auto records = run_sweep(base, grid, 0);
    REQUIRE(records.size() == 6);
    for (size_t i = 0; i < records.size(); ++i) {
        REQUIRE(records[i].ok());
        if (i > 0) {
            CHECK(records[i].c_re <= records[i - 1].c_re);
            CHECK(records[i].pr >= records[i - 1].pr);
        }
    }
}
