// test_io_cli.cpp — CSV/SVG emission, config parsing, command behavior

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "spinbath/cli.hpp"
#include "spinbath/io.hpp"

using namespace spinbath;
using namespace spinbath::experiments;
using namespace spinbath::io;

namespace {

FigureBundle synthetic_bundle(int curves, int points) {
    FigureBundle bundle;
    bundle.id = 0;
    bundle.title = "synthetic";
    bundle.grid = model::TimeGrid{3e-6, points};
    bundle.metadata.emplace_back("command", "test");
    for (int c = 0; c < curves; ++c) {
        TimeSeries s;
        s.grid = bundle.grid;
        s.log_values.emplace();
        for (int k = 0; k <= points; ++k) {
            const double t = bundle.grid.sample(k);
            const double lv = -t / (1e-6 * (c + 1));
            s.values.push_back(std::exp(lv));
            s.log_values->push_back(lv);
        }
        bundle.curves.push_back({"curve" + std::to_string(c), std::move(s)});
    }
    return bundle;
}

std::string temp_path(const char* name) {
    return std::string("/tmp/spinbath_test_") + name;
}

} // namespace

TEST_CASE("csv: schema of a three-curve bundle") {
    auto bundle = synthetic_bundle(3, 200);
    const std::string csv = to_csv(bundle);
    std::stringstream ss(csv);
    std::string line;
    int comments = 0, rows = 0;
    std::string header;
    while (std::getline(ss, line)) {
        if (!line.empty() && line[0] == '#') {
            ++comments;
            continue;
        }
        if (header.empty()) {
            header = line;
            continue;
        }
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 3); // 4 columns
    }
    CHECK(header == "t,curve0,curve1,curve2");
    CHECK(comments == 1);
    CHECK(rows == 201);
    CHECK(csv.find('\r') == std::string::npos);
}

TEST_CASE("csv: empty bundle rejected") {
    FigureBundle empty;
    empty.grid = model::TimeGrid{1.0, 10};
    CHECK_THROWS_AS(to_csv(empty), std::invalid_argument);
}

TEST_CASE("csv: write, read back, and fit identically") {
    auto bundle = synthetic_bundle(2, 150);
    const auto path = temp_path("roundtrip.csv");
    emit_csv(bundle, path);

    const auto table = read_csv(path);
    REQUIRE(table.labels.size() == 2);
    CHECK(table.labels[0] == "curve0");
    CHECK(table.t.size() == 151);
    CHECK(table.metadata.size() == 1);
    CHECK(table.metadata[0].first == "command");

    const auto fit_mem = fit_decoherence_time(bundle.curves[1].series);
    const auto series = column_series(table, std::string("curve1"));
    const auto fit_file = fit_decoherence_time(series);
    CHECK(fit_file.tau == fit_mem.tau); // full-precision decimals round-trip
    CHECK(fit_file.window_count == fit_mem.window_count);
    std::remove(path.c_str());
}

TEST_CASE("csv: malformed input diagnostics carry line numbers") {
    const auto path = temp_path("malformed.csv");
    {
        std::ofstream f(path);
        f << "t,one\n0,1\n1,garbage\n";
    }
    try {
        read_csv(path);
        FAIL("expected parse failure");
    } catch (const std::runtime_error& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_csv("/tmp/definitely_missing_spinbath.csv"), std::runtime_error);
}

TEST_CASE("csv: column selection") {
    auto bundle = synthetic_bundle(2, 20);
    const auto path = temp_path("columns.csv");
    emit_csv(bundle, path);
    const auto table = read_csv(path);
    CHECK_THROWS_AS(column_series(table, std::string("missing")), std::invalid_argument);
    const auto first = column_series(table, std::nullopt);
    CHECK(first.values == bundle.curves[0].series.values);
    std::remove(path.c_str());
}

TEST_CASE("svg: one polyline per curve, labeled axes") {
    auto bundle = synthetic_bundle(3, 40);
    const std::string svg = to_svg(bundle);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("</svg>") != std::string::npos);
    std::size_t polylines = 0, pos = 0;
    while ((pos = svg.find("<polyline", pos)) != std::string::npos) {
        ++polylines;
        ++pos;
    }
    CHECK(polylines == 3);
    CHECK(svg.find("t (s)") != std::string::npos);
    CHECK(svg.find("curve2") != std::string::npos);
    const std::string logged = to_svg(bundle, true);
    CHECK(logged.find("log10 value") != std::string::npos);
}

TEST_CASE("parse_config: direct mapping and defaults") {
    auto cfg = cli::parse_config({"figure", "--id", "2", "--seed", "42"});
    CHECK(cfg.command == cli::Command::Figure);
    CHECK(cfg.figure_id == 2);
    CHECK(cfg.seed == 42);
    CHECK(cfg.points == 200);

    auto sim = cli::parse_config({"simulate", "--n", "100", "--decomposition", "general-d2",
                                  "--g-max", "800", "--log-y"});
    CHECK(sim.command == cli::Command::Simulate);
    CHECK(sim.n == 100);
    CHECK(sim.decomposition == kernels::Decomposition::GeneralD2);
    REQUIRE(sim.g_max.has_value());
    CHECK(*sim.g_max == 800.0);
    CHECK(sim.log_y);
}

TEST_CASE("parse_config: flags override the config file") {
    const auto path = temp_path("config.cfg");
    {
        std::ofstream f(path);
        f << "# comment line\n";
        f << "t0 = 3e-6\n";
        f << "points = 50\n";
        f << "seed = 7\n";
    }
    auto cfg = cli::parse_config({"simulate", "--config", path, "--t0", "1e-6"});
    REQUIRE(cfg.t0.has_value());
    CHECK(*cfg.t0 == 1e-6); // flag wins
    CHECK(cfg.points == 50);
    CHECK(cfg.seed == 7);
    std::remove(path.c_str());
}

TEST_CASE("parse_config: unknown config key reported with its line") {
    const auto path = temp_path("badkey.cfg");
    {
        std::ofstream f(path);
        f << "points = 50\n";
        f << "mystery = 1\n";
    }
    try {
        cli::parse_config({"simulate", "--config", path});
        FAIL("expected usage error");
    } catch (const cli::usage_error& e) {
        const std::string what = e.what();
        CHECK(what.find(":2") != std::string::npos);
        CHECK(what.find("mystery") != std::string::npos);
    }
    std::remove(path.c_str());
}

TEST_CASE("parse_config: malformed config line reported") {
    const auto path = temp_path("badline.cfg");
    {
        std::ofstream f(path);
        f << "points 50\n";
    }
    CHECK_THROWS_AS(cli::parse_config({"simulate", "--config", path}), cli::usage_error);
    std::remove(path.c_str());
}

TEST_CASE("parse_config: usage failures") {
    CHECK_THROWS_AS(cli::parse_config({"mystery-command"}), cli::usage_error);
    CHECK_THROWS_AS(cli::parse_config({"figure", "--no-such-flag", "1"}), cli::usage_error);
    CHECK_THROWS_AS(cli::parse_config({"figure", "--id"}), cli::usage_error);
    CHECK_THROWS_AS(cli::parse_config({"simulate", "--g", "400", "--g-max", "800"}),
                    cli::usage_error);
    CHECK_THROWS_AS(cli::parse_config({"fit"}), cli::usage_error);
    CHECK_THROWS_AS(cli::parse_config({"simulate", "--seed", "12x"}), cli::usage_error);
    CHECK_THROWS_AS(cli::parse_config({"sweep", "--m-list", ""}), cli::usage_error);
}

TEST_CASE("parse_config: environment seed default") {
    setenv("SPINBATH_SEED", "9001", 1);
    auto cfg = cli::parse_config({"figure", "--id", "2"});
    CHECK(cfg.seed == 9001);
    auto overridden = cli::parse_config({"figure", "--id", "2", "--seed", "1"});
    CHECK(overridden.seed == 1);
    unsetenv("SPINBATH_SEED");
    auto fallback = cli::parse_config({"figure", "--id", "2"});
    CHECK(fallback.seed == 0);
}

TEST_CASE("run: simulate emits metadata plus data to the stream") {
    cli::RunConfig cfg;
    cfg.command = cli::Command::Simulate;
    cfg.decomposition = kernels::Decomposition::GeneralD2;
    cfg.m = 5;
    cfg.n = 3;
    cfg.points = 10;
    cfg.seed = 4;
    std::ostringstream out, err;
    CHECK(cli::run(cfg, out, err) == 0);
    const std::string text = out.str();
    CHECK(text.find("# command=simulate") != std::string::npos);
    CHECK(text.find("# decomposition=general-d2") != std::string::npos);
    CHECK(text.find("t,sigma_nd_norm") != std::string::npos);
}

TEST_CASE("run: fit reads back what simulate wrote") {
    const auto path = temp_path("fitme.csv");
    cli::RunConfig sim;
    sim.command = cli::Command::Simulate;
    sim.decomposition = kernels::Decomposition::OriginalD1;
    sim.n = 20'000;
    sim.t0 = 3e-4;
    sim.points = 120;
    sim.seed = 11;
    sim.out = path;
    std::ostringstream out, err;
    REQUIRE(cli::run(sim, out, err) == 0);

    cli::RunConfig fit;
    fit.command = cli::Command::Fit;
    fit.input = path;
    std::ostringstream fit_out;
    CHECK(cli::run(fit, fit_out, err) == 0);
    CHECK(fit_out.str().find("tau=") != std::string::npos);
    std::remove(path.c_str());
}

TEST_CASE("run: oracle-check small battery exits clean") {
    cli::RunConfig cfg;
    cfg.command = cli::Command::OracleCheck;
    cfg.max_m = 1;
    cfg.max_n = 1;
    cfg.check_seeds = 1;
    std::ostringstream out, err;
    CHECK(cli::run(cfg, out, err) == 0);
    CHECK(out.str().find("max_dev=") != std::string::npos);
    CHECK(out.str().find("worst=") != std::string::npos);

    cfg.max_m = 20;
    cfg.max_n = 20;
    CHECK_THROWS_AS(cli::run(cfg, out, err), std::invalid_argument);
}

TEST_CASE("run: sweep emits a verdict table") {
    cli::RunConfig cfg;
    cfg.command = cli::Command::Sweep;
    cfg.decomposition = kernels::Decomposition::GeneralD2;
    cfg.m_list = {4, 9};
    cfg.n_list = {1, 50};
    cfg.points = 60;
    cfg.t0 = 1e-3;
    std::ostringstream out, err;
    CHECK(cli::run(cfg, out, err) == 0);
    const std::string text = out.str();
    CHECK(text.find("m,n,decomposition,verdict") != std::string::npos);
    CHECK(text.find("4,1,general-d2,") != std::string::npos);
    CHECK(std::count(text.begin(), text.end(), '\n') >= 9);
}
