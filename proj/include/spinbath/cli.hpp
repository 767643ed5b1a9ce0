// cli.hpp — Command-line front end: configuration parsing (flags over an
// optional key=value config file over environment defaults), the five
// subcommands, and exit-code discipline (0 success, 1 numeric/validation
// failure, 2 usage error).

#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "spinbath/experiments.hpp"
#include "spinbath/format.hpp"
#include "spinbath/io.hpp"
#include "spinbath/kernels.hpp"
#include "spinbath/model.hpp"
#include "spinbath/oracle.hpp"

namespace spinbath::cli {

// Usage problems (unknown flags/keys, malformed values, conflicts) exit 2;
// anything else that throws exits 1.
class usage_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Command { Simulate, Figure, Fit, OracleCheck, Sweep, Help };

struct RunConfig {
    Command command{Command::Help};
    int m{1};
    std::size_t n{1000};
    double g{400.0};
    std::optional<double> g_max; // selects the random-coupling mode
    std::optional<double> t0;
    int points{200};
    std::uint64_t seed{0};
    kernels::Decomposition decomposition{kernels::Decomposition::OriginalD1};
    double power_exponent{0.0};
    int figure_id{2};
    std::optional<std::string> out;
    std::optional<std::string> svg;
    bool log_y{false};
    std::string input;                  // fit
    std::optional<std::string> column;  // fit
    int max_m{2};
    int max_n{3};
    int check_seeds{5};
    std::vector<double> m_list{10, 100, 1000};
    std::vector<double> n_list{10, 100, 1000};
    int verbosity{0};
};

inline const char* kUsage =
    "usage: spinbath <command> [flags]\n"
    "\n"
    "commands:\n"
    "  simulate      sample one decay/oscillation series\n"
    "  figure        reproduce a named figure (1-5, 7-12)\n"
    "  fit           fit a decoherence time to a CSV series\n"
    "  oracle-check  compare closed forms with the dense simulator\n"
    "  sweep         classification verdicts over an (M, N) grid\n"
    "\n"
    "flags (not all apply to every command):\n"
    "  --m INT --n INT             system / environment sizes\n"
    "  --g HZ | --g-max HZ         constant coupling, or random in [0, g-max]\n"
    "  --t0 SECONDS --points INT   time grid (points = intervals, default 200)\n"
    "  --seed UINT64               RNG seed (default: SPINBATH_SEED or 0)\n"
    "  --decomposition NAME        original-d1|original-d2|general-d1|general-d2\n"
    "  --power-exponent A          raise the series to the 10^A power\n"
    "  --id INT                    figure id (figure)\n"
    "  --input PATH --column NAME  series source (fit)\n"
    "  --max-m INT --max-n INT --seeds INT   oracle-check ranges\n"
    "  --m-list A,B,... --n-list A,B,...     sweep grids\n"
    "  --out PATH --svg PATH --log-y         outputs\n"
    "  --config PATH               key=value file; flags take precedence\n"
    "  --verbose                   progress notes on stderr\n";

// ------------------------------ flag machinery --------------------------------

namespace detail {

inline const std::set<std::string> kBoolKeys = {"log-y", "verbose"};

inline const std::map<std::string, std::set<std::string>> kCommandKeys = {
    {"simulate",
     {"m", "n", "g", "g-max", "t0", "points", "seed", "decomposition", "power-exponent", "out",
      "svg", "log-y", "config", "verbose"}},
    {"figure", {"id", "t0", "points", "seed", "out", "svg", "log-y", "config", "verbose"}},
    {"fit", {"input", "column", "out", "config", "verbose"}},
    {"oracle-check", {"max-m", "max-n", "seeds", "out", "config", "verbose"}},
    {"sweep",
     {"m-list", "n-list", "g", "g-max", "t0", "points", "seed", "decomposition", "out", "config",
      "verbose"}},
};

inline double parse_double(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end == value.c_str() || *end != '\0')
        throw usage_error("--" + key + ": malformed number '" + value + "'");
    return v;
}

inline long long parse_int(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const long long v = std::strtoll(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw usage_error("--" + key + ": malformed integer '" + value + "'");
    return v;
}

inline std::uint64_t parse_seed(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(value.c_str(), &end, 10);
    if (end == value.c_str() || *end != '\0')
        throw usage_error("--" + key + ": malformed seed '" + value + "'");
    return v;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
    if (out.empty()) throw usage_error("--" + key + ": empty list");
    return out;
}

inline kernels::Decomposition parse_decomposition(const std::string& value) {
    if (value == "original-d1") return kernels::Decomposition::OriginalD1;
    if (value == "original-d2") return kernels::Decomposition::OriginalD2;
    if (value == "general-d1") return kernels::Decomposition::GeneralD1;
    if (value == "general-d2") return kernels::Decomposition::GeneralD2;
    throw usage_error("--decomposition: unknown value '" + value + "'");
}

// Flat key=value config file; '#' starts a comment, keys match flag names.
// Unknown keys and malformed lines are reported with their line number.
inline std::map<std::string, std::string> read_config_file(const std::string& path,
                                                           const std::set<std::string>& known) {
    std::ifstream file(path);
    if (!file) throw std::runtime_error("cannot open config file: " + path);
    std::map<std::string, std::string> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(file, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string{};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        const std::string body = strip(line);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw usage_error(path + ":" + std::to_string(line_no) + ": expected key = value");
        const std::string key = strip(body.substr(0, eq));
        const std::string value = strip(body.substr(eq + 1));
        if (!known.count(key) || key == "config")
            throw usage_error(path + ":" + std::to_string(line_no) + ": unknown key '" + key +
                              "'");
        if (values.count(key))
            throw usage_error(path + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                              "'");
        values[key] = value;
    }
    return values;
}

} // namespace detail

// Parses command line plus optional config file. Precedence: flag, then config
// file, then (for the seed) the SPINBATH_SEED environment variable.
inline RunConfig parse_config(const std::vector<std::string>& args) {
    RunConfig cfg;
    if (args.empty() || args[0] == "--help" || args[0] == "-h" || args[0] == "help") {
        cfg.command = Command::Help;
        return cfg;
    }
    const std::string command = args[0];
    const auto keys_it = detail::kCommandKeys.find(command);
    if (keys_it == detail::kCommandKeys.end())
        throw usage_error("unknown command '" + command + "'");
    const auto& known = keys_it->second;

    std::map<std::string, std::string> flags;
    for (std::size_t i = 1; i < args.size(); ++i) {
        std::string token = args[i];
        if (token == "--help" || token == "-h") {
            cfg.command = Command::Help;
            return cfg;
        }
        if (token.rfind("--", 0) != 0) throw usage_error("unexpected argument '" + token + "'");
        std::string key = token.substr(2);
        std::string value;
        const auto eq = key.find('=');
        bool has_value = false;
        if (eq != std::string::npos) {
            value = key.substr(eq + 1);
            key = key.substr(0, eq);
            has_value = true;
        }
        if (!known.count(key)) throw usage_error("unknown flag '--" + key + "' for " + command);
        if (detail::kBoolKeys.count(key)) {
            if (has_value) throw usage_error("--" + key + " takes no value");
            flags[key] = "1";
            continue;
        }
        if (!has_value) {
            if (i + 1 >= args.size()) throw usage_error("--" + key + " needs a value");
            value = args[++i];
        }
        if (flags.count(key)) throw usage_error("duplicate flag '--" + key + "'");
        flags[key] = value;
    }

    std::map<std::string, std::string> merged;
    if (flags.count("config"))
        merged = detail::read_config_file(flags.at("config"), known);
    for (const auto& [key, value] : flags) merged[key] = value; // flags win

    if (merged.count("g") && merged.count("g-max"))
        throw usage_error("--g conflicts with --g-max (pick one coupling mode)");

    if (command == "simulate") cfg.command = Command::Simulate;
    else if (command == "figure") cfg.command = Command::Figure;
    else if (command == "fit") cfg.command = Command::Fit;
    else if (command == "oracle-check") cfg.command = Command::OracleCheck;
    else cfg.command = Command::Sweep;

    bool seed_given = false;
    for (const auto& [key, value] : merged) {
        if (key == "config") continue;
        if (key == "m") cfg.m = static_cast<int>(detail::parse_int(key, value));
        else if (key == "n") cfg.n = static_cast<std::size_t>(detail::parse_int(key, value));
        else if (key == "g") cfg.g = detail::parse_double(key, value);
        else if (key == "g-max") cfg.g_max = detail::parse_double(key, value);
        else if (key == "t0") cfg.t0 = detail::parse_double(key, value);
        else if (key == "points") cfg.points = static_cast<int>(detail::parse_int(key, value));
        else if (key == "seed") { cfg.seed = detail::parse_seed(key, value); seed_given = true; }
        else if (key == "decomposition") cfg.decomposition = detail::parse_decomposition(value);
        else if (key == "power-exponent") cfg.power_exponent = detail::parse_double(key, value);
        else if (key == "id") cfg.figure_id = static_cast<int>(detail::parse_int(key, value));
        else if (key == "out") cfg.out = value;
        else if (key == "svg") cfg.svg = value;
        else if (key == "log-y") cfg.log_y = true;
        else if (key == "verbose") cfg.verbosity = 1;
        else if (key == "input") cfg.input = value;
        else if (key == "column") cfg.column = value;
        else if (key == "max-m") cfg.max_m = static_cast<int>(detail::parse_int(key, value));
        else if (key == "max-n") cfg.max_n = static_cast<int>(detail::parse_int(key, value));
        else if (key == "seeds") cfg.check_seeds = static_cast<int>(detail::parse_int(key, value));
        else if (key == "m-list") cfg.m_list = detail::parse_list(key, value);
        else if (key == "n-list") cfg.n_list = detail::parse_list(key, value);
    }
    if (!seed_given) {
        if (const char* env = std::getenv("SPINBATH_SEED")) cfg.seed = detail::parse_seed("seed", env);
    }
    if (cfg.command == Command::Fit && cfg.input.empty())
        throw usage_error("fit requires --input PATH");
    return cfg;
}

// ------------------------------ command bodies --------------------------------

namespace detail {

inline const char* decomposition_name(kernels::Decomposition d) {
    switch (d) {
        case kernels::Decomposition::OriginalD1: return "original-d1";
        case kernels::Decomposition::OriginalD2: return "original-d2";
        case kernels::Decomposition::GeneralD1: return "general-d1";
        default: return "general-d2";
    }
}

inline model::CouplingMode coupling_mode(const RunConfig& cfg) {
    return cfg.g_max ? model::CouplingMode::uniform_random(*cfg.g_max)
                     : model::CouplingMode::constant(cfg.g);
}

inline void append_common_metadata(experiments::FigureBundle& bundle, const RunConfig& cfg,
                                   const char* command) {
    std::vector<std::pair<std::string, std::string>> head;
    head.emplace_back("command", command);
    bundle.metadata.insert(bundle.metadata.begin(), head.begin(), head.end());
}

inline void emit_bundle(const experiments::FigureBundle& bundle, const RunConfig& cfg,
                        std::ostream& out) {
    const std::string csv = io::to_csv(bundle);
    if (cfg.out)
        io::write_text(csv, *cfg.out);
    else
        out << csv;
    if (cfg.svg) io::emit_svg(bundle, *cfg.svg, cfg.log_y);
}

inline int run_simulate(const RunConfig& cfg, std::ostream& out) {
    const auto mode = coupling_mode(cfg);
    experiments::FigureBundle bundle;
    bundle.id = 0;

    if (cfg.decomposition == kernels::Decomposition::OriginalD1) {
        bundle.title = "|r(t)|^2";
        bundle.grid = model::TimeGrid{cfg.t0.value_or(3e-6), cfg.points};
        bundle.grid.validate();
        const auto ens = model::make_random_ensemble(cfg.n, cfg.seed, mode);
        experiments::TimeSeries series = experiments::series_r2(ens, bundle.grid);
        if (cfg.power_exponent != 0.0)
            series = experiments::power_scale(series, cfg.power_exponent);
        bundle.curves.push_back({"r2", std::move(series)});
    } else if (cfg.decomposition == kernels::Decomposition::OriginalD2) {
        bundle.title = "single bath-particle expectation";
        bundle.grid = model::TimeGrid{cfg.t0.value_or(3e-2), cfg.points};
        bundle.grid.validate();
        const auto ens = model::make_random_ensemble(cfg.n, cfg.seed, mode);
        const model::Hermitian2x2 eps{1.0, 1.0, {1.0, 0.0}};
        const auto osc = kernels::original_d2_components(0, ens, eps);
        experiments::TimeSeries expectation, envelope;
        expectation.grid = envelope.grid = bundle.grid;
        for (int k = 0; k <= bundle.grid.n_points; ++k) {
            expectation.values.push_back(osc.value(bundle.grid.sample(k)));
            envelope.values.push_back(osc.amplitude);
        }
        bundle.metadata.emplace_back("observed_particle", "0");
        bundle.curves.push_back({"expectation", std::move(expectation)});
        bundle.curves.push_back({"envelope", std::move(envelope)});
    } else {
        bundle.title = "Sigma_nd (normalized)";
        bundle.grid = model::TimeGrid{cfg.t0.value_or(1e-3), cfg.points};
        bundle.grid.validate();
        experiments::SigmaConfig sigma{cfg.m, cfg.n, mode, cfg.seed, cfg.decomposition};
        double normalization = 0.0;
        auto series = experiments::series_sigma_nd(sigma, bundle.grid, &normalization);
        bundle.metadata.emplace_back("normalization", spinbath::format_double(normalization));
        bundle.curves.push_back({"sigma_nd_norm", std::move(series)});
    }

    bundle.metadata.emplace_back("seed", std::to_string(cfg.seed));
    bundle.metadata.emplace_back("decomposition", decomposition_name(cfg.decomposition));
    bundle.metadata.emplace_back("m", std::to_string(cfg.m));
    bundle.metadata.emplace_back("n", std::to_string(cfg.n));
    if (cfg.g_max)
        bundle.metadata.emplace_back("g_max", spinbath::format_double(*cfg.g_max));
    else
        bundle.metadata.emplace_back("g", spinbath::format_double(cfg.g));
    bundle.metadata.emplace_back("t0", spinbath::format_double(bundle.grid.t0));
    bundle.metadata.emplace_back("points", std::to_string(bundle.grid.n_points));
    bundle.metadata.emplace_back("power_exponent", spinbath::format_double(cfg.power_exponent));
    append_common_metadata(bundle, cfg, "simulate");
    emit_bundle(bundle, cfg, out);
    return 0;
}

inline int run_figure_cmd(const RunConfig& cfg, std::ostream& out) {
    experiments::FigureOptions options;
    options.t0 = cfg.t0;
    if (cfg.points != 200) options.points = cfg.points;
    auto bundle = experiments::run_figure(cfg.figure_id, cfg.seed, options);
    append_common_metadata(bundle, cfg, "figure");
    emit_bundle(bundle, cfg, out);
    return 0;
}

inline int run_fit(const RunConfig& cfg, std::ostream& out) {
    const auto table = io::read_csv(cfg.input);
    const auto series = io::column_series(table, cfg.column);
    const auto fit = experiments::fit_decoherence_time(series);
    std::ostringstream report;
    report << "column=" << (cfg.column ? *cfg.column : table.labels.front()) << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", fit.tau);
    report << "tau=" << buf << "\n";
    report << "window_begin=" << fit.window_begin << "\n";
    report << "window_end=" << fit.window_end << "\n";
    report << "samples=" << fit.window_count << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", fit.residual_rms);
    report << "residual_rms=" << buf << "\n";
    if (cfg.out) io::write_text(report.str(), *cfg.out);
    out << report.str();
    return 0;
}

inline Eigen::VectorXcd random_amplitudes(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXcd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = model::complexd{normal(rng), normal(rng)};
    v.normalize();
    return v;
}

inline int run_oracle_check(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.max_m < 1 || cfg.max_n < 1 || cfg.check_seeds < 1)
        throw std::invalid_argument("oracle-check: ranges must be >= 1");
    if (cfg.max_m + cfg.max_n > oracle::kMaxTotalSpins)
        throw std::invalid_argument("oracle-check: max-m + max-n exceeds the 24-spin cap");

    constexpr double tolerance = 1e-10;
    double worst = 0.0;
    for (int m = 1; m <= cfg.max_m; ++m) {
        const auto idx = model::block_index(m);
        for (int n = 1; n <= cfg.max_n; ++n) {
            for (int seed = 0; seed < cfg.check_seeds; ++seed) {
                std::mt19937_64 rng(0xC0FFEEull + 1000003ull * static_cast<std::uint64_t>(seed) +
                                    101ull * static_cast<std::uint64_t>(m) +
                                    static_cast<std::uint64_t>(n));
                const auto mode = (seed % 2 == 0) ? model::CouplingMode::constant(400.0)
                                                  : model::CouplingMode::uniform_random(800.0);
                const auto ens = model::make_random_ensemble(
                    static_cast<std::size_t>(n),
                    static_cast<std::uint64_t>(7919 * m + 104729 * n + seed), mode);
                const auto sys = model::explicit_system(m, random_amplitudes(1 << m, rng),
                                                        model::Arrangement::Binary);
                const auto state0 = oracle::build_initial(sys, ens);

                std::uniform_real_distribution<double> unit(-1.0, 1.0);
                Eigen::MatrixXcd raw(m + 1, m + 1);
                for (int i = 0; i <= m; ++i)
                    for (int j = 0; j <= m; ++j)
                        raw(i, j) = model::complexd{unit(rng), unit(rng)};
                const Eigen::MatrixXcd s_b = 0.5 * (raw + raw.adjoint().eval());
                const model::Hermitian2x2 s_t{unit(rng), unit(rng), {unit(rng), unit(rng)}};

                double dev = 0.0;
                std::uniform_real_distribution<double> tdist(0.0, 10.0 / 400.0);
                for (int rep = 0; rep < 20; ++rep) {
                    const double t = tdist(rng);
                    const auto state = oracle::evolve(state0, ens.g, t);
                    dev = std::max(dev, std::abs(oracle::expectation(
                                            state, model::ObservableSpec{model::GeneralD1{}}) -
                                        kernels::expectation_general_d1(sys, idx, ens, t)));
                    dev = std::max(dev, std::abs(oracle::expectation(
                                            state, model::ObservableSpec{model::GeneralD1{s_b}}) -
                                        kernels::expectation_general_d1(sys, idx, ens, t, s_b)));
                    dev = std::max(dev,
                                   std::abs(oracle::expectation(
                                       state, model::ObservableSpec{model::GeneralD2{s_t}}) -
                                       kernels::expectation_general_d2(sys, idx, ens, s_t, t)));
                    if (m == 1) {
                        const auto& c = *sys.amplitudes;
                        const model::Hermitian2x2 s{unit(rng), unit(rng), {unit(rng), unit(rng)}};
                        dev = std::max(dev, std::abs(oracle::expectation(
                                                state, model::ObservableSpec{model::OriginalD1{s}}) -
                                            kernels::expectation_original_d1(c[0], c[1], s, ens,
                                                                             t)));
                    }
                }
                // observed bath particle, central spin pinned to |down>
                {
                    Eigen::VectorXcd down(2);
                    down << 0.0, 1.0;
                    const auto pinned = oracle::build_initial(
                        model::explicit_system(1, down, model::Arrangement::Binary), ens);
                    const model::Hermitian2x2 eps{unit(rng), unit(rng), {unit(rng), unit(rng)}};
                    for (int rep = 0; rep < 5; ++rep) {
                        const double t = tdist(rng);
                        const auto state = oracle::evolve(pinned, ens.g, t);
                        dev = std::max(
                            dev, std::abs(oracle::expectation(
                                     state, model::ObservableSpec{model::OriginalD2{0, eps}}) -
                                 kernels::expectation_original_d2(0, ens, eps, t)));
                    }
                }
                char line[128];
                std::snprintf(line, sizeof(line), "m=%d n=%d seed=%d max_dev=%.3e", m, n, seed,
                              dev);
                out << line << "\n";
                worst = std::max(worst, dev);
            }
        }
    }
    out << "worst=" << worst << " tolerance=" << tolerance << "\n";
    if (worst > tolerance) {
        err << "oracle-check: deviation above tolerance\n";
        return 1;
    }
    return 0;
}

inline int run_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    if (cfg.decomposition == kernels::Decomposition::OriginalD1 ||
        cfg.decomposition == kernels::Decomposition::OriginalD2)
        throw std::invalid_argument("sweep: requires a generalized decomposition");
    model::TimeGrid grid{cfg.t0.value_or(1e-3), cfg.points};
    grid.validate();

    std::string csv;
    csv += "# command=sweep\n";
    csv += std::string("# decomposition=") + decomposition_name(cfg.decomposition) + "\n";
    csv += "# seed=" + std::to_string(cfg.seed) + "\n";
    csv += "# t0=" + spinbath::format_double(grid.t0) + "\n";
    csv += "# points=" + std::to_string(grid.n_points) + "\n";
    csv += "m,n,decomposition,verdict\n";
    for (double m_val : cfg.m_list) {
        for (double n_val : cfg.n_list) {
            const int m = static_cast<int>(m_val);
            const auto n = static_cast<std::size_t>(n_val);
            if (cfg.verbosity) err << "sweep: M=" << m << " N=" << n << "\n";
            experiments::SigmaConfig sigma{m, n, coupling_mode(cfg), cfg.seed,
                                           cfg.decomposition};
            const auto series = experiments::series_sigma_nd(sigma, grid);
            csv += std::to_string(m) + "," + std::to_string(n) + "," +
                   decomposition_name(cfg.decomposition) + "," +
                   experiments::to_string(experiments::classify(series)) + "\n";
        }
    }
    if (cfg.out)
        io::write_text(csv, *cfg.out);
    else
        out << csv;
    return 0;
}

} // namespace detail

// Runs a parsed configuration; returns the process exit code.
inline int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    switch (cfg.command) {
        case Command::Help: out << kUsage; return 0;
        case Command::Simulate: return detail::run_simulate(cfg, out);
        case Command::Figure: return detail::run_figure_cmd(cfg, out);
        case Command::Fit: return detail::run_fit(cfg, out);
        case Command::OracleCheck: return detail::run_oracle_check(cfg, out, err);
        case Command::Sweep: return detail::run_sweep(cfg, out, err);
    }
    return 2;
}

inline int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        const RunConfig cfg = parse_config(args);
        return run(cfg, std::cout, std::cerr);
    } catch (const usage_error& e) {
        std::cerr << "error: " << e.what() << "\n\n" << kUsage;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace spinbath::cli
