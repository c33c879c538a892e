#pragma once

// Command-line front end: option parsing and dispatch to the report commands.
// run_cli is callable from tests with argument vectors and captured streams.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kqbh/report.hpp"

namespace kqbh {

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
    } else {
        write_atomic(path, text);
    }
}

inline void print_suite_summary(const json& report, std::ostream& os) {
    for (const auto& s : report["suites"]) {
        os << (s["pass"].get<bool>() ? "PASS " : "FAIL ") << s["name"].get<std::string>()
           << "  max_residual=" << format_sig(s["max_residual"].get<double>(), 3) << "\n";
    }
    os << report["mismatches"].size() << " transcribed expressions differ from the computed ones\n";
}

}  // namespace detail

inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    std::string golden;

    CLI::App app{"kqbh: integrable perturbed-Kepler system, structure checks and orbits"};
    app.name("kqbh");
    app.set_config("--config", "", "INI file with key = value lines (command-line flags take precedence)");
    app.require_subcommand(1);
    app.add_option("--k1", cfg.k1, "coupling k1")->capture_default_str();
    app.add_option("--k2", cfg.k2, "coupling k2")->capture_default_str();
    app.add_option("--k3", cfg.k3, "coupling k3")->capture_default_str();
    app.add_option("--points", cfg.points, "number of sampled phase points")->capture_default_str();
    app.add_option("--seed", cfg.seed, "sampler seed")->capture_default_str();
    app.add_option("--tol", cfg.tol, "identity tolerance")->capture_default_str();
    app.add_option("--t-max", cfg.t_max, "integration time")->capture_default_str();
    app.add_option("--dt", cfg.dt, "step size")->capture_default_str();
    app.add_option("--integrator", cfg.integrator, "midpoint or rk4")->capture_default_str();
    app.add_option("--a0", cfg.a0, "initial a")->capture_default_str();
    app.add_option("--b0", cfg.b0, "initial b")->capture_default_str();
    app.add_option("--pa0", cfg.pa0, "initial p_a")->capture_default_str();
    app.add_option("--pb0", cfg.pb0, "initial p_b")->capture_default_str();
    app.add_option("--out", cfg.out, "output file (default: stdout)");

    auto* verify = app.add_subcommand("verify", "run every identity suite and write a JSON report");
    auto* orbit = app.add_subcommand("orbit", "integrate one orbit, write CSV and a drift summary");
    auto* spectrum = app.add_subcommand("spectrum", "recursion-operator spectra on samples and along an orbit");
    auto* kepler = app.add_subcommand("reduce-kepler", "checks of the k2 = k3 = 0 reduction");
    kepler->add_option("--golden", golden, "compare the report with this file");
    for (auto* s : {verify, orbit, spectrum, kepler}) s->fallthrough();

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitPass;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitPass;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    }

    try {
        if (*verify) {
            const CommandResult r = cmd_verify(cfg);
            detail::emit(dump(r.report), cfg.out, out);
            if (!cfg.out.empty()) detail::print_suite_summary(r.report, out);
            return r.exit_code;
        }
        if (*orbit) {
            const OrbitResult r = cmd_orbit(cfg);
            detail::emit(trajectory_csv(r.trajectory), cfg.out, out);
            if (cfg.out.empty()) {
                err << dump(r.summary);
            } else {
                write_atomic(cfg.out + ".drift.json", dump(r.summary));
            }
            if (r.exit_code != kExitPass) err << "orbit truncated: " << r.trajectory.message << "\n";
            return r.exit_code;
        }
        if (*spectrum) {
            const CommandResult r = cmd_spectrum(cfg);
            detail::emit(dump(r.report), cfg.out, out);
            return r.exit_code;
        }
        if (*kepler) {
            const CommandResult r = cmd_reduce_kepler(cfg);
            const std::string text = dump(r.report);
            detail::emit(text, cfg.out, out);
            if (!golden.empty()) {
                const auto diff = line_diff(detail::read_file(golden), text);
                if (!diff.empty()) {
                    err << "report differs from " << golden << ":\n";
                    for (const auto& d : diff) err << "  " << d << "\n";
                    return kExitFailure;
                }
            }
            return r.exit_code;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}

inline int run_cli(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run_cli(std::move(args), std::cout, std::cerr);
}

}  // namespace kqbh
