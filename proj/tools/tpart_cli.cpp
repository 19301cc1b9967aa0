// Command line driver for transformed-particle transport runs.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tpart/bench.hpp"

namespace {

using namespace tpart;

/// "0.0078125" or "1/128".
double parse_step(const std::string& s) {
    const auto slash = s.find('/');
    try {
        std::size_t used = 0;
        if (slash == std::string::npos) {
            const double v = std::stod(s, &used);
            if (used == s.size()) return v;
        } else {
            const std::string a = s.substr(0, slash), b = s.substr(slash + 1);
            std::size_t ub = 0;
            const double num = std::stod(a, &used);
            const double den = std::stod(b, &ub);
            if (used == a.size() && ub == b.size() && den != 0.0) return num / den;
        }
    } catch (const std::exception&) {
    }
    throw ConfigError("invalid grid step '" + s + "'");
}

template <class T, class F>
std::vector<T> parse_list(const std::string& s, F&& conv) {
    std::vector<T> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(conv(item));
    return out;
}

int parse_int(const std::string& s) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("invalid integer '" + s + "'");
}

double parse_real(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("invalid number '" + s + "'");
}

void emit(const std::string& out, const std::string& csv) {
    if (out.empty() || out == "-")
        std::cout << csv;
    else
        write_file_atomic(out, csv);
}

struct Options {
    RunConfig cfg;
    std::string h = "1/64";
    std::string out;
    std::string density_out;
    std::string particles_out;
    std::string hs = "1/64,1/128,1/256";
    std::string periods = "1,2,5,10,20,30,50";
    std::string c_values = "1";
    double t = 0.0;
    long seed = 0;
};

int run_cli(int argc, char** argv) {
    CLI::App app{"Transformed particle transport benchmarks"};
    app.set_help_flag("--help", "print help");
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value file; command line flags override it");
    Options o;
    RunConfig& c = o.cfg;

    app.add_option("--case", c.case_id, "sw-cone | sw-hump | rb-hump | nlr")->capture_default_str();
    app.add_option("--method", c.method, "tsp | fsl | ltp | qtp")->capture_default_str();
    app.add_option("--kernel", c.kernel, "m4p | b1 | b3 | b5")->capture_default_str();
    app.add_option("--scheme", c.scheme, "direct | incremental")->capture_default_str();
    app.add_option("--h", o.h, "grid step, e.g. 1/128")->capture_default_str();
    app.add_option("--dt", c.dt, "time step (default: benchmark value)");
    app.add_option("--final-time", c.final_time, "final time (default: benchmark value)");
    app.add_option("--remap", c.remap, "never | static:N | dynamic:C")->capture_default_str();
    app.add_option("--q", c.q, "TSP particle scale exponent, eps = h^q")->capture_default_str();
    app.add_option("--hprime", c.hprime, "finite-difference step (default: h/2 direct, h incremental)");
    app.add_option("--w-tol", c.w_tol, "activity threshold relative to h^2 |f|_inf")->capture_default_str();
    app.add_option("--support-slack", c.support_slack, "incremental QTP support enlargement")
        ->capture_default_str();
    app.add_option("--jacobian", c.jacobian, "marker Jacobian: auto | forward | one-sided2")
        ->capture_default_str();
    app.add_option("--eval-grid", c.eval_grid, "evaluation lattice size M")->capture_default_str();
    app.add_option("--margin", c.margin, "grid layers around the unit box (default: from kernel)");
    app.add_option("--mid-remap", c.mid_remap, "remap at T/2 on reversible cases")->capture_default_str();
    app.add_flag("--dense", c.dense, "evaluate the density at every step");
    app.add_option("--error-every", c.error_every, "error rows every k steps (0: final only)")
        ->capture_default_str();
    app.add_option("--failure-dump", c.failure_dump, "particle CSV written on numerical failure");
    app.add_option("--out", o.out, "output CSV (default: stdout)");
    app.add_option("--seed", o.seed, "reserved; every algorithm is deterministic");

    auto* run_cmd = app.add_subcommand("run", "single run; per-step rows")->fallthrough();
    run_cmd->add_option("--density-out", o.density_out, "final density CSV (x,y,f)");
    run_cmd->add_option("--dump-particles", o.particles_out, "final particle state CSV");

    auto* conv_cmd = app.add_subcommand("converge", "final error over a list of h")->fallthrough();
    conv_cmd->add_option("--hs", o.hs, "comma-separated grid steps")->capture_default_str();

    auto* sweep_cmd = app.add_subcommand("sweep-remap", "final error over remapping periods")->fallthrough();
    sweep_cmd->add_option("--periods", o.periods, "periods in steps")->capture_default_str();

    auto* dyn_cmd = app.add_subcommand("dynamic", "dynamic criterion against static periods")->fallthrough();
    dyn_cmd->add_option("--c-values", o.c_values, "C_remap values")->capture_default_str();
    dyn_cmd->add_option("--periods", o.periods, "static periods in steps")->capture_default_str();

    auto* fields_cmd = app.add_subcommand("fields", "velocity and reference samples")->fallthrough();
    fields_cmd->add_option("--t", o.t, "time")->capture_default_str();

    auto* dump_cmd = app.add_subcommand("dump-particles", "particle state after a run")->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    c.h = parse_step(o.h);

    if (run_cmd->parsed()) {
        RunHooks hooks;
        if (!o.density_out.empty())
            hooks.final_density = [&](const Lattice& lat, const std::vector<double>& f) {
                write_file_atomic(o.density_out, lattice_csv(lat, f));
            };
        if (!o.particles_out.empty())
            hooks.final_particles = [&](const ParticleSet& s) {
                write_file_atomic(o.particles_out, particles_csv(s));
            };
        const RunReport rep = run(c, hooks);
        emit(o.out, rows_csv(rep));
        std::fprintf(stderr, "final_error=%s avg_active=%s remaps=%d wall=%.2fs\n",
                     fmt_real(rep.summary.final_error).c_str(), fmt_real(rep.summary.avg_active).c_str(),
                     rep.summary.remaps, rep.summary.wall_seconds);
    } else if (conv_cmd->parsed()) {
        emit(o.out, converge_csv(converge(c, parse_list<double>(o.hs, parse_step))));
    } else if (sweep_cmd->parsed()) {
        emit(o.out, remap_sweep_csv(sweep_remap(c, parse_list<int>(o.periods, parse_int))));
    } else if (dyn_cmd->parsed()) {
        emit(o.out, remap_sweep_csv(dynamic_vs_static(c, parse_list<double>(o.c_values, parse_real),
                                                      parse_list<int>(o.periods, parse_int))));
    } else if (fields_cmd->parsed()) {
        const TestCase tc = make_test_case(c.case_id);
        const Lattice lat = eval_lattice(c.eval_grid);
        const bool ref = has_reference(tc, o.t);
        std::ostringstream os;
        os << "x,y,u1,u2,f\n";
        for (int j = 0; j < lat.ny; ++j)
            for (int i = 0; i < lat.nx; ++i) {
                const Vec2 x = lat.point(i, j);
                const Vec2 u = tc.field.velocity(o.t, x);
                os << fmt_real(x[0]) << ',' << fmt_real(x[1]) << ',' << fmt_real(u[0]) << ','
                   << fmt_real(u[1]) << ',' << (ref ? fmt_real(reference_solution(tc, o.t, x)) : "")
                   << '\n';
            }
        emit(o.out, os.str());
    } else if (dump_cmd->parsed()) {
        std::string csv;
        RunHooks hooks;
        hooks.final_particles = [&](const ParticleSet& s) { csv = particles_csv(s); };
        run(c, hooks);
        emit(o.out, csv);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const tpart::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const tpart::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
