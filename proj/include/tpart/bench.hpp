#pragma once

/**
 * @file bench.hpp
 * @brief Run driver, error measurement and parameter sweeps.
 */

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tpart/density.hpp"
#include "tpart/errors.hpp"
#include "tpart/flows.hpp"
#include "tpart/grid.hpp"
#include "tpart/kernels.hpp"
#include "tpart/particles.hpp"
#include "tpart/remap.hpp"

namespace tpart {

struct RunConfig {
    std::string case_id = "nlr";
    std::string method = "ltp";
    std::string kernel = "b3";
    std::string scheme = "direct";
    double h = 1.0 / 64.0;
    double dt = 0.0;          ///< <= 0: benchmark default
    double final_time = 0.0;  ///< <= 0: benchmark default
    std::string remap = "never";
    double q = 1.0;
    double hprime = 0.0;
    double w_tol = 1e-10;
    double support_slack = 0.5;
    std::string jacobian = "auto";  ///< auto | forward | one-sided2
    int eval_grid = 256;
    int margin = -1;         ///< extra grid layers around [0,1]^2; < 0 picks from the kernel
    bool mid_remap = true;   ///< remap at T/2 on reversible cases
    bool dense = false;      ///< sample the density at every step
    int error_every = 1;     ///< error rows every k steps when a reference exists; 0: final only
    std::string failure_dump;  ///< particle dump written before a numerical abort
};

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct StepRow {
    int step = 0;
    double t = 0.0;
    double rel_error = kNaN;
    double mass = kNaN;
    double transport_indicator = kNaN;
    double remap_indicator = kNaN;
    int remapped = 0;
    std::size_t active = 0;
};

struct RunSummary {
    double final_error = kNaN;
    double avg_active = 0.0;
    int remaps = 0;  ///< remap events after initialization
    double wall_seconds = 0.0;
};

struct RunReport {
    RunConfig config;
    int steps = 0;
    double dt = 0.0;
    double final_time = 0.0;
    std::vector<StepRow> rows;
    RunSummary summary;
};

/// Called after every step's transport, before the remap decision.
using StepObserver = std::function<void(const ParticleSet&, int step)>;

/// Grid layers kept around the unit box so the box sees complete stencils.
inline int default_margin(const ShapeKernel& kernel) {
    return 2 * (static_cast<int>(std::ceil(kernel.rho0)) + kernel.stencil_radius()) + 2;
}

/// Validates a configuration and fills in the benchmark defaults.
struct ResolvedConfig {
    TestCase tc;
    ShapeKernel kernel;
    ParticleOptions options;
    RemapPolicy policy;
    GridSpec grid;
    double dt = 0.0;
    double final_time = 0.0;
    int steps = 0;
};

inline ResolvedConfig resolve(const RunConfig& cfg) {
    ResolvedConfig r;
    r.tc = make_test_case(cfg.case_id);
    r.kernel = make_kernel(cfg.kernel);
    r.options.method = parse_method(cfg.method);
    r.options.scheme = parse_scheme(cfg.scheme);
    r.options.hprime = cfg.hprime;
    r.options.tsp_q = cfg.q;
    r.options.w_tol = cfg.w_tol;
    r.options.support_slack = cfg.support_slack;
    if (cfg.jacobian == "forward")
        r.options.marker_jacobian = MarkerJacobian::forward;
    else if (cfg.jacobian == "one-sided2")
        r.options.marker_jacobian = MarkerJacobian::one_sided2;
    else if (cfg.jacobian != "auto")
        throw ConfigError("unknown jacobian stencil '" + cfg.jacobian + "'");
    r.policy = parse_remap_policy(cfg.remap);

    if (r.options.method == Method::tsp && r.policy.mode != RemapPolicy::Mode::never)
        throw ConfigError("TSP runs require --remap never");
    if (r.policy.mode == RemapPolicy::Mode::dynamic &&
        (r.options.scheme != DerivativeScheme::direct ||
         (r.options.method != Method::ltp && r.options.method != Method::qtp)))
        throw ConfigError("dynamic remapping needs LTP or QTP with the direct scheme");
    if (!(cfg.h > 0.0)) throw ConfigError("h must be positive");
    const double n = 1.0 / cfg.h;
    if (std::abs(n - std::round(n)) > 1e-9) throw ConfigError("1/h must be an integer");
    if (cfg.eval_grid < 2) throw ConfigError("eval-grid must be at least 2");

    r.dt = cfg.dt > 0.0 ? cfg.dt : r.tc.dt;
    r.final_time = cfg.final_time > 0.0 ? cfg.final_time : r.tc.final_time;
    const double steps = r.final_time / r.dt;
    r.steps = static_cast<int>(std::lround(steps));
    if (r.steps < 1 || std::abs(steps - r.steps) > 1e-6)
        throw ConfigError("final time must be a positive multiple of dt");
    const int margin = cfg.margin >= 0 ? cfg.margin : default_margin(r.kernel);
    r.grid = unit_grid(cfg.h, margin);
    return r;
}

// ---------------------------------------------------------------------------
// CSV helpers

inline std::string fmt_real(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Writes through a temporary file and renames it into place.
inline void write_file_atomic(const std::string& path, const std::string& content) {
    const std::filesystem::path target(path);
    if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
    const std::filesystem::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    std::filesystem::rename(tmp, target);
}

inline std::string particles_csv(const ParticleSet& set) {
    std::ostringstream os;
    os << "k1,k2,w,x1,x2,D11,D12,D21,D22,active\n";
    for (std::size_t k = 0; k < set.size(); ++k) {
        const auto& D = set.D[k];
        os << set.index[k][0] << ',' << set.index[k][1] << ',' << fmt_real(set.weight[k]) << ','
           << fmt_real(set.center[k][0]) << ',' << fmt_real(set.center[k][1]) << ','
           << fmt_real(D[0][0]) << ',' << fmt_real(D[0][1]) << ',' << fmt_real(D[1][0]) << ','
           << fmt_real(D[1][1]) << ',' << int(set.active[k]) << '\n';
    }
    return os.str();
}

inline std::string lattice_csv(const Lattice& lat, const std::vector<double>& f) {
    std::ostringstream os;
    os << "x,y,f\n";
    for (int j = 0; j < lat.ny; ++j)
        for (int i = 0; i < lat.nx; ++i) {
            const Vec2 x = lat.point(i, j);
            os << fmt_real(x[0]) << ',' << fmt_real(x[1]) << ',' << fmt_real(f[lat.index(i, j)]) << '\n';
        }
    return os.str();
}

inline std::string rows_csv(const RunReport& report) {
    std::ostringstream os;
    os << "step,t,rel_error,mass,transport_indicator,remap_indicator,remapped,active\n";
    for (const auto& r : report.rows)
        os << r.step << ',' << fmt_real(r.t) << ',' << fmt_real(r.rel_error) << ','
           << fmt_real(r.mass) << ',' << fmt_real(r.transport_indicator) << ','
           << fmt_real(r.remap_indicator) << ',' << r.remapped << ',' << r.active << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// Error measurement

/// max |f_h - f_ref| / max |f_ref| over the lattice.
inline double relative_linf_error(const std::vector<double>& fh, const std::vector<double>& ref) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < fh.size(); ++i) {
        num = std::max(num, std::abs(fh[i] - ref[i]));
        den = std::max(den, std::abs(ref[i]));
    }
    return den > 0.0 ? num / den : num;
}

inline std::vector<double> reference_on_lattice(const TestCase& tc, double t, const Lattice& lat) {
    std::vector<double> ref(lat.size());
    for (int j = 0; j < lat.ny; ++j)
        for (int i = 0; i < lat.nx; ++i) ref[lat.index(i, j)] = reference_solution(tc, t, lat.point(i, j));
    return ref;
}

struct RunHooks {
    StepObserver observer;
    /// Receives the final density on the evaluation lattice.
    std::function<void(const Lattice&, const std::vector<double>&)> final_density;
    /// Receives the particle set after the final step.
    std::function<void(const ParticleSet&)> final_particles;
};

/**
 * Runs one configuration: initialization, then per step transport,
 * remap decision and (when due) an error/mass row.
 */
inline RunReport run(const RunConfig& cfg, const RunHooks& hooks = {}) {
    const auto start = std::chrono::steady_clock::now();
    ResolvedConfig rc = resolve(cfg);
    const TestCase& tc = rc.tc;
    const Lattice lat = eval_lattice(cfg.eval_grid);

    ParticleSet set = initialize(tc.data, rc.kernel, rc.grid, rc.options);
    RemapCache cache =
        make_remap_cache(sample_on_grid(tc.data, rc.grid, rc.grid.box), rc.grid.h);

    RunReport report;
    report.config = cfg;
    report.steps = rc.steps;
    report.dt = rc.dt;
    report.final_time = rc.final_time;

    const bool indicators = set.has_markers();
    const int N = rc.steps;
    const bool mid_remap = cfg.mid_remap && tc.field.reversible && set.method != Method::tsp &&
                           N % 2 == 0 && std::abs(rc.final_time - tc.final_time) < 1e-12;

    auto density_row = [&](StepRow& row, bool final_step) {
        const bool ref = has_reference(tc, row.t);
        const bool periodic =
            ref && cfg.error_every > 0 && tc.field.exact_backward && row.step % cfg.error_every == 0;
        const bool boundary = ref && (row.step == 0 || final_step);
        if (!(cfg.dense || periodic || boundary)) return;
        const auto fh = eval_density_lattice(set, lat);
        for (std::size_t i = 0; i < fh.size(); ++i) {
            if (!std::isfinite(fh[i])) {
                if (!cfg.failure_dump.empty()) write_file_atomic(cfg.failure_dump, particles_csv(set));
                const Vec2 x = lat.point(static_cast<int>(i % lat.nx), static_cast<int>(i / lat.nx));
                throw NumericalError("non-finite density at step " + std::to_string(row.step) +
                                     " near (" + fmt_real(x[0]) + ", " + fmt_real(x[1]) + ")");
            }
        }
        row.mass = lattice_integral(lat, fh);
        if (ref) row.rel_error = relative_linf_error(fh, reference_on_lattice(tc, row.t, lat));
        if (final_step && hooks.final_density) hooks.final_density(lat, fh);
    };

    StepRow row0;
    row0.active = set.active_count();
    if (indicators) {
        row0.transport_indicator = 0.0;
        row0.remap_indicator = remap_error_indicator(set, cache);
    }
    density_row(row0, N == 0);
    report.rows.push_back(row0);

    for (int n = 0; n < N; ++n) {
        const double t = n * rc.dt;
        advance(set, tc.field, t, rc.dt);
        const int m = n + 1;
        if (hooks.observer) hooks.observer(set, m);

        StepRow row;
        row.step = m;
        row.t = m * rc.dt;
        if (indicators) {
            row.transport_indicator = transport_error_indicator(set, cache.fmax);
            row.remap_indicator = remap_error_indicator(set, cache);
        }
        RemapDecision decision = RemapDecision::none;
        if (m < N && set.method != Method::tsp) {
            decision = should_remap(rc.policy, m, indicators ? row.transport_indicator : 0.0,
                                    indicators ? row.remap_indicator : 0.0, set.degenerate);
            if (decision == RemapDecision::none && mid_remap && m == N / 2)
                decision = RemapDecision::scheduled;
        }
        if (decision != RemapDecision::none) {
            cache = remap(set);
            ++report.summary.remaps;
        }
        row.remapped = static_cast<int>(decision);
        row.active = set.active_count();
        density_row(row, m == N);
        report.rows.push_back(row);
    }

    double active_sum = 0.0;
    for (const auto& r : report.rows) active_sum += static_cast<double>(r.active);
    report.summary.avg_active = active_sum / static_cast<double>(report.rows.size());
    report.summary.final_error = report.rows.back().rel_error;
    if (hooks.final_particles) hooks.final_particles(set);
    report.summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

// ---------------------------------------------------------------------------
// Sweeps

struct ConvergenceRow {
    std::string method;
    std::string kernel;
    double h = 0.0;
    double avg_active = 0.0;
    std::string remap;
    double final_error = kNaN;
    double order = kNaN;  ///< against the previous row
};

inline double observed_order(double h_prev, double e_prev, double h, double e) {
    return std::log(e_prev / e) / std::log(h_prev / h);
}

inline std::vector<ConvergenceRow> converge(const RunConfig& base, const std::vector<double>& hs) {
    if (hs.size() < 2) throw ConfigError("convergence sweep needs at least two values of h");
    std::vector<ConvergenceRow> rows;
    for (double h : hs) {
        RunConfig cfg = base;
        cfg.h = h;
        cfg.error_every = 0;
        const RunReport rep = run(cfg);
        ConvergenceRow r{cfg.method, cfg.kernel, h, rep.summary.avg_active, cfg.remap,
                         rep.summary.final_error, kNaN};
        if (!rows.empty())
            r.order = observed_order(rows.back().h, rows.back().final_error, h, r.final_error);
        rows.push_back(r);
    }
    return rows;
}

inline std::string converge_csv(const std::vector<ConvergenceRow>& rows) {
    std::ostringstream os;
    os << "method,kernel,h,avg_active,remap,final_error,order\n";
    for (const auto& r : rows)
        os << r.method << ',' << r.kernel << ',' << fmt_real(r.h) << ',' << fmt_real(r.avg_active)
           << ',' << r.remap << ',' << fmt_real(r.final_error) << ',' << fmt_real(r.order) << '\n';
    return os.str();
}

struct RemapSweepRow {
    std::string mode;       ///< "static" or "dynamic"
    double parameter = 0;   ///< period in steps, or C_remap
    double avg_period = 0;  ///< T / R, R counting the initialization
    double final_error = kNaN;
    int remaps = 0;         ///< R
    double avg_active = 0;
};

inline RemapSweepRow static_row(const RunConfig& base, int period) {
    RunConfig cfg = base;
    cfg.remap = "static:" + std::to_string(period);
    cfg.error_every = 0;
    const RunReport rep = run(cfg);
    const int R = rep.summary.remaps + 1;
    return {"static", static_cast<double>(period), rep.final_time / R, rep.summary.final_error, R,
            rep.summary.avg_active};
}

inline std::vector<RemapSweepRow> sweep_remap(const RunConfig& base, const std::vector<int>& periods) {
    if (parse_method(base.method) == Method::tsp) throw ConfigError("remap sweeps need FSL, LTP or QTP");
    std::vector<RemapSweepRow> rows;
    for (int p : periods) rows.push_back(static_row(base, p));
    return rows;
}

inline std::vector<RemapSweepRow> dynamic_vs_static(const RunConfig& base,
                                                    const std::vector<double>& c_values,
                                                    const std::vector<int>& periods) {
    std::vector<RemapSweepRow> rows = sweep_remap(base, periods);
    for (double c : c_values) {
        RunConfig cfg = base;
        char buf[64];
        std::snprintf(buf, sizeof buf, "dynamic:%.17g", c);
        cfg.remap = buf;
        cfg.error_every = 0;
        const RunReport rep = run(cfg);
        const int R = rep.summary.remaps + 1;
        rows.push_back({"dynamic", c, rep.final_time / R, rep.summary.final_error, R,
                        rep.summary.avg_active});
    }
    return rows;
}

inline std::string remap_sweep_csv(const std::vector<RemapSweepRow>& rows) {
    std::ostringstream os;
    os << "mode,parameter,avg_period,final_error,remaps,avg_active\n";
    for (const auto& r : rows)
        os << r.mode << ',' << fmt_real(r.parameter) << ',' << fmt_real(r.avg_period) << ','
           << fmt_real(r.final_error) << ',' << r.remaps << ',' << fmt_real(r.avg_active) << '\n';
    return os.str();
}

}  // namespace tpart
