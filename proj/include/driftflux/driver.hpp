#pragma once

#include <spdlog/spdlog.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "driftflux/cases.hpp"
#include "driftflux/config.hpp"
#include "driftflux/diagnostics.hpp"
#include "driftflux/gas_fraction.hpp"
#include "driftflux/momentum.hpp"
#include "driftflux/pressure_correction.hpp"

namespace driftflux
{

class RunError : public std::runtime_error
{
  public:
    RunError(const std::string& what, int step) : std::runtime_error(what), step(step) {}
    int step;
};

/// Applies the density prediction to the raw initial data of a problem.
inline State prepare_initial_state(const Problem& pb, double dt)
{
    State s = pb.initial;
    s.t = 0.0;
    auto [rho0, F0] = init_density_prediction(pb.mesh, pb.initial.rho, pb.initial.u, dt, pb.inflow);
    s.rho_prev = pb.initial.rho;
    s.rho = rho0;
    s.fluxes = F0;
    // gas density goes through the same prediction so that (rho, z) stay consistent across fronts
    InflowState gas_inflow = pb.inflow;
    gas_inflow.rho = pb.inflow.z;
    s.z = init_density_prediction(pb.mesh, pb.initial.rho.cwiseProduct(pb.initial.y), pb.initial.u, dt, gas_inflow).first;
    s.y = s.z.cwiseQuotient(s.rho);
    return s;
}

struct StepDetail
{
    State next;
    CellField p_used;
    FaceVelocityField u_tilde;
    CellField z_correction;  // z after the correction step
    int newton_iters = 0, outer_iters = 0, y_iters = 0;
    double pc_residual = 0.0;
};

/// One step of the scheme: optional renormalization, prediction, correction, y step.
inline StepDetail advance(const Problem& pb, const SimulationConfig& cfg, const State& s, int step_index)
{
    const Mesh2D& m = pb.mesh;
    const double dt = cfg.dt;
    const double t_new = (step_index + 1) * dt;
    StepDetail d;
    d.p_used = s.p;
    if (cfg.renormalize)
        d.p_used = renormalize_pressure(m, pb.geom, s.p, face_density(m, pb.geom, s.rho), face_density(m, pb.geom, s.rho_prev));

    MomentumInput mi{&s.u, &s.rho, &s.rho_prev, &s.fluxes, &d.p_used, t_new};
    d.u_tilde = predict_velocity(m, pb.geom, mi, dt, pb.viscosity, pb.boundary_velocity, pb.body_force);

    const CellField z_n = s.rho.cwiseProduct(s.y);
    CorrectionInput ci{&s.rho, &z_n, &d.p_used, &d.u_tilde};
    CorrectionResult corr = pressure_correction_step(m, pb.geom, pb.eos, ci, dt, cfg.newton, pb.inflow, cfg.max_outer);
    d.newton_iters = corr.newton_iters;
    d.outer_iters = corr.outer_iters;
    d.pc_residual = corr.residual;

    MassFractionInput yi{&corr.rho, &corr.z, &corr.fluxes, t_new, pb.boundary_y, pb.gas_source};
    CellField y = correct_mass_fraction(m, pb.eos, yi, dt, pb.drift, pb.flux, cfg.newton, &d.y_iters);

    d.next.t = t_new;
    d.next.u = std::move(corr.u);
    d.next.p = std::move(corr.p);
    d.next.rho = std::move(corr.rho);
    d.next.z = corr.z;
    d.next.y = std::move(y);
    d.next.rho_prev = s.rho;
    d.next.fluxes = std::move(corr.fluxes);
    d.z_correction = std::move(corr.z);
    return d;
}

struct RunResult
{
    Problem problem;
    State initial;
    State final;
    std::vector<StepReport> reports;
    double global_bound = 0.0;             // telescoped entropy bound, renormalized runs
    std::vector<double> global_lhs;        // its left side after each step
    std::vector<double> mass_tolerance;    // accumulated dt * M * |residual| of the mass balance
    std::vector<std::vector<double>> columns;  // column liquid heights per step (sloshing)
    bool aborted = false;
    std::string abort_reason;
};

inline StepReport make_report(const Problem& pb, const SimulationConfig& cfg, int step, const State& before, const StepDetail& d)
{
    const Mesh2D& m = pb.mesh;
    const State& s = d.next;
    StepReport r;
    r.step = step;
    r.time = s.t;
    const Conservation c = conservation_report(m, pb.geom, s);
    r.mass = c.mass;
    r.gas_mass = c.gas_mass;
    r.momentum = c.momentum;
    r.newton_iters = d.newton_iters + d.y_iters;
    r.outer_iters = d.outer_iters;
    r.y_min = s.y.minCoeff();
    r.y_max = s.y.maxCoeff();
    r.p_min = s.p.minCoeff();
    r.p_max = s.p.maxCoeff();

    const BoundsResult b = check_bounds(s.rho, s.p, d.z_correction, s.y, pb.y_floor);
    r.bounds_ok = b.ok;
    r.violation = b.message;
    if (b.ok && pb.inflow.rho.size() == 0) {
        const BoundsResult cb = check_correction_bounds(m, before.rho.cwiseProduct(before.y), before.y, d.z_correction, s.rho, s.u, cfg.dt);
        r.bounds_ok = cb.ok;
        r.violation = cb.message;
    }
    if (r.bounds_ok) {
        const FaceScalars rf = face_density(m, pb.geom, before.rho);
        r.kinetic = 0.5 * weighted_kinetic_norm(s.u, rf, pb.geom);
        r.free_energy = free_energy_integral(m, s.rho, s.rho.cwiseProduct(s.y), pb.eos);
        const EntropyTerms e = entropy_terms(m, pb.geom, pb.eos, before, d.p_used, d.u_tilde, s, d.z_correction, pb.viscosity, cfg.dt);
        r.viscous_dissipation = cfg.dt * viscous_form(m, d.u_tilde, d.u_tilde, pb.viscosity, before.rho);
        r.pressure_term = 0.5 * cfg.dt * cfg.dt * pressure_seminorm(s.p, rf, m, pb.geom);
        r.entropy_lhs = e.lhs;
        r.entropy_rhs = e.rhs;
        r.entropy_margin = e.margin();
    }
    return r;
}

inline const char* kCsvHeader = "step,time,mass,gas_mass,mom_x,mom_y,kinetic,free_energy,entropy_margin,y_min,y_max,p_min,p_max,newton_iters,outer_iters";

inline void write_csv_row(std::ostream& os, const StepReport& r)
{
    os << r.step << ',' << r.time << ',' << r.mass << ',' << r.gas_mass << ',' << r.momentum[0] << ',' << r.momentum[1] << ','
       << r.kinetic << ',' << r.free_energy << ',' << r.entropy_margin << ',' << r.y_min << ',' << r.y_max << ',' << r.p_min << ','
       << r.p_max << ',' << r.newton_iters << ',' << r.outer_iters << '\n';
}

inline void write_csv(const std::filesystem::path& path, const std::vector<StepReport>& reports)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << std::setprecision(17);
    os << kCsvHeader << '\n';
    for (const auto& r : reports) write_csv_row(os, r);
    // an aborted run names the violated invariant in a trailing comment row
    if (!reports.empty() && !reports.back().violation.empty()) os << "# " << reports.back().violation << '\n';
}

/// Legacy ASCII VTK rectilinear grid with cell arrays p, rho, z, y, alpha_g and the cell-averaged velocity.
inline void write_vtk(const std::filesystem::path& path, const Mesh2D& m, const State& s, const EosParams& eos)
{
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << std::setprecision(17);
    os << "# vtk DataFile Version 3.0\ndriftflux t=" << s.t << "\nASCII\nDATASET RECTILINEAR_GRID\n";
    os << "DIMENSIONS " << m.nx + 1 << ' ' << m.ny + 1 << " 1\n";
    os << "X_COORDINATES " << m.nx + 1 << " double\n";
    for (int i = 0; i <= m.nx; ++i) os << m.origin[0] + i * m.hx << (i == m.nx ? '\n' : ' ');
    os << "Y_COORDINATES " << m.ny + 1 << " double\n";
    for (int j = 0; j <= m.ny; ++j) os << m.origin[1] + j * m.hy << (j == m.ny ? '\n' : ' ');
    os << "Z_COORDINATES 1 double\n0\n";
    os << "CELL_DATA " << m.n_cells() << '\n';
    auto scalar = [&](const char* name, auto&& value) {
        os << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
        for (int K = 0; K < m.n_cells(); ++K) os << value(K) << '\n';
    };
    scalar("p", [&](int K) { return s.p[K]; });
    scalar("rho", [&](int K) { return s.rho[K]; });
    scalar("z", [&](int K) { return s.rho[K] * s.y[K]; });
    scalar("y", [&](int K) { return s.y[K]; });
    scalar("alpha_g", [&](int K) { return void_fraction(s.rho[K], s.rho[K] * s.y[K], eos); });
    const auto uc = cell_velocity(m, s.u);
    os << "VECTORS velocity double\n";
    for (int K = 0; K < m.n_cells(); ++K) os << uc[K][0] << ' ' << uc[K][1] << " 0\n";
}

struct RunOptions
{
    bool write_files = false;
    bool record_columns = false;
    int max_steps = -1;  // cap for tests
};

/**
 * Runs a configured case: density prediction, then the three-step scheme until t_end. Any solver
 * failure or bounds violation aborts the run; the last report names the cause.
 */
inline RunResult run_simulation(const SimulationConfig& cfg, const RunOptions& opt = {})
{
    cfg.validate();
    RunResult res;
    res.problem = build_case(cfg);
    const Problem& pb = res.problem;
    State s = prepare_initial_state(pb, cfg.dt);
    res.initial = s;
    res.global_bound = global_entropy_bound(pb.mesh, pb.geom, pb.eos, s, cfg.dt);

    std::filesystem::path out(cfg.output_dir);
    if (opt.write_files) {
        std::filesystem::create_directories(out);
        if (cfg.dump_interval > 0) write_vtk(out / "fields_000000.vtk", pb.mesh, s, pb.eos);
    }
    if (opt.record_columns) res.columns.push_back(column_liquid_height(pb.mesh, s.rho, s.z, pb.eos));

    const int n_steps = static_cast<int>(std::llround(cfg.t_end / cfg.dt));
    const int last = opt.max_steps >= 0 ? std::min(n_steps, opt.max_steps) : n_steps;
    double dissipation = 0.0, mass_tol = 0.0;
    spdlog::info("case {}: {}x{} cells, dt {}, {} steps", pb.name, pb.mesh.nx, pb.mesh.ny, cfg.dt, last);

    for (int n = 0; n < last; ++n) {
        StepDetail d;
        StepReport r;
        std::string failure;
        try {
            d = advance(pb, cfg, s, n);
            r = make_report(pb, cfg, n + 1, s, d);
            if (!r.bounds_ok) failure = r.violation;
        } catch (const std::exception& e) {
            failure = e.what();
            r = StepReport{};
            r.step = n + 1;
            r.time = (n + 1) * cfg.dt;
            r.bounds_ok = false;
            r.violation = failure;
        }
        res.reports.push_back(r);
        if (!failure.empty()) {
            res.aborted = true;
            res.abort_reason = failure;
            spdlog::error("step {} aborted: {}", n + 1, failure);
            if (opt.write_files) write_csv(out / "diagnostics.csv", res.reports);
            res.final = s;
            return res;
        }
        dissipation += r.viscous_dissipation;
        mass_tol += cfg.dt * pb.mesh.n_cells() * d.pc_residual;
        res.mass_tolerance.push_back(mass_tol);
        s = std::move(d.next);
        if (opt.record_columns) res.columns.push_back(column_liquid_height(pb.mesh, s.rho, s.rho.cwiseProduct(s.y), pb.eos));
        res.global_lhs.push_back(global_entropy_lhs(pb.mesh, pb.geom, pb.eos, s, dissipation, cfg.dt));
        spdlog::debug("step {} t={} newton {} outer {} margin {}", r.step, r.time, r.newton_iters, r.outer_iters, r.entropy_margin);
        if (opt.write_files && cfg.dump_interval > 0 && (n + 1) % cfg.dump_interval == 0) {
            std::ostringstream name;
            name << "fields_" << std::setw(6) << std::setfill('0') << n + 1 << ".vtk";
            write_vtk(out / name.str(), pb.mesh, s, pb.eos);
        }
    }
    if (opt.write_files) write_csv(out / "diagnostics.csv", res.reports);
    res.final = s;
    return res;
}

struct FieldErrors
{
    double u = 0.0, p = 0.0, y = 0.0;
};

/// L2 errors against the manufactured fields at time t.
inline FieldErrors manufactured_errors(const Mesh2D& m, const DiamondGeometry& g, const State& s, double t)
{
    FieldErrors e;
    e.u = discrete_l2_error(m, g, s.u, [t](const Point& x) { return manufactured_eval(t, x).u; });
    e.p = discrete_l2_error(m, s.p, [t](const Point& x) { return manufactured_eval(t, x).p; });
    e.y = discrete_l2_error(m, s.y, [t](const Point& x) { return manufactured_eval(t, x).y; });
    return e;
}

/// State sampled from the manufactured fields, used to self-test the error harness.
inline State manufactured_state(const Mesh2D& m, double t)
{
    State s;
    s.t = t;
    s.u.resize(m.n_faces());
    for (int f = 0; f < m.n_faces(); ++f) s.u[f] = manufactured_eval(t, m.faces[f].midpoint).u;
    s.p.resize(m.n_cells());
    s.rho.resize(m.n_cells());
    s.y.resize(m.n_cells());
    for (int K = 0; K < m.n_cells(); ++K) {
        const auto f = manufactured_eval(t, m.cells[K].center);
        s.p[K] = f.p;
        s.rho[K] = f.rho;
        s.y[K] = f.y;
    }
    s.z = s.rho.cwiseProduct(s.y);
    s.rho_prev = s.rho;
    return s;
}

struct ConvergenceEntry
{
    int n = 0;
    double dt = 0.0;
    FieldErrors err;
    bool ok = true;
    std::string failure;
};

struct ConvergenceTable
{
    std::vector<ConvergenceEntry> entries;
    FieldErrors spatial_order;   // slope in h at the smallest dt
    FieldErrors temporal_order;  // slope in dt on the finest mesh
};

/// Least-squares slope of log(e) against log(x).
inline double observed_order(const std::vector<double>& x, const std::vector<double>& e)
{
    const int n = static_cast<int>(x.size());
    if (n < 2) return std::nan("");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        const double lx = std::log(x[i]), ly = std::log(e[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/**
 * Manufactured runs over meshes x time steps, errors at t_end. With inject_exact the solver is
 * skipped and the analytic fields are sampled instead.
 */
inline ConvergenceTable convergence_study(const std::vector<int>& meshes, const std::vector<double>& dts, double t_end = 0.5,
                                          bool inject_exact = false, const SimulationConfig& base = default_config("manufactured"))
{
    ConvergenceTable tab;
    for (int n : meshes)
        for (double dt : dts) {
            ConvergenceEntry e;
            e.n = n;
            e.dt = dt;
            SimulationConfig c = base;
            c.case_name = "manufactured";
            c.nx = c.ny = n;
            c.dt = dt;
            c.t_end = t_end;
            try {
                if (inject_exact) {
                    const Problem pb = build_case(c);
                    e.err = manufactured_errors(pb.mesh, pb.geom, manufactured_state(pb.mesh, t_end), t_end);
                } else {
                    const RunResult r = run_simulation(c);
                    if (r.aborted) throw std::runtime_error(r.abort_reason);
                    e.err = manufactured_errors(r.problem.mesh, r.problem.geom, r.final, r.final.t);
                }
            } catch (const std::exception& ex) {
                e.ok = false;
                e.failure = ex.what();
            }
            spdlog::info("convergence n={} dt={} err u {} p {} y {}{}", n, dt, e.err.u, e.err.p, e.err.y, e.ok ? "" : " FAILED");
            tab.entries.push_back(e);
        }

    auto slope = [&](auto select, auto key, auto field) {
        std::vector<double> x, y;
        for (const auto& e : tab.entries)
            if (select(e) && e.ok) {
                x.push_back(key(e));
                y.push_back(field(e.err));
            }
        return observed_order(x, y);
    };
    const double dt_min = *std::min_element(dts.begin(), dts.end());
    const int n_max = *std::max_element(meshes.begin(), meshes.end());
    auto at_dt = [&](const ConvergenceEntry& e) { return e.dt == dt_min; };
    auto at_n = [&](const ConvergenceEntry& e) { return e.n == n_max; };
    auto h = [](const ConvergenceEntry& e) { return 1.0 / e.n; };
    auto tdt = [](const ConvergenceEntry& e) { return e.dt; };
    auto fu = [](const FieldErrors& f) { return f.u; };
    auto fp = [](const FieldErrors& f) { return f.p; };
    auto fy = [](const FieldErrors& f) { return f.y; };
    tab.spatial_order = {slope(at_dt, h, fu), slope(at_dt, h, fp), slope(at_dt, h, fy)};
    tab.temporal_order = {slope(at_n, tdt, fu), slope(at_n, tdt, fp), slope(at_n, tdt, fy)};
    return tab;
}

}  // namespace driftflux
