#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

#include "driftflux/eos.hpp"
#include "driftflux/fields.hpp"
#include "driftflux/gas_fraction.hpp"
#include "driftflux/mesh.hpp"
#include "driftflux/momentum.hpp"

namespace driftflux
{

class PreconditionError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

inline double margin_scale(double a, double b) { return std::max({1.0, std::abs(a), std::abs(b)}); }

struct Conservation
{
    double mass = 0.0;
    double gas_mass = 0.0;
    Vec2 momentum = Vec2::Zero();
};

/// mass = sum |K| rho_K, gas mass = sum |K| rho_K y_K, momentum = sum |D_sigma| rho_prev_sigma u_sigma.
inline Conservation conservation_report(const Mesh2D& m, const DiamondGeometry& g, const State& s)
{
    Conservation c;
    c.mass = total(m, s.rho);
    c.gas_mass = total(m, s.rho.cwiseProduct(s.y));
    const FaceScalars rf = face_density(m, g, s.rho_prev);
    for (int f = 0; f < m.n_faces(); ++f) c.momentum += g.D[f] * rf[f] * s.u[f];
    return c;
}

inline double free_energy_integral(const Mesh2D& m, const CellField& rho, const CellField& z, const EosParams& eos)
{
    double s = 0.0;
    for (int K = 0; K < m.n_cells(); ++K) s += m.cells[K].measure * free_energy(rho[K], z[K], eos);
    return s;
}

struct StepReport
{
    int step = 0;
    double time = 0.0;
    double mass = 0.0, gas_mass = 0.0;
    Vec2 momentum = Vec2::Zero();
    double kinetic = 0.0;              // 1/2 |u^{n+1}|^2_{rho^n}
    double free_energy = 0.0;          // sum |K| f(rho, rho y)
    double viscous_dissipation = 0.0;  // dt a_d(u~, u~)
    double pressure_term = 0.0;        // dt^2/2 |p^{n+1}|^2_{rho^n}
    double entropy_lhs = 0.0, entropy_rhs = 0.0, entropy_margin = 0.0;
    double y_min = 0.0, y_max = 0.0, p_min = 0.0, p_max = 0.0;
    bool bounds_ok = true;
    std::string violation;
    int newton_iters = 0, outer_iters = 0;
};

struct BoundsResult
{
    bool ok = true;
    std::string message;
};

/// rho > 0, p > 0, z > 0 and y in (y_floor (1 - 1e-12), 1 + 1e-12] cellwise.
inline BoundsResult check_bounds(const CellField& rho, const CellField& p, const CellField& z, const CellField& y, double y_floor)
{
    BoundsResult r;
    std::ostringstream os;
    for (int K = 0; K < rho.size(); ++K) {
        const char* what = nullptr;
        if (!(rho[K] > 0.0))
            what = "rho";
        else if (!(p[K] > 0.0))
            what = "p";
        else if (!(z[K] > 0.0))
            what = "z";
        else if (!(y[K] > y_floor * (1.0 - 1e-12)) || !(y[K] <= 1.0 + 1e-12))
            what = "y";
        if (what) {
            os << what << " out of range in cell " << K << " (rho " << rho[K] << ", p " << p[K] << ", z " << z[K] << ", y " << std::setprecision(17) << y[K] << ")";
            r.ok = false;
            r.message = os.str();
            return r;
        }
    }
    return r;
}

/**
 * A priori bounds of the correction step without inflow: min z^n/(1 + dt |div u|_inf) <= z^{n+1}
 * <= sum |K| z^n / min |K|, and z^{n+1}/rho^{n+1} within [min y^n, max y^n]. rel_tol absorbs the
 * Newton tolerance.
 */
inline BoundsResult check_correction_bounds(const Mesh2D& m, const CellField& z_n, const CellField& y_n, const CellField& z_new,
                                            const CellField& rho_new, const FaceVelocityField& u_new, double dt, double rel_tol = 1e-8)
{
    BoundsResult r;
    double div_max = 0.0;
    std::vector<double> div(m.n_cells(), 0.0);
    for (int f = 0; f < m.n_faces(); ++f) {
        const Face& fc = m.faces[f];
        const double v = volume_flux(fc, u_new[f]);
        div[fc.K] += v;
        if (!fc.boundary()) div[fc.L] -= v;
    }
    double min_measure = std::numeric_limits<double>::max();
    for (int K = 0; K < m.n_cells(); ++K) {
        div_max = std::max(div_max, std::abs(div[K]) / m.cells[K].measure);
        min_measure = std::min(min_measure, m.cells[K].measure);
    }
    const double lo = z_n.minCoeff() / (1.0 + dt * div_max), hi = total(m, z_n) / min_measure;
    const double ylo = y_n.minCoeff(), yhi = y_n.maxCoeff();
    std::ostringstream os;
    for (int K = 0; K < m.n_cells(); ++K) {
        const double yk = z_new[K] / rho_new[K];
        if (z_new[K] < lo * (1.0 - rel_tol) || z_new[K] > hi * (1.0 + rel_tol)) {
            os << "z bound violated in cell " << K << ": " << z_new[K] << " not in [" << lo << ", " << hi << "]";
            r.ok = false;
        } else if (yk < ylo - rel_tol * yhi || yk > yhi + rel_tol * yhi) {
            os << "gas fraction maximum principle violated in cell " << K << ": " << yk << " not in [" << ylo << ", " << yhi << "]";
            r.ok = false;
        }
        if (!r.ok) {
            r.message = os.str();
            return r;
        }
    }
    return r;
}

/// Terms of the per-step entropy inequality.
struct EntropyTerms
{
    double lhs = 0.0, rhs = 0.0;
    double margin() const { return rhs - lhs; }
};

/**
 * lhs = 1/2|u^{n+1}|^2_{rho^n} + int f(rho^{n+1}, z^{n+1}) + dt a_d(u~,u~) + dt^2/2 |p^{n+1}|^2_{rho^n}
 * rhs = 1/2|u^n|^2_{rho^{n-1}} + int f(rho^n, rho^n y^n) + dt^2/2 |p_used|^2_{rho^n}
 * with p_used the pressure of the prediction step.
 */
inline EntropyTerms entropy_terms(const Mesh2D& m, const DiamondGeometry& g, const EosParams& eos, const State& before,
                                  const CellField& p_used, const FaceVelocityField& u_tilde, const State& after,
                                  const CellField& z_after_correction, const ViscosityModel& visc, double dt)
{
    EntropyTerms e;
    const FaceScalars r_nm1 = face_density(m, g, before.rho_prev), r_n = face_density(m, g, before.rho);
    e.lhs = 0.5 * weighted_kinetic_norm(after.u, r_n, g) + free_energy_integral(m, after.rho, z_after_correction, eos) +
            dt * viscous_form(m, u_tilde, u_tilde, visc, before.rho) + 0.5 * dt * dt * pressure_seminorm(after.p, r_n, m, g);
    e.rhs = 0.5 * weighted_kinetic_norm(before.u, r_nm1, g) + free_energy_integral(m, before.rho, before.rho.cwiseProduct(before.y), eos) +
            0.5 * dt * dt * pressure_seminorm(p_used, r_n, m, g);
    return e;
}

/// signed margin rhs - lhs of one step
inline double entropy_step_check(const EntropyTerms& e) { return e.margin(); }

/// Telescoped bound: 1/2|u^0|^2_{rho^{-1}} + int f(rho^0, z^0) + dt^2/2 |p^0|^2_{rho^{-1}}.
inline double global_entropy_bound(const Mesh2D& m, const DiamondGeometry& g, const EosParams& eos, const State& initial, double dt)
{
    const FaceScalars r = face_density(m, g, initial.rho_prev);
    return 0.5 * weighted_kinetic_norm(initial.u, r, g) + free_energy_integral(m, initial.rho, initial.rho.cwiseProduct(initial.y), eos) +
           0.5 * dt * dt * pressure_seminorm(initial.p, r, m, g);
}

/// Left side of the telescoped bound after a step, given the accumulated viscous dissipation.
inline double global_entropy_lhs(const Mesh2D& m, const DiamondGeometry& g, const EosParams& eos, const State& after, double dissipation_sum,
                                 double dt)
{
    const FaceScalars r = face_density(m, g, after.rho_prev);
    return 0.5 * weighted_kinetic_norm(after.u, r, g) + free_energy_integral(m, after.rho, after.rho.cwiseProduct(after.y), eos) +
           dissipation_sum + 0.5 * dt * dt * pressure_seminorm(after.p, r, m, g);
}

/**
 * Pressure work: sum_K -p_K sum_sigma v_{sigma,K} - sum_K |K| (f(rho_K,z_K) - f(rho*_K,z*_K))/dt, where
 * (rho, z) solve the implicit upwind balances from (rho*, z*) with volume fluxes v (one per face,
 * oriented K to L; boundary faces must carry zero flux).
 */
inline double pressure_work_inequality_check(const Mesh2D& m, const CellField& rho, const CellField& rho_star, const CellField& z,
                                             const CellField& z_star, const FaceScalars& v, double dt, const EosParams& eos,
                                             double balance_tol = 1e-9)
{
    const int nc = m.n_cells();
    Eigen::VectorXd r_rho(nc), r_z(nc), div = Eigen::VectorXd::Zero(nc);
    double scale = 0.0;
    for (int K = 0; K < nc; ++K) {
        r_rho[K] = m.cells[K].measure * (rho[K] - rho_star[K]) / dt;
        r_z[K] = m.cells[K].measure * (z[K] - z_star[K]) / dt;
        scale = std::max({scale, m.cells[K].measure * rho[K] / dt, m.cells[K].measure * z[K] / dt});
    }
    for (int f = 0; f < m.n_faces(); ++f) {
        const Face& fc = m.faces[f];
        if (fc.boundary()) {
            if (v[f] != 0.0) throw PreconditionError("pressure work: nonzero boundary flux");
            continue;
        }
        const int up = v[f] >= 0.0 ? fc.K : fc.L;
        r_rho[fc.K] += v[f] * rho[up];
        r_rho[fc.L] -= v[f] * rho[up];
        r_z[fc.K] += v[f] * z[up];
        r_z[fc.L] -= v[f] * z[up];
        div[fc.K] += v[f];
        div[fc.L] -= v[f];
    }
    if (std::max(r_rho.cwiseAbs().maxCoeff(), r_z.cwiseAbs().maxCoeff()) > balance_tol * std::max(scale, 1.0))
        throw PreconditionError("pressure work: inputs do not satisfy the upwind balances");
    double lhs = 0.0, rhs = 0.0;
    for (int K = 0; K < nc; ++K) {
        lhs -= p_from_rho_z(rho[K], z[K], eos) * div[K];
        rhs += m.cells[K].measure * (free_energy(rho[K], z[K], eos) - free_energy(rho_star[K], z_star[K], eos)) / dt;
    }
    return lhs - rhs;
}

struct SegmentPoint
{
    double zeta = 0.5;
    double T = 0.0;
    double rho_bar = 0.0, z_bar = 0.0;
};

/**
 * zeta from [g'(1) - g'(0)] zeta = g(0) - g(1) + g'(1) with g(s) = f((1-s)A + sB); zeta = 0.5 when g is
 * affine. T = zeta [g'(1) - g'(0)].
 */
inline SegmentPoint segment_point_check(const EosParams& eos, double rhoA, double zA, double rhoB, double zB)
{
    require_admissible(rhoA, zA, eos);
    require_admissible(rhoB, zB, eos);
    const double dr = rhoB - rhoA, dz = zB - zA;
    const double g0 = free_energy(rhoA, zA, eos), g1 = free_energy(rhoB, zB, eos);
    const double d0 = free_energy_drho(rhoA, zA, eos) * dr + free_energy_dz(rhoA, zA, eos) * dz;
    const double d1 = free_energy_drho(rhoB, zB, eos) * dr + free_energy_dz(rhoB, zB, eos) * dz;
    SegmentPoint s;
    const double curv = d1 - d0;
    if (std::abs(curv) > 1e-14 * std::max({1.0, std::abs(d0), std::abs(d1)})) s.zeta = (g0 - g1 + d1) / curv;
    s.T = s.zeta * curv;
    s.rho_bar = rhoA + s.zeta * dr;
    s.z_bar = zA + s.zeta * dz;
    return s;
}

struct DriftDissipation
{
    double margin = 0.0;  // -sum |K| (f(rho, rho y) - f(rho, z))/dt
    double T2 = 0.0;      // sum over edges of (h_K - h_L) times the drift flux out of K
    double T2_min = 0.0;  // smallest single edge term
};

/// Evaluated on the state after the y step: (rho, z) from the correction step and y from the y step.
inline DriftDissipation drift_dissipation_check(const Mesh2D& m, const EosParams& eos, const CellField& rho, const CellField& z,
                                                const CellField& y, const FaceScalars& mass_flux, const DriftModel& model, FluxKind flux,
                                                double dt)
{
    if (model.kind != DriftModel::Kind::darcy) throw PreconditionError("drift dissipation: darcy model required");
    if (flux != FluxKind::godunov) throw PreconditionError("drift dissipation: godunov flux required");
    DriftDissipation d;
    const int nc = m.n_cells();
    std::vector<double> p(nc), h(nc), alpha(nc);
    for (int K = 0; K < nc; ++K) {
        d.margin -= m.cells[K].measure * (free_energy(rho[K], rho[K] * y[K], eos) - free_energy(rho[K], z[K], eos)) / dt;
        p[K] = p_from_rho_z(rho[K], rho[K] * y[K], eos);
        h[K] = h_p(p[K], eos);
        alpha[K] = clamp01(void_fraction(rho[K], z[K], eos));
    }
    d.T2_min = std::numeric_limits<double>::infinity();
    for (int f = 0; f < m.n_internal; ++f) {
        const Face& fc = m.faces[f];
        const double rho_up = mass_flux[f] >= 0.0 ? rho[fc.K] : rho[fc.L];
        const double G = drift_mass_flux(m, f, rho_up, model, eos, p[fc.K], p[fc.L], alpha[fc.K], alpha[fc.L]);
        const double Gp = std::max(G, 0.0), Gm = -std::min(G, 0.0);
        const double F = Gp * godunov_g(y[fc.K], y[fc.L]) - Gm * godunov_g(y[fc.L], y[fc.K]);
        const double t = (h[fc.K] - h[fc.L]) * F;
        d.T2 += t;
        d.T2_min = std::min(d.T2_min, t);
    }
    if (m.n_internal == 0) d.T2_min = 0.0;
    return d;
}

}  // namespace driftflux
