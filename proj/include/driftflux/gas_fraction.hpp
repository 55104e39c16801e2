#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>

#include "driftflux/eos.hpp"
#include "driftflux/fields.hpp"
#include "driftflux/linalg.hpp"
#include "driftflux/mesh.hpp"
#include "driftflux/momentum.hpp"

namespace driftflux
{

struct DriftModel
{
    enum class Kind { constant, darcy };
    Kind kind = Kind::constant;
    Vec2 u_r = Vec2::Zero();
    double lambda = 1.0;
    double D = 0.0;

    void validate() const
    {
        if (kind == Kind::darcy && !(lambda > 0.0)) throw ConfigError("drift: lambda must be positive");
        if (!(D >= 0.0)) throw ConfigError("drift: diffusion must be nonnegative");
    }
    bool inactive() const { return kind == Kind::constant && u_r.isZero(0.0) && D == 0.0; }
};

enum class FluxKind { flux_splitting, godunov };

inline double phi(double y) { return std::max(y - y * y, 0.0); }

inline bool in_unit(double a) { return a >= 0.0 && a <= 1.0; }

inline double flux_splitting_g(double a1, double a2) { return (in_unit(a1) ? a1 : 0.0) - (in_unit(a2) ? a2 * a2 : 0.0); }

inline double clamp01(double a) { return std::clamp(a, 0.0, 1.0); }

inline double godunov_g(double a1, double a2)
{
    a1 = clamp01(a1);
    a2 = clamp01(a2);
    if (a2 <= a1) return phi(std::clamp(0.5, a2, a1));
    return std::min(phi(a1), phi(a2));
}

inline double numerical_flux(FluxKind k, double a1, double a2) { return k == FluxKind::godunov ? godunov_g(a1, a2) : flux_splitting_g(a1, a2); }

/// One-sided derivatives of g, taking the branch active at (a1, a2).
inline std::pair<double, double> numerical_flux_derivative(FluxKind k, double a1, double a2)
{
    if (k == FluxKind::flux_splitting) return {in_unit(a1) ? 1.0 : 0.0, in_unit(a2) ? -2.0 * a2 : 0.0};
    const double d1 = in_unit(a1) ? 1.0 - 2.0 * a1 : 0.0, d2 = in_unit(a2) ? 1.0 - 2.0 * a2 : 0.0;
    const double c1 = clamp01(a1), c2 = clamp01(a2);
    if (c2 <= c1) {
        if (0.5 > c1) return {d1, 0.0};
        if (0.5 < c2) return {0.0, d2};
        return {0.0, 0.0};
    }
    return phi(c1) <= phi(c2) ? std::pair{d1, 0.0} : std::pair{0.0, d2};
}

/**
 * G_{sigma,K} for face f. Constant mode: rho_up |sigma| u_r.n_KL. Darcy mode:
 * |sigma| rho_up alpha(1-alpha)/lambda (rho_l - rho_g(p_sigma)) (p_K - p_L), with p_sigma from
 * drift_edge_pressure and alpha the clamped mean of the cell void fractions.
 */
inline double drift_mass_flux(const Mesh2D& m, int f, double rho_up, const DriftModel& model, const EosParams& eos, double pK = 0.0,
                              double pL = 0.0, double alphaK = 0.0, double alphaL = 0.0)
{
    const Face& fc = m.faces[f];
    if (model.kind == DriftModel::Kind::constant) return rho_up * volume_flux(fc, model.u_r);
    if (fc.boundary() || pK == pL) return 0.0;
    const double a = clamp01(0.5 * (alphaK + alphaL));
    const double ps = drift_edge_pressure(pK, pL, eos);
    return fc.measure * rho_up * a * (1.0 - a) / model.lambda * (eos.rho_l - gas_density(ps, eos)) * (pK - pL);
}

using BoundaryScalarFn = std::function<double(const Face&, double t)>;
using CellSourceFn = std::function<double(const Cell&, double t)>;

struct MassFractionInput
{
    const CellField* rho = nullptr;        // rho^{n+1}
    const CellField* z = nullptr;          // z^{n+1}
    const FaceScalars* fluxes = nullptr;   // mean mass fluxes F^{n+1}
    double t_new = 0.0;
    BoundaryScalarFn boundary_y;           // optional Dirichlet data for drift and diffusion
    CellSourceFn source;                   // optional S_y
};

/**
 * Implicit y correction:
 *   |K|(rho_K y_K - z_K)/dt + sum G+ g(y_K,y_L) - G- g(y_L,y_K) + D sum |sigma|/d (y_K - y_L) = |K| S_y.
 * Darcy drift pressures are evaluated from (rho_K, rho_K y_K), so they move with y.
 */
inline CellField correct_mass_fraction(const Mesh2D& m, const EosParams& eos, const MassFractionInput& in, double dt,
                                       const DriftModel& model, FluxKind flux, const NewtonConfig& cfg, int* iterations = nullptr)
{
    model.validate();
    const int nc = m.n_cells(), nf = m.n_faces();
    const CellField& rho = *in.rho;
    const CellField& z = *in.z;
    CellField y0(nc);
    for (int K = 0; K < nc; ++K) {
        if (!(rho[K] > 0.0)) throw InvariantError("mass fraction: nonpositive density");
        y0[K] = z[K] / rho[K];
    }
    if (iterations) *iterations = 0;
    if (model.inactive() && !in.source) return y0;

    const bool darcy = model.kind == DriftModel::Kind::darcy;
    std::vector<double> rho_up(nf), alpha(nc);
    for (int f = 0; f < nf; ++f) {
        const Face& fc = m.faces[f];
        rho_up[f] = fc.boundary() ? rho[fc.K] : ((*in.fluxes)[f] >= 0.0 ? rho[fc.K] : rho[fc.L]);
    }
    for (int K = 0; K < nc; ++K) alpha[K] = clamp01(void_fraction(rho[K], z[K], eos));
    std::vector<double> yb(nf, 0.0);
    const bool dirichlet = static_cast<bool>(in.boundary_y);
    if (dirichlet && darcy) throw ConfigError("mass fraction: boundary y data is only supported with a constant drift");
    if (dirichlet)
        for (int f = m.n_internal; f < nf; ++f) yb[f] = in.boundary_y(m.faces[f], in.t_new);

    auto pressure = [&](int K, double y) { return p_from_rho_z(rho[K], rho[K] * y, eos); };

    // flux out of K through internal face f for given (yK, yL)
    auto edge_flux = [&](int f, double yK, double yL) {
        const Face& fc = m.faces[f];
        double G;
        if (darcy)
            G = drift_mass_flux(m, f, rho_up[f], model, eos, pressure(fc.K, yK), pressure(fc.L, yL), alpha[fc.K], alpha[fc.L]);
        else
            G = drift_mass_flux(m, f, rho_up[f], model, eos);
        const double Gp = std::max(G, 0.0), Gm = -std::min(G, 0.0);
        return Gp * numerical_flux(flux, yK, yL) - Gm * numerical_flux(flux, yL, yK) + model.D * fc.measure / fc.d_sigma * (yK - yL);
    };
    auto boundary_flux = [&](int f, double yK) {
        if (!dirichlet) return 0.0;
        const Face& fc = m.faces[f];
        const double G = drift_mass_flux(m, f, rho_up[f], model, eos);
        const double Gp = std::max(G, 0.0), Gm = -std::min(G, 0.0);
        return Gp * numerical_flux(flux, yK, yb[f]) - Gm * numerical_flux(flux, yb[f], yK) + model.D * fc.measure / fc.d_sigma * (yK - yb[f]);
    };

    CellField src = CellField::Zero(nc);
    if (in.source)
        for (int K = 0; K < nc; ++K) src[K] = m.cells[K].measure * in.source(m.cells[K], in.t_new);

    auto residual = [&](const Vector& y) {
        Vector r(nc);
        for (int K = 0; K < nc; ++K) r[K] = m.cells[K].measure * (rho[K] * y[K] - z[K]) / dt - src[K];
        for (int f = 0; f < nf; ++f) {
            const Face& fc = m.faces[f];
            if (fc.boundary()) {
                r[fc.K] += boundary_flux(f, y[fc.K]);
                continue;
            }
            const double F = edge_flux(f, y[fc.K], y[fc.L]);
            r[fc.K] += F;
            r[fc.L] -= F;
        }
        return r;
    };

    auto jacobian = [&](const Vector& y) {
        Triplets t;
        for (int K = 0; K < nc; ++K) t.emplace_back(K, K, m.cells[K].measure * rho[K] / dt);
        for (int f = 0; f < nf; ++f) {
            const Face& fc = m.faces[f];
            if (fc.boundary()) {
                if (!dirichlet) continue;
                const double G = drift_mass_flux(m, f, rho_up[f], model, eos);
                const double Gp = std::max(G, 0.0), Gm = -std::min(G, 0.0);
                const double dK = Gp * numerical_flux_derivative(flux, y[fc.K], yb[f]).first -
                                  Gm * numerical_flux_derivative(flux, yb[f], y[fc.K]).second + model.D * fc.measure / fc.d_sigma;
                t.emplace_back(fc.K, fc.K, dK);
                continue;
            }
            const double yK = y[fc.K], yL = y[fc.L];
            double dK, dL;
            if (darcy) {
                const double hK = 1e-7 * yK, hL = 1e-7 * yL;
                dK = (edge_flux(f, yK + hK, yL) - edge_flux(f, yK - hK, yL)) / (2.0 * hK);
                dL = (edge_flux(f, yK, yL + hL) - edge_flux(f, yK, yL - hL)) / (2.0 * hL);
            } else {
                const double G = drift_mass_flux(m, f, rho_up[f], model, eos);
                const double Gp = std::max(G, 0.0), Gm = -std::min(G, 0.0);
                const auto [a1, a2] = numerical_flux_derivative(flux, yK, yL);
                const auto [b1, b2] = numerical_flux_derivative(flux, yL, yK);
                const double w = model.D * fc.measure / fc.d_sigma;
                dK = Gp * a1 - Gm * b2 + w;
                dL = Gp * a2 - Gm * b1 - w;
            }
            t.emplace_back(fc.K, fc.K, dK);
            t.emplace_back(fc.K, fc.L, dL);
            t.emplace_back(fc.L, fc.K, -dK);
            t.emplace_back(fc.L, fc.L, -dL);
        }
        return from_triplets(nc, nc, t);
    };

    AdmissibleFn admissible;
    if (darcy)
        admissible = [&](const Vector& y) {
            for (int K = 0; K < nc; ++K)
                if (!(y[K] > 0.0) || !driftflux::admissible(rho[K], rho[K] * y[K], eos)) return false;
            return true;
        };

    double scale = 0.0;
    for (int K = 0; K < nc; ++K) scale = std::max(scale, m.cells[K].measure * rho[K] / dt);
    const NewtonResult r = newton_solve(residual, jacobian, y0, cfg, admissible, scale);
    if (iterations) *iterations = r.iterations;
    return r.x;
}

}  // namespace driftflux
