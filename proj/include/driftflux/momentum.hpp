#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "driftflux/fields.hpp"
#include "driftflux/linalg.hpp"
#include "driftflux/mesh.hpp"

namespace driftflux
{

/// Mass flux out of D_{K,face_a} into D_{K,face_b}, one entry per sub-edge.
struct DualFluxes
{
    std::vector<double> F;
};

inline constexpr std::array<int, 4> kOpposite{east, west, north, south};

/// Outward primal flux of cell K through its face slot s.
inline double outward_flux(const Mesh2D& m, const FaceScalars& primal, int K, int s)
{
    const int f = m.cells[K].faces[s];
    return orientation(m.faces[f], K) * primal[f];
}

/**
 * Dual fluxes from the affine reconstruction of rho*u inside each rectangle. The x component
 * interpolates the west/east flux densities, the y component the south/north ones, so the
 * reconstruction has constant divergence and reproduces the primal face fluxes.
 */
inline DualFluxes assemble_dual_mass_fluxes(const Mesh2D& m, const DiamondGeometry& g, const FaceScalars& primal)
{
    if (primal.size() != m.n_faces()) throw InvariantError("dual fluxes: primal flux vector has wrong size");
    if (!primal.allFinite()) throw InvariantError("dual fluxes: nonfinite primal flux");
    DualFluxes d;
    d.F.resize(g.sub_edges.size());
    for (std::size_t e = 0; e < g.sub_edges.size(); ++e) {
        const int K = g.sub_edges[e].cell;
        const auto [a, b] = kSubEdgePairs[e % 4];
        const double Fa = outward_flux(m, primal, K, a), Fa_opp = outward_flux(m, primal, K, kOpposite[a]);
        const double Fb = outward_flux(m, primal, K, b), Fb_opp = outward_flux(m, primal, K, kOpposite[b]);
        d.F[e] = (-3.0 * Fa + Fa_opp + 3.0 * Fb - Fb_opp) / 8.0;
    }
    return d;
}

/// |D_sigma|/dt (rho_sigma - rho_prev_sigma) + sum_eps F_eps,sigma for every face.
inline FaceScalars dual_mass_balance_residual(const Mesh2D& m, const DiamondGeometry& g, const DualFluxes& d,
                                              const CellField& rho, const CellField& rho_prev, double dt)
{
    const FaceScalars rf = face_density(m, g, rho), rpf = face_density(m, g, rho_prev);
    FaceScalars r(m.n_faces());
    for (int f = 0; f < m.n_faces(); ++f) r[f] = g.D[f] / dt * (rf[f] - rpf[f]);
    for (std::size_t e = 0; e < g.sub_edges.size(); ++e) {
        r[g.sub_edges[e].face_a] += d.F[e];
        r[g.sub_edges[e].face_b] -= d.F[e];
    }
    // boundary half-diamonds exchange the primal boundary flux through the face itself
    return r;
}

struct ViscosityModel
{
    enum class Kind { constant, density_proportional };
    Kind kind = Kind::constant;
    double mu = 0.0;  // constant model
    double c = 1.0;   // mu = rho / c

    double cell_mu(double rho) const { return kind == Kind::constant ? mu : rho / c; }
};

using ElementMatrix = Eigen::Matrix<double, 8, 8>;

/**
 * Rannacher-Turek element matrix on an hx*hy rectangle for unit viscosity. Dof 2*s + c is
 * component c of the face-mean basis function of slot s. Reference basis on [-1,1]^2:
 *   phi_W,E = 1/4 -+ xi/2 + 3/8 (xi^2 - eta^2),  phi_S,N = 1/4 -+ eta/2 - 3/8 (xi^2 - eta^2).
 */
inline ElementMatrix element_viscous_matrix(double hx, double hy, ViscosityModel::Kind kind)
{
    ElementMatrix A = ElementMatrix::Zero();
    const double gp = 1.0 / std::sqrt(3.0);
    const double jac = 0.25 * hx * hy;
    for (double xi : {-gp, gp})
        for (double eta : {-gp, gp}) {
            // physical gradients of the four basis functions
            std::array<Vec2, 4> grad;
            grad[west] = Vec2((-0.5 + 0.75 * xi) * 2.0 / hx, (-0.75 * eta) * 2.0 / hy);
            grad[east] = Vec2((0.5 + 0.75 * xi) * 2.0 / hx, (-0.75 * eta) * 2.0 / hy);
            grad[south] = Vec2((-0.75 * xi) * 2.0 / hx, (-0.5 + 0.75 * eta) * 2.0 / hy);
            grad[north] = Vec2((-0.75 * xi) * 2.0 / hx, (0.5 + 0.75 * eta) * 2.0 / hy);
            for (int a = 0; a < 4; ++a)
                for (int i = 0; i < 2; ++i)
                    for (int b = 0; b < 4; ++b)
                        for (int j = 0; j < 2; ++j) {
                            double v = (i == j ? grad[a].dot(grad[b]) : 0.0);
                            if (kind == ViscosityModel::Kind::constant)
                                v += grad[a][i] * grad[b][j] / 3.0;
                            else
                                v += grad[b][i] * grad[a][j] - 2.0 / 3.0 * grad[b][j] * grad[a][i];
                            A(2 * a + i, 2 * b + j) += jac * v;
                        }
        }
    return A;
}

inline Eigen::Matrix<double, 8, 1> gather(const Mesh2D& m, const FaceVelocityField& v, int K)
{
    Eigen::Matrix<double, 8, 1> out;
    for (int s = 0; s < 4; ++s) {
        const Vec2& u = v[m.cells[K].faces[s]];
        out[2 * s] = u[0];
        out[2 * s + 1] = u[1];
    }
    return out;
}

/// a_d(v, w); the density-proportional model takes mu per cell from rho.
inline double viscous_form(const Mesh2D& m, const FaceVelocityField& v, const FaceVelocityField& w, const ViscosityModel& model,
                           const CellField& rho)
{
    const ElementMatrix A = element_viscous_matrix(m.hx, m.hy, model.kind);
    double s = 0.0;
    for (int K = 0; K < m.n_cells(); ++K) {
        const double mu = model.cell_mu(model.kind == ViscosityModel::Kind::constant ? 0.0 : rho[K]);
        if (mu == 0.0) continue;
        s += mu * gather(m, w, K).dot(A * gather(m, v, K));
    }
    return s;
}

using BoundaryVelocityFn = std::function<Vec2(const Face&, double t)>;
using BodyForceFn = std::function<Vec2(const Face&, double rho_face, double t)>;

/// True when component c of face f is prescribed.
inline bool velocity_fixed(const Face& f, int c)
{
    if (!f.boundary()) return false;
    if (f.tag == BoundaryTag::slip) return c == f.axis;
    return true;
}

/// Prescribed boundary value (zero normal component on slip faces).
inline Vec2 boundary_velocity(const Face& f, const BoundaryVelocityFn& bc, double t)
{
    if (f.tag == BoundaryTag::slip) return Vec2::Zero();
    return bc ? bc(f, t) : Vec2::Zero();
}

inline void apply_velocity_bc(const Mesh2D& m, FaceVelocityField& u, const BoundaryVelocityFn& bc, double t)
{
    for (int f = m.n_internal; f < m.n_faces(); ++f) {
        const Face& fc = m.faces[f];
        const Vec2 v = boundary_velocity(fc, bc, t);
        for (int c = 0; c < 2; ++c)
            if (velocity_fixed(fc, c)) u[f][c] = v[c];
    }
}

struct MomentumInput
{
    const FaceVelocityField* u = nullptr;  // u^n
    const CellField* rho = nullptr;        // rho^n
    const CellField* rho_prev = nullptr;   // rho^{n-1}
    const FaceScalars* fluxes = nullptr;   // primal fluxes between rho^{n-1} and rho^n
    const CellField* p = nullptr;          // pressure used in the gradient term
    double t_new = 0.0;                    // t^{n+1}
};

/**
 * Velocity prediction: lumped inertia, centred dual-flux convection, viscous form, explicit
 * pressure gradient and lumped body force. Returns the predicted velocity on all faces.
 */
inline FaceVelocityField predict_velocity(const Mesh2D& m, const DiamondGeometry& g, const MomentumInput& in, double dt,
                                          const ViscosityModel& visc, const BoundaryVelocityFn& bc, const BodyForceFn& force)
{
    const int nf = m.n_faces();
    const FaceScalars rf = face_density(m, g, *in.rho);
    const FaceScalars rpf = face_density(m, g, *in.rho_prev);
    const DualFluxes dual = assemble_dual_mass_fluxes(m, g, *in.fluxes);

    FaceVelocityField known = zero_velocity(m);
    apply_velocity_bc(m, known, bc, in.t_new);

    std::vector<int> idx(2 * nf, -1);
    int n = 0;
    for (int f = 0; f < nf; ++f)
        for (int c = 0; c < 2; ++c)
            if (!velocity_fixed(m.faces[f], c)) idx[2 * f + c] = n++;

    Triplets trip;
    trip.reserve(static_cast<std::size_t>(n) * 24);
    Vector rhs = Vector::Zero(n);
    const std::vector<Vec2>& un = *in.u;
    const CellField& p = *in.p;

    auto couple = [&](int row, int f, int c, double a) {
        const int col = idx[2 * f + c];
        if (col >= 0)
            trip.emplace_back(row, col, a);
        else
            rhs[row] -= a * known[f][c];
    };

    for (int f = 0; f < nf; ++f) {
        const Face& fc = m.faces[f];
        const Vec2 fb = force ? force(fc, rf[f], in.t_new) : Vec2::Zero();
        for (int c = 0; c < 2; ++c) {
            const int row = idx[2 * f + c];
            if (row < 0) continue;
            trip.emplace_back(row, row, g.D[f] * rf[f] / dt);
            rhs[row] += g.D[f] * rpf[f] * un[f][c] / dt;
            // -int p div(phi) = -sum_K p_K |sigma| n_K,c
            rhs[row] += p[fc.K] * fc.measure * outward_normal(fc, fc.K)[c];
            if (!fc.boundary()) rhs[row] += p[fc.L] * fc.measure * outward_normal(fc, fc.L)[c];
            rhs[row] += g.D[f] * fb[c];
        }
    }

    for (std::size_t e = 0; e < g.sub_edges.size(); ++e) {
        const int fa = g.sub_edges[e].face_a, fb = g.sub_edges[e].face_b;
        const double F = dual.F[e];
        for (int c = 0; c < 2; ++c) {
            const int ra = idx[2 * fa + c], rb = idx[2 * fb + c];
            if (ra >= 0) {
                couple(ra, fa, c, 0.5 * F);
                couple(ra, fb, c, 0.5 * F);
            }
            if (rb >= 0) {
                couple(rb, fb, c, -0.5 * F);
                couple(rb, fa, c, -0.5 * F);
            }
        }
    }

    const ElementMatrix A = element_viscous_matrix(m.hx, m.hy, visc.kind);
    for (int K = 0; K < m.n_cells(); ++K) {
        const double mu = visc.cell_mu((*in.rho)[K]);
        if (mu == 0.0) continue;
        for (int a = 0; a < 4; ++a)
            for (int i = 0; i < 2; ++i) {
                const int row = idx[2 * m.cells[K].faces[a] + i];
                if (row < 0) continue;
                for (int b = 0; b < 4; ++b)
                    for (int j = 0; j < 2; ++j) couple(row, m.cells[K].faces[b], j, mu * A(2 * a + i, 2 * b + j));
            }
    }

    const Vector x = solve_linear(from_triplets(n, n, trip), rhs);
    FaceVelocityField out = known;
    for (int f = 0; f < nf; ++f)
        for (int c = 0; c < 2; ++c)
            if (idx[2 * f + c] >= 0) out[f][c] = x[idx[2 * f + c]];
    return out;
}

/// Boundary inflow data used by the upwind mass balances.
struct InflowState
{
    FaceScalars rho;  // per face, read on boundary faces with entering velocity
    FaceScalars z;
};

/// Signed volume flux |sigma| u.n leaving K (K = first cell of the face).
inline double volume_flux(const Face& f, const Vec2& u) { return f.measure * (u[0] * f.normal[0] + u[1] * f.normal[1]); }

inline double inflow_value(const FaceScalars& v, int f, const char* what)
{
    if (v.size() <= f) throw InvariantError(std::string("inflow through a boundary face without ") + what + " data");
    return v[f];
}

/**
 * Implicit upwind density prediction (rho0 - rho_init)/dt + div(rho0 u_init) = 0 used before the
 * first step. Returns rho0 and the primal fluxes it balances with.
 */
inline std::pair<CellField, FaceScalars> init_density_prediction(const Mesh2D& m, const CellField& rho_init,
                                                                 const FaceVelocityField& u_init, double dt,
                                                                 const InflowState& inflow = {})
{
    const int nc = m.n_cells();
    for (int K = 0; K < nc; ++K)
        if (!(rho_init[K] > 0.0)) throw InvariantError("density prediction: nonpositive initial density");
    Triplets trip;
    Vector rhs(nc);
    for (int K = 0; K < nc; ++K) {
        trip.emplace_back(K, K, m.cells[K].measure / dt);
        rhs[K] = m.cells[K].measure / dt * rho_init[K];
    }
    for (int f = 0; f < m.n_faces(); ++f) {
        const Face& fc = m.faces[f];
        const double v = volume_flux(fc, u_init[f]);
        if (fc.boundary()) {
            if (v > 0.0)
                trip.emplace_back(fc.K, fc.K, v);
            else if (v < 0.0)
                rhs[fc.K] -= v * inflow_value(inflow.rho, f, "density");
            continue;
        }
        const int up = v >= 0.0 ? fc.K : fc.L;
        trip.emplace_back(fc.K, up, v);
        trip.emplace_back(fc.L, up, -v);
    }
    CellField rho0 = solve_linear(from_triplets(nc, nc, trip), rhs);
    FaceScalars F(m.n_faces());
    for (int f = 0; f < m.n_faces(); ++f) {
        const Face& fc = m.faces[f];
        const double v = volume_flux(fc, u_init[f]);
        if (fc.boundary())
            F[f] = v > 0.0 ? v * rho0[fc.K] : (v < 0.0 ? v * inflow.rho[f] : 0.0);
        else
            F[f] = v * (v >= 0.0 ? rho0[fc.K] : rho0[fc.L]);
    }
    for (int K = 0; K < nc; ++K)
        if (!(rho0[K] > 0.0)) throw InvariantError("density prediction: nonpositive predicted density");
    return {rho0, F};
}

}  // namespace driftflux
