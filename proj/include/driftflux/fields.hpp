#pragma once

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <vector>

#include "driftflux/mesh.hpp"

namespace driftflux
{

using Vec2 = Eigen::Vector2d;
using CellField = Eigen::VectorXd;
using FaceScalars = Eigen::VectorXd;

/// One velocity vector per face (internal faces first, then boundary faces).
using FaceVelocityField = std::vector<Vec2>;

inline Vec2 to_vec(const Point& p) { return {p[0], p[1]}; }

struct State
{
    double t = 0.0;
    FaceVelocityField u;
    CellField p, rho, z, y;
    CellField rho_prev;
    FaceScalars fluxes;  // F_{sigma,K}: K->L on internal faces, outward on boundary faces
};

inline FaceVelocityField zero_velocity(const Mesh2D& m) { return FaceVelocityField(m.n_faces(), Vec2::Zero()); }

/// Half-diamond weighted face density; boundary faces take the cell value.
inline FaceScalars face_density(const Mesh2D& m, const DiamondGeometry& g, const CellField& rho)
{
    FaceScalars out(m.n_faces());
    for (int f = 0; f < m.n_faces(); ++f) {
        const Face& fc = m.faces[f];
        const double rK = rho[fc.K];
        if (!(rK > 0.0)) throw InvariantError("face_density: nonpositive density");
        if (fc.boundary()) {
            out[f] = rK;
            continue;
        }
        const double rL = rho[fc.L];
        if (!(rL > 0.0)) throw InvariantError("face_density: nonpositive density");
        out[f] = (g.DK[f] * rK + g.DL[f] * rL) / g.D[f];
    }
    return out;
}

/// Upstream value for the signed flux vK leaving K; ties go to K.
inline double upwind_value(double vK, double aK, double aL) { return vK >= 0.0 ? aK : aL; }

/// sum_sigma |D_sigma| rho_sigma |u_sigma|^2
inline double weighted_kinetic_norm(const FaceVelocityField& u, const FaceScalars& rho_face, const DiamondGeometry& g)
{
    double s = 0.0;
    for (std::size_t f = 0; f < u.size(); ++f) s += g.D[f] * rho_face[f] * u[f].squaredNorm();
    return s;
}

/// sum over internal faces of (1/rho_sigma)(|sigma|^2/|D_sigma|)(q_K - q_L)^2
inline double pressure_seminorm(const CellField& q, const FaceScalars& rho_face, const Mesh2D& m, const DiamondGeometry& g)
{
    double s = 0.0;
    for (int f = 0; f < m.n_internal; ++f) {
        const Face& fc = m.faces[f];
        const double dq = q[fc.K] - q[fc.L];
        s += fc.measure * fc.measure / (g.D[f] * rho_face[f]) * dq * dq;
    }
    return s;
}

/// (sum_K |K| (v_K - exact(x_K))^2)^(1/2)
inline double discrete_l2_error(const Mesh2D& m, const CellField& v, const std::function<double(const Point&)>& exact)
{
    double s = 0.0;
    for (int K = 0; K < m.n_cells(); ++K) {
        const double e = v[K] - exact(m.cells[K].center);
        s += m.cells[K].measure * e * e;
    }
    return std::sqrt(s);
}

/// (sum_sigma |D_sigma| |u_sigma - exact(x_sigma)|^2)^(1/2), all faces
inline double discrete_l2_error(const Mesh2D& m, const DiamondGeometry& g, const FaceVelocityField& u,
                                const std::function<Vec2(const Point&)>& exact)
{
    double s = 0.0;
    for (int f = 0; f < m.n_faces(); ++f) s += g.D[f] * (u[f] - exact(m.faces[f].midpoint)).squaredNorm();
    return std::sqrt(s);
}

inline double total(const Mesh2D& m, const CellField& v)
{
    double s = 0.0;
    for (int K = 0; K < m.n_cells(); ++K) s += m.cells[K].measure * v[K];
    return s;
}

/// Cell average of the four face velocities.
inline std::vector<Vec2> cell_velocity(const Mesh2D& m, const FaceVelocityField& u)
{
    std::vector<Vec2> out(m.n_cells(), Vec2::Zero());
    for (int K = 0; K < m.n_cells(); ++K)
        for (int s = 0; s < 4; ++s) out[K] += 0.25 * u[m.cells[K].faces[s]];
    return out;
}

}  // namespace driftflux
