#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "driftflux/eos.hpp"
#include "driftflux/fields.hpp"
#include "driftflux/linalg.hpp"
#include "driftflux/mesh.hpp"
#include "driftflux/momentum.hpp"

namespace driftflux
{

/// (L p)_K = sum_{sigma=K|L} (rho_up/rho_sigma)(|sigma|^2/|D_sigma|)(p_K - p_L)
inline SparseMatrix assemble_pressure_operator(const Mesh2D& m, const DiamondGeometry& g, const FaceScalars& rho_face,
                                               const FaceScalars& rho_up)
{
    Triplets t;
    t.reserve(4 * static_cast<std::size_t>(m.n_internal));
    for (int f = 0; f < m.n_internal; ++f) {
        const Face& fc = m.faces[f];
        if (!(rho_face[f] > 0.0)) throw InvariantError("pressure operator: nonpositive face density");
        const double w = rho_up[f] / rho_face[f] * fc.measure * fc.measure / g.D[f];
        t.emplace_back(fc.K, fc.K, w);
        t.emplace_back(fc.K, fc.L, -w);
        t.emplace_back(fc.L, fc.L, w);
        t.emplace_back(fc.L, fc.K, -w);
    }
    return from_triplets(m.n_cells(), m.n_cells(), t);
}

/**
 * Renormalized pressure: B M^-1_{rho^n} B^t q = B M^-1_{sqrt(rho^n rho^{n-1})} B^t p^n, with the
 * constant mode fixed by keeping the |K|-weighted mean of p^n.
 */
inline CellField renormalize_pressure(const Mesh2D& m, const DiamondGeometry& g, const CellField& p, const FaceScalars& rho_face_n,
                                      const FaceScalars& rho_face_nm1)
{
    const int nc = m.n_cells();
    FaceScalars ones = FaceScalars::Ones(m.n_faces());
    FaceScalars gm(m.n_faces());
    for (int f = 0; f < m.n_faces(); ++f) {
        if (!(rho_face_n[f] > 0.0) || !(rho_face_nm1[f] > 0.0)) throw InvariantError("renormalization: nonpositive face density");
        gm[f] = std::sqrt(rho_face_n[f] * rho_face_nm1[f]);
    }
    const SparseMatrix A = assemble_pressure_operator(m, g, rho_face_n, ones);
    const Vector rhs_full = assemble_pressure_operator(m, g, gm, ones) * p;

    // replace the first row by the mean constraint
    Triplets t;
    for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A, k); it; ++it)
            if (it.row() != 0) t.emplace_back(it.row(), it.col(), it.value());
    double mean = 0.0;
    for (int K = 0; K < nc; ++K) {
        t.emplace_back(0, K, m.cells[K].measure);
        mean += m.cells[K].measure * p[K];
    }
    Vector rhs = rhs_full;
    rhs[0] = mean;
    return solve_linear(from_triplets(nc, nc, t), rhs);
}

struct CorrectionResult
{
    FaceVelocityField u;
    CellField p, z, rho;
    FaceScalars fluxes;
    int newton_iters = 0;
    int outer_iters = 0;
    double residual = 0.0;
};

struct CorrectionInput
{
    const CellField* rho = nullptr;         // rho^n
    const CellField* z = nullptr;           // rho^n y^n
    const CellField* p_momentum = nullptr;  // pressure used in the prediction step
    const FaceVelocityField* u_tilde = nullptr;
};

namespace detail
{

/// Upwind cell per face: internal faces pick K or L, boundary faces K (outflow) or -1 (inflow).
inline std::vector<int> upwind_pattern(const Mesh2D& m, const FaceScalars& v)
{
    std::vector<int> up(m.n_faces());
    for (int f = 0; f < m.n_faces(); ++f) {
        const Face& fc = m.faces[f];
        if (fc.boundary())
            up[f] = v[f] >= 0.0 ? fc.K : -1;
        else
            up[f] = v[f] >= 0.0 ? fc.K : fc.L;
    }
    return up;
}

inline bool same_pattern(const Mesh2D& m, const std::vector<int>& a, const std::vector<int>& b, const FaceScalars& v)
{
    const double vmax = inf_norm(v);
    for (int f = 0; f < m.n_faces(); ++f)
        if (a[f] != b[f] && std::abs(v[f]) > 1e-13 * vmax) return false;
    return true;
}

}  // namespace detail

inline constexpr int kReducedIterations = 200;
inline constexpr int kPolishSteps = 2;

/**
 * Coupled correction step. The Newton unknown is x = (p, z); rho = rho(p, z) through the state law.
 * Face volume fluxes are v_sigma = |sigma| u~.n_KL + c_sigma (dp_K - dp_L) with
 * c_sigma = dt |sigma|^2 / (|D_sigma| rho^n_sigma) and dp = p - p_momentum. The upwind choice is
 * frozen during each Newton solve and refreshed in an outer loop until it no longer changes. If the
 * coupled Newton fails, z is eliminated through its linear upwind transport and Newton continues on
 * p alone, with the upwind cell taken from the current iterate.
 */
inline CorrectionResult pressure_correction_step(const Mesh2D& m, const DiamondGeometry& g, const EosParams& eos,
                                                 const CorrectionInput& in, double dt, const NewtonConfig& cfg,
                                                 const InflowState& inflow = {}, int max_outer = 20)
{
    const int nc = m.n_cells(), nf = m.n_faces();
    const CellField& rho_n = *in.rho;
    const CellField& z_n = *in.z;
    const CellField& pm = *in.p_momentum;
    const FaceVelocityField& ut = *in.u_tilde;
    const FaceScalars rf = face_density(m, g, rho_n);

    FaceScalars v0(nf), c(nf);
    for (int f = 0; f < nf; ++f) {
        const Face& fc = m.faces[f];
        v0[f] = volume_flux(fc, ut[f]);
        c[f] = fc.boundary() ? 0.0 : dt * fc.measure * fc.measure / (g.D[f] * rf[f]);
    }
    std::vector<double> rho_in(nf, 0.0), z_in(nf, 0.0);
    for (int f = m.n_internal; f < nf; ++f)
        if (v0[f] < 0.0) {
            rho_in[f] = inflow_value(inflow.rho, f, "density");
            z_in[f] = inflow_value(inflow.z, f, "gas density");
        }

    // largest term of a residual row: the unsteady term or a pressure-driven flux
    double scale = 0.0;
    for (int K = 0; K < nc; ++K) scale = std::max(scale, m.cells[K].measure * rho_n[K] / dt);
    const double p_size = pm.cwiseAbs().maxCoeff();
    for (int f = 0; f < m.n_internal; ++f) scale = std::max(scale, c[f] * rf[f] * p_size);
    const double p_floor = 1e-12 * eos.a2 * eos.rho_l;

    auto face_flux = [&](const Vector& x, int f) {
        const Face& fc = m.faces[f];
        if (fc.boundary()) return v0[f];
        return v0[f] + c[f] * ((x[fc.K] - pm[fc.K]) - (x[fc.L] - pm[fc.L]));
    };

    auto admissible = [&](const Vector& x) {
        for (int K = 0; K < nc; ++K) {
            if (!(x[K] > p_floor) || !(x[nc + K] > 0.0)) return false;
            if (!(rho_from_pz(x[K], x[nc + K], eos) > 0.0)) return false;
        }
        return true;
    };

    Vector x(2 * nc);
    for (int K = 0; K < nc; ++K) {
        x[K] = pm[K];
        x[nc + K] = z_n[K];
    }
    if (!admissible(x)) {
        // p^n and z^n need not be compatible; start from the pressure that reproduces rho^n instead
        for (int K = 0; K < nc; ++K) x[K] = p_from_rho_z(rho_n[K], z_n[K], eos);
        if (!admissible(x)) throw InvariantError("pressure correction: inadmissible starting state");
    }

    CorrectionResult out;
    std::vector<int> up = detail::upwind_pattern(m, v0);
    std::ostringstream trace;

    bool dynamic = false;  // upwind from the current iterate instead of the frozen pattern
    auto upwind_at = [&](const Vector& xx, int f) {
        if (!dynamic) return up[f];
        const Face& fc = m.faces[f];
        const double v = face_flux(xx, f);
        if (fc.boundary()) return v >= 0.0 ? fc.K : -1;
        return v >= 0.0 ? fc.K : fc.L;
    };

    auto residual = [&](const Vector& xx) {
        Vector r(2 * nc);
        for (int K = 0; K < nc; ++K) {
            const double mK = m.cells[K].measure / dt;
            r[K] = mK * (rho_from_pz(xx[K], xx[nc + K], eos) - rho_n[K]);
            r[nc + K] = mK * (xx[nc + K] - z_n[K]);
        }
        for (int f = 0; f < nf; ++f) {
            const Face& fc = m.faces[f];
            const double v = face_flux(xx, f);
            const int u = upwind_at(xx, f);
            const double ru = u >= 0 ? rho_from_pz(xx[u], xx[nc + u], eos) : rho_in[f];
            const double zu = u >= 0 ? xx[nc + u] : z_in[f];
            r[fc.K] += v * ru;
            r[nc + fc.K] += v * zu;
            if (!fc.boundary()) {
                r[fc.L] -= v * ru;
                r[nc + fc.L] -= v * zu;
            }
        }
        return r;
    };
    auto jacobian = [&](const Vector& xx) {
        Triplets t;
        t.reserve(static_cast<std::size_t>(nc) * 4 + static_cast<std::size_t>(nf) * 16);
        for (int K = 0; K < nc; ++K) {
            const double mK = m.cells[K].measure / dt;
            t.emplace_back(K, K, mK * drho_dp(xx[K], xx[nc + K], eos));
            t.emplace_back(K, nc + K, mK * drho_dz(xx[K], eos));
            t.emplace_back(nc + K, nc + K, mK);
        }
        for (int f = 0; f < nf; ++f) {
            const Face& fc = m.faces[f];
            const double v = face_flux(xx, f);
            const int u = upwind_at(xx, f);
            const double ru = u >= 0 ? rho_from_pz(xx[u], xx[nc + u], eos) : rho_in[f];
            const double zu = u >= 0 ? xx[nc + u] : z_in[f];
            for (int side = 0; side < (fc.boundary() ? 1 : 2); ++side) {
                const int row = side == 0 ? fc.K : fc.L;
                const double s = side == 0 ? 1.0 : -1.0;
                if (!fc.boundary()) {
                    t.emplace_back(row, fc.K, s * c[f] * ru);
                    t.emplace_back(row, fc.L, -s * c[f] * ru);
                    t.emplace_back(nc + row, fc.K, s * c[f] * zu);
                    t.emplace_back(nc + row, fc.L, -s * c[f] * zu);
                }
                if (u >= 0) {
                    t.emplace_back(row, u, s * v * drho_dp(xx[u], xx[nc + u], eos));
                    t.emplace_back(row, nc + u, s * v * drho_dz(xx[u], eos));
                    t.emplace_back(nc + row, nc + u, s * v);
                }
            }
        }
        return from_triplets(2 * nc, 2 * nc, t);
    };

    // z for a given pressure: the linear upwind transport along the fluxes of p. Its matrix is an
    // M-matrix whatever the flow direction, so z stays positive.
    // implicit upwind transport of a cell quantity with the face fluxes of pressure pp
    auto transport = [&](const Vector& pp, const CellField& a_n, const std::vector<double>& a_in) {
        Triplets t;
        Vector b(nc);
        for (int K = 0; K < nc; ++K) {
            const double mK = m.cells[K].measure / dt;
            t.emplace_back(K, K, mK);
            b[K] = mK * a_n[K];
        }
        Vector w(2 * nc);
        w.head(nc) = pp;
        for (int f = 0; f < nf; ++f) {
            const Face& fc = m.faces[f];
            const double v = face_flux(w, f);
            if (fc.boundary()) {
                if (v >= 0.0)
                    t.emplace_back(fc.K, fc.K, v);
                else
                    b[fc.K] -= v * a_in[f];
                continue;
            }
            const int u = v >= 0.0 ? fc.K : fc.L;
            t.emplace_back(fc.K, u, v);
            t.emplace_back(fc.L, u, -v);
        }
        return Vector(solve_linear(from_triplets(nc, nc, t), b));
    };
    auto transport_z = [&](const Vector& pp) {
        Vector w(2 * nc);
        w.head(nc) = pp;
        w.tail(nc) = transport(pp, z_n, z_in);
        return w;
    };

    // Newton on p with z eliminated through transport_z; the direction comes from the coupled
    // Jacobian, whose p part is the derivative of the reduced residual.
    auto reduced_newton = [&](Vector xx) {
        NewtonResult res;
        xx = transport_z(xx.head(nc));
        if (!admissible(xx)) throw SolverError("pressure correction: transported z not admissible at the start", 0.0);
        Vector r = residual(xx);
        double nr = inf_norm(r);
        res.initial_residual = nr;
        const double tol = cfg.abs_tol * scale + cfg.rel_tol * nr;
        while (nr > tol) {
            if (res.iterations >= kReducedIterations) {
                std::ostringstream os;
                os << "pressure correction: reduced Newton did not converge, residual " << nr;
                throw SolverError(os.str(), nr);
            }
            const Vector dx = solve_linear(jacobian(xx), -r);
            bool accepted = false;
            double lambda = 1.0;
            for (int h = 0; h <= cfg.max_halvings; ++h, lambda *= 0.5) {
                const Vector pp = xx.head(nc) + lambda * dx.head(nc);
                if (!(pp.minCoeff() > p_floor)) continue;
                Vector xt = transport_z(pp);
                if (!admissible(xt)) continue;
                Vector rt = residual(xt);
                const double nt = inf_norm(rt);
                if (std::isfinite(nt) && nt < nr) {
                    xx = std::move(xt);
                    r = std::move(rt);
                    nr = nt;
                    accepted = true;
                    break;
                }
            }
            ++res.iterations;
            spdlog::debug("pressure correction: reduced Newton it {} residual {} (step {}, tol {})", res.iterations, nr, lambda, tol);
            if (!accepted) {
                std::ostringstream os;
                os << "pressure correction: reduced Newton damping exhausted, residual " << nr;
                throw SolverError(os.str(), nr);
            }
        }
        res.x = std::move(xx);
        res.residual = nr;
        return res;
    };

    // Extra Newton steps past the tolerance: the state law amplifies leftover mass residuals by
    // rho_l in nearly pure gas, and the norm is dominated by the liquid rows.
    auto polish = [&](Vector& xx, NewtonResult& nr) {
        for (int k = 0; k < kPolishSteps; ++k) {
            Vector xt;
            try {
                const Vector dx = solve_linear(jacobian(xx), -residual(xx));
                xt = dynamic ? transport_z((xx + dx).head(nc)) : Vector(xx + dx);
            } catch (const SolverError&) {
                return;
            }
            if (!admissible(xt)) return;
            const double nt = inf_norm(residual(xt));
            spdlog::debug("pressure correction: polish {} residual {} -> {}", k + 1, nr.residual, nt);
            if (!(nt <= 2.0 * nr.residual)) return;  // at the noise floor the norm only wobbles
            xx = std::move(xt);
            nr.residual = nt;
            ++nr.iterations;
        }
    };

    for (int outer = 1;; ++outer) {
        NewtonResult nr;
        try {
            nr = newton_solve(residual, jacobian, x, cfg, admissible, scale);
        } catch (const SolverError& e) {
            // Newton on the frozen pattern stalls when a face next to nearly pure liquid reverses:
            // the linearized z update crosses zero. Eliminate z and follow the iterate instead.
            if (dynamic) throw;
            spdlog::debug("pressure correction: coupled Newton failed ({}), switching to z elimination", e.what());
            trace << " [outer " << outer << ": coupled Newton failed: " << e.what() << "]";
            dynamic = true;
            nr = reduced_newton(x);
        }
        x = nr.x;
        polish(x, nr);
        out.newton_iters += nr.iterations;
        out.residual = nr.residual;

        FaceScalars v(nf);
        for (int f = 0; f < nf; ++f) v[f] = face_flux(x, f);
        const std::vector<int> next = detail::upwind_pattern(m, v);
        if (dynamic) up = next;  // the residual was already built on the pattern of x
        trace << " [outer " << outer << ": newton " << nr.iterations << ", residual " << nr.residual << "]";
        const bool settled = detail::same_pattern(m, up, next, v);
        if (settled || outer >= max_outer) {
            if (!settled) throw SolverError("pressure correction: upwind pattern did not settle;" + trace.str(), nr.residual);
            out.outer_iters = outer;
            // z from its transport and rho from the mass balance along the final fluxes, so both
            // balances hold to round-off; rho differs from rho(p, z) by the Newton tolerance only
            x = transport_z(x.head(nc));
            out.p = x.head(nc);
            out.z = x.tail(nc);
            out.u = ut;
            for (int f = 0; f < m.n_internal; ++f) {
                const Face& fc = m.faces[f];
                const double a = c[f] / fc.measure * ((x[fc.K] - pm[fc.K]) - (x[fc.L] - pm[fc.L]));
                out.u[f] += a * to_vec(fc.normal);
            }
            // rho is transported by the same operator as z, so z / rho keeps the bounds of y^n
            // and the mass balance holds to round-off; rho(p, z) matches it to Newton tolerance
            out.rho = transport(out.p, rho_n, rho_in);
            out.fluxes.resize(nf);
            for (int f = 0; f < nf; ++f) {
                const Face& fc = m.faces[f];
                const double vf = face_flux(x, f);
                if (fc.boundary())
                    out.fluxes[f] = vf * (vf >= 0.0 ? out.rho[fc.K] : rho_in[f]);
                else
                    out.fluxes[f] = vf * (vf >= 0.0 ? out.rho[fc.K] : out.rho[fc.L]);
            }
            return out;
        }
        up = next;
    }
}

}  // namespace driftflux
