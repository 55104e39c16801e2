#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftflux
{

using SparseMatrix = Eigen::SparseMatrix<double>;
using Vector = Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

class SolverError : public std::runtime_error
{
public:
    SolverError(const std::string& what, double residual) : std::runtime_error(what), residual(residual) {}
    double residual;
};

struct SparseSystem
{
    SparseMatrix A;
    Vector rhs;

    int n() const { return static_cast<int>(A.rows()); }
};

inline double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

inline double inf_norm(const SparseMatrix& A)
{
    Vector rows = Vector::Zero(A.rows());
    for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A, k); it; ++it) rows[it.row()] += std::abs(it.value());
    return inf_norm(rows);
}

inline SparseMatrix from_triplets(int rows, int cols, const Triplets& t)
{
    SparseMatrix A(rows, cols);
    A.setFromTriplets(t.begin(), t.end());
    A.makeCompressed();
    return A;
}

inline Vector solve_linear(const SparseMatrix& A, const Vector& b)
{
    if (A.rows() != A.cols() || A.rows() != b.size()) throw SolverError("solve_linear: dimension mismatch", 0.0);
    if (A.rows() == 0) return Vector();
    // rows, then columns, are equilibrated so that small rows and unknowns of very different
    // magnitudes keep their own relative accuracy
    Vector dr = Vector::Zero(A.rows()), dc = Vector::Zero(A.cols());
    for (int k = 0; k < A.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(A, k); it; ++it) dr[it.row()] = std::max(dr[it.row()], std::abs(it.value()));
    for (int i = 0; i < dr.size(); ++i) dr[i] = dr[i] > 0.0 ? 1.0 / dr[i] : 1.0;
    SparseMatrix S = dr.asDiagonal() * A;
    for (int k = 0; k < S.outerSize(); ++k)
        for (SparseMatrix::InnerIterator it(S, k); it; ++it) dc[it.col()] = std::max(dc[it.col()], std::abs(it.value()));
    for (int i = 0; i < dc.size(); ++i) dc[i] = dc[i] > 0.0 ? 1.0 / dc[i] : 1.0;
    S = S * dc.asDiagonal();
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(S);
    if (lu.info() != Eigen::Success) throw SolverError("solve_linear: factorization failed (singular matrix?)", inf_norm(b));
    const Vector sb = dr.cwiseProduct(b);
    Vector w = lu.solve(sb);
    // a couple of refinement sweeps for badly conditioned systems
    for (int k = 0; k < 2 && inf_norm(S * w - sb) > 1e-15 * (inf_norm(S) * inf_norm(w) + inf_norm(sb)); ++k) w += lu.solve(sb - S * w);
    const Vector x = dc.cwiseProduct(w);
    const double nA = inf_norm(A), nb = inf_norm(b);
    const double res = inf_norm(A * x - b);
    if (!x.allFinite() || res > 1e-12 * (nA * inf_norm(x) + nb)) {
        std::ostringstream os;
        os << "solve_linear: residual " << res << " above tolerance";
        throw SolverError(os.str(), res);
    }
    return x;
}

inline Vector solve_linear(const SparseSystem& s) { return solve_linear(s.A, s.rhs); }

struct NewtonConfig
{
    double abs_tol = 1e-11;
    double rel_tol = 1e-10;
    int max_iter = 50;
    int max_halvings = 30;

    void validate() const
    {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || max_iter < 1 || max_halvings < 0)
            throw std::invalid_argument("newton: tolerances must be positive and max_iter >= 1");
    }
};

struct NewtonResult
{
    Vector x;
    int iterations = 0;
    double residual = 0.0;
    double initial_residual = 0.0;
};

using ResidualFn = std::function<Vector(const Vector&)>;
using JacobianFn = std::function<SparseMatrix(const Vector&)>;
using AdmissibleFn = std::function<bool(const Vector&)>;

/**
 * Damped Newton iteration. Steps are halved until the trial point is admissible and
 * the residual infinity norm does not increase. Converged when
 * |r|_inf <= abs_tol*scale + rel_tol*|r(x0)|_inf.
 */
inline NewtonResult newton_solve(const ResidualFn& residual, const JacobianFn& jacobian, Vector x0, const NewtonConfig& cfg,
                                 const AdmissibleFn& admissible = {}, double scale = 1.0)
{
    cfg.validate();
    NewtonResult out;
    out.x = std::move(x0);
    if (admissible && !admissible(out.x)) throw SolverError("newton: initial guess not admissible", 0.0);
    Vector r = residual(out.x);
    double nr = inf_norm(r);
    out.initial_residual = nr;
    const double tol = cfg.abs_tol * scale + cfg.rel_tol * nr;
    while (nr > tol) {
        if (out.iterations >= cfg.max_iter) {
            std::ostringstream os;
            os << "newton: no convergence after " << cfg.max_iter << " iterations, residual " << nr;
            throw SolverError(os.str(), nr);
        }
        const Vector dx = solve_linear(jacobian(out.x), -r);
        double lambda = 1.0;
        bool accepted = false;
        Vector xt, rt;
        double nt = 0.0;
        for (int h = 0; h <= cfg.max_halvings; ++h, lambda *= 0.5) {
            xt = out.x + lambda * dx;
            if (admissible && !admissible(xt)) continue;
            rt = residual(xt);
            nt = inf_norm(rt);
            if (std::isfinite(nt) && nt <= nr) {
                accepted = true;
                break;
            }
        }
        ++out.iterations;
        spdlog::debug("newton it {}: residual {} -> {} (step {}, tol {})", out.iterations, nr, nt, lambda, tol);
        if (!accepted) {
            std::ostringstream os;
            os << "newton: damping exhausted at iteration " << out.iterations << ", residual " << nr;
            throw SolverError(os.str(), nr);
        }
        out.x = std::move(xt);
        r = std::move(rt);
        nr = nt;
    }
    out.residual = nr;
    return out;
}

}  // namespace driftflux
