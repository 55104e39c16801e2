#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "driftflux.hpp"

using namespace driftflux;

namespace
{

const EosParams kEos{5.0, 1.0};

template <class F>
double bisect(F g, double lo, double hi)
{
    double glo = g(lo);
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        if ((gm < 0.0) == (glo < 0.0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

FaceVelocityField random_wall_velocity(const Mesh2D& m, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    FaceVelocityField u(m.n_faces());
    for (int f = 0; f < m.n_faces(); ++f) {
        u[f] = Vec2(U(rng), U(rng));
        if (m.faces[f].boundary()) u[f].setZero();
    }
    return u;
}

}  // namespace

// ---------------------------------------------------------------- dual fluxes

TEST(DualFluxes, ZeroPrimal)
{
    const Mesh2D m = build_uniform_mesh(3, 2, 1.0, 1.0);
    const DiamondGeometry g = build_diamond_geometry(m);
    const DualFluxes d = assemble_dual_mass_fluxes(m, g, FaceScalars::Zero(m.n_faces()));
    for (double F : d.F) EXPECT_EQ(F, 0.0);
}

TEST(DualFluxes, UniformFieldIsDivergenceFree)
{
    const Mesh2D m = build_uniform_mesh(2, 2, 1.0, 1.0);
    const DiamondGeometry g = build_diamond_geometry(m);
    const double c = 1.7;
    FaceScalars primal(m.n_faces());
    for (int f = 0; f < m.n_faces(); ++f) primal[f] = volume_flux(m.faces[f], Vec2(c, 0.0));
    const DualFluxes d = assemble_dual_mass_fluxes(m, g, primal);
    const CellField rho = CellField::Constant(m.n_cells(), 2.0);
    const FaceScalars r = dual_mass_balance_residual(m, g, d, rho, rho, 0.1);
    for (int f = 0; f < m.n_internal; ++f) EXPECT_NEAR(r[f], 0.0, 1e-14);
    // the flux of a constant field through a sub-edge is c times its projected length
    for (std::size_t e = 0; e < g.sub_edges.size(); ++e) {
        const SubEdge& se = g.sub_edges[e];
        const Point& a = m.faces[se.face_a].midpoint;
        const Point& b = m.faces[se.face_b].midpoint;
        const Point& xK = m.cells[se.cell].center;
        // sub-edge joins the cell center to a vertex, between the half-diamonds of faces a and b
        const Point vtx{a[0] + b[0] - xK[0], a[1] + b[1] - xK[1]};
        const double tx = vtx[0] - xK[0], ty = vtx[1] - xK[1];
        // normal rotated from the tangent, oriented from the half-diamond of a to that of b
        double nx = ty, ny = -tx;
        const double side = (b[0] - a[0]) * nx + (b[1] - a[1]) * ny;
        if (side < 0.0) {
            nx = -nx;
            ny = -ny;
        }
        EXPECT_NEAR(d.F[e], c * nx, 1e-14) << "sub-edge " << e;
    }
}

TEST(DualFluxes, BalanceCarriesOverToDiamonds)
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> U(0.5, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Mesh2D m = build_uniform_mesh(4, 3, 1.0, 0.8);
        const DiamondGeometry g = build_diamond_geometry(m);
        CellField rho_prev(m.n_cells());
        for (int K = 0; K < m.n_cells(); ++K) rho_prev[K] = U(rng);
        const FaceVelocityField u = random_wall_velocity(m, rng);
        const double dt = 0.05;
        const auto [rho, F] = init_density_prediction(m, rho_prev, u, dt);
        const FaceScalars r = dual_mass_balance_residual(m, g, assemble_dual_mass_fluxes(m, g, F), rho, rho_prev, dt);
        const double scale = std::max(1.0, F.cwiseAbs().maxCoeff());
        for (int f = 0; f < m.n_faces(); ++f) EXPECT_LT(std::abs(r[f]), 1e-10 * scale);
    }
}

// ---------------------------------------------------------------- momentum

TEST(Viscous, Dissipative)
{
    const Mesh2D m = build_uniform_mesh(4, 3, 1.0, 0.6);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    CellField rho(m.n_cells());
    for (int K = 0; K < m.n_cells(); ++K) rho[K] = 1.0 + std::abs(U(rng));
    ViscosityModel constant{ViscosityModel::Kind::constant, 0.3, 1.0};
    ViscosityModel prop{ViscosityModel::Kind::density_proportional, 0.0, 50.0};
    for (int k = 0; k < 100; ++k) {
        FaceVelocityField v(m.n_faces());
        for (auto& x : v) x = Vec2(U(rng), U(rng));
        EXPECT_GE(viscous_form(m, v, v, constant, rho), -1e-14);
        EXPECT_GE(viscous_form(m, v, v, prop, rho), -1e-14);
        EXPECT_EQ(viscous_form(m, zero_velocity(m), v, constant, rho), 0.0);
    }
    const FaceVelocityField c(m.n_faces(), Vec2(0.4, -1.1));
    EXPECT_NEAR(viscous_form(m, c, c, constant, rho), 0.0, 1e-13);
}

TEST(Viscous, ElementMatrixAnnihilatesConstants)
{
    for (auto kind : {ViscosityModel::Kind::constant, ViscosityModel::Kind::density_proportional}) {
        const ElementMatrix A = element_viscous_matrix(0.3, 0.5, kind);
        Eigen::Matrix<double, 8, 1> ones_x = Eigen::Matrix<double, 8, 1>::Zero();
        for (int s = 0; s < 4; ++s) ones_x[2 * s] = 1.0;
        EXPECT_LT((A * ones_x).norm(), 1e-13);
        EXPECT_LT((A - A.transpose()).norm(), 1e-13);
    }
}

TEST(Momentum, ZeroStateStaysZero)
{
    const Mesh2D m = build_uniform_mesh(3, 3, 1.0, 1.0);
    const DiamondGeometry g = build_diamond_geometry(m);
    const FaceVelocityField u = zero_velocity(m);
    const CellField rho = CellField::Constant(m.n_cells(), 1.3);
    const CellField p = CellField::Constant(m.n_cells(), 0.7);
    const FaceScalars F = FaceScalars::Zero(m.n_faces());
    MomentumInput in{&u, &rho, &rho, &F, &p, 0.1};
    ViscosityModel visc{ViscosityModel::Kind::constant, 0.1, 1.0};
    const FaceVelocityField ut = predict_velocity(m, g, in, 0.1, visc, {}, {});
    for (const auto& v : ut) EXPECT_LT(v.norm(), 1e-14);
}

TEST(Momentum, ConstantVelocityIsPreserved)
{
    const Mesh2D m = build_uniform_mesh(4, 4, 1.0, 1.0, {0.0, 0.0}, true, true);
    const DiamondGeometry g = build_diamond_geometry(m);
    const Vec2 u0(0.3, -0.2);
    const FaceVelocityField u(m.n_faces(), u0);
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> U(0.5, 2.0);
    CellField rho_prev(m.n_cells());
    for (int K = 0; K < m.n_cells(); ++K) rho_prev[K] = U(rng);
    // densities linked by the upwind mass balance with velocity u0
    const double dt = 0.05;
    const auto [rho, F] = init_density_prediction(m, rho_prev, u, dt);
    const CellField p = CellField::Constant(m.n_cells(), 1.0);
    MomentumInput in{&u, &rho, &rho_prev, &F, &p, dt};
    ViscosityModel visc{ViscosityModel::Kind::constant, 0.05, 1.0};
    const FaceVelocityField ut = predict_velocity(m, g, in, dt, visc, {}, {});
    for (const auto& v : ut) EXPECT_LT((v - u0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DensityPrediction, Trivial)
{
    const Mesh2D m = build_uniform_mesh(3, 2, 1.0, 1.0);
    CellField rho(m.n_cells());
    rho << 1, 2, 3, 4, 5, 6;
    const auto [r0, F0] = init_density_prediction(m, rho, zero_velocity(m), 0.1);
    EXPECT_LT((r0 - rho).norm(), 1e-14);
    EXPECT_EQ(F0.cwiseAbs().maxCoeff(), 0.0);

    const Mesh2D pm = build_uniform_mesh(4, 4, 1.0, 1.0, {0.0, 0.0}, true, true);
    const CellField c = CellField::Constant(pm.n_cells(), 1.5);
    const auto [r1, F1] = init_density_prediction(pm, c, FaceVelocityField(pm.n_faces(), Vec2(0.7, 0.2)), 0.1);
    EXPECT_LT((r1 - c).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(DensityPrediction, TwoCellOracle)
{
    const Mesh2D m = build_uniform_mesh(2, 1, 1.0, 1.0);
    FaceVelocityField u = zero_velocity(m);
    u[0] = Vec2(1.0, 0.0);
    CellField rho(2);
    rho << 1.0, 2.0;
    const double dt = 0.1;
    const auto [r, F] = init_density_prediction(m, rho, u, dt);
    // |K|/dt (r - rho) + v r_K = 0 in K, with v = 1 leaving K
    Eigen::Matrix2d A;
    A << 0.5 / dt + 1.0, 0.0, -1.0, 0.5 / dt;
    const Eigen::Vector2d ref = A.partialPivLu().solve(Eigen::Vector2d(0.5 / dt * 1.0, 0.5 / dt * 2.0));
    EXPECT_NEAR(r[0], ref[0], 1e-14);
    EXPECT_NEAR(r[1], ref[1], 1e-14);
    EXPECT_NEAR(F[0], ref[0], 1e-14);
}

// ---------------------------------------------------------------- pressure correction

TEST(PressureOperator, SingleEdge)
{
    const Mesh2D m = build_uniform_mesh(2, 1, 1.0, 1.0);
    const DiamondGeometry g = build_diamond_geometry(m);
    const FaceScalars ones = FaceScalars::Ones(m.n_faces());
    const SparseMatrix L = assemble_pressure_operator(m, g, ones, ones);
    Vector p(2);
    p << 1.0, 0.0;
    const Vector Lp = L * p;
    EXPECT_NEAR(Lp[0], 4.0, 1e-14);
    EXPECT_NEAR(Lp[1], -4.0, 1e-14);
    EXPECT_LT((L * Vector::Constant(2, 3.0)).norm(), 1e-14);
}

TEST(PressureOperator, QuadraticFormIsSeminorm)
{
    const Mesh2D m = build_uniform_mesh(4, 5, 1.0, 1.0);
    const DiamondGeometry g = build_diamond_geometry(m);
    std::mt19937_64 rng(51);
    std::uniform_real_distribution<double> U(0.5, 2.0);
    FaceScalars rf(m.n_faces()), ru(m.n_faces());
    for (int f = 0; f < m.n_faces(); ++f) {
        rf[f] = U(rng);
        ru[f] = U(rng);
    }
    Vector p(m.n_cells());
    for (int K = 0; K < m.n_cells(); ++K) p[K] = U(rng);
    const double q = p.dot(assemble_pressure_operator(m, g, rf, ru) * p);
    const FaceScalars w = rf.cwiseQuotient(ru);
    EXPECT_NEAR(q, pressure_seminorm(p, w, m, g), 1e-12 * q);
}

TEST(Renormalization, Properties)
{
    const Mesh2D m = build_uniform_mesh(3, 3, 1.0, 1.0);
    const DiamondGeometry g = build_diamond_geometry(m);
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> U(0.5, 2.0);
    CellField p(m.n_cells()), rho_n(m.n_cells()), rho_m(m.n_cells());
    for (int K = 0; K < m.n_cells(); ++K) {
        p[K] = U(rng);
        rho_n[K] = U(rng);
        rho_m[K] = U(rng);
    }
    const FaceScalars fn = face_density(m, g, rho_n), fm = face_density(m, g, rho_m);
    EXPECT_LT((renormalize_pressure(m, g, p, fn, fn) - p).cwiseAbs().maxCoeff(), 1e-12);
    const CellField c = CellField::Constant(m.n_cells(), 2.5);
    EXPECT_LT((renormalize_pressure(m, g, c, fn, fm) - c).cwiseAbs().maxCoeff(), 1e-12);
    const CellField q = renormalize_pressure(m, g, p, fn, fm);
    const double lhs = pressure_seminorm(q, fn, m, g), rhs = pressure_seminorm(p, fm, m, g);
    EXPECT_LE(lhs, rhs + 1e-12 * std::max(1.0, rhs));
}

TEST(PressureCorrection, UniformStateIsFixed)
{
    const Mesh2D m = build_uniform_mesh(4, 4, 1.0, 1.0, {0.0, 0.0}, true, true);
    const DiamondGeometry g = build_diamond_geometry(m);
    const double p0 = 0.8, y0 = 0.3;
    const CellField rho = CellField::Constant(m.n_cells(), rho_from_py(p0, y0, kEos));
    const CellField z = rho * y0;
    const CellField p = CellField::Constant(m.n_cells(), p0);
    const FaceVelocityField ut(m.n_faces(), Vec2(0.4, 0.1));
    CorrectionInput in{&rho, &z, &p, &ut};
    const CorrectionResult r = pressure_correction_step(m, g, kEos, in, 0.05, NewtonConfig{});
    EXPECT_LT((r.p.array() - p0).abs().maxCoeff(), 1e-12);
    EXPECT_LT((r.z - z).cwiseAbs().maxCoeff(), 1e-12);
    for (const auto& u : r.u) EXPECT_LT((u - Vec2(0.4, 0.1)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PressureCorrection, TwoCellOracle)
{
    // a single internal face: given the face flux v, both balances are explicit, and the velocity
    // update closes a scalar equation in v solved by bisection
    const Mesh2D m = build_uniform_mesh(2, 1, 1.0, 1.0);
    const DiamondGeometry g = build_diamond_geometry(m);
    CellField rho_n(2), y_n(2);
    y_n << 0.3, 0.6;
    rho_n << rho_from_py(0.9, y_n[0], kEos), rho_from_py(0.7, y_n[1], kEos);
    const CellField z_n = rho_n.cwiseProduct(y_n);
    CellField pm(2);
    pm << p_from_rho_z(rho_n[0], z_n[0], kEos), p_from_rho_z(rho_n[1], z_n[1], kEos);
    FaceVelocityField ut = zero_velocity(m);
    ut[0] = Vec2(0.4, 0.0);
    const double dt = 0.1, mK = 0.5;
    const double rho_face = face_density(m, g, rho_n)[0];
    const double c = dt / (g.D[0] * rho_face);

    struct Balance
    {
        double rK, rL, zK, zL;
    };
    auto balance = [&](double v) {
        const double a = dt * v / mK;
        Balance b;
        b.rK = rho_n[0] / (1.0 + a);
        b.zK = z_n[0] / (1.0 + a);
        b.rL = rho_n[1] + a * b.rK;
        b.zL = z_n[1] + a * b.zK;
        return b;
    };
    auto gfun = [&](double v) {
        const Balance b = balance(v);
        const double pK = p_from_rho_z(b.rK, b.zK, kEos), pL = p_from_rho_z(b.rL, b.zL, kEos);
        return v - 0.4 - c * ((pK - pm[0]) - (pL - pm[1]));
    };
    const double v = bisect(gfun, 0.0, 0.4);
    const Balance b = balance(v);

    CorrectionInput in{&rho_n, &z_n, &pm, &ut};
    const CorrectionResult r = pressure_correction_step(m, g, kEos, in, dt, NewtonConfig{});
    EXPECT_NEAR(r.z[0], b.zK, 1e-9);
    EXPECT_NEAR(r.z[1], b.zL, 1e-9);
    EXPECT_NEAR(r.rho[0], b.rK, 1e-9);
    EXPECT_NEAR(r.rho[1], b.rL, 1e-9);
    EXPECT_NEAR(r.p[0], p_from_rho_z(b.rK, b.zK, kEos), 1e-9);
    EXPECT_NEAR(r.p[1], p_from_rho_z(b.rL, b.zL, kEos), 1e-9);
    EXPECT_NEAR(r.u[0][0], v, 1e-9);
    EXPECT_NEAR(r.fluxes[0], v * r.rho[0], 1e-9);
}

TEST(PressureCorrection, MassIsConserved)
{
    const Mesh2D m = build_uniform_mesh(5, 4, 1.0, 1.0);
    const DiamondGeometry g = build_diamond_geometry(m);
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> U(0.2, 0.8);
    CellField rho(m.n_cells()), z(m.n_cells()), p(m.n_cells());
    for (int K = 0; K < m.n_cells(); ++K) {
        p[K] = 0.5 + U(rng);
        const double y = U(rng);
        rho[K] = rho_from_py(p[K], y, kEos);
        z[K] = rho[K] * y;
    }
    const FaceVelocityField ut = random_wall_velocity(m, rng);
    CorrectionInput in{&rho, &z, &p, &ut};
    const CorrectionResult r = pressure_correction_step(m, g, kEos, in, 0.02, NewtonConfig{});
    EXPECT_NEAR(total(m, r.rho), total(m, rho), 1e-13 * total(m, rho));
    EXPECT_NEAR(total(m, r.z), total(m, z), 1e-13 * total(m, rho));
    for (int K = 0; K < m.n_cells(); ++K) {
        EXPECT_GT(r.z[K], 0.0);
        EXPECT_LE(r.z[K] / r.rho[K], 0.8 + 1e-12);
        EXPECT_GE(r.z[K] / r.rho[K], 0.2 - 1e-12);
        EXPECT_NEAR(rho_from_pz(r.p[K], r.z[K], kEos), r.rho[K], 1e-9);
    }
}

// ---------------------------------------------------------------- gas fraction

TEST(MassFraction, InactiveDriftIsDivision)
{
    const Mesh2D m = build_uniform_mesh(3, 1, 1.0, 1.0);
    CellField rho(3), z(3);
    rho << 1.0, 2.0, 4.0;
    z << 0.5, 0.5, 1.0;
    const FaceScalars F = FaceScalars::Zero(m.n_faces());
    MassFractionInput in{&rho, &z, &F, 0.1, {}, {}};
    int its = -1;
    const CellField y = correct_mass_fraction(m, kEos, in, 0.1, DriftModel{}, FluxKind::godunov, NewtonConfig{}, &its);
    EXPECT_EQ(its, 0);
    EXPECT_DOUBLE_EQ(y[0], 0.5);
    EXPECT_DOUBLE_EQ(y[1], 0.25);
    EXPECT_DOUBLE_EQ(y[2], 0.25);
}

TEST(MassFraction, SingleCell)
{
    const Mesh2D m = build_uniform_mesh(1, 1, 1.0, 1.0);
    CellField rho(1), z(1);
    rho << 1.2;
    z << 0.3;
    const FaceScalars F = FaceScalars::Zero(m.n_faces());
    MassFractionInput in{&rho, &z, &F, 0.1, {}, {}};
    DriftModel model;
    model.u_r = Vec2(0.3, 0.5);
    model.D = 0.1;
    const CellField y = correct_mass_fraction(m, kEos, in, 0.1, model, FluxKind::flux_splitting, NewtonConfig{});
    EXPECT_NEAR(y[0], 0.25, 1e-14);
}

TEST(MassFraction, TwoCellOracle)
{
    const Mesh2D m = build_uniform_mesh(2, 1, 1.0, 1.0);
    CellField rho(2), z(2);
    rho << 1.0, 1.0;
    z << 0.3, 0.6;
    const FaceScalars F = FaceScalars::Zero(m.n_faces());
    MassFractionInput in{&rho, &z, &F, 0.1, {}, {}};
    DriftModel model;
    model.u_r = Vec2(0.5, 0.0);
    const double dt = 0.2, mK = 0.5;
    // G = rho_up |sigma| u_r.n = 0.5; y_K + y_L = 0.9 from the two balances
    const double a = dt * 0.5 / mK;
    const double yK = bisect([&](double s) { return s - 0.3 + a * flux_splitting_g(s, 0.9 - s); }, 0.0, 0.9);
    const CellField y = correct_mass_fraction(m, kEos, in, dt, model, FluxKind::flux_splitting, NewtonConfig{});
    EXPECT_NEAR(y[0], yK, 1e-10);
    EXPECT_NEAR(y[1], 0.9 - yK, 1e-10);
    EXPECT_GT(y.minCoeff(), 0.0);
    EXPECT_LE(y.maxCoeff(), 1.0);
}

TEST(MassFraction, DarcyKeepsBoundsAndGasMass)
{
    const Mesh2D m = build_uniform_mesh(4, 4, 1.0, 1.0);
    std::mt19937_64 rng(81);
    std::uniform_real_distribution<double> U(0.1, 0.9);
    CellField rho(m.n_cells()), z(m.n_cells());
    for (int K = 0; K < m.n_cells(); ++K) {
        const double y = U(rng), p = 0.5 + U(rng);
        rho[K] = rho_from_py(p, y, kEos);
        z[K] = rho[K] * y;
    }
    const FaceScalars F = FaceScalars::Zero(m.n_faces());
    MassFractionInput in{&rho, &z, &F, 0.1, {}, {}};
    DriftModel model;
    model.kind = DriftModel::Kind::darcy;
    model.lambda = 0.5;
    const CellField y = correct_mass_fraction(m, kEos, in, 0.1, model, FluxKind::godunov, NewtonConfig{});
    EXPECT_NEAR(total(m, rho.cwiseProduct(y)), total(m, z), 1e-12);
    EXPECT_GT(y.minCoeff(), 0.0);
    EXPECT_LE(y.maxCoeff(), 1.0);
    const DriftDissipation d = drift_dissipation_check(m, kEos, rho, z, y, F, model, FluxKind::godunov, 0.1);
    EXPECT_GE(d.margin, -1e-10 * std::max(1.0, std::abs(d.T2)));
    EXPECT_GE(d.T2_min, -1e-12);
}

// ---------------------------------------------------------------- diagnostics

TEST(Diagnostics, ConservationReport)
{
    const Mesh2D m = build_uniform_mesh(4, 4, 1.0, 1.0);
    const DiamondGeometry g = build_diamond_geometry(m);
    State s;
    s.rho = CellField::Constant(m.n_cells(), 2.0);
    s.rho_prev = s.rho;
    s.y = CellField::Constant(m.n_cells(), 0.25);
    s.u = FaceVelocityField(m.n_faces(), Vec2(1.0, -0.5));
    const Conservation c = conservation_report(m, g, s);
    EXPECT_NEAR(c.mass, 2.0, 1e-14);
    EXPECT_NEAR(c.gas_mass, 0.5, 1e-14);
    EXPECT_NEAR(c.momentum[0], 2.0, 1e-13);
    EXPECT_NEAR(c.momentum[1], -1.0, 1e-13);
}

TEST(Diagnostics, BoundsCheck)
{
    CellField rho = CellField::Constant(2, 1.0), p = rho, z = CellField::Constant(2, 0.5), y = z;
    EXPECT_TRUE(check_bounds(rho, p, z, y, 1e-9).ok);
    y[1] = 1.0 + 1e-9;
    const BoundsResult r = check_bounds(rho, p, z, y, 1e-9);
    EXPECT_FALSE(r.ok);
    EXPECT_NE(r.message.find("y out of range in cell 1"), std::string::npos);
    y[1] = 0.5;
    p[0] = 0.0;
    EXPECT_NE(check_bounds(rho, p, z, y, 1e-9).message.find("p out of range"), std::string::npos);
}

TEST(Diagnostics, PressureWorkZeroVelocity)
{
    const Mesh2D m = build_uniform_mesh(3, 1, 1.0, 1.0);
    CellField rho(3), z(3);
    rho << 1.0, 2.0, 3.0;
    z << 0.5, 0.4, 0.3;
    EXPECT_EQ(pressure_work_inequality_check(m, rho, rho, z, z, FaceScalars::Zero(m.n_faces()), 0.1, kEos), 0.0);
}

TEST(Diagnostics, PressureWorkTwoCells)
{
    const Mesh2D m = build_uniform_mesh(2, 1, 1.0, 1.0);
    std::mt19937_64 rng(91);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        CellField rs(2), zs(2);
        for (int K = 0; K < 2; ++K) {
            const double p = 0.3 + 2.0 * U(rng), y = 0.05 + 0.9 * U(rng);
            rs[K] = rho_from_py(p, y, kEos);
            zs[K] = rs[K] * y;
        }
        FaceScalars v = FaceScalars::Zero(m.n_faces());
        v[0] = 4.0 * U(rng) - 2.0;
        const double dt = 0.1, a = dt * std::abs(v[0]) / 0.5;
        const int up = v[0] >= 0.0 ? 0 : 1, dn = 1 - up;
        CellField r(2), z(2);
        r[up] = rs[up] / (1.0 + a);
        z[up] = zs[up] / (1.0 + a);
        r[dn] = rs[dn] + a * r[up];
        z[dn] = zs[dn] + a * z[up];
        const double margin = pressure_work_inequality_check(m, r, rs, z, zs, v, dt, kEos);
        EXPECT_GE(margin, -1e-12 * std::max(1.0, std::abs(margin)));
    }
}

TEST(Diagnostics, PressureWorkRejectsUnbalancedInput)
{
    const Mesh2D m = build_uniform_mesh(2, 1, 1.0, 1.0);
    CellField rho = CellField::Constant(2, 1.0), z = CellField::Constant(2, 0.5);
    FaceScalars v = FaceScalars::Zero(m.n_faces());
    v[0] = 1.0;
    EXPECT_THROW(pressure_work_inequality_check(m, rho, rho, z, z, v, 0.1, kEos), PreconditionError);
}

TEST(Diagnostics, SegmentPoint)
{
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> U(0.05, 0.95);
    auto point = [&] {
        const double p = 0.3 + 2.0 * U(rng), y = U(rng);
        const double rho = rho_from_py(p, y, kEos);
        return std::pair{rho, rho * y};
    };
    for (int k = 0; k < 500; ++k) {
        const auto [rA, zA] = point();
        const auto [rB, zB] = point();
        for (int swap = 0; swap < 2; ++swap) {
            const SegmentPoint s = swap ? segment_point_check(kEos, rB, zB, rA, zA) : segment_point_check(kEos, rA, zA, rB, zB);
            EXPECT_GE(s.zeta, 0.0);
            EXPECT_LE(s.zeta, 1.0);
            EXPECT_GE(s.T, -1e-14);
        }
        // tangent planes at A and B meet above the barycentre
        const SegmentPoint s = segment_point_check(kEos, rA, zA, rB, zB);
        const double h = 1e-6;
        auto grad = [&](double r, double z) {
            return std::pair{(free_energy(r + h, z, kEos) - free_energy(r - h, z, kEos)) / (2 * h),
                             (free_energy(r, z + h, kEos) - free_energy(r, z - h, kEos)) / (2 * h)};
        };
        const auto [gAr, gAz] = grad(rA, zA);
        const auto [gBr, gBz] = grad(rB, zB);
        const double left = free_energy(rA, zA, kEos) + gAr * (s.rho_bar - rA) + gAz * (s.z_bar - zA);
        const double right = free_energy(rB, zB, kEos) + gBr * (s.rho_bar - rB) + gBz * (s.z_bar - zB);
        EXPECT_NEAR(left, right, 1e-7);
    }
}

TEST(Diagnostics, SegmentPointAffineBranch)
{
    // along a line of constant gas density f is affine
    const double p = 1.3, rg = p / kEos.a2;
    const double aA = 0.3, aB = 0.6;
    const SegmentPoint s =
        segment_point_check(kEos, aA * rg + (1 - aA) * kEos.rho_l, aA * rg, aB * rg + (1 - aB) * kEos.rho_l, aB * rg);
    EXPECT_EQ(s.zeta, 0.5);
    EXPECT_NEAR(s.T, 0.0, 1e-14);
}
