#include <gtest/gtest.h>

#include <random>

#include "driftflux.hpp"

using namespace driftflux;

TEST(Mesh, SingleCell)
{
    const Mesh2D m = build_uniform_mesh(1, 1, 1.0, 1.0);
    EXPECT_EQ(m.n_cells(), 1);
    EXPECT_EQ(m.n_internal, 0);
    EXPECT_EQ(m.n_boundary(), 4);
}

TEST(Mesh, TwoCells)
{
    const Mesh2D m = build_uniform_mesh(2, 1, 1.0, 1.0);
    ASSERT_EQ(m.n_cells(), 2);
    EXPECT_DOUBLE_EQ(m.cells[0].measure, 0.5);
    EXPECT_DOUBLE_EQ(m.cells[1].measure, 0.5);
    ASSERT_EQ(m.n_internal, 1);
    const Face& f = m.faces[0];
    EXPECT_EQ(f.K, 0);
    EXPECT_EQ(f.L, 1);
    EXPECT_DOUBLE_EQ(f.measure, 1.0);
    EXPECT_DOUBLE_EQ(f.normal[0], 1.0);
    EXPECT_DOUBLE_EQ(f.normal[1], 0.0);
    EXPECT_DOUBLE_EQ(f.d_sigma, 0.5);
}

TEST(Mesh, InternalFaceCount)
{
    const Mesh2D m = build_uniform_mesh(20, 20, 1.0, 1.0);
    EXPECT_EQ(m.n_cells(), 400);
    EXPECT_EQ(m.n_internal, 20 * 19 + 20 * 19);
}

TEST(Mesh, PeriodicFacesHaveNoBoundary)
{
    const Mesh2D m = build_uniform_mesh(4, 3, 1.0, 1.0, {0.0, 0.0}, true, false);
    EXPECT_EQ(m.n_internal, 3 * 4 + 4 * 2);
    EXPECT_EQ(m.n_boundary(), 8);
}

TEST(Mesh, RejectsBadDimensions)
{
    EXPECT_THROW(build_uniform_mesh(0, 1, 1.0, 1.0), ConfigError);
    EXPECT_THROW(build_uniform_mesh(1, 1, -1.0, 1.0), ConfigError);
}

TEST(Mesh, NormalsPointFromKToL)
{
    const Mesh2D m = build_uniform_mesh(3, 4, 1.5, 2.0);
    for (int f = 0; f < m.n_internal; ++f) {
        const Face& fc = m.faces[f];
        const Point& a = m.cells[fc.K].center;
        const Point& b = m.cells[fc.L].center;
        const double d = (b[0] - a[0]) * fc.normal[0] + (b[1] - a[1]) * fc.normal[1];
        EXPECT_NEAR(d, fc.d_sigma, 1e-14);
    }
}

TEST(Diamond, TwoCellHalves)
{
    const Mesh2D m = build_uniform_mesh(2, 1, 1.0, 1.0);
    const DiamondGeometry g = build_diamond_geometry(m);
    // cone with base 1 and height 0.25
    EXPECT_NEAR(g.DK[0], 0.125, 1e-15);
    EXPECT_NEAR(g.DL[0], 0.125, 1e-15);
    EXPECT_NEAR(g.D[0], 0.25, 1e-15);
}

TEST(Diamond, SingleCellTiles)
{
    const Mesh2D m = build_uniform_mesh(1, 1, 1.0, 1.0);
    const DiamondGeometry g = build_diamond_geometry(m);
    EXPECT_NEAR(g.total_measure(), 1.0, 1e-15);
}

TEST(Diamond, Tiling)
{
    const Mesh2D m = build_uniform_mesh(4, 4, 1.0, 1.0);
    const DiamondGeometry g = build_diamond_geometry(m);
    EXPECT_NEAR(g.total_measure(), 1.0, 1e-13);
    const Mesh2D r = build_uniform_mesh(5, 3, 2.0, 0.7);
    EXPECT_NEAR(build_diamond_geometry(r).total_measure(), 1.4, 1e-13);
}

TEST(Fields, FaceDensity)
{
    const Mesh2D m = build_uniform_mesh(2, 1, 1.0, 1.0);
    const DiamondGeometry g = build_diamond_geometry(m);
    CellField c(2);
    c << 3.0, 3.0;
    EXPECT_DOUBLE_EQ(face_density(m, g, c)[0], 3.0);
    CellField rho(2);
    rho << 1.0, 3.0;
    EXPECT_DOUBLE_EQ(face_density(m, g, rho)[0], 2.0);

    DiamondGeometry w = g;
    w.DK[0] = 0.1;
    w.DL[0] = 0.3;
    w.D[0] = 0.4;
    rho << 4.0, 0.4;
    EXPECT_NEAR(face_density(m, w, rho)[0], 1.3, 1e-14);
}

TEST(Fields, FaceDensityRejectsNonpositive)
{
    const Mesh2D m = build_uniform_mesh(2, 1, 1.0, 1.0);
    CellField rho(2);
    rho << 1.0, 0.0;
    EXPECT_THROW(face_density(m, build_diamond_geometry(m), rho), InvariantError);
}

TEST(Fields, Upwind)
{
    EXPECT_EQ(upwind_value(2.0, 1.0, 3.0), 1.0);
    EXPECT_EQ(upwind_value(-2.0, 1.0, 3.0), 3.0);
    EXPECT_EQ(upwind_value(0.0, 1.0, 3.0), 1.0);
}

TEST(Fields, KineticNorm)
{
    DiamondGeometry g;
    g.D = {0.25};
    FaceVelocityField u{Vec2(3.0, 4.0)};
    FaceScalars rf(1);
    rf << 2.0;
    EXPECT_DOUBLE_EQ(weighted_kinetic_norm(u, rf, g), 12.5);
    u[0] *= 2.0;
    EXPECT_DOUBLE_EQ(weighted_kinetic_norm(u, rf, g), 50.0);
    u[0].setZero();
    EXPECT_EQ(weighted_kinetic_norm(u, rf, g), 0.0);
}

TEST(Fields, PressureSeminorm)
{
    const Mesh2D m = build_uniform_mesh(2, 1, 1.0, 1.0);
    const DiamondGeometry g = build_diamond_geometry(m);
    FaceScalars rf = FaceScalars::Constant(m.n_faces(), 2.0);
    CellField q(2);
    q << 1.0, 0.0;
    EXPECT_NEAR(pressure_seminorm(q, rf, m, g), 2.0, 1e-14);
    q.array() += 7.0;
    EXPECT_NEAR(pressure_seminorm(q, rf, m, g), 2.0, 1e-13);
    q << 5.0, 5.0;
    EXPECT_EQ(pressure_seminorm(q, rf, m, g), 0.0);
}

TEST(Fields, PressureSeminormMatchesSum)
{
    const Mesh2D m = build_uniform_mesh(4, 3, 1.0, 1.0);
    const DiamondGeometry g = build_diamond_geometry(m);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(0.5, 2.0);
    CellField q(m.n_cells());
    for (int K = 0; K < m.n_cells(); ++K) q[K] = U(rng);
    FaceScalars rf(m.n_faces());
    for (int f = 0; f < m.n_faces(); ++f) rf[f] = U(rng);
    double s = 0.0;
    for (int f = 0; f < m.n_internal; ++f) {
        const Face& fc = m.faces[f];
        const double jump = q[fc.K] - q[fc.L];
        s += fc.measure * fc.measure / (rf[f] * g.D[f]) * jump * jump;
    }
    EXPECT_NEAR(pressure_seminorm(q, rf, m, g), s, 1e-12 * s);
}

TEST(Fields, DiscreteL2)
{
    const Mesh2D m = build_uniform_mesh(5, 5, 1.0, 1.0);
    CellField v(m.n_cells());
    for (int K = 0; K < m.n_cells(); ++K) v[K] = m.cells[K].center[0] * m.cells[K].center[1];
    auto exact = [](const Point& x) { return x[0] * x[1]; };
    EXPECT_EQ(discrete_l2_error(m, v, exact), 0.0);
    CellField w = v.array() + 0.3;
    EXPECT_NEAR(discrete_l2_error(m, w, exact), 0.3, 1e-14);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    double s = 0.0;
    for (int K = 0; K < m.n_cells(); ++K) {
        w[K] = U(rng);
        s += m.cells[K].measure * w[K] * w[K];
    }
    EXPECT_NEAR(discrete_l2_error(m, w, [](const Point&) { return 0.0; }), std::sqrt(s), 1e-14);
}
