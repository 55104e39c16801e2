#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <string>

#include "driftflux/config.hpp"
#include "driftflux/eos.hpp"
#include "driftflux/fields.hpp"
#include "driftflux/gas_fraction.hpp"
#include "driftflux/mesh.hpp"
#include "driftflux/momentum.hpp"

namespace driftflux
{

/// Everything a run needs besides the scheme parameters of the config.
struct Problem
{
    std::string name;
    Mesh2D mesh;
    DiamondGeometry geom;
    EosParams eos;
    ViscosityModel viscosity;
    DriftModel drift;
    FluxKind flux = FluxKind::flux_splitting;
    BoundaryVelocityFn boundary_velocity;
    BodyForceFn body_force;
    BoundaryScalarFn boundary_y;
    CellSourceFn gas_source;
    InflowState inflow;
    State initial;  // rho holds rho^{-1}, before the density prediction
    double y_floor = 1e-9;
    bool zero_forcing = true;
};

// ---------------------------------------------------------------- manufactured solution

/**
 * Potential forces (gravity, uniform acceleration) are discretized like the pressure gradient: on
 * the face-normal component only, as |sigma| d_sigma / |D_sigma| times the force density. A
 * tangential share could never be balanced by a hydrostatic pressure. With |D_sigma| = |sigma| d_sigma / 2
 * the weight is 2, which restores the full force summed over the faces of one direction.
 */
inline Vec2 normal_part(const Face& f, const Vec2& force)
{
    Vec2 out = Vec2::Zero();
    out[f.axis] = 2.0 * force[f.axis];
    return out;
}

struct ManufacturedFields
{
    double rho = 0.0, y = 0.0, z = 0.0, p = 0.0;
    Vec2 m = Vec2::Zero();
    Vec2 u = Vec2::Zero();
};

namespace detail
{

struct ManufacturedJet
{
    double rho, rho_t;
    double dr[2], ddr[2][2];
    double m[2], m_t[2];
    double dm[2][2], ddm[2][2][2];
};

inline ManufacturedJet manufactured_jet(double t, const Point& x)
{
    constexpr double pi = std::numbers::pi;
    const double s = std::sin(pi * t), c = std::cos(pi * t);
    const double s1 = std::sin(pi * x[0]), c1 = std::cos(pi * x[0]);
    const double s2 = std::sin(pi * x[1]), c2 = std::cos(pi * x[1]);
    ManufacturedJet j{};
    const double A = c1 - s2;
    j.rho = 1.0 + 0.25 * s * A;
    j.rho_t = 0.25 * pi * c * A;
    j.dr[0] = -0.25 * s * pi * s1;
    j.dr[1] = -0.25 * s * pi * c2;
    j.ddr[0][0] = -0.25 * s * pi * pi * c1;
    j.ddr[1][1] = 0.25 * s * pi * pi * s2;
    j.m[0] = -0.25 * c * s1;
    j.m[1] = -0.25 * c * c2;
    j.m_t[0] = 0.25 * pi * s * s1;
    j.m_t[1] = 0.25 * pi * s * c2;
    j.dm[0][0] = -0.25 * c * pi * c1;
    j.dm[1][1] = 0.25 * c * pi * s2;
    j.ddm[0][0][0] = 0.25 * c * pi * pi * s1;
    j.ddm[1][1][1] = 0.25 * c * pi * pi * c2;
    return j;
}

}  // namespace detail

inline constexpr double kManufacturedMu = 1e-2;
inline constexpr double kManufacturedD = 0.1;
inline const Vec2 kManufacturedUr{0.0, 1.0};

/// Closed-form fields on (0,1) x (-1/2,1/2) with rho_l = 5, a2 = 1.
inline ManufacturedFields manufactured_eval(double t, const Point& x)
{
    const auto j = detail::manufactured_jet(t, x);
    ManufacturedFields f;
    f.rho = j.rho;
    f.m = Vec2(j.m[0], j.m[1]);
    f.u = f.m / f.rho;
    f.z = (2.5 - 0.5 * f.rho) / 4.5;
    f.y = f.z / f.rho;
    f.p = p_from_rho_z(f.rho, f.z, EosParams{5.0, 1.0});
    return f;
}

struct ManufacturedForcing
{
    Vec2 S_mom = Vec2::Zero();
    double S_y = 0.0;
};

/**
 * S_mom = d_t m + div(m (x) u) + grad p - mu lap u - mu/3 grad div u,
 * S_y = d_t z + div(z u) + div(z (1-y) u_r) - D lap y.
 * The pressure is constant, so grad p vanishes.
 */
inline ManufacturedForcing manufactured_forcing(double t, const Point& x)
{
    const auto j = detail::manufactured_jet(t, x);
    const double r = j.rho;
    double u[2], du[2][2], ddu[2][2][2];
    for (int i = 0; i < 2; ++i) {
        u[i] = j.m[i] / r;
        for (int a = 0; a < 2; ++a) {
            du[i][a] = j.dm[i][a] / r - j.m[i] * j.dr[a] / (r * r);
            for (int b = 0; b < 2; ++b)
                ddu[i][a][b] = j.ddm[i][a][b] / r - (j.dm[i][a] * j.dr[b] + j.dm[i][b] * j.dr[a]) / (r * r) -
                               j.m[i] * j.ddr[a][b] / (r * r) + 2.0 * j.m[i] * j.dr[a] * j.dr[b] / (r * r * r);
        }
    }
    const double div_u = du[0][0] + du[1][1];
    ManufacturedForcing out;
    for (int i = 0; i < 2; ++i) {
        double conv = 0.0, lap = 0.0, grad_div = 0.0;
        for (int a = 0; a < 2; ++a) {
            conv += j.dm[i][a] * u[a];
            lap += ddu[i][a][a];
            grad_div += ddu[a][a][i];
        }
        conv += j.m[i] * div_u;
        out.S_mom[i] = j.m_t[i] + conv - kManufacturedMu * lap - kManufacturedMu / 3.0 * grad_div;
    }

    const double z = (2.5 - 0.5 * r) / 4.5, y = z / r;
    const double gz[2] = {-j.dr[0] / 9.0, -j.dr[1] / 9.0};
    const double Y1 = -(5.0 / 9.0) / (r * r), Y2 = (10.0 / 9.0) / (r * r * r);
    const double lap_rho = j.ddr[0][0] + j.ddr[1][1];
    const double lap_y = Y1 * lap_rho + Y2 * (j.dr[0] * j.dr[0] + j.dr[1] * j.dr[1]);
    double drift = 0.0, adv = 0.0;
    for (int a = 0; a < 2; ++a) {
        drift += kManufacturedUr[a] * (gz[a] * (1.0 - 2.0 * y) + y * y * j.dr[a]);
        adv += gz[a] * u[a];
    }
    out.S_y = -j.rho_t / 9.0 + adv + z * div_u + drift - kManufacturedD * lap_y;
    return out;
}

inline Problem build_manufactured(const SimulationConfig& c)
{
    Problem pb;
    pb.name = "manufactured";
    pb.mesh = build_uniform_mesh(c.nx, c.ny, 1.0, 1.0, {0.0, -0.5});
    pb.geom = build_diamond_geometry(pb.mesh);
    pb.eos = c.eos;
    pb.viscosity = c.viscosity;
    pb.drift = c.drift;
    pb.flux = c.flux;
    pb.y_floor = c.y_floor;
    pb.zero_forcing = false;
    // u.n vanishes on the boundary; drop the rounding residue so no face turns into an inlet
    auto wall_value = [](const Face& f, double t) {
        Vec2 u = manufactured_eval(t, f.midpoint).u;
        if (f.boundary()) u[f.axis] = 0.0;
        return u;
    };
    pb.boundary_velocity = wall_value;
    pb.boundary_y = [](const Face& f, double t) { return manufactured_eval(t, f.midpoint).y; };
    pb.body_force = [](const Face& f, double, double t) { return manufactured_forcing(t, f.midpoint).S_mom; };
    pb.gas_source = [](const Cell& k, double t) { return manufactured_forcing(t, k.center).S_y; };

    const Mesh2D& m = pb.mesh;
    State& s = pb.initial;
    s.u.resize(m.n_faces());
    for (int f = 0; f < m.n_faces(); ++f) s.u[f] = wall_value(m.faces[f], 0.0);
    s.rho.resize(m.n_cells());
    s.p.resize(m.n_cells());
    s.y.resize(m.n_cells());
    for (int K = 0; K < m.n_cells(); ++K) {
        const auto e = manufactured_eval(0.0, m.cells[K].center);
        s.rho[K] = e.rho;
        s.p[K] = e.p;
        s.y[K] = e.y;
    }
    s.z = s.rho.cwiseProduct(s.y);
    return pb;
}

// ---------------------------------------------------------------- sloshing

inline double sloshing_wavenumber(int n, const SloshingParams& sp)
{
    return (sp.printed_series ? 2.0 : 1.0) * std::numbers::pi * n / sp.length;
}

inline double sloshing_omega(int n, const SloshingParams& sp, const EosParams& eos)
{
    const double k = sloshing_wavenumber(n, sp);
    const double rho_g = gas_density(sp.p_top, eos);
    const double num = sp.g * k * (eos.rho_l - rho_g);
    const double den = rho_g / std::tanh(k * sp.h_g) + eos.rho_l / std::tanh(k * sp.h_l);
    return std::sqrt(num / den);
}

/// Linear-theory interface elevation, partial sum over the first `terms` odd modes.
inline double sloshing_interface(double x, double t, const SloshingParams& sp, const EosParams& eos)
{
    double s = x - 0.5 * sp.length;
    for (int n = 0; n < sp.terms; ++n) {
        const int odd = 2 * n + 1;
        const double k = sloshing_wavenumber(odd, sp);
        const double w = sloshing_omega(odd, sp, eos);
        const double arg = sp.printed_series ? k * t : k * x;
        s += 4.0 / (sp.length * k * k) * std::cos(w * t) * std::cos(arg);
    }
    return sp.a0 / sp.g * s;
}

/**
 * Pressure in discrete vertical balance with gravity: p_L = p_K - h_y rho_sigma g for vertically
 * adjacent cells, with p = p_top in the top row and rho = rho(p, y) cellwise.
 */
inline void hydrostatic_fill(const Mesh2D& m, const EosParams& eos, double p_top, double g, const CellField& y, CellField& p,
                             CellField& rho)
{
    p.resize(m.n_cells());
    rho.resize(m.n_cells());
    for (int i = 0; i < m.nx; ++i) {
        int K = m.cell_index(i, m.ny - 1);
        p[K] = p_top;
        rho[K] = rho_from_py(p[K], y[K], eos);
        for (int j = m.ny - 2; j >= 0; --j) {
            const int B = m.cell_index(i, j), T = K;
            double pb = p[T], rb = rho[T];
            for (int it = 0; it < 50; ++it) {
                const double next = p[T] + 0.5 * m.hy * g * (rho[T] + rb);
                rb = rho_from_py(next, y[B], eos);
                if (next == pb) break;
                pb = next;
            }
            p[B] = pb;
            rho[B] = rb;
            K = B;
        }
    }
}

/// Liquid height of each column, sum_j (1 - alpha_g) h_y.
inline std::vector<double> column_liquid_height(const Mesh2D& m, const CellField& rho, const CellField& z, const EosParams& eos)
{
    std::vector<double> h(m.nx, 0.0);
    for (int j = 0; j < m.ny; ++j)
        for (int i = 0; i < m.nx; ++i) {
            const int K = m.cell_index(i, j);
            h[i] += (1.0 - void_fraction(rho[K], z[K], eos)) * m.hy;
        }
    return h;
}

inline Problem build_sloshing(const SimulationConfig& c)
{
    const SloshingParams& sp = c.sloshing;
    Problem pb;
    pb.name = "sloshing";
    pb.mesh = build_uniform_mesh(c.nx, c.ny, sp.length, sp.h_l + sp.h_g);
    tag_all_boundary(pb.mesh, BoundaryTag::slip);
    pb.geom = build_diamond_geometry(pb.mesh);
    pb.eos = c.eos;
    pb.viscosity = c.viscosity;
    pb.drift = c.drift;
    pb.flux = c.flux;
    pb.y_floor = c.y_floor;
    pb.zero_forcing = false;
    const double a0 = sp.a0, g = sp.g;
    pb.body_force = [a0, g](const Face& f, double rho, double) { return normal_part(f, Vec2(rho * a0, -rho * g)); };

    const Mesh2D& m = pb.mesh;
    State& s = pb.initial;
    s.u = zero_velocity(m);
    s.y.resize(m.n_cells());
    for (int K = 0; K < m.n_cells(); ++K) s.y[K] = m.cells[K].center[1] < sp.h_l ? c.y_floor : 1.0;
    hydrostatic_fill(m, pb.eos, sp.p_top, g, s.y, s.p, s.rho);
    s.z = s.rho.cwiseProduct(s.y);
    return pb;
}

// ---------------------------------------------------------------- interface transport

/// Periodic channel with constant (u0, p0) and a step in y; slip walls top and bottom.
inline Problem build_interface(const SimulationConfig& c)
{
    const InterfaceParams& ip = c.interface;
    Problem pb;
    pb.name = "interface";
    pb.mesh = build_uniform_mesh(c.nx, c.ny, 1.0, static_cast<double>(c.ny) / c.nx, {0.0, 0.0}, true, false);
    tag_all_boundary(pb.mesh, BoundaryTag::slip);
    pb.geom = build_diamond_geometry(pb.mesh);
    pb.eos = c.eos;
    pb.viscosity = c.viscosity;
    pb.drift = c.drift;
    pb.flux = c.flux;
    pb.y_floor = c.y_floor;
    const Mesh2D& m = pb.mesh;
    State& s = pb.initial;
    s.u.assign(m.n_faces(), Vec2(ip.u0, 0.0));
    s.p = CellField::Constant(m.n_cells(), ip.p0);
    s.y.resize(m.n_cells());
    s.rho.resize(m.n_cells());
    for (int K = 0; K < m.n_cells(); ++K) {
        s.y[K] = m.cells[K].center[0] < ip.block ? ip.y_left : ip.y_right;
        s.rho[K] = rho_from_py(ip.p0, s.y[K], pb.eos);
    }
    s.z = s.rho.cwiseProduct(s.y);
    return pb;
}

// ---------------------------------------------------------------- bubble column

inline bool bubble_inlet_face(const Face& f, const Mesh2D& m, const BubbleParams& bp)
{
    if (!f.boundary() || f.axis != 1 || f.normal[1] > 0.0) return false;
    const double half = 0.5 * bp.inlet_cells * m.hx;
    return std::abs(f.midpoint[0] - bp.inlet_center) < half;
}

inline Problem build_bubble_column(const SimulationConfig& c)
{
    const BubbleParams bp = c.bubble;
    Problem pb;
    pb.name = "bubble_column";
    pb.mesh = build_uniform_mesh(c.nx, c.ny, bp.width, bp.height);
    Mesh2D& m = pb.mesh;
    tag_all_boundary(m, BoundaryTag::wall);
    tag_boundary(m, BoundaryTag::outlet, [&](const Face& f) { return f.axis == 1 && f.normal[1] > 0.0; });
    tag_boundary(m, BoundaryTag::inlet, [&](const Face& f) { return bubble_inlet_face(f, m, bp); });
    pb.geom = build_diamond_geometry(m);
    pb.eos = c.eos;
    pb.viscosity = c.viscosity;
    pb.drift = c.drift;
    pb.flux = c.flux;
    pb.y_floor = c.y_floor;
    pb.zero_forcing = false;

    int n_inlet = 0;
    double area = 0.0;
    for (int f = m.n_internal; f < m.n_faces(); ++f)
        if (m.faces[f].tag == BoundaryTag::inlet) {
            ++n_inlet;
            area += m.faces[f].measure * bp.depth;
        }
    if (n_inlet == 0) throw ConfigError("bubble column: inlet covers no boundary face");
    const double u_imp = bp.q / area;
    pb.boundary_velocity = [u_imp](const Face& f, double) { return f.tag == BoundaryTag::inlet ? Vec2(0.0, u_imp) : Vec2::Zero(); };
    const double g = bp.g;
    pb.body_force = [g](const Face& f, double rho, double) { return normal_part(f, Vec2(0.0, -rho * g)); };

    const double rho_in = gas_density(bp.p0, pb.eos);
    pb.inflow.rho = FaceScalars::Zero(m.n_faces());
    pb.inflow.z = FaceScalars::Zero(m.n_faces());
    for (int f = m.n_internal; f < m.n_faces(); ++f)
        if (m.faces[f].tag == BoundaryTag::inlet) {
            pb.inflow.rho[f] = rho_in;
            pb.inflow.z[f] = rho_in;
        }

    State& s = pb.initial;
    s.u = zero_velocity(m);
    apply_velocity_bc(m, s.u, pb.boundary_velocity, 0.0);
    s.y.resize(m.n_cells());
    for (int K = 0; K < m.n_cells(); ++K) s.y[K] = m.cells[K].center[1] < bp.fill ? c.y_floor : 1.0;
    hydrostatic_fill(m, pb.eos, bp.p0, g, s.y, s.p, s.rho);
    s.z = s.rho.cwiseProduct(s.y);
    return pb;
}

// ---------------------------------------------------------------- small analysis cases

inline Problem build_quiescent(const SimulationConfig& c)
{
    Problem pb;
    pb.name = "quiescent";
    pb.mesh = build_uniform_mesh(c.nx, c.ny, 1.0, 1.0, {0.0, 0.0}, c.periodic, c.periodic);
    pb.geom = build_diamond_geometry(pb.mesh);
    pb.eos = c.eos;
    pb.viscosity = c.viscosity;
    pb.drift = c.drift;
    pb.flux = c.flux;
    pb.y_floor = c.y_floor;
    State& s = pb.initial;
    s.u = zero_velocity(pb.mesh);
    s.p = CellField::Constant(pb.mesh.n_cells(), 0.5);
    s.y = CellField::Constant(pb.mesh.n_cells(), 0.4);
    s.rho = CellField::Constant(pb.mesh.n_cells(), rho_from_py(0.5, 0.4, pb.eos));
    s.z = s.rho.cwiseProduct(s.y);
    return pb;
}

/// Walls (or a periodic box), zero forcing, random admissible (p, y) per cell and random internal velocities.
inline Problem build_random(const SimulationConfig& c)
{
    Problem pb = build_quiescent(c);
    pb.name = "random";
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> up(0.3, 3.0), uy(0.05, 0.95), uu(-0.5, 0.5);
    const Mesh2D& m = pb.mesh;
    State& s = pb.initial;
    for (int K = 0; K < m.n_cells(); ++K) {
        s.p[K] = up(rng);
        s.y[K] = uy(rng);
        s.rho[K] = rho_from_py(s.p[K], s.y[K], pb.eos);
    }
    s.z = s.rho.cwiseProduct(s.y);
    for (int f = 0; f < m.n_internal; ++f) s.u[f] = Vec2(uu(rng), uu(rng));
    return pb;
}

inline Problem build_case(const SimulationConfig& c)
{
    c.validate();
    if (c.case_name == "manufactured") return build_manufactured(c);
    if (c.case_name == "sloshing") return build_sloshing(c);
    if (c.case_name == "interface") return build_interface(c);
    if (c.case_name == "bubble_column") return build_bubble_column(c);
    if (c.case_name == "quiescent") return build_quiescent(c);
    if (c.case_name == "random") return build_random(c);
    throw ConfigError("unknown case '" + c.case_name + "'");
}

}  // namespace driftflux
