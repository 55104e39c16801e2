#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <string>
#include <type_traits>

#include "driftflux/eos.hpp"
#include "driftflux/gas_fraction.hpp"
#include "driftflux/linalg.hpp"
#include "driftflux/mesh.hpp"
#include "driftflux/momentum.hpp"

namespace driftflux
{

struct SloshingParams
{
    double length = 1.0, h_l = 1.0, h_g = 1.25;
    double g = 9.81, a0 = 0.1;
    double p_top = 1e5;
    int terms = 200;
    bool printed_series = false;  // k_n = 2 pi n / L and cos(k t) as printed
};

struct BubbleParams
{
    double width = 0.5, height = 2.0, fill = 1.5;
    double q = 8e-3 / 60.0;  // m^3/s
    double depth = 0.08;
    double inlet_center = 0.15;
    int inlet_cells = 4;
    double p0 = 1e5;
    double g = 9.81;
};

struct InterfaceParams
{
    double u0 = 1.0, p0 = 1.0;
    double y_left = 0.9, y_right = 0.1;
    double block = 0.3;  // x extent of the left state
};

struct SimulationConfig
{
    std::string case_name = "manufactured";
    int nx = 20, ny = 20;
    bool periodic = false;  // quiescent and random cases only
    double dt = 1e-3, t_end = 0.5;
    EosParams eos{5.0, 1.0};
    ViscosityModel viscosity{ViscosityModel::Kind::constant, 1e-2, 1.0};
    DriftModel drift;
    FluxKind flux = FluxKind::flux_splitting;
    bool renormalize = false;
    double y_floor = 1e-9;
    NewtonConfig newton;
    int max_outer = 20;
    std::string output_dir = "out";
    int dump_interval = 0;
    std::uint64_t seed = 1;
    SloshingParams sloshing;
    BubbleParams bubble;
    InterfaceParams interface;

    void validate() const
    {
        if (nx < 1 || ny < 1) throw ConfigError("config: mesh counts must be positive");
        if (!(dt > 0.0)) throw ConfigError("config: dt must be positive");
        if (!(t_end >= dt)) throw ConfigError("config: t_end must be at least dt");
        if (!(y_floor > 0.0) || y_floor >= 1.0) throw ConfigError("config: y_floor must lie in (0, 1)");
        if (dump_interval < 0) throw ConfigError("config: dump_interval must be nonnegative");
        if (max_outer < 1) throw ConfigError("config: max_outer must be at least 1");
        if (viscosity.kind == ViscosityModel::Kind::constant && !(viscosity.mu >= 0.0)) throw ConfigError("config: mu must be nonnegative");
        if (viscosity.kind == ViscosityModel::Kind::density_proportional && !(viscosity.c > 0.0))
            throw ConfigError("config: viscosity c must be positive");
        try {
            eos.validate();
            newton.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
        drift.validate();
    }
};

/// Case defaults; file values are layered on top.
inline SimulationConfig default_config(const std::string& name)
{
    SimulationConfig c;
    c.case_name = name;
    if (name == "manufactured") {
        c.eos = {5.0, 1.0};
        c.viscosity = {ViscosityModel::Kind::constant, 1e-2, 1.0};
        c.drift.kind = DriftModel::Kind::constant;
        c.drift.u_r = Vec2(0.0, 1.0);
        c.drift.D = 0.1;
        c.nx = c.ny = 20;
        c.dt = 1e-3;
        c.t_end = 0.5;
    } else if (name == "interface") {
        c.eos = {5.0, 1.0};
        c.viscosity = {ViscosityModel::Kind::constant, 1e-2, 1.0};
        c.nx = 40;
        c.ny = 4;
        c.dt = 0.01;
        c.t_end = 0.5;
    } else if (name == "sloshing") {
        c.eos = {1000.0, 1e5 / 1.2};
        c.viscosity = {ViscosityModel::Kind::density_proportional, 0.0, 1000.0};
        c.nx = 70;
        c.ny = 90;
        c.dt = 0.01;
        c.t_end = 1.8;
    } else if (name == "bubble_column") {
        c.eos = {1000.0, 1e5 / 1.2};
        c.viscosity = {ViscosityModel::Kind::constant, 1.0, 1.0};
        c.drift.kind = DriftModel::Kind::constant;
        c.drift.u_r = Vec2(0.0, 0.2);
        c.nx = 76;
        c.ny = 300;
        c.dt = 1e-2;
        c.t_end = 2.0;
    } else if (name == "quiescent" || name == "random") {
        c.eos = {5.0, 1.0};
        c.viscosity = {ViscosityModel::Kind::constant, 1e-2, 1.0};
        c.nx = c.ny = 4;
        c.dt = 1e-2;
        c.t_end = 0.1;
    } else {
        throw ConfigError("config: unknown case '" + name + "'");
    }
    return c;
}

inline ViscosityModel::Kind parse_viscosity_kind(const std::string& s)
{
    if (s == "constant") return ViscosityModel::Kind::constant;
    if (s == "proportional") return ViscosityModel::Kind::density_proportional;
    throw ConfigError("config: unknown viscosity model '" + s + "'");
}

inline DriftModel::Kind parse_drift_kind(const std::string& s)
{
    if (s == "constant") return DriftModel::Kind::constant;
    if (s == "darcy") return DriftModel::Kind::darcy;
    throw ConfigError("config: unknown drift model '" + s + "'");
}

inline FluxKind parse_flux_kind(const std::string& s)
{
    if (s == "flux_splitting") return FluxKind::flux_splitting;
    if (s == "godunov") return FluxKind::godunov;
    throw ConfigError("config: unknown flux function '" + s + "'");
}

inline SimulationConfig config_from_ptree(const boost::property_tree::ptree& pt)
{
    SimulationConfig c = default_config(pt.get<std::string>("case.name", "manufactured"));
    // present keys must parse; pt.get with a default would silently keep the default
    auto num = [&](const char* key, auto& v) {
        const auto child = pt.get_child_optional(key);
        if (!child) return;
        using T = std::decay_t<decltype(v)>;
        try {
            v = child->template get_value<T>();
        } catch (const boost::property_tree::ptree_bad_data&) {
            throw ConfigError(std::string("config: cannot parse ") + key + " = '" + child->data() + "'");
        }
    };
    num("mesh.nx", c.nx);
    num("mesh.ny", c.ny);
    num("mesh.periodic", c.periodic);
    num("time.dt", c.dt);
    num("time.t_end", c.t_end);
    num("eos.rho_l", c.eos.rho_l);
    num("eos.a2", c.eos.a2);
    if (auto s = pt.get_optional<std::string>("viscosity.model")) c.viscosity.kind = parse_viscosity_kind(*s);
    num("viscosity.mu", c.viscosity.mu);
    num("viscosity.c", c.viscosity.c);
    if (auto s = pt.get_optional<std::string>("drift.model")) c.drift.kind = parse_drift_kind(*s);
    num("drift.ur_x", c.drift.u_r[0]);
    num("drift.ur_y", c.drift.u_r[1]);
    num("drift.lambda", c.drift.lambda);
    num("drift.D", c.drift.D);
    if (auto s = pt.get_optional<std::string>("scheme.flux")) c.flux = parse_flux_kind(*s);
    num("scheme.renormalize", c.renormalize);
    num("scheme.y_floor", c.y_floor);
    num("solver.abs_tol", c.newton.abs_tol);
    num("solver.rel_tol", c.newton.rel_tol);
    num("solver.max_iter", c.newton.max_iter);
    num("solver.max_halvings", c.newton.max_halvings);
    num("solver.max_outer", c.max_outer);
    num("output.dir", c.output_dir);
    num("output.dump_interval", c.dump_interval);
    num("random.seed", c.seed);
    num("sloshing.a0", c.sloshing.a0);
    num("sloshing.g", c.sloshing.g);
    num("sloshing.length", c.sloshing.length);
    num("sloshing.h_l", c.sloshing.h_l);
    num("sloshing.h_g", c.sloshing.h_g);
    num("sloshing.p_top", c.sloshing.p_top);
    num("sloshing.terms", c.sloshing.terms);
    num("sloshing.printed_series", c.sloshing.printed_series);
    num("bubble.q", c.bubble.q);
    num("bubble.depth", c.bubble.depth);
    num("bubble.inlet_center", c.bubble.inlet_center);
    num("bubble.inlet_cells", c.bubble.inlet_cells);
    num("bubble.p0", c.bubble.p0);
    num("bubble.g", c.bubble.g);
    num("bubble.fill", c.bubble.fill);
    num("interface.u0", c.interface.u0);
    num("interface.p0", c.interface.p0);
    num("interface.y_left", c.interface.y_left);
    num("interface.y_right", c.interface.y_right);
    num("interface.block", c.interface.block);
    c.validate();
    return c;
}

inline SimulationConfig load_config(const std::string& path)
{
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::read_ini(path, pt);
    } catch (const boost::property_tree::ptree_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    try {
        return config_from_ptree(pt);
    } catch (const boost::property_tree::ptree_error& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

}  // namespace driftflux
