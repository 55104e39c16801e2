#pragma once

#include <cmath>
#include <stdexcept>

namespace driftflux
{

class DomainError : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

struct EosParams
{
    double rho_l = 1.0;
    double a2 = 1.0;

    void validate() const
    {
        if (!(rho_l > 0.0) || !(a2 > 0.0)) throw DomainError("eos: rho_l and a2 must be positive");
    }
};

inline double gas_density(double p, const EosParams& e) { return p / e.a2; }

inline bool admissible(double rho, double z, const EosParams& e) { return rho > 0.0 && z > 0.0 && z - rho + e.rho_l > 0.0; }

inline void require_admissible(double rho, double z, const EosParams& e)
{
    if (!admissible(rho, z, e)) throw DomainError("eos: (rho, z) outside the admissible set");
}

/// rho = z (1 - rho_l a^2 / p) + rho_l
inline double rho_from_pz(double p, double z, const EosParams& e)
{
    if (!(p > 0.0)) throw DomainError("eos: nonpositive pressure");
    return z * (1.0 - e.rho_l * e.a2 / p) + e.rho_l;
}

inline double drho_dp(double p, double z, const EosParams& e) { return z * e.rho_l * e.a2 / (p * p); }
inline double drho_dz(double p, const EosParams& e) { return 1.0 - e.rho_l * e.a2 / p; }

inline double rho_from_py(double p, double y, const EosParams& e)
{
    if (!(p > 0.0)) throw DomainError("eos: nonpositive pressure");
    const double rg = gas_density(p, e);
    return rg * e.rho_l / (e.rho_l * y + (1.0 - y) * rg);
}

/// d rho / dp at fixed mass fraction y.
inline double drho_dp_at_y(double p, double y, const EosParams& e)
{
    const double rho = rho_from_py(p, y, e);
    return rho * rho * y * e.a2 / (p * p);
}

/// p = a^2 z rho_l / (z + rho_l - rho)
inline double p_from_rho_z(double rho, double z, const EosParams& e)
{
    require_admissible(rho, z, e);
    return e.a2 * z * e.rho_l / (z + e.rho_l - rho);
}

/// Void fraction alpha_g = z / rho_g = (z + rho_l - rho) / rho_l.
inline double void_fraction(double rho, double z, const EosParams& e) { return (z + e.rho_l - rho) / e.rho_l; }

/// f = a^2 z log(rho_g(rho, z))
inline double free_energy(double rho, double z, const EosParams& e)
{
    require_admissible(rho, z, e);
    return e.a2 * z * std::log(z * e.rho_l / (z + e.rho_l - rho));
}

inline double free_energy_drho(double rho, double z, const EosParams& e)
{
    require_admissible(rho, z, e);
    return e.a2 * z / (z + e.rho_l - rho);
}

inline double free_energy_dz(double rho, double z, const EosParams& e)
{
    require_admissible(rho, z, e);
    const double w = z + e.rho_l - rho;
    return e.a2 * (std::log(z * e.rho_l / w) + (e.rho_l - rho) / w);
}

/// h_p(p) = a^2 [log(p/a^2) + (rho_l - p/a^2)/rho_l], equal to df/dz at pressure p
inline double h_p(double p, const EosParams& e)
{
    if (!(p > 0.0)) throw DomainError("eos: nonpositive pressure");
    const double rg = p / e.a2;
    return e.a2 * (std::log(rg) + (e.rho_l - rg) / e.rho_l);
}

inline double h_p_prime(double p, const EosParams& e)
{
    if (!(p > 0.0)) throw DomainError("eos: nonpositive pressure");
    const double rg = p / e.a2;
    return (e.rho_l - rg) / (e.rho_l * rg);
}

/// Mean-value pressure of h_p on [p1, p2]. Inverting h_p' = a^2/p - 1/rho_l at the secant slope
/// gives the logarithmic mean (p1 - p2) / log(p1/p2).
inline double drift_edge_pressure(double p1, double p2, const EosParams& e)
{
    if (!(p1 > 0.0) || !(p2 > 0.0)) throw DomainError("eos: nonpositive pressure");
    if (p1 == p2) return p1;
    const double d = p1 - p2;
    double ps = d / std::log1p(d / p2);
    const double lo = std::fmin(p1, p2), hi = std::fmax(p1, p2);
    if (ps < lo) ps = lo;
    if (ps > hi) ps = hi;
    return ps;
}

}  // namespace driftflux
