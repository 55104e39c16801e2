#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace driftflux
{

using Point = std::array<double, 2>;

class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

class InvariantError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

enum class BoundaryTag { wall, slip, inlet, outlet };

// Local face slots of a cell.
enum Side : int { west = 0, east = 1, south = 2, north = 3 };

struct Cell
{
    double measure = 0.0;
    Point center{};
    std::array<int, 4> faces{};  // indexed by Side
};

struct Face
{
    int K = -1;
    int L = -1;          // -1 on the boundary
    Point normal{};      // n_KL, or outward normal of K on the boundary
    double measure = 0.0;
    Point midpoint{};
    double d_sigma = 0.0;  // |x_K - x_L|, or dist(x_K, sigma) on the boundary
    int axis = 0;          // 0: normal along x, 1: normal along y
    BoundaryTag tag = BoundaryTag::wall;

    bool boundary() const { return L < 0; }
};

/**
 * Uniform rectangular mesh. Cells are numbered row-major (K = j*nx + i).
 * Internal faces come first in `faces`, vertical ones before horizontal ones,
 * then the boundary faces (west, east, south, north sides).
 */
struct Mesh2D
{
    int nx = 0, ny = 0;
    double Lx = 0.0, Ly = 0.0;
    Point origin{};
    double hx = 0.0, hy = 0.0;
    bool periodic_x = false, periodic_y = false;
    std::vector<Cell> cells;
    std::vector<Face> faces;
    int n_internal = 0;

    int n_cells() const { return static_cast<int>(cells.size()); }
    int n_faces() const { return static_cast<int>(faces.size()); }
    int n_boundary() const { return n_faces() - n_internal; }
    int cell_index(int i, int j) const { return j * nx + i; }
    double domain_measure() const { return Lx * Ly; }
};

inline Mesh2D build_uniform_mesh(int nx, int ny, double Lx, double Ly, Point origin = {0.0, 0.0},
                                 bool periodic_x = false, bool periodic_y = false)
{
    if (nx < 1 || ny < 1 || !(Lx > 0.0) || !(Ly > 0.0))
        throw ConfigError("mesh: dimensions must be positive");
    if ((periodic_x && nx < 2) || (periodic_y && ny < 2))
        throw ConfigError("mesh: a periodic direction needs at least two cells");

    Mesh2D m;
    m.nx = nx;
    m.ny = ny;
    m.Lx = Lx;
    m.Ly = Ly;
    m.origin = origin;
    m.hx = Lx / nx;
    m.hy = Ly / ny;
    m.periodic_x = periodic_x;
    m.periodic_y = periodic_y;

    m.cells.resize(static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            Cell& c = m.cells[m.cell_index(i, j)];
            c.measure = m.hx * m.hy;
            c.center = {origin[0] + (i + 0.5) * m.hx, origin[1] + (j + 0.5) * m.hy};
        }

    auto add = [&](int K, int L, Point n, double len, Point mid, double d, int axis, int sideK, int sideL) {
        Face f;
        f.K = K;
        f.L = L;
        f.normal = n;
        f.measure = len;
        f.midpoint = mid;
        f.d_sigma = d;
        f.axis = axis;
        const int idx = static_cast<int>(m.faces.size());
        m.faces.push_back(f);
        m.cells[K].faces[sideK] = idx;
        if (L >= 0) m.cells[L].faces[sideL] = idx;
    };

    // vertical internal faces
    const int ix_end = periodic_x ? nx : nx - 1;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < ix_end; ++i) {
            const int K = m.cell_index(i, j);
            const int L = m.cell_index((i + 1) % nx, j);
            add(K, L, {1.0, 0.0}, m.hy, {origin[0] + (i + 1) * m.hx, m.cells[K].center[1]}, m.hx, 0, east, west);
        }
    // horizontal internal faces
    const int jy_end = periodic_y ? ny : ny - 1;
    for (int j = 0; j < jy_end; ++j)
        for (int i = 0; i < nx; ++i) {
            const int K = m.cell_index(i, j);
            const int L = m.cell_index(i, (j + 1) % ny);
            add(K, L, {0.0, 1.0}, m.hx, {m.cells[K].center[0], origin[1] + (j + 1) * m.hy}, m.hy, 1, north, south);
        }
    m.n_internal = static_cast<int>(m.faces.size());

    if (!periodic_x)
        for (int j = 0; j < ny; ++j) {
            const int Kw = m.cell_index(0, j);
            add(Kw, -1, {-1.0, 0.0}, m.hy, {origin[0], m.cells[Kw].center[1]}, 0.5 * m.hx, 0, west, 0);
            const int Ke = m.cell_index(nx - 1, j);
            add(Ke, -1, {1.0, 0.0}, m.hy, {origin[0] + Lx, m.cells[Ke].center[1]}, 0.5 * m.hx, 0, east, 0);
        }
    if (!periodic_y)
        for (int i = 0; i < nx; ++i) {
            const int Ks = m.cell_index(i, 0);
            add(Ks, -1, {0.0, -1.0}, m.hx, {m.cells[Ks].center[0], origin[1]}, 0.5 * m.hy, 1, south, 0);
            const int Kn = m.cell_index(i, ny - 1);
            add(Kn, -1, {0.0, 1.0}, m.hx, {m.cells[Kn].center[0], origin[1] + Ly}, 0.5 * m.hy, 1, north, 0);
        }
    return m;
}

/// Outward normal of face f seen from cell K.
inline Point outward_normal(const Face& f, int K)
{
    if (f.K == K) return f.normal;
    return {-f.normal[0], -f.normal[1]};
}

/// +1 if K is the first cell of f, -1 otherwise.
inline double orientation(const Face& f, int K) { return f.K == K ? 1.0 : -1.0; }

/// Sets the tag of boundary faces accepted by pred(face).
template <class Pred>
void tag_boundary(Mesh2D& m, BoundaryTag tag, Pred pred)
{
    for (int f = m.n_internal; f < m.n_faces(); ++f)
        if (pred(m.faces[f])) m.faces[f].tag = tag;
}

inline void tag_all_boundary(Mesh2D& m, BoundaryTag tag)
{
    tag_boundary(m, tag, [](const Face&) { return true; });
}

/// Segment separating the half-diamonds of faces a and b inside one cell.
struct SubEdge
{
    int cell = -1;
    int face_a = -1, face_b = -1;
    Point p0{}, p1{};  // cell center, cell vertex
    double measure = 0.0;
    Point normal_a{};  // unit normal pointing out of D_{K,a}
};

struct DiamondGeometry
{
    std::vector<double> D;    // |D_sigma| (boundary: |D_{K,sigma}|)
    std::vector<double> DK;   // |D_{K,sigma}|
    std::vector<double> DL;   // |D_{L,sigma}|, zero on the boundary
    std::vector<SubEdge> sub_edges;  // four per cell, cell-major

    double total_measure() const
    {
        double s = 0.0;
        for (double d : D) s += d;
        return s;
    }
};

// Pairs (a, b) of adjacent half-diamonds and the vertex direction they share.
inline constexpr std::array<std::array<int, 2>, 4> kSubEdgePairs{{{east, north}, {north, west}, {west, south}, {south, east}}};

inline DiamondGeometry build_diamond_geometry(const Mesh2D& m)
{
    DiamondGeometry g;
    const int nf = m.n_faces();
    g.D.assign(nf, 0.0);
    g.DK.assign(nf, 0.0);
    g.DL.assign(nf, 0.0);
    const double hx = m.hx, hy = m.hy;
    for (int f = 0; f < nf; ++f) {
        const Face& fc = m.faces[f];
        const double dist = fc.axis == 0 ? 0.5 * hx : 0.5 * hy;
        const double half = 0.5 * fc.measure * dist;
        g.DK[f] = half;
        if (!fc.boundary()) g.DL[f] = half;
        g.D[f] = g.DK[f] + g.DL[f];
    }

    const Point offs[4] = {{-0.5 * hx, 0.0}, {0.5 * hx, 0.0}, {0.0, -0.5 * hy}, {0.0, 0.5 * hy}};
    g.sub_edges.reserve(4 * m.cells.size());
    for (int K = 0; K < m.n_cells(); ++K) {
        const Cell& c = m.cells[K];
        for (auto [a, b] : kSubEdgePairs) {
            SubEdge e;
            e.cell = K;
            e.face_a = c.faces[a];
            e.face_b = c.faces[b];
            e.p0 = c.center;
            e.p1 = {c.center[0] + offs[a][0] + offs[b][0], c.center[1] + offs[a][1] + offs[b][1]};
            const double tx = e.p1[0] - e.p0[0], ty = e.p1[1] - e.p0[1];
            e.measure = std::hypot(tx, ty);
            // unit normal to the segment, oriented away from the midpoint of face a
            Point n{-ty / e.measure, tx / e.measure};
            const double dot = n[0] * offs[a][0] + n[1] * offs[a][1];
            if (dot > 0.0) n = {-n[0], -n[1]};
            e.normal_a = n;
            g.sub_edges.push_back(e);
        }
    }
    return g;
}

}  // namespace driftflux
