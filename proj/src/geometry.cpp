/*
 * Copyright 2026 The hklab Authors. All rights reserved.
 * This file is licensed to you under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License. You may obtain a copy
 * of the License at http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software distributed under
 * the License is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR REPRESENTATIONS
 * OF ANY KIND, either express or implied. See the License for the specific language
 * governing permissions and limitations under the License.
 */
#include <hklab/geometry.hpp>

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numbers>

namespace hklab::geometry {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> axis_weights(int n_vertices, double h, bool periodic)
{
    std::vector<double> w(static_cast<size_t>(n_vertices), h);
    if (!periodic) {
        w.front() *= 0.5;
        w.back() *= 0.5;
    }
    return w;
}

void assemble_stiffness(Mesh& mesh)
{
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(mesh.edges.size() * 4);
    for (const Edge& e : mesh.edges) {
        const double k = e.coupling();
        trips.emplace_back(e.a, e.b, k);
        trips.emplace_back(e.b, e.a, k);
        trips.emplace_back(e.a, e.a, -k);
        trips.emplace_back(e.b, e.b, -k);
    }
    const int n = mesh.vertex_count();
    mesh.stiffness.resize(n, n);
    mesh.stiffness.setFromTriplets(trips.begin(), trips.end());
    mesh.stiffness.makeCompressed();
}

void build_product(Mesh& mesh, const std::vector<int>& cells, const std::vector<double>& extent,
                   const std::vector<bool>& periodic)
{
    const int dim = static_cast<int>(cells.size());
    mesh.dim = dim;
    mesh.periodic = periodic;
    mesh.axis_n.resize(dim);
    mesh.spacing.resize(dim);
    std::vector<std::vector<double>> w(dim);
    for (int d = 0; d < dim; ++d) {
        mesh.axis_n[d] = periodic[d] ? cells[d] : cells[d] + 1;
        mesh.spacing[d] = extent[d] / cells[d];
        w[d] = axis_weights(mesh.axis_n[d], mesh.spacing[d], periodic[d]);
    }
    int n = 1;
    for (int d = 0; d < dim; ++d) n *= mesh.axis_n[d];

    mesh.points.resize(n);
    mesh.weights.resize(n);
    mesh.on_boundary.assign(n, 0);
    for (int v = 0; v < n; ++v) {
        const auto c = mesh.coords(v);
        Vec3 p = Vec3::Zero();
        double wv = 1.0;
        for (int d = 0; d < dim; ++d) {
            p[d] = c[d] * mesh.spacing[d];
            wv *= w[d][c[d]];
        }
        mesh.points[v] = p;
        mesh.weights[v] = wv;
        if (!periodic[0] && (c[0] == 0 || c[0] == mesh.axis_n[0] - 1)) {
            mesh.on_boundary[v] = 1;
            mesh.boundary_vertices.push_back(v);
            Vec3 nrm = Vec3::Zero();
            nrm[0] = c[0] == 0 ? -1.0 : 1.0;
            mesh.normals.push_back(nrm);
            mesh.principal_curvatures.emplace_back(static_cast<size_t>(dim - 1), 0.0);
        }
    }

    // Edges: one per (vertex, axis) with an existing forward neighbour.
    mesh.edge_of.assign(static_cast<size_t>(n) * dim, -1);
    for (int v = 0; v < n; ++v) {
        const auto c = mesh.coords(v);
        for (int d = 0; d < dim; ++d) {
            const int nb = mesh.neighbor(v, d, +1);
            if (nb < 0) continue;
            Edge e;
            e.a = v;
            e.b = nb;
            e.axis = d;
            e.length = mesh.spacing[d];
            double dual = 1.0;
            for (int o = 0; o < dim; ++o)
                if (o != d) dual *= w[o][c[o]];
            e.dual = dual;
            e.boundary_tangential = d != 0 && mesh.on_boundary[v];
            mesh.edge_of[static_cast<size_t>(v) * dim + d] = static_cast<int>(mesh.edges.size());
            mesh.edges.push_back(e);
        }
    }

    // Plaquettes: base vertex, axis pair (d1 < d2), counter-clockwise in (d1, d2).
    for (int v = 0; v < n; ++v) {
        const auto c = mesh.coords(v);
        int plane = 0;
        for (int d1 = 0; d1 < dim; ++d1) {
            for (int d2 = d1 + 1; d2 < dim; ++d2, ++plane) {
                const int v1 = mesh.neighbor(v, d1, +1);
                const int v2 = mesh.neighbor(v, d2, +1);
                if (v1 < 0 || v2 < 0) continue;
                const int v12 = mesh.neighbor(v1, d2, +1);
                Plaquette p;
                p.corners = 4;
                p.vertices = {v, v1, v12, v2};
                p.edges = {mesh.edge_from(v, d1), mesh.edge_from(v1, d2), mesh.edge_from(v2, d1),
                           mesh.edge_from(v, d2)};
                p.signs = {1, 1, -1, -1};
                p.area = mesh.spacing[d1] * mesh.spacing[d2];
                double transverse = 1.0;
                for (int o = 0; o < dim; ++o)
                    if (o != d1 && o != d2) transverse *= w[o][c[o]];
                p.weight = p.area * transverse;
                p.shares.fill(p.weight / 4.0);
                p.plane = plane;
                p.boundary_face = dim == 3 && d1 != 0 && mesh.on_boundary[v];
                mesh.plaquettes.push_back(p);
            }
        }
    }
}

void build_disk(Mesh& mesh)
{
    const int nr = mesh.nr();
    const int na = mesh.na();
    const double R = mesh.desc.radius;
    const double h = R / nr;
    const double dt = 2.0 * kPi / na;
    mesh.dim = 2;
    const int n = 1 + nr * na;
    mesh.points.resize(n);
    mesh.weights.resize(n);
    mesh.on_boundary.assign(n, 0);

    mesh.points[0] = Vec3::Zero();
    mesh.weights[0] = kPi * 0.25 * h * h;
    for (int i = 1; i <= nr; ++i) {
        const double r = i * h;
        for (int j = 0; j < na; ++j) {
            const int v = mesh.disk_index(i, j);
            const double th = j * dt;
            mesh.points[v] = Vec3(r * std::cos(th), r * std::sin(th), 0.0);
            if (i < nr) {
                mesh.weights[v] = r * h * dt;
            } else {
                mesh.weights[v] = 0.5 * (R * R - (R - 0.5 * h) * (R - 0.5 * h)) * dt;
                mesh.on_boundary[v] = 1;
                mesh.boundary_vertices.push_back(v);
                mesh.normals.emplace_back(std::cos(th), std::sin(th), 0.0);
                mesh.principal_curvatures.push_back({1.0 / R});
            }
        }
    }

    // Centre spokes, radial edges, then angular edges (see radial_edge / angular_edge).
    for (int j = 0; j < na; ++j) {
        Edge e;
        e.a = 0;
        e.b = mesh.disk_index(1, j);
        e.axis = 0;
        e.length = h;
        e.dual = 0.5 * h * dt;
        mesh.edges.push_back(e);
    }
    for (int i = 1; i < nr; ++i) {
        for (int j = 0; j < na; ++j) {
            Edge e;
            e.a = mesh.disk_index(i, j);
            e.b = mesh.disk_index(i + 1, j);
            e.axis = 0;
            e.length = h;
            e.dual = (i + 0.5) * h * dt;
            mesh.edges.push_back(e);
        }
    }
    for (int i = 1; i <= nr; ++i) {
        for (int j = 0; j < na; ++j) {
            Edge e;
            e.a = mesh.disk_index(i, j);
            e.b = mesh.disk_index(i, j + 1);
            e.axis = 1;
            e.length = i * h * dt;
            e.dual = i < nr ? h : 0.5 * h;
            e.boundary_tangential = i == nr;
            mesh.edges.push_back(e);
        }
    }

    for (int j = 0; j < na; ++j) {
        Plaquette p;
        p.corners = 3;
        p.vertices = {0, mesh.disk_index(1, j), mesh.disk_index(1, j + 1), -1};
        p.edges = {mesh.radial_edge(0, j), mesh.angular_edge(1, j), mesh.radial_edge(0, j + 1), -1};
        p.signs = {1, 1, -1, 0};
        p.area = 0.5 * h * h * dt;
        p.weight = p.area;
        const double inner = 0.5 * (0.25 * h * h) * dt;
        p.shares = {inner, 0.5 * (p.area - inner), 0.5 * (p.area - inner), 0.0};
        mesh.plaquettes.push_back(p);
    }
    for (int i = 1; i < nr; ++i) {
        const double r0 = i * h;
        const double r1 = (i + 1) * h;
        const double s0 = 0.25 * ((r0 + 0.5 * h) * (r0 + 0.5 * h) - r0 * r0) * dt;
        const double s1 = 0.25 * (r1 * r1 - (r1 - 0.5 * h) * (r1 - 0.5 * h)) * dt;
        for (int j = 0; j < na; ++j) {
            Plaquette p;
            p.corners = 4;
            p.vertices = {mesh.disk_index(i, j), mesh.disk_index(i + 1, j),
                          mesh.disk_index(i + 1, j + 1), mesh.disk_index(i, j + 1)};
            p.edges = {mesh.radial_edge(i, j), mesh.angular_edge(i + 1, j),
                       mesh.radial_edge(i, j + 1), mesh.angular_edge(i, j)};
            p.signs = {1, 1, -1, -1};
            p.area = 0.5 * (r1 * r1 - r0 * r0) * dt;
            p.weight = p.area;
            p.shares = {s0, s1, s1, s0};
            mesh.plaquettes.push_back(p);
        }
    }
}

} // namespace

std::string to_string(ManifoldKind kind)
{
    switch (kind) {
    case ManifoldKind::FlatCylinder: return "cylinder";
    case ManifoldKind::FlatSlab3D: return "slab";
    case ManifoldKind::FlatDisk: return "disk";
    case ManifoldKind::FlatTorus2D: return "torus2";
    case ManifoldKind::FlatTorus3D: return "torus3";
    }
    return "unknown";
}

ManifoldDescriptor ManifoldDescriptor::cylinder(double L, double ell, int nx, int ny)
{
    ManifoldDescriptor d;
    d.kind = ManifoldKind::FlatCylinder;
    d.length = L;
    d.periods = {ell, 1.0};
    d.grid = {nx, ny, 1};
    return d;
}

ManifoldDescriptor ManifoldDescriptor::slab(double L, double l1, double l2, int nx, int ny, int nz)
{
    ManifoldDescriptor d;
    d.kind = ManifoldKind::FlatSlab3D;
    d.length = L;
    d.periods = {l1, l2};
    d.grid = {nx, ny, nz};
    return d;
}

ManifoldDescriptor ManifoldDescriptor::disk(double R, int nr, int na)
{
    ManifoldDescriptor d;
    d.kind = ManifoldKind::FlatDisk;
    d.radius = R;
    d.grid = {nr, na, 1};
    return d;
}

int ManifoldDescriptor::dimension() const
{
    return (kind == ManifoldKind::FlatSlab3D || kind == ManifoldKind::FlatTorus3D) ? 3 : 2;
}

bool ManifoldDescriptor::has_boundary() const
{
    return kind == ManifoldKind::FlatCylinder || kind == ManifoldKind::FlatSlab3D ||
           kind == ManifoldKind::FlatDisk;
}

int Mesh::index(const std::array<int, 3>& c) const
{
    int v = 0;
    for (int d = 0; d < dim; ++d) v = v * axis_n[d] + c[d];
    return v;
}

std::array<int, 3> Mesh::coords(int v) const
{
    std::array<int, 3> c{0, 0, 0};
    for (int d = dim - 1; d >= 0; --d) {
        c[d] = v % axis_n[d];
        v /= axis_n[d];
    }
    return c;
}

int Mesh::neighbor(int v, int axis, int step) const
{
    auto c = coords(v);
    int k = c[axis] + step;
    const int n = axis_n[axis];
    if (periodic[axis]) {
        k = ((k % n) + n) % n;
    } else if (k < 0 || k >= n) {
        return -1;
    }
    c[axis] = k;
    return index(c);
}

double Mesh::angular_step() const
{
    return 2.0 * kPi / na();
}

int Mesh::disk_index(int ring, int j) const
{
    if (ring == 0) return 0;
    const int n = na();
    j = ((j % n) + n) % n;
    return 1 + (ring - 1) * n + j;
}

int Mesh::ring_of(int v) const
{
    return v == 0 ? 0 : 1 + (v - 1) / na();
}

int Mesh::angle_of(int v) const
{
    return v == 0 ? 0 : (v - 1) % na();
}

int Mesh::radial_edge(int ring, int j) const
{
    const int n = na();
    j = ((j % n) + n) % n;
    return ring == 0 ? j : n + (ring - 1) * n + j;
}

int Mesh::angular_edge(int ring, int j) const
{
    const int n = na();
    j = ((j % n) + n) % n;
    return n + (nr() - 1) * n + (ring - 1) * n + j;
}

double Mesh::h() const
{
    if (is_disk()) return radial_step();
    return *std::min_element(spacing.begin(), spacing.end());
}

std::uint64_t Mesh::hash() const
{
    std::uint64_t hsh = 1469598103934665603ull;
    auto mix = [&](const void* data, size_t n) {
        const auto* b = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            hsh ^= b[i];
            hsh *= 1099511628211ull;
        }
    };
    const int kind = static_cast<int>(desc.kind);
    mix(&kind, sizeof kind);
    mix(desc.grid.data(), sizeof desc.grid);
    mix(&desc.length, sizeof desc.length);
    mix(desc.periods.data(), sizeof desc.periods);
    mix(&desc.radius, sizeof desc.radius);
    return hsh;
}

Eigen::VectorXd LinearOperator::apply(const Eigen::VectorXd& f) const
{
    require(f.size() == weights.size(), "field size does not match the operator");
    return (stiffness * f).cwiseQuotient(weights);
}

Eigen::SparseMatrix<double> LinearOperator::matrix() const
{
    Eigen::SparseMatrix<double> m = weights.cwiseInverse().asDiagonal() * stiffness;
    return m;
}

Mesh build_mesh(const ManifoldDescriptor& desc)
{
    Mesh mesh;
    mesh.desc = desc;
    const auto& g = desc.grid;
    switch (desc.kind) {
    case ManifoldKind::FlatCylinder:
        require(desc.length > 0 && desc.periods[0] > 0, "cylinder extents must be positive");
        require(g[0] >= 2 && g[1] >= 3, "cylinder grid must have nx >= 2 and ny >= 3");
        build_product(mesh, {g[0], g[1]}, {desc.length, desc.periods[0]}, {false, true});
        break;
    case ManifoldKind::FlatSlab3D:
        require(desc.length > 0 && desc.periods[0] > 0 && desc.periods[1] > 0,
                "slab extents must be positive");
        require(g[0] >= 2 && g[1] >= 3 && g[2] >= 3, "slab grid must have nx >= 2, ny, nz >= 3");
        build_product(mesh, {g[0], g[1], g[2]}, {desc.length, desc.periods[0], desc.periods[1]},
                      {false, true, true});
        break;
    case ManifoldKind::FlatTorus2D:
        require(g[0] >= 3 && g[1] >= 3, "torus grid must have at least 3 cells per axis");
        build_product(mesh, {g[0], g[1]}, {desc.length, desc.periods[0]}, {true, true});
        break;
    case ManifoldKind::FlatTorus3D:
        require(g[0] >= 3 && g[1] >= 3 && g[2] >= 3, "torus grid must have at least 3 cells per axis");
        build_product(mesh, {g[0], g[1], g[2]}, {desc.length, desc.periods[0], desc.periods[1]},
                      {true, true, true});
        break;
    case ManifoldKind::FlatDisk:
        require(desc.radius > 0, "disk radius must be positive");
        require(g[0] >= 3 && g[1] >= 8, "disk grid must have nr >= 3 and na >= 8");
        build_disk(mesh);
        break;
    }
    assemble_stiffness(mesh);
    return mesh;
}

LinearOperator laplace_beltrami(const Mesh& mesh)
{
    return {mesh.stiffness, mesh.weights};
}

Eigen::VectorXd boundary_normal_derivative(const Mesh& mesh, const Eigen::VectorXd& f)
{
    require(mesh.has_boundary(), "mesh has no boundary");
    require(f.size() == mesh.vertex_count(), "field size does not match the mesh");
    Eigen::VectorXd out(static_cast<Eigen::Index>(mesh.boundary_vertices.size()));
    for (size_t b = 0; b < mesh.boundary_vertices.size(); ++b) {
        const int v = mesh.boundary_vertices[b];
        int v1 = -1;
        int v2 = -1;
        double h = 0.0;
        if (mesh.is_disk()) {
            const int j = mesh.angle_of(v);
            v1 = mesh.disk_index(mesh.nr() - 1, j);
            v2 = mesh.disk_index(mesh.nr() - 2, j);
            h = mesh.radial_step();
        } else {
            const int step = mesh.coords(v)[0] == 0 ? +1 : -1;
            v1 = mesh.neighbor(v, 0, step);
            v2 = mesh.neighbor(v1, 0, step);
            h = mesh.spacing[0];
        }
        out[static_cast<Eigen::Index>(b)] = (3.0 * f[v] - 4.0 * f[v1] + f[v2]) / (2.0 * h);
    }
    return out;
}

Mesh double_manifold(const Mesh& mesh)
{
    ManifoldDescriptor d = mesh.desc;
    switch (mesh.desc.kind) {
    case ManifoldKind::FlatCylinder: d.kind = ManifoldKind::FlatTorus2D; break;
    case ManifoldKind::FlatSlab3D: d.kind = ManifoldKind::FlatTorus3D; break;
    default:
        fail(ErrorCode::DomainError,
             "double_manifold needs a product manifold with boundary, got " + to_string(mesh.desc.kind));
    }
    d.length = 2.0 * mesh.desc.length;
    d.grid[0] = 2 * mesh.desc.grid[0];
    Mesh out = build_mesh(d);
    const int nx = mesh.desc.grid[0];
    out.fold.resize(out.vertex_count());
    for (int v = 0; v < out.vertex_count(); ++v) {
        auto c = out.coords(v);
        if (c[0] > nx) c[0] = 2 * nx - c[0];
        out.fold[v] = mesh.index(c);
    }
    return out;
}

Eigen::VectorXd extend_even(const Mesh& doubled, const Eigen::VectorXd& f)
{
    require(!doubled.fold.empty(), "mesh carries no fold map");
    Eigen::VectorXd out(doubled.vertex_count());
    for (int v = 0; v < doubled.vertex_count(); ++v) {
        require(doubled.fold[v] < f.size(), "field size does not match the original mesh");
        out[v] = f[doubled.fold[v]];
    }
    return out;
}

int lift_vertex(const Mesh& doubled, int v)
{
    // Vertices with x index <= nx coincide with the original ones, same ordering per slice.
    const int nx = doubled.axis_n[0] / 2;
    int per_slice = 1;
    for (int d = 1; d < doubled.dim; ++d) per_slice *= doubled.axis_n[d];
    const int i = v / per_slice;
    require(i <= nx, "vertex outside the original mesh");
    return v;
}

Eigen::VectorXd restrict_to_original(const Mesh& doubled, const Eigen::VectorXd& f)
{
    require(!doubled.fold.empty(), "mesh carries no fold map");
    const int nx = doubled.axis_n[0] / 2;
    int per_slice = 1;
    for (int d = 1; d < doubled.dim; ++d) per_slice *= doubled.axis_n[d];
    return f.head(static_cast<Eigen::Index>(nx + 1) * per_slice);
}

double chart_distance(const ManifoldDescriptor& desc, const Vec3& p, const Vec3& q)
{
    Vec3 d = p - q;
    auto wrap = [](double x, double period) {
        x = std::fmod(std::abs(x), period);
        return std::min(x, period - x);
    };
    switch (desc.kind) {
    case ManifoldKind::FlatCylinder: d[1] = wrap(d[1], desc.periods[0]); break;
    case ManifoldKind::FlatSlab3D:
        d[1] = wrap(d[1], desc.periods[0]);
        d[2] = wrap(d[2], desc.periods[1]);
        break;
    case ManifoldKind::FlatTorus2D:
        d[0] = wrap(d[0], desc.length);
        d[1] = wrap(d[1], desc.periods[0]);
        break;
    case ManifoldKind::FlatTorus3D:
        d[0] = wrap(d[0], desc.length);
        d[1] = wrap(d[1], desc.periods[0]);
        d[2] = wrap(d[2], desc.periods[1]);
        break;
    case ManifoldKind::FlatDisk: break;
    }
    return d.norm();
}

Eigen::VectorXd geodesic_distance(const Mesh& mesh, int y)
{
    require(y >= 0 && y < mesh.vertex_count(), "vertex index out of range");
    Eigen::VectorXd out(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v)
        out[v] = chart_distance(mesh.desc, mesh.points[v], mesh.points[y]);
    return out;
}

double volume_integrate(const Mesh& mesh, const Eigen::VectorXd& f)
{
    require(f.size() == mesh.vertex_count(), "field size does not match the mesh");
    return mesh.weights.dot(f);
}

double total_volume(const ManifoldDescriptor& desc)
{
    switch (desc.kind) {
    case ManifoldKind::FlatCylinder:
    case ManifoldKind::FlatTorus2D: return desc.length * desc.periods[0];
    case ManifoldKind::FlatSlab3D:
    case ManifoldKind::FlatTorus3D: return desc.length * desc.periods[0] * desc.periods[1];
    case ManifoldKind::FlatDisk: return kPi * desc.radius * desc.radius;
    }
    return 0.0;
}

ConvexityReport convexity_report(const Mesh& mesh)
{
    ConvexityReport r;
    bool any = false;
    for (const auto& pc : mesh.principal_curvatures) {
        for (double k : pc) {
            r.min_curvature = any ? std::min(r.min_curvature, k) : k;
            r.max_abs_curvature = std::max(r.max_abs_curvature, std::abs(k));
            any = true;
        }
    }
    r.convex = r.min_curvature >= -1e-12;
    r.totally_geodesic = r.max_abs_curvature <= 1e-12;
    return r;
}

std::string mesh_to_json(const Mesh& mesh)
{
    nlohmann::json j;
    j["format"] = "hklab.mesh";
    j["version"] = 1;
    j["kind"] = to_string(mesh.desc.kind);
    j["dimension"] = mesh.dim;
    j["grid"] = mesh.desc.grid;
    j["length"] = mesh.desc.length;
    j["periods"] = mesh.desc.periods;
    j["radius"] = mesh.desc.radius;
    j["hash"] = mesh.hash();
    auto& verts = j["vertices"] = nlohmann::json::array();
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        nlohmann::json row = nlohmann::json::array();
        for (int d = 0; d < mesh.dim; ++d) row.push_back(mesh.points[v][d]);
        verts.push_back(row);
    }
    j["weights"] = std::vector<double>(mesh.weights.data(), mesh.weights.data() + mesh.weights.size());
    auto& bnd = j["boundary"] = nlohmann::json::array();
    for (size_t b = 0; b < mesh.boundary_vertices.size(); ++b) {
        nlohmann::json row;
        row["vertex"] = mesh.boundary_vertices[b];
        row["normal"] = {mesh.normals[b][0], mesh.normals[b][1], mesh.normals[b][2]};
        row["principal_curvatures"] = mesh.principal_curvatures[b];
        bnd.push_back(row);
    }
    auto& edges = j["edges"] = nlohmann::json::array();
    for (const Edge& e : mesh.edges) edges.push_back({e.a, e.b, e.length, e.dual});
    auto& plaq = j["plaquettes"] = nlohmann::json::array();
    for (const Plaquette& p : mesh.plaquettes) {
        nlohmann::json row;
        row["vertices"] = std::vector<int>(p.vertices.begin(), p.vertices.begin() + p.corners);
        row["area"] = p.area;
        row["weight"] = p.weight;
        row["plane"] = p.plane;
        plaq.push_back(row);
    }
    return j.dump();
}

} // namespace hklab::geometry
