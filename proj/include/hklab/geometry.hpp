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
#pragma once

#include <hklab/common.hpp>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace hklab::geometry {

enum class ManifoldKind {
    FlatCylinder, // [0, L] x S^1(l)
    FlatSlab3D,   // [0, L] x T^2(l1, l2)
    FlatDisk,     // B(0, R)
    FlatTorus2D,  // only produced by double_manifold
    FlatTorus3D,
};

std::string to_string(ManifoldKind kind);

struct ManifoldDescriptor
{
    ManifoldKind kind = ManifoldKind::FlatCylinder;
    /// Extent of axis 0 (bounded for cylinder/slab, periodic for tori).
    double length = 1.0;
    /// Circle lengths of the periodic axes 1 and 2.
    std::array<double, 2> periods{1.0, 1.0};
    double radius = 1.0;
    /// Cells per axis (nx, ny, nz); for the disk (nr, na, unused).
    std::array<int, 3> grid{32, 32, 1};

    static ManifoldDescriptor cylinder(double L, double ell, int nx, int ny);
    static ManifoldDescriptor slab(double L, double l1, double l2, int nx, int ny, int nz);
    static ManifoldDescriptor disk(double R, int nr, int na);

    int dimension() const;
    bool is_product() const { return kind != ManifoldKind::FlatDisk; }
    bool has_boundary() const;
};

struct Edge
{
    int a = 0;
    int b = 0;
    /// Product meshes: coordinate axis. Disk: 0 radial, 1 angular.
    int axis = 0;
    double length = 0.0;
    /// Measure of the dual face; the edge coupling is dual / length.
    double dual = 0.0;
    bool boundary_tangential = false;

    double coupling() const { return dual / length; }
};

/// Oriented loop of 3 or 4 links starting at vertices[0].
struct Plaquette
{
    int corners = 4;
    std::array<int, 4> vertices{};
    std::array<int, 4> edges{};
    std::array<int, 4> signs{};
    double area = 0.0;
    /// Dual volume: area times the transverse dual extent.
    double weight = 0.0;
    /// Overlap of this plaquette with each corner's dual cell (sums to weight).
    std::array<double, 4> shares{};
    int plane = 0;
    /// Lies inside the boundary (3-D only).
    bool boundary_face = false;
};

struct Mesh
{
    ManifoldDescriptor desc;
    int dim = 2;

    // Structured product data (tori, cylinder, slab). Axis 0 is the bounded one.
    std::vector<int> axis_n;
    std::vector<double> spacing;
    std::vector<bool> periodic;

    std::vector<Vec3> points;
    Eigen::VectorXd weights;
    std::vector<std::uint8_t> on_boundary;
    std::vector<int> boundary_vertices;
    /// Outward unit normals, aligned with boundary_vertices.
    std::vector<Vec3> normals;
    /// Principal curvatures of the boundary (second fundamental form), per boundary vertex.
    std::vector<std::vector<double>> principal_curvatures;

    std::vector<Edge> edges;
    std::vector<Plaquette> plaquettes;
    /// Product meshes: edge starting at vertex v along axis d is edge_of[v * dim + d], or -1.
    std::vector<int> edge_of;
    /// Doubled meshes: original vertex each vertex folds onto.
    std::vector<int> fold;

    /// Symmetric finite-volume stiffness K with zero row sums; Laplacian = W^{-1} K.
    Eigen::SparseMatrix<double> stiffness;

    int vertex_count() const { return static_cast<int>(points.size()); }
    bool is_product() const { return desc.is_product(); }
    bool is_disk() const { return desc.kind == ManifoldKind::FlatDisk; }
    bool has_boundary() const { return desc.has_boundary(); }
    int plane_count() const { return dim == 3 ? 3 : 1; }

    // Product helpers.
    int index(const std::array<int, 3>& c) const;
    std::array<int, 3> coords(int v) const;
    /// Neighbour one step along axis (step = +1/-1), wrapping periodic axes, -1 if outside.
    int neighbor(int v, int axis, int step) const;
    int edge_from(int v, int axis) const { return edge_of[static_cast<size_t>(v) * dim + axis]; }

    // Disk helpers.
    int nr() const { return desc.grid[0]; }
    int na() const { return desc.grid[1]; }
    double radial_step() const { return desc.radius / desc.grid[0]; }
    double angular_step() const;
    /// Vertex of ring i (1..nr) at angle index j (wrapped). Ring 0 is the centre.
    int disk_index(int ring, int j) const;
    int ring_of(int v) const;
    int angle_of(int v) const;
    int radial_edge(int ring, int j) const;  // from ring to ring + 1
    int angular_edge(int ring, int j) const; // from j to j + 1

    /// Smallest grid spacing.
    double h() const;
    std::uint64_t hash() const;
};

struct LinearOperator
{
    Eigen::SparseMatrix<double> stiffness;
    Eigen::VectorXd weights;

    Eigen::VectorXd apply(const Eigen::VectorXd& f) const;
    /// Assembled W^{-1} K.
    Eigen::SparseMatrix<double> matrix() const;
};

struct ConvexityReport
{
    double min_curvature = 0.0;
    double max_abs_curvature = 0.0;
    bool convex = true;
    bool totally_geodesic = true;
};

Mesh build_mesh(const ManifoldDescriptor& desc);

LinearOperator laplace_beltrami(const Mesh& mesh);

/// Outward normal derivative at each boundary vertex (aligned with mesh.boundary_vertices),
/// second-order one-sided along the inward normal grid line.
Eigen::VectorXd boundary_normal_derivative(const Mesh& mesh, const Eigen::VectorXd& f);

/// Doubles a cylinder or slab across the boundary into a flat torus. The result carries
/// the fold map back to the original vertices.
Mesh double_manifold(const Mesh& mesh);

/// Even extension of a field from the original mesh onto its double.
Eigen::VectorXd extend_even(const Mesh& doubled, const Eigen::VectorXd& f);

/// Restriction of a field on the double to the original vertices.
Eigen::VectorXd restrict_to_original(const Mesh& doubled, const Eigen::VectorXd& f);

/// Original vertex v seen as a vertex of the double.
int lift_vertex(const Mesh& doubled, int v);

/// Distance between two chart points.
double chart_distance(const ManifoldDescriptor& desc, const Vec3& p, const Vec3& q);

/// Distance from vertex y to every vertex.
Eigen::VectorXd geodesic_distance(const Mesh& mesh, int y);

double volume_integrate(const Mesh& mesh, const Eigen::VectorXd& f);

double total_volume(const ManifoldDescriptor& desc);

ConvexityReport convexity_report(const Mesh& mesh);

/// Mesh as JSON text (format in README.md).
std::string mesh_to_json(const Mesh& mesh);

} // namespace hklab::geometry
