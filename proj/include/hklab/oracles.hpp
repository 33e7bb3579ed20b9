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

// Closed-form references. All kernels here solve d/dt p = Laplacian p (no 1/2).

#include <hklab/geometry.hpp>

#include <Eigen/Core>

#include <string>
#include <vector>

namespace hklab::oracles {

/// Value and first two x-derivatives of a 1-D kernel.
struct KernelJet
{
    double value = 0.0;
    double dx = 0.0;
    double dxx = 0.0;
};

enum class Representation { Auto, Spectral, Images };

/// Number of cosine modes needed so the first omitted factor e^{-lambda_N t} is below eps.
int spectral_terms(double period_like, double t, double eps = 1e-17);

/// Neumann heat kernel of [0, L].
double interval_neumann_kernel(double L, double t, double x, double y,
                               Representation rep = Representation::Auto);
KernelJet interval_neumann_jet(double L, double t, double x, double y,
                               Representation rep = Representation::Auto);

/// Heat kernel of the circle of length ell.
double torus_series_kernel(double ell, double t, double x, double y,
                           Representation rep = Representation::Auto);
KernelJet torus_series_jet(double ell, double t, double x, double y,
                           Representation rep = Representation::Auto);

/// Product kernel on a cylinder, slab or torus at chart points p, q.
double product_kernel(const geometry::ManifoldDescriptor& desc, double t, const Vec3& p, const Vec3& q);

/// Analytic smallest eigenvalue of D^2 log p(t, ., q) + I / (2t) at p for a product kernel.
double product_lyh_margin(const geometry::ManifoldDescriptor& desc, double t, const Vec3& p,
                          const Vec3& q);

/// exp(t W^{-1} K) applied to initial, by full dense eigendecomposition (<= 2500 vertices).
Eigen::VectorXd dense_heat_oracle(const geometry::Mesh& mesh, const Eigen::VectorXd& initial, double t);

/// Fourth-order Hessian on product meshes (five-point stencils, mirror/periodic ghosts).
/// Entry v holds the dim x dim Hessian in the top-left block.
std::vector<Eigen::Matrix3d> fd_hessian_oracle(const geometry::Mesh& mesh, const Eigen::VectorXd& f);

/// P{tau <= t}, tau the first time reflected 1-D Brownian motion (generator 1/2 d^2) from 0 hits r.
double rbm_halfline_oracle(double r, double t, Representation rep = Representation::Auto);

/// CSV table "t,x,y,value" of the interval kernel on a grid, for audit.
std::string interval_kernel_table(double L, const std::vector<double>& times, int n_points, double y);

} // namespace hklab::oracles
