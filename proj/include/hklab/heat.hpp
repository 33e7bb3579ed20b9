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

#include <hklab/geometry.hpp>

#include <Eigen/Core>

#include <string>
#include <vector>

namespace hklab::heat {

enum class Scheme { CrankNicolson, BackwardEuler, DenseExponential };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& s);

struct HeatOptions
{
    Scheme scheme = Scheme::CrankNicolson;
    /// Time step; 0 selects default_dt(mesh). Ignored by DenseExponential.
    double dt = 0.0;
    /// Leading BackwardEuler steps before Crank-Nicolson.
    int startup_steps = 0;
};

/// Crank-Nicolson with four BackwardEuler start-up steps, for delta initial data.
HeatOptions kernel_options();

/// h^2 / 2.
double default_dt(const geometry::Mesh& mesh);

struct TimeField
{
    std::vector<double> times;
    std::vector<Eigen::VectorXd> values;
    std::vector<std::string> diagnostics;

    size_t size() const { return times.size(); }
    /// Field at a stored time (exact match up to 1e-12 relative).
    const Eigen::VectorXd& at(double t) const;
    void validate(int vertex_count) const;
};

/// Solves d/dt p = Laplacian p with the Neumann closure on the mesh.
TimeField solve_neumann_heat(const geometry::Mesh& mesh, const Eigen::VectorXd& initial,
                             const std::vector<double>& times, const HeatOptions& opts = {});

/// Transition density g(t, ., y) of reflecting Brownian motion (generator Laplacian / 2).
TimeField heat_kernel(const geometry::Mesh& mesh, int y, const std::vector<double>& times,
                      const HeatOptions& opts = kernel_options());

/// g~(t, .) = g(2t, ., y): the kernel in the d/dt = Laplacian convention.
TimeField analytic_kernel(const geometry::Mesh& mesh, int y, const std::vector<double>& times,
                          const HeatOptions& opts = kernel_options());

struct HessianField
{
    int dim = 2;
    /// Top-left dim x dim block is used.
    std::vector<Eigen::Matrix3d> values;

    double min_eigenvalue(int v) const;
};

/// Hessian of a vertex field: central differences with mirror ghosts at the boundary
/// and wrap on periodic axes; polar differences on the disk.
HessianField hessian(const geometry::Mesh& mesh, const Eigen::VectorXd& f);
HessianField log_hessian(const geometry::Mesh& mesh, const Eigen::VectorXd& u);

/// lambda_min(D^2 log u + I / (2t)) at every vertex.
Eigen::VectorXd lyh_margin_field(const geometry::Mesh& mesh, const Eigen::VectorXd& u, double t);

struct LYHReport
{
    std::vector<double> times;
    std::vector<double> min_margin;   // per time
    std::vector<int> argmin_vertex;   // per time
    std::vector<Eigen::VectorXd> margins;
    double worst_margin = 0.0;
    double worst_time = 0.0;
    int worst_vertex = -1;
    double tol_disc = 0.0;
    bool passed = false;

    bool has_fit = false;
    double fit_A = 0.0;
    double fit_B = 0.0;
    bool fit_feasible = true;
};

/// Sharp estimate on cylinder/slab: passes iff every margin >= -tol_disc.
LYHReport lyh_check_sharp(const TimeField& sol, const geometry::Mesh& mesh, double tol_disc,
                          bool keep_fields = false);

struct TolCalibration
{
    double tol_disc = 0.0;
    double max_error = 0.0;
    double worst_time = 0.0;
};

/// Runs the margin scan on the doubled torus, whose exact margin is known, and returns
/// tol_disc = 2 * max over times of |discrete min margin - exact min margin|.
TolCalibration calibrate_tol_disc(const geometry::Mesh& mesh, int y, const std::vector<double>& times);

struct LYHFit
{
    double A = 0.0;
    double B = 0.0;
    /// Finite upper bound on A from points with a negative log coefficient, +inf if none.
    double A_upper = 0.0;
    bool feasible = true;
    double binding_time = 0.0;
    int binding_vertex = -1;
};

/// Smallest A >= 0 with margin + A (1 + log(B / (t^{n/2} p))) >= -tol_disc everywhere, B fixed.
LYHFit lyh_fit_constants(const TimeField& sol, const geometry::Mesh& mesh, double B, double tol_disc);

/// sup over fields, times in (0, 1] and vertices of t^{n/2} p.
double kernel_decay_bound(const std::vector<const TimeField*>& sols, const geometry::Mesh& mesh);

struct SlopeFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    int points = 0;
};

/// Least-squares slope of log sup_x p against log t over times in [t_min, t_max].
SlopeFit decay_slope(const TimeField& sol, double t_min, double t_max);

/// Sup-norm gap between the Neumann solution and the restriction of the solution on the
/// doubled torus with evenly extended initial data.
double doubling_equivalence_check(const geometry::Mesh& mesh, const Eigen::VectorXd& initial,
                                  const std::vector<double>& times, const HeatOptions& opts = {});

std::vector<double> log_spaced(double t0, double t1, int n);
std::vector<double> lin_spaced(double t0, double t1, int n);

void write_time_field_csv(const std::string& path, const TimeField& f, const geometry::Mesh& mesh);
void write_time_field_binary(const std::string& path, const TimeField& f);
TimeField read_time_field_binary(const std::string& path);
std::string lyh_report_json(const LYHReport& r);

} // namespace hklab::heat
