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
#include <hklab/yang_mills.hpp>

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace hklab::stochastic {

/// Philox4x32-10 counter-based generator. A (seed, stream) pair selects an independent
/// sequence, so per-path streams give identical results for any worker count.
class Philox
{
public:
    Philox(std::uint64_t seed = 0, std::uint64_t stream = 0);

    std::array<std::uint32_t, 4> block();
    /// Uniform on (0, 1).
    double uniform();
    double normal();

private:
    std::array<std::uint32_t, 2> m_key;
    std::array<std::uint32_t, 4> m_counter;
    std::array<std::uint32_t, 4> m_buffer{};
    int m_used = 4;
    double m_spare = 0.0;
    bool m_has_spare = false;
};

/// Continuous model chart the walkers live in.
struct Domain
{
    geometry::ManifoldDescriptor desc;
    bool half_line = false;

    static Domain of(const geometry::ManifoldDescriptor& desc);
    /// [0, inf) with reflection at 0.
    static Domain halfline();

    int dim() const;
    /// Folds a point back into the closed domain (mirror across the boundary, wrap periodic axes).
    Vec3 reflect(const Vec3& x) const;
    double boundary_distance(const Vec3& x) const;
    double distance(const Vec3& a, const Vec3& b) const;
    bool contains(const Vec3& x, double tol = 1e-12) const;
    /// Reflection of a single unconstrained Gaussian step is exact (flat boundary at axis ends).
    bool exact_fold() const;
};

struct WalkerState
{
    Vec3 position = Vec3::Zero();
    double time = 0.0;
    /// Boundary local time, estimated by collar occupation / (2 eps) with eps = sqrt(dt).
    double local_time = 0.0;
    Philox rng;
};

WalkerState make_walker(const Domain& d, const Vec3& y, std::uint64_t seed, std::uint64_t path);

/// One step of reflecting Brownian motion with generator Laplacian / 2.
void rbm_step(const Domain& d, WalkerState& w, double dt);

/// Runs `count` independent jobs over `threads` workers; job i only touches its own output.
void parallel_for(size_t count, int threads, const std::function<void(size_t)>& job);

struct ExitSample
{
    double tau = 0.0;
    bool censored = false;
};

struct ExitTimeSample
{
    Vec3 y = Vec3::Zero();
    double r = 0.0;
    double dt = 0.0;
    double horizon = 0.0;
    std::uint64_t seed = 0;
    std::vector<ExitSample> paths;
    double censored_fraction = 0.0;
    std::vector<std::string> warnings;
};

/// First exit times from the geodesic ball B(y, r), with a Brownian-bridge crossing correction.
ExitTimeSample sample_exit_times(const Domain& d, const Vec3& y, double r, double dt, size_t n_paths,
                                 double horizon, std::uint64_t seed, int threads = 1);

struct TailRow
{
    double kappa = 0.0;
    size_t count = 0;
    double p_hat = 0.0;
    double se = 0.0;
    double neg_log_p = 0.0;
    double se_log = 0.0;
    bool dropped = false;
    std::string note;
};

struct TailReport
{
    double r = 0.0;
    size_t n_paths = 0;
    std::vector<TailRow> rows;
    /// min over kept rows of -kappa log P.
    double eta_hat = 0.0;
    bool monotone = true;
    bool pass = false;
    std::vector<std::string> notes;
};

TailReport exit_tail_estimate(const ExitTimeSample& s, const std::vector<double>& kappa_grid);
std::string tail_report_json(const TailReport& r);
std::string exit_samples_csv(const ExitTimeSample& s);

/// Asymptotic Kolmogorov survival function Q(lambda).
double kolmogorov_q(double lambda);
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);
double ks_one_sample_pvalue(std::vector<double> a, const std::function<double(double)>& cdf);
double chi_square_pvalue(double statistic, int dof);

/// Vertex field evaluated at a continuous chart point: multilinear on product meshes,
/// bilinear in (r, theta) on the disk.
double interpolate(const geometry::Mesh& mesh, const Eigen::VectorXd& f, const Vec3& x);

/// Nearest vertex (dual cell containing x).
int locate(const geometry::Mesh& mesh, const Vec3& x);

struct McEstimate
{
    double mean = 0.0;
    double se = 0.0;
    size_t n = 0;
};

/// Position of X_t started at y; product meshes use one exact folded step.
Vec3 simulate_position(const Domain& d, const Vec3& y, double t, double dt, Philox& rng);

/// Monte Carlo mean of q(s0 - s, X_s^y).
McEstimate expectation_along_rbm(const ym::FlowHistory& h, const geometry::Mesh& mesh, const Vec3& y, double s,
                                 double s0, size_t n_paths, std::uint64_t seed, double dt = 0.0, int threads = 1);

struct HistogramCheck
{
    double chi2 = 0.0;
    int dof = 0;
    double p_value = 0.0;
    int bins = 0;
};

/// Chi-square comparison of the binned law of X_t^y with the mesh transition density g(t, ., y).
HistogramCheck kernel_histogram_check(const geometry::Mesh& mesh, int y, double t, size_t n_paths,
                                      std::uint64_t seed, int bins_per_axis = 8, double dt = 0.0, int threads = 1);

/// Long-path occupation measure against the uniform density; returns the sup relative gap over bins.
double occupation_uniformity_gap(const geometry::ManifoldDescriptor& desc, size_t n_paths, size_t steps,
                                 double dt, int bins_per_axis, std::uint64_t seed);

/// 2 (n - 1) K sup_{r <= eps} r coth(K r) + 2, with the K -> 0 limit 2n.
double k_eps(int n, double K, double eps);

struct DistanceReport
{
    int y = 0;
    double eps = 0.0;
    double K = 0.0;
    double bound = 0.0;
    /// Over interior vertices of B(y, eps) (away from the polar core on the disk).
    double max_laplacian = 0.0;
    double max_laplacian_error = 0.0;
    /// Over boundary vertices of B(y, eps).
    double min_normal_derivative = 0.0;
    int interior_points = 0;
    int boundary_points = 0;
    bool pass = false;
};

DistanceReport squared_distance_checks(const geometry::Mesh& mesh, int y, double eps, double c_h = 1.0);

} // namespace hklab::stochastic
