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
#include <hklab/heat.hpp>
#include <hklab/oracles.hpp>
#include <hklab/stochastic.hpp>

#include "doctest.h"
#include "json.hpp"

#include <cmath>
#include <numbers>

using namespace hklab;
using namespace hklab::stochastic;
using geometry::ManifoldDescriptor;

namespace {

constexpr double kPi = std::numbers::pi;

struct Stats
{
    double mean = 0.0;
    double se = 0.0;
};

Stats stats(const std::vector<double>& v)
{
    Stats s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(var / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
    return s;
}

} // namespace

TEST_CASE("Philox reproduces the reference block and separates streams")
{
    Philox p(0, 0);
    const auto b = p.block();
    CHECK(b[0] == 0x6627e8d5u);
    CHECK(b[1] == 0xe169c58du);
    CHECK(b[2] == 0xbc57ac4cu);
    CHECK(b[3] == 0x9b00dbd8u);

    Philox a(7, 3);
    Philox c(7, 3);
    Philox d(7, 4);
    for (int k = 0; k < 100; ++k) {
        const double x = a.uniform();
        CHECK(x == c.uniform());
        CHECK(x != d.uniform());
        CHECK(x > 0.0);
        CHECK(x < 1.0);
    }
    std::vector<double> z(100000);
    Philox g(11, 0);
    for (double& x : z) x = g.normal();
    const Stats s = stats(z);
    CHECK(std::abs(s.mean) < 3.0 * s.se);
    std::vector<double> sq(z.size());
    for (size_t i = 0; i < z.size(); ++i) sq[i] = z[i] * z[i];
    const Stats s2 = stats(sq);
    CHECK(std::abs(s2.mean - 1.0) < 3.0 * s2.se);
}

TEST_CASE("reflecting Brownian step")
{
    const Domain cyl = Domain::of(ManifoldDescriptor::cylinder(1.0, 1.0, 16, 16));
    SUBCASE("tiny steps barely move")
    {
        WalkerState w = make_walker(cyl, Vec3(0.5, 0.5, 0), 1, 0);
        rbm_step(cyl, w, 1e-12);
        CHECK((w.position - Vec3(0.5, 0.5, 0)).norm() < 1e-5);
    }
    SUBCASE("mean squared displacement is n dt")
    {
        const double dt = 1e-4;
        std::vector<double> d2(100000);
        for (size_t p = 0; p < d2.size(); ++p) {
            WalkerState w = make_walker(cyl, Vec3(0.5, 0.5, 0), 2, p);
            rbm_step(cyl, w, dt);
            d2[p] = (w.position - Vec3(0.5, 0.5, 0)).squaredNorm();
        }
        const Stats s = stats(d2);
        CHECK(std::abs(s.mean - 2.0 * dt) < 3.0 * s.se);
    }
    SUBCASE("boundary start stays inside and collects local time")
    {
        int positive = 0;
        for (std::uint64_t p = 0; p < 100; ++p) {
            WalkerState w = make_walker(cyl, Vec3(0.0, 0.3, 0), 3, p);
            rbm_step(cyl, w, 1e-3);
            CHECK(cyl.contains(w.position));
            positive += w.local_time > 0.0 ? 1 : 0;
        }
        CHECK(positive > 0);
    }
    SUBCASE("confinement on every model")
    {
        for (const auto& desc : {ManifoldDescriptor::disk(1.0, 8, 16), ManifoldDescriptor::slab(1, 1, 1, 4, 4, 4),
                                 ManifoldDescriptor::cylinder(0.5, 2.0, 4, 4)}) {
            const Domain d = Domain::of(desc);
            for (std::uint64_t p = 0; p < 20; ++p) {
                WalkerState w = make_walker(d, Vec3(0.1, 0.1, 0.1), 4, p);
                double lt = 0.0;
                for (int k = 0; k < 500; ++k) {
                    rbm_step(d, w, 2e-3);
                    CHECK(d.contains(w.position));
                    CHECK(w.local_time >= lt);
                    lt = w.local_time;
                }
            }
        }
    }
    SUBCASE("local time of the half-line has mean sqrt(2t / pi)")
    {
        const Domain hl = Domain::halfline();
        const double t = 0.25;
        const double dt = 1e-4;
        std::vector<double> L(4000);
        for (size_t p = 0; p < L.size(); ++p) {
            WalkerState w = make_walker(hl, Vec3::Zero(), 5, p);
            for (int k = 0; k < static_cast<int>(t / dt); ++k) rbm_step(hl, w, dt);
            L[p] = w.local_time;
        }
        const Stats s = stats(L);
        CHECK(std::abs(s.mean - std::sqrt(2.0 * t / kPi)) < 3.0 * s.se + 0.02 * s.mean);
    }
}

TEST_CASE("occupation measure of long paths is uniform")
{
    const double gap = occupation_uniformity_gap(ManifoldDescriptor::cylinder(1.0, 1.0, 4, 4), 1000, 10000, 1e-3, 4, 9);
    CHECK(gap <= 0.05);
}

TEST_CASE("exit times")
{
    const Domain cyl = Domain::of(ManifoldDescriptor::cylinder(1.0, 1.0, 16, 16));
    SUBCASE("interior ball: mean exit time r^2 / n")
    {
        const double r = 0.2;
        const auto s = sample_exit_times(cyl, Vec3(0.5, 0.5, 0), r, 1e-3 * r * r, 20000, 5.0 * r * r, 1);
        CHECK(s.censored_fraction == 0.0);
        std::vector<double> tau;
        for (const auto& e : s.paths) tau.push_back(e.tau);
        const Stats st = stats(tau);
        CHECK(std::abs(st.mean - r * r / 2.0) < 3.0 * st.se);
    }
    SUBCASE("deterministic per seed and independent of the worker count")
    {
        const auto a = sample_exit_times(cyl, Vec3(0.0, 0.5, 0), 0.2, 1e-3 * 0.04, 3000, 0.06, 5, 1);
        const auto b = sample_exit_times(cyl, Vec3(0.0, 0.5, 0), 0.2, 1e-3 * 0.04, 3000, 0.06, 5, 3);
        for (size_t p = 0; p < a.paths.size(); ++p) {
            CHECK(a.paths[p].tau == b.paths[p].tau);
            CHECK(a.paths[p].censored == b.paths[p].censored);
        }
    }
    SUBCASE("two seeds give compatible samples")
    {
        const auto a = sample_exit_times(cyl, Vec3(0.0, 0.5, 0), 0.2, 1e-3 * 0.04, 5000, 0.08, 1);
        const auto b = sample_exit_times(cyl, Vec3(0.0, 0.5, 0), 0.2, 1e-3 * 0.04, 5000, 0.08, 2);
        std::vector<double> ta;
        std::vector<double> tb;
        for (const auto& e : a.paths) ta.push_back(e.tau);
        for (const auto& e : b.paths) tb.push_back(e.tau);
        CHECK(ta != tb);
        CHECK(ks_two_sample_pvalue(ta, tb) > 0.01);
    }
    SUBCASE("ball larger than the domain never exits")
    {
        const Domain small = Domain::of(ManifoldDescriptor::disk(0.3, 8, 16));
        const auto s = sample_exit_times(small, Vec3(0.1, 0, 0), 0.9, 1e-3, 200, 0.05, 1);
        CHECK(s.censored_fraction == 1.0);
        CHECK(!s.warnings.empty());
    }
    SUBCASE("invalid arguments")
    {
        CHECK_THROWS_AS(sample_exit_times(cyl, Vec3(0.5, 0.5, 0), 1.5, 1e-3, 10, 1.0, 1), Error);
        CHECK_THROWS_AS(sample_exit_times(cyl, Vec3(2.0, 0.5, 0), 0.2, 1e-3, 10, 1.0, 1), Error);
    }
}

TEST_CASE("half-line exit tail against the reflection series")
{
    const double r = 0.3;
    const size_t n = 200000;
    const auto s = sample_exit_times(Domain::halfline(), Vec3::Zero(), r, 1e-3 * r * r, n, 0.5 * r * r, 21);
    const std::vector<double> kappa{0.075, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5};
    const auto rep = exit_tail_estimate(s, kappa);
    for (const auto& row : rep.rows) {
        const double p = oracles::rbm_halfline_oracle(r, row.kappa * r * r);
        CHECK(std::abs(row.p_hat - p) <= 3.0 * std::sqrt(p * (1.0 - p) / n));
    }
    CHECK(rep.eta_hat > 0.0);
    CHECK(rep.monotone);
    CHECK(rep.pass);
    const auto j = nlohmann::json::parse(tail_report_json(rep));
    CHECK(j["rows"].size() == kappa.size());
    CHECK(exit_samples_csv(s).rfind("path,tau,censored\n0,", 0) == 0);
}

TEST_CASE("tail estimate bookkeeping")
{
    ExitTimeSample s;
    s.r = 0.5;
    s.horizon = 1.0;
    for (int i = 0; i < 1000; ++i) s.paths.push_back({0.001 + 0.2 * i / 1000.0, false});
    const auto rep = exit_tail_estimate(s, {1e-4, 1.0, 3.0, 8.0});
    CHECK(rep.rows[0].dropped);
    CHECK(rep.rows[0].count == 0);
    CHECK(rep.rows[1].p_hat > 0.0);
    CHECK(rep.rows[2].p_hat == 1.0);
    CHECK(rep.rows[3].dropped);
    CHECK_THROWS_AS(exit_tail_estimate(s, {0.5, 0.1}), Error);
}

TEST_CASE("goodness of fit helpers")
{
    CHECK(kolmogorov_q(1.36) == doctest::Approx(0.0494).epsilon(0.01));
    CHECK(kolmogorov_q(0.0) == 1.0);
    CHECK(chi_square_pvalue(3.841458820694124, 1) == doctest::Approx(0.05).epsilon(1e-9));
    Philox g(3, 0);
    std::vector<double> u(5000);
    for (double& x : u) x = g.uniform();
    CHECK(ks_one_sample_pvalue(u, [](double x) { return x; }) > 0.01);
    CHECK(ks_one_sample_pvalue(u, [](double x) { return x * x; }) < 1e-6);
}

TEST_CASE("interpolation")
{
    const auto m = geometry::build_mesh(ManifoldDescriptor::slab(1.0, 1.0, 1.0, 5, 5, 5));
    Eigen::VectorXd f(m.vertex_count());
    for (int v = 0; v < m.vertex_count(); ++v) f[v] = 1.0 + 2.0 * m.points[v].x() - m.points[v].y() * m.points[v].x();
    const Vec3 x(0.37, 0.41, 0.13);
    CHECK(interpolate(m, f, x) == doctest::Approx(1.0 + 2.0 * 0.37 - 0.41 * 0.37).epsilon(1e-12));
    CHECK(locate(m, Vec3(0.39, 0.99, 0.01)) == m.index({2, 0, 0}));

    const auto d = geometry::build_mesh(ManifoldDescriptor::disk(1.0, 32, 128));
    Eigen::VectorXd g(d.vertex_count());
    for (int v = 0; v < d.vertex_count(); ++v) g[v] = d.points[v].x();
    CHECK(std::abs(interpolate(d, g, Vec3(0.5, 0.3, 0)) - 0.5) < 1e-3);
    CHECK(interpolate(d, Eigen::VectorXd::Constant(d.vertex_count(), 2.0), Vec3(0.01, 0.0, 0)) == doctest::Approx(2.0));
    CHECK(locate(d, Vec3(0.01, 0.0, 0)) == 0);
}

TEST_CASE("simulated law matches the transition density")
{
    const auto m = geometry::build_mesh(ManifoldDescriptor::cylinder(1.0, 1.0, 32, 32));
    const int y = m.index({4, 16, 0});
    const auto hc = kernel_histogram_check(m, y, 0.05, 100000, 17, 8);
    CHECK(hc.bins > 20);
    CHECK(hc.p_value > 0.01);
}

TEST_CASE("expectation along reflecting paths against the PDE route")
{
    auto mesh = std::make_shared<const geometry::Mesh>(geometry::build_mesh(ManifoldDescriptor::cylinder(1.0, 1.0, 32, 32)));
    const int y = mesh->index({6, 16, 0});
    const double dt = ym::default_flow_dt(*mesh);
    auto run = ym::run_flow(ym::make_flow_state(ym::smooth_random_connection(mesh, ym::Group::SU2,
                                                                              ym::BoundaryMode::Absolute, 2.0, 3),
                                                ym::BoundaryMode::Absolute),
                            40, dt);
    const double s0 = run.history.times.back();
    const double s = 20 * dt;
    const auto g = heat::heat_kernel(*mesh, y, {s}, heat::HeatOptions{heat::Scheme::DenseExponential});
    const double zeta = ym::zeta_functional(run.history, g, *mesh, s0, s);
    const auto mc = expectation_along_rbm(run.history, *mesh, mesh->points[y], s, s0, 40000, 3);
    CHECK(std::abs(mc.mean - zeta) <= 3.0 * mc.se);

    const auto near = expectation_along_rbm(run.history, *mesh, mesh->points[y], 0.0, s0, 10, 3);
    CHECK(near.mean == doctest::Approx(run.history.q.back()[y]).epsilon(1e-12));

    auto flat = ym::run_flow(ym::make_flow_state(ym::identity_connection(mesh, ym::Group::U1), ym::BoundaryMode::Absolute),
                             4, dt);
    CHECK(expectation_along_rbm(flat.history, *mesh, mesh->points[y], 2 * dt, 4 * dt, 100, 1).mean == 0.0);
    CHECK_THROWS_AS(expectation_along_rbm(run.history, *mesh, mesh->points[y], 0.3 * dt, s0, 100, 1), Error);
}

TEST_CASE("squared distance")
{
    CHECK(k_eps(2, 0.0, 0.3) == 4.0);
    CHECK(k_eps(3, 0.0, 0.3) == 6.0);
    CHECK(k_eps(3, 1.0, 0.3) > 6.0);

    SUBCASE("product meshes are exact")
    {
        const auto m = geometry::build_mesh(ManifoldDescriptor::cylinder(1.0, 1.0, 32, 32));
        const auto r = squared_distance_checks(m, m.index({3, 10, 0}), 0.3);
        CHECK(r.max_laplacian_error < 1e-9);
        CHECK(r.min_normal_derivative >= -1e-9);
        CHECK(r.boundary_points > 0);
        CHECK(r.pass);
    }
    SUBCASE("disk: second order away from the polar core")
    {
        double err[2];
        int k = 0;
        for (int n : {32, 64}) {
            const auto m = geometry::build_mesh(ManifoldDescriptor::disk(1.0, n, 4 * n));
            const auto r = squared_distance_checks(m, m.disk_index(3 * n / 4, n / 2), 0.5);
            CHECK(r.pass);
            err[k++] = r.max_laplacian_error;
        }
        CHECK(err[1] < 1e-2);
        CHECK(std::log2(err[0] / err[1]) > 1.8);
    }
    SUBCASE("boundary normal derivative is nonnegative for random centres")
    {
        const auto m = geometry::build_mesh(ManifoldDescriptor::disk(1.0, 64, 256));
        Philox g(5, 0);
        for (int k = 0; k < 10; ++k) {
            const int y = 1 + static_cast<int>(g.uniform() * (m.vertex_count() - 1));
            const auto r = squared_distance_checks(m, y, 0.6);
            CHECK(r.min_normal_derivative >= -1e-3);
        }
        const int yb = m.disk_index(64, 7);
        const auto nb = geometry::boundary_normal_derivative(m, [&] {
            Eigen::VectorXd f = geometry::geodesic_distance(m, yb);
            return Eigen::VectorXd(f.cwiseProduct(f));
        }());
        for (int j : {6, 8}) CHECK(nb[j] >= -1e-3);
    }
    SUBCASE("non-convex meshes are rejected")
    {
        auto m = geometry::build_mesh(ManifoldDescriptor::disk(1.0, 8, 16));
        for (auto& pc : m.principal_curvatures) pc[0] = -1.0;
        CHECK_THROWS_AS(squared_distance_checks(m, 0, 0.3), Error);
    }
}
