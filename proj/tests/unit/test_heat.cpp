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

#include "doctest.h"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

using namespace hklab;
using namespace hklab::heat;
using geometry::ManifoldDescriptor;
using geometry::Mesh;

namespace {

constexpr double kPi = std::numbers::pi;

Mesh cylinder(int n) { return geometry::build_mesh(ManifoldDescriptor::cylinder(1.0, 1.0, n, n)); }

Eigen::VectorXd cos_mode(const Mesh& m)
{
    Eigen::VectorXd f(m.vertex_count());
    for (int v = 0; v < m.vertex_count(); ++v) f[v] = 1.0 + std::cos(kPi * m.points[v][0]);
    return f;
}

Eigen::VectorXd random_field(const Mesh& m, unsigned seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    Eigen::VectorXd f(m.vertex_count());
    for (int v = 0; v < m.vertex_count(); ++v) f[v] = U(rng);
    return f;
}

int centre_vertex(const Mesh& m)
{
    std::array<int, 3> c{m.axis_n[0] / 2, m.axis_n[1] / 2, m.dim == 3 ? m.axis_n[2] / 2 : 0};
    return m.index(c);
}

} // namespace

TEST_CASE("equilibrium stays fixed")
{
    const Mesh m = cylinder(12);
    for (Scheme s : {Scheme::CrankNicolson, Scheme::BackwardEuler, Scheme::DenseExponential}) {
        HeatOptions o;
        o.scheme = s;
        o.dt = 1e-3;
        const auto f = solve_neumann_heat(m, Eigen::VectorXd::Ones(m.vertex_count()), {0.1, 0.5}, o);
        for (const auto& v : f.values) CHECK((v.array() - 1.0).abs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("separated mode decays at the continuum rate up to O(h^2)")
{
    HeatOptions o;
    o.dt = 1e-3;
    auto err = [&](int n, double t) {
        const Mesh m = cylinder(n);
        const auto f = solve_neumann_heat(m, cos_mode(m), {t}, o);
        double e = 0.0;
        for (int v = 0; v < m.vertex_count(); ++v) {
            const double exact = 1.0 + std::exp(-kPi * kPi * t) * std::cos(kPi * m.points[v][0]);
            e = std::max(e, std::abs(f.values[0][v] - exact) / exact);
        }
        return e;
    };
    CHECK(err(32, 1.0) <= 1e-4);
    CHECK(err(32, 0.5) <= 1e-4);
    const double e1 = err(16, 0.1);
    const double e2 = err(32, 0.1);
    CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("mass conservation, positivity and semigroup (property)")
{
    const Mesh m = cylinder(20);
    HeatOptions o;
    o.dt = 1e-3;
    for (unsigned seed = 1; seed <= 5; ++seed) {
        const Eigen::VectorXd f0 = random_field(m, seed);
        const double mass = m.weights.dot(f0);
        const auto f = solve_neumann_heat(m, f0, {0.05, 0.1, 0.3}, o);
        for (const auto& v : f.values) {
            CHECK(std::abs(m.weights.dot(v) - mass) / mass <= 1e-10);
            CHECK(v.minCoeff() > 0.0);
        }
        const auto a = solve_neumann_heat(m, f.values[0], {0.05}, o);
        CHECK((a.values[0] - f.values[1]).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("Crank-Nicolson matches the dense exponential oracle")
{
    const Mesh m = cylinder(32);
    Eigen::VectorXd f0(m.vertex_count());
    for (int v = 0; v < m.vertex_count(); ++v) {
        const Vec3& p = m.points[v];
        f0[v] = 1.0 + 0.5 * std::cos(kPi * p[0]) * std::cos(2 * kPi * p[1]) + 0.3 * std::cos(2 * kPi * p[0]);
    }
    HeatOptions o;
    o.dt = 1e-4;
    const std::vector<double> ts{0.01, 0.1, 1.0};
    const auto f = solve_neumann_heat(m, f0, ts, o);
    for (size_t k = 0; k < ts.size(); ++k) {
        const Eigen::VectorXd ref = oracles::dense_heat_oracle(m, f0, ts[k]);
        CHECK((f.values[k] - ref).cwiseAbs().maxCoeff() <= 1e-6);
    }
    HeatOptions e;
    e.scheme = Scheme::DenseExponential;
    const auto g = solve_neumann_heat(m, f0, ts, e);
    for (size_t k = 0; k < ts.size(); ++k)
        CHECK((g.values[k] - oracles::dense_heat_oracle(m, f0, ts[k])).cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("dense exponential on the disk matches the eigendecomposition oracle")
{
    const Mesh m = geometry::build_mesh(ManifoldDescriptor::disk(1.0, 6, 16));
    const Eigen::VectorXd f0 = random_field(m, 3);
    HeatOptions e;
    e.scheme = Scheme::DenseExponential;
    const auto g = solve_neumann_heat(m, f0, {0.02, 0.4}, e);
    CHECK((g.values[0] - oracles::dense_heat_oracle(m, f0, 0.02)).cwiseAbs().maxCoeff() <= 1e-11);
    CHECK((g.values[1] - oracles::dense_heat_oracle(m, f0, 0.4)).cwiseAbs().maxCoeff() <= 1e-11);
}

TEST_CASE("invalid inputs are rejected")
{
    const Mesh m = cylinder(8);
    CHECK_THROWS_AS(solve_neumann_heat(m, Eigen::VectorXd::Zero(m.vertex_count()), {0.1}), Error);
    Eigen::VectorXd neg = Eigen::VectorXd::Ones(m.vertex_count());
    neg[3] = -0.1;
    CHECK_THROWS_AS(solve_neumann_heat(m, neg, {0.1}), Error);
    CHECK_THROWS_AS(solve_neumann_heat(m, Eigen::VectorXd::Ones(m.vertex_count()), {0.2, 0.1}), Error);
    CHECK_THROWS_AS(heat_kernel(m, 0, {0.0}), Error);
    CHECK_THROWS_AS(heat_kernel(m, 0, {-1.0}), Error);
}

TEST_CASE("heat kernel: normalisation, symmetry, ergodic limit")
{
    const Mesh m = cylinder(24);
    const int y = m.index({5, 7, 0});
    const int x = m.index({15, 20, 0});
    const auto gy = heat_kernel(m, y, {0.01, 0.1, 1.0});
    const auto gx = heat_kernel(m, x, {0.01, 0.1, 1.0});
    for (size_t k = 0; k < gy.size(); ++k) {
        CHECK(std::abs(m.weights.dot(gy.values[k]) - 1.0) <= 1e-8);
        const double scale = gy.values[k].maxCoeff();
        CHECK(std::abs(gy.values[k][x] - gx.values[k][y]) <= 1e-8 * scale);
    }
    const double diam2 = 1.0 + 0.25;
    const auto late = heat_kernel(m, y, {10.0 * diam2});
    CHECK((late.values[0].array() - 1.0).abs().maxCoeff() <= 1e-6);
}

TEST_CASE("log Hessian: constants, Gaussians, and the wide-stencil oracle")
{
    const Mesh m = cylinder(32);
    const HessianField z = log_hessian(m, Eigen::VectorXd::Constant(m.vertex_count(), 3.0));
    for (const auto& H : z.values) CHECK(H.norm() < 1e-12);

    const double t = 0.02;
    const Vec3 y(0.5, 0.5, 0.0);
    Eigen::VectorXd g(m.vertex_count());
    for (int v = 0; v < m.vertex_count(); ++v) g[v] = std::exp(-(m.points[v] - y).squaredNorm() / (4 * t));
    const HessianField H = log_hessian(m, g);
    for (int v = 0; v < m.vertex_count(); ++v) {
        if ((m.points[v] - y).norm() > 0.3) continue;
        CHECK(H.values[v](0, 0) == doctest::Approx(-1.0 / (2 * t)).epsilon(1e-9));
        CHECK(H.values[v](1, 1) == doctest::Approx(-1.0 / (2 * t)).epsilon(1e-9));
    }

    auto gap = [](int n) {
        const Mesh mm = cylinder(n);
        HeatOptions e;
        e.scheme = Scheme::DenseExponential;
        const auto k = analytic_kernel(mm, mm.index({n / 3, n / 2, 0}), {0.05}, e);
        const HessianField a = log_hessian(mm, k.values[0]);
        Eigen::VectorXd lg = k.values[0].array().log();
        const auto b = oracles::fd_hessian_oracle(mm, lg);
        double d = 0.0;
        for (int v = 0; v < mm.vertex_count(); ++v)
            d = std::max(d, (a.values[v] - b[v]).topLeftCorner<2, 2>().cwiseAbs().maxCoeff());
        return d;
    };
    CHECK(std::log2(gap(16) / gap(32)) > 1.8);

    Eigen::VectorXd bad = Eigen::VectorXd::Ones(m.vertex_count());
    bad[10] = 0.0;
    CHECK_THROWS_AS(log_hessian(m, bad), Error);
}

TEST_CASE("disk Hessian of a quadratic")
{
    const Mesh m = geometry::build_mesh(ManifoldDescriptor::disk(1.0, 32, 128));
    Eigen::VectorXd f(m.vertex_count());
    for (int v = 0; v < m.vertex_count(); ++v) {
        const Vec3& p = m.points[v];
        f[v] = p[0] * p[0] + 3 * p[0] * p[1] - p[1] * p[1];
    }
    const HessianField H = hessian(m, f);
    Eigen::Matrix2d exact;
    exact << 2, 3, 3, -2;
    CHECK((H.values[0].topLeftCorner<2, 2>() - exact).cwiseAbs().maxCoeff() < 1e-9);
    for (int v = 1; v < m.vertex_count(); ++v) {
        if (m.on_boundary[v]) continue;
        CHECK((H.values[v].topLeftCorner<2, 2>() - exact).cwiseAbs().maxCoeff() < 1e-2);
    }
}

TEST_CASE("sharp estimate: constants, disk rejection, sampled series kernel")
{
    const Mesh m = cylinder(64);
    TimeField c;
    c.times = {0.1, 1.0};
    c.values = {Eigen::VectorXd::Ones(m.vertex_count()), Eigen::VectorXd::Ones(m.vertex_count())};
    const auto r = lyh_check_sharp(c, m, 0.0);
    CHECK(r.passed);
    CHECK(r.min_margin[0] == doctest::Approx(5.0));
    CHECK(r.min_margin[1] == doctest::Approx(0.5));

    const Mesh disk = geometry::build_mesh(ManifoldDescriptor::disk(1.0, 8, 16));
    TimeField d;
    d.times = {0.1};
    d.values = {Eigen::VectorXd::Ones(disk.vertex_count())};
    CHECK_THROWS_AS(lyh_check_sharp(d, disk, 0.0), Error);

    // Closed-form kernel sampled on the grid.
    const int y = centre_vertex(m);
    TimeField s;
    s.times = log_spaced(0.01, 1.0, 12);
    for (double t : s.times) {
        Eigen::VectorXd p(m.vertex_count());
        for (int v = 0; v < m.vertex_count(); ++v)
            p[v] = oracles::product_kernel(m.desc, t, m.points[v], m.points[y]);
        s.values.push_back(p);
    }
    CHECK(lyh_check_sharp(s, m, 1e-3).passed);
}

TEST_CASE("near-Gaussian regime is nearly sharp")
{
    const Mesh m = cylinder(64);
    HeatOptions e;
    e.scheme = Scheme::DenseExponential;
    const double t = 0.02;
    const auto k = analytic_kernel(m, centre_vertex(m), {t}, e);
    const Eigen::VectorXd margin = lyh_margin_field(m, k.values[0], t);
    CHECK(margin[centre_vertex(m)] <= 0.05 / (2 * t));
}

TEST_CASE("discrete kernel margins: calibrated tolerance and refinement order")
{
    HeatOptions e;
    e.scheme = Scheme::DenseExponential;
    const auto times = log_spaced(0.01, 1.0, 10);
    double v[2];
    int i = 0;
    for (int n : {32, 64}) {
        const Mesh m = cylinder(n);
        const int y = centre_vertex(m);
        const auto k = analytic_kernel(m, y, times, e);
        const auto cal = calibrate_tol_disc(m, y, times);
        const auto r = lyh_check_sharp(k, m, cal.tol_disc);
        CHECK(r.passed);
        v[i++] = std::max(0.0, -r.worst_margin);
    }
    CHECK(std::log2(v[0] / v[1]) >= 1.8);
}

TEST_CASE("constant fit: constants, scaled kernels, mass guard")
{
    const Mesh m = cylinder(32);
    TimeField c;
    c.times = {0.1, 1.0};
    c.values = {Eigen::VectorXd::Constant(m.vertex_count(), 0.8), Eigen::VectorXd::Constant(m.vertex_count(), 0.8)};
    CHECK(lyh_fit_constants(c, m, 1.0, 0.0).A == 0.0);

    HeatOptions e;
    e.scheme = Scheme::DenseExponential;
    const int y = centre_vertex(m);
    const auto times = log_spaced(0.01, 1.0, 8);
    const auto k = analytic_kernel(m, y, times, e);
    const double C = kernel_decay_bound({&k}, m);
    const double tol = calibrate_tol_disc(m, y, times).tol_disc;
    const auto fit = lyh_fit_constants(k, m, C, tol);
    CHECK(fit.feasible);
    CHECK(fit.A <= 0.05);
    TimeField half = k;
    for (auto& v : half.values) v *= 0.5;
    CHECK(std::abs(lyh_fit_constants(half, m, C, tol).A - fit.A) <= 1e-3);
    TimeField heavy = k;
    for (auto& v : heavy.values) v *= 2.0;
    CHECK_THROWS_AS(lyh_fit_constants(heavy, m, C, tol), Error);
}

TEST_CASE("kernel decay constant and slope")
{
    HeatOptions e;
    e.scheme = Scheme::DenseExponential;
    const auto times = log_spaced(0.002, 1.0, 30);
    double C[2];
    int i = 0;
    for (int n : {32, 64}) {
        const Mesh m = cylinder(n);
        const auto k = analytic_kernel(m, centre_vertex(m), times, e);
        C[i++] = kernel_decay_bound({&k}, m);
        if (n == 64) CHECK(decay_slope(k, 0.01, 0.05).slope == doctest::Approx(-1.0).epsilon(0.1));
    }
    CHECK(std::abs(C[0] - C[1]) <= 0.05 * C[1]);

    const Mesh m = cylinder(16);
    TimeField c;
    c.times = {0.5, 1.0};
    c.values = {Eigen::VectorXd::Ones(m.vertex_count()), Eigen::VectorXd::Ones(m.vertex_count())};
    CHECK(kernel_decay_bound({&c}, m) == doctest::Approx(1.0));
}

TEST_CASE("doubling equivalence")
{
    const Mesh m = cylinder(16);
    HeatOptions o;
    o.dt = 1e-3;
    const std::vector<double> ts{0.01, 0.1};
    CHECK(doubling_equivalence_check(m, Eigen::VectorXd::Ones(m.vertex_count()), ts, o) <= 1e-14);
    CHECK(doubling_equivalence_check(m, cos_mode(m), ts, o) <= 1e-8);
    for (unsigned seed = 0; seed < 10; ++seed) CHECK(doubling_equivalence_check(m, random_field(m, seed), ts, o) <= 1e-8);
    const Mesh s = geometry::build_mesh(ManifoldDescriptor::slab(1, 1, 1, 6, 5, 5));
    CHECK(doubling_equivalence_check(s, random_field(s, 4), ts, o) <= 1e-8);
}

TEST_CASE("time field export")
{
    const Mesh m = cylinder(6);
    const auto f = heat_kernel(m, 3, {0.05, 0.1});
    const auto dir = std::filesystem::temp_directory_path();
    const std::string bin = (dir / "hklab_test_field.bin").string();
    write_time_field_binary(bin, f);
    const TimeField g = read_time_field_binary(bin);
    CHECK(g.times == f.times);
    CHECK((g.values[1] - f.values[1]).norm() == 0.0);
    const std::string csv = (dir / "hklab_test_field.csv").string();
    write_time_field_csv(csv, f, m);
    std::ifstream is(csv);
    std::string header;
    std::getline(is, header);
    CHECK(header == "t,vertex,x,y,z,value");
    std::remove(bin.c_str());
    std::remove(csv.c_str());

    LYHReport r = lyh_check_sharp(f, m, 10.0);
    const auto j = nlohmann::json::parse(lyh_report_json(r));
    CHECK(j["times"].size() == 2);
}
