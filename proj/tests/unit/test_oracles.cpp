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
#include <hklab/oracles.hpp>

#include "doctest.h"

#include <cmath>
#include <numbers>

using namespace hklab;
using namespace hklab::oracles;
using geometry::ManifoldDescriptor;

namespace {

constexpr double kPi = std::numbers::pi;

// Composite Simpson rule on [0, L].
template <class F>
double simpson(F f, double L, int n = 2000)
{
    const double h = L / n;
    double s = f(0.0) + f(L);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return s * h / 3.0;
}

} // namespace

TEST_CASE("interval Neumann kernel: image sum and cosine series agree")
{
    for (double t : {2e-4, 1e-3, 0.01, 0.05, 0.3, 1.0}) {
        for (double x : {0.0, 0.1, 0.37, 0.5, 0.99, 1.0}) {
            const double y = 0.23;
            const auto a = interval_neumann_jet(1.0, t, x, y, Representation::Images);
            const auto b = interval_neumann_jet(1.0, t, x, y, Representation::Spectral);
            const double scale = 1.0 / std::sqrt(t);
            CHECK(std::abs(a.value - b.value) <= 1e-12 * scale);
            CHECK(std::abs(a.dx - b.dx) <= 1e-11 * scale / t);
            CHECK(std::abs(a.dxx - b.dxx) <= 1e-10 * scale / (t * t));
        }
    }
}

TEST_CASE("interval Neumann kernel: symmetry, mass, Neumann ends, equilibrium")
{
    const double L = 1.7;
    for (double t : {0.01, 0.1, 1.0}) {
        CHECK(interval_neumann_kernel(L, t, 0.3, 1.1) == doctest::Approx(interval_neumann_kernel(L, t, 1.1, 0.3)));
        CHECK(simpson([&](double x) { return interval_neumann_kernel(L, t, x, 0.4); }, L) ==
              doctest::Approx(1.0).epsilon(1e-9));
        CHECK(std::abs(interval_neumann_jet(L, t, 0.0, 0.4).dx) < 1e-12);
        CHECK(std::abs(interval_neumann_jet(L, t, L, 0.4).dx) < 1e-10);
        CHECK(interval_neumann_kernel(L, t, 0.2, 0.9) > 0.0);
    }
    CHECK(interval_neumann_kernel(L, 100.0, 0.2, 1.5) == doctest::Approx(1.0 / L).epsilon(1e-12));
}

TEST_CASE("circle kernel: image sum and Fourier series agree")
{
    const double ell = 1.3;
    for (double t : {5e-4, 0.01, 0.1, 1.0}) {
        for (double x : {0.0, 0.2, 0.65, 1.29}) {
            const double a = torus_series_kernel(ell, t, x, 0.1, Representation::Images);
            const double b = torus_series_kernel(ell, t, x, 0.1, Representation::Spectral);
            CHECK(std::abs(a - b) <= 1e-12 / std::sqrt(t));
        }
        CHECK(simpson([&](double x) { return torus_series_kernel(ell, t, x, 0.1); }, ell) ==
              doctest::Approx(1.0).epsilon(1e-9));
    }
    CHECK(torus_series_kernel(ell, 50.0, 0.3, 1.0) == doctest::Approx(1.0 / ell).epsilon(1e-12));
}

TEST_CASE("product kernel integrates to one and satisfies the sharp log-Hessian bound")
{
    const auto cyl = ManifoldDescriptor::cylinder(1.0, 1.0, 8, 8);
    const Vec3 y(0.3, 0.6, 0.0);
    const double t = 0.05;
    const double mass = simpson(
        [&](double x) { return simpson([&](double z) { return product_kernel(cyl, t, Vec3(x, z, 0), y); }, 1.0, 200); },
        1.0, 200);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-8));
    for (double tt : {0.01, 0.1, 1.0})
        for (double x : {0.0, 0.25, 0.5, 1.0})
            for (double z : {0.0, 0.3, 0.55})
                CHECK(product_lyh_margin(cyl, tt, Vec3(x, z, 0), y) >= -1e-9);
    // Gaussian regime near the source: the bound is nearly attained.
    CHECK(product_lyh_margin(cyl, 1e-3, y, y) <= 0.05 / (2 * 1e-3));
}

TEST_CASE("dense oracle: equilibrium, semigroup, mass")
{
    const auto m = geometry::build_mesh(ManifoldDescriptor::cylinder(1.0, 1.0, 12, 10));
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(m.vertex_count());
    CHECK((dense_heat_oracle(m, one, 0.7) - one).cwiseAbs().maxCoeff() < 1e-12);
    Eigen::VectorXd f(m.vertex_count());
    for (int v = 0; v < m.vertex_count(); ++v) f[v] = 1.0 + std::sin(3 * m.points[v][0]) * std::cos(2 * kPi * m.points[v][1]);
    const Eigen::VectorXd a = dense_heat_oracle(m, dense_heat_oracle(m, f, 0.03), 0.05);
    const Eigen::VectorXd b = dense_heat_oracle(m, f, 0.08);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(m.weights.dot(b) == doctest::Approx(m.weights.dot(f)).epsilon(1e-13));
    const auto big = geometry::build_mesh(ManifoldDescriptor::cylinder(1.0, 1.0, 60, 60));
    CHECK_THROWS_AS(dense_heat_oracle(big, Eigen::VectorXd::Ones(big.vertex_count()), 0.1), Error);
}

TEST_CASE("fourth-order Hessian oracle")
{
    const auto m = geometry::build_mesh(ManifoldDescriptor::cylinder(1.0, 1.0, 20, 24));
    const double t = 0.05;
    Eigen::VectorXd f(m.vertex_count());
    for (int v = 0; v < m.vertex_count(); ++v) {
        const double x = m.points[v][0];
        f[v] = -(x - 0.4) * (x - 0.4) / (4 * t) + 2.0 * x;
    }
    auto H = fd_hessian_oracle(m, f);
    for (int v = 0; v < m.vertex_count(); ++v) {
        CHECK(H[v](0, 0) == doctest::Approx(-1.0 / (2 * t)).epsilon(1e-10));
        CHECK(std::abs(H[v](0, 1)) < 1e-9);
        CHECK(std::abs(H[v](1, 1)) < 1e-9);
    }
    // Fourth order on a smooth mixed field.
    auto err = [](int n) {
        const auto mm = geometry::build_mesh(ManifoldDescriptor::cylinder(1.0, 1.0, n, n));
        Eigen::VectorXd g(mm.vertex_count());
        for (int v = 0; v < mm.vertex_count(); ++v)
            g[v] = std::cos(1.3 * mm.points[v][0]) * std::sin(2 * kPi * mm.points[v][1]);
        auto HH = fd_hessian_oracle(mm, g);
        double e = 0.0;
        for (int v = 0; v < mm.vertex_count(); ++v) {
            const double x = mm.points[v][0];
            const double y = mm.points[v][1];
            e = std::max(e, std::abs(HH[v](0, 1) + 1.3 * 2 * kPi * std::sin(1.3 * x) * std::cos(2 * kPi * y)));
            e = std::max(e, std::abs(HH[v](1, 1) + 4 * kPi * kPi * std::cos(1.3 * x) * std::sin(2 * kPi * y)));
        }
        return e;
    };
    CHECK(std::log2(err(16) / err(32)) > 3.7);
}

TEST_CASE("half-line exit oracle")
{
    const double r = 0.3;
    CHECK(rbm_halfline_oracle(r, 0.0) == 0.0);
    CHECK(rbm_halfline_oracle(r, 1e-4) < 1e-50);
    CHECK(rbm_halfline_oracle(r, 100.0) == doctest::Approx(1.0));
    double prev = 0.0;
    for (double s : {0.05, 0.1, 0.2, 0.3, 0.5, 0.8, 1.0, 2.0}) {
        const double a = rbm_halfline_oracle(r, s * r * r, Representation::Images);
        const double b = rbm_halfline_oracle(r, s * r * r, Representation::Spectral);
        if (s >= 0.1) CHECK(std::abs(a - b) < 1e-12);
        CHECK(a >= prev);
        prev = a;
    }
}

TEST_CASE("oracle tables export")
{
    const std::string csv = interval_kernel_table(1.0, {0.1, 0.2}, 5, 0.3);
    CHECK(csv.rfind("t,x,y,value\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 11);
}
