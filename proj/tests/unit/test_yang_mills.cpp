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
#include <hklab/yang_mills.hpp>

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

using namespace hklab;
using namespace hklab::ym;
using geometry::ManifoldDescriptor;
using geometry::Mesh;

namespace {

constexpr double kPi = std::numbers::pi;

std::shared_ptr<const Mesh> make(const ManifoldDescriptor& d)
{
    return std::make_shared<const Mesh>(geometry::build_mesh(d));
}

std::shared_ptr<const Mesh> cylinder(int n) { return make(ManifoldDescriptor::cylinder(1.0, 1.0, n, n)); }
std::shared_ptr<const Mesh> slab(int n) { return make(ManifoldDescriptor::slab(1.0, 1.0, 1.0, n, n, n)); }

std::vector<Quat> random_gauge(int n, Group g, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<Quat> out(static_cast<size_t>(n));
    for (Quat& q : out) {
        const Vec3 v = g == Group::U1 ? Vec3(3.0 * z(rng), 0, 0) : Vec3(z(rng), z(rng), z(rng));
        q = exp_algebra(v);
    }
    return out;
}

Form random_form(int n, Group g, std::mt19937_64& rng)
{
    std::normal_distribution<double> z;
    Form f(static_cast<size_t>(n));
    for (Vec3& x : f) x = g == Group::U1 ? Vec3(z(rng), 0, 0) : Vec3(z(rng), z(rng), z(rng));
    return f;
}

double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace

TEST_CASE("quaternion exp and log are inverse on the principal branch")
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 200; ++k) {
        Vec3 v(u(rng), u(rng), u(rng));
        v *= 3.0 * std::abs(u(rng)) / v.norm();
        CHECK((log_algebra(exp_algebra(v)) - v).norm() < 1e-12);
        const Quat q = exp_algebra(v);
        CHECK((log_algebra(inverse(q)) + v).norm() < 1e-12);
        const Vec3 w(u(rng), u(rng), u(rng));
        CHECK(std::abs(adjoint(q, w).norm() - w.norm()) < 1e-12);
    }
    CHECK(norm_factor(Group::U1) == 1.0);
    CHECK(norm_factor(Group::SU2) == 2.0);
}

TEST_CASE("random connections")
{
    auto m = cylinder(32);
    SUBCASE("zero amplitude is flat")
    {
        const auto c = random_connection(m, Group::SU2, 0.0, 4);
        CHECK(yang_mills_energy(c) == 0.0);
        CHECK(curvature_sup(c) == 0.0);
    }
    SUBCASE("deterministic per seed")
    {
        const auto a = random_connection(m, Group::SU2, 0.3, 9);
        const auto b = random_connection(m, Group::SU2, 0.3, 9);
        for (size_t e = 0; e < a.links.size(); ++e) CHECK(a.links[e].w == b.links[e].w);
        CHECK(yang_mills_energy(a) == yang_mills_energy(b));
        const auto c = random_connection(m, Group::U1, 0.1, 1);
        const double E = yang_mills_energy(c);
        CHECK(E > 0.0);
        CHECK(std::isfinite(E));
        for (const Quat& q : c.links) CHECK(q.y == 0.0);
    }
    SUBCASE("amplitude outside [0, pi/4] is rejected")
    {
        CHECK_THROWS_AS(random_connection(m, Group::U1, 0.8, 1), Error);
        CHECK_THROWS_AS(random_connection(m, Group::U1, -0.1, 1), Error);
    }
}

TEST_CASE("constant curvature U1 field")
{
    for (int n : {8, 32}) {
        auto m = cylinder(n);
        const double b = 1.7;
        const auto c = constant_curvature_u1(m, b, 0.4);
        const auto F = plaquette_curvature(c);
        for (const Vec3& f : F.F) CHECK(std::abs(f.x() - b) < 1e-10);
        CHECK(std::abs(yang_mills_energy(c) - b * b) < 1e-10);
        const Eigen::VectorXd q = curvature_density(c);
        CHECK(max_abs_diff(q, Eigen::VectorXd::Constant(q.size(), b * b)) < 1e-10);
    }
}

TEST_CASE("single plaquette energy")
{
    auto m = cylinder(8);
    const auto c = identity_connection(m, Group::SU2);
    CurvatureField F;
    F.F.assign(m->plaquettes.size(), Vec3::Zero());
    F.F[13] = Vec3(0.3, -0.2, 0.5);
    CHECK(yang_mills_energy(c, F) == doctest::Approx(m->plaquettes[13].weight * 2.0 * 0.38).epsilon(1e-14));
}

TEST_CASE("gauge invariance")
{
    for (Group g : {Group::U1, Group::SU2}) {
        for (auto m : {cylinder(16), slab(6), make(ManifoldDescriptor::disk(1.0, 8, 32))}) {
            const auto c = random_connection(m, g, 0.6, 3);
            const auto gc = gauge_transform(c, random_gauge(m->vertex_count(), g, 5));
            const double E = yang_mills_energy(c);
            CHECK(std::abs(yang_mills_energy(gc) - E) <= 1e-10 * E);
            CHECK(max_abs_diff(curvature_density(gc), curvature_density(c)) <= 1e-10 * curvature_sup(c));
            const auto F = plaquette_curvature(c);
            const auto G = plaquette_curvature(gc);
            for (size_t p = 0; p < F.F.size(); ++p) CHECK(std::abs(F.F[p].norm() - G.F[p].norm()) < 1e-10);
        }
    }
}

TEST_CASE("orientation reversal flips the curvature sign")
{
    auto m = slab(5);
    const auto c = random_connection(m, Group::SU2, 0.7, 11);
    for (size_t p = 0; p < m->plaquettes.size(); ++p) {
        const auto& pl = m->plaquettes[p];
        Quat rev;
        for (int k = pl.corners - 1; k >= 0; --k) rev = rev * c.oriented(pl.edges[k], -pl.signs[k]);
        const Quat hol = plaquette_holonomy(c, static_cast<int>(p));
        const Vec3 fwd = log_algebra(hol);
        CHECK((log_algebra(inverse(hol)) + fwd).norm() == 0.0);
        CHECK((log_algebra(rev) + fwd).norm() < 1e-14);
    }
}

TEST_CASE("branch cut is flagged")
{
    auto m = cylinder(4);
    auto c = identity_connection(m, Group::U1);
    const auto& pl = m->plaquettes[5];
    c.links[pl.edges[0]] = exp_algebra(Vec3(kPi, 0, 0));
    CHECK_THROWS_AS(plaquette_curvature(c), Error);
    const auto F = plaquette_curvature_unchecked(c);
    CHECK(!F.flagged.empty());
}

TEST_CASE("energy gradient matches a finite difference of the energy")
{
    for (auto m : {cylinder(6), slab(4), make(ManifoldDescriptor::disk(1.0, 4, 12))}) {
        const auto c = random_connection(m, Group::SU2, 0.5, 2);
        const auto g = energy_gradient(c, plaquette_curvature(c), {});
        std::mt19937_64 rng(3);
        for (int trial = 0; trial < 20; ++trial) {
            const int e = static_cast<int>(rng() % m->edges.size());
            const Vec3 Y = Vec3(0.3, -0.7, 0.2);
            const double eps = 1e-5;
            auto cp = c;
            auto cm = c;
            cp.links[e] = exp_algebra(eps * Y) * c.links[e];
            cm.links[e] = exp_algebra(-eps * Y) * c.links[e];
            const double fd = (yang_mills_energy(cp) - yang_mills_energy(cm)) / (2 * eps);
            const double an = 2.0 * m->edges[e].coupling() * 2.0 * g[e].dot(Y);
            CHECK(std::abs(fd - an) <= 1e-6 * std::max(1.0, std::abs(an)));
        }
    }
}

TEST_CASE("link gradient equals the cubical adjoint of the curvature in the interior")
{
    auto m = slab(8);
    const auto c = smooth_random_connection(m, Group::SU2, BoundaryMode::Absolute, 1.5, 4);
    FormComplex fc(m);
    const auto F = plaquette_curvature(c);
    const auto g = energy_gradient(c, F, {});
    const Form ds = fc.d_star(c, 2, F.F);
    double worst = 0.0;
    double scale = 0.0;
    for (size_t e = 0; e < g.size(); ++e) {
        const int i = m->coords(m->edges[e].a)[0];
        if (i < 2 || i > 6) continue;
        worst = std::max(worst, (g[e] / m->edges[e].length - ds[e]).norm());
        scale = std::max(scale, ds[e].norm());
    }
    CHECK(scale > 0.0);
    CHECK(worst <= 1e-12 * scale);
}

TEST_CASE("boundary conditions")
{
    SUBCASE("relative on a 2-D cylinder changes nothing")
    {
        auto m = cylinder(16);
        const auto c = random_connection(m, Group::SU2, 0.5, 1);
        const auto r = apply_boundary_conditions(c, BoundaryMode::Relative);
        for (size_t e = 0; e < c.links.size(); ++e) CHECK(r.links[e].w == c.links[e].w);
        CHECK(bc_residual(r, BoundaryMode::Relative) == 0.0);
    }
    SUBCASE("relative on a slab flattens the boundary faces")
    {
        auto m = slab(6);
        const auto c = random_connection(m, Group::SU2, 0.5, 1);
        CHECK(bc_residual(c, BoundaryMode::Relative) > 0.1);
        const auto r = apply_boundary_conditions(c, BoundaryMode::Relative);
        CHECK(bc_residual(r, BoundaryMode::Relative) == 0.0);
    }
    SUBCASE("absolute mirror ghosts cancel the normal curvature")
    {
        for (auto m : {slab(6), cylinder(16), make(ManifoldDescriptor::disk(1.0, 8, 32))}) {
            const auto c = random_connection(m, Group::SU2, 0.5, 1);
            CHECK(bc_residual(apply_boundary_conditions(c, BoundaryMode::Absolute), BoundaryMode::Absolute) <= 1e-12);
        }
    }
}

TEST_CASE("flow step")
{
    SUBCASE("flat connection is a fixed point")
    {
        auto m = slab(5);
        auto s = make_flow_state(identity_connection(m, Group::SU2), BoundaryMode::Absolute);
        const auto before = s.conn.links;
        flow_step(s, default_flow_dt(*m));
        for (size_t e = 0; e < before.size(); ++e) CHECK(s.conn.links[e].w == 1.0);
        CHECK(s.energy == 0.0);
    }
    SUBCASE("constant curvature is stationary under the relative condition")
    {
        auto m = cylinder(16);
        auto s = make_flow_state(constant_curvature_u1(m, 2.0), BoundaryMode::Relative);
        const auto before = s.conn;
        for (int k = 0; k < 5; ++k) {
            flow_step(s, default_flow_dt(*m));
            double worst = 0.0;
            for (size_t e = 0; e < before.links.size(); ++e)
                worst = std::max(worst, log_algebra(inverse(before.links[e]) * s.conn.links[e]).norm());
            CHECK(worst <= 1e-10 * (k + 1));
        }
    }
    SUBCASE("stability limit")
    {
        auto m = cylinder(16);
        CHECK(cfl_limit(*m) == doctest::Approx(1.0 / (2.0 * 256)).epsilon(1e-12));
        CHECK(default_flow_dt(*m) <= 0.5 * cfl_limit(*m));
        auto s = make_flow_state(random_connection(m, Group::U1, 0.3, 1), BoundaryMode::Absolute);
        CHECK_THROWS_AS(flow_step(s, 1.5 * cfl_limit(*m)), Error);
    }
    SUBCASE("descent and boundary residual on random starts")
    {
        for (auto m : {cylinder(12), slab(5)}) {
            for (Group g : {Group::U1, Group::SU2}) {
                for (BoundaryMode mode : {BoundaryMode::Relative, BoundaryMode::Absolute}) {
                    for (std::uint64_t seed = 0; seed < 3; ++seed) {
                        auto run = run_flow(make_flow_state(random_connection(m, g, 0.7, seed), mode), 25,
                                            default_flow_dt(*m), 5);
                        CHECK(run.descent_violations == 0);
                        CHECK(run.worst_bc_residual <= 1e-12);
                        for (size_t k = 1; k < run.trace.size(); ++k) {
                            CHECK(run.trace[k].t > run.trace[k - 1].t);
                            CHECK(run.trace[k].energy <= run.trace[k - 1].energy + 1e-12);
                        }
                        for (const Quat& q : run.final_state.conn.links)
                            CHECK(std::abs(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z - 1.0) < 1e-12);
                    }
                }
            }
        }
    }
    SUBCASE("flat run gives a zero trace")
    {
        auto m = cylinder(8);
        auto run = run_flow(make_flow_state(identity_connection(m, Group::U1), BoundaryMode::Absolute), 4,
                            default_flow_dt(*m));
        for (const auto& r : run.trace) {
            CHECK(r.energy == 0.0);
            CHECK(r.sup_q == 0.0);
        }
        CHECK(energy_trace_csv(run.trace).rfind("t,energy,sup_q", 0) == 0);
    }
}

TEST_CASE("boundary normal derivative of q on the disk")
{
    auto m = make(ManifoldDescriptor::disk(1.0, 16, 64));
    const auto flat = identity_connection(m, Group::U1);
    CHECK(boundary_normal_derivative_of_q(flat).cwiseAbs().maxCoeff() == 0.0);
    auto run = run_flow(make_flow_state(smooth_random_connection(m, Group::U1, BoundaryMode::Absolute, 3.0, 5),
                                        BoundaryMode::Absolute),
                        100, default_flow_dt(*m), 50);
    for (const auto& r : run.trace) CHECK(r.max_dq_dnu <= 0.2 * m->radial_step());
}

TEST_CASE("flow snapshot round trip")
{
    auto m = slab(4);
    auto s = make_flow_state(random_connection(m, Group::SU2, 0.4, 8), BoundaryMode::Relative);
    flow_step(s, default_flow_dt(*m));
    const auto path = (std::filesystem::temp_directory_path() / "hklab_snapshot.bin").string();
    write_flow_snapshot(path, s);
    const FlowState r = read_flow_snapshot(path, m);
    CHECK(r.t == s.t);
    CHECK(r.mode == s.mode);
    CHECK(r.conn.group == Group::SU2);
    CHECK(r.energy == s.energy);
    CHECK_THROWS_AS(read_flow_snapshot(path, slab(5)), Error);
    std::filesystem::remove(path);
}

TEST_CASE("integration by parts is exact with the assembled boundary term")
{
    for (auto m : {slab(5), cylinder(7)}) {
        FormComplex fc(m);
        std::mt19937_64 rng(42);
        for (Group g : {Group::U1, Group::SU2}) {
            const auto c = random_connection(m, g, 0.7, 6);
            for (int trial = 0; trial < 10; ++trial) {
                for (int p = 0; p < fc.dim(); ++p) {
                    const Form phi = random_form(fc.count(p), g, rng);
                    const Form psi = random_form(fc.count(p + 1), g, rng);
                    const double scale = fc.inner_abs(g, p + 1, fc.d(c, p, phi), psi);
                    CHECK(int_parts_residual(fc, c, p, phi, psi) <= 1e-12 * scale);
                }
            }
            const Form zero(static_cast<size_t>(fc.count(1)), Vec3::Zero());
            CHECK(int_parts_residual(fc, c, 1, zero, random_form(fc.count(2), g, rng)) == 0.0);
        }
    }
}

TEST_CASE("interior supported forms have no boundary term")
{
    auto m = slab(6);
    FormComplex fc(m);
    const auto c = random_connection(m, Group::SU2, 0.5, 2);
    std::mt19937_64 rng(1);
    const Form phi = random_form(fc.count(1), Group::SU2, rng);
    Form psi = random_form(fc.count(2), Group::SU2, rng);
    for (int i = 0; i < fc.count(2); ++i) {
        const int x = m->coords(fc.cells(2)[i].base)[0];
        if (x < 2 || x > 3) psi[i].setZero();
    }
    CHECK(fc.boundary_term(c, 1, phi, psi) == 0.0);
    const double lhs = fc.inner(Group::SU2, 2, fc.d(c, 1, phi), psi);
    const double rhs = fc.inner(Group::SU2, 1, phi, fc.d_star(c, 2, psi));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
}

TEST_CASE("exterior derivative squares to zero on a flat connection")
{
    auto m = slab(5);
    FormComplex fc(m);
    const auto c = identity_connection(m, Group::SU2);
    std::mt19937_64 rng(2);
    const Form a = random_form(fc.count(0), Group::SU2, rng);
    const Form dda = fc.d(c, 1, fc.d(c, 0, a));
    for (const Vec3& x : dda) CHECK(x.norm() < 1e-9);
    CHECK_THROWS_AS(FormComplex(make(ManifoldDescriptor::disk(1.0, 4, 8))), Error);
}

TEST_CASE("monotonicity pairings")
{
    SUBCASE("flat connection and constant f")
    {
        auto m = slab(6);
        FormComplex fc(m);
        const Eigen::VectorXd one = Eigen::VectorXd::Ones(m->vertex_count());
        const auto flat = monot_identities_check(fc, identity_connection(m, Group::SU2), one);
        for (int k = 0; k < 3; ++k) {
            CHECK(flat.lhs[k] == 0.0);
            CHECK(flat.rhs[k] == 0.0);
        }
        const auto c = random_connection(m, Group::SU2, 0.5, 1);
        const auto r = monot_identities_check(fc, c, one);
        CHECK(std::abs(r.lhs[0]) < 1e-9);
        CHECK(std::abs(r.rhs[0]) < 1e-9);
    }
    SUBCASE("f with a normal derivative is rejected")
    {
        auto m = slab(6);
        FormComplex fc(m);
        Eigen::VectorXd f(m->vertex_count());
        for (int v = 0; v < m->vertex_count(); ++v) f[v] = std::exp(m->points[v].x());
        CHECK_THROWS_AS(monot_identities_check(fc, identity_connection(m, Group::U1), f), Error);
    }
    SUBCASE("flow snapshot residuals shrink under refinement")
    {
        double prev[3] = {0, 0, 0};
        for (int n : {12, 16}) {
            auto m = slab(n);
            FormComplex fc(m);
            const double T = 0.005;
            const double h = 1.0 / n;
            const int steps = static_cast<int>(std::ceil(T / (h * h / 8)));
            auto run = run_flow(make_flow_state(smooth_random_connection(m, Group::SU2, BoundaryMode::Absolute, 1.0, 7),
                                                BoundaryMode::Absolute),
                                steps, T / steps, steps);
            const auto k = heat::heat_kernel(*m, m->index({n / 4, n / 2, n / 2}), {0.05},
                                             heat::HeatOptions{heat::Scheme::DenseExponential});
            const auto r = monot_identities_check(fc, run.final_state.conn, k.at(0.05));
            for (int i = 0; i < 3; ++i) {
                if (n == 16) {
                    CHECK(r.residual[i] <= 1e-2);
                    CHECK(r.residual[i] <= prev[i] * 12.0 / 16.0);
                }
                prev[i] = r.residual[i];
            }
        }
    }
}

TEST_CASE("zeta functional")
{
    auto m = cylinder(16);
    const int y = m->index({8, 8, 0});
    const double dt = default_flow_dt(*m);
    auto run = run_flow(make_flow_state(smooth_random_connection(m, Group::U1, BoundaryMode::Absolute, 2.0, 1),
                                        BoundaryMode::Absolute),
                        20, dt);
    const double r = run.history.times.back();
    std::vector<double> ts;
    for (int k = 1; k <= 20; ++k) ts.push_back(k * dt);
    const auto g = heat::heat_kernel(*m, y, ts, heat::HeatOptions{heat::Scheme::DenseExponential});
    SUBCASE("flat flow gives zero")
    {
        auto flat = run_flow(make_flow_state(identity_connection(m, Group::U1), BoundaryMode::Absolute), 20, dt);
        CHECK(zeta_functional(flat.history, g, *m, r, ts[3]) == 0.0);
    }
    SUBCASE("missing snapshot names the nearest time")
    {
        try {
            zeta_functional(run.history, g, *m, r + 0.3 * dt, ts[0]);
            CHECK(false);
        } catch (const Error& e) {
            CHECK(std::string(e.what()).find("nearest stored time") != std::string::npos);
        }
    }
    SUBCASE("bounded by the kernel decay constant")
    {
        std::vector<double> half;
        for (double t : ts) half.push_back(0.5 * t);
        const auto gt = heat::analytic_kernel(*m, y, half, heat::HeatOptions{heat::Scheme::DenseExponential});
        const double C1 = 2.0 * heat::kernel_decay_bound({&gt}, *m);
        for (double t : ts) CHECK(zeta_functional(run.history, g, *m, r, t) <= C1 / t * run.history.energy.front());
    }
    SUBCASE("small times approach q(r, y)")
    {
        auto fine = cylinder(32);
        const int yf = fine->index({16, 16, 0});
        const double dtf = default_flow_dt(*fine);
        auto rf = run_flow(make_flow_state(smooth_random_connection(fine, Group::U1, BoundaryMode::Absolute, 2.0, 1),
                                           BoundaryMode::Absolute),
                           40, dtf);
        const double rr = rf.history.times.back();
        const double h = fine->h();
        const double t = std::round(h * h / dtf) * dtf;
        const auto gk = heat::heat_kernel(*fine, yf, {t}, heat::HeatOptions{heat::Scheme::DenseExponential});
        const double z = zeta_functional(rf.history, gk, *fine, rr, t);
        CHECK(std::abs(z - rf.history.q.back()[yf]) <= 0.05 * rf.history.q.back()[yf]);
    }
}

TEST_CASE("monotonicity fit")
{
    auto m = cylinder(8);
    SUBCASE("constant zeta needs no constants")
    {
        const auto r = monotonicity_check(*m, {0.1, 0.2, 0.4}, {2.0, 2.0, 2.0}, 2.0);
        CHECK(r.u_bar == 0.0);
        CHECK(r.C3 == 0.0);
        CHECK(r.finite);
        CHECK(r.pairs == 3);
    }
    SUBCASE("fitted constants close the inequality")
    {
        const std::vector<double> t{0.1, 0.2, 0.3};
        const std::vector<double> z{50.0, 5.0, 1.0};
        const auto r = monotonicity_check(*m, t, z, 3.0);
        CHECK(r.u_bar > 0.0);
        CHECK(r.C3 > 0.0);
        CHECK(r.worst_slack >= -1e-12);
        for (size_t i = 0; i < 3; ++i)
            for (size_t j = i + 1; j < 3; ++j)
                CHECK(z[i] <= (t[j] * t[j] * z[j] + r.C3 * (t[j] - t[i]) * 3.0) / (t[i] * t[i]) + 1e-12);
    }
    SUBCASE("curved boundary is rejected")
    {
        auto d = make(ManifoldDescriptor::disk(1.0, 4, 16));
        CHECK_THROWS_AS(monotonicity_check(*d, {0.1, 0.2}, {1.0, 1.0}, 1.0), Error);
    }
}

TEST_CASE("Bochner residual")
{
    auto m = cylinder(16);
    SUBCASE("constant curvature gives zero")
    {
        auto run = run_flow(make_flow_state(constant_curvature_u1(m, 1.5), BoundaryMode::Relative), 4,
                            default_flow_dt(*m));
        const auto b = bochner_residual(run.history, *m, 2);
        CHECK(b.lhs.cwiseAbs().maxCoeff() < 1e-6);
        CHECK(b.C2 < 1e-6);
    }
    SUBCASE("flat flow")
    {
        auto run = run_flow(make_flow_state(identity_connection(m, Group::U1), BoundaryMode::Absolute), 4,
                            default_flow_dt(*m));
        const auto b = bochner_residual(run.history, *m, 1);
        CHECK(b.lhs.cwiseAbs().maxCoeff() == 0.0);
        CHECK(b.C2 == 0.0);
        CHECK_THROWS_AS(bochner_residual(run.history, *m, 0), Error);
    }
}
