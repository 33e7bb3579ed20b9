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
#include <hklab/experiments.hpp>
#include <hklab/heat.hpp>
#include <hklab/oracles.hpp>
#include <hklab/stochastic.hpp>

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace hklab::experiments {

namespace fs = std::filesystem;
using geometry::ManifoldDescriptor;
using geometry::Mesh;
using MeshPtr = std::shared_ptr<const Mesh>;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Monte Carlo agreement is judged at this many standard errors.
constexpr double kZ = 3.0;

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Csv
{
public:
    explicit Csv(const std::string& header) : m_text(header + "\n") {}

    template <class... Cells>
    void row(const Cells&... cells)
    {
        std::string line;
        ((line += (line.empty() ? "" : ",") + cell(cells)), ...);
        m_text += line + "\n";
    }

    const std::string& text() const { return m_text; }

private:
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }
    static std::string cell(double v) { return num(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(size_t v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "1" : "0"; }

    std::string m_text;
};

std::string plot_script(const std::string& title, const std::string& using_clause, const std::string& xlabel,
                        const std::string& ylabel, bool logx = false, bool logy = false)
{
    std::string s = "set datafile separator ','\n";
    s += "set title '" + title + "'\n";
    s += "set xlabel '" + xlabel + "'\nset ylabel '" + ylabel + "'\n";
    if (logx) s += "set logscale x\n";
    if (logy) s += "set logscale y\n";
    s += "plot 'data.csv' using " + using_clause + " with points notitle\n";
    return s;
}

ManifoldDescriptor descriptor(const ExperimentConfig& c, int n)
{
    if (c.manifold == "cylinder") return ManifoldDescriptor::cylinder(c.length, c.periods[0], n, n);
    if (c.manifold == "slab") return ManifoldDescriptor::slab(c.length, c.periods[0], c.periods[1], n, n, n);
    if (c.manifold == "disk") return ManifoldDescriptor::disk(c.radius, n, c.angular > 0 ? c.angular : 4 * n);
    fail(ErrorCode::DomainError, "experiment '" + c.experiment + "' needs a mesh, not manifold '" + c.manifold + "'");
}

MeshPtr make_mesh(const ExperimentConfig& c, int n)
{
    return std::make_shared<const Mesh>(geometry::build_mesh(descriptor(c, n)));
}

void require_product(const ExperimentConfig& c)
{
    if (c.manifold != "cylinder" && c.manifold != "slab")
        fail(ErrorCode::DomainError, "experiment '" + c.experiment + "' runs on cylinder or slab only");
}

int grid_vertex(const Mesh& m, double fx, double fy, double fz)
{
    const auto& g = m.desc.grid;
    return m.index({static_cast<int>(fx * g[0]), static_cast<int>(fy * g[1]), m.dim == 3 ? static_cast<int>(fz * g[2]) : 0});
}

int centre_vertex(const Mesh& m)
{
    return m.is_disk() ? 0 : grid_vertex(m, 0.5, 0.5, 0.5);
}

heat::HeatOptions dense()
{
    return heat::HeatOptions{heat::Scheme::DenseExponential};
}

std::string short_num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string tag(const std::string& base, int n)
{
    return base + "_n" + std::to_string(n);
}

double order(double coarse, double fine, int n_coarse, int n_fine)
{
    if (fine <= 0.0) return kInf;
    return std::log(coarse / fine) / std::log(static_cast<double>(n_fine) / n_coarse);
}

/// Values agree when all are zero or all lie within rel of their mean.
bool stable(const std::vector<double>& v, double rel)
{
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (mean == 0.0) return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
    return std::all_of(v.begin(), v.end(), [&](double x) { return std::abs(x - mean) <= rel * std::abs(mean); });
}

ym::LatticeConnection initial_connection(const ExperimentConfig& c, const MeshPtr& m, ym::Group g, ym::BoundaryMode mode,
                                         std::uint64_t seed)
{
    if (c.init == "random") return ym::random_connection(m, g, c.amplitude, seed);
    return ym::smooth_random_connection(m, g, mode, c.amplitude, seed);
}

struct FlowPlan
{
    int steps = 0;
    double dt = 0.0;
};

FlowPlan flow_plan(const ExperimentConfig& c, const Mesh& m)
{
    FlowPlan p{c.steps, ym::default_flow_dt(m)};
    if (c.flow_time > 0.0) {
        p.steps = static_cast<int>(std::ceil(c.flow_time / p.dt));
        p.dt = c.flow_time / p.steps;
    }
    return p;
}

struct Builder
{
    Verdict v;

    void margin(const std::string& k, double x) { v.margins.emplace_back(k, x); }
    void constant(const std::string& k, double x) { v.constants.emplace_back(k, x); }
    void se(const std::string& k, double x) { v.standard_errors.emplace_back(k, x); }
    void warn(const std::string& s)
    {
        if (std::find(v.warnings.begin(), v.warnings.end(), s) == v.warnings.end()) v.warnings.push_back(s);
    }
    void note(const std::string& s)
    {
        if (std::find(v.notes.begin(), v.notes.end(), s) == v.notes.end()) v.notes.push_back(s);
    }
};

// ---- heat ----

void lyh_sharp(const ExperimentConfig& c, Builder& b)
{
    require_product(c);
    const auto times = heat::log_spaced(c.t_min, c.t_max, c.t_count);
    Csv csv("n,t,min_margin,tol_disc");
    std::vector<double> violation;
    b.v.pass = true;
    for (int n : c.resolutions) {
        const auto m = make_mesh(c, n);
        const int y = centre_vertex(*m);
        const auto k = heat::analytic_kernel(*m, y, times, dense());
        const auto cal = heat::calibrate_tol_disc(*m, y, times);
        const auto r = heat::lyh_check_sharp(k, *m, cal.tol_disc);
        for (size_t i = 0; i < r.times.size(); ++i) csv.row(n, r.times[i], r.min_margin[i], cal.tol_disc);
        b.margin(tag("worst_margin", n), r.worst_margin);
        b.constant(tag("tol_disc", n), cal.tol_disc);
        b.v.pass = b.v.pass && r.passed;
        violation.push_back(std::max(0.0, -r.worst_margin));
    }
    for (size_t i = 0; i + 1 < violation.size(); ++i) {
        const int n0 = c.resolutions[i];
        const int n1 = c.resolutions[i + 1];
        if (violation[i] == 0.0) {
            b.note("no discretisation violation at n = " + std::to_string(n0));
            continue;
        }
        const double p = order(violation[i], violation[i + 1], n0, n1);
        b.constant("violation_order_" + std::to_string(n0) + "_" + std::to_string(n1), p);
        b.v.pass = b.v.pass && p >= c.min_order;
    }
    b.v.csv = csv.text();
    b.v.plot = plot_script("sharp LYH margin", "2:3", "t", "min margin", true);
}

void lyh_fit(const ExperimentConfig& c, Builder& b)
{
    require_product(c);
    const auto times = heat::log_spaced(c.t_min, c.t_max, c.t_count);
    const auto m = make_mesh(c, c.resolutions.front());
    const std::vector<int> sources{centre_vertex(*m), grid_vertex(*m, 0.25, 0.5, 0.5), grid_vertex(*m, 0.125, 0.25, 0.25)};
    std::vector<heat::TimeField> kernels;
    std::vector<const heat::TimeField*> ptrs;
    for (int y : sources) kernels.push_back(heat::analytic_kernel(*m, y, times, dense()));
    for (const auto& k : kernels) ptrs.push_back(&k);
    const double C = heat::kernel_decay_bound(ptrs, *m);
    b.constant("B", C);
    Csv csv("source,x,y,z,tol_disc,A,A_upper,binding_time");
    std::vector<double> A;
    bool feasible = true;
    for (size_t i = 0; i < sources.size(); ++i) {
        const double tol = heat::calibrate_tol_disc(*m, sources[i], times).tol_disc;
        const auto fit = heat::lyh_fit_constants(kernels[i], *m, C, tol);
        const Vec3& p = m->points[sources[i]];
        csv.row(sources[i], p.x(), p.y(), p.z(), tol, fit.A, fit.A_upper, fit.binding_time);
        b.constant("A_source" + std::to_string(i), fit.A);
        A.push_back(fit.A);
        feasible = feasible && fit.feasible;
    }
    const double spread = *std::max_element(A.begin(), A.end()) - *std::min_element(A.begin(), A.end());
    const double worst = *std::max_element(A.begin(), A.end());
    b.margin("A_slack", c.tol - worst);
    b.margin("A_spread", spread);
    b.v.pass = feasible && worst <= c.tol && spread <= c.stability;
    b.v.csv = csv.text();
    b.v.plot = plot_script("fitted A per source", "1:6", "source vertex", "A");
}

void doubling(const ExperimentConfig& c, Builder& b)
{
    require_product(c);
    const auto times = heat::log_spaced(c.t_min, c.t_max, c.t_count);
    const auto m = make_mesh(c, c.resolutions.front());
    Csv csv("seed,discrepancy");
    double worst = 0.0;
    for (std::uint64_t seed : c.seeds) {
        stochastic::Philox rng(seed, 0);
        Eigen::VectorXd f(m->vertex_count());
        for (Eigen::Index v = 0; v < f.size(); ++v) f[v] = rng.uniform();
        const double gap = heat::doubling_equivalence_check(*m, f, times);
        csv.row(seed, gap);
        worst = std::max(worst, gap);
    }
    b.margin("max_discrepancy", worst);
    b.v.pass = worst <= c.tol;
    b.v.csv = csv.text();
    b.v.plot = plot_script("Neumann vs doubled torus", "1:2", "seed", "sup-norm gap", false, true);
}

void kernel_decay(const ExperimentConfig& c, Builder& b)
{
    if (c.manifold == "halfline") fail(ErrorCode::DomainError, "kernel-decay needs a mesh");
    const auto times = heat::log_spaced(c.t_min, c.t_max, c.t_count);
    Csv csv("n,t,sup_p");
    b.v.pass = true;
    for (int n : c.resolutions) {
        const auto m = make_mesh(c, n);
        const auto k = heat::analytic_kernel(*m, centre_vertex(*m), times, dense());
        for (size_t i = 0; i < k.size(); ++i) csv.row(n, k.times[i], k.values[i].maxCoeff());
        const auto fit = heat::decay_slope(k, c.t_min, c.t_max);
        const double expected = -0.5 * m->dim;
        b.constant(tag("slope", n), fit.slope);
        b.constant(tag("C", n), heat::kernel_decay_bound({&k}, *m));
        b.margin(tag("slope_error", n), std::abs(fit.slope - expected));
        b.v.pass = b.v.pass && std::abs(fit.slope - expected) <= c.tol;
    }
    b.v.csv = csv.text();
    b.v.plot = plot_script("kernel decay", "2:3", "t", "sup p", true, true);
}

// ---- Yang-Mills ----

void ym_flow(const ExperimentConfig& c, Builder& b)
{
    const auto m = make_mesh(c, c.resolutions.front());
    const auto plan = flow_plan(c, *m);
    Csv csv("group,bc,seed,t,energy,sup_q,min_dq_dnu,max_dq_dnu,bc_residual");
    int violations = 0;
    double worst_increase = -kInf;
    double worst_bc = 0.0;
    for (auto g : c.groups)
        for (auto mode : c.bcs)
            for (auto seed : c.seeds) {
                const auto run = ym::run_flow(ym::make_flow_state(initial_connection(c, m, g, mode, seed), mode),
                                              plan.steps, plan.dt, std::max(1, plan.steps / 10));
                violations += run.descent_violations;
                worst_increase = std::max(worst_increase, run.worst_increase);
                worst_bc = std::max(worst_bc, run.worst_bc_residual);
                for (const auto& r : run.trace)
                    csv.row(ym::to_string(g), ym::to_string(mode), seed, r.t, r.energy, r.sup_q, r.min_dq_dnu,
                            r.max_dq_dnu, r.bc_residual);
            }
    b.margin("descent_violations", violations);
    b.margin("worst_energy_increase", worst_increase);
    b.margin("worst_bc_residual", worst_bc);
    b.constant("dt", plan.dt);
    b.constant("steps", plan.steps);
    b.v.pass = violations == 0 && worst_bc <= c.tol;
    b.v.csv = csv.text();
    b.v.plot = plot_script("Yang-Mills energy", "4:5", "t", "energy", false, true);
}

void boundary_sign(const ExperimentConfig& c, Builder& b)
{
    if (c.manifold != "disk") fail(ErrorCode::DomainError, "boundary-sign runs on the disk");
    Csv csv("group,nr,t,min_dq_dnu,max_dq_dnu");
    b.v.pass = true;
    const auto mode = c.bcs.front();
    for (auto g : c.groups) {
        std::vector<double> cs;
        for (int n : c.resolutions) {
            const auto m = make_mesh(c, n);
            const auto plan = flow_plan(c, *m);
            const auto run = ym::run_flow(ym::make_flow_state(initial_connection(c, m, g, mode, c.seeds.front()), mode),
                                          plan.steps, plan.dt, std::max(1, plan.steps / 10));
            double worst = -kInf;
            for (const auto& r : run.trace) {
                csv.row(ym::to_string(g), n, r.t, r.min_dq_dnu, r.max_dq_dnu);
                worst = std::max(worst, r.max_dq_dnu);
            }
            const double ch = worst / m->radial_step();
            b.margin(tag("max_dq_dnu_" + ym::to_string(g), n), worst);
            b.constant(tag("c_" + ym::to_string(g), n), ch);
            cs.push_back(std::max(0.0, ch));
        }
        for (size_t i = 0; i + 1 < cs.size(); ++i)
            b.v.pass = b.v.pass && (cs[i + 1] <= (1.0 + c.stability) * cs[i]);
    }
    b.v.csv = csv.text();
    b.v.plot = plot_script("boundary normal derivative of |F|^2", "3:5", "t", "max dq/dnu");
}

ym::Form random_form(int n, ym::Group g, stochastic::Philox& rng)
{
    ym::Form f(static_cast<size_t>(n));
    for (Vec3& x : f) x = g == ym::Group::U1 ? Vec3(rng.normal(), 0, 0) : Vec3(rng.normal(), rng.normal(), rng.normal());
    return f;
}

void int_parts(const ExperimentConfig& c, Builder& b)
{
    require_product(c);
    Csv csv("kind,n,sample,residual");
    {
        const int n = c.resolutions.back();
        const auto m = make_mesh(c, n);
        const ym::FormComplex fc(m);
        stochastic::Philox rng(c.seeds.front(), 1);
        double worst = 0.0;
        for (int i = 0; i < c.samples; ++i) {
            const auto g = c.groups[static_cast<size_t>(i) % c.groups.size()];
            const auto conn = ym::random_connection(m, g, 0.7, c.seeds.front() + static_cast<std::uint64_t>(i));
            const int p = i % fc.dim();
            const auto phi = random_form(fc.count(p), g, rng);
            const auto psi = random_form(fc.count(p + 1), g, rng);
            const double scale = fc.inner_abs(g, p + 1, fc.d(conn, p, phi), psi);
            const double rel = ym::int_parts_residual(fc, conn, p, phi, psi) / scale;
            csv.row("int_parts", n, i, rel);
            worst = std::max(worst, rel);
        }
        b.margin("int_parts_max_relative", worst);
        b.v.pass = worst <= c.tol;
    }
    const auto g = std::find(c.groups.begin(), c.groups.end(), ym::Group::SU2) != c.groups.end() ? ym::Group::SU2
                                                                                                 : c.groups.front();
    const auto mode = c.bcs.front();
    std::vector<std::array<double, 3>> res;
    for (int n : c.resolutions) {
        const auto m = make_mesh(c, n);
        const ym::FormComplex fc(m);
        const auto plan = flow_plan(c, *m);
        const auto run = ym::run_flow(ym::make_flow_state(initial_connection(c, m, g, mode, c.seeds.front()), mode),
                                      plan.steps, plan.dt, plan.steps);
        const auto k = heat::heat_kernel(*m, grid_vertex(*m, 0.25, 0.5, 0.5), {c.t_kernel}, dense());
        const auto r = ym::monot_identities_check(fc, run.final_state.conn, k.values[0]);
        res.push_back({r.residual[0], r.residual[1], r.residual[2]});
        for (int i = 0; i < 3; ++i) {
            csv.row("monot" + std::to_string(i), n, 0, r.residual[i]);
            b.margin(tag("monot" + std::to_string(i), n), r.residual[i]);
        }
    }
    for (int i = 0; i < 3; ++i) {
        b.v.pass = b.v.pass && res.back()[static_cast<size_t>(i)] <= c.monot_tol;
        if (res.size() >= 2) {
            const double p = order(res.front()[static_cast<size_t>(i)], res.back()[static_cast<size_t>(i)],
                                   c.resolutions.front(), c.resolutions.back());
            b.constant("monot" + std::to_string(i) + "_order", p);
            b.v.pass = b.v.pass && p >= c.min_order;
        }
    }
    b.v.csv = csv.text();
    b.v.plot = plot_script("identity residuals", "2:4", "n", "relative residual", false, true);
}

struct ZetaRun
{
    ym::Group group;
    ym::BoundaryMode mode;
    std::uint64_t seed;
    double ym0;
    std::vector<double> zeta;
};

struct ZetaStudy
{
    MeshPtr mesh;
    std::vector<double> times;
    double C1 = 0.0;
    std::vector<ZetaRun> runs;
};

ZetaStudy zeta_study(const ExperimentConfig& c)
{
    ZetaStudy z;
    z.mesh = make_mesh(c, c.resolutions.front());
    const Mesh& m = *z.mesh;
    const auto plan = flow_plan(c, m);
    const int y = centre_vertex(m);
    std::vector<int> ks;
    for (int j = 1; j <= c.t_count; ++j) {
        const int k = std::max(1, static_cast<int>(std::lround(static_cast<double>(plan.steps) * j / c.t_count)));
        if (ks.empty() || k > ks.back()) ks.push_back(k);
    }
    for (int k : ks) z.times.push_back(k * plan.dt);
    const auto g = heat::heat_kernel(m, y, z.times, dense());
    std::vector<double> half;
    for (double t : z.times) half.push_back(0.5 * t);
    const auto gt = heat::analytic_kernel(m, y, half, dense());
    z.C1 = std::pow(2.0, 0.5 * m.dim) * heat::kernel_decay_bound({&gt}, m);
    for (auto grp : c.groups)
        for (auto mode : c.bcs)
            for (auto seed : c.seeds) {
                const auto run = ym::run_flow(
                    ym::make_flow_state(initial_connection(c, z.mesh, grp, mode, seed), mode), plan.steps, plan.dt);
                ZetaRun zr{grp, mode, seed, run.history.energy.front(), {}};
                const double r = run.history.times.back();
                for (double t : z.times) zr.zeta.push_back(ym::zeta_functional(run.history, g, m, r, t));
                z.runs.push_back(std::move(zr));
            }
    return z;
}

void zeta(const ExperimentConfig& c, Builder& b)
{
    const auto z = zeta_study(c);
    Csv csv("group,bc,seed,t,zeta,bound");
    double worst = 0.0;
    for (const auto& r : z.runs)
        for (size_t i = 0; i < z.times.size(); ++i) {
            const double t = z.times[i];
            const double bound = z.C1 * std::pow(t, -0.5 * z.mesh->dim) * r.ym0;
            csv.row(ym::to_string(r.group), ym::to_string(r.mode), r.seed, t, r.zeta[i], bound);
            if (bound > 0.0) worst = std::max(worst, r.zeta[i] / bound);
            else if (r.zeta[i] > 0.0) worst = kInf;
        }
    b.constant("C1", z.C1);
    b.margin("max_zeta_over_bound", worst);
    b.constant("samples_per_run", static_cast<double>(z.times.size()));
    b.v.pass = worst <= c.tol;
    b.v.csv = csv.text();
    b.v.plot = plot_script("zeta against its bound", "4:($5/$6)", "t", "zeta / bound");
}

void monotonicity(const ExperimentConfig& c, Builder& b)
{
    const auto z = zeta_study(c);
    Csv csv("group,bc,seed,u_bar,C3,worst_slack,pairs");
    std::map<std::string, std::vector<double>> u;
    std::map<std::string, std::vector<double>> c3;
    bool finite = true;
    for (const auto& r : z.runs) {
        const auto rep = ym::monotonicity_check(*z.mesh, z.times, r.zeta, r.ym0);
        csv.row(ym::to_string(r.group), ym::to_string(r.mode), r.seed, rep.u_bar, rep.C3, rep.worst_slack, rep.pairs);
        const std::string key = ym::to_string(r.group) + "_" + ym::to_string(r.mode);
        u[key].push_back(rep.u_bar);
        c3[key].push_back(rep.C3);
        finite = finite && rep.finite && std::isfinite(rep.u_bar) && std::isfinite(rep.C3);
    }
    b.v.pass = finite;
    for (const auto& [key, vals] : u) {
        b.constant("u_bar_max_" + key, *std::max_element(vals.begin(), vals.end()));
        b.constant("C3_max_" + key, *std::max_element(c3[key].begin(), c3[key].end()));
        b.v.pass = b.v.pass && stable(vals, c.stability) && stable(c3[key], c.stability);
    }
    b.v.csv = csv.text();
    b.v.plot = plot_script("fitted monotonicity constants", "3:4", "seed", "u_bar");
}

void bochner(const ExperimentConfig& c, Builder& b)
{
    require_product(c);
    Csv csv("group,n,t,max_lhs,C2");
    b.v.pass = true;
    const auto mode = c.bcs.front();
    for (auto g : c.groups) {
        std::vector<double> C2;
        for (int n : c.resolutions) {
            const auto m = make_mesh(c, n);
            const auto plan = flow_plan(c, *m);
            const auto run = ym::run_flow(ym::make_flow_state(initial_connection(c, m, g, mode, c.seeds.front()), mode),
                                          plan.steps, plan.dt);
            double c2 = 0.0;
            double max_lhs = -kInf;
            for (size_t k = 1; k + 1 < run.history.q.size(); ++k) {
                const auto rep = ym::bochner_residual(run.history, *m, k);
                csv.row(ym::to_string(g), n, run.history.times[k], rep.max_lhs, rep.C2);
                c2 = std::max(c2, rep.C2);
                max_lhs = std::max(max_lhs, rep.max_lhs);
            }
            b.margin(tag("max_lhs_" + ym::to_string(g), n), max_lhs);
            b.constant(tag("C2_" + ym::to_string(g), n), c2);
            C2.push_back(c2);
            b.v.pass = b.v.pass && c2 >= 0.0;
        }
        b.v.pass = b.v.pass && stable(C2, c.stability);
    }
    b.v.csv = csv.text();
    b.v.plot = plot_script("Bochner residual", "3:4", "t", "max lhs");
}

// ---- reflecting Brownian motion ----

void exit_tail(const ExperimentConfig& c, Builder& b)
{
    const bool halfline = c.manifold == "halfline";
    if (!halfline && c.manifold != "disk") fail(ErrorCode::DomainError, "exit-tail runs on the disk or the half-line");
    const auto dom = halfline ? stochastic::Domain::halfline() : stochastic::Domain::of(descriptor(c, c.resolutions.front()));
    Csv csv("angle,r,kappa,count,p_hat,neg_log_p,se_log,dropped,oracle,z");
    const std::vector<double> angles = halfline ? std::vector<double>{0.0} : c.angles;
    std::vector<double> etas;
    double worst_z = 0.0;
    b.v.pass = true;
    std::uint64_t seed = c.seeds.front();
    for (double a : angles)
        for (double r : c.radii) {
            const Vec3 y = halfline ? Vec3::Zero() : Vec3(c.radius * std::cos(a), c.radius * std::sin(a), 0.0);
            const auto s = stochastic::sample_exit_times(dom, y, r, c.dt_factor * r * r, c.paths, c.horizon * r * r,
                                                         seed++, c.threads);
            for (const auto& w : s.warnings) b.warn(w);
            const auto rep = stochastic::exit_tail_estimate(s, c.kappas);
            for (const auto& n : rep.notes)
                if (std::find(s.warnings.begin(), s.warnings.end(), n) == s.warnings.end()) b.note(n);
            const std::string key = "angle" + short_num(a) + "_r" + short_num(r);
            double binding_se = 0.0;
            for (const auto& row : rep.rows) {
                double oracle = std::numeric_limits<double>::quiet_NaN();
                double z = std::numeric_limits<double>::quiet_NaN();
                if (halfline) {
                    oracle = oracles::rbm_halfline_oracle(r, row.kappa * r * r);
                    z = (row.p_hat - oracle) / std::sqrt(oracle * (1.0 - oracle) / static_cast<double>(c.paths));
                    worst_z = std::max(worst_z, std::abs(z));
                }
                csv.row(a, r, row.kappa, row.count, row.p_hat, row.neg_log_p, row.se_log, row.dropped, oracle, z);
                if (!row.dropped && std::abs(row.kappa * row.neg_log_p - rep.eta_hat) < 1e-15)
                    binding_se = row.kappa * row.se_log;
            }
            b.constant("eta_" + key, rep.eta_hat);
            b.se("eta_" + key, binding_se);
            b.v.pass = b.v.pass && rep.pass;
            etas.push_back(rep.eta_hat);
        }
    if (halfline) {
        b.margin("max_abs_z_vs_oracle", worst_z);
        b.v.pass = b.v.pass && worst_z <= c.tol;
    } else {
        double mean = 0.0;
        for (double e : etas) mean += e;
        mean /= static_cast<double>(etas.size());
        double dev = 0.0;
        for (double e : etas) dev = std::max(dev, std::abs(e - mean) / mean);
        b.constant("eta_mean", mean);
        b.margin("eta_max_relative_deviation", dev);
        b.v.pass = b.v.pass && dev <= c.stability;
    }
    b.v.csv = csv.text();
    b.v.plot = plot_script("exit-time tail", "(1/$3):6", "1/kappa", "-log P", false, true);
}

void dist_lemma(const ExperimentConfig& c, Builder& b)
{
    const double eps = c.radii.front();
    Csv csv("n,y,max_laplacian,max_laplacian_error,bound,min_normal_derivative");
    std::vector<double> err;
    b.v.pass = true;
    MeshPtr finest;
    for (int n : c.resolutions) {
        const auto m = make_mesh(c, n);
        const int y = m->is_disk() ? m->disk_index(3 * n / 4, n / 2) : grid_vertex(*m, 0.25, 1.0 / 3, 1.0 / 3);
        const auto r = stochastic::squared_distance_checks(*m, y, eps);
        csv.row(n, y, r.max_laplacian, r.max_laplacian_error, r.bound, r.min_normal_derivative);
        b.margin(tag("laplacian_error", n), r.max_laplacian_error);
        b.v.pass = b.v.pass && r.pass;
        err.push_back(r.max_laplacian_error);
        finest = m;
    }
    for (size_t i = 0; i + 1 < err.size(); ++i) {
        if (err[i] <= 1e-9) continue;
        const double p = order(err[i], err[i + 1], c.resolutions[i], c.resolutions[i + 1]);
        b.constant("laplacian_order_" + std::to_string(c.resolutions[i]) + "_" + std::to_string(c.resolutions[i + 1]), p);
        b.v.pass = b.v.pass && p >= c.min_order;
    }
    stochastic::Philox rng(c.seeds.front(), 2);
    double min_dnu = kInf;
    const int first = finest->is_disk() ? 1 : 0;
    for (int i = 0; i < c.samples; ++i) {
        const int y = first + static_cast<int>(rng.uniform() * (finest->vertex_count() - first));
        const auto r = stochastic::squared_distance_checks(*finest, y, eps);
        csv.row(c.resolutions.back(), y, r.max_laplacian, r.max_laplacian_error, r.bound, r.min_normal_derivative);
        if (r.boundary_points > 0) min_dnu = std::min(min_dnu, r.min_normal_derivative);
    }
    b.constant("K_eps_limit", stochastic::k_eps(finest->dim, 0.0, eps));
    b.margin("min_normal_derivative", min_dnu);
    b.v.pass = b.v.pass && min_dnu >= -c.tol;
    b.v.csv = csv.text();
    b.v.plot = plot_script("squared distance Laplacian error", "1:4", "n", "error", true, true);
}

void rbm_kernel(const ExperimentConfig& c, Builder& b)
{
    require_product(c);
    const auto m = make_mesh(c, c.resolutions.front());
    const auto hc = stochastic::kernel_histogram_check(*m, centre_vertex(*m), c.t_kernel, c.paths, c.seeds.front(), 8,
                                                       0.0, c.threads);
    b.margin("histogram_p_value", hc.p_value);
    b.constant("histogram_chi2", hc.chi2);
    b.constant("histogram_dof", hc.dof);
    b.v.pass = hc.p_value > c.tol;

    Csv csv("config,group,seed,y_x,s,zeta,mc_mean,mc_se,z");
    const auto plan = flow_plan(c, *m);
    const auto mode = c.bcs.front();
    double worst = 0.0;
    for (size_t i = 0; i < c.seeds.size(); ++i) {
        const auto g = c.groups[i % c.groups.size()];
        const auto seed = c.seeds[i];
        const auto run = ym::run_flow(ym::make_flow_state(initial_connection(c, m, g, mode, seed), mode), plan.steps,
                                      plan.dt);
        const double s0 = run.history.times.back();
        const double s = run.history.times[static_cast<size_t>(plan.steps / 2)];
        const int y = grid_vertex(*m, 0.125 * static_cast<double>(i % 7 + 1), 0.5, 0.5);
        const auto kernel = heat::heat_kernel(*m, y, {s}, dense());
        const double z = ym::zeta_functional(run.history, kernel, *m, s0, s);
        const auto mc = stochastic::expectation_along_rbm(run.history, *m, m->points[y], s, s0, c.paths, seed, 0.0,
                                                          c.threads);
        const double score = mc.se > 0.0 ? (mc.mean - z) / mc.se : (mc.mean == z ? 0.0 : kInf);
        csv.row(i, ym::to_string(g), seed, m->points[y].x(), s, z, mc.mean, mc.se, score);
        b.se("expectation_config" + std::to_string(i), mc.se);
        worst = std::max(worst, std::abs(score));
    }
    b.margin("max_abs_z_pde_vs_mc", worst);
    b.v.pass = b.v.pass && worst <= kZ;
    b.v.csv = csv.text();
    b.v.plot = plot_script("PDE vs Monte Carlo", "6:7", "zeta (PDE)", "E q (MC)");
}

struct Pipeline
{
    const char* anchor;
    void (*run)(const ExperimentConfig&, Builder&);
};

const std::map<std::string, Pipeline>& pipelines()
{
    static const std::map<std::string, Pipeline> table = {
        {"lyh-sharp", {"sharp Li-Yau-Hamilton Hessian bound D^2 log p >= -g/(2t), flat, totally geodesic boundary", lyh_sharp}},
        {"lyh-fit", {"Li-Yau-Hamilton bound with constants A, B, totally geodesic boundary", lyh_fit}},
        {"doubling", {"Neumann solutions as restrictions of solutions on the double", doubling}},
        {"kernel-decay", {"Neumann heat kernel decay p <= C t^(-n/2)", kernel_decay}},
        {"ym-flow", {"Yang-Mills energy non-increasing under the flow with relative/absolute boundary conditions", ym_flow}},
        {"boundary-sign", {"normal derivative of |R|^2 nonpositive on a convex boundary", boundary_sign}},
        {"int-parts", {"integration by parts with boundary term; monotonicity identities", int_parts}},
        {"zeta", {"zeta(t) <= C1 t^(-n/2) YM(0)", zeta}},
        {"monotonicity", {"monotonicity formula for t^2 zeta(t)", monotonicity}},
        {"bochner", {"Bochner inequality (d/dt - Laplacian/2) q <= C2 (1 + sqrt q) q", bochner}},
        {"exit-tail", {"exit-time tail P(tau <= kappa r^2) <= exp(-eta / kappa) of reflecting Brownian motion", exit_tail}},
        {"dist-lemma", {"Laplacian and normal derivative of the squared distance", dist_lemma}},
        {"rbm-kernel", {"reflecting Brownian motion realises the Neumann heat kernel and zeta", rbm_kernel}},
    };
    return table;
}

nlohmann::ordered_json pairs_json(const std::vector<std::pair<std::string, double>>& v)
{
    auto j = nlohmann::ordered_json::object();
    for (const auto& [k, x] : v) j[k] = std::isfinite(x) ? nlohmann::ordered_json(x) : nlohmann::ordered_json(nullptr);
    return j;
}

void write_file(const fs::path& p, const std::string& text)
{
    std::ofstream out(p, std::ios::binary);
    if (!out) fail(ErrorCode::IoError, "cannot write '" + p.string() + "'");
    out << text;
    if (!out) fail(ErrorCode::IoError, "write failed for '" + p.string() + "'");
}

} // namespace

double Verdict::value(const std::string& name) const
{
    for (const auto* list : {&margins, &constants, &standard_errors})
        for (const auto& [k, x] : *list)
            if (k == name) return x;
    fail(ErrorCode::InvalidArgument, "verdict has no value '" + name + "'");
}

Verdict run_experiment(const ExperimentConfig& cfg, bool strict)
{
    const auto it = pipelines().find(cfg.experiment);
    if (it == pipelines().end()) fail(ErrorCode::InvalidArgument, "unknown experiment '" + cfg.experiment + "'");
    const auto start = std::chrono::steady_clock::now();
    Builder b;
    b.v.experiment = cfg.experiment;
    b.v.anchor = it->second.anchor;
    b.v.resolved_config = resolved_config_text(cfg);
    it->second.run(cfg, b);
    if (strict && !b.v.warnings.empty()) {
        b.v.pass = false;
        b.note("strict run: warnings count as failure");
    }
    b.v.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return b.v;
}

std::string verdict_json(const Verdict& v)
{
    nlohmann::ordered_json j;
    j["schema_version"] = kVerdictSchemaVersion;
    j["experiment"] = v.experiment;
    j["anchor"] = v.anchor;
    j["pass"] = v.pass;
    j["margins"] = pairs_json(v.margins);
    j["constants"] = pairs_json(v.constants);
    j["standard_errors"] = pairs_json(v.standard_errors);
    j["notes"] = v.notes;
    j["warnings"] = v.warnings;
    j["outputs"] = {{"csv", "data.csv"}, {"plot", "plot.gp"}, {"config", "resolved.cfg"}};
    j["runtime_seconds"] = v.runtime_seconds;
    return j.dump(2) + "\n";
}

void write_outputs(const Verdict& v, const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create '" + dir + "': " + ec.message());
    const fs::path d(dir);
    write_file(d / "verdict.json", verdict_json(v));
    write_file(d / "data.csv", v.csv);
    write_file(d / "plot.gp", v.plot);
    write_file(d / "resolved.cfg", v.resolved_config);
}

std::vector<std::string> read_manifest(const std::string& path)
{
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot read manifest '" + path + "'");
    const fs::path base = fs::path(path).parent_path();
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        line = line.substr(0, line.find('#'));
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        line = line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
        const fs::path p(line);
        out.push_back(p.is_absolute() ? p.string() : (base / p).string());
    }
    return out;
}

SuiteSummary run_suite(const std::vector<std::string>& config_paths, const std::string& out_root, int threads)
{
    SuiteSummary s;
    s.entries.resize(config_paths.size());
    stochastic::parallel_for(config_paths.size(), threads, [&](size_t i) {
        auto& e = s.entries[i];
        e.config_path = config_paths[i];
        try {
            const auto cfg = load_config(config_paths[i]);
            e.experiment = cfg.experiment;
            e.anchor = pipelines().at(cfg.experiment).anchor;
            char prefix[16];
            std::snprintf(prefix, sizeof prefix, "%02zu-", i);
            e.out_dir = (fs::path(out_root) / (prefix + cfg.experiment)).string();
            const auto v = run_experiment(cfg);
            write_outputs(v, e.out_dir);
            e.pass = v.pass;
        } catch (const std::exception& ex) {
            e.error = ex.what();
            e.pass = false;
        }
    });
    for (const auto& e : s.entries) s.pass = s.pass && e.pass;
    return s;
}

std::string suite_summary_json(const SuiteSummary& s)
{
    nlohmann::ordered_json j;
    j["schema_version"] = kVerdictSchemaVersion;
    j["pass"] = s.pass;
    auto runs = nlohmann::ordered_json::array();
    for (const auto& e : s.entries) {
        nlohmann::ordered_json r;
        r["config"] = e.config_path;
        r["experiment"] = e.experiment;
        r["anchor"] = e.anchor;
        r["pass"] = e.pass;
        r["out"] = e.out_dir;
        if (!e.error.empty()) r["error"] = e.error;
        runs.push_back(r);
    }
    j["runs"] = runs;
    return j.dump(2) + "\n";
}

} // namespace hklab::experiments
