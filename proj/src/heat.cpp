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

#include "json.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <sstream>

namespace hklab::heat {

using geometry::Mesh;

namespace {

// exp(t A) for a generator A with nonnegative off-diagonal entries and zero row sums.
// A + cI is entrywise nonnegative, so the Taylor series and the squarings never cancel and
// every entry keeps full relative accuracy, including the far tails.
Eigen::MatrixXd uniformized_exp(const Eigen::MatrixXd& A, double t)
{
    const Eigen::Index n = A.rows();
    const double c = (-A.diagonal()).maxCoeff();
    if (t == 0.0 || c == 0.0) return Eigen::MatrixXd::Identity(n, n);
    int squarings = 0;
    double tau = t;
    while (tau * c > 0.5) {
        tau *= 0.5;
        ++squarings;
    }
    Eigen::MatrixXd B = tau * A;
    B.diagonal().array() += tau * c;
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
    Eigen::MatrixXd sum = term;
    for (int k = 1; k < 60; ++k) {
        term = term * B / static_cast<double>(k);
        sum += term;
        if (term.maxCoeff() <= 1e-18 * sum.maxCoeff()) break;
    }
    sum *= std::exp(-tau * c);
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return sum;
}

Eigen::MatrixXd axis_generator(const Mesh& mesh, int axis)
{
    const int n = mesh.axis_n[axis];
    const double h = mesh.spacing[axis];
    const bool periodic = mesh.periodic[axis];
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const double w = (!periodic && (i == 0 || i == n - 1)) ? 0.5 * h : h;
        for (int s : {-1, +1}) {
            int j = i + s;
            if (periodic) j = (j + n) % n;
            else if (j < 0 || j >= n) continue;
            A(i, j) += 1.0 / (h * w);
            A(i, i) -= 1.0 / (h * w);
        }
    }
    return A;
}

void apply_along_axis(const Mesh& mesh, int axis, const Eigen::MatrixXd& E, Eigen::VectorXd& u)
{
    int stride = 1;
    for (int d = axis + 1; d < mesh.dim; ++d) stride *= mesh.axis_n[d];
    const int n = mesh.axis_n[axis];
    const int block = n * stride;
    const int outer = mesh.vertex_count() / block;
    Eigen::VectorXd line(n);
    for (int o = 0; o < outer; ++o) {
        for (int s = 0; s < stride; ++s) {
            const int base = o * block + s;
            for (int i = 0; i < n; ++i) line[i] = u[base + i * stride];
            const Eigen::VectorXd out = E * line;
            for (int i = 0; i < n; ++i) u[base + i * stride] = out[i];
        }
    }
}

TimeField exponential_solve(const Mesh& mesh, const Eigen::VectorXd& initial,
                            const std::vector<double>& times)
{
    TimeField out;
    out.times = times;
    if (mesh.is_product()) {
        std::vector<Eigen::MatrixXd> gens;
        for (int d = 0; d < mesh.dim; ++d) gens.push_back(axis_generator(mesh, d));
        for (double t : times) {
            Eigen::VectorXd u = initial;
            for (int d = 0; d < mesh.dim; ++d) apply_along_axis(mesh, d, uniformized_exp(gens[d], t), u);
            out.values.push_back(std::move(u));
        }
        return out;
    }
    if (mesh.vertex_count() > 2500)
        fail(ErrorCode::DomainError, "DenseExponential on a non-product mesh is limited to 2500 vertices");
    const Eigen::MatrixXd A = mesh.weights.cwiseInverse().asDiagonal() * Eigen::MatrixXd(mesh.stiffness);
    for (double t : times) out.values.push_back(uniformized_exp(A, t) * initial);
    return out;
}

double gershgorin_rate(const Mesh& mesh)
{
    double m = 0.0;
    for (int k = 0; k < mesh.stiffness.outerSize(); ++k) {
        double row = 0.0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(mesh.stiffness, k); it; ++it)
            row += std::abs(it.value());
        m = std::max(m, row / mesh.weights[k]);
    }
    return m;
}

class Stepper
{
public:
    Stepper(const Mesh& mesh)
        : m_mesh(mesh)
    {}

    void step(Eigen::VectorXd& u, double dt, bool implicit_euler)
    {
        auto& slot = m_cache[{dt, implicit_euler}];
        if (!slot) {
            Eigen::SparseMatrix<double> W(m_mesh.vertex_count(), m_mesh.vertex_count());
            W.reserve(Eigen::VectorXi::Constant(m_mesh.vertex_count(), 1));
            for (int i = 0; i < m_mesh.vertex_count(); ++i) W.insert(i, i) = m_mesh.weights[i];
            const double theta = implicit_euler ? 1.0 : 0.5;
            Eigen::SparseMatrix<double> lhs = W - theta * dt * m_mesh.stiffness;
            slot = std::make_unique<Factor>();
            slot->rhs = W + (1.0 - theta) * dt * m_mesh.stiffness;
            slot->ldlt.compute(lhs);
            if (slot->ldlt.info() != Eigen::Success)
                fail(ErrorCode::NumericalError, "factorization of the heat step matrix failed");
        }
        u = slot->ldlt.solve(slot->rhs * u);
    }

private:
    struct Factor
    {
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
        Eigen::SparseMatrix<double> rhs;
    };
    const Mesh& m_mesh;
    std::map<std::pair<double, bool>, std::unique_ptr<Factor>> m_cache;
};

} // namespace

std::string to_string(Scheme s)
{
    switch (s) {
    case Scheme::CrankNicolson: return "crank-nicolson";
    case Scheme::BackwardEuler: return "backward-euler";
    case Scheme::DenseExponential: return "dense-exponential";
    }
    return "unknown";
}

Scheme scheme_from_string(const std::string& s)
{
    if (s == "crank-nicolson" || s == "cn") return Scheme::CrankNicolson;
    if (s == "backward-euler" || s == "be") return Scheme::BackwardEuler;
    if (s == "dense-exponential" || s == "exp") return Scheme::DenseExponential;
    fail(ErrorCode::InvalidArgument, "unknown heat scheme '" + s + "'");
}

HeatOptions kernel_options()
{
    HeatOptions o;
    o.scheme = Scheme::CrankNicolson;
    o.startup_steps = 4;
    return o;
}

double default_dt(const Mesh& mesh)
{
    const double h = mesh.h();
    return 0.5 * h * h;
}

const Eigen::VectorXd& TimeField::at(double t) const
{
    for (size_t k = 0; k < times.size(); ++k)
        if (std::abs(times[k] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return values[k];
    fail(ErrorCode::InvalidArgument, "time " + std::to_string(t) + " is not on the solution grid");
}

void TimeField::validate(int vertex_count) const
{
    require(times.size() == values.size(), "time field has mismatched times and values");
    for (size_t k = 0; k < times.size(); ++k) {
        require(values[k].size() == vertex_count, "time field size does not match the mesh");
        if (k > 0) require(times[k] > times[k - 1], "time field times must be strictly increasing");
    }
}

TimeField solve_neumann_heat(const Mesh& mesh, const Eigen::VectorXd& initial,
                             const std::vector<double>& times, const HeatOptions& opts)
{
    const int n = mesh.vertex_count();
    require(initial.size() == n, "initial field size does not match the mesh");
    require(!times.empty(), "time grid is empty");
    for (size_t k = 0; k < times.size(); ++k) {
        require(std::isfinite(times[k]) && times[k] >= 0.0, "times must be finite and nonnegative");
        if (k > 0) require(times[k] > times[k - 1], "times must be strictly increasing");
    }
    Eigen::Index where = 0;
    if (initial.maxCoeff() <= 0.0)
        fail(ErrorCode::InvalidArgument, "initial data is nonpositive everywhere");
    if (initial.minCoeff(&where) < 0.0)
        fail(ErrorCode::InvalidArgument,
             "initial data is negative at vertex " + std::to_string(static_cast<long>(where)));

    if (opts.scheme == Scheme::DenseExponential) return exponential_solve(mesh, initial, times);

    const double dt = opts.dt > 0.0 ? opts.dt : default_dt(mesh);
    const double mass0 = mesh.weights.dot(initial);
    const double rate = gershgorin_rate(mesh);
    TimeField out;
    Stepper stepper(mesh);
    Eigen::VectorXd u = initial;
    double t = 0.0;
    int steps_taken = 0;
    double worst_drift = 0.0;
    std::map<double, bool> warned;
    for (double target : times) {
        const double span = target - t;
        if (span > 0.0) {
            const int steps = static_cast<int>(std::ceil(span / dt - 1e-9));
            const double h = span / steps;
            if (opts.scheme == Scheme::CrankNicolson && 0.5 * h * rate > 1.0 && !warned[h]) {
                warned[h] = true;
                std::ostringstream os;
                os << "crank-nicolson step " << h << " has dt*lambda_max ~ " << h * rate
                   << "; stiffest modes are damped with alternating sign";
                out.diagnostics.push_back(os.str());
            }
            for (int s = 0; s < steps; ++s, ++steps_taken) {
                const bool be =
                    opts.scheme == Scheme::BackwardEuler || steps_taken < opts.startup_steps;
                stepper.step(u, h, be);
                worst_drift = std::max(worst_drift, std::abs(mesh.weights.dot(u) - mass0) / mass0);
            }
            t = target;
        }
        out.times.push_back(target);
        out.values.push_back(u);
    }
    if (worst_drift > 1e-10) {
        std::ostringstream os;
        os << "relative mass drift " << worst_drift << " exceeds 1e-10";
        out.diagnostics.push_back(os.str());
    }
    return out;
}

namespace {

TimeField kernel_at(const Mesh& mesh, int y, const std::vector<double>& times, const HeatOptions& opts,
                    double time_scale)
{
    require(y >= 0 && y < mesh.vertex_count(), "kernel source vertex out of range");
    require(!times.empty(), "time grid is empty");
    std::vector<double> internal;
    for (double t : times) {
        if (!(t > 0.0)) fail(ErrorCode::InvalidArgument, "heat kernel needs t > 0");
        internal.push_back(t * time_scale);
    }
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(mesh.vertex_count());
    delta[y] = 1.0 / mesh.weights[y];
    TimeField f = solve_neumann_heat(mesh, delta, internal, opts);
    f.times = times;
    return f;
}

} // namespace

TimeField heat_kernel(const Mesh& mesh, int y, const std::vector<double>& times, const HeatOptions& opts)
{
    return kernel_at(mesh, y, times, opts, 0.5);
}

TimeField analytic_kernel(const Mesh& mesh, int y, const std::vector<double>& times, const HeatOptions& opts)
{
    return kernel_at(mesh, y, times, opts, 1.0);
}

double HessianField::min_eigenvalue(int v) const
{
    const Eigen::Matrix3d& H = values[v];
    if (dim == 2) {
        const double a = H(0, 0);
        const double b = H(0, 1);
        const double d = H(1, 1);
        return 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + b * b);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
    es.computeDirect(H, Eigen::EigenvaluesOnly);
    return es.eigenvalues()[0];
}

namespace {

void product_hessian(const Mesh& mesh, const Eigen::VectorXd& f, HessianField& out)
{
    const int dim = mesh.dim;
    // Mirror ghost: the missing neighbour across a bounded end is the inward one.
    auto nb = [&](int v, int axis, int step) {
        const int w = mesh.neighbor(v, axis, step);
        return w >= 0 ? w : mesh.neighbor(v, axis, -step);
    };
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        Eigen::Matrix3d& H = out.values[v];
        for (int a = 0; a < dim; ++a) {
            const double h = mesh.spacing[a];
            H(a, a) = (f[nb(v, a, +1)] - 2.0 * f[v] + f[nb(v, a, -1)]) / (h * h);
            for (int b = a + 1; b < dim; ++b) {
                const int pa = nb(v, a, +1);
                const int ma = nb(v, a, -1);
                const double m = (f[nb(pa, b, +1)] - f[nb(pa, b, -1)] - f[nb(ma, b, +1)] + f[nb(ma, b, -1)]) /
                                 (4.0 * h * mesh.spacing[b]);
                H(a, b) = m;
                H(b, a) = m;
            }
        }
    }
}

void disk_hessian(const Mesh& mesh, const Eigen::VectorXd& f, HessianField& out)
{
    const int nr = mesh.nr();
    const double h = mesh.radial_step();
    const double dth = mesh.angular_step();
    auto val = [&](int ring, int j) {
        if (ring > nr) ring = 2 * nr - ring;
        return f[mesh.disk_index(ring, j)];
    };
    for (int v = 1; v < mesh.vertex_count(); ++v) {
        const int i = mesh.ring_of(v);
        const int j = mesh.angle_of(v);
        const double r = i * h;
        const double f0 = f[v];
        const double fr = (val(i + 1, j) - val(i - 1, j)) / (2.0 * h);
        const double frr = (val(i + 1, j) - 2.0 * f0 + val(i - 1, j)) / (h * h);
        const double ft = (val(i, j + 1) - val(i, j - 1)) / (2.0 * dth);
        const double ftt = (val(i, j + 1) - 2.0 * f0 + val(i, j - 1)) / (dth * dth);
        const double frt =
            (val(i + 1, j + 1) - val(i + 1, j - 1) - val(i - 1, j + 1) + val(i - 1, j - 1)) / (4.0 * h * dth);
        Eigen::Matrix2d P;
        P(0, 0) = frr;
        P(0, 1) = P(1, 0) = frt / r - ft / (r * r);
        P(1, 1) = fr / r + ftt / (r * r);
        const double th = j * dth;
        Eigen::Matrix2d R;
        R << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
        out.values[v].topLeftCorner<2, 2>() = R * P * R.transpose();
    }
    // Centre: least-squares quadratic through the centre and the first two rings.
    const int na = mesh.na();
    Eigen::MatrixXd A(1 + 2 * na, 6);
    Eigen::VectorXd b(1 + 2 * na);
    int row = 0;
    auto add = [&](int v) {
        const double x = mesh.points[v][0];
        const double y = mesh.points[v][1];
        A.row(row) << 1.0, x, y, 0.5 * x * x, x * y, 0.5 * y * y;
        b[row] = f[v];
        ++row;
    };
    add(0);
    for (int ring = 1; ring <= 2; ++ring)
        for (int j = 0; j < na; ++j) add(mesh.disk_index(ring, j));
    const Eigen::VectorXd c = A.colPivHouseholderQr().solve(b);
    Eigen::Matrix3d& H = out.values[0];
    H(0, 0) = c[3];
    H(0, 1) = H(1, 0) = c[4];
    H(1, 1) = c[5];
}

} // namespace

HessianField hessian(const Mesh& mesh, const Eigen::VectorXd& f)
{
    require(f.size() == mesh.vertex_count(), "field size does not match the mesh");
    HessianField out;
    out.dim = mesh.dim;
    out.values.assign(mesh.vertex_count(), Eigen::Matrix3d::Zero());
    if (mesh.is_disk()) disk_hessian(mesh, f, out);
    else product_hessian(mesh, f, out);
    return out;
}

HessianField log_hessian(const Mesh& mesh, const Eigen::VectorXd& u)
{
    require(u.size() == mesh.vertex_count(), "field size does not match the mesh");
    Eigen::VectorXd lg(u.size());
    for (Eigen::Index v = 0; v < u.size(); ++v) {
        if (!(u[v] > 0.0))
            fail(ErrorCode::DomainError, "log_hessian needs a positive field; value " +
                                             std::to_string(u[v]) + " at vertex " + std::to_string(v));
        lg[v] = std::log(u[v]);
    }
    return hessian(mesh, lg);
}

Eigen::VectorXd lyh_margin_field(const Mesh& mesh, const Eigen::VectorXd& u, double t)
{
    require(t > 0.0, "margin needs t > 0");
    const HessianField H = log_hessian(mesh, u);
    Eigen::VectorXd m(mesh.vertex_count());
    for (int v = 0; v < mesh.vertex_count(); ++v) m[v] = H.min_eigenvalue(v) + 1.0 / (2.0 * t);
    return m;
}

LYHReport lyh_check_sharp(const TimeField& sol, const Mesh& mesh, double tol_disc, bool keep_fields)
{
    using geometry::ManifoldKind;
    if (mesh.desc.kind != ManifoldKind::FlatCylinder && mesh.desc.kind != ManifoldKind::FlatSlab3D)
        fail(ErrorCode::DomainError,
             "the sharp estimate is checked only on cylinders and slabs, got " + to_string(mesh.desc.kind));
    sol.validate(mesh.vertex_count());
    LYHReport r;
    r.tol_disc = tol_disc;
    r.worst_margin = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < sol.size(); ++k) {
        const double t = sol.times[k];
        if (t <= 0.0) continue;
        Eigen::VectorXd m = lyh_margin_field(mesh, sol.values[k], t);
        Eigen::Index arg = 0;
        const double mn = m.minCoeff(&arg);
        r.times.push_back(t);
        r.min_margin.push_back(mn);
        r.argmin_vertex.push_back(static_cast<int>(arg));
        if (mn < r.worst_margin) {
            r.worst_margin = mn;
            r.worst_time = t;
            r.worst_vertex = static_cast<int>(arg);
        }
        if (keep_fields) r.margins.push_back(std::move(m));
    }
    require(!r.times.empty(), "no positive times in the solution");
    r.passed = r.worst_margin >= -tol_disc;
    return r;
}

TolCalibration calibrate_tol_disc(const Mesh& mesh, int y, const std::vector<double>& times)
{
    const Mesh torus = geometry::double_manifold(mesh);
    const int yt = geometry::lift_vertex(torus, y);
    HeatOptions exact;
    exact.scheme = Scheme::DenseExponential;
    const TimeField k = analytic_kernel(torus, yt, times, exact);
    TolCalibration c;
    // The check reports the per-time minimum, so the error of that minimum is what is calibrated.
    // Per-vertex errors in the far field reach O(1/t) and never bind.
    for (size_t s = 0; s < k.size(); ++s) {
        const double t = k.times[s];
        const Eigen::VectorXd m = lyh_margin_field(torus, k.values[s], t);
        double exact_min = std::numeric_limits<double>::infinity();
        for (int v = 0; v < torus.vertex_count(); ++v)
            exact_min = std::min(exact_min,
                                 oracles::product_lyh_margin(torus.desc, t, torus.points[v], torus.points[yt]));
        const double e = std::abs(m.minCoeff() - exact_min);
        if (e > c.max_error) {
            c.max_error = e;
            c.worst_time = t;
        }
    }
    c.tol_disc = 2.0 * c.max_error;
    return c;
}

LYHFit lyh_fit_constants(const TimeField& sol, const Mesh& mesh, double B, double tol_disc)
{
    sol.validate(mesh.vertex_count());
    require(B > 0.0, "B must be positive");
    const double n = mesh.dim;
    LYHFit fit;
    fit.B = B;
    fit.A_upper = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < sol.size(); ++k) {
        const double t = sol.times[k];
        const Eigen::VectorXd& p = sol.values[k];
        require(t > 0.0 && t <= 1.0 + 1e-12, "fit times must lie in (0, 1]");
        const double mass = mesh.weights.dot(p);
        if (mass > 1.0 + 1e-10)
            fail(ErrorCode::DomainError, "solution mass " + std::to_string(mass) + " exceeds 1 at t = " +
                                             std::to_string(t));
        const Eigen::VectorXd m = lyh_margin_field(mesh, p, t);
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            const double coeff = 1.0 + std::log(B / (std::pow(t, 0.5 * n) * p[v]));
            const double need = -tol_disc - m[v];
            if (coeff > 0.0) {
                const double a = need / coeff;
                if (a > fit.A) {
                    fit.A = a;
                    fit.binding_time = t;
                    fit.binding_vertex = v;
                }
            } else if (coeff < 0.0) {
                fit.A_upper = std::min(fit.A_upper, need / coeff);
            } else if (need > 0.0) {
                fit.feasible = false;
            }
        }
    }
    if (fit.A > fit.A_upper) fit.feasible = false;
    return fit;
}

double kernel_decay_bound(const std::vector<const TimeField*>& sols, const Mesh& mesh)
{
    double C = 0.0;
    for (const TimeField* f : sols) {
        f->validate(mesh.vertex_count());
        for (size_t k = 0; k < f->size(); ++k) {
            const double t = f->times[k];
            if (t <= 0.0 || t > 1.0 + 1e-12) continue;
            const double mass = mesh.weights.dot(f->values[k]);
            require(mass <= 1.0 + 1e-10, "kernel_decay_bound needs fields of mass <= 1");
            C = std::max(C, std::pow(t, 0.5 * mesh.dim) * f->values[k].maxCoeff());
        }
    }
    return C;
}

SlopeFit decay_slope(const TimeField& sol, double t_min, double t_max)
{
    std::vector<double> xs;
    std::vector<double> ys;
    for (size_t k = 0; k < sol.size(); ++k) {
        const double t = sol.times[k];
        if (t < t_min || t > t_max) continue;
        xs.push_back(std::log(t));
        ys.push_back(std::log(sol.values[k].maxCoeff()));
    }
    require(xs.size() >= 2, "slope fit needs at least two times in range");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
        syy += ys[i] * ys[i];
    }
    SlopeFit f;
    f.points = static_cast<int>(xs.size());
    const double vx = sxx - sx * sx / n;
    const double vy = syy - sy * sy / n;
    const double cxy = sxy - sx * sy / n;
    f.slope = cxy / vx;
    f.intercept = (sy - f.slope * sx) / n;
    f.r2 = vy > 0 ? cxy * cxy / (vx * vy) : 1.0;
    return f;
}

double doubling_equivalence_check(const Mesh& mesh, const Eigen::VectorXd& initial,
                                  const std::vector<double>& times, const HeatOptions& opts)
{
    const Mesh torus = geometry::double_manifold(mesh);
    const TimeField a = solve_neumann_heat(mesh, initial, times, opts);
    const TimeField b = solve_neumann_heat(torus, geometry::extend_even(torus, initial), times, opts);
    double err = 0.0;
    for (size_t k = 0; k < a.size(); ++k) {
        const Eigen::VectorXd r = geometry::restrict_to_original(torus, b.values[k]);
        err = std::max(err, (r - a.values[k]).cwiseAbs().maxCoeff());
    }
    return err;
}

std::vector<double> log_spaced(double t0, double t1, int n)
{
    require(t0 > 0 && t1 >= t0 && n >= 1, "invalid log-spaced grid");
    std::vector<double> out;
    for (int i = 0; i < n; ++i)
        out.push_back(n == 1 ? t0 : t0 * std::pow(t1 / t0, static_cast<double>(i) / (n - 1)));
    return out;
}

std::vector<double> lin_spaced(double t0, double t1, int n)
{
    require(t1 >= t0 && n >= 1, "invalid linear grid");
    std::vector<double> out;
    for (int i = 0; i < n; ++i) out.push_back(n == 1 ? t0 : t0 + (t1 - t0) * i / (n - 1));
    return out;
}

void write_time_field_csv(const std::string& path, const TimeField& f, const Mesh& mesh)
{
    f.validate(mesh.vertex_count());
    std::ofstream os(path);
    if (!os) fail(ErrorCode::IoError, "cannot open " + path);
    os.precision(17);
    os << "t,vertex,x,y,z,value\n";
    for (size_t k = 0; k < f.size(); ++k)
        for (int v = 0; v < mesh.vertex_count(); ++v) {
            const Vec3& p = mesh.points[v];
            os << f.times[k] << ',' << v << ',' << p[0] << ',' << p[1] << ',' << p[2] << ','
               << f.values[k][v] << '\n';
        }
}

namespace {
constexpr char kFieldMagic[4] = {'H', 'K', 'T', 'F'};
constexpr std::uint32_t kFieldVersion = 1;
} // namespace

void write_time_field_binary(const std::string& path, const TimeField& f)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorCode::IoError, "cannot open " + path);
    const std::uint64_t nv = f.values.empty() ? 0 : static_cast<std::uint64_t>(f.values[0].size());
    const std::uint64_t nt = f.times.size();
    os.write(kFieldMagic, 4);
    os.write(reinterpret_cast<const char*>(&kFieldVersion), sizeof kFieldVersion);
    os.write(reinterpret_cast<const char*>(&nv), sizeof nv);
    os.write(reinterpret_cast<const char*>(&nt), sizeof nt);
    os.write(reinterpret_cast<const char*>(f.times.data()), static_cast<std::streamsize>(nt * sizeof(double)));
    for (const auto& v : f.values)
        os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(nv * sizeof(double)));
    if (!os) fail(ErrorCode::IoError, "write failed for " + path);
}

TimeField read_time_field_binary(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::IoError, "cannot open " + path);
    char magic[4];
    std::uint32_t version = 0;
    std::uint64_t nv = 0;
    std::uint64_t nt = 0;
    is.read(magic, 4);
    is.read(reinterpret_cast<char*>(&version), sizeof version);
    is.read(reinterpret_cast<char*>(&nv), sizeof nv);
    is.read(reinterpret_cast<char*>(&nt), sizeof nt);
    if (!is || std::memcmp(magic, kFieldMagic, 4) != 0 || version != kFieldVersion)
        fail(ErrorCode::IoError, path + " is not a time field dump");
    TimeField f;
    f.times.resize(nt);
    is.read(reinterpret_cast<char*>(f.times.data()), static_cast<std::streamsize>(nt * sizeof(double)));
    for (std::uint64_t k = 0; k < nt; ++k) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(nv));
        is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(nv * sizeof(double)));
        f.values.push_back(std::move(v));
    }
    if (!is) fail(ErrorCode::IoError, path + " is truncated");
    return f;
}

std::string lyh_report_json(const LYHReport& r)
{
    nlohmann::json j;
    j["format"] = "hklab.lyh_report";
    j["version"] = 1;
    j["times"] = r.times;
    j["min_margin"] = r.min_margin;
    j["argmin_vertex"] = r.argmin_vertex;
    j["worst_margin"] = r.worst_margin;
    j["worst_time"] = r.worst_time;
    j["worst_vertex"] = r.worst_vertex;
    j["tol_disc"] = r.tol_disc;
    j["passed"] = r.passed;
    if (r.has_fit) j["fit"] = {{"A", r.fit_A}, {"B", r.fit_B}, {"feasible", r.fit_feasible}};
    return j.dump(2);
}

} // namespace hklab::heat
