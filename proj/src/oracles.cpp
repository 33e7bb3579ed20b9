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

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace hklab::oracles {

namespace {

constexpr double kPi = std::numbers::pi;

bool use_images(Representation rep, double t, double scale)
{
    if (rep == Representation::Images) return true;
    if (rep == Representation::Spectral) return false;
    return t < 1e-3 * scale * scale;
}

// Gaussian (4 pi t)^{-1/2} exp(-u^2 / 4t) with its first two u-derivatives.
KernelJet gaussian_jet(double t, double u)
{
    const double g = std::exp(-u * u / (4.0 * t)) / std::sqrt(4.0 * kPi * t);
    return {g, -u / (2.0 * t) * g, (u * u / (4.0 * t * t) - 1.0 / (2.0 * t)) * g};
}

void accumulate(KernelJet& acc, const KernelJet& term)
{
    acc.value += term.value;
    acc.dx += term.dx;
    acc.dxx += term.dxx;
}

int image_shells(double t, double period)
{
    // exp(-(m period)^2 / 4t) < 1e-300 beyond this shell.
    return static_cast<int>(std::ceil(std::sqrt(4.0 * t * 700.0) / period)) + 1;
}

// Finite-difference weights for derivative `order` at z on nodes x (Fornberg's recursion).
std::vector<double> fd_weights(double z, const std::vector<double>& x, int order)
{
    const int n = static_cast<int>(x.size());
    std::vector<std::vector<double>> c(n, std::vector<double>(order + 1, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, order);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - z;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][order];
    return w;
}

// Stencil (offsets, weights) for d^order/dx^order at index i of an axis with n nodes.
struct Stencil
{
    std::vector<int> offsets;
    std::vector<double> weights;
};

Stencil axis_stencil(int i, int n, bool periodic, double h, int order)
{
    int lo = i - 2;
    int count = 5;
    if (!periodic && (i < 2 || i > n - 3)) {
        count = order == 2 ? 6 : 5;
        lo = i < 2 ? 0 : n - count;
    }
    Stencil s;
    std::vector<double> nodes;
    for (int k = 0; k < count; ++k) {
        s.offsets.push_back(lo + k - i);
        nodes.push_back((lo + k - i) * h);
    }
    s.weights = fd_weights(0.0, nodes, order);
    return s;
}

} // namespace

int spectral_terms(double period_like, double t, double eps)
{
    const double n = std::ceil(period_like / kPi * std::sqrt(std::log(1.0 / eps) / t)) + 1.0;
    return static_cast<int>(std::min(n, 1e7));
}

KernelJet interval_neumann_jet(double L, double t, double x, double y, Representation rep)
{
    require(t > 0 && L > 0, "interval kernel needs t > 0 and L > 0");
    KernelJet out;
    if (use_images(rep, t, L)) {
        // Neumann images: sources at y + 2mL and -y + 2mL.
        const int M = image_shells(t, 2.0 * L);
        for (int m = -M; m <= M; ++m) {
            accumulate(out, gaussian_jet(t, x - y - 2.0 * m * L));
            accumulate(out, gaussian_jet(t, x + y - 2.0 * m * L));
        }
        return out;
    }
    const int N = spectral_terms(L, t);
    out.value = 1.0 / L;
    for (int k = 1; k <= N; ++k) {
        const double w = k * kPi / L;
        const double a = 2.0 / L * std::exp(-w * w * t) * std::cos(w * y);
        out.value += a * std::cos(w * x);
        out.dx -= a * w * std::sin(w * x);
        out.dxx -= a * w * w * std::cos(w * x);
    }
    return out;
}

double interval_neumann_kernel(double L, double t, double x, double y, Representation rep)
{
    return interval_neumann_jet(L, t, x, y, rep).value;
}

KernelJet torus_series_jet(double ell, double t, double x, double y, Representation rep)
{
    require(t > 0 && ell > 0, "circle kernel needs t > 0 and ell > 0");
    KernelJet out;
    if (use_images(rep, t, ell)) {
        const int M = image_shells(t, ell);
        for (int m = -M; m <= M; ++m) accumulate(out, gaussian_jet(t, x - y - m * ell));
        return out;
    }
    const int N = spectral_terms(ell / 2.0, t);
    out.value = 1.0 / ell;
    for (int k = 1; k <= N; ++k) {
        const double w = 2.0 * k * kPi / ell;
        const double a = 2.0 / ell * std::exp(-w * w * t);
        const double u = w * (x - y);
        out.value += a * std::cos(u);
        out.dx -= a * w * std::sin(u);
        out.dxx -= a * w * w * std::cos(u);
    }
    return out;
}

double torus_series_kernel(double ell, double t, double x, double y, Representation rep)
{
    return torus_series_jet(ell, t, x, y, rep).value;
}

namespace {

std::vector<KernelJet> product_jets(const geometry::ManifoldDescriptor& desc, double t, const Vec3& p,
                                    const Vec3& q)
{
    using geometry::ManifoldKind;
    std::vector<KernelJet> jets;
    switch (desc.kind) {
    case ManifoldKind::FlatCylinder:
        jets.push_back(interval_neumann_jet(desc.length, t, p[0], q[0]));
        jets.push_back(torus_series_jet(desc.periods[0], t, p[1], q[1]));
        break;
    case ManifoldKind::FlatSlab3D:
        jets.push_back(interval_neumann_jet(desc.length, t, p[0], q[0]));
        jets.push_back(torus_series_jet(desc.periods[0], t, p[1], q[1]));
        jets.push_back(torus_series_jet(desc.periods[1], t, p[2], q[2]));
        break;
    case ManifoldKind::FlatTorus2D:
        jets.push_back(torus_series_jet(desc.length, t, p[0], q[0]));
        jets.push_back(torus_series_jet(desc.periods[0], t, p[1], q[1]));
        break;
    case ManifoldKind::FlatTorus3D:
        jets.push_back(torus_series_jet(desc.length, t, p[0], q[0]));
        jets.push_back(torus_series_jet(desc.periods[0], t, p[1], q[1]));
        jets.push_back(torus_series_jet(desc.periods[1], t, p[2], q[2]));
        break;
    case ManifoldKind::FlatDisk:
        fail(ErrorCode::DomainError, "no closed-form kernel for the disk");
    }
    return jets;
}

} // namespace

double product_kernel(const geometry::ManifoldDescriptor& desc, double t, const Vec3& p, const Vec3& q)
{
    double v = 1.0;
    for (const auto& j : product_jets(desc, t, p, q)) v *= j.value;
    return v;
}

double product_lyh_margin(const geometry::ManifoldDescriptor& desc, double t, const Vec3& p,
                          const Vec3& q)
{
    // log of a product is a sum, so the Hessian is diagonal.
    double m = std::numeric_limits<double>::infinity();
    for (const auto& j : product_jets(desc, t, p, q)) {
        const double g = j.dx / j.value;
        m = std::min(m, j.dxx / j.value - g * g);
    }
    return m + 1.0 / (2.0 * t);
}

Eigen::VectorXd dense_heat_oracle(const geometry::Mesh& mesh, const Eigen::VectorXd& initial, double t)
{
    const int n = mesh.vertex_count();
    if (n > 2500) fail(ErrorCode::DomainError, "dense_heat_oracle is limited to 2500 vertices");
    require(initial.size() == n, "initial field size does not match the mesh");
    require(t >= 0, "time must be nonnegative");
    const Eigen::VectorXd s = mesh.weights.cwiseSqrt();
    const Eigen::VectorXd si = s.cwiseInverse();
    Eigen::MatrixXd S = Eigen::MatrixXd(mesh.stiffness);
    S = si.asDiagonal() * S * si.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
    if (eig.info() != Eigen::Success) fail(ErrorCode::NumericalError, "eigendecomposition failed");
    const Eigen::VectorXd decay = (eig.eigenvalues() * t).array().exp().matrix();
    const Eigen::VectorXd coeff = eig.eigenvectors().transpose() * s.cwiseProduct(initial);
    return si.cwiseProduct(eig.eigenvectors() * decay.cwiseProduct(coeff));
}

std::vector<Eigen::Matrix3d> fd_hessian_oracle(const geometry::Mesh& mesh, const Eigen::VectorXd& f)
{
    if (!mesh.is_product()) fail(ErrorCode::DomainError, "fd_hessian_oracle needs a product mesh");
    require(f.size() == mesh.vertex_count(), "field size does not match the mesh");
    const int dim = mesh.dim;
    std::vector<Eigen::Matrix3d> out(mesh.vertex_count(), Eigen::Matrix3d::Zero());

    auto shifted = [&](std::array<int, 3> c, int axis, int off) {
        const int n = mesh.axis_n[axis];
        c[axis] = mesh.periodic[axis] ? ((c[axis] + off) % n + n) % n : c[axis] + off;
        return c;
    };

    for (int v = 0; v < mesh.vertex_count(); ++v) {
        const auto c = mesh.coords(v);
        std::array<Stencil, 3> d1;
        std::array<Stencil, 3> d2;
        for (int a = 0; a < dim; ++a) {
            d1[a] = axis_stencil(c[a], mesh.axis_n[a], mesh.periodic[a], mesh.spacing[a], 1);
            d2[a] = axis_stencil(c[a], mesh.axis_n[a], mesh.periodic[a], mesh.spacing[a], 2);
        }
        for (int a = 0; a < dim; ++a) {
            double s = 0.0;
            for (size_t k = 0; k < d2[a].offsets.size(); ++k)
                s += d2[a].weights[k] * f[mesh.index(shifted(c, a, d2[a].offsets[k]))];
            out[v](a, a) = s;
            for (int b = a + 1; b < dim; ++b) {
                double m = 0.0;
                for (size_t i = 0; i < d1[a].offsets.size(); ++i) {
                    const auto ca = shifted(c, a, d1[a].offsets[i]);
                    for (size_t j = 0; j < d1[b].offsets.size(); ++j)
                        m += d1[a].weights[i] * d1[b].weights[j] *
                             f[mesh.index(shifted(ca, b, d1[b].offsets[j]))];
                }
                out[v](a, b) = m;
                out[v](b, a) = m;
            }
        }
    }
    return out;
}

double rbm_halfline_oracle(double r, double t, Representation rep)
{
    require(r > 0, "level r must be positive");
    if (t <= 0) return 0.0;
    const double s = t / (r * r);
    const bool images = rep == Representation::Images || (rep == Representation::Auto && s < 0.5);
    if (images) {
        // |B| reaches r by time t: alternating reflections of the two-sided exit.
        double p = 0.0;
        for (int k = 1; k < 200; ++k) {
            const double term = std::erfc((2 * k - 1) * r / std::sqrt(2.0 * t));
            p += (k % 2 == 1 ? 2.0 : -2.0) * term;
            if (term < 1e-18) break;
        }
        return std::clamp(p, 0.0, 1.0);
    }
    double survive = 0.0;
    for (int k = 0; k < 100000; ++k) {
        const double m = 2 * k + 1;
        const double term = std::exp(-m * m * kPi * kPi * t / (8.0 * r * r)) / m;
        survive += (k % 2 == 0 ? 1.0 : -1.0) * term;
        if (term < 1e-18) break;
    }
    return std::clamp(1.0 - 4.0 / kPi * survive, 0.0, 1.0);
}

std::string interval_kernel_table(double L, const std::vector<double>& times, int n_points, double y)
{
    require(n_points >= 2, "table needs at least two points");
    std::ostringstream os;
    os.precision(17);
    os << "t,x,y,value\n";
    for (double t : times) {
        for (int i = 0; i < n_points; ++i) {
            const double x = L * i / (n_points - 1);
            os << t << ',' << x << ',' << y << ',' << interval_neumann_kernel(L, t, x, y) << '\n';
        }
    }
    return os.str();
}

} // namespace hklab::oracles
