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
#include <hklab/yang_mills.hpp>

#include <algorithm>
#include <cmath>

namespace hklab::ym {

namespace {

int popcount(unsigned m)
{
    int n = 0;
    for (; m; m &= m - 1) ++n;
    return n;
}

double axis_weight(const geometry::Mesh& m, int axis, int i)
{
    const double h = m.spacing[axis];
    if (m.periodic[axis]) return h;
    return (i == 0 || i == m.axis_n[axis] - 1) ? 0.5 * h : h;
}

} // namespace

FormComplex::FormComplex(std::shared_ptr<const geometry::Mesh> mesh)
    : m_mesh(std::move(mesh))
{
    require(m_mesh != nullptr, "mesh is null");
    const geometry::Mesh& m = *m_mesh;
    if (!m.is_product()) fail(ErrorCode::DomainError, "cubical forms need a product mesh");
    m_dim = m.dim;
    const unsigned full = 1u << m_dim;
    m_cells.assign(static_cast<size_t>(m_dim + 1), {});
    m_index.assign(static_cast<size_t>(m.vertex_count()) * full, -1);
    for (int v = 0; v < m.vertex_count(); ++v) {
        const auto c = m.coords(v);
        // Masks ordered so that 1- and 2-cells follow the mesh edge and plaquette order.
        std::vector<unsigned> order;
        for (unsigned mask = 0; mask < full; ++mask) order.push_back(mask);
        std::stable_sort(order.begin(), order.end(), [](unsigned a, unsigned b) {
            if (popcount(a) != popcount(b)) return popcount(a) < popcount(b);
            for (unsigned bit = 1;; bit <<= 1)
                if ((a & bit) != (b & bit)) return (a & bit) != 0;
        });
        for (unsigned mask : order) {
            bool exists = true;
            double vol = 1.0;
            for (int a = 0; a < m_dim; ++a) {
                if (mask & (1u << a)) {
                    if (m.neighbor(v, a, +1) < 0) exists = false;
                    vol *= m.spacing[a];
                } else {
                    vol *= axis_weight(m, a, c[a]);
                }
            }
            if (!exists) continue;
            const int p = popcount(mask);
            m_index[static_cast<size_t>(v) * full + mask] = static_cast<int>(m_cells[p].size());
            m_cells[p].push_back({v, mask, vol});
        }
    }
    require(count(1) == static_cast<int>(m.edges.size()), "form complex and mesh disagree on edges");
    require(count(2) == static_cast<int>(m.plaquettes.size()), "form complex and mesh disagree on plaquettes");
}

int FormComplex::find(int base, unsigned mask) const
{
    if (base < 0) return -1;
    return m_index[(static_cast<size_t>(base) << m_dim) + mask];
}

Vec3 FormComplex::transport(const LatticeConnection& c, int v, int axis, const Vec3& x) const
{
    return adjoint(c.links[m_mesh->edge_from(v, axis)], x);
}

Vec3 FormComplex::transport_back(const LatticeConnection& c, int v, int axis, const Vec3& x) const
{
    return adjoint(inverse(c.links[m_mesh->edge_from(v, axis)]), x);
}

Form FormComplex::d(const LatticeConnection& c, int p, const Form& a) const
{
    require(p >= 0 && p < m_dim, "form degree out of range");
    require(static_cast<int>(a.size()) == count(p), "form size does not match its degree");
    const geometry::Mesh& m = *m_mesh;
    Form out(m_cells[p + 1].size(), Vec3::Zero());
    for (size_t i = 0; i < out.size(); ++i) {
        const Cell& cell = m_cells[p + 1][i];
        int k = 0;
        for (int ax = 0; ax < m_dim; ++ax) {
            if (!(cell.mask & (1u << ax))) continue;
            const unsigned sub = cell.mask & ~(1u << ax);
            const int up = m.neighbor(cell.base, ax, +1);
            const Vec3 diff = transport(c, cell.base, ax, a[find(up, sub)]) - a[find(cell.base, sub)];
            out[i] += ((k % 2 == 0) ? 1.0 : -1.0) * diff / m.spacing[ax];
            ++k;
        }
    }
    return out;
}

Vec3 FormComplex::normal_trace(const LatticeConnection& c, int v, unsigned mask, int p_plus_1, const Form& b) const
{
    (void)p_plus_1;
    const geometry::Mesh& m = *m_mesh;
    const unsigned full = mask | 1u;
    const int i = m.coords(v)[0];
    if (i == 0) {
        const int v1 = m.neighbor(v, 0, +1);
        const Vec3 a0 = b[find(v, full)];
        const Vec3 a1 = transport(c, v, 0, b[find(v1, full)]);
        return -(1.5 * a0 - 0.5 * a1);
    }
    const int u1 = m.neighbor(v, 0, -1);
    const int u2 = m.neighbor(u1, 0, -1);
    const Vec3 a0 = transport_back(c, u1, 0, b[find(u1, full)]);
    const Vec3 a1 = transport_back(c, u1, 0, transport_back(c, u2, 0, b[find(u2, full)]));
    return 1.5 * a0 - 0.5 * a1;
}

double FormComplex::boundary_measure(int v, unsigned mask) const
{
    const geometry::Mesh& m = *m_mesh;
    const auto c = m.coords(v);
    double meas = 1.0;
    for (int a = 1; a < m_dim; ++a) meas *= (mask & (1u << a)) ? m.spacing[a] : axis_weight(m, a, c[a]);
    return meas;
}

Form FormComplex::boundary_flux(const LatticeConnection& c, int p_plus_1, const Form& b) const
{
    require(p_plus_1 >= 1 && p_plus_1 <= m_dim, "form degree out of range");
    require(static_cast<int>(b.size()) == count(p_plus_1), "form size does not match its degree");
    require(m_mesh->axis_n[0] >= 3, "boundary flux needs at least two cells across");
    const int p = p_plus_1 - 1;
    Form out(m_cells[p].size(), Vec3::Zero());
    for (size_t i = 0; i < out.size(); ++i) {
        const Cell& cell = m_cells[p][i];
        if ((cell.mask & 1u) || !m_mesh->on_boundary[cell.base]) continue;
        out[i] = boundary_measure(cell.base, cell.mask) * normal_trace(c, cell.base, cell.mask, p_plus_1, b);
    }
    return out;
}

Form FormComplex::d_star(const LatticeConnection& c, int p_plus_1, const Form& b) const
{
    require(p_plus_1 >= 1 && p_plus_1 <= m_dim, "form degree out of range");
    require(static_cast<int>(b.size()) == count(p_plus_1), "form size does not match its degree");
    const geometry::Mesh& m = *m_mesh;
    const int p = p_plus_1 - 1;
    Form out(m_cells[p].size(), Vec3::Zero());
    for (size_t i = 0; i < b.size(); ++i) {
        const Cell& cell = m_cells[p_plus_1][i];
        int k = 0;
        for (int ax = 0; ax < m_dim; ++ax) {
            if (!(cell.mask & (1u << ax))) continue;
            const unsigned sub = cell.mask & ~(1u << ax);
            const double s = ((k % 2 == 0) ? 1.0 : -1.0) * cell.volume / m.spacing[ax];
            const int up = m.neighbor(cell.base, ax, +1);
            out[find(up, sub)] += s * transport_back(c, cell.base, ax, b[i]);
            out[find(cell.base, sub)] -= s * b[i];
            ++k;
        }
    }
    const Form flux = boundary_flux(c, p_plus_1, b);
    for (size_t i = 0; i < out.size(); ++i) out[i] = (out[i] - flux[i]) / m_cells[p][i].volume;
    return out;
}

double FormComplex::inner(Group g, int p, const Form& a, const Form& b) const
{
    require(static_cast<int>(a.size()) == count(p) && static_cast<int>(b.size()) == count(p),
            "form sizes do not match their degree");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += m_cells[p][i].volume * a[i].dot(b[i]);
    return norm_factor(g) * s;
}

double FormComplex::inner_abs(Group g, int p, const Form& a, const Form& b) const
{
    require(static_cast<int>(a.size()) == count(p) && static_cast<int>(b.size()) == count(p),
            "form sizes do not match their degree");
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += m_cells[p][i].volume * std::abs(a[i].dot(b[i]));
    return norm_factor(g) * s;
}

double FormComplex::boundary_term(const LatticeConnection& c, int p, const Form& phi, const Form& psi) const
{
    require(static_cast<int>(phi.size()) == count(p) && static_cast<int>(psi.size()) == count(p + 1),
            "form sizes do not match their degree");
    const geometry::Mesh& m = *m_mesh;
    double s = 0.0;
    for (int v : m.boundary_vertices) {
        for (unsigned mask = 0; mask < (1u << m_dim); mask += 2) {
            if (popcount(mask) != p) continue;
            const int cell = find(v, mask);
            if (cell < 0) continue;
            s += boundary_measure(v, mask) * phi[cell].dot(normal_trace(c, v, mask, p + 1, psi));
        }
    }
    return norm_factor(c.group) * s;
}

Form FormComplex::curvature_form(const LatticeConnection& c) const
{
    return plaquette_curvature(c).F;
}

double int_parts_residual(const FormComplex& fc, const LatticeConnection& c, int p, const Form& phi, const Form& psi)
{
    const double lhs = fc.inner(c.group, p + 1, fc.d(c, p, phi), psi);
    const double rhs = fc.inner(c.group, p, phi, fc.d_star(c, p + 1, psi)) + fc.boundary_term(c, p, phi, psi);
    return std::abs(lhs - rhs);
}

namespace {


/// Laplacian with one-sided second differences across the bounded axis at the boundary,
/// so that it does not assume a vanishing normal derivative.
Eigen::VectorXd free_laplacian(const geometry::Mesh& m, const Eigen::VectorXd& f)
{
    Eigen::VectorXd out = geometry::laplace_beltrami(m).apply(f);
    const double h = m.spacing[0];
    for (int v : m.boundary_vertices) {
        const int step = m.coords(v)[0] == 0 ? +1 : -1;
        const int v1 = m.neighbor(v, 0, step);
        const int v2 = m.neighbor(v1, 0, step);
        const int v3 = m.neighbor(v2, 0, step);
        out[v] += (-2.0 * (f[v1] - f[v]) + (2.0 * f[v] - 5.0 * f[v1] + 4.0 * f[v2] - f[v3])) / (h * h);
    }
    return out;
}

/// Sum over top cells of volume * <grad a, grad b> with cell-centred difference quotients.
double gradient_pairing(const FormComplex& fc, const geometry::Mesh& m, const Eigen::VectorXd& a,
                        const Eigen::VectorXd& b)
{
    const int n = m.dim;
    const unsigned full = (1u << n) - 1;
    double s = 0.0;
    for (const auto& cell : fc.cells(n)) {
        (void)full;
        std::vector<int> corner(1u << n);
        for (unsigned bits = 0; bits < (1u << n); ++bits) {
            int v = cell.base;
            for (int ax = 0; ax < n; ++ax)
                if (bits & (1u << ax)) v = m.neighbor(v, ax, +1);
            corner[bits] = v;
        }
        double dot = 0.0;
        for (int ax = 0; ax < n; ++ax) {
            double ga = 0.0;
            double gb = 0.0;
            for (unsigned bits = 0; bits < (1u << n); ++bits) {
                if (bits & (1u << ax)) continue;
                const int lo = corner[bits];
                const int hi = corner[bits | (1u << ax)];
                ga += a[hi] - a[lo];
                gb += b[hi] - b[lo];
            }
            const double norm = static_cast<double>(1u << (n - 1)) * m.spacing[ax];
            dot += (ga / norm) * (gb / norm);
        }
        s += cell.volume * dot;
    }
    return s;
}

double cell_mean(const geometry::Mesh& m, int base, unsigned mask, const Eigen::VectorXd& f)
{
    double s = 0.0;
    int n = 0;
    for (unsigned bits = 0; bits < (1u << m.dim); ++bits) {
        if ((bits & mask) != bits) continue;
        int v = base;
        for (int ax = 0; ax < m.dim; ++ax)
            if (bits & (1u << ax)) v = m.neighbor(v, ax, +1);
        s += f[v];
        ++n;
    }
    return s / n;
}

double central_derivative(const geometry::Mesh& m, const Eigen::VectorXd& u, int v, int ax)
{
    const int up = m.neighbor(v, ax, +1);
    const int dn = m.neighbor(v, ax, -1);
    if (up < 0 || dn < 0) return 0.0; // mirror closure on the bounded axis
    return (u[up] - u[dn]) / (2.0 * m.spacing[ax]);
}

} // namespace

MonotIdentities monot_identities_check(const FormComplex& fc, const LatticeConnection& c, const Eigen::VectorXd& f)
{
    const geometry::Mesh& m = c.m();
    require(f.size() == m.vertex_count(), "field size does not match the mesh");
    require(f.minCoeff() > 0.0, "f must be positive");
    require(m.axis_n[0] >= 4, "identity check needs at least three cells across");
    double grad_scale = 0.0;
    for (const auto& e : m.edges) grad_scale = std::max(grad_scale, std::abs(f[e.b] - f[e.a]) / e.length);
    const Eigen::VectorXd dn = geometry::boundary_normal_derivative(m, f);
    if (dn.cwiseAbs().maxCoeff() > 0.25 * grad_scale + 1e-300)
        fail(ErrorCode::InvalidArgument, "f must have a vanishing normal derivative on the boundary");

    MonotIdentities r;
    const CurvatureField F = plaquette_curvature(c);
    const Form& phi = F.F;

    // |phi| Laplacian f against the gradient pairing.
    const Eigen::VectorXd absphi = curvature_density(c, F).cwiseSqrt();
    const Eigen::VectorXd lap = free_laplacian(m, f);
    r.lhs[0] = (m.weights.array() * absphi.array() * lap.array()).sum();
    r.scale[0] = (m.weights.array() * absphi.array() * lap.array().abs()).sum();
    r.rhs[0] = -gradient_pairing(fc, m, absphi, f);

    Form fphi(phi.size());
    for (size_t i = 0; i < phi.size(); ++i) {
        const auto& cell = fc.cells(2)[i];
        fphi[i] = cell_mean(m, cell.base, cell.mask, f) * phi[i];
    }
    const Form dstar_fphi = fc.d_star(c, 2, fphi);

    const Form alpha = fc.d_star(c, 2, phi);
    const Form dalpha = fc.d(c, 1, alpha);
    r.lhs[1] = fc.inner(c.group, 2, dalpha, fphi);
    r.scale[1] = fc.inner_abs(c.group, 2, dalpha, fphi);
    r.rhs[1] = fc.inner(c.group, 1, alpha, dstar_fphi);

    // iota_X phi with X = grad log f, on edges.
    const Eigen::VectorXd logf = f.array().log();
    Form beta(fc.count(1), Vec3::Zero());
    for (int i = 0; i < fc.count(1); ++i) {
        const auto& cell = fc.cells(1)[i];
        int ei = 0;
        while (!(cell.mask & (1u << ei))) ++ei;
        const int v = cell.base;
        const int w = m.neighbor(v, ei, +1);
        for (int ej = 0; ej < m.dim; ++ej) {
            if (ej == ei) continue;
            const double X = 0.5 * (central_derivative(m, logf, v, ej) + central_derivative(m, logf, w, ej));
            const unsigned pm = (1u << ei) | (1u << ej);
            const double orient = ej < ei ? 1.0 : -1.0;
            Vec3 avg = Vec3::Zero();
            int n = 0;
            const int here = fc.find(v, pm);
            if (here >= 0) {
                avg += phi[here];
                ++n;
            }
            const int below = m.neighbor(v, ej, -1);
            const int there = fc.find(below, pm);
            if (there >= 0) {
                avg += adjoint(inverse(c.links[m.edge_from(below, ej)]), phi[there]);
                ++n;
            }
            if (n > 0) beta[i] += X * orient * avg / n;
        }
    }
    const Form dbeta = fc.d(c, 1, beta);
    r.lhs[2] = fc.inner(c.group, 2, dbeta, fphi);
    r.scale[2] = fc.inner_abs(c.group, 2, dbeta, fphi);
    r.rhs[2] = fc.inner(c.group, 1, beta, dstar_fphi);

    for (int k = 0; k < 3; ++k) r.residual[k] = r.scale[k] > 0.0 ? std::abs(r.lhs[k] - r.rhs[k]) / r.scale[k] : 0.0;
    return r;
}

} // namespace hklab::ym
