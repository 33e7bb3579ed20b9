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
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace hklab::ym {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBranchMargin = 1e-6;

Vec3 random_unit(std::mt19937_64& rng)
{
    std::normal_distribution<double> n01;
    Vec3 v;
    do {
        v = Vec3(n01(rng), n01(rng), n01(rng));
    } while (v.norm() < 1e-8);
    return v.normalized();
}

Vec3 generator_direction(Group g, std::mt19937_64& rng)
{
    return g == Group::U1 ? Vec3::UnitX() : random_unit(rng);
}

void check_mesh(const LatticeConnection& c)
{
    require(c.mesh != nullptr, "connection has no mesh");
    require(c.links.size() == c.mesh->edges.size(), "connection size does not match the mesh");
}

} // namespace

std::string to_string(Group g)
{
    return g == Group::U1 ? "U1" : "SU2";
}

std::string to_string(BoundaryMode m)
{
    return m == BoundaryMode::Relative ? "relative" : "absolute";
}

Group group_from_string(const std::string& s)
{
    if (s == "U1" || s == "u1") return Group::U1;
    if (s == "SU2" || s == "su2") return Group::SU2;
    fail(ErrorCode::InvalidArgument, "unknown gauge group '" + s + "'");
}

BoundaryMode mode_from_string(const std::string& s)
{
    if (s == "relative") return BoundaryMode::Relative;
    if (s == "absolute") return BoundaryMode::Absolute;
    fail(ErrorCode::InvalidArgument, "unknown boundary mode '" + s + "'");
}

double norm_factor(Group g)
{
    return g == Group::U1 ? 1.0 : 2.0;
}

Quat operator*(const Quat& a, const Quat& b)
{
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z, a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x, a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quat inverse(const Quat& q)
{
    return {q.w, -q.x, -q.y, -q.z};
}

Quat exp_algebra(const Vec3& v)
{
    const double th = v.norm();
    if (th < 1e-300) return {};
    const double s = std::sin(th) / th;
    return {std::cos(th), s * v.x(), s * v.y(), s * v.z()};
}

Vec3 log_algebra(const Quat& q)
{
    const Vec3 v = q.vec();
    const double s = v.norm();
    if (s < 1e-300) return Vec3::Zero();
    const double th = std::atan2(s, q.w);
    return v * (th / s);
}

Vec3 adjoint(const Quat& q, const Vec3& v)
{
    const Quat p{0.0, v.x(), v.y(), v.z()};
    return (q * p * inverse(q)).vec();
}

Quat normalized(const Quat& q, Group g)
{
    Quat r = q;
    if (g == Group::U1) r.y = r.z = 0.0;
    const double n = std::sqrt(r.w * r.w + r.x * r.x + r.y * r.y + r.z * r.z);
    r.w /= n;
    r.x /= n;
    r.y /= n;
    r.z /= n;
    return r;
}

LatticeConnection identity_connection(std::shared_ptr<const geometry::Mesh> mesh, Group g)
{
    require(mesh != nullptr, "mesh is null");
    LatticeConnection c;
    c.mesh = std::move(mesh);
    c.group = g;
    c.links.assign(c.mesh->edges.size(), Quat{});
    return c;
}

LatticeConnection random_connection(std::shared_ptr<const geometry::Mesh> mesh, Group g, double amplitude,
                                    std::uint64_t seed)
{
    require(amplitude >= 0.0 && amplitude <= kPi / 4.0, "amplitude must lie in [0, pi/4]");
    LatticeConnection c = identity_connection(std::move(mesh), g);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> xi(-1.0, 1.0);
    for (Quat& u : c.links) {
        const Vec3 n = generator_direction(g, rng);
        u = exp_algebra(amplitude * xi(rng) * n);
    }
    return c;
}

LatticeConnection smooth_random_connection(std::shared_ptr<const geometry::Mesh> mesh, Group g,
                                           BoundaryMode mode, double amplitude, std::uint64_t seed, int modes)
{
    require(amplitude >= 0.0, "amplitude must be nonnegative");
    require(modes >= 1, "at least one mode is required");
    LatticeConnection c = identity_connection(std::move(mesh), g);
    const geometry::Mesh& m = *c.mesh;
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> kx(1, 2);
    std::uniform_int_distribution<int> ky(0, 2);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);

    struct Mode
    {
        int jx = 1;
        std::array<int, 2> k{0, 0};
        double phi = 0.0;
        int axis = 1;
        double a = 0.0;
        Vec3 n;
    };
    std::vector<Mode> ms(static_cast<size_t>(modes));
    for (Mode& md : ms) {
        md.jx = kx(rng);
        md.k = {ky(rng), ky(rng)};
        md.phi = phase(rng);
        md.axis = m.is_disk() ? 1 : 1 + static_cast<int>(rng() % static_cast<unsigned>(m.dim - 1));
        md.a = coef(rng);
        md.n = generator_direction(g, rng);
    }

    if (m.is_disk()) {
        // Radial gauge: A = A_theta dtheta with dA_theta/dr = 0 at r = R, integrated exactly in theta.
        const double R = m.desc.radius;
        for (size_t e = 0; e < m.edges.size(); ++e) {
            const geometry::Edge& ed = m.edges[e];
            if (ed.axis != 1) continue;
            const double r = m.points[ed.a].norm();
            const double th0 = std::atan2(m.points[ed.a].y(), m.points[ed.a].x());
            const double th1 = th0 + m.angular_step();
            Vec3 x = Vec3::Zero();
            for (const Mode& md : ms) {
                const int k = md.jx + md.k[0];
                const double radial = std::pow(R, -k) * (std::pow(r, k + 2) / (k + 2)
                                                         - std::pow(r, k + 4) / ((k + 4) * R * R));
                const double ang = (std::sin(k * th1 + md.phi) - std::sin(k * th0 + md.phi)) / k;
                x += amplitude * md.a * radial * ang * md.n;
            }
            c.links[e] = exp_algebra(x);
        }
        (void)mode;
        return c;
    }

    const double L = m.desc.length;
    for (size_t e = 0; e < m.edges.size(); ++e) {
        const geometry::Edge& ed = m.edges[e];
        if (ed.axis == 0) continue;
        Vec3 mid = m.points[ed.a];
        mid[ed.axis] += 0.5 * ed.length;
        Vec3 x = Vec3::Zero();
        for (const Mode& md : ms) {
            if (md.axis != ed.axis) continue;
            const double arg = md.jx * kPi * mid[0] / L;
            const double prof = mode == BoundaryMode::Absolute ? std::cos(arg) : std::sin(arg);
            double wave = md.phi;
            for (int d = 1; d < m.dim; ++d) wave += 2.0 * kPi * md.k[d - 1] * mid[d] / m.desc.periods[d - 1];
            x += amplitude * md.a * prof * std::cos(wave) * md.n;
        }
        c.links[e] = exp_algebra(ed.length * x);
    }
    return c;
}

LatticeConnection constant_curvature_u1(std::shared_ptr<const geometry::Mesh> mesh, double b, double a)
{
    require(mesh != nullptr && mesh->desc.kind == geometry::ManifoldKind::FlatCylinder,
            "constant curvature field needs a cylinder mesh");
    LatticeConnection c = identity_connection(std::move(mesh), Group::U1);
    const geometry::Mesh& m = *c.mesh;
    for (size_t e = 0; e < m.edges.size(); ++e) {
        const geometry::Edge& ed = m.edges[e];
        const double phase = ed.axis == 0 ? a * ed.length : b * m.points[ed.a].x() * ed.length;
        c.links[e] = exp_algebra(Vec3(phase, 0.0, 0.0));
    }
    return c;
}

LatticeConnection gauge_transform(const LatticeConnection& c, const std::vector<Quat>& g)
{
    check_mesh(c);
    require(static_cast<int>(g.size()) == c.m().vertex_count(), "gauge field size does not match the mesh");
    LatticeConnection out = c;
    for (size_t e = 0; e < c.links.size(); ++e) {
        const geometry::Edge& ed = c.m().edges[e];
        out.links[e] = normalized(g[ed.a] * c.links[e] * inverse(g[ed.b]), c.group);
    }
    return out;
}

Quat plaquette_holonomy(const LatticeConnection& c, int p)
{
    const geometry::Plaquette& pl = c.m().plaquettes[p];
    Quat u;
    for (int k = 0; k < pl.corners; ++k) u = u * c.oriented(pl.edges[k], pl.signs[k]);
    return u;
}

CurvatureField plaquette_curvature_unchecked(const LatticeConnection& c)
{
    check_mesh(c);
    const auto& pls = c.m().plaquettes;
    CurvatureField f;
    f.F.resize(pls.size());
    for (size_t p = 0; p < pls.size(); ++p) {
        const Vec3 l = log_algebra(plaquette_holonomy(c, static_cast<int>(p)));
        if (l.norm() > kPi - kBranchMargin) f.flagged.push_back(static_cast<int>(p));
        f.F[p] = l / pls[p].area;
    }
    return f;
}

CurvatureField plaquette_curvature(const LatticeConnection& c)
{
    CurvatureField f = plaquette_curvature_unchecked(c);
    if (!f.flagged.empty()) {
        std::ostringstream os;
        os << f.flagged.size() << " plaquette holonomies at the log branch cut:";
        for (size_t i = 0; i < std::min<size_t>(f.flagged.size(), 10); ++i) os << ' ' << f.flagged[i];
        fail(ErrorCode::NumericalError, os.str());
    }
    return f;
}

double yang_mills_energy(const LatticeConnection& c, const CurvatureField& F)
{
    const auto& pls = c.m().plaquettes;
    const double cg = norm_factor(c.group);
    double sum = 0.0;
    double comp = 0.0;
    for (size_t p = 0; p < pls.size(); ++p) {
        const double term = pls[p].weight * cg * F.F[p].squaredNorm();
        const double t = sum + term;
        comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
        sum = t;
    }
    return sum + comp;
}

double yang_mills_energy(const LatticeConnection& c)
{
    return yang_mills_energy(c, plaquette_curvature(c));
}

Eigen::VectorXd curvature_density(const LatticeConnection& c, const CurvatureField& F)
{
    const geometry::Mesh& m = c.m();
    const double cg = norm_factor(c.group);
    Eigen::VectorXd q = Eigen::VectorXd::Zero(m.vertex_count());
    for (size_t p = 0; p < m.plaquettes.size(); ++p) {
        const geometry::Plaquette& pl = m.plaquettes[p];
        const double n2 = cg * F.F[p].squaredNorm();
        for (int k = 0; k < pl.corners; ++k) q[pl.vertices[k]] += pl.shares[k] * n2;
    }
    return q.cwiseQuotient(m.weights);
}

Eigen::VectorXd curvature_density(const LatticeConnection& c)
{
    return curvature_density(c, plaquette_curvature(c));
}

double curvature_sup(const LatticeConnection& c)
{
    return curvature_density(c).maxCoeff();
}

std::vector<std::uint8_t> frozen_links(const geometry::Mesh& mesh, BoundaryMode mode)
{
    std::vector<std::uint8_t> out(mesh.edges.size(), 0);
    if (mode == BoundaryMode::Relative)
        for (size_t e = 0; e < mesh.edges.size(); ++e) out[e] = mesh.edges[e].boundary_tangential ? 1 : 0;
    return out;
}

LatticeConnection apply_boundary_conditions(const LatticeConnection& c, BoundaryMode mode)
{
    check_mesh(c);
    LatticeConnection out = c;
    if (mode != BoundaryMode::Relative || c.m().dim != 3) return out;
    for (size_t e = 0; e < out.links.size(); ++e)
        if (c.m().edges[e].boundary_tangential) out.links[e] = Quat{};
    return out;
}

namespace {

bool is_normal_plaquette(const geometry::Mesh& m, const geometry::Plaquette& pl)
{
    if (m.is_disk()) return pl.corners == 4 && m.on_boundary[pl.vertices[1]];
    if (m.dim == 2 ? pl.plane != 0 : pl.plane > 1) return false;
    for (int k = 0; k < 4; ++k)
        if (m.on_boundary[pl.vertices[k]]) return true;
    return false;
}

} // namespace

double bc_residual(const LatticeConnection& c, BoundaryMode mode)
{
    check_mesh(c);
    const geometry::Mesh& m = c.m();
    if (!m.has_boundary()) return 0.0;
    double worst = 0.0;
    for (size_t p = 0; p < m.plaquettes.size(); ++p) {
        const geometry::Plaquette& pl = m.plaquettes[p];
        if (mode == BoundaryMode::Relative) {
            if (pl.boundary_face)
                worst = std::max(worst, log_algebra(plaquette_holonomy(c, static_cast<int>(p))).norm() / pl.area);
            continue;
        }
        if (!is_normal_plaquette(m, pl)) continue;
        // Ghost plaquette: mirror image of the loop carrying copies of the same link elements,
        // traversed in the ghost cell's positive orientation (reversed order, inverted links).
        Quat inside;
        Quat ghost;
        for (int k = 0; k < pl.corners; ++k) inside = inside * c.oriented(pl.edges[k], pl.signs[k]);
        for (int k = pl.corners - 1; k >= 0; --k) ghost = ghost * c.oriented(pl.edges[k], -pl.signs[k]);
        const Vec3 sum = log_algebra(inside) + log_algebra(ghost);
        worst = std::max(worst, sum.norm() / pl.area);
    }
    return worst;
}

double cfl_limit(const geometry::Mesh& mesh)
{
    std::vector<double> row(mesh.edges.size(), 0.0);
    for (const geometry::Plaquette& pl : mesh.plaquettes) {
        const double w = pl.weight * pl.corners / (pl.area * pl.area);
        for (int k = 0; k < pl.corners; ++k) row[pl.edges[k]] += w;
    }
    double worst = 0.0;
    for (size_t e = 0; e < row.size(); ++e) worst = std::max(worst, 0.5 * row[e] / mesh.edges[e].coupling());
    require(worst > 0.0, "mesh has no plaquettes");
    return 2.0 / worst;
}

double default_flow_dt(const geometry::Mesh& mesh)
{
    const double h = mesh.h();
    return std::min(h * h / 8.0, 0.5 * cfl_limit(mesh));
}

std::vector<Vec3> energy_gradient(const LatticeConnection& c, const CurvatureField& F,
                                  const std::vector<std::uint8_t>& frozen)
{
    const geometry::Mesh& m = c.m();
    std::vector<Vec3> g(m.edges.size(), Vec3::Zero());
    for (size_t p = 0; p < m.plaquettes.size(); ++p) {
        const geometry::Plaquette& pl = m.plaquettes[p];
        const Vec3 L = F.F[p] * pl.area;
        const double coef = pl.weight / (pl.area * pl.area);
        Quat prefix;
        for (int k = 0; k < pl.corners; ++k) {
            const Quat v = c.oriented(pl.edges[k], pl.signs[k]);
            const Quat pre = pl.signs[k] > 0 ? prefix : prefix * v;
            g[pl.edges[k]] += coef * pl.signs[k] * adjoint(inverse(pre), L);
            prefix = prefix * v;
        }
    }
    for (size_t e = 0; e < g.size(); ++e) {
        if (!frozen.empty() && frozen[e])
            g[e].setZero();
        else
            g[e] /= m.edges[e].coupling();
    }
    return g;
}

FlowState make_flow_state(const LatticeConnection& c, BoundaryMode mode)
{
    FlowState s;
    s.conn = apply_boundary_conditions(c, mode);
    s.mode = mode;
    s.frozen = frozen_links(c.m(), mode);
    s.energy = yang_mills_energy(s.conn);
    return s;
}

StepReport flow_step(FlowState& s, double dt)
{
    require(dt > 0.0, "flow step must be positive");
    const double cfl = cfl_limit(s.conn.m());
    if (dt > cfl * (1.0 + 1e-12))
        fail(ErrorCode::InvalidArgument,
             "flow step " + std::to_string(dt) + " exceeds the stability limit " + std::to_string(cfl));
    StepReport r;
    r.dt = dt;
    r.energy_before = s.energy;
    const CurvatureField F = plaquette_curvature(s.conn);
    const auto grad = energy_gradient(s.conn, F, s.frozen);
    LatticeConnection next = s.conn;
    for (size_t e = 0; e < next.links.size(); ++e) {
        if (s.frozen[e]) continue;
        next.links[e] = normalized(exp_algebra(-0.5 * dt * grad[e]) * s.conn.links[e], s.conn.group);
    }
    next = apply_boundary_conditions(next, s.mode);
    s.conn = std::move(next);
    s.energy = yang_mills_energy(s.conn);
    s.t += dt;
    r.energy_after = s.energy;
    r.bc_residual = bc_residual(s.conn, s.mode);
    r.descent_violation = r.energy_after > r.energy_before + 1e-12;
    return r;
}

const Eigen::VectorXd& FlowHistory::q_at(double t) const
{
    require(!times.empty(), "flow history is empty");
    size_t best = 0;
    for (size_t k = 0; k < times.size(); ++k) {
        if (std::abs(times[k] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return q[k];
        if (std::abs(times[k] - t) < std::abs(times[best] - t)) best = k;
    }
    std::ostringstream os;
    os.precision(12);
    os << "no flow snapshot at t = " << t << "; nearest stored time is " << times[best];
    fail(ErrorCode::InvalidArgument, os.str());
}

namespace {

TraceRow trace_row(const FlowState& s, const Eigen::VectorXd& q)
{
    TraceRow row;
    row.t = s.t;
    row.energy = s.energy;
    row.sup_q = q.maxCoeff();
    row.bc_residual = bc_residual(s.conn, s.mode);
    if (s.conn.m().has_boundary()) {
        const Eigen::VectorXd dq = geometry::boundary_normal_derivative(s.conn.m(), q);
        row.min_dq_dnu = dq.minCoeff();
        row.max_dq_dnu = dq.maxCoeff();
    }
    return row;
}

} // namespace

FlowRun run_flow(FlowState s, int steps, double dt, int record_every)
{
    require(steps >= 0, "step count must be nonnegative");
    require(record_every >= 1, "record interval must be positive");
    FlowRun run;
    auto record = [&]() {
        const Eigen::VectorXd q = curvature_density(s.conn);
        run.trace.push_back(trace_row(s, q));
        run.worst_bc_residual = std::max(run.worst_bc_residual, run.trace.back().bc_residual);
        run.history.times.push_back(s.t);
        run.history.q.push_back(q);
        run.history.energy.push_back(s.energy);
    };
    record();
    for (int k = 1; k <= steps; ++k) {
        const StepReport r = flow_step(s, dt);
        run.worst_bc_residual = std::max(run.worst_bc_residual, r.bc_residual);
        run.worst_increase = std::max(run.worst_increase, r.energy_after - r.energy_before);
        if (r.descent_violation) ++run.descent_violations;
        if (k % record_every == 0) record();
    }
    run.final_state = std::move(s);
    return run;
}

Eigen::VectorXd boundary_normal_derivative_of_q(const LatticeConnection& c)
{
    check_mesh(c);
    const auto conv = geometry::convexity_report(c.m());
    if (!conv.convex) fail(ErrorCode::DomainError, "boundary normal derivative of q needs a convex boundary");
    return geometry::boundary_normal_derivative(c.m(), curvature_density(c));
}

std::string energy_trace_csv(const std::vector<TraceRow>& rows)
{
    std::ostringstream os;
    os.precision(17);
    os << "t,energy,sup_q,min_dq_dnu,max_dq_dnu,bc_residual\n";
    for (const TraceRow& r : rows)
        os << r.t << ',' << r.energy << ',' << r.sup_q << ',' << r.min_dq_dnu << ',' << r.max_dq_dnu << ','
           << r.bc_residual << '\n';
    return os.str();
}

namespace {

constexpr char kSnapMagic[4] = {'H', 'K', 'F', 'S'};

template <typename T>
void put(std::ofstream& os, const T& v)
{
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is)
{
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) fail(ErrorCode::IoError, "truncated flow snapshot");
    return v;
}

} // namespace

void write_flow_snapshot(const std::string& path, const FlowState& s)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) fail(ErrorCode::IoError, "cannot open '" + path + "' for writing");
    os.write(kSnapMagic, 4);
    put<std::uint32_t>(os, 1);
    put<std::uint64_t>(os, s.conn.m().hash());
    put<std::uint32_t>(os, s.conn.group == Group::U1 ? 0u : 1u);
    put<std::uint32_t>(os, s.mode == BoundaryMode::Relative ? 0u : 1u);
    put<double>(os, s.t);
    put<std::uint64_t>(os, s.conn.links.size());
    for (const Quat& q : s.conn.links) {
        put(os, q.w);
        put(os, q.x);
        put(os, q.y);
        put(os, q.z);
    }
    if (!os) fail(ErrorCode::IoError, "failed writing '" + path + "'");
}

FlowState read_flow_snapshot(const std::string& path, std::shared_ptr<const geometry::Mesh> mesh)
{
    require(mesh != nullptr, "mesh is null");
    std::ifstream is(path, std::ios::binary);
    if (!is) fail(ErrorCode::IoError, "cannot open '" + path + "'");
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kSnapMagic, 4) != 0) fail(ErrorCode::IoError, "not a flow snapshot: " + path);
    if (get<std::uint32_t>(is) != 1) fail(ErrorCode::IoError, "unsupported flow snapshot version");
    if (get<std::uint64_t>(is) != mesh->hash()) fail(ErrorCode::InvalidArgument, "snapshot was written for another mesh");
    const Group g = get<std::uint32_t>(is) == 0 ? Group::U1 : Group::SU2;
    const BoundaryMode mode = get<std::uint32_t>(is) == 0 ? BoundaryMode::Relative : BoundaryMode::Absolute;
    const double t = get<double>(is);
    const auto n = get<std::uint64_t>(is);
    if (n != mesh->edges.size()) fail(ErrorCode::IoError, "snapshot link count does not match the mesh");
    LatticeConnection c = identity_connection(std::move(mesh), g);
    for (Quat& q : c.links) {
        q.w = get<double>(is);
        q.x = get<double>(is);
        q.y = get<double>(is);
        q.z = get<double>(is);
    }
    FlowState s;
    s.conn = std::move(c);
    s.mode = mode;
    s.t = t;
    s.frozen = frozen_links(s.conn.m(), mode);
    s.energy = yang_mills_energy(s.conn);
    return s;
}

double zeta_functional(const FlowHistory& h, const heat::TimeField& kernel, const geometry::Mesh& mesh, double r,
                       double t)
{
    require(t > 0.0 && t <= r * (1.0 + 1e-12), "zeta needs 0 < t <= r");
    const Eigen::VectorXd& q = h.q_at(r - t);
    const Eigen::VectorXd& g = kernel.at(t);
    require(q.size() == mesh.vertex_count() && g.size() == mesh.vertex_count(), "field size does not match the mesh");
    return (mesh.weights.array() * q.array() * g.array()).sum();
}

MonotonicityReport monotonicity_check(const geometry::Mesh& mesh, const std::vector<double>& t,
                                      const std::vector<double>& zeta, double ym0)
{
    if (!geometry::convexity_report(mesh).totally_geodesic)
        fail(ErrorCode::DomainError, "monotonicity check needs a totally geodesic boundary");
    require(t.size() == zeta.size() && t.size() >= 2, "need at least two (t, zeta) samples");
    require(ym0 >= 0.0, "initial energy must be nonnegative");
    MonotonicityReport rep;
    for (size_t i = 0; i < t.size(); ++i) {
        require(t[i] > 0.0 && t[i] < 1.0, "sample times must lie in (0, 1)");
        if (i > 0) require(t[i] > t[i - 1], "sample times must be increasing");
    }
    for (size_t i = 0; i < t.size(); ++i) {
        for (size_t j = i + 1; j < t.size(); ++j) {
            ++rep.pairs;
            const double lhs = t[i] * t[i] * zeta[i];
            const double rhs = t[j] * t[j] * zeta[j];
            if (lhs > rhs) {
                if (rhs > 0.0)
                    rep.u_bar = std::max(rep.u_bar, std::log(lhs / rhs));
                else
                    rep.finite = false;
                if (ym0 > 0.0)
                    rep.C3 = std::max(rep.C3, (lhs - rhs) / ((t[j] - t[i]) * ym0));
                else
                    rep.finite = false;
            }
        }
    }
    rep.worst_slack = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < t.size(); ++i)
        for (size_t j = i + 1; j < t.size(); ++j) {
            const double bound = t[j] * t[j] * std::exp(rep.u_bar) * zeta[j] / (t[i] * t[i]);
            rep.worst_slack = std::min(rep.worst_slack, bound - zeta[i]);
        }
    return rep;
}

BochnerReport bochner_residual(const FlowHistory& h, const geometry::Mesh& mesh, size_t k)
{
    if (h.q.size() < 3 || k == 0 || k + 1 >= h.q.size())
        fail(ErrorCode::InvalidArgument, "Bochner residual needs snapshots on both sides of the requested time");
    const auto lap = geometry::laplace_beltrami(mesh);
    const double dt = h.times[k + 1] - h.times[k - 1];
    BochnerReport rep;
    rep.lhs = (h.q[k + 1] - h.q[k - 1]) / dt - 0.5 * lap.apply(h.q[k]);
    rep.max_lhs = rep.lhs.maxCoeff();
    const double floor = 1e-3 * h.q[k].maxCoeff();
    for (Eigen::Index v = 0; v < rep.lhs.size(); ++v) {
        const double q = h.q[k][v];
        if (q <= floor || q <= 0.0) continue;
        ++rep.points;
        rep.C2 = std::max(rep.C2, rep.lhs[v] / ((1.0 + std::sqrt(q)) * q));
    }
    return rep;
}

} // namespace hklab::ym
