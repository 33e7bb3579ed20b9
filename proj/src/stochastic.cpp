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
#include <hklab/stochastic.hpp>

#include <hklab/heat.hpp>

#include "json.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

namespace hklab::stochastic {

namespace {

constexpr double kPi = std::numbers::pi;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

double wrap(double x, double period)
{
    double m = std::fmod(x, period);
    if (m < 0.0) m += period;
    return m >= period ? 0.0 : m;
}

double fold(double x, double L)
{
    double m = std::fmod(x, 2.0 * L);
    if (m < 0.0) m += 2.0 * L;
    return m > L ? 2.0 * L - m : m;
}

} // namespace

Philox::Philox(std::uint64_t seed, std::uint64_t stream)
    : m_key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)}
    , m_counter{0u, 0u, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)}
{}

std::array<std::uint32_t, 4> Philox::block()
{
    std::array<std::uint32_t, 4> c = m_counter;
    std::array<std::uint32_t, 2> k = m_key;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(0xD2511F53u, c[0], hi0, lo0);
        mulhilo(0xCD9E8D57u, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += 0x9E3779B9u;
        k[1] += 0xBB67AE85u;
    }
    if (++m_counter[0] == 0) ++m_counter[1];
    return c;
}

double Philox::uniform()
{
    if (m_used >= 4) {
        m_buffer = block();
        m_used = 0;
    }
    const std::uint32_t a = m_buffer[m_used] >> 5;
    const std::uint32_t b = m_buffer[m_used + 1] >> 6;
    m_used += 2;
    return (a * 67108864.0 + b + 0.5) / 9007199254740992.0;
}

double Philox::normal()
{
    if (m_has_spare) {
        m_has_spare = false;
        return m_spare;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    m_spare = rad * std::sin(2.0 * kPi * u2);
    m_has_spare = true;
    return rad * std::cos(2.0 * kPi * u2);
}

Domain Domain::of(const geometry::ManifoldDescriptor& desc)
{
    Domain d;
    d.desc = desc;
    return d;
}

Domain Domain::halfline()
{
    Domain d;
    d.half_line = true;
    return d;
}

int Domain::dim() const
{
    return half_line ? 1 : desc.dimension();
}

bool Domain::exact_fold() const
{
    return half_line || desc.is_product();
}

Vec3 Domain::reflect(const Vec3& x) const
{
    Vec3 y = x;
    if (half_line) return Vec3(std::abs(x[0]), 0.0, 0.0);
    using geometry::ManifoldKind;
    switch (desc.kind) {
    case ManifoldKind::FlatCylinder:
    case ManifoldKind::FlatSlab3D:
        y[0] = fold(x[0], desc.length);
        for (int d = 1; d < dim(); ++d) y[d] = wrap(x[d], desc.periods[d - 1]);
        break;
    case ManifoldKind::FlatTorus2D:
    case ManifoldKind::FlatTorus3D:
        y[0] = wrap(x[0], desc.length);
        for (int d = 1; d < dim(); ++d) y[d] = wrap(x[d], desc.periods[d - 1]);
        break;
    case ManifoldKind::FlatDisk: {
        const double r = x.head<2>().norm();
        if (r > desc.radius) {
            const double rr = std::abs(fold(r, desc.radius));
            y.head<2>() *= rr / r;
        }
        break;
    }
    }
    return y;
}

double Domain::boundary_distance(const Vec3& x) const
{
    if (half_line) return x[0];
    switch (desc.kind) {
    case geometry::ManifoldKind::FlatCylinder:
    case geometry::ManifoldKind::FlatSlab3D: return std::min(x[0], desc.length - x[0]);
    case geometry::ManifoldKind::FlatDisk: return desc.radius - x.head<2>().norm();
    default: return std::numeric_limits<double>::infinity();
    }
}

double Domain::distance(const Vec3& a, const Vec3& b) const
{
    if (half_line) return std::abs(a[0] - b[0]);
    return geometry::chart_distance(desc, a, b);
}

bool Domain::contains(const Vec3& x, double tol) const
{
    if (half_line) return x[0] >= -tol;
    if (desc.kind == geometry::ManifoldKind::FlatDisk) return x.head<2>().norm() <= desc.radius + tol;
    if (desc.kind == geometry::ManifoldKind::FlatCylinder || desc.kind == geometry::ManifoldKind::FlatSlab3D)
        return x[0] >= -tol && x[0] <= desc.length + tol;
    return true;
}

WalkerState make_walker(const Domain& d, const Vec3& y, std::uint64_t seed, std::uint64_t path)
{
    require(d.contains(y), "start point lies outside the domain");
    WalkerState w;
    w.position = y;
    w.rng = Philox(seed, path);
    return w;
}

void rbm_step(const Domain& d, WalkerState& w, double dt)
{
    require(dt > 0.0, "time step must be positive");
    Vec3 x = w.position;
    const double s = std::sqrt(dt);
    for (int k = 0; k < d.dim(); ++k) x[k] += s * w.rng.normal();
    w.position = d.reflect(x);
    w.time += dt;
    if (d.boundary_distance(w.position) < s) w.local_time += 0.5 * s;
}

void parallel_for(size_t count, int threads, const std::function<void(size_t)>& job)
{
    const size_t workers = std::max<size_t>(1, std::min<size_t>(static_cast<size_t>(std::max(threads, 1)), count));
    if (workers == 1) {
        for (size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (size_t i = w; i < count; i += workers) job(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

ExitTimeSample sample_exit_times(const Domain& d, const Vec3& y, double r, double dt, size_t n_paths, double horizon,
                                 std::uint64_t seed, int threads)
{
    require(r > 0.0 && r < 1.0, "radius must lie in (0, 1)");
    require(dt > 0.0 && horizon > dt, "need 0 < dt < horizon");
    require(n_paths > 0, "need at least one path");
    require(d.contains(y), "start point lies outside the domain");
    ExitTimeSample out;
    out.y = y;
    out.r = r;
    out.dt = dt;
    out.horizon = horizon;
    out.seed = seed;
    out.paths.resize(n_paths);
    const auto n_steps = static_cast<long>(std::ceil(horizon / dt - 1e-9));
    const double s = std::sqrt(dt);
    const int dim = d.dim();
    constexpr size_t kChunk = 4096;
    const size_t chunks = (n_paths + kChunk - 1) / kChunk;
    parallel_for(chunks, threads, [&](size_t c) {
        for (size_t p = c * kChunk; p < std::min(n_paths, (c + 1) * kChunk); ++p) {
            Philox rng(seed, p);
            Vec3 x = y;
            double dist = 0.0;
            ExitSample res{horizon, true};
            for (long k = 1; k <= n_steps; ++k) {
                Vec3 z = x;
                for (int a = 0; a < dim; ++a) z[a] += s * rng.normal();
                x = d.reflect(z);
                const double nd = d.distance(x, y);
                bool exited = nd >= r;
                if (!exited) {
                    // Probability that the bridge between the two positions left the ball.
                    const double a = 2.0 * (r - dist) * (r - nd) / dt;
                    exited = a < 40.0 && rng.uniform() < std::exp(-a);
                }
                if (exited) {
                    res = {static_cast<double>(k) * dt, false};
                    break;
                }
                dist = nd;
            }
            out.paths[p] = res;
        }
    });
    size_t censored = 0;
    for (const auto& e : out.paths) censored += e.censored ? 1 : 0;
    out.censored_fraction = static_cast<double>(censored) / static_cast<double>(n_paths);
    if (out.censored_fraction >= 0.05) {
        std::ostringstream os;
        os << "horizon " << horizon << " censors " << 100.0 * out.censored_fraction << "% of paths";
        out.warnings.push_back(os.str());
    }
    return out;
}

TailReport exit_tail_estimate(const ExitTimeSample& s, const std::vector<double>& kappa_grid)
{
    require(!kappa_grid.empty(), "kappa grid is empty");
    require(std::is_sorted(kappa_grid.begin(), kappa_grid.end()), "kappa grid must be increasing");
    TailReport rep;
    rep.r = s.r;
    rep.n_paths = s.paths.size();
    const double n = static_cast<double>(s.paths.size());
    std::vector<double> taus;
    taus.reserve(s.paths.size());
    for (const auto& e : s.paths)
        if (!e.censored) taus.push_back(e.tau);
    std::sort(taus.begin(), taus.end());
    rep.eta_hat = std::numeric_limits<double>::infinity();
    for (double kappa : kappa_grid) {
        require(kappa > 0.0, "kappa must be positive");
        TailRow row;
        row.kappa = kappa;
        const double t = kappa * s.r * s.r;
        if (t > s.horizon * (1.0 + 1e-12)) {
            row.dropped = true;
            row.note = "beyond the sampling horizon";
            rep.rows.push_back(row);
            continue;
        }
        // Exit times are step end points; the step ending at t belongs to {tau <= t}.
        row.count = static_cast<size_t>(std::upper_bound(taus.begin(), taus.end(), t * (1.0 + 1e-12)) - taus.begin());
        row.p_hat = row.count / n;
        row.se = std::sqrt(row.p_hat * (1.0 - row.p_hat) / n);
        if (row.count < 20) {
            row.dropped = true;
            row.note = row.count == 0 ? "no exits: tail below resolution" : "fewer than 20 exits: tail below resolution";
        } else {
            row.neg_log_p = -std::log(row.p_hat);
            row.se_log = row.se / row.p_hat;
            rep.eta_hat = std::min(rep.eta_hat, kappa * row.neg_log_p);
        }
        rep.rows.push_back(row);
    }
    const TailRow* prev = nullptr;
    int kept = 0;
    for (const TailRow& row : rep.rows) {
        if (row.dropped) continue;
        ++kept;
        if (prev) {
            // -log P must not increase with kappa beyond two standard errors.
            const double slack = 2.0 * std::hypot(prev->se_log, row.se_log);
            if (row.neg_log_p > prev->neg_log_p + slack) rep.monotone = false;
        }
        prev = &row;
    }
    if (kept == 0) {
        rep.eta_hat = 0.0;
        rep.notes.push_back("no kappa cell resolved");
    }
    for (const auto& w : s.warnings) rep.notes.push_back(w);
    rep.pass = kept >= 2 && rep.eta_hat > 0.0 && rep.monotone;
    return rep;
}

std::string tail_report_json(const TailReport& r)
{
    nlohmann::json j;
    j["format"] = "hklab.exit_tail";
    j["version"] = 1;
    j["r"] = r.r;
    j["n_paths"] = r.n_paths;
    j["eta_hat"] = r.eta_hat;
    j["monotone"] = r.monotone;
    j["pass"] = r.pass;
    j["notes"] = r.notes;
    auto& rows = j["rows"] = nlohmann::json::array();
    for (const TailRow& row : r.rows)
        rows.push_back({{"kappa", row.kappa}, {"count", row.count}, {"p_hat", row.p_hat}, {"se", row.se},
                        {"neg_log_p", row.neg_log_p}, {"se_log", row.se_log}, {"dropped", row.dropped},
                        {"note", row.note}});
    return j.dump(2);
}

std::string exit_samples_csv(const ExitTimeSample& s)
{
    std::ostringstream os;
    os.precision(17);
    os << "path,tau,censored\n";
    for (size_t p = 0; p < s.paths.size(); ++p)
        os << p << ',' << s.paths[p].tau << ',' << (s.paths[p].censored ? 1 : 0) << '\n';
    return os.str();
}

double kolmogorov_q(double lambda)
{
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-16 * std::abs(sum)) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b)
{
    require(!a.empty() && !b.empty(), "samples must be nonempty");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    size_t i = 0;
    size_t j = 0;
    double D = 0.0;
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        D = std::max(D, std::abs(i / na - j / nb));
    }
    const double en = std::sqrt(na * nb / (na + nb));
    return kolmogorov_q((en + 0.12 + 0.11 / en) * D);
}

double ks_one_sample_pvalue(std::vector<double> a, const std::function<double(double)>& cdf)
{
    require(!a.empty(), "sample must be nonempty");
    std::sort(a.begin(), a.end());
    const double n = static_cast<double>(a.size());
    double D = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double F = cdf(a[i]);
        D = std::max({D, (i + 1) / n - F, F - i / n});
    }
    const double en = std::sqrt(n);
    return kolmogorov_q((en + 0.12 + 0.11 / en) * D);
}

double chi_square_pvalue(double statistic, int dof)
{
    require(dof >= 1, "chi-square needs at least one degree of freedom");
    if (statistic <= 0.0) return 1.0;
    boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, statistic));
}

namespace {

struct AxisCell
{
    int i0 = 0;
    int i1 = 0;
    double frac = 0.0;
};

AxisCell axis_cell(const geometry::Mesh& m, int axis, double x)
{
    const int n = m.axis_n[axis];
    const double h = m.spacing[axis];
    AxisCell c;
    if (m.periodic[axis]) {
        const double u = wrap(x, n * h) / h;
        c.i0 = std::min(static_cast<int>(std::floor(u)), n - 1);
        c.i1 = (c.i0 + 1) % n;
        c.frac = u - c.i0;
    } else {
        const double u = std::clamp(x / h, 0.0, static_cast<double>(n - 1));
        c.i0 = std::min(static_cast<int>(std::floor(u)), n - 2);
        c.i1 = c.i0 + 1;
        c.frac = u - c.i0;
    }
    return c;
}

double disk_ring_value(const geometry::Mesh& m, const Eigen::VectorXd& f, int ring, double jpos)
{
    const int j0 = static_cast<int>(std::floor(jpos));
    const double fj = jpos - j0;
    return (1.0 - fj) * f[m.disk_index(ring, j0)] + fj * f[m.disk_index(ring, j0 + 1)];
}

} // namespace

double interpolate(const geometry::Mesh& m, const Eigen::VectorXd& f, const Vec3& x)
{
    require(f.size() == m.vertex_count(), "field size does not match the mesh");
    if (m.is_disk()) {
        const double h = m.radial_step();
        const double r = std::min(x.head<2>().norm(), m.desc.radius);
        double th = std::atan2(x.y(), x.x());
        if (th < 0.0) th += 2.0 * kPi;
        const double jpos = th / m.angular_step();
        const double u = r / h;
        if (u < 1.0) return (1.0 - u) * f[0] + u * disk_ring_value(m, f, 1, jpos);
        const int i = std::min(static_cast<int>(std::floor(u)), m.nr() - 1);
        const double fr = std::min(u - i, 1.0);
        return (1.0 - fr) * disk_ring_value(m, f, i, jpos) + fr * disk_ring_value(m, f, i + 1, jpos);
    }
    std::array<AxisCell, 3> cells;
    for (int d = 0; d < m.dim; ++d) cells[d] = axis_cell(m, d, x[d]);
    double value = 0.0;
    for (unsigned bits = 0; bits < (1u << m.dim); ++bits) {
        std::array<int, 3> c{0, 0, 0};
        double w = 1.0;
        for (int d = 0; d < m.dim; ++d) {
            const bool hi = bits & (1u << d);
            c[d] = hi ? cells[d].i1 : cells[d].i0;
            w *= hi ? cells[d].frac : 1.0 - cells[d].frac;
        }
        if (w != 0.0) value += w * f[m.index(c)];
    }
    return value;
}

int locate(const geometry::Mesh& m, const Vec3& x)
{
    if (m.is_disk()) {
        const double r = x.head<2>().norm();
        const int ring = std::min(static_cast<int>(std::lround(r / m.radial_step())), m.nr());
        if (ring == 0) return 0;
        double th = std::atan2(x.y(), x.x());
        if (th < 0.0) th += 2.0 * kPi;
        return m.disk_index(ring, static_cast<int>(std::lround(th / m.angular_step())));
    }
    std::array<int, 3> c{0, 0, 0};
    for (int d = 0; d < m.dim; ++d) {
        const int n = m.axis_n[d];
        if (m.periodic[d])
            c[d] = static_cast<int>(std::lround(wrap(x[d], n * m.spacing[d]) / m.spacing[d])) % n;
        else
            c[d] = std::clamp(static_cast<int>(std::lround(x[d] / m.spacing[d])), 0, n - 1);
    }
    return m.index(c);
}

Vec3 simulate_position(const Domain& d, const Vec3& y, double t, double dt, Philox& rng)
{
    require(t >= 0.0, "time must be nonnegative");
    if (t == 0.0) return y;
    Vec3 x = y;
    if (d.exact_fold()) {
        const double s = std::sqrt(t);
        for (int a = 0; a < d.dim(); ++a) x[a] += s * rng.normal();
        return d.reflect(x);
    }
    if (dt <= 0.0) dt = std::min(t / 20.0, 1e-4 * d.desc.radius * d.desc.radius);
    const auto steps = static_cast<long>(std::ceil(t / dt - 1e-9));
    const double s = std::sqrt(t / steps);
    for (long k = 0; k < steps; ++k) {
        for (int a = 0; a < d.dim(); ++a) x[a] += s * rng.normal();
        x = d.reflect(x);
    }
    return x;
}

McEstimate expectation_along_rbm(const ym::FlowHistory& h, const geometry::Mesh& mesh, const Vec3& y, double s,
                                 double s0, size_t n_paths, std::uint64_t seed, double dt, int threads)
{
    require(s >= 0.0 && s <= s0 * (1.0 + 1e-12), "need 0 <= s <= s0");
    require(n_paths >= 2, "need at least two paths");
    const Eigen::VectorXd& q = h.q_at(s0 - s);
    const Domain d = Domain::of(mesh.desc);
    std::vector<double> values(n_paths);
    constexpr size_t kChunk = 1024;
    parallel_for((n_paths + kChunk - 1) / kChunk, threads, [&](size_t c) {
        for (size_t p = c * kChunk; p < std::min(n_paths, (c + 1) * kChunk); ++p) {
            Philox rng(seed, p);
            values[p] = interpolate(mesh, q, simulate_position(d, y, s, dt, rng));
        }
    });
    McEstimate est;
    est.n = n_paths;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n_paths);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n_paths - 1);
    est.mean = mean;
    est.se = std::sqrt(var / static_cast<double>(n_paths));
    return est;
}

namespace {

int vertex_bin(const geometry::Mesh& m, int v, int B)
{
    if (m.is_disk()) {
        if (v == 0) return 0;
        const int ring_group = m.ring_of(v) * B / (m.nr() + 1);
        const int angle_group = m.angle_of(v) * B / m.na();
        return ring_group * B + angle_group;
    }
    const auto c = m.coords(v);
    int bin = 0;
    for (int d = 0; d < m.dim; ++d) bin = bin * B + c[d] * B / m.axis_n[d];
    return bin;
}

} // namespace

HistogramCheck kernel_histogram_check(const geometry::Mesh& mesh, int y, double t, size_t n_paths,
                                      std::uint64_t seed, int bins_per_axis, double dt, int threads)
{
    require(t > 0.0, "time must be positive");
    require(bins_per_axis >= 2, "need at least two bins per axis");
    const int B = bins_per_axis;
    int nb = 1;
    for (int d = 0; d < mesh.dim; ++d) nb *= B;
    const auto g = heat::heat_kernel(mesh, y, {t}, heat::HeatOptions{heat::Scheme::DenseExponential});
    const Eigen::VectorXd& gt = g.values.front();
    std::vector<double> expected(static_cast<size_t>(nb), 0.0);
    for (int v = 0; v < mesh.vertex_count(); ++v) expected[vertex_bin(mesh, v, B)] += mesh.weights[v] * gt[v];
    const double total = std::accumulate(expected.begin(), expected.end(), 0.0);
    for (double& e : expected) e *= static_cast<double>(n_paths) / total;

    const Domain d = Domain::of(mesh.desc);
    std::vector<int> bin_of(n_paths);
    constexpr size_t kChunk = 1024;
    parallel_for((n_paths + kChunk - 1) / kChunk, threads, [&](size_t c) {
        for (size_t p = c * kChunk; p < std::min(n_paths, (c + 1) * kChunk); ++p) {
            Philox rng(seed, p);
            bin_of[p] = vertex_bin(mesh, locate(mesh, simulate_position(d, mesh.points[y], t, dt, rng)), B);
        }
    });
    std::vector<double> observed(static_cast<size_t>(nb), 0.0);
    for (int b : bin_of) observed[b] += 1.0;

    // Bins with small expected counts are pooled into one cell.
    HistogramCheck hc;
    double pool_e = 0.0;
    double pool_o = 0.0;
    for (int b = 0; b < nb; ++b) {
        if (expected[b] < 5.0) {
            pool_e += expected[b];
            pool_o += observed[b];
            continue;
        }
        hc.chi2 += (observed[b] - expected[b]) * (observed[b] - expected[b]) / expected[b];
        ++hc.bins;
    }
    if (pool_e >= 5.0) {
        hc.chi2 += (pool_o - pool_e) * (pool_o - pool_e) / pool_e;
        ++hc.bins;
    }
    hc.dof = std::max(hc.bins - 1, 1);
    hc.p_value = chi_square_pvalue(hc.chi2, hc.dof);
    return hc;
}

double occupation_uniformity_gap(const geometry::ManifoldDescriptor& desc, size_t n_paths, size_t steps, double dt,
                                 int bins_per_axis, std::uint64_t seed)
{
    require(desc.kind != geometry::ManifoldKind::FlatDisk, "occupation bins are defined on product charts");
    const Domain d = Domain::of(desc);
    const int B = bins_per_axis;
    const int dim = d.dim();
    std::array<double, 3> extent{desc.length, desc.periods[0], desc.periods[1]};
    int nb = 1;
    for (int a = 0; a < dim; ++a) nb *= B;
    std::vector<double> counts(static_cast<size_t>(nb), 0.0);
    for (size_t p = 0; p < n_paths; ++p) {
        WalkerState w;
        w.rng = Philox(seed, p);
        for (int a = 0; a < dim; ++a) w.position[a] = extent[a] * w.rng.uniform();
        for (size_t k = 0; k < steps; ++k) {
            rbm_step(d, w, dt);
            int bin = 0;
            for (int a = 0; a < dim; ++a)
                bin = bin * B + std::min(static_cast<int>(w.position[a] / extent[a] * B), B - 1);
            counts[bin] += 1.0;
        }
    }
    const double expected = static_cast<double>(n_paths * steps) / nb;
    double gap = 0.0;
    for (double c : counts) gap = std::max(gap, std::abs(c - expected) / expected);
    return gap;
}

double k_eps(int n, double K, double eps)
{
    require(n >= 1 && K >= 0.0 && eps > 0.0, "invalid arguments for K_eps");
    // r coth(K r) is increasing in r, so the sup over (0, eps] sits at eps.
    const double kr = K * eps;
    const double term = kr < 1e-8 ? 1.0 : kr / std::tanh(kr);
    return 2.0 * (n - 1) * term + 2.0;
}

DistanceReport squared_distance_checks(const geometry::Mesh& mesh, int y, double eps, double c_h)
{
    const auto conv = geometry::convexity_report(mesh);
    if (!conv.convex) fail(ErrorCode::DomainError, "distance checks need a convex boundary");
    require(y >= 0 && y < mesh.vertex_count(), "start vertex out of range");
    require(eps > 0.0, "radius must be positive");
    const double h = mesh.h();
    if (mesh.is_product()) {
        for (int d = 1; d < mesh.dim; ++d)
            require(eps + 2.0 * h < 0.5 * mesh.desc.periods[d - 1], "radius reaches the cut locus of a periodic axis");
    }
    DistanceReport rep;
    rep.y = y;
    rep.eps = eps;
    rep.K = 0.0; // flat catalogs
    rep.bound = k_eps(mesh.dim, rep.K, eps);
    const Eigen::VectorXd dist = geometry::geodesic_distance(mesh, y);
    const Eigen::VectorXd f = dist.cwiseProduct(dist);
    const Eigen::VectorXd lap = geometry::laplace_beltrami(mesh).apply(f);
    const double core = mesh.is_disk() ? 0.25 * mesh.desc.radius : 0.0;
    rep.max_laplacian = -std::numeric_limits<double>::infinity();
    for (int v = 0; v < mesh.vertex_count(); ++v) {
        if (mesh.on_boundary[v] || dist[v] > eps) continue;
        if (mesh.is_disk() && mesh.points[v].norm() < core) continue;
        ++rep.interior_points;
        rep.max_laplacian = std::max(rep.max_laplacian, lap[v]);
        rep.max_laplacian_error = std::max(rep.max_laplacian_error, std::abs(lap[v] - 2.0 * mesh.dim));
    }
    const Eigen::VectorXd dn = geometry::boundary_normal_derivative(mesh, f);
    rep.min_normal_derivative = std::numeric_limits<double>::infinity();
    for (size_t b = 0; b < mesh.boundary_vertices.size(); ++b) {
        if (dist[mesh.boundary_vertices[b]] > eps) continue;
        ++rep.boundary_points;
        rep.min_normal_derivative = std::min(rep.min_normal_derivative, dn[static_cast<Eigen::Index>(b)]);
    }
    if (rep.boundary_points == 0) rep.min_normal_derivative = 0.0;
    if (rep.interior_points == 0) rep.max_laplacian = 0.0;
    rep.pass = rep.max_laplacian <= rep.bound + c_h * h && rep.min_normal_derivative >= -c_h * h;
    return rep;
}

} // namespace hklab::stochastic
