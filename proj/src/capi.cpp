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
#include <hklab/hklab.h>

#include <hklab/experiments.hpp>
#include <hklab/heat.hpp>
#include <hklab/stochastic.hpp>
#include <hklab/yang_mills.hpp>

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

using namespace hklab;

struct hk_mesh
{
    std::shared_ptr<const geometry::Mesh> mesh;
};

struct hk_field
{
    heat::TimeField field;
};

struct hk_flow
{
    std::shared_ptr<const geometry::Mesh> mesh;
    ym::FlowState state;
    std::vector<ym::TraceRow> trace;
};

namespace {

thread_local std::string g_last_error;

hk_status status_of(ErrorCode c)
{
    switch (c) {
    case ErrorCode::InvalidArgument: return HK_INVALID_ARGUMENT;
    case ErrorCode::DomainError: return HK_DOMAIN_ERROR;
    case ErrorCode::NumericalError: return HK_NUMERICAL_ERROR;
    case ErrorCode::IoError: return HK_IO_ERROR;
    case ErrorCode::CheckFailed: return HK_CHECK_FAILED;
    }
    return HK_INTERNAL_ERROR;
}

template <class F>
hk_status guard(F&& f)
{
    try {
        f();
        g_last_error.clear();
        return HK_OK;
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return HK_INTERNAL_ERROR;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return HK_INTERNAL_ERROR;
    }
}

void non_null(const void* p, const char* name)
{
    if (!p) fail(ErrorCode::InvalidArgument, std::string(name) + " must not be null");
}

char* dup(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

hk_status make_mesh(const geometry::ManifoldDescriptor& d, hk_mesh** out)
{
    return guard([&] {
        non_null(out, "out");
        *out = nullptr;
        auto m = std::make_unique<hk_mesh>();
        m->mesh = std::make_shared<const geometry::Mesh>(geometry::build_mesh(d));
        *out = m.release();
    });
}

std::vector<double> span(const double* p, size_t n)
{
    if (n > 0) non_null(p, "times");
    return std::vector<double>(p, p + n);
}

heat::Scheme scheme_of(hk_scheme s)
{
    switch (s) {
    case HK_CRANK_NICOLSON: return heat::Scheme::CrankNicolson;
    case HK_BACKWARD_EULER: return heat::Scheme::BackwardEuler;
    case HK_EXPONENTIAL: return heat::Scheme::DenseExponential;
    }
    fail(ErrorCode::InvalidArgument, "unknown scheme " + std::to_string(static_cast<int>(s)));
}

ym::Group group_of(hk_group g)
{
    if (g == HK_U1) return ym::Group::U1;
    if (g == HK_SU2) return ym::Group::SU2;
    fail(ErrorCode::InvalidArgument, "unknown gauge group " + std::to_string(static_cast<int>(g)));
}

ym::BoundaryMode bc_of(hk_bc b)
{
    if (b == HK_RELATIVE) return ym::BoundaryMode::Relative;
    if (b == HK_ABSOLUTE) return ym::BoundaryMode::Absolute;
    fail(ErrorCode::InvalidArgument, "unknown boundary mode " + std::to_string(static_cast<int>(b)));
}

stochastic::ExitTimeSample exit_sample(const hk_mesh* m, const double y[3], double r, double dt, size_t n,
                                       double horizon, uint64_t seed, int threads)
{
    non_null(y, "y");
    const auto dom = m ? stochastic::Domain::of(m->mesh->desc) : stochastic::Domain::halfline();
    return stochastic::sample_exit_times(dom, Vec3(y[0], y[1], y[2]), r, dt, n, horizon, seed, threads);
}

} // namespace

extern "C" {

const char* hk_version(void)
{
    return HKLAB_VERSION;
}

const char* hk_last_error(void)
{
    return g_last_error.c_str();
}

void hk_string_free(char* s)
{
    std::free(s);
}

hk_status hk_mesh_cylinder(double length, double circumference, int nx, int ny, hk_mesh** out)
{
    return make_mesh(geometry::ManifoldDescriptor::cylinder(length, circumference, nx, ny), out);
}

hk_status hk_mesh_slab(double length, double l1, double l2, int nx, int ny, int nz, hk_mesh** out)
{
    return make_mesh(geometry::ManifoldDescriptor::slab(length, l1, l2, nx, ny, nz), out);
}

hk_status hk_mesh_disk(double radius, int nr, int na, hk_mesh** out)
{
    return make_mesh(geometry::ManifoldDescriptor::disk(radius, nr, na), out);
}

void hk_mesh_free(hk_mesh* m)
{
    delete m;
}

hk_status hk_mesh_info(const hk_mesh* m, int* dim, size_t* vertices, size_t* boundary_vertices)
{
    return guard([&] {
        non_null(m, "mesh");
        if (dim) *dim = m->mesh->dim;
        if (vertices) *vertices = static_cast<size_t>(m->mesh->vertex_count());
        if (boundary_vertices) *boundary_vertices = m->mesh->boundary_vertices.size();
    });
}

hk_status hk_mesh_points(const hk_mesh* m, double* xyz)
{
    return guard([&] {
        non_null(m, "mesh");
        non_null(xyz, "xyz");
        for (const Vec3& p : m->mesh->points) {
            *xyz++ = p.x();
            *xyz++ = p.y();
            *xyz++ = p.z();
        }
    });
}

hk_status hk_mesh_to_json(const hk_mesh* m, char** json)
{
    return guard([&] {
        non_null(m, "mesh");
        non_null(json, "json");
        *json = dup(geometry::mesh_to_json(*m->mesh));
    });
}

hk_status hk_heat_solve(const hk_mesh* m, const double* initial, const double* times, size_t n_times,
                        hk_scheme scheme, double dt, hk_field** out)
{
    return guard([&] {
        non_null(m, "mesh");
        non_null(initial, "initial");
        non_null(out, "out");
        *out = nullptr;
        heat::HeatOptions o;
        o.scheme = scheme_of(scheme);
        o.dt = dt > 0.0 ? dt : 0.0;
        const Eigen::VectorXd u0 = Eigen::Map<const Eigen::VectorXd>(initial, m->mesh->vertex_count());
        auto f = std::make_unique<hk_field>();
        f->field = heat::solve_neumann_heat(*m->mesh, u0, span(times, n_times), o);
        *out = f.release();
    });
}

hk_status hk_heat_kernel(const hk_mesh* m, size_t y, const double* times, size_t n_times, hk_kernel convention,
                         hk_scheme scheme, hk_field** out)
{
    return guard([&] {
        non_null(m, "mesh");
        non_null(out, "out");
        *out = nullptr;
        if (y >= static_cast<size_t>(m->mesh->vertex_count())) fail(ErrorCode::InvalidArgument, "source vertex out of range");
        heat::HeatOptions o = heat::kernel_options();
        o.scheme = scheme_of(scheme);
        auto f = std::make_unique<hk_field>();
        if (convention != HK_KERNEL_RBM && convention != HK_KERNEL_HEAT)
            fail(ErrorCode::InvalidArgument, "unknown kernel convention " + std::to_string(static_cast<int>(convention)));
        const int src = static_cast<int>(y);
        f->field = convention == HK_KERNEL_RBM ? heat::heat_kernel(*m->mesh, src, span(times, n_times), o)
                                               : heat::analytic_kernel(*m->mesh, src, span(times, n_times), o);
        *out = f.release();
    });
}

void hk_field_free(hk_field* f)
{
    delete f;
}

hk_status hk_field_size(const hk_field* f, size_t* n_times, size_t* vertices)
{
    return guard([&] {
        non_null(f, "field");
        if (n_times) *n_times = f->field.size();
        if (vertices) *vertices = f->field.values.empty() ? 0 : static_cast<size_t>(f->field.values[0].size());
    });
}

hk_status hk_field_time(const hk_field* f, size_t k, double* t)
{
    return guard([&] {
        non_null(f, "field");
        non_null(t, "t");
        if (k >= f->field.size()) fail(ErrorCode::InvalidArgument, "time index out of range");
        *t = f->field.times[k];
    });
}

hk_status hk_field_values(const hk_field* f, size_t k, double* out)
{
    return guard([&] {
        non_null(f, "field");
        non_null(out, "out");
        if (k >= f->field.size()) fail(ErrorCode::InvalidArgument, "time index out of range");
        const auto& v = f->field.values[k];
        std::memcpy(out, v.data(), static_cast<size_t>(v.size()) * sizeof(double));
    });
}

hk_status hk_field_write(const hk_field* f, const char* path)
{
    return guard([&] {
        non_null(f, "field");
        non_null(path, "path");
        heat::write_time_field_binary(path, f->field);
    });
}

hk_status hk_field_read(const char* path, hk_field** out)
{
    return guard([&] {
        non_null(path, "path");
        non_null(out, "out");
        *out = nullptr;
        auto f = std::make_unique<hk_field>();
        f->field = heat::read_time_field_binary(path);
        *out = f.release();
    });
}

hk_status hk_lyh_check(const hk_mesh* m, const hk_field* f, double tol_disc, size_t y_calib, int* passed,
                       char** report_json)
{
    return guard([&] {
        non_null(m, "mesh");
        non_null(f, "field");
        double tol = tol_disc;
        if (tol < 0.0) {
            if (y_calib >= static_cast<size_t>(m->mesh->vertex_count()))
                fail(ErrorCode::InvalidArgument, "calibration vertex out of range");
            tol = heat::calibrate_tol_disc(*m->mesh, static_cast<int>(y_calib), f->field.times).tol_disc;
        }
        const auto r = heat::lyh_check_sharp(f->field, *m->mesh, tol);
        if (passed) *passed = r.passed ? 1 : 0;
        if (report_json) *report_json = dup(heat::lyh_report_json(r));
    });
}

hk_status hk_flow_create(const hk_mesh* m, hk_group group, hk_bc bc, int smooth, double amplitude, uint64_t seed,
                         hk_flow** out)
{
    return guard([&] {
        non_null(m, "mesh");
        non_null(out, "out");
        *out = nullptr;
        const auto g = group_of(group);
        const auto mode = bc_of(bc);
        const auto conn = smooth ? ym::smooth_random_connection(m->mesh, g, mode, amplitude, seed)
                                 : ym::random_connection(m->mesh, g, amplitude, seed);
        auto f = std::make_unique<hk_flow>();
        f->mesh = m->mesh;
        f->state = ym::make_flow_state(conn, mode);
        *out = f.release();
    });
}

void hk_flow_free(hk_flow* f)
{
    delete f;
}

hk_status hk_flow_run(hk_flow* f, int steps, double dt, int* descent_violations)
{
    return guard([&] {
        non_null(f, "flow");
        const double step = dt > 0.0 ? dt : ym::default_flow_dt(*f->mesh);
        auto run = ym::run_flow(f->state, steps, step);
        const size_t skip = f->trace.empty() ? 0 : 1;
        f->trace.insert(f->trace.end(), run.trace.begin() + static_cast<std::ptrdiff_t>(skip), run.trace.end());
        f->state = std::move(run.final_state);
        if (descent_violations) *descent_violations = run.descent_violations;
    });
}

hk_status hk_flow_state(const hk_flow* f, double* t, double* energy, double* sup_q)
{
    return guard([&] {
        non_null(f, "flow");
        if (t) *t = f->state.t;
        if (energy) *energy = f->state.energy;
        if (sup_q) *sup_q = ym::curvature_sup(f->state.conn);
    });
}

hk_status hk_flow_trace_csv(const hk_flow* f, char** csv)
{
    return guard([&] {
        non_null(f, "flow");
        non_null(csv, "csv");
        *csv = dup(ym::energy_trace_csv(f->trace));
    });
}

hk_status hk_flow_write_snapshot(const hk_flow* f, const char* path)
{
    return guard([&] {
        non_null(f, "flow");
        non_null(path, "path");
        ym::write_flow_snapshot(path, f->state);
    });
}

hk_status hk_exit_times(const hk_mesh* m, const double y[3], double r, double dt, size_t n_paths, double horizon,
                        uint64_t seed, int threads, double* tau, int* censored)
{
    return guard([&] {
        non_null(tau, "tau");
        non_null(censored, "censored");
        const auto s = exit_sample(m, y, r, dt, n_paths, horizon, seed, threads);
        for (size_t i = 0; i < s.paths.size(); ++i) {
            tau[i] = s.paths[i].tau;
            censored[i] = s.paths[i].censored ? 1 : 0;
        }
    });
}

hk_status hk_exit_tail(const hk_mesh* m, const double y[3], double r, double dt, size_t n_paths, double horizon,
                       uint64_t seed, int threads, const double* kappas, size_t n_kappas, char** report_json)
{
    return guard([&] {
        non_null(kappas, "kappas");
        non_null(report_json, "report_json");
        const auto s = exit_sample(m, y, r, dt, n_paths, horizon, seed, threads);
        *report_json = dup(stochastic::tail_report_json(
            stochastic::exit_tail_estimate(s, std::vector<double>(kappas, kappas + n_kappas))));
    });
}

hk_status hk_experiment_ids(char** ids)
{
    return guard([&] {
        non_null(ids, "ids");
        std::string s;
        for (const auto& id : experiments::experiment_ids()) s += id + "\n";
        *ids = dup(s);
    });
}

hk_status hk_validate_config(const char* text, const char* experiment, char** resolved)
{
    return guard([&] {
        non_null(text, "text");
        const auto cfg = experiments::parse_config(text, experiment ? experiment : "");
        if (resolved) *resolved = dup(experiments::resolved_config_text(cfg));
    });
}

hk_status hk_run_experiment(const char* text, const char* experiment, const hk_run_options* opts, int* passed,
                            char** verdict_json)
{
    return guard([&] {
        non_null(text, "text");
        auto cfg = experiments::parse_config(text, experiment ? experiment : "");
        bool strict = false;
        if (opts) {
            if (opts->seed >= 0)
                for (size_t i = 0; i < cfg.seeds.size(); ++i)
                    cfg.seeds[i] = static_cast<std::uint64_t>(opts->seed) + i;
            if (opts->threads > 0) cfg.threads = opts->threads;
            if (opts->out_dir) cfg.out = opts->out_dir;
            strict = opts->strict != 0;
        }
        const auto v = experiments::run_experiment(cfg, strict);
        if (!cfg.out.empty()) experiments::write_outputs(v, cfg.out);
        if (passed) *passed = v.pass ? 1 : 0;
        if (verdict_json) *verdict_json = dup(experiments::verdict_json(v));
    });
}

hk_status hk_run_suite(const char* manifest_path, const char* out_root, int threads, int* passed,
                       char** summary_json)
{
    return guard([&] {
        non_null(manifest_path, "manifest_path");
        non_null(out_root, "out_root");
        const auto s = experiments::run_suite(experiments::read_manifest(manifest_path), out_root,
                                              threads > 0 ? threads : 1);
        if (passed) *passed = s.pass ? 1 : 0;
        if (summary_json) *summary_json = dup(experiments::suite_summary_json(s));
    });
}

} // extern "C"
