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
#ifndef HKLAB_H
#define HKLAB_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define HK_API __declspec(dllexport)
#else
#define HK_API __attribute__((visibility("default")))
#endif

typedef enum hk_status {
    HK_OK = 0,
    HK_INVALID_ARGUMENT = 1,
    HK_DOMAIN_ERROR = 2,
    HK_NUMERICAL_ERROR = 3,
    HK_IO_ERROR = 4,
    HK_CHECK_FAILED = 5,
    HK_INTERNAL_ERROR = 6
} hk_status;

typedef enum hk_scheme { HK_CRANK_NICOLSON = 0, HK_BACKWARD_EULER = 1, HK_EXPONENTIAL = 2 } hk_scheme;
typedef enum hk_group { HK_U1 = 0, HK_SU2 = 1 } hk_group;
typedef enum hk_bc { HK_RELATIVE = 0, HK_ABSOLUTE = 1 } hk_bc;
/* HK_KERNEL_RBM: transition density of reflecting Brownian motion (generator Laplacian / 2).
   HK_KERNEL_HEAT: fundamental solution of d/dt = Laplacian, the convention of the LYH checks. */
typedef enum hk_kernel { HK_KERNEL_RBM = 0, HK_KERNEL_HEAT = 1 } hk_kernel;

typedef struct hk_mesh hk_mesh;
typedef struct hk_field hk_field;
typedef struct hk_flow hk_flow;

/* Strings returned through char** are owned by the caller and released with hk_string_free. */
HK_API const char* hk_version(void);
/* Message of the last failed call on this thread; empty after a successful call. */
HK_API const char* hk_last_error(void);
HK_API void hk_string_free(char* s);

/* ---- meshes ---- */
HK_API hk_status hk_mesh_cylinder(double length, double circumference, int nx, int ny, hk_mesh** out);
HK_API hk_status hk_mesh_slab(double length, double l1, double l2, int nx, int ny, int nz, hk_mesh** out);
HK_API hk_status hk_mesh_disk(double radius, int nr, int na, hk_mesh** out);
HK_API void hk_mesh_free(hk_mesh* m);
HK_API hk_status hk_mesh_info(const hk_mesh* m, int* dim, size_t* vertices, size_t* boundary_vertices);
/* xyz receives 3 * vertices coordinates. */
HK_API hk_status hk_mesh_points(const hk_mesh* m, double* xyz);
HK_API hk_status hk_mesh_to_json(const hk_mesh* m, char** json);

/* ---- Neumann heat flow ---- */
/* dt <= 0 selects the default step; ignored by HK_EXPONENTIAL. */
HK_API hk_status hk_heat_solve(const hk_mesh* m, const double* initial, const double* times, size_t n_times,
                               hk_scheme scheme, double dt, hk_field** out);
/* Neumann heat kernel with source vertex y. */
HK_API hk_status hk_heat_kernel(const hk_mesh* m, size_t y, const double* times, size_t n_times, hk_kernel convention,
                                hk_scheme scheme, hk_field** out);
HK_API void hk_field_free(hk_field* f);
HK_API hk_status hk_field_size(const hk_field* f, size_t* n_times, size_t* vertices);
HK_API hk_status hk_field_time(const hk_field* f, size_t k, double* t);
HK_API hk_status hk_field_values(const hk_field* f, size_t k, double* out);
HK_API hk_status hk_field_write(const hk_field* f, const char* path);
HK_API hk_status hk_field_read(const char* path, hk_field** out);

/* Sharp Li-Yau-Hamilton check of a positive solution; tol_disc < 0 calibrates it from a kernel at y_calib. */
HK_API hk_status hk_lyh_check(const hk_mesh* m, const hk_field* f, double tol_disc, size_t y_calib, int* passed,
                              char** report_json);

/* ---- Yang-Mills flow ---- */
HK_API hk_status hk_flow_create(const hk_mesh* m, hk_group group, hk_bc bc, int smooth, double amplitude,
                                uint64_t seed, hk_flow** out);
HK_API void hk_flow_free(hk_flow* f);
/* Appends steps to the trace; dt <= 0 selects the default step. */
HK_API hk_status hk_flow_run(hk_flow* f, int steps, double dt, int* descent_violations);
HK_API hk_status hk_flow_state(const hk_flow* f, double* t, double* energy, double* sup_q);
HK_API hk_status hk_flow_trace_csv(const hk_flow* f, char** csv);
HK_API hk_status hk_flow_write_snapshot(const hk_flow* f, const char* path);

/* ---- reflecting Brownian motion ---- */
/* m == NULL samples the half-line [0, inf). tau and censored receive n_paths entries each. */
HK_API hk_status hk_exit_times(const hk_mesh* m, const double y[3], double r, double dt, size_t n_paths,
                               double horizon, uint64_t seed, int threads, double* tau, int* censored);
HK_API hk_status hk_exit_tail(const hk_mesh* m, const double y[3], double r, double dt, size_t n_paths,
                              double horizon, uint64_t seed, int threads, const double* kappas, size_t n_kappas,
                              char** report_json);

/* ---- experiments ---- */
typedef struct hk_run_options {
    /* Output directory; NULL uses the config's `out` key, and nothing is written when both are empty. */
    const char* out_dir;
    /* Replaces the seed list by seed, seed + 1, ... when >= 0. */
    int64_t seed;
    /* Overrides the config's worker count when > 0. */
    int threads;
    /* Warnings fail the verdict. */
    int strict;
} hk_run_options;

/* Newline-separated experiment ids. */
HK_API hk_status hk_experiment_ids(char** ids);
/* experiment may be NULL when the text names one. resolved receives the full resolved config. */
HK_API hk_status hk_validate_config(const char* text, const char* experiment, char** resolved);
HK_API hk_status hk_run_experiment(const char* text, const char* experiment, const hk_run_options* opts,
                                   int* passed, char** verdict_json);
HK_API hk_status hk_run_suite(const char* manifest_path, const char* out_root, int threads, int* passed,
                              char** summary_json);

#ifdef __cplusplus
}
#endif

#endif
