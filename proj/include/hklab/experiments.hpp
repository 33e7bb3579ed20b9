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
#pragma once

#include <hklab/geometry.hpp>
#include <hklab/yang_mills.hpp>

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hklab::experiments {

/// Experiment ids accepted by run_experiment, in suite order.
const std::vector<std::string>& experiment_ids();

struct ExperimentConfig
{
    std::string experiment;
    /// cylinder | slab | disk | halfline
    std::string manifold = "cylinder";
    double length = 1.0;
    std::vector<double> periods{1.0, 1.0};
    double radius = 1.0;
    /// Grid count per axis (radial count on the disk); several entries run a refinement study.
    std::vector<int> resolutions{32};
    /// Disk angular count; 0 selects 4 * radial count.
    int angular = 0;
    double t_min = 0.01;
    double t_max = 1.0;
    int t_count = 10;
    /// Time of the heat kernel paired with flow snapshots.
    double t_kernel = 0.05;
    std::vector<std::uint64_t> seeds{1};
    std::vector<ym::Group> groups{ym::Group::SU2};
    std::vector<ym::BoundaryMode> bcs{ym::BoundaryMode::Absolute};
    /// smooth | random
    std::string init = "smooth";
    double amplitude = 1.0;
    int steps = 50;
    /// When positive, the flow runs ceil(flow_time / dt) steps and ignores `steps`.
    double flow_time = 0.0;
    std::uint64_t paths = 10000;
    /// Walker step and exit horizon in units of r^2.
    double dt_factor = 1e-3;
    double horizon = 0.6;
    std::vector<double> radii{0.1, 0.2, 0.3};
    std::vector<double> kappas{0.05, 0.075, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5};
    /// Boundary angles of the exit-time start points on the disk.
    std::vector<double> angles{0.0};
    /// Random form pairs (int-parts) or random centres (dist-lemma).
    int samples = 10;
    double tol = 0.0;
    /// Relative tolerance of the monotonicity-formula identities.
    double monot_tol = 1e-2;
    double min_order = 0.0;
    double stability = 0.0;
    int threads = 1;
    std::string out;
};

/// Defaults for one experiment id (the sizes used by the acceptance run).
ExperimentConfig default_config(const std::string& id);

/// Parses `key = value` lines ('#' starts a comment, lists are comma separated) over the
/// defaults of the named experiment. Unknown or repeated keys are rejected with the line number.
/// `fallback_id` is used when the text has no `experiment` key.
ExperimentConfig parse_config(const std::string& text, const std::string& fallback_id = "");
ExperimentConfig load_config(const std::string& path, const std::string& fallback_id = "");

/// Every key with its resolved value; parse_config(resolved_config_text(c)) == c.
std::string resolved_config_text(const ExperimentConfig& cfg);

struct Verdict
{
    std::string experiment;
    std::string anchor;
    bool pass = false;
    std::vector<std::pair<std::string, double>> margins;
    std::vector<std::pair<std::string, double>> constants;
    std::vector<std::pair<std::string, double>> standard_errors;
    std::vector<std::string> notes;
    /// Conditions that weaken the evidence (e.g. heavy censoring); fatal under strict runs.
    std::vector<std::string> warnings;
    std::string csv;
    std::string plot;
    std::string resolved_config;
    double runtime_seconds = 0.0;

    /// First margin/constant/SE with this name; throws if absent.
    double value(const std::string& name) const;
};

constexpr int kVerdictSchemaVersion = 1;

/// With strict set, any warning turns the verdict into a failure.
Verdict run_experiment(const ExperimentConfig& cfg, bool strict = false);
std::string verdict_json(const Verdict& v);

/// Writes verdict.json, data.csv, plot.gp and resolved.cfg into dir (created if missing).
void write_outputs(const Verdict& v, const std::string& dir);

struct SuiteEntry
{
    std::string config_path;
    std::string experiment;
    std::string anchor;
    std::string out_dir;
    bool pass = false;
    std::string error;
};

struct SuiteSummary
{
    std::vector<SuiteEntry> entries;
    bool pass = true;
};

/// Manifest: one config path per line, relative to the manifest's directory; '#' comments.
std::vector<std::string> read_manifest(const std::string& path);

/// Runs the configs concurrently (`threads` at a time), each into out_root/<index>-<id>.
SuiteSummary run_suite(const std::vector<std::string>& config_paths, const std::string& out_root, int threads = 1);
std::string suite_summary_json(const SuiteSummary& s);

} // namespace hklab::experiments
