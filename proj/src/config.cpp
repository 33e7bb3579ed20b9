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

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace hklab::experiments {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

double to_double(const std::string& s)
{
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || *end != '\0' || errno == ERANGE) fail(ErrorCode::InvalidArgument, "not a number: '" + s + "'");
    return v;
}

long long to_integer(const std::string& s)
{
    errno = 0;
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (s.empty() || *end != '\0' || errno == ERANGE) fail(ErrorCode::InvalidArgument, "not an integer: '" + s + "'");
    return v;
}

std::string fmt(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& v, F f)
{
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + f(v[i]);
    return out;
}

template <class T, class F>
std::vector<T> parse_list(const std::string& s, F f)
{
    std::vector<T> out;
    for (const auto& item : split_list(s)) out.push_back(f(item));
    if (out.empty()) fail(ErrorCode::InvalidArgument, "empty list");
    return out;
}

struct Key
{
    const char* name;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

int positive_int(const std::string& s)
{
    const long long v = to_integer(s);
    if (v <= 0 || v > 1 << 30) fail(ErrorCode::InvalidArgument, "expected a positive integer, got '" + s + "'");
    return static_cast<int>(v);
}

double positive(const std::string& s)
{
    const double v = to_double(s);
    if (!(v > 0.0)) fail(ErrorCode::InvalidArgument, "expected a positive number, got '" + s + "'");
    return v;
}

double nonnegative(const std::string& s)
{
    const double v = to_double(s);
    if (!(v >= 0.0)) fail(ErrorCode::InvalidArgument, "expected a nonnegative number, got '" + s + "'");
    return v;
}

std::uint64_t seed_value(const std::string& s)
{
    const long long v = to_integer(s);
    if (v < 0) fail(ErrorCode::InvalidArgument, "seeds must be nonnegative");
    return static_cast<std::uint64_t>(v);
}

const std::vector<Key>& keys()
{
    static const std::vector<Key> table = {
        {"experiment", [](ExperimentConfig& c, const std::string& v) { c.experiment = v; },
         [](const ExperimentConfig& c) { return c.experiment; }},
        {"manifold",
         [](ExperimentConfig& c, const std::string& v) {
             if (v != "cylinder" && v != "slab" && v != "disk" && v != "halfline")
                 fail(ErrorCode::InvalidArgument, "manifold must be cylinder, slab, disk or halfline");
             c.manifold = v;
         },
         [](const ExperimentConfig& c) { return c.manifold; }},
        {"length", [](ExperimentConfig& c, const std::string& v) { c.length = positive(v); },
         [](const ExperimentConfig& c) { return fmt(c.length); }},
        {"periods",
         [](ExperimentConfig& c, const std::string& v) {
             c.periods = parse_list<double>(v, positive);
             if (c.periods.size() != 2) fail(ErrorCode::InvalidArgument, "periods takes two values");
         },
         [](const ExperimentConfig& c) { return join(c.periods, fmt); }},
        {"radius", [](ExperimentConfig& c, const std::string& v) { c.radius = positive(v); },
         [](const ExperimentConfig& c) { return fmt(c.radius); }},
        {"resolutions", [](ExperimentConfig& c, const std::string& v) { c.resolutions = parse_list<int>(v, positive_int); },
         [](const ExperimentConfig& c) { return join(c.resolutions, [](int x) { return std::to_string(x); }); }},
        {"angular",
         [](ExperimentConfig& c, const std::string& v) {
             const long long a = to_integer(v);
             if (a < 0 || a > 1 << 20) fail(ErrorCode::InvalidArgument, "angular must be 0 or a positive count");
             c.angular = static_cast<int>(a);
         },
         [](const ExperimentConfig& c) { return std::to_string(c.angular); }},
        {"t_min", [](ExperimentConfig& c, const std::string& v) { c.t_min = positive(v); },
         [](const ExperimentConfig& c) { return fmt(c.t_min); }},
        {"t_max", [](ExperimentConfig& c, const std::string& v) { c.t_max = positive(v); },
         [](const ExperimentConfig& c) { return fmt(c.t_max); }},
        {"t_count", [](ExperimentConfig& c, const std::string& v) { c.t_count = positive_int(v); },
         [](const ExperimentConfig& c) { return std::to_string(c.t_count); }},
        {"t_kernel", [](ExperimentConfig& c, const std::string& v) { c.t_kernel = positive(v); },
         [](const ExperimentConfig& c) { return fmt(c.t_kernel); }},
        {"seeds", [](ExperimentConfig& c, const std::string& v) { c.seeds = parse_list<std::uint64_t>(v, seed_value); },
         [](const ExperimentConfig& c) { return join(c.seeds, [](std::uint64_t x) { return std::to_string(x); }); }},
        {"groups", [](ExperimentConfig& c, const std::string& v) { c.groups = parse_list<ym::Group>(v, ym::group_from_string); },
         [](const ExperimentConfig& c) { return join(c.groups, [](ym::Group g) { return ym::to_string(g); }); }},
        {"bc", [](ExperimentConfig& c, const std::string& v) { c.bcs = parse_list<ym::BoundaryMode>(v, ym::mode_from_string); },
         [](const ExperimentConfig& c) { return join(c.bcs, [](ym::BoundaryMode m) { return ym::to_string(m); }); }},
        {"init",
         [](ExperimentConfig& c, const std::string& v) {
             if (v != "smooth" && v != "random") fail(ErrorCode::InvalidArgument, "init must be smooth or random");
             c.init = v;
         },
         [](const ExperimentConfig& c) { return c.init; }},
        {"amplitude", [](ExperimentConfig& c, const std::string& v) { c.amplitude = nonnegative(v); },
         [](const ExperimentConfig& c) { return fmt(c.amplitude); }},
        {"steps", [](ExperimentConfig& c, const std::string& v) { c.steps = positive_int(v); },
         [](const ExperimentConfig& c) { return std::to_string(c.steps); }},
        {"flow_time", [](ExperimentConfig& c, const std::string& v) { c.flow_time = nonnegative(v); },
         [](const ExperimentConfig& c) { return fmt(c.flow_time); }},
        {"paths",
         [](ExperimentConfig& c, const std::string& v) {
             const long long n = to_integer(v);
             if (n <= 0) fail(ErrorCode::InvalidArgument, "paths must be positive");
             c.paths = static_cast<std::uint64_t>(n);
         },
         [](const ExperimentConfig& c) { return std::to_string(c.paths); }},
        {"dt_factor", [](ExperimentConfig& c, const std::string& v) { c.dt_factor = positive(v); },
         [](const ExperimentConfig& c) { return fmt(c.dt_factor); }},
        {"horizon", [](ExperimentConfig& c, const std::string& v) { c.horizon = positive(v); },
         [](const ExperimentConfig& c) { return fmt(c.horizon); }},
        {"radii", [](ExperimentConfig& c, const std::string& v) { c.radii = parse_list<double>(v, positive); },
         [](const ExperimentConfig& c) { return join(c.radii, fmt); }},
        {"kappas", [](ExperimentConfig& c, const std::string& v) { c.kappas = parse_list<double>(v, positive); },
         [](const ExperimentConfig& c) { return join(c.kappas, fmt); }},
        {"angles", [](ExperimentConfig& c, const std::string& v) { c.angles = parse_list<double>(v, to_double); },
         [](const ExperimentConfig& c) { return join(c.angles, fmt); }},
        {"samples", [](ExperimentConfig& c, const std::string& v) { c.samples = positive_int(v); },
         [](const ExperimentConfig& c) { return std::to_string(c.samples); }},
        {"tol", [](ExperimentConfig& c, const std::string& v) { c.tol = nonnegative(v); },
         [](const ExperimentConfig& c) { return fmt(c.tol); }},
        {"monot_tol", [](ExperimentConfig& c, const std::string& v) { c.monot_tol = nonnegative(v); },
         [](const ExperimentConfig& c) { return fmt(c.monot_tol); }},
        {"min_order", [](ExperimentConfig& c, const std::string& v) { c.min_order = nonnegative(v); },
         [](const ExperimentConfig& c) { return fmt(c.min_order); }},
        {"stability", [](ExperimentConfig& c, const std::string& v) { c.stability = nonnegative(v); },
         [](const ExperimentConfig& c) { return fmt(c.stability); }},
        {"threads", [](ExperimentConfig& c, const std::string& v) { c.threads = positive_int(v); },
         [](const ExperimentConfig& c) { return std::to_string(c.threads); }},
        {"out", [](ExperimentConfig& c, const std::string& v) { c.out = v; },
         [](const ExperimentConfig& c) { return c.out; }},
    };
    return table;
}

const Key* find_key(const std::string& name)
{
    for (const auto& k : keys())
        if (name == k.name) return &k;
    return nullptr;
}

std::vector<std::uint64_t> seed_range(std::uint64_t first, std::uint64_t count)
{
    std::vector<std::uint64_t> s;
    for (std::uint64_t i = 0; i < count; ++i) s.push_back(first + i);
    return s;
}

} // namespace

const std::vector<std::string>& experiment_ids()
{
    static const std::vector<std::string> ids = {"lyh-sharp",    "lyh-fit",   "doubling",     "kernel-decay", "ym-flow",
                                                 "boundary-sign", "int-parts", "zeta",         "monotonicity", "bochner",
                                                 "exit-tail",    "dist-lemma", "rbm-kernel"};
    return ids;
}

ExperimentConfig default_config(const std::string& id)
{
    ExperimentConfig c;
    c.experiment = id;
    using ym::BoundaryMode;
    using ym::Group;
    if (id == "lyh-sharp") {
        c.resolutions = {32, 64};
        c.min_order = 1.8;
    } else if (id == "lyh-fit") {
        c.t_count = 8;
        c.tol = 0.05;
        c.stability = 1e-3;
    } else if (id == "doubling") {
        c.t_count = 3;
        c.seeds = seed_range(1, 10);
        c.tol = 1e-8;
    } else if (id == "kernel-decay") {
        c.resolutions = {64};
        c.t_max = 0.05;
        c.tol = 0.1;
    } else if (id == "ym-flow" || id == "zeta" || id == "monotonicity") {
        c.seeds = seed_range(1, 20);
        c.groups = {Group::U1, Group::SU2};
        c.bcs = {BoundaryMode::Relative, BoundaryMode::Absolute};
        c.init = "random";
        c.amplitude = 0.785;
        c.t_count = 20;
        c.tol = id == "ym-flow" ? 1e-12 : 1.0;
        c.stability = 0.2;
    } else if (id == "boundary-sign") {
        c.manifold = "disk";
        c.resolutions = {16, 32};
        c.angular = 64;
        c.groups = {Group::U1, Group::SU2};
        c.amplitude = 3.0;
        c.flow_time = 0.002;
        c.seeds = {5};
        c.stability = 0.25;
    } else if (id == "int-parts") {
        c.manifold = "slab";
        c.resolutions = {12, 16};
        c.groups = {Group::U1, Group::SU2};
        c.seeds = {7};
        c.flow_time = 0.005;
        c.samples = 50;
        c.tol = 1e-10;
        c.min_order = 1.0;
    } else if (id == "bochner") {
        c.resolutions = {16, 32};
        c.groups = {Group::U1, Group::SU2};
        c.amplitude = 2.0;
        c.flow_time = 0.002;
        c.seeds = {3};
        c.stability = 0.25;
    } else if (id == "exit-tail") {
        c.manifold = "disk";
        c.resolutions = {16};
        c.paths = 1000000;
        c.angles = {0.0, 2.0943951023931957};
        c.stability = 0.15;
        c.tol = 3.0;
    } else if (id == "dist-lemma") {
        c.manifold = "disk";
        c.resolutions = {32, 64};
        c.radii = {0.6};
        c.seeds = {5};
        c.tol = 1e-3;
        c.min_order = 1.8;
    } else if (id == "rbm-kernel") {
        c.resolutions = {64};
        c.seeds = seed_range(1, 5);
        c.groups = {Group::SU2, Group::U1};
        c.amplitude = 2.0;
        c.steps = 400;
        c.paths = 40000;
        c.tol = 0.01;
    } else {
        fail(ErrorCode::InvalidArgument, "unknown experiment '" + id + "'");
    }
    return c;
}

ExperimentConfig parse_config(const std::string& text, const std::string& fallback_id)
{
    struct Line
    {
        int number;
        std::string key;
        std::string value;
    };
    std::vector<Line> lines;
    std::set<std::string> seen;
    std::string id = fallback_id;
    std::istringstream in(text);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        const std::string line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        const std::string where = "line " + std::to_string(number);
        if (eq == std::string::npos) fail(ErrorCode::InvalidArgument, where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!find_key(key)) fail(ErrorCode::InvalidArgument, where + ": unknown key '" + key + "'");
        if (!seen.insert(key).second) fail(ErrorCode::InvalidArgument, where + ": repeated key '" + key + "'");
        if (key == "experiment") {
            if (!fallback_id.empty() && value != fallback_id)
                fail(ErrorCode::InvalidArgument,
                     where + ": config is for '" + value + "' but '" + fallback_id + "' was requested");
            id = value;
        }
        lines.push_back({number, key, value});
    }
    if (id.empty()) fail(ErrorCode::InvalidArgument, "config names no experiment (key 'experiment')");
    ExperimentConfig cfg;
    try {
        cfg = default_config(id);
    } catch (const Error& e) {
        fail(ErrorCode::InvalidArgument, std::string("key 'experiment': ") + e.what());
    }
    for (const auto& l : lines) {
        try {
            find_key(l.key)->set(cfg, l.value);
        } catch (const Error& e) {
            fail(ErrorCode::InvalidArgument,
                 "line " + std::to_string(l.number) + ": key '" + l.key + "': " + e.what());
        }
    }
    if (cfg.t_min > cfg.t_max) fail(ErrorCode::InvalidArgument, "key 't_min': exceeds t_max");
    return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::string& fallback_id)
{
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot read config '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), fallback_id);
}

std::string resolved_config_text(const ExperimentConfig& cfg)
{
    std::string out;
    for (const auto& k : keys()) out += std::string(k.name) + " = " + k.get(cfg) + "\n";
    return out;
}

} // namespace hklab::experiments
