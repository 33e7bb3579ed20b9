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
// Command-line runner. Talks to the library only through the C API.

#include <hklab/hklab.h>

#include "CLI11.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace {

enum Exit { kPass = 0, kFail = 1, kUsage = 2, kError = 3 };

struct CString
{
    char* p = nullptr;
    ~CString() { hk_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

int report(hk_status s)
{
    std::cerr << "hklab: " << hk_last_error() << "\n";
    return s == HK_INVALID_ARGUMENT ? kUsage : kError;
}

std::vector<std::string> experiment_ids()
{
    CString ids;
    if (hk_experiment_ids(&ids.p) != HK_OK) return {};
    std::vector<std::string> out;
    std::istringstream in(ids.str());
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(line);
    return out;
}

bool read_file(const std::string& path, std::string& text)
{
    std::ifstream in(path);
    if (!in) return false;
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
    return true;
}

std::string output_root()
{
    const char* env = std::getenv("HKLAB_OUTPUT_ROOT");
    return env && *env ? env : "hklab-out";
}

std::string resolved_value(const std::string& resolved, const std::string& key)
{
    std::istringstream in(resolved);
    const std::string prefix = key + " = ";
    for (std::string line; std::getline(in, line);)
        if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
    return "";
}

struct RunArgs
{
    std::string config;
    std::string out;
    long long seed = -1;
    int threads = 0;
    bool strict = false;
};

int run_one(const std::string& id, const RunArgs& a)
{
    std::string text;
    if (!a.config.empty() && !read_file(a.config, text)) {
        std::cerr << "hklab: cannot read config '" << a.config << "'\n";
        return kUsage;
    }
    CString resolved;
    if (const auto s = hk_validate_config(text.c_str(), id.c_str(), &resolved.p); s != HK_OK) return report(s);
    std::string out = a.out;
    if (out.empty()) out = resolved_value(resolved.str(), "out");
    if (out.empty()) out = output_root() + "/" + id;

    hk_run_options opts{out.c_str(), a.seed, a.threads, a.strict ? 1 : 0};
    int passed = 0;
    CString verdict;
    if (const auto s = hk_run_experiment(text.c_str(), id.c_str(), &opts, &passed, &verdict.p); s != HK_OK)
        return report(s);
    std::cout << verdict.str();
    std::cerr << id << ": " << (passed ? "PASS" : "FAIL") << " (" << out << ")\n";
    return passed ? kPass : kFail;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"hklab: heat kernel, Yang-Mills flow and reflecting Brownian motion experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(hk_version()));

    RunArgs args;
    std::string chosen;
    for (const auto& id : experiment_ids()) {
        auto* sub = app.add_subcommand(id, "run the " + id + " experiment");
        sub->add_option("--config", args.config, "experiment config (key = value lines)")->check(CLI::ExistingFile);
        sub->add_option("--out", args.out, "output directory (default: config 'out', then $HKLAB_OUTPUT_ROOT/<id>)");
        sub->add_option("--seed", args.seed, "first seed; replaces the config's seed list")->check(CLI::NonNegativeNumber);
        sub->add_option("--threads", args.threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("--strict", args.strict, "treat warnings as failures");
        sub->callback([&chosen, id] { chosen = id; });
    }

    std::string manifest;
    std::string suite_out;
    int suite_threads = 1;
    auto* suite = app.add_subcommand("suite", "run every config listed in a manifest");
    suite->add_option("--manifest", manifest, "manifest file, one config path per line")->required()->check(CLI::ExistingFile);
    suite->add_option("--out", suite_out, "output root (default: $HKLAB_OUTPUT_ROOT)");
    suite->add_option("--threads", suite_threads, "configs run concurrently")->check(CLI::PositiveNumber);

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check a config and print it fully resolved");
    validate->add_option("--config", validate_path, "experiment config")->required()->check(CLI::ExistingFile);

    app.add_subcommand("list", "print the experiment ids");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }

    if (app.got_subcommand("list")) {
        for (const auto& id : experiment_ids()) std::cout << id << "\n";
        return kPass;
    }
    if (app.got_subcommand(validate)) {
        std::string text;
        read_file(validate_path, text);
        CString resolved;
        if (const auto s = hk_validate_config(text.c_str(), nullptr, &resolved.p); s != HK_OK) return report(s);
        std::cout << resolved.str();
        return kPass;
    }
    if (app.got_subcommand(suite)) {
        const std::string root = suite_out.empty() ? output_root() : suite_out;
        int passed = 0;
        CString summary;
        if (const auto s = hk_run_suite(manifest.c_str(), root.c_str(), suite_threads, &passed, &summary.p); s != HK_OK)
            return report(s);
        std::cout << summary.str();
        return passed ? kPass : kFail;
    }
    return run_one(chosen, args);
}
