// SPDX-License-Identifier: Apache-2.0
//
// riscest: rank-one matrix-factorization channel estimation for RIS-aided MIMO
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

// Command-line front end.
//
//   riscest single-user [--config f] [--out f] [--format csv|json] [--seed s] [--trials n] [--threads n]
//   riscest multi-user  ...same flags...
//   riscest overhead    [--config f] [--out f] [--format csv|json]
//   riscest verify      [--criterion i ...] [--threads n]
//
// Exit codes: 0 ok, 1 invalid spec or arguments, 2 I/O error, 3 acceptance failure.

#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <riscest/acceptance.hpp>
#include <riscest/riscest.hpp>

namespace
{

enum ExitCode
{
    exit_ok = 0,
    exit_invalid = 1,
    exit_io = 2,
    exit_acceptance = 3
};

struct Options
{
    std::string config;
    std::string out;
    std::string format = "csv";
    std::optional<std::uint64_t> seed;
    std::optional<riscest::Index> trials;
    unsigned threads = 1;
    std::vector<int> criteria;
};

// Defaults of each scenario when no config (or no field) overrides them.
nlohmann::json scenario_defaults(riscest::Scenario s)
{
    nlohmann::json j;
    j["scenario"] = std::string(riscest::to_string(s));
    if (s == riscest::Scenario::multi_user_uplink)
    {
        j["dims"] = {{"n_bs", 32}, {"m_ris", 50}, {"q_users", 5}, {"t_symbols", 5}, {"k_pilots", 50}};
        j["snr_grid_db"] = {10.0};
        j["k_grid"] = {50, 100, 200, 400};
        j["estimators"] = {"MF_UL"};
        j["schedule_kind"] = "dft";
    }
    return j;
}

riscest::ExperimentSpec build_spec(riscest::Scenario scenario, const Options& opt)
{
    nlohmann::json j = scenario_defaults(scenario);
    if (!opt.config.empty())
    {
        const std::string text = riscest::detail::read_text(opt.config);
        nlohmann::json user;
        try
        {
            user = nlohmann::json::parse(text);
        }
        catch (const nlohmann::json::exception& e)
        {
            throw riscest::ConfigError("'" + opt.config + "' is not valid JSON: " + e.what());
        }
        if (!user.is_object())
            throw riscest::ConfigError("'" + opt.config + "' must hold a JSON object");
        if (user.contains("scenario") && user["scenario"] != j["scenario"])
            throw riscest::ConfigError("config scenario " + user["scenario"].dump() + " does not match subcommand");
        j.merge_patch(user);
    }
    if (opt.seed)
        j["master_seed"] = *opt.seed;
    if (opt.trials)
        j["n_trials"] = *opt.trials;
    return riscest::spec_from_json(j);
}

void emit(const std::string& text, const std::string& out)
{
    if (out.empty() || out == "-")
        std::cout << text;
    else
        riscest::detail::write_text(out, text);
}

void print_summary(const std::vector<riscest::ResultRecord>& records)
{
    std::fprintf(stderr, "%-8s %8s %6s %6s %14s %10s\n", "est", "snr_db", "K", "ok", "mean_nmse", "mean_se");
    for (const auto& s : riscest::summarize(records))
        std::fprintf(stderr, "%-8s %8.2f %6ld %6ld %14.6g %10.4g\n", std::string(riscest::to_string(s.estimator)).c_str(),
                     s.snr_db, static_cast<long>(s.k), static_cast<long>(s.count), s.mean_nmse, s.mean_se);
}

int run_sweep_command(riscest::Scenario scenario, const Options& opt)
{
    const riscest::ExperimentSpec spec = build_spec(scenario, opt);
    const auto format = riscest::result_format_from_string(opt.format);
    const auto records = riscest::run_sweep(spec, opt.threads);
    if (opt.out.empty() || opt.out == "-")
        std::cout << (format == riscest::ResultFormat::csv ? riscest::to_csv(records)
                                                           : riscest::to_json_text(records));
    else
        riscest::write_results(records, opt.out, format, &spec);
    print_summary(records);
    return exit_ok;
}

int run_overhead(const Options& opt)
{
    const riscest::ExperimentSpec spec = build_spec(riscest::Scenario::overhead_table, opt);
    const auto format = riscest::result_format_from_string(opt.format);
    const auto rows = riscest::overhead_table(spec.dims);
    std::string text;
    if (format == riscest::ResultFormat::csv)
    {
        text = "estimator,minimal_pilots,runnable\n";
        for (const auto& r : rows)
            text += r.estimator + "," + std::to_string(r.minimal_pilots) + "," + (r.runnable ? "true" : "false") + "\n";
    }
    else
    {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : rows)
            arr.push_back({{"estimator", r.estimator}, {"minimal_pilots", r.minimal_pilots}, {"runnable", r.runnable}});
        text = arr.dump(2) + "\n";
    }
    emit(text, opt.out);
    return exit_ok;
}

int run_verify(const Options& opt)
{
    bool all_ok = true;
    for (const auto& c : riscest::acceptance::criteria())
    {
        if (!opt.criteria.empty() && std::find(opt.criteria.begin(), opt.criteria.end(), c.id) == opt.criteria.end())
            continue;
        const auto r = riscest::acceptance::run(c, opt.threads);
        std::cout << riscest::acceptance::format_line(r) << std::endl;
        all_ok &= r.passed;
    }
    return all_ok ? exit_ok : exit_acceptance;
}

void add_common(CLI::App* cmd, Options& opt, bool sweep)
{
    cmd->add_option("--config", opt.config, "JSON experiment spec");
    cmd->add_option("--out", opt.out, "Output path (stdout when omitted)");
    cmd->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    if (sweep)
    {
        cmd->add_option("--seed", opt.seed, "Master seed (overrides the config)");
        cmd->add_option("--trials", opt.trials, "Trials per grid point (overrides the config)")
            ->check(CLI::PositiveNumber);
        cmd->add_option("--threads", opt.threads, "Worker threads; 0 uses all cores. Never changes results");
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Rank-one channel estimation for RIS-aided MIMO: sweeps, overhead table, acceptance checks"};
    app.set_version_flag("--version", std::string(riscest::version));
    app.require_subcommand(1);
    Options opt;

    auto* single = app.add_subcommand("single-user", "Downlink NMSE / spectral efficiency sweep");
    add_common(single, opt, true);
    auto* multi = app.add_subcommand("multi-user", "Uplink multi-user NMSE sweep");
    add_common(multi, opt, true);
    auto* overhead = app.add_subcommand("overhead", "Minimal pilot counts per estimator");
    add_common(overhead, opt, false);
    auto* verify = app.add_subcommand("verify", "Run the acceptance checks");
    verify->add_option("--criterion", opt.criteria, "Criterion number(s); all when omitted")->check(CLI::Range(1, 11));
    verify->add_option("--threads", opt.threads, "Worker threads for the Monte Carlo checks");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e)
    {
        const int rc = app.exit(e);
        return rc == 0 ? exit_ok : exit_invalid;
    }

    try
    {
        if (*single)
            return run_sweep_command(riscest::Scenario::single_user_downlink, opt);
        if (*multi)
            return run_sweep_command(riscest::Scenario::multi_user_uplink, opt);
        if (*overhead)
            return run_overhead(opt);
        return run_verify(opt);
    }
    catch (const riscest::IoError& e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return exit_io;
    }
    catch (const riscest::ConfigError& e)
    {
        std::cerr << "invalid spec: " << e.what() << "\n";
        return exit_invalid;
    }
    catch (const riscest::Error& e)
    {
        std::cerr << "invalid spec: " << e.what() << "\n";
        return exit_invalid;
    }
}
