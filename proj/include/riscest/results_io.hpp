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

///
/// \file results_io.hpp
///
/// CSV / JSON persistence of sweep results and JSON experiment specs.
///
/// CSV header (exact):
///   scenario,estimator,snr_db,k,trial,seed,nmse,se,wall_time_ms
///
/// Floats are written in shortest round-trip decimal form. The nmse cell is
/// a number, empty (metric not applicable), `infeasible` or `failed`;
/// snr_db is `inf` for noiseless sweeps. JSON output is an array of objects
/// with the same field names, using null for empty cells.
///
#ifndef RISCEST_RESULTS_IO_HPP
#define RISCEST_RESULTS_IO_HPP

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "experiments.hpp"
#include "types.hpp"

namespace riscest
{

/// File could not be opened, written or parsed.
class IoError : public Error
{
  public:
    using Error::Error;
};

enum class ResultFormat
{
    csv,
    json
};

inline ResultFormat result_format_from_string(std::string_view s)
{
    if (s == "csv")
        return ResultFormat::csv;
    if (s == "json")
        return ResultFormat::json;
    throw ConfigError("unknown format '" + std::string(s) + "' (expected csv or json)");
}

inline constexpr std::string_view csv_header = "scenario,estimator,snr_db,k,trial,seed,nmse,se,wall_time_ms";

namespace detail
{
inline std::string format_double(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s)
{
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw IoError("cannot parse number '" + std::string(s) + "'");
    return v;
}

template <class Int>
Int parse_int(std::string_view s)
{
    Int v{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw IoError("cannot parse integer '" + std::string(s) + "'");
    return v;
}

inline void check_finite(const ResultRecord& r)
{
    auto bad = [](const std::optional<double>& v) { return v && !std::isfinite(*v); };
    if (bad(r.nmse) || bad(r.se) || !std::isfinite(r.wall_time_ms) || (r.nmse && *r.nmse < 0.0))
        throw ConfigError("write_results: record (" + std::string(to_string(r.estimator)) + ", trial " +
                          std::to_string(r.trial) + ") has a non-finite or negative metric");
}

inline std::string nmse_cell(const ResultRecord& r)
{
    switch (r.status)
    {
    case RecordStatus::infeasible: return "infeasible";
    case RecordStatus::failed: return "failed";
    case RecordStatus::ok: break;
    }
    return r.nmse ? format_double(*r.nmse) : std::string{};
}

inline std::vector<std::string_view> split_csv_line(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;)
    {
        const std::size_t pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open '" + path.string() + "' for writing");
    f << text;
    f.flush();
    if (!f)
        throw IoError("write to '" + path.string() + "' failed");
}

inline std::string read_text(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}
} // namespace detail

// ----- CSV ---------------------------------------------------------------------

inline std::string to_csv(const std::vector<ResultRecord>& records)
{
    std::string out(csv_header);
    out += '\n';
    for (const auto& r : records)
    {
        detail::check_finite(r);
        out += to_string(r.scenario);
        out += ',';
        out += to_string(r.estimator);
        out += ',' + detail::format_double(r.snr_db);
        out += ',' + std::to_string(r.k);
        out += ',' + std::to_string(r.trial);
        out += ',' + std::to_string(r.seed);
        out += ',' + detail::nmse_cell(r);
        out += ',' + (r.se ? detail::format_double(*r.se) : std::string{});
        out += ',' + detail::format_double(r.wall_time_ms);
        out += '\n';
    }
    return out;
}

inline std::vector<ResultRecord> from_csv(std::string_view text)
{
    std::vector<ResultRecord> out;
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size())
    {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (header)
        {
            if (line != csv_header)
                throw IoError("unexpected CSV header '" + std::string(line) + "'");
            header = false;
            continue;
        }
        if (line.empty())
            continue;
        const auto f = detail::split_csv_line(line);
        if (f.size() != 9)
            throw IoError("CSV row has " + std::to_string(f.size()) + " fields, expected 9");
        ResultRecord r;
        r.scenario = scenario_from_string(f[0]);
        r.estimator = estimator_from_string(f[1]);
        r.snr_db = detail::parse_double(f[2]);
        r.k = detail::parse_int<Index>(f[3]);
        r.trial = detail::parse_int<Index>(f[4]);
        r.seed = detail::parse_int<std::uint64_t>(f[5]);
        if (f[6] == "infeasible")
            r.status = RecordStatus::infeasible;
        else if (f[6] == "failed")
            r.status = RecordStatus::failed;
        else if (!f[6].empty())
            r.nmse = detail::parse_double(f[6]);
        if (!f[7].empty())
            r.se = detail::parse_double(f[7]);
        r.wall_time_ms = detail::parse_double(f[8]);
        out.push_back(r);
    }
    if (header)
        throw IoError("CSV input is empty (missing header)");
    return out;
}

// ----- JSON -------------------------------------------------------------------------

inline nlohmann::json to_json(const ResultRecord& r)
{
    detail::check_finite(r);
    nlohmann::json j;
    j["scenario"] = to_string(r.scenario);
    j["estimator"] = to_string(r.estimator);
    if (std::isfinite(r.snr_db))
        j["snr_db"] = r.snr_db;
    else
        j["snr_db"] = detail::format_double(r.snr_db);
    j["k"] = r.k;
    j["trial"] = r.trial;
    j["seed"] = r.seed;
    if (r.status != RecordStatus::ok)
        j["nmse"] = detail::nmse_cell(r);
    else if (r.nmse)
        j["nmse"] = *r.nmse;
    else
        j["nmse"] = nullptr;
    j["se"] = r.se ? nlohmann::json(*r.se) : nlohmann::json(nullptr);
    j["wall_time_ms"] = r.wall_time_ms;
    return j;
}

inline ResultRecord record_from_json(const nlohmann::json& j)
{
    try
    {
        ResultRecord r;
        r.scenario = scenario_from_string(j.at("scenario").get<std::string>());
        r.estimator = estimator_from_string(j.at("estimator").get<std::string>());
        const auto& snr = j.at("snr_db");
        r.snr_db = snr.is_string() ? detail::parse_double(snr.get<std::string>()) : snr.get<double>();
        r.k = j.at("k").get<Index>();
        r.trial = j.at("trial").get<Index>();
        r.seed = j.at("seed").get<std::uint64_t>();
        const auto& nm = j.at("nmse");
        if (nm.is_string())
        {
            const auto s = nm.get<std::string>();
            if (s == "infeasible")
                r.status = RecordStatus::infeasible;
            else if (s == "failed")
                r.status = RecordStatus::failed;
            else
                throw IoError("unknown nmse marker '" + s + "'");
        }
        else if (!nm.is_null())
            r.nmse = nm.get<double>();
        if (!j.at("se").is_null())
            r.se = j.at("se").get<double>();
        r.wall_time_ms = j.at("wall_time_ms").get<double>();
        return r;
    }
    catch (const nlohmann::json::exception& e)
    {
        throw IoError(std::string("malformed result record: ") + e.what());
    }
}

inline std::string to_json_text(const std::vector<ResultRecord>& records)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records)
        arr.push_back(to_json(r));
    return arr.dump(2) + "\n";
}

inline std::vector<ResultRecord> from_json_text(std::string_view text)
{
    nlohmann::json arr;
    try
    {
        arr = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw IoError(std::string("invalid JSON: ") + e.what());
    }
    if (!arr.is_array())
        throw IoError("result JSON must be an array");
    std::vector<ResultRecord> out;
    for (const auto& j : arr)
        out.push_back(record_from_json(j));
    return out;
}

// ----- Experiment spec <-> JSON ---------------------------------------------------------

inline nlohmann::json to_json(const ExperimentSpec& s)
{
    nlohmann::json j;
    j["scenario"] = to_string(s.scenario);
    j["dims"] = {{"n_bs", s.dims.n_bs},           {"m_ris", s.dims.m_ris},         {"q_users", s.dims.q_users},
                 {"t_symbols", s.dims.t_symbols}, {"k_pilots", s.dims.k_pilots}};
    j["snr_grid_db"] = s.snr_grid_db;
    j["k_grid"] = s.k_grid;
    nlohmann::json ests = nlohmann::json::array();
    for (Estimator e : s.estimators)
        ests.push_back(to_string(e));
    j["estimators"] = ests;
    j["n_trials"] = s.n_trials;
    j["master_seed"] = s.master_seed;
    j["schedule_kind"] = to_string(s.schedule_kind);
    j["noiseless"] = s.noiseless;
    j["compute_se"] = s.compute_se;
    j["inject_true_psi"] = s.inject_true_psi;
    j["record_timing"] = s.record_timing;
    j["solvers"] = {
        {"am_max_iters", s.solvers.mf_am.max_iters},
        {"gd_max_iters", s.solvers.mf_gd.max_iters},
        {"gd_step_size", s.solvers.mf_gd.step_size},
        {"gd_psi_step_scale", s.solvers.mf_gd.psi_step_scale},
        {"gd_backtracking", s.solvers.mf_gd.backtracking},
        {"tol_objective", s.solvers.mf_am.tol_objective},
        {"lr_max_iters", s.solvers.lr.max_iters},
    };
    return j;
}

/// Parse an experiment spec; absent fields keep their defaults. Errors are
/// ConfigError (invalid content) or IoError (not JSON).
inline ExperimentSpec spec_from_json(const nlohmann::json& j)
{
    ExperimentSpec s;
    try
    {
        if (!j.is_object())
            throw ConfigError("experiment spec must be a JSON object");
        if (j.contains("scenario"))
            s.scenario = scenario_from_string(j.at("scenario").get<std::string>());
        if (j.contains("dims"))
        {
            const auto& d = j.at("dims");
            s.dims.n_bs = d.value("n_bs", s.dims.n_bs);
            s.dims.m_ris = d.value("m_ris", s.dims.m_ris);
            s.dims.q_users = d.value("q_users", s.dims.q_users);
            s.dims.t_symbols = d.value("t_symbols", s.dims.t_symbols);
            s.dims.k_pilots = d.value("k_pilots", s.dims.k_pilots);
        }
        if (j.contains("snr_grid_db"))
            s.snr_grid_db = j.at("snr_grid_db").get<std::vector<double>>();
        if (j.contains("k_grid"))
            s.k_grid = j.at("k_grid").get<std::vector<Index>>();
        if (j.contains("estimators"))
        {
            s.estimators.clear();
            for (const auto& e : j.at("estimators"))
                s.estimators.push_back(estimator_from_string(e.get<std::string>()));
        }
        else if (s.scenario == Scenario::multi_user_uplink)
            s.estimators = {Estimator::MF_UL};
        s.n_trials = j.value("n_trials", s.n_trials);
        s.master_seed = j.value("master_seed", s.master_seed);
        if (j.contains("schedule_kind"))
            s.schedule_kind = schedule_kind_from_string(j.at("schedule_kind").get<std::string>());
        s.noiseless = j.value("noiseless", s.noiseless);
        s.compute_se = j.value("compute_se", s.compute_se);
        s.inject_true_psi = j.value("inject_true_psi", s.inject_true_psi);
        s.record_timing = j.value("record_timing", s.record_timing);
        if (j.contains("solvers"))
        {
            const auto& v = j.at("solvers");
            s.solvers.mf_am.max_iters = v.value("am_max_iters", s.solvers.mf_am.max_iters);
            s.solvers.mf_gd.max_iters = v.value("gd_max_iters", s.solvers.mf_gd.max_iters);
            s.solvers.mf_gd.step_size = v.value("gd_step_size", s.solvers.mf_gd.step_size);
            s.solvers.mf_gd.psi_step_scale = v.value("gd_psi_step_scale", s.solvers.mf_gd.psi_step_scale);
            s.solvers.mf_gd.backtracking = v.value("gd_backtracking", s.solvers.mf_gd.backtracking);
            const double tol = v.value("tol_objective", s.solvers.mf_am.tol_objective);
            s.solvers.mf_am.tol_objective = tol;
            s.solvers.mf_gd.tol_objective = tol;
            s.solvers.lr.max_iters = v.value("lr_max_iters", s.solvers.lr.max_iters);
        }
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError(std::string("experiment spec: ") + e.what());
    }
    s.validate();
    return s;
}

inline ExperimentSpec load_spec(const std::filesystem::path& path)
{
    const std::string text = detail::read_text(path);
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(text);
    }
    catch (const nlohmann::json::exception& e)
    {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
    return spec_from_json(j);
}

// ----- Files -------------------------------------------------------------------------

inline std::filesystem::path metadata_path(const std::filesystem::path& results)
{
    std::filesystem::path p = results;
    p += ".meta.json";
    return p;
}

/// Write records and, when a spec is given, a sidecar `<path>.meta.json`
/// with the full spec and the library version.
inline void write_results(const std::vector<ResultRecord>& records, const std::filesystem::path& path,
                          ResultFormat format, const ExperimentSpec* spec = nullptr)
{
    const std::string text = format == ResultFormat::csv ? to_csv(records) : to_json_text(records);
    detail::write_text(path, text);
    if (spec)
    {
        nlohmann::json meta;
        meta["software"] = "riscest";
        meta["version"] = version;
        meta["format"] = format == ResultFormat::csv ? "csv" : "json";
        meta["records"] = records.size();
        meta["spec"] = to_json(*spec);
        detail::write_text(metadata_path(path), meta.dump(2) + "\n");
    }
}

inline std::vector<ResultRecord> read_results(const std::filesystem::path& path, ResultFormat format)
{
    const std::string text = detail::read_text(path);
    try
    {
        return format == ResultFormat::csv ? from_csv(text) : from_json_text(text);
    }
    catch (const Error& e)
    {
        throw IoError("'" + path.string() + "': " + e.what());
    }
}

} // namespace riscest

#endif
