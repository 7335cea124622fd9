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

#include "catch_amalgamated.hpp"

#include <riscest/results_io.hpp>

#include <filesystem>

// Covered tests:
// - CSV and JSON round trips, including markers and infinite SNR
// - Exact CSV header, empty input
// - Rejection of non-finite values and malformed input
// - Spec JSON round trip and validation on load
// - File I/O with sidecar metadata

using namespace riscest;
namespace fs = std::filesystem;

namespace
{
std::vector<ResultRecord> sample_records()
{
    ExperimentSpec s;
    s.dims = {4, 6, 1, 1, 24};
    s.snr_grid_db = {-3.5, 10.0};
    s.k_grid = {8, 24};
    s.estimators = {Estimator::MF_AM, Estimator::LS, Estimator::OPTIMAL};
    s.n_trials = 2;
    auto recs = run_sweep(s);
    recs.front().status = RecordStatus::failed;
    recs.front().nmse.reset();
    recs.front().se.reset();
    recs.back().snr_db = std::numeric_limits<double>::infinity();
    recs.back().wall_time_ms = 1.25;
    recs.back().seed = std::numeric_limits<std::uint64_t>::max();
    return recs;
}

fs::path temp_dir()
{
    const fs::path p = fs::temp_directory_path() / "riscest_test_results_io";
    fs::create_directories(p);
    return p;
}
} // namespace

TEST_CASE("Results IO - CSV")
{
    const auto recs = sample_records();
    const std::string text = to_csv(recs);
    CHECK(text.substr(0, text.find('\n')) == "scenario,estimator,snr_db,k,trial,seed,nmse,se,wall_time_ms");
    CHECK(text.find("infeasible") != std::string::npos);
    CHECK(text.find("failed") != std::string::npos);
    CHECK(from_csv(text) == recs);
    CHECK(to_csv(from_csv(text)) == text);

    CHECK(to_csv({}) == std::string(csv_header) + "\n");
    CHECK(from_csv(std::string(csv_header) + "\n").empty());
    CHECK_THROWS_AS(from_csv(""), IoError);
    CHECK_THROWS_AS(from_csv("a,b\n"), IoError);
    CHECK_THROWS_AS(from_csv(std::string(csv_header) + "\nsingle_user_downlink,MF_AM,1\n"), IoError);

    auto bad = recs;
    bad[1].nmse = std::nan("");
    CHECK_THROWS_AS(to_csv(bad), ConfigError);
    bad = recs;
    bad[1].se = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(to_csv(bad), ConfigError);
}

TEST_CASE("Results IO - JSON")
{
    const auto recs = sample_records();
    CHECK(from_json_text(to_json_text(recs)) == recs);
    CHECK(from_json_text("[]").empty());
    CHECK_THROWS_AS(from_json_text("{"), IoError);
    CHECK_THROWS_AS(from_json_text("{}"), IoError);
    CHECK_THROWS_AS(from_json_text("[{\"scenario\":\"single_user_downlink\"}]"), IoError);
}

TEST_CASE("Results IO - Spec")
{
    ExperimentSpec s;
    s.scenario = Scenario::multi_user_uplink;
    s.dims = {16, 10, 3, 4, 20};
    s.snr_grid_db = {0.0, 7.5};
    s.k_grid = {10, 20};
    s.estimators = {Estimator::MF_UL};
    s.n_trials = 5;
    s.master_seed = 123456789012345ULL;
    s.schedule_kind = PhaseScheduleKind::dft;
    s.inject_true_psi = true;
    s.solvers.mf_gd.step_size = 0.05;
    s.solvers.mf_gd.psi_step_scale = 1e-3;
    const ExperimentSpec back = spec_from_json(to_json(s));
    CHECK(to_json(back) == to_json(s));
    CHECK(back.dims.q_users == 3);
    CHECK(back.master_seed == s.master_seed);

    // Absent fields keep defaults, uplink defaults to MF_UL
    const ExperimentSpec d = spec_from_json(nlohmann::json::parse(
        R"({"scenario":"multi_user_uplink","dims":{"n_bs":8,"m_ris":4,"q_users":2,"t_symbols":2,"k_pilots":8}})"));
    CHECK(d.estimators == std::vector<Estimator>{Estimator::MF_UL});
    CHECK(d.n_trials == ExperimentSpec{}.n_trials);

    CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse("[1]")), ConfigError);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"n_trials":"x"})")), ConfigError);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"estimators":["KBF"]})")), ConfigError);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"dims":{"n_bs":0}})")), ConfigError);
}

TEST_CASE("Results IO - Files")
{
    const fs::path dir = temp_dir();
    const auto recs = sample_records();
    ExperimentSpec spec;
    for (auto fmt : {ResultFormat::csv, ResultFormat::json})
    {
        const fs::path p = dir / (fmt == ResultFormat::csv ? "r.csv" : "r.json");
        write_results(recs, p, fmt, &spec);
        CHECK(read_results(p, fmt) == recs);
        REQUIRE(fs::exists(metadata_path(p)));
        const auto meta = nlohmann::json::parse(detail::read_text(metadata_path(p)));
        CHECK(meta["records"] == recs.size());
        CHECK(meta["software"] == "riscest");
    }
    CHECK(result_format_from_string("json") == ResultFormat::json);
    CHECK_THROWS_AS(result_format_from_string("xml"), ConfigError);

    CHECK_THROWS_AS(read_results(dir / "missing.csv", ResultFormat::csv), IoError);
    CHECK_THROWS_AS(write_results(recs, dir / "no" / "such" / "dir.csv", ResultFormat::csv), IoError);
    CHECK_THROWS_AS(load_spec(dir / "missing.json"), IoError);
    detail::write_text(dir / "broken.json", "{");
    CHECK_THROWS_AS(load_spec(dir / "broken.json"), ConfigError);
    fs::remove_all(dir);
}
