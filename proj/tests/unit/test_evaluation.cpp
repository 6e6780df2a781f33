// SPDX-License-Identifier: Apache-2.0
//
// fluidport: fluid-antenna port prediction with a LoRA-adapted transformer
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>
#include <set>
#include <sstream>

#include "fluidport/evaluation.hpp"

using namespace fluidport;

namespace {

ScenarioConfig scenario() {
    ScenarioConfig c;
    c.ports_y = 2;
    c.ports_z = 3;
    c.aperture_y_wl = 0.4;
    c.aperture_z_wl = 1.2;
    c.path_count = 5;
    c.ue_count = 2;
    c.segments_per_ue = 2;
    c.samples_per_segment = 8;
    c.history = 3;
    c.horizon = 2;
    c.slot_duration_s = 4e-6;
    return c;
}

EvalConfig eval_cfg() {
    EvalConfig e;
    e.arrays = {{1, 1}, {2, 1}};
    e.speeds_kmh = {60.0, 150.0};
    e.snr_db = {0.0, 10.0, 20.0};
    e.baselines = {Baseline::stationary, Baseline::no_prediction, Baseline::oracle_ports};
    e.realizations = 2;
    e.windows_per_realization = 3;
    return e;
}

TableSeries<double> filled(double value) {
    TableSeries<double> s(1, 2, 2);
    for (auto& v : s.values) v = {value, 0.0};
    return s;
}

const ResultRow& find(const EvalReport& r, Baseline b, double speed, int ny, double snr) {
    for (const auto& row : r.rows)
        if (row.baseline == b && row.speed_kmh == speed && row.bs_ny == ny && row.snr_db == snr) return row;
    throw std::runtime_error("row not found");
}

}  // namespace

TEST_CASE("nmse_t") {
    const std::vector<TableSeries<double>> s{filled(1.0), filled(2.0)};
    CHECK(nmse_t(s, s) == kNmseSentinelDb);
    const std::vector<TableSeries<double>> zero{filled(0.0), filled(0.0)};
    CHECK(nmse_t(zero, s) == doctest::Approx(0.0));
    // ratios 1 and 0.01
    const std::vector<TableSeries<double>> hat{filled(0.0), filled(1.8)};
    CHECK(nmse_t(hat, s) == doctest::Approx(10.0 * std::log10(0.505)).epsilon(1e-12));
    CHECK(nmse_t(hat, s) == doctest::Approx(-2.967).epsilon(1e-3));
    CHECK_THROWS_AS(nmse_t(s, zero), DegenerateSample);
}

TEST_CASE("nmse_v") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    std::vector<CVector> h, ref;
    for (int k = 0; k < 5; ++k) {
        CVector a(64), b(64);
        for (int i = 0; i < 64; ++i) a[i] = {g(rng), g(rng)}, b[i] = {g(rng), g(rng)};
        h.push_back(a);
        ref.push_back(b);
    }
    CHECK(nmse_v(ref, ref) == kNmseSentinelDb);
    std::vector<CVector> twice;
    for (const auto& r : ref) twice.push_back(2.0 * r);
    CHECK(nmse_v(twice, ref) == doctest::Approx(0.0).epsilon(1e-12));

    double acc = 0.0;
    for (int k = 0; k < 5; ++k) {
        double num = 0.0, den = 0.0;
        for (int i = 0; i < 64; ++i) {
            num += std::norm(h[k][i] - ref[k][i]);
            den += std::norm(ref[k][i]);
        }
        acc += num / den;
    }
    CHECK(nmse_v(h, ref) == doctest::Approx(10.0 * std::log10(acc / 5.0)).epsilon(1e-12));
}

TEST_CASE("matched-filter sinr") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    CVector a(8), b(8);
    for (int i = 0; i < 8; ++i) a[i] = {g(rng), g(rng)}, b[i] = {g(rng), g(rng)};
    CHECK(sinr(a, a, 3.0) == doctest::Approx(3.0 * a.squaredNorm()));
    CVector e0 = CVector::Zero(2), e1 = CVector::Zero(2);
    e0[0] = 1.0;
    e1[1] = {0.0, 1.0};
    CHECK(sinr(e0, e1, 10.0) == 0.0);

    std::complex<double> ip = 0.0;
    double nb = 0.0;
    for (int i = 0; i < 8; ++i) {
        ip += a[i] * std::conj(b[i]);
        nb += std::norm(b[i]);
    }
    CHECK(sinr(a, b, 2.5) == doctest::Approx(2.5 * std::norm(ip) / nb).epsilon(1e-12));
    CHECK_THROWS(sinr(a, CVector::Zero(8), 1.0));
}

TEST_CASE("spectral efficiency") {
    const std::vector<double> ones(7, 1.0), threes(4, 3.0);
    CHECK(spectral_efficiency(ones) == doctest::Approx(1.0));
    CHECK(spectral_efficiency(threes) == doctest::Approx(2.0));
    const std::vector<std::vector<double>> two_ue{ones, threes};
    CHECK(spectral_efficiency(two_ue) == doctest::Approx(3.0));

    CVector h = CVector::Zero(4);
    h[2] = {0.6, 0.8};
    const std::vector<double> s{sinr(h, h, std::pow(10.0, 1.0))};
    CHECK(spectral_efficiency(s) == doctest::Approx(3.459).epsilon(1e-3));
}

TEST_CASE("baseline names round-trip") {
    for (Baseline b : {Baseline::stationary, Baseline::no_prediction, Baseline::port_llm, Baseline::oracle_ports})
        CHECK(baseline_from_string(to_string(b)) == b);
    CHECK_THROWS_AS(baseline_from_string("kalman"), InvalidInput);
}

TEST_CASE("evaluation windows") {
    const auto sc = scenario();
    const auto ev = eval_cfg();
    const auto w = make_eval_windows(sc, ev, 2, 2, 120.0, 1);
    REQUIRE(w.size() == 3);
    for (const auto& win : w) {
        REQUIRE(win.history.size() == 4);
        CHECK(win.future.size() == 4);
        CHECK(win.h_ref.size() == 4);
        for (int a = 0; a < 4; ++a) {
            CHECK(win.history[a].steps == 3);
            CHECK(win.future[a].steps == 2);
            CHECK(std::abs(win.h_ref[a] - std::complex<double>(win.history[a].at(2, 0, 0))) < 1e-6);
        }
    }
    const auto again = make_eval_windows(sc, ev, 2, 2, 120.0, 1);
    CHECK(again[2].future[3].values == w[2].future[3].values);
}

TEST_CASE("static channel: no aging means no-prediction equals stationary") {
    auto ev = eval_cfg();
    ev.speeds_kmh = {0.0};
    ev.baselines = {Baseline::stationary, Baseline::no_prediction};
    const auto r = run_evaluation(scenario(), ev, nullptr);
    for (const auto& [ny, nz] : ev.arrays)
        for (double snr : ev.snr_db)
            CHECK(find(r, Baseline::no_prediction, 0.0, ny, snr).se_bps_hz ==
                  doctest::Approx(find(r, Baseline::stationary, 0.0, ny, snr).se_bps_hz).epsilon(1e-9));
}

TEST_CASE("report shape, sentinel and oracle ordering") {
    const auto ev = eval_cfg();
    const auto r = run_evaluation(scenario(), ev, nullptr);
    CHECK(r.rows.size() == ev.baselines.size() * ev.speeds_kmh.size() * ev.arrays.size() * ev.snr_db.size());
    for (const auto& row : r.rows) {
        CHECK(row.n_snapshots == std::size_t(ev.realizations * ev.windows_per_realization * 2));
        if (row.baseline == Baseline::oracle_ports) CHECK(row.nmse_t_db == kNmseSentinelDb);
        if (row.baseline == Baseline::stationary) CHECK(row.nmse_v_db == kNmseSentinelDb);
    }
    // the oracle moves to the port closest to the reference, so it can only shrink the deviation
    for (double v : ev.speeds_kmh)
        for (const auto& [ny, nz] : ev.arrays)
            CHECK(find(r, Baseline::oracle_ports, v, ny, 0.0).nmse_v_db <= find(r, Baseline::no_prediction, v, ny, 0.0).nmse_v_db);

    std::ostringstream os;
    write_results_csv(os, r.rows, {"seed 7"});
    const std::string text = os.str();
    CHECK(text.rfind("# seed 7\n", 0) == 0);
    CHECK(text.find("baseline,speed_kmh,bs_ny,bs_nz,snr_db,se_bps_hz,nmse_t_db,nmse_v_db,n_snapshots\n") != std::string::npos);
    CHECK(text.find(",-300,") != std::string::npos);
}

TEST_CASE("predictor plumbing") {
    const auto sc = scenario();
    const auto ev = eval_cfg();
    const auto w = make_eval_windows(sc, ev, 1, 1, 150.0, 0);
    const auto truth = [&](const TableSeries<float>& hist) {
        for (const auto& win : w)
            if (win.history[0].values == hist.values) {
                TableSeries<double> out(win.future[0].steps, win.future[0].n, win.future[0].m);
                for (std::size_t k = 0; k < out.values.size(); ++k) out.values[k] = win.future[0].values[k];
                return out;
            }
        throw std::runtime_error("unknown window");
    };
    const auto run = evaluate_predictor(w, truth);
    CHECK(run.snapshots.size() == w.size() * 2);
    CHECK(run.table_ratios.size() == w.size());
    for (double t : run.table_ratios) CHECK(t == 0.0);
    std::set<int> steps;
    for (const auto& s : run.snapshots) {
        CHECK(s.decision.port.n >= 0);
        CHECK(s.decision.port.n < sc.ports_z);
        CHECK(s.decision.port.m >= 0);
        CHECK(s.decision.port.m < sc.ports_y);
        CHECK(s.h_used.isApprox(s.h_ref));
        steps.insert(s.step);
    }
    CHECK(steps == std::set<int>{0, 1});
}

TEST_CASE("plot csv layouts") {
    std::ostringstream se, nm;
    const std::vector<ResultRow> rows{{Baseline::port_llm, 120.0, 2, 8, 10.0, 7.5, -5.0, -6.0, 100}};
    write_se_plot_csv(se, rows);
    CHECK(se.str().rfind("figure,series,speed_kmh,bs_ny,bs_nz,x_snr_db,y_se_bps_hz\n", 0) == 0);
    const std::vector<StepRow> steps{{Baseline::no_prediction, 90.0, 8, 8, 3, -1.5}};
    write_nmse_plot_csv(nm, steps);
    CHECK(nm.str().find("x_step,y_nmse_v_db") != std::string::npos);
}

TEST_CASE("config validation names the field") {
    EvalConfig e = eval_cfg();
    e.snr_db = {10.0, 0.0};
    try {
        e.validate();
        FAIL("expected throw");
    } catch (const InvalidInput& x) {
        CHECK(std::string(x.what()).rfind("eval.snr_db", 0) == 0);
    }
}
