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

#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fluidport/dataset.hpp"
#include "fluidport/net/portllm.hpp"
#include "fluidport/port_grid.hpp"

namespace fluidport {

// Reported in place of -inf dB when the mean ratio falls below 1e-30.
inline constexpr double kNmseSentinelDb = -300.0;

// 10 log10(mean(ratios)), with the sentinel guard.
double ratio_to_db(double mean_ratio);
double mean_ratio_db(std::span<const double> ratios);

double nmse_t(std::span<const TableSeries<double>> s_hat, std::span<const TableSeries<double>> s);
double nmse_v(std::span<const CVector> h, std::span<const CVector> h_ref);

// Matched filter w = conj(h_used)/||h_used||; SINR = snr * |h_true^T w|^2.
double sinr(const CVector& h_true, const CVector& h_used, double snr_linear);

// sum over UEs of mean_snapshots log2(1 + SINR); outer index = UE.
double spectral_efficiency(std::span<const std::vector<double>> sinr_per_ue);
double spectral_efficiency(std::span<const double> sinr_single_ue);

enum class Baseline { stationary, no_prediction, port_llm, oracle_ports };
std::string to_string(Baseline b);
Baseline baseline_from_string(const std::string& s);

struct EvalConfig {
    std::vector<std::pair<int, int>> arrays{{2, 8}, {8, 8}, {32, 8}};  // (N_y, N_z)
    std::vector<double> speeds_kmh{90.0, 120.0, 150.0};
    std::vector<double> snr_db{0.0, 5.0, 10.0, 15.0, 20.0};
    int n_ue = 1;
    std::vector<Baseline> baselines{Baseline::stationary, Baseline::no_prediction, Baseline::port_llm};
    int realizations = 4;           // channel realizations per (array, speed) cell
    int windows_per_realization = 8;
    std::uint64_t seed = 7;
    int threads = 1;

    void validate() const;
};

// One evaluation snapshot = one (window, future step) pair.
struct Snapshot {
    CVector h_true;
    CVector h_used;
    CVector h_ref;
    PortDecision decision;
    int step = 0;  // future step, 0-based
};

struct EvalWindow {
    // one series per BS antenna
    std::vector<TableSeries<float>> history;
    std::vector<TableSeries<float>> future;
    CVector h_ref;  // h_(1,1) at the last history instant
};

// Windows of one channel realization in an (array, speed) cell, drawn from the eval seed.
// Consecutive windows advance by F samples so future blocks do not overlap.
std::vector<EvalWindow> make_eval_windows(const ScenarioConfig& scenario, const EvalConfig& eval, int bs_ny, int bs_nz,
                                          double speed_kmh, int realization);

// Per-step h_used / h_true for the stationary and outdated-CSI baselines.
std::vector<Snapshot> baseline_stationary(std::span<const EvalWindow> windows);
std::vector<Snapshot> baseline_no_prediction(std::span<const EvalWindow> windows);

// Predictor returns F x N x M tables for one antenna's history.
using TablePredictor = std::function<TableSeries<double>(const TableSeries<float>&)>;

struct PredictedRun {
    std::vector<Snapshot> snapshots;
    std::vector<double> table_ratios;  // per (window, antenna) table NMSE ratio
};

// Forecast per antenna, pick the port per future step via the multi-antenna argmin rule,
// h_true = true channel at that port, h_used = reference channel.
PredictedRun evaluate_predictor(std::span<const EvalWindow> windows, const TablePredictor& predict, int threads = 1);
PredictedRun evaluate_port_llm(const net::PortLlm<float>& model, std::span<const EvalWindow> windows, int threads = 1);

struct ResultRow {
    Baseline baseline{};
    double speed_kmh = 0.0;
    int bs_ny = 0;
    int bs_nz = 0;
    double snr_db = 0.0;
    double se_bps_hz = 0.0;
    double nmse_t_db = 0.0;
    double nmse_v_db = 0.0;
    std::size_t n_snapshots = 0;
};

struct StepRow {
    Baseline baseline{};
    double speed_kmh = 0.0;
    int bs_ny = 0;
    int bs_nz = 0;
    int step = 0;  // 1-based prediction step
    double nmse_v_db = 0.0;
};

struct PortTrace {
    double speed_kmh = 0.0;
    int bs_ny = 0;
    int bs_nz = 0;
    std::vector<PortDecision> decisions;
};

struct EvalReport {
    std::vector<ResultRow> rows;
    std::vector<StepRow> steps;
    std::vector<PortTrace> traces;
};

// Full sweep; model may be null only when port_llm is not requested.
EvalReport run_evaluation(const ScenarioConfig& scenario, const EvalConfig& eval, const net::PortLlm<float>* model);

void write_results_csv(std::ostream& os, std::span<const ResultRow> rows, const std::vector<std::string>& header_comments);
void write_se_plot_csv(std::ostream& os, std::span<const ResultRow> rows);
void write_nmse_plot_csv(std::ostream& os, std::span<const StepRow> rows);

}  // namespace fluidport
