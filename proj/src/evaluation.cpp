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

#include "fluidport/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <map>
#include <ostream>

#include "fluidport/io.hpp"
#include "fluidport/parallel.hpp"

namespace fluidport {

double ratio_to_db(double mean_ratio) {
    if (!(mean_ratio >= 1e-30)) return kNmseSentinelDb;
    return 10.0 * std::log10(mean_ratio);
}

double mean_ratio_db(std::span<const double> ratios) {
    if (ratios.empty()) throw InvalidInput("nmse: empty sample set");
    return ratio_to_db(std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(ratios.size()));
}

double nmse_t(std::span<const TableSeries<double>> s_hat, std::span<const TableSeries<double>> s) {
    if (s_hat.size() != s.size()) throw InvalidInput("nmse_t: set sizes differ");
    std::vector<double> r(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) r[k] = net::table_nmse(s_hat[k], s[k]);
    return mean_ratio_db(r);
}

namespace {

double vector_ratio(const CVector& h, const CVector& h_ref) {
    if (h.size() != h_ref.size()) throw InvalidInput("nmse_v: channel lengths differ");
    const double den = h_ref.squaredNorm();
    if (!(den > 0.0)) throw DegenerateSample("nmse_v: reference channel has zero norm");
    return (h - h_ref).squaredNorm() / den;
}

}  // namespace

double nmse_v(std::span<const CVector> h, std::span<const CVector> h_ref) {
    if (h.size() != h_ref.size()) throw InvalidInput("nmse_v: set sizes differ");
    std::vector<double> r(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) r[k] = vector_ratio(h[k], h_ref[k]);
    return mean_ratio_db(r);
}

double sinr(const CVector& h_true, const CVector& h_used, double snr_linear) {
    if (h_true.size() != h_used.size()) throw InvalidInput("sinr: channel lengths differ");
    const double norm = h_used.norm();
    if (!(norm > 0.0)) throw InvalidInput("sinr: precoding channel is zero");
    // h_true^T conj(h_used) / ||h_used||
    const cplx gain = (h_true.transpose() * h_used.conjugate())(0) / norm;
    return snr_linear * std::norm(gain);
}

double spectral_efficiency(std::span<const double> sinr_single_ue) {
    if (sinr_single_ue.empty()) throw InvalidInput("spectral_efficiency: no snapshots");
    double acc = 0.0;
    for (double s : sinr_single_ue) acc += std::log2(1.0 + s);
    return acc / static_cast<double>(sinr_single_ue.size());
}

double spectral_efficiency(std::span<const std::vector<double>> sinr_per_ue) {
    double se = 0.0;
    for (const auto& ue : sinr_per_ue) se += spectral_efficiency(std::span<const double>(ue));
    return se;
}

std::string to_string(Baseline b) {
    switch (b) {
        case Baseline::stationary: return "stationary";
        case Baseline::no_prediction: return "no_prediction";
        case Baseline::port_llm: return "port_llm";
        case Baseline::oracle_ports: return "oracle_ports";
    }
    return "unknown";
}

Baseline baseline_from_string(const std::string& s) {
    for (auto b : {Baseline::stationary, Baseline::no_prediction, Baseline::port_llm, Baseline::oracle_ports})
        if (to_string(b) == s) return b;
    throw InvalidInput("unknown baseline '" + s + "'");
}

void EvalConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) { throw InvalidInput("eval." + field + ": " + why); };
    if (arrays.empty()) fail("arrays", "needs at least one BS array");
    for (const auto& [ny, nz] : arrays)
        if (ny < 1 || nz < 1) fail("arrays", "dimensions must be >= 1");
    if (speeds_kmh.empty()) fail("speeds_kmh", "needs at least one speed");
    if (snr_db.empty()) fail("snr_db", "needs at least one SNR point");
    if (!std::is_sorted(snr_db.begin(), snr_db.end())) fail("snr_db", "must be sorted ascending");
    if (n_ue < 1) fail("n_ue", "must be >= 1");
    if (baselines.empty()) fail("baselines", "needs at least one baseline");
    if (realizations < 1) fail("realizations", "must be >= 1");
    if (windows_per_realization < 1) fail("windows_per_realization", "must be >= 1");
}

std::vector<EvalWindow> make_eval_windows(const ScenarioConfig& scenario, const EvalConfig& eval, int bs_ny, int bs_nz,
                                          double speed_kmh, int realization) {
    ScenarioConfig sc = scenario;
    sc.bs_ny = bs_ny;
    sc.bs_nz = bs_nz;
    sc.seed = eval.seed;
    const int ue_idx = realization % sc.ue_count;
    const UeRealization ue = generate_trajectory(sc, ue_idx, realization, speed_kmh);
    const double period = ue.t0_slots * sc.slot_duration_s;
    const int t = sc.history;
    const int f = sc.horizon;
    const int len = t + f * eval.windows_per_realization;
    const int n_t = bs_ny * bs_nz;

    // series[antenna] over the whole trajectory
    std::vector<TableSeries<float>> series(static_cast<std::size_t>(n_t), TableSeries<float>(len, sc.ports_z, sc.ports_y));
    for (int k = 0; k < len; ++k) {
        const auto tables = channel_tables(ue.channel, k * period);
        for (int i = 0; i < n_t; ++i) series[static_cast<std::size_t>(i)].set_table(k, tables[static_cast<std::size_t>(i)]);
    }

    std::vector<EvalWindow> out;
    for (int w = 0; w < eval.windows_per_realization; ++w) {
        const int start = w * f;
        EvalWindow ew;
        ew.h_ref.resize(n_t);
        for (int i = 0; i < n_t; ++i) {
            const auto& s = series[static_cast<std::size_t>(i)];
            TableSeries<float> hist(t, s.n, s.m);
            TableSeries<float> fut(f, s.n, s.m);
            const std::size_t tab = s.table_size();
            std::copy_n(s.values.begin() + static_cast<std::ptrdiff_t>(start * tab), t * tab, hist.values.begin());
            std::copy_n(s.values.begin() + static_cast<std::ptrdiff_t>((start + t) * tab), f * tab, fut.values.begin());
            ew.h_ref[i] = cplx(hist.at(t - 1, 0, 0));
            ew.history.push_back(std::move(hist));
            ew.future.push_back(std::move(fut));
        }
        out.push_back(std::move(ew));
    }
    return out;
}

namespace {

CVector channel_at(const std::vector<TableSeries<float>>& future, int step, PortIndex p) {
    CVector h(static_cast<Eigen::Index>(future.size()));
    for (std::size_t i = 0; i < future.size(); ++i) h[static_cast<Eigen::Index>(i)] = cplx(future[i].at(step, p.n, p.m));
    return h;
}

}  // namespace

std::vector<Snapshot> baseline_stationary(std::span<const EvalWindow> windows) {
    std::vector<Snapshot> out;
    for (const auto& w : windows) {
        const int f = w.future.front().steps;
        for (int k = 0; k < f; ++k) {
            Snapshot s;
            s.h_true = channel_at(w.future, k, {0, 0});
            s.h_used = s.h_true;
            s.h_ref = w.h_ref;
            s.step = k;
            out.push_back(std::move(s));
        }
    }
    return out;
}

std::vector<Snapshot> baseline_no_prediction(std::span<const EvalWindow> windows) {
    std::vector<Snapshot> out;
    for (const auto& w : windows) {
        const int f = w.future.front().steps;
        for (int k = 0; k < f; ++k) {
            Snapshot s;
            s.h_true = channel_at(w.future, k, {0, 0});
            s.h_used = w.h_ref;
            s.h_ref = w.h_ref;
            s.step = k;
            out.push_back(std::move(s));
        }
    }
    return out;
}

namespace {

void select_from_forecast(const EvalWindow& w, const std::vector<TableSeries<double>>& pred, PredictedRun& run) {
    const std::size_t n_t = w.history.size();
    for (std::size_t i = 0; i < n_t; ++i) run.table_ratios.push_back(net::table_nmse(pred[i], w.future[i]));

    const int f = w.future.front().steps;
    const int rows = w.future.front().n;
    const int cols = w.future.front().m;
    TableStack ref{{}, StackAxis::antenna};
    for (std::size_t i = 0; i < n_t; ++i)
        ref.tables.push_back(ChannelTable::Constant(rows, cols, w.h_ref[static_cast<Eigen::Index>(i)]));
    for (int k = 0; k < f; ++k) {
        TableStack s{{}, StackAxis::antenna};
        for (std::size_t i = 0; i < n_t; ++i) s.tables.push_back(pred[i].table(k));
        Snapshot snap;
        snap.decision = select_port_multi_decision(s, ref);
        snap.h_true = channel_at(w.future, k, snap.decision.port);
        snap.h_used = w.h_ref;
        snap.h_ref = w.h_ref;
        snap.step = k;
        run.snapshots.push_back(std::move(snap));
    }
}

PredictedRun evaluate_oracle(std::span<const EvalWindow> windows) {
    PredictedRun run;
    for (const auto& w : windows) {
        std::vector<TableSeries<double>> truth;
        for (const auto& f : w.future) truth.push_back(f.template cast<double>());
        select_from_forecast(w, truth, run);
    }
    return run;
}

}  // namespace

PredictedRun evaluate_predictor(std::span<const EvalWindow> windows, const TablePredictor& predict, int threads) {
    PredictedRun run;
    for (const auto& w : windows) {
        std::vector<TableSeries<double>> pred(w.history.size());
        parallel_for(pred.size(), threads, [&](std::size_t i) { pred[i] = predict(w.history[i]); });
        select_from_forecast(w, pred, run);
    }
    return run;
}

PredictedRun evaluate_port_llm(const net::PortLlm<float>& model, std::span<const EvalWindow> windows, int threads) {
    return evaluate_predictor(
        windows, [&model](const TableSeries<float>& h) { return model.forward(h); }, threads);
}

namespace {

struct CellRun {
    std::vector<Snapshot> snapshots;
    std::vector<double> table_ratios;  // empty -> perfect tables
};

double snapshot_ratio(const Snapshot& s) { return vector_ratio(s.h_true, s.h_used); }

}  // namespace

EvalReport run_evaluation(const ScenarioConfig& scenario, const EvalConfig& eval, const net::PortLlm<float>* model) {
    scenario.validate();
    eval.validate();
    const bool wants_model = std::find(eval.baselines.begin(), eval.baselines.end(), Baseline::port_llm) != eval.baselines.end();
    if (wants_model && model == nullptr) throw InvalidInput("evaluation: port_llm requested without a model");
    if (model) {
        const auto& nc = model->config();
        if (nc.grid_n != scenario.ports_z || nc.grid_m != scenario.ports_y || nc.history != scenario.history ||
            nc.horizon != scenario.horizon)
            throw InvalidInput("evaluation: checkpoint expects grid " + std::to_string(nc.grid_n) + "x" +
                               std::to_string(nc.grid_m) + ", T=" + std::to_string(nc.history) + ", F=" +
                               std::to_string(nc.horizon) + " but the scenario has grid " +
                               std::to_string(scenario.ports_z) + "x" + std::to_string(scenario.ports_y) + ", T=" +
                               std::to_string(scenario.history) + ", F=" + std::to_string(scenario.horizon));
    }

    EvalReport report;
    for (const auto& [ny, nz] : eval.arrays) {
        for (double speed : eval.speeds_kmh) {
            std::map<Baseline, CellRun> runs;
            for (int r = 0; r < eval.realizations; ++r) {
                const auto windows = make_eval_windows(scenario, eval, ny, nz, speed, r);
                for (Baseline b : eval.baselines) {
                    auto& run = runs[b];
                    switch (b) {
                        case Baseline::stationary: {
                            auto s = baseline_stationary(windows);
                            run.snapshots.insert(run.snapshots.end(), s.begin(), s.end());
                            break;
                        }
                        case Baseline::no_prediction: {
                            auto s = baseline_no_prediction(windows);
                            run.snapshots.insert(run.snapshots.end(), s.begin(), s.end());
                            // outdated tables: last observed table held over the horizon
                            for (const auto& w : windows)
                                for (std::size_t i = 0; i < w.history.size(); ++i) {
                                    const auto& h = w.history[i];
                                    TableSeries<double> held(w.future[i].steps, h.n, h.m);
                                    for (int k = 0; k < held.steps; ++k)
                                        for (int n = 0; n < h.n; ++n)
                                            for (int m = 0; m < h.m; ++m) held.at(k, n, m) = cplx(h.at(h.steps - 1, n, m));
                                    run.table_ratios.push_back(net::table_nmse(held, w.future[i]));
                                }
                            break;
                        }
                        case Baseline::port_llm: {
                            auto p = evaluate_port_llm(*model, windows, eval.threads);
                            run.snapshots.insert(run.snapshots.end(), p.snapshots.begin(), p.snapshots.end());
                            run.table_ratios.insert(run.table_ratios.end(), p.table_ratios.begin(), p.table_ratios.end());
                            break;
                        }
                        case Baseline::oracle_ports: {
                            auto p = evaluate_oracle(windows);
                            run.snapshots.insert(run.snapshots.end(), p.snapshots.begin(), p.snapshots.end());
                            run.table_ratios.insert(run.table_ratios.end(), p.table_ratios.begin(), p.table_ratios.end());
                            break;
                        }
                    }
                }
            }

            for (Baseline b : eval.baselines) {
                const auto& run = runs[b];
                std::vector<double> v_ratios;
                v_ratios.reserve(run.snapshots.size());
                for (const auto& s : run.snapshots) v_ratios.push_back(snapshot_ratio(s));
                const double nmse_v_db = mean_ratio_db(v_ratios);
                const double nmse_t_db = run.table_ratios.empty() ? kNmseSentinelDb : mean_ratio_db(run.table_ratios);

                for (double snr : eval.snr_db) {
                    const double snr_lin = std::pow(10.0, snr / 10.0);
                    std::vector<double> s_vals;
                    s_vals.reserve(run.snapshots.size());
                    for (const auto& s : run.snapshots) s_vals.push_back(sinr(s.h_true, s.h_used, snr_lin));
                    // identical single-link statistics for every UE
                    std::vector<std::vector<double>> per_ue(static_cast<std::size_t>(eval.n_ue), s_vals);
                    report.rows.push_back({b, speed, ny, nz, snr, spectral_efficiency(per_ue), nmse_t_db, nmse_v_db,
                                           run.snapshots.size()});
                }

                const int horizon = scenario.horizon;
                for (int k = 0; k < horizon; ++k) {
                    std::vector<double> step_ratios;
                    for (const auto& s : run.snapshots)
                        if (s.step == k) step_ratios.push_back(snapshot_ratio(s));
                    if (!step_ratios.empty()) report.steps.push_back({b, speed, ny, nz, k + 1, mean_ratio_db(step_ratios)});
                }

                if (b == Baseline::port_llm) {
                    PortTrace trace{speed, ny, nz, {}};
                    for (const auto& s : run.snapshots) trace.decisions.push_back(s.decision);
                    report.traces.push_back(std::move(trace));
                }
            }
        }
    }
    return report;
}

void write_results_csv(std::ostream& os, std::span<const ResultRow> rows, const std::vector<std::string>& header_comments) {
    for (const auto& c : header_comments) os << "# " << c << '\n';
    os << "baseline,speed_kmh,bs_ny,bs_nz,snr_db,se_bps_hz,nmse_t_db,nmse_v_db,n_snapshots\n";
    for (const auto& r : rows)
        os << to_string(r.baseline) << ',' << io::fmt_double(r.speed_kmh) << ',' << r.bs_ny << ',' << r.bs_nz << ','
           << io::fmt_double(r.snr_db) << ',' << io::fmt_double(r.se_bps_hz) << ',' << io::fmt_double(r.nmse_t_db) << ','
           << io::fmt_double(r.nmse_v_db) << ',' << r.n_snapshots << '\n';
}

void write_se_plot_csv(std::ostream& os, std::span<const ResultRow> rows) {
    os << "figure,series,speed_kmh,bs_ny,bs_nz,x_snr_db,y_se_bps_hz\n";
    for (const auto& r : rows)
        os << "se_vs_snr," << to_string(r.baseline) << ',' << io::fmt_double(r.speed_kmh) << ',' << r.bs_ny << ','
           << r.bs_nz << ',' << io::fmt_double(r.snr_db) << ',' << io::fmt_double(r.se_bps_hz) << '\n';
}

void write_nmse_plot_csv(std::ostream& os, std::span<const StepRow> rows) {
    os << "figure,series,speed_kmh,bs_ny,bs_nz,x_step,y_nmse_v_db\n";
    for (const auto& r : rows)
        os << "nmse_vs_step," << to_string(r.baseline) << ',' << io::fmt_double(r.speed_kmh) << ',' << r.bs_ny << ','
           << r.bs_nz << ',' << r.step << ',' << io::fmt_double(r.nmse_v_db) << '\n';
}

}  // namespace fluidport
