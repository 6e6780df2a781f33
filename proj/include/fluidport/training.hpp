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

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fluidport/dataset.hpp"
#include "fluidport/net/portllm.hpp"

namespace fluidport {

struct TrainConfig {
    int epochs = 20;
    int batch_size = 64;
    double peak_lr = 1e-3;
    double warmup_fraction = 0.05;  // of total steps
    double min_lr_fraction = 0.01;  // of peak
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clip_norm = 1.0;  // global gradient norm; <= 0 disables
    std::uint64_t seed = 1;
    int checkpoint_every = 1;  // epochs
    int threads = 1;

    void validate() const;
};

// Linear warmup from 0 to peak, then cosine decay to min at total_steps.
struct LrSchedule {
    double peak = 1e-3;
    double min = 1e-5;
    long warmup = 0;
    long total = 1;

    static LrSchedule from(const TrainConfig& cfg, long total_steps);
    [[nodiscard]] double at(long step) const;
};

double lr_at(long step, const LrSchedule& schedule);

// ||S - S_hat||^2 / ||S||^2.
double loss_nmse(const TableSeries<double>& s_hat, const TableSeries<double>& s);
double loss_nmse(const TableSeries<double>& s_hat, const TableSeries<float>& s);

// ||h_ref - h||^2 / ||h_ref||^2.
double validate_port(std::span<const cplx> h, std::span<const cplx> h_ref);

struct WindowValidation {
    std::vector<PortIndex> ports;      // one per future step
    std::vector<double> ratios;        // port-validation ratio per future step
    [[nodiscard]] double mean() const;
};

// Selects a port per future step from the predicted tables against the window's reference,
// then scores the true channel at that port.
WindowValidation validate_window(const TableSeries<double>& s_hat, const WindowSample& w);

struct EpochRecord {
    int epoch = 0;
    long step = 0;
    double lr = 0.0;
    double train_nmse = 0.0;
    double val_nmse_v = 0.0;
};

struct AdamState {
    std::vector<float> m;
    std::vector<float> v;
    long step = 0;
    int epochs_done = 0;
};

struct TrainHooks {
    // Called after every epoch with the updated model and optimizer state.
    std::function<void(const EpochRecord&, const net::PortLlm<float>&, const AdamState&)> on_epoch;
};

// Trains the trainable partition only. Resumes from state when state.epochs_done > 0.
std::vector<EpochRecord> train(net::PortLlm<float>& model, const Dataset& data, const TrainConfig& cfg,
                               AdamState& state, const TrainHooks& hooks = {});

// Mean table NMSE of the model on the given samples.
double mean_table_nmse(const net::PortLlm<float>& model, const Dataset& data, std::span<const std::size_t> idx,
                       int threads = 1);
// Mean port-validation ratio on the given samples.
double mean_port_validation(const net::PortLlm<float>& model, const Dataset& data, std::span<const std::size_t> idx,
                            int threads = 1);

void write_metrics_csv(std::ostream& os, std::span<const EpochRecord> log);

}  // namespace fluidport
