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

#include <filesystem>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "fluidport/dataset.hpp"
#include "fluidport/evaluation.hpp"
#include "fluidport/net/portllm.hpp"
#include "fluidport/training.hpp"

namespace fluidport {

// Bad or unknown configuration field. line is 1-based; 0 when unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, int line, const std::string& what);
    [[nodiscard]] const std::string& field() const { return field_; }
    [[nodiscard]] int line() const { return line_; }

private:
    std::string field_;
    int line_;
};

// Sections are optional; an absent section keeps defaults.
//
//   scenario: carrier_ghz, bs_ny, bs_nz, bs_spacing_wl, aperture_y_wl, aperture_z_wl, ports_y, ports_z,
//             rho_y, rho_z, path_count, k_factor_db, delay_spread_ns, nlos_angle_spread_deg [4],
//             angle_rows_deg [[AOD, AOA, ZOD, ZOA], ...], ue_count, speed_min_kmh, speed_max_kmh,
//             slot_duration_ms, symbols_per_slot, t0_slots, csi_delay_ms, history, horizon,
//             segments_per_ue, samples_per_segment, train_fraction, seed
//   net:      d_model, heads, layers, backbone_heads, lora_rank, n_ctx, mlp_ratio, lora_enabled,
//             gpt2_weights (optional SafeTensors path)
//   train:    epochs, batch_size, peak_lr, warmup_fraction, min_lr_fraction, beta1, beta2, eps,
//             clip_norm, checkpoint_every
//   eval:     arrays [[N_y, N_z], ...], speeds_kmh, snr_db, n_ue, baselines, realizations,
//             windows_per_realization, seed
struct RunConfig {
    ScenarioConfig scenario;
    net::NetConfig net;
    TrainConfig train;
    EvalConfig eval;
    std::string gpt2_weights;
    nlohmann::json raw;  // parsed document as JSON, for manifests
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& yaml_text);

// Grid and window sizes of the net follow the scenario.
net::NetConfig net_for_scenario(net::NetConfig net, const ScenarioConfig& sc);

nlohmann::json scenario_to_json(const ScenarioConfig& c);
ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json net_to_json(const net::NetConfig& c);
net::NetConfig net_from_json(const nlohmann::json& j);
nlohmann::json train_to_json(const TrainConfig& c);
nlohmann::json eval_to_json(const EvalConfig& c);

}  // namespace fluidport
