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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fluidport/common.hpp"
#include "fluidport/geometry_channel.hpp"
#include "fluidport/port_grid.hpp"

namespace fluidport {

// Mean angles of one UE in degrees: [AOD, AOA, ZOD, ZOA].
using AngleRow = std::array<double, 4>;

// The ten rows of the reference simulation table.
std::vector<AngleRow> default_angle_rows();

struct ScenarioConfig {
    // radio
    double carrier_ghz = 39.0;
    int bs_ny = 1;
    int bs_nz = 1;
    double bs_spacing_wl = 0.5;
    double aperture_y_wl = 10.0;
    double aperture_z_wl = 20.0;
    int ports_y = 100;  // M
    int ports_z = 50;   // N
    double rho_y = 5.0;
    double rho_z = 5.0;

    // multipath
    int path_count = 37;  // LoS + NLoS
    double k_factor_db = 13.3;
    double delay_spread_ns = 616.0;
    std::array<double, 4> nlos_angle_spread_deg{10.0, 20.0, 5.0, 10.0};  // AOD, AOA, ZOD, ZOA
    std::vector<AngleRow> angle_rows = default_angle_rows();

    // mobility and clock
    int ue_count = 10;
    double speed_min_kmh = 90.0;
    double speed_max_kmh = 150.0;
    double slot_duration_s = 1e-3;
    int symbols_per_slot = 14;
    std::vector<int> t0_slots{5, 6, 10};
    double csi_delay_s = 4e-3;

    // windowing
    int history = 8;  // T
    int horizon = 8;  // F
    int segments_per_ue = 1;
    int samples_per_segment = 50;
    double train_fraction = 0.75;
    std::uint64_t seed = 1;

    void validate() const;
    [[nodiscard]] CarrierConfig carrier() const { return CarrierConfig(carrier_ghz * 1e9); }
    [[nodiscard]] FluidGrid grid() const;
    [[nodiscard]] BsArray bs_array() const;
    [[nodiscard]] std::size_t expected_windows() const;
};

// splitmix64-style derivation of named sub-seeds.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t a = 0, std::uint64_t b = 0);

struct UeRealization {
    MultipathChannel channel;
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // m/s
    double speed_kmh = 0.0;
    double heading = 0.0;  // rad, azimuth of travel in the xOy plane
    int t0_slots = 0;
    int angle_row = 0;
};

// Seeded channel realization for one UE segment. A speed override replaces the sampled speed.
UeRealization generate_trajectory(const ScenarioConfig& cfg, int ue_index, int segment = 0,
                                  std::optional<double> speed_kmh_override = std::nullopt);

// One table per instant; t_grid must be strictly increasing.
TableStack sample_tables(const MultipathChannel& ch, std::span<const double> t_grid, int antenna);

struct NormStats {
    cplx mu{0.0, 0.0};
    double sigma = 1.0;
};

struct WindowMeta {
    int ue = 0;
    int segment = 0;
    int t_start = 0;  // index of the first history instant on the segment's sample clock
    int t0_slots = 0;
    double sample_period_s = 0.0;
    double speed_kmh = 0.0;
};

struct WindowSample {
    TableSeries<float> history;  // T x N x M
    TableSeries<float> future;   // F x N x M
    std::complex<float> reference;  // h_(1,1) at the last history instant
    NormStats stats;
    WindowMeta meta;

    // F x N x M broadcast of the reference channel.
    [[nodiscard]] TableSeries<float> reference_tensor() const;
};

// Stride-1 windows; empty when the stack is shorter than T + F.
std::vector<WindowSample> make_windows(const TableStack& stack, int history, int horizon, const WindowMeta& meta);

struct Normalized {
    TableSeries<double> values;
    NormStats stats;
};

// mu: complex mean; sigma: population std of the centered [re, im] concatenation.
NormStats compute_stats(std::span<const std::complex<double>> values);
NormStats compute_stats(std::span<const std::complex<float>> values);
Normalized normalize(const TableSeries<double>& s);
Normalized normalize(const TableSeries<double>& s, const NormStats& stats);
TableSeries<double> denormalize(const TableSeries<double>& s, const NormStats& stats);

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Seeded shuffle; train gets ceil(fraction * K).
Split split_dataset(std::size_t count, double train_fraction, std::uint64_t seed);

struct Dataset {
    ScenarioConfig config;
    std::vector<WindowSample> samples;
    Split split;
};

// Every UE and segment of the scenario, windowed and split.
Dataset generate_dataset(const ScenarioConfig& cfg, int threads = 1);

struct DatasetFiles {
    std::filesystem::path sidecar;
    std::filesystem::path blob;
    std::string blob_sha256;
};

// <dir>/dataset-<hash>.json + .f32; blob is [sample, time(T+F), n, m, re/im] little-endian float32.
DatasetFiles save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& sidecar);

}  // namespace fluidport
