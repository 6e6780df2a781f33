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

#include <vector>

#include "fluidport/common.hpp"
#include "fluidport/port_grid.hpp"

namespace fluidport {

struct CarrierConfig {
    double f_c = 39e9;
    double c = kSpeedOfLight;

    CarrierConfig() = default;
    explicit CarrierConfig(double carrier_hz) : f_c(carrier_hz) {
        if (!(carrier_hz > 0.0)) throw InvalidInput("carrier frequency must be positive");
    }
    [[nodiscard]] double lambda() const { return c / f_c; }
};

// N_y x N_z uniform planar array in the yOz plane.
struct BsArray {
    int n_y = 1;
    int n_z = 1;
    double d_ty = 0.0;  // m
    double d_tz = 0.0;  // m

    [[nodiscard]] int n_t() const { return n_y * n_z; }
    void validate() const;

    static BsArray half_wavelength(int n_y, int n_z, const CarrierConfig& carrier);
};

// Port grid of the fluid antenna: N ports along z (rows), M along y (columns).
struct FluidGrid {
    double w_y = 1.0;  // aperture along y, wavelengths
    double w_z = 1.0;  // aperture along z, wavelengths
    int m = 1;
    int n = 1;
    double d_ry = 0.0;  // m
    double d_rz = 0.0;  // m
    // Port density (rho_y, rho_z) is recorded with the configuration but does not drive spacing.
    double rho_y = 0.0;
    double rho_z = 0.0;

    [[nodiscard]] int ports() const { return n * m; }
    void validate() const;

    // Spacing = aperture / port count along each axis.
    static FluidGrid from_aperture(double w_y, double w_z, int m, int n, const CarrierConfig& carrier);
};

struct PathParams {
    double theta_tx = 0.0;  // EOD, rad
    double phi_tx = 0.0;    // AOD, rad
    double theta_rx = 0.0;  // EOA, rad
    double phi_rx = 0.0;    // AOA, rad
    double tau = 0.0;       // s
    double alpha = 0.0;
    cplx beta{1.0, 0.0};    // unit modulus
    double doppler = 0.0;   // Hz
};

// Index 0 is the LoS path.
struct MultipathChannel {
    CarrierConfig carrier;
    BsArray bs;
    FluidGrid grid;
    std::vector<PathParams> paths;

    void validate() const;
};

CVector steering_y(double theta_tx, double phi_tx, const BsArray& bs, const CarrierConfig& carrier);
CVector steering_z(double theta_tx, const BsArray& bs, const CarrierConfig& carrier);

// a_y (x) a_z; entry k_y * N_z + k_z.
CVector steering_3d(const PathParams& p, const BsArray& bs, const CarrierConfig& carrier);

// Unit arrival direction [sin(theta)cos(phi), sin(theta)sin(phi), cos(theta)].
Eigen::Vector3d arrival_direction(double theta_rx, double phi_rx);

double doppler_frequency(double theta_rx, double phi_rx, const Eigen::Vector3d& ue_velocity,
                         const CarrierConfig& carrier);

// c_p * exp(j 2pi/lambda [sin th sin ph d_ry (m-1) + cos th d_rz (n-1)]) * exp(j 2pi w t),
// with c_p = alpha * beta * exp(j 2pi f_c tau).
cplx path_coefficient(const PathParams& p, PortIndex port, const FluidGrid& grid, double t,
                      const CarrierConfig& carrier);

// h_(n,m)(t) = A c_(n,m)(t), length N_t.
CVector channel_vector(const MultipathChannel& ch, PortIndex port, double t);

// S_i(t); antenna is 0-based.
ChannelTable channel_table(const MultipathChannel& ch, int antenna, double t);

// Every antenna's table at t, in antenna order. Entry-wise identical to channel_table.
std::vector<ChannelTable> channel_tables(const MultipathChannel& ch, double t);

// H_i(t): h_(i,1,1)(t) broadcast over the grid.
ChannelTable reference_table(const MultipathChannel& ch, int antenna, double t);

}  // namespace fluidport
