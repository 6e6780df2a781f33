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

#include "fluidport/geometry_channel.hpp"

#include <cmath>
#include <string>

namespace fluidport {

void BsArray::validate() const {
    if (n_y < 1 || n_z < 1) throw InvalidInput("BS array needs at least one antenna along each axis");
    if (!(d_ty > 0.0) || !(d_tz > 0.0)) throw InvalidInput("BS element spacing must be positive");
}

BsArray BsArray::half_wavelength(int n_y, int n_z, const CarrierConfig& carrier) {
    BsArray bs{n_y, n_z, 0.5 * carrier.lambda(), 0.5 * carrier.lambda()};
    bs.validate();
    return bs;
}

void FluidGrid::validate() const {
    if (m < 1 || n < 1) throw InvalidInput("port grid needs at least one port along each axis");
    if (!(d_ry > 0.0) || !(d_rz > 0.0)) throw InvalidInput("port spacing must be positive");
}

FluidGrid FluidGrid::from_aperture(double w_y, double w_z, int m, int n, const CarrierConfig& carrier) {
    if (m < 1 || n < 1) throw InvalidInput("port grid needs at least one port along each axis");
    if (!(w_y > 0.0) || !(w_z > 0.0)) throw InvalidInput("fluid antenna aperture must be positive");
    FluidGrid g;
    g.w_y = w_y;
    g.w_z = w_z;
    g.m = m;
    g.n = n;
    g.d_ry = w_y * carrier.lambda() / m;
    g.d_rz = w_z * carrier.lambda() / n;
    return g;
}

void MultipathChannel::validate() const {
    bs.validate();
    grid.validate();
    if (paths.empty()) throw InvalidInput("multipath channel needs at least one path");
}

namespace {

// exp(j * step * k) for k = 0..count-1; entry 0 is exactly 1.
CVector phase_progression(double step, int count) {
    CVector v(count);
    for (int k = 0; k < count; ++k) v[k] = std::polar(1.0, step * k);
    return v;
}

void check_port(PortIndex port, const FluidGrid& grid) {
    if (port.n < 0 || port.n >= grid.n || port.m < 0 || port.m >= grid.m)
        throw InvalidInput("port (" + std::to_string(port.n1()) + "," + std::to_string(port.m1()) +
                           ") outside " + std::to_string(grid.n) + "x" + std::to_string(grid.m) + " grid");
}

// Steering matrix A, columns = per-path 3-D steering vectors.
Eigen::MatrixXcd steering_matrix(const MultipathChannel& ch) {
    Eigen::MatrixXcd a(ch.bs.n_t(), static_cast<Eigen::Index>(ch.paths.size()));
    for (std::size_t p = 0; p < ch.paths.size(); ++p)
        a.col(static_cast<Eigen::Index>(p)) = steering_3d(ch.paths[p], ch.bs, ch.carrier);
    return a;
}

// coef[p][n*M+m] = path_coefficient(p, (n,m), t).
std::vector<std::vector<cplx>> coefficient_grid(const MultipathChannel& ch, double t) {
    std::vector<std::vector<cplx>> coef(ch.paths.size());
    for (std::size_t p = 0; p < ch.paths.size(); ++p) {
        auto& row = coef[p];
        row.resize(static_cast<std::size_t>(ch.grid.ports()));
        for (int n = 0; n < ch.grid.n; ++n)
            for (int m = 0; m < ch.grid.m; ++m)
                row[static_cast<std::size_t>(n * ch.grid.m + m)] =
                    path_coefficient(ch.paths[p], PortIndex{n, m}, ch.grid, t, ch.carrier);
    }
    return coef;
}

}  // namespace

CVector steering_y(double theta_tx, double phi_tx, const BsArray& bs, const CarrierConfig& carrier) {
    const double step = 2.0 * kPi / carrier.lambda() * std::sin(theta_tx) * std::sin(phi_tx) * bs.d_ty;
    return phase_progression(step, bs.n_y);
}

CVector steering_z(double theta_tx, const BsArray& bs, const CarrierConfig& carrier) {
    const double step = 2.0 * kPi / carrier.lambda() * std::cos(theta_tx) * bs.d_tz;
    return phase_progression(step, bs.n_z);
}

CVector steering_3d(const PathParams& p, const BsArray& bs, const CarrierConfig& carrier) {
    const CVector ay = steering_y(p.theta_tx, p.phi_tx, bs, carrier);
    const CVector az = steering_z(p.theta_tx, bs, carrier);
    CVector a(bs.n_t());
    for (int ky = 0; ky < bs.n_y; ++ky)
        for (int kz = 0; kz < bs.n_z; ++kz) a[ky * bs.n_z + kz] = ay[ky] * az[kz];
    return a;
}

Eigen::Vector3d arrival_direction(double theta_rx, double phi_rx) {
    return {std::sin(theta_rx) * std::cos(phi_rx), std::sin(theta_rx) * std::sin(phi_rx), std::cos(theta_rx)};
}

double doppler_frequency(double theta_rx, double phi_rx, const Eigen::Vector3d& ue_velocity,
                         const CarrierConfig& carrier) {
    return arrival_direction(theta_rx, phi_rx).dot(ue_velocity) / carrier.lambda();
}

cplx path_coefficient(const PathParams& p, PortIndex port, const FluidGrid& grid, double t,
                      const CarrierConfig& carrier) {
    check_port(port, grid);
    const cplx c_p = p.alpha * p.beta * std::polar(1.0, 2.0 * kPi * carrier.f_c * p.tau);
    const double spatial = 2.0 * kPi / carrier.lambda() *
                           (std::sin(p.theta_rx) * std::sin(p.phi_rx) * grid.d_ry * port.m +
                            std::cos(p.theta_rx) * grid.d_rz * port.n);
    return c_p * std::polar(1.0, spatial) * std::polar(1.0, 2.0 * kPi * p.doppler * t);
}

CVector channel_vector(const MultipathChannel& ch, PortIndex port, double t) {
    ch.validate();
    check_port(port, ch.grid);
    const Eigen::MatrixXcd a = steering_matrix(ch);
    CVector h = CVector::Zero(ch.bs.n_t());
    for (std::size_t p = 0; p < ch.paths.size(); ++p) {
        const cplx c = path_coefficient(ch.paths[p], port, ch.grid, t, ch.carrier);
        for (int i = 0; i < ch.bs.n_t(); ++i) h[i] += a(i, static_cast<Eigen::Index>(p)) * c;
    }
    return h;
}

ChannelTable channel_table(const MultipathChannel& ch, int antenna, double t) {
    ch.validate();
    if (antenna < 0 || antenna >= ch.bs.n_t())
        throw InvalidInput("antenna index " + std::to_string(antenna + 1) + " outside [1, " +
                           std::to_string(ch.bs.n_t()) + "]");
    std::vector<cplx> weights(ch.paths.size());
    for (std::size_t p = 0; p < ch.paths.size(); ++p) weights[p] = steering_3d(ch.paths[p], ch.bs, ch.carrier)[antenna];
    const auto coef = coefficient_grid(ch, t);

    ChannelTable s = ChannelTable::Zero(ch.grid.n, ch.grid.m);
    for (std::size_t p = 0; p < ch.paths.size(); ++p)
        for (int n = 0; n < ch.grid.n; ++n)
            for (int m = 0; m < ch.grid.m; ++m)
                s(n, m) += weights[p] * coef[p][static_cast<std::size_t>(n * ch.grid.m + m)];
    return s;
}

std::vector<ChannelTable> channel_tables(const MultipathChannel& ch, double t) {
    ch.validate();
    const Eigen::MatrixXcd a = steering_matrix(ch);
    const auto coef = coefficient_grid(ch, t);
    std::vector<ChannelTable> out(static_cast<std::size_t>(ch.bs.n_t()), ChannelTable::Zero(ch.grid.n, ch.grid.m));
    for (int i = 0; i < ch.bs.n_t(); ++i) {
        auto& s = out[static_cast<std::size_t>(i)];
        for (std::size_t p = 0; p < ch.paths.size(); ++p) {
            const cplx w = a(i, static_cast<Eigen::Index>(p));
            for (int n = 0; n < ch.grid.n; ++n)
                for (int m = 0; m < ch.grid.m; ++m) s(n, m) += w * coef[p][static_cast<std::size_t>(n * ch.grid.m + m)];
        }
    }
    return out;
}

ChannelTable reference_table(const MultipathChannel& ch, int antenna, double t) {
    if (antenna < 0 || antenna >= ch.bs.n_t())
        throw InvalidInput("antenna index " + std::to_string(antenna + 1) + " outside [1, " +
                           std::to_string(ch.bs.n_t()) + "]");
    const cplx h11 = channel_vector(ch, PortIndex{0, 0}, t)[antenna];
    return ChannelTable::Constant(ch.grid.n, ch.grid.m, h11);
}

}  // namespace fluidport
