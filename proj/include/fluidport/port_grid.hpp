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

#include <iosfwd>
#include <span>
#include <vector>

#include "fluidport/common.hpp"

namespace fluidport {

// Grid coordinate, 0-based internally. n runs along z (rows), m along y (columns).
struct PortIndex {
    int n = 0;
    int m = 0;

    static PortIndex from_one_based(int n1, int m1) { return {n1 - 1, m1 - 1}; }
    [[nodiscard]] int n1() const { return n + 1; }
    [[nodiscard]] int m1() const { return m + 1; }
    bool operator==(const PortIndex&) const = default;
};

enum class StackAxis { antenna, time };

struct TableStack {
    std::vector<ChannelTable> tables;
    StackAxis axis = StackAxis::antenna;

    [[nodiscard]] std::size_t size() const { return tables.size(); }
    // Throws InvalidInput when the stack is empty or tables disagree in shape.
    void validate() const;
};

// Row-major: n = p / M, m = p % M.
PortIndex unravel_index(long long p, int rows, int cols);
long long ravel_index(PortIndex idx, int rows, int cols);

// D[n,m] = sum_i |S_i[n,m] - H_i[n,m]|.
Eigen::MatrixXd port_distance_map(const TableStack& s, const TableStack& h);

struct PortDecision {
    PortIndex port;
    double d_min = 0.0;
};

// Argmin of the distance map; ties resolve to the lowest row-major index.
PortDecision select_port_multi_decision(const TableStack& s, const TableStack& h);
PortIndex select_port_multi(const TableStack& s, const TableStack& h);
PortIndex select_port_single(const ChannelTable& s_hat, const ChannelTable& h_ref);

// CSV rows: time_step,n,m,n0,m0,d_min (n,m 1-based; n0,m0 0-based).
void write_port_decisions_csv(std::ostream& os, std::span<const PortDecision> decisions);

}  // namespace fluidport
