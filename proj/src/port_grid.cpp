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

#include "fluidport/port_grid.hpp"

#include <cstdio>
#include <limits>
#include <ostream>
#include <string>

namespace fluidport {

void TableStack::validate() const {
    if (tables.empty()) throw InvalidInput("table stack is empty");
    const auto rows = tables.front().rows();
    const auto cols = tables.front().cols();
    if (rows < 1 || cols < 1) throw InvalidInput("table stack holds empty tables");
    for (const auto& t : tables)
        if (t.rows() != rows || t.cols() != cols) throw InvalidInput("table stack has mixed table dimensions");
}

PortIndex unravel_index(long long p, int rows, int cols) {
    if (rows < 1 || cols < 1) throw InvalidInput("unravel_index: dimensions must be positive");
    const long long total = static_cast<long long>(rows) * cols;
    if (p < 0 || p >= total)
        throw InvalidInput("unravel_index: flat index " + std::to_string(p) + " outside [0, " +
                           std::to_string(total) + ")");
    return {static_cast<int>(p / cols), static_cast<int>(p % cols)};
}

long long ravel_index(PortIndex idx, int rows, int cols) {
    if (idx.n < 0 || idx.n >= rows || idx.m < 0 || idx.m >= cols)
        throw InvalidInput("ravel_index: port outside grid");
    return static_cast<long long>(idx.n) * cols + idx.m;
}

Eigen::MatrixXd port_distance_map(const TableStack& s, const TableStack& h) {
    s.validate();
    h.validate();
    if (s.size() != h.size()) throw InvalidInput("port selection: stacks differ in length");
    const auto rows = s.tables.front().rows();
    const auto cols = s.tables.front().cols();
    if (h.tables.front().rows() != rows || h.tables.front().cols() != cols)
        throw InvalidInput("port selection: predicted and reference tables differ in shape");

    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(rows, cols);
    for (std::size_t i = 0; i < s.size(); ++i) d += (s.tables[i] - h.tables[i]).cwiseAbs();
    return d;
}

PortDecision select_port_multi_decision(const TableStack& s, const TableStack& h) {
    const Eigen::MatrixXd d = port_distance_map(s, h);
    const auto rows = static_cast<int>(d.rows());
    const auto cols = static_cast<int>(d.cols());
    long long best = 0;
    double best_val = std::numeric_limits<double>::infinity();
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            // strict < keeps the first minimum in row-major order
            if (d(r, c) < best_val) {
                best_val = d(r, c);
                best = static_cast<long long>(r) * cols + c;
            }
        }
    }
    return {unravel_index(best, rows, cols), best_val};
}

PortIndex select_port_multi(const TableStack& s, const TableStack& h) {
    return select_port_multi_decision(s, h).port;
}

PortIndex select_port_single(const ChannelTable& s_hat, const ChannelTable& h_ref) {
    return select_port_multi(TableStack{{s_hat}, StackAxis::antenna}, TableStack{{h_ref}, StackAxis::antenna});
}

void write_port_decisions_csv(std::ostream& os, std::span<const PortDecision> decisions) {
    os << "time_step,n,m,n0,m0,d_min\n";
    char buf[64];
    for (std::size_t k = 0; k < decisions.size(); ++k) {
        const auto& d = decisions[k];
        std::snprintf(buf, sizeof(buf), "%.17g", d.d_min);
        os << k << ',' << d.port.n1() << ',' << d.port.m1() << ',' << d.port.n << ',' << d.port.m << ',' << buf
           << '\n';
    }
}

}  // namespace fluidport
