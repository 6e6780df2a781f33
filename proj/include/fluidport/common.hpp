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

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fluidport {

using cplx = std::complex<double>;
using CVector = Eigen::VectorXcd;

// Complex N x M table of port channels. Row index runs over z-ports (n), column over y-ports (m).
using ChannelTable = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 299792458.0;

// Rejected input: out-of-range index, mismatched dimensions, malformed arguments.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A sample whose statistics cannot be normalized (constant input, zero-norm target).
class DegenerateSample : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Non-finite loss or gradient during optimization.
class NumericalAbort : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Dense stack of equally sized complex tables, laid out [step][n][m] row-major.
template <typename S>
struct TableSeries {
    int steps = 0;
    int n = 0;
    int m = 0;
    std::vector<std::complex<S>> values;

    TableSeries() = default;
    TableSeries(int steps_, int n_, int m_)
        : steps(steps_), n(n_), m(m_),
          values(static_cast<std::size_t>(steps_) * static_cast<std::size_t>(n_) * static_cast<std::size_t>(m_)) {}

    [[nodiscard]] std::size_t table_size() const { return static_cast<std::size_t>(n) * static_cast<std::size_t>(m); }
    [[nodiscard]] std::size_t index(int k, int row, int col) const {
        return (static_cast<std::size_t>(k) * static_cast<std::size_t>(n) + static_cast<std::size_t>(row)) *
                   static_cast<std::size_t>(m) +
               static_cast<std::size_t>(col);
    }
    std::complex<S>& at(int k, int row, int col) { return values[index(k, row, col)]; }
    const std::complex<S>& at(int k, int row, int col) const { return values[index(k, row, col)]; }

    [[nodiscard]] ChannelTable table(int k) const {
        ChannelTable out(n, m);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < m; ++c) out(r, c) = cplx(at(k, r, c));
        return out;
    }
    void set_table(int k, const ChannelTable& t) {
        if (t.rows() != n || t.cols() != m) throw InvalidInput("set_table: table shape does not match series");
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < m; ++c) at(k, r, c) = std::complex<S>(t(r, c));
    }

    template <typename U>
    [[nodiscard]] TableSeries<U> cast() const {
        TableSeries<U> out(steps, n, m);
        for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = std::complex<U>(values[i]);
        return out;
    }
};

// Sum of squared moduli over every entry.
template <typename S>
double squared_norm(const TableSeries<S>& s) {
    double acc = 0.0;
    for (const auto& v : s.values) acc += std::norm(std::complex<double>(v));
    return acc;
}

}  // namespace fluidport
