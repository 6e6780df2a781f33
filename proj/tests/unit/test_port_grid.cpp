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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <sstream>

#include "fluidport/port_grid.hpp"

using namespace fluidport;

namespace {

ChannelTable random_table(int rows, int cols, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    ChannelTable t(rows, cols);
    for (int n = 0; n < rows; ++n)
        for (int m = 0; m < cols; ++m) t(n, m) = {g(rng), g(rng)};
    return t;
}

PortIndex scan(const TableStack& s, const TableStack& h) {
    const auto rows = static_cast<int>(s.tables[0].rows());
    const auto cols = static_cast<int>(s.tables[0].cols());
    PortIndex best{};
    double best_d = 1e300;
    for (int n = 0; n < rows; ++n)
        for (int m = 0; m < cols; ++m) {
            double d = 0;
            for (std::size_t i = 0; i < s.size(); ++i) d += std::abs(s.tables[i](n, m) - h.tables[i](n, m));
            if (d < best_d) best_d = d, best = {n, m};
        }
    return best;
}

}  // namespace

TEST_CASE("unravel_index is row-major and one-based on report") {
    auto p = unravel_index(0, 50, 100);
    CHECK(p.n1() == 1);
    CHECK(p.m1() == 1);
    p = unravel_index(100, 50, 100);
    CHECK(p.n1() == 2);
    CHECK(p.m1() == 1);
    p = unravel_index(4999, 50, 100);
    CHECK(p.n1() == 50);
    CHECK(p.m1() == 100);
    for (long long k = 0; k < 5000; k += 37) CHECK(ravel_index(unravel_index(k, 50, 100), 50, 100) == k);
    CHECK_THROWS_AS(unravel_index(5000, 50, 100), InvalidInput);
    CHECK_THROWS_AS(unravel_index(-1, 50, 100), InvalidInput);
}

TEST_CASE("select_port_multi unique minimum") {
    std::mt19937_64 rng(1);
    TableStack h{{}, StackAxis::antenna}, s{{}, StackAxis::antenna};
    for (int i = 0; i < 3; ++i) {
        h.tables.push_back(random_table(6, 10, rng));
        s.tables.push_back(h.tables.back().array() + cplx(1.0, 0.5));
        s.tables.back()(2, 6) = h.tables.back()(2, 6);
    }
    const PortIndex p = select_port_multi(s, h);
    CHECK(p.n1() == 3);
    CHECK(p.m1() == 7);
    const auto d = select_port_multi_decision(s, h);
    CHECK(d.d_min == 0.0);
}

TEST_CASE("ties resolve to the first row-major port") {
    std::mt19937_64 rng(2);
    TableStack h{{random_table(4, 5, rng), random_table(4, 5, rng)}, StackAxis::antenna};
    CHECK(select_port_multi(h, h) == PortIndex{0, 0});
    ChannelTable units(4, 5);
    const cplx unit[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    for (Eigen::Index k = 0; k < units.size(); ++k) units.data()[k] = unit[k % 4];
    CHECK(select_port_single(ChannelTable::Zero(4, 5), units) == PortIndex{0, 0});

    ChannelTable s = h.tables[0].array() + 1.0;
    s(3, 4) = h.tables[0](3, 4);
    CHECK(select_port_single(s, h.tables[0]) == PortIndex{3, 4});
}

TEST_CASE("selection equals exhaustive scan") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        TableStack s{{}, StackAxis::antenna}, h{{}, StackAxis::antenna};
        for (int i = 0; i < 4; ++i) {
            s.tables.push_back(random_table(6, 5, rng));
            h.tables.push_back(random_table(6, 5, rng));
        }
        CHECK(select_port_multi(s, h) == scan(s, h));
    }
    for (int trial = 0; trial < 50; ++trial) {
        TableStack s{{random_table(8, 10, rng)}, StackAxis::antenna}, h{{random_table(8, 10, rng)}, StackAxis::antenna};
        CHECK(select_port_single(s.tables[0], h.tables[0]) == scan(s, h));
    }
}

TEST_CASE("distance map entries") {
    std::mt19937_64 rng(4);
    TableStack s{{random_table(3, 2, rng), random_table(3, 2, rng)}, StackAxis::antenna};
    TableStack h{{random_table(3, 2, rng), random_table(3, 2, rng)}, StackAxis::antenna};
    const auto d = port_distance_map(s, h);
    for (int n = 0; n < 3; ++n)
        for (int m = 0; m < 2; ++m)
            CHECK(d(n, m) == doctest::Approx(std::abs(s.tables[0](n, m) - h.tables[0](n, m)) +
                                             std::abs(s.tables[1](n, m) - h.tables[1](n, m))));
}

TEST_CASE("malformed stacks are rejected") {
    std::mt19937_64 rng(5);
    TableStack empty{{}, StackAxis::antenna};
    TableStack one{{random_table(2, 2, rng)}, StackAxis::antenna};
    TableStack other{{random_table(2, 3, rng)}, StackAxis::antenna};
    TableStack two{{random_table(2, 2, rng), random_table(2, 2, rng)}, StackAxis::antenna};
    CHECK_THROWS_AS(select_port_multi(empty, empty), InvalidInput);
    CHECK_THROWS_AS(select_port_multi(one, other), InvalidInput);
    CHECK_THROWS_AS(select_port_multi(one, two), InvalidInput);
}

TEST_CASE("decision CSV") {
    std::vector<PortDecision> d{{{0, 0}, 0.5}, {{2, 3}, 1.25}};
    std::ostringstream os;
    write_port_decisions_csv(os, d);
    CHECK(os.str() == "time_step,n,m,n0,m0,d_min\n0,1,1,0,0,0.5\n1,3,4,2,3,1.25\n");
}
