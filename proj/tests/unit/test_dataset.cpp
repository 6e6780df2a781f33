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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "fluidport/dataset.hpp"
#include "fluidport/io.hpp"

using namespace fluidport;

namespace {

ScenarioConfig small_scenario() {
    ScenarioConfig c;
    c.ports_y = 3;
    c.ports_z = 4;
    c.aperture_y_wl = 1.5;
    c.aperture_z_wl = 2.0;
    c.path_count = 6;
    c.ue_count = 2;
    c.segments_per_ue = 2;
    c.samples_per_segment = 12;
    c.history = 3;
    c.horizon = 2;
    return c;
}

TableStack stack_of(int len, int n, int m, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    TableStack s{{}, StackAxis::time};
    for (int k = 0; k < len; ++k) {
        ChannelTable t(n, m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) t(i, j) = {g(rng), g(rng)};
        s.tables.push_back(t);
    }
    return s;
}

}  // namespace

TEST_CASE("trajectories are seeded and within the speed range") {
    const ScenarioConfig c = small_scenario();
    const auto a = generate_trajectory(c, 1, 0);
    const auto b = generate_trajectory(c, 1, 0);
    REQUIRE(a.channel.paths.size() == 6);
    for (std::size_t p = 0; p < a.channel.paths.size(); ++p) {
        CHECK(a.channel.paths[p].phi_rx == b.channel.paths[p].phi_rx);
        CHECK(a.channel.paths[p].beta == b.channel.paths[p].beta);
        CHECK(a.channel.paths[p].doppler == b.channel.paths[p].doppler);
    }
    const auto still = generate_trajectory(c, 0, 1, 0.0);
    for (const auto& p : still.channel.paths) CHECK(p.doppler == 0.0);

    ScenarioConfig many = c;
    many.ue_count = 1;
    for (int seg = 0; seg < 1000; ++seg) {
        const auto u = generate_trajectory(many, 0, seg);
        CHECK(u.speed_kmh >= 90.0);
        CHECK(u.speed_kmh <= 150.0);
        CHECK((u.t0_slots == 5 || u.t0_slots == 6 || u.t0_slots == 10));
    }
}

TEST_CASE("path powers follow the K-factor split and sum to one") {
    const ScenarioConfig c = small_scenario();
    const auto u = generate_trajectory(c, 0, 0);
    double total = 0.0;
    for (const auto& p : u.channel.paths) total += p.alpha * p.alpha;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    const double k = std::pow(10.0, 13.3 / 10.0);
    CHECK(u.channel.paths[0].alpha * u.channel.paths[0].alpha == doctest::Approx(k / (k + 1.0)).epsilon(1e-12));
    for (const auto& p : u.channel.paths) CHECK(std::abs(std::abs(p.beta) - 1.0) < 1e-12);
}

TEST_CASE("sample_tables equals direct table calls") {
    const ScenarioConfig c = small_scenario();
    const auto u = generate_trajectory(c, 0, 0);
    const std::vector<double> t{0.0, 5e-3, 1e-2};
    const auto s = sample_tables(u.channel, t, 0);
    REQUIRE(s.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(s.tables[k] == channel_table(u.channel, 0, t[k]));
    const std::vector<double> bad{0.0, 0.0};
    CHECK_THROWS_AS(sample_tables(u.channel, bad, 0), InvalidInput);

    ScenarioConfig one = c;
    one.ports_y = 1;
    one.ports_z = 1;
    const auto single = sample_tables(generate_trajectory(one, 0, 0).channel, std::vector<double>{0.0}, 0);
    CHECK(single.size() == 1);
}

TEST_CASE("stride-1 windows") {
    WindowMeta meta{0, 0, 0, 5, 5e-3, 100.0};
    CHECK(make_windows(stack_of(8, 2, 3, 1), 5, 3, meta).size() == 1);
    const auto w = make_windows(stack_of(11, 2, 3, 1), 5, 3, meta);
    REQUIRE(w.size() == 4);
    CHECK(make_windows(stack_of(7, 2, 3, 1), 5, 3, meta).empty());

    const auto s = stack_of(11, 2, 3, 1);
    for (std::size_t k = 0; k < w.size(); ++k) {
        CHECK(w[k].meta.t_start == static_cast<int>(k));
        CHECK(w[k].history.at(0, 1, 2) == std::complex<float>(s.tables[k](1, 2)));
        CHECK(w[k].future.at(0, 0, 0) == std::complex<float>(s.tables[k + 5](0, 0)));
        CHECK(w[k].reference == std::complex<float>(s.tables[k + 4](0, 0)));
        const auto ref = w[k].reference_tensor();
        for (const auto& v : ref.values) CHECK(v == w[k].reference);
    }
}

TEST_CASE("normalization statistics") {
    TableSeries<double> s(2, 2, 2);
    s.values = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    const auto st = compute_stats(std::span<const cplx>(s.values));
    CHECK(std::abs(st.mu) < 1e-15);
    // [re, im] population std of [1,-1,0,0,1,-1,0,0, 0,0,1,-1,0,0,1,-1] is sqrt(0.5)
    CHECK(st.sigma == doctest::Approx(std::sqrt(0.5)));

    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(2.0, 3.0);
    TableSeries<double> r(4, 3, 5);
    for (auto& v : r.values) v = {g(rng), g(rng) - 1.0};
    const auto n = normalize(r);
    double sum = 0.0, sq = 0.0;
    for (const auto& v : n.values.values) sum += v.real() + v.imag();
    const double mean = sum / (2.0 * n.values.values.size());
    for (const auto& v : n.values.values) sq += (v.real() - mean) * (v.real() - mean) + (v.imag() - mean) * (v.imag() - mean);
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::sqrt(sq / (2.0 * n.values.values.size())) == doctest::Approx(1.0).epsilon(1e-10));

    const auto back = denormalize(n.values, n.stats);
    for (std::size_t k = 0; k < r.values.size(); ++k) CHECK(std::abs(back.values[k] - r.values[k]) < 1e-12);

    TableSeries<double> flat(2, 2, 2);
    std::fill(flat.values.begin(), flat.values.end(), cplx(0.7, -0.2));
    CHECK_THROWS_AS(normalize(flat), DegenerateSample);
}

TEST_CASE("split sizes and determinism") {
    const auto four = split_dataset(4, 0.75, 1);
    CHECK(four.train.size() == 3);
    CHECK(four.test.size() == 1);
    const auto big = split_dataset(54300, 0.75, 1);
    CHECK(big.train.size() == 40725);
    CHECK(big.test.size() == 13575);
    const auto again = split_dataset(54300, 0.75, 1);
    CHECK(big.train == again.train);
    std::vector<std::size_t> all(big.train);
    all.insert(all.end(), big.test.begin(), big.test.end());
    std::sort(all.begin(), all.end());
    for (std::size_t k = 0; k < all.size(); ++k) CHECK_UNARY(all[k] == k);
}

TEST_CASE("dataset counts, round trip and regeneration") {
    const ScenarioConfig c = small_scenario();
    const Dataset a = generate_dataset(c, 2);
    CHECK(a.samples.size() == c.expected_windows());
    CHECK(a.samples.size() == 2 * 2 * (12 - 3 - 2 + 1));
    const Dataset b = generate_dataset(c, 1);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t k = 0; k < a.samples.size(); ++k) CHECK(a.samples[k].history.values == b.samples[k].history.values);

    const auto dir = std::filesystem::temp_directory_path() / "fluidport_dataset_test";
    std::filesystem::remove_all(dir);
    const auto files = save_dataset(a, dir);
    CHECK(files.sidecar.filename().string().rfind("dataset-", 0) == 0);
    CHECK(std::filesystem::file_size(files.blob) == a.samples.size() * 5 * 4 * 3 * 2 * 4);
    const Dataset r = load_dataset(files.sidecar);
    REQUIRE(r.samples.size() == a.samples.size());
    CHECK(r.split.train == a.split.train);
    for (std::size_t k = 0; k < a.samples.size(); ++k) {
        CHECK(r.samples[k].history.values == a.samples[k].history.values);
        CHECK(r.samples[k].future.values == a.samples[k].future.values);
        CHECK(r.samples[k].reference == a.samples[k].reference);
        CHECK(r.samples[k].meta.t0_slots == a.samples[k].meta.t0_slots);
    }
    const auto again = save_dataset(b, dir / "again");
    CHECK(io::sha256_file(again.blob) == io::sha256_file(files.blob));

    // a flipped byte fails the hash check
    auto bytes = io::read_bytes(files.blob);
    bytes[10] ^= 0xff;
    io::write_bytes(files.blob, bytes);
    CHECK_THROWS_AS(load_dataset(files.sidecar), InvalidInput);
    std::filesystem::remove_all(dir);
}

TEST_CASE("scenario validation names the field") {
    ScenarioConfig c = small_scenario();
    c.train_fraction = 1.5;
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("scenario.train_fraction"), InvalidInput);
    c = small_scenario();
    c.t0_slots.clear();
    CHECK_THROWS_WITH_AS(c.validate(), doctest::Contains("scenario.t0_slots"), InvalidInput);
}
