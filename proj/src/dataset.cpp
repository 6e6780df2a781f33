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

#include "fluidport/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "json.hpp"

#include "fluidport/config.hpp"
#include "fluidport/io.hpp"
#include "fluidport/parallel.hpp"

namespace fluidport {

std::vector<AngleRow> default_angle_rows() {
    return {{31, 149, 150, 30},  {-38, 218, 227, -47}, {1, 179, 99, 81},    {10, 170, 36, 144},
            {149, 31, 53, 127},  {129, 51, 71, 109},   {-15, 195, 210, -30}, {199, -19, 212, -32},
            {-43, 223, 76, 104}, {7, 173, 23, 157}};
}

void ScenarioConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) {
        throw InvalidInput("scenario." + field + ": " + why);
    };
    if (!(carrier_ghz > 0.0)) fail("carrier_ghz", "must be positive");
    if (bs_ny < 1) fail("bs_ny", "must be >= 1");
    if (bs_nz < 1) fail("bs_nz", "must be >= 1");
    if (!(bs_spacing_wl > 0.0)) fail("bs_spacing_wl", "must be positive");
    if (!(aperture_y_wl > 0.0)) fail("aperture_y_wl", "must be positive");
    if (!(aperture_z_wl > 0.0)) fail("aperture_z_wl", "must be positive");
    if (ports_y < 1) fail("ports_y", "must be >= 1");
    if (ports_z < 1) fail("ports_z", "must be >= 1");
    if (path_count < 1) fail("path_count", "must be >= 1");
    if (!(delay_spread_ns >= 0.0)) fail("delay_spread_ns", "must be non-negative");
    if (angle_rows.empty()) fail("angle_rows", "needs at least one row");
    if (ue_count < 1) fail("ue_count", "must be >= 1");
    if (!(speed_min_kmh >= 0.0) || !(speed_max_kmh >= speed_min_kmh)) fail("speed_kmh", "needs 0 <= min <= max");
    if (!(slot_duration_s > 0.0)) fail("slot_duration_ms", "must be positive");
    if (symbols_per_slot < 1) fail("symbols_per_slot", "must be >= 1");
    if (t0_slots.empty()) fail("t0_slots", "needs at least one sampling period");
    for (int t0 : t0_slots)
        if (t0 < 1) fail("t0_slots", "periods must be >= 1 slot");
    if (!(csi_delay_s >= 0.0)) fail("csi_delay_ms", "must be non-negative");
    if (history < 1) fail("history", "must be >= 1");
    if (horizon < 1) fail("horizon", "must be >= 1");
    if (segments_per_ue < 1) fail("segments_per_ue", "must be >= 1");
    if (samples_per_segment < 1) fail("samples_per_segment", "must be >= 1");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) fail("train_fraction", "must lie in (0, 1)");
}

FluidGrid ScenarioConfig::grid() const {
    auto g = FluidGrid::from_aperture(aperture_y_wl, aperture_z_wl, ports_y, ports_z, carrier());
    g.rho_y = rho_y;
    g.rho_z = rho_z;
    return g;
}

BsArray ScenarioConfig::bs_array() const {
    const double lambda = carrier().lambda();
    BsArray bs{bs_ny, bs_nz, bs_spacing_wl * lambda, bs_spacing_wl * lambda};
    bs.validate();
    return bs;
}

std::size_t ScenarioConfig::expected_windows() const {
    const int per_segment = std::max(0, samples_per_segment - history - horizon + 1);
    return static_cast<std::size_t>(ue_count) * static_cast<std::size_t>(segments_per_ue) *
           static_cast<std::size_t>(per_segment);
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t a, std::uint64_t b) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(base);
    for (unsigned char ch : tag) h = mix(h ^ ch);
    h = mix(h ^ a);
    h = mix(h ^ (b + 0x632be59bd9b4e019ULL));
    return h;
}

UeRealization generate_trajectory(const ScenarioConfig& cfg, int ue_index, int segment,
                                  std::optional<double> speed_kmh_override) {
    cfg.validate();
    if (ue_index < 0 || ue_index >= cfg.ue_count) throw InvalidInput("generate_trajectory: ue index out of range");
    std::mt19937_64 rng(derive_seed(cfg.seed, "trajectory", static_cast<std::uint64_t>(ue_index),
                                    static_cast<std::uint64_t>(segment)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    constexpr double deg = kPi / 180.0;

    UeRealization ue;
    ue.angle_row = ue_index % static_cast<int>(cfg.angle_rows.size());
    const AngleRow& row = cfg.angle_rows[static_cast<std::size_t>(ue.angle_row)];

    ue.speed_kmh = cfg.speed_min_kmh + (cfg.speed_max_kmh - cfg.speed_min_kmh) * unit(rng);
    ue.heading = 2.0 * kPi * unit(rng);
    ue.t0_slots = cfg.t0_slots[static_cast<std::size_t>(unit(rng) * static_cast<double>(cfg.t0_slots.size())) %
                               cfg.t0_slots.size()];
    if (speed_kmh_override) ue.speed_kmh = *speed_kmh_override;
    const double speed = ue.speed_kmh / 3.6;
    ue.velocity = Eigen::Vector3d(speed * std::cos(ue.heading), speed * std::sin(ue.heading), 0.0);

    auto& ch = ue.channel;
    ch.carrier = cfg.carrier();
    ch.bs = cfg.bs_array();
    ch.grid = cfg.grid();

    const double k_lin = std::pow(10.0, cfg.k_factor_db / 10.0);
    const int nlos = cfg.path_count - 1;
    const double ds = cfg.delay_spread_ns * 1e-9;

    std::vector<double> tau(static_cast<std::size_t>(nlos));
    std::vector<double> power(static_cast<std::size_t>(nlos));
    double power_sum = 0.0;
    for (int p = 0; p < nlos; ++p) {
        // exponential profile whose RMS spread equals the configured delay spread
        tau[static_cast<std::size_t>(p)] = ds > 0.0 ? -ds * std::log(1.0 - unit(rng)) : 0.0;
        power[static_cast<std::size_t>(p)] = ds > 0.0 ? std::exp(-tau[static_cast<std::size_t>(p)] / ds) : 1.0;
        power_sum += power[static_cast<std::size_t>(p)];
    }
    std::sort(tau.begin(), tau.end());
    std::sort(power.begin(), power.end(), std::greater<>());

    const double los_share = nlos > 0 ? k_lin / (k_lin + 1.0) : 1.0;
    ch.paths.reserve(static_cast<std::size_t>(cfg.path_count));
    for (int p = 0; p < cfg.path_count; ++p) {
        PathParams path;
        const auto& spread = cfg.nlos_angle_spread_deg;
        const bool los = p == 0;
        path.phi_tx = (row[0] + (los ? 0.0 : spread[0] * gauss(rng))) * deg;
        path.phi_rx = (row[1] + (los ? 0.0 : spread[1] * gauss(rng))) * deg;
        path.theta_tx = (row[2] + (los ? 0.0 : spread[2] * gauss(rng))) * deg;
        path.theta_rx = (row[3] + (los ? 0.0 : spread[3] * gauss(rng))) * deg;
        path.tau = los ? 0.0 : tau[static_cast<std::size_t>(p - 1)];
        const double share =
            los ? los_share : (1.0 - los_share) * power[static_cast<std::size_t>(p - 1)] / power_sum;
        path.alpha = std::sqrt(share);
        path.beta = std::polar(1.0, 2.0 * kPi * unit(rng));
        path.doppler = doppler_frequency(path.theta_rx, path.phi_rx, ue.velocity, ch.carrier);
        ch.paths.push_back(path);
    }
    return ue;
}

TableStack sample_tables(const MultipathChannel& ch, std::span<const double> t_grid, int antenna) {
    for (std::size_t k = 1; k < t_grid.size(); ++k)
        if (!(t_grid[k] > t_grid[k - 1])) throw InvalidInput("sample_tables: time grid must be strictly increasing");
    TableStack stack;
    stack.axis = StackAxis::time;
    stack.tables.reserve(t_grid.size());
    for (double t : t_grid) stack.tables.push_back(channel_table(ch, antenna, t));
    return stack;
}

TableSeries<float> WindowSample::reference_tensor() const {
    TableSeries<float> out(future.steps, future.n, future.m);
    std::fill(out.values.begin(), out.values.end(), reference);
    return out;
}

std::vector<WindowSample> make_windows(const TableStack& stack, int history, int horizon, const WindowMeta& meta) {
    if (history < 1 || horizon < 1) throw InvalidInput("make_windows: T and F must be >= 1");
    std::vector<WindowSample> out;
    const int len = static_cast<int>(stack.size());
    if (len < history + horizon) return out;
    stack.validate();
    const int n = static_cast<int>(stack.tables.front().rows());
    const int m = static_cast<int>(stack.tables.front().cols());

    for (int start = 0; start + history + horizon <= len; ++start) {
        WindowSample w;
        w.history = TableSeries<float>(history, n, m);
        w.future = TableSeries<float>(horizon, n, m);
        for (int k = 0; k < history; ++k) w.history.set_table(k, stack.tables[static_cast<std::size_t>(start + k)]);
        for (int k = 0; k < horizon; ++k)
            w.future.set_table(k, stack.tables[static_cast<std::size_t>(start + history + k)]);
        w.reference = w.history.at(history - 1, 0, 0);
        w.stats = compute_stats(std::span<const std::complex<float>>(w.history.values));
        w.meta = meta;
        w.meta.t_start = meta.t_start + start;
        out.push_back(std::move(w));
    }
    return out;
}

namespace {

template <typename S>
NormStats stats_of(std::span<const std::complex<S>> values) {
    if (values.empty()) throw InvalidInput("normalize: empty window");
    cplx sum{0.0, 0.0};
    for (const auto& v : values) sum += cplx(v);
    const cplx mu = sum / static_cast<double>(values.size());
    double sq = 0.0;
    for (const auto& v : values) sq += std::norm(cplx(v) - mu);
    const double sigma = std::sqrt(sq / (2.0 * static_cast<double>(values.size())));
    if (!(sigma >= 1e-12)) throw DegenerateSample("normalize: window is constant (sigma below 1e-12)");
    return {mu, sigma};
}

}  // namespace

NormStats compute_stats(std::span<const std::complex<double>> values) { return stats_of(values); }
NormStats compute_stats(std::span<const std::complex<float>> values) { return stats_of(values); }

Normalized normalize(const TableSeries<double>& s) {
    return normalize(s, compute_stats(std::span<const std::complex<double>>(s.values)));
}

Normalized normalize(const TableSeries<double>& s, const NormStats& stats) {
    if (!(stats.sigma >= 1e-12)) throw DegenerateSample("normalize: sigma below 1e-12");
    Normalized out{TableSeries<double>(s.steps, s.n, s.m), stats};
    for (std::size_t i = 0; i < s.values.size(); ++i) out.values.values[i] = (s.values[i] - stats.mu) / stats.sigma;
    return out;
}

TableSeries<double> denormalize(const TableSeries<double>& s, const NormStats& stats) {
    TableSeries<double> out(s.steps, s.n, s.m);
    for (std::size_t i = 0; i < s.values.size(); ++i) out.values[i] = s.values[i] * stats.sigma + stats.mu;
    return out;
}

Split split_dataset(std::size_t count, double train_fraction, std::uint64_t seed) {
    if (count == 0) throw InvalidInput("split_dataset: no samples");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InvalidInput("split_dataset: fraction outside (0,1)");
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(seed, "split"));
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_train = static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(count) - 1e-9));
    n_train = std::min(n_train, count);
    Split s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    return s;
}

Dataset generate_dataset(const ScenarioConfig& cfg, int threads) {
    cfg.validate();
    const int jobs = cfg.ue_count * cfg.segments_per_ue;
    std::vector<std::vector<WindowSample>> per_job(static_cast<std::size_t>(jobs));
    parallel_for(static_cast<std::size_t>(jobs), threads, [&](std::size_t job) {
        const int ue_idx = static_cast<int>(job) / cfg.segments_per_ue;
        const int seg = static_cast<int>(job) % cfg.segments_per_ue;
        const UeRealization ue = generate_trajectory(cfg, ue_idx, seg);
        const double period = ue.t0_slots * cfg.slot_duration_s;
        std::vector<double> t_grid(static_cast<std::size_t>(cfg.samples_per_segment));
        for (int k = 0; k < cfg.samples_per_segment; ++k) t_grid[static_cast<std::size_t>(k)] = k * period;
        const TableStack stack = sample_tables(ue.channel, t_grid, 0);
        WindowMeta meta{ue_idx, seg, 0, ue.t0_slots, period, ue.speed_kmh};
        per_job[job] = make_windows(stack, cfg.history, cfg.horizon, meta);
    });

    Dataset ds;
    ds.config = cfg;
    for (auto& v : per_job)
        for (auto& w : v) ds.samples.push_back(std::move(w));
    if (ds.samples.empty()) throw InvalidInput("scenario produces no windows (samples_per_segment < T + F)");
    ds.split = split_dataset(ds.samples.size(), cfg.train_fraction, cfg.seed);
    return ds;
}

DatasetFiles save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    if (ds.samples.empty()) throw InvalidInput("save_dataset: empty dataset");
    const auto& first = ds.samples.front();
    const int t = first.history.steps;
    const int f = first.future.steps;
    const int n = first.history.n;
    const int m = first.history.m;

    std::vector<unsigned char> blob;
    blob.reserve(ds.samples.size() * static_cast<std::size_t>(t + f) * first.history.table_size() * 8);
    nlohmann::json meta = nlohmann::json::array();
    for (const auto& w : ds.samples) {
        if (w.history.steps != t || w.future.steps != f || w.history.n != n || w.history.m != m)
            throw InvalidInput("save_dataset: samples differ in shape");
        for (const auto* series : {&w.history, &w.future})
            for (const auto& v : series->values) {
                io::append_le_f32(blob, v.real());
                io::append_le_f32(blob, v.imag());
            }
        meta.push_back({{"ue", w.meta.ue},
                        {"segment", w.meta.segment},
                        {"t_start", w.meta.t_start},
                        {"t0_slots", w.meta.t0_slots},
                        {"sample_period_s", w.meta.sample_period_s},
                        {"speed_kmh", w.meta.speed_kmh},
                        {"reference", {w.reference.real(), w.reference.imag()}},
                        {"mu", {w.stats.mu.real(), w.stats.mu.imag()}},
                        {"sigma", w.stats.sigma}});
    }
    const std::string hash = io::sha256_hex(blob);
    std::filesystem::create_directories(dir);
    DatasetFiles files;
    files.blob = dir / ("dataset-" + hash.substr(0, 16) + ".f32");
    files.sidecar = dir / ("dataset-" + hash.substr(0, 16) + ".json");
    files.blob_sha256 = hash;

    nlohmann::json side;
    side["format"] = "fluidport-dataset";
    side["version"] = 1;
    side["config"] = scenario_to_json(ds.config);
    side["seed"] = ds.config.seed;
    side["dtype"] = "float32-le";
    side["dimension_order"] = {"sample", "time", "n", "m", "re_im"};
    side["shape"] = {ds.samples.size(), t + f, n, m, 2};
    side["history"] = t;
    side["horizon"] = f;
    side["counts"] = {{"samples", ds.samples.size()}, {"train", ds.split.train.size()}, {"test", ds.split.test.size()}};
    side["split"] = {{"train", ds.split.train}, {"test", ds.split.test}};
    side["blob"] = files.blob.filename().string();
    side["blob_sha256"] = hash;
    side["samples"] = std::move(meta);

    io::write_bytes(files.blob, blob);
    io::write_text(files.sidecar, side.dump(1) + "\n");
    return files;
}

Dataset load_dataset(const std::filesystem::path& sidecar) {
    const auto side = nlohmann::json::parse(io::read_text(sidecar));
    if (side.value("format", "") != "fluidport-dataset") throw InvalidInput(sidecar.string() + ": not a dataset sidecar");
    const auto blob_path = sidecar.parent_path() / side.at("blob").get<std::string>();
    const auto blob = io::read_bytes(blob_path);
    if (io::sha256_hex(blob) != side.at("blob_sha256").get<std::string>())
        throw InvalidInput(blob_path.string() + ": content hash mismatch");

    const auto shape = side.at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 5 || shape[4] != 2) throw InvalidInput("dataset: unexpected tensor shape");
    const int t = side.at("history").get<int>();
    const int f = side.at("horizon").get<int>();
    const int n = static_cast<int>(shape[2]);
    const int m = static_cast<int>(shape[3]);
    if (static_cast<std::size_t>(t + f) != shape[1]) throw InvalidInput("dataset: time axis does not match T + F");
    const std::size_t per_sample = shape[1] * shape[2] * shape[3] * 2 * 4;
    if (blob.size() != shape[0] * per_sample) throw InvalidInput("dataset: blob size does not match shape");

    Dataset ds;
    ds.config = scenario_from_json(side.at("config"));
    const auto& meta = side.at("samples");
    if (meta.size() != shape[0]) throw InvalidInput("dataset: sample metadata count mismatch");
    ds.samples.resize(shape[0]);
    const unsigned char* p = blob.data();
    for (std::size_t s = 0; s < shape[0]; ++s) {
        auto& w = ds.samples[s];
        w.history = TableSeries<float>(t, n, m);
        w.future = TableSeries<float>(f, n, m);
        for (auto* series : {&w.history, &w.future})
            for (auto& v : series->values) {
                v = {io::read_le_f32(p), io::read_le_f32(p + 4)};
                p += 8;
            }
        const auto& j = meta[s];
        w.meta = {j.at("ue").get<int>(),        j.at("segment").get<int>(),
                  j.at("t_start").get<int>(),   j.at("t0_slots").get<int>(),
                  j.at("sample_period_s").get<double>(), j.at("speed_kmh").get<double>()};
        w.reference = {j.at("reference")[0].get<float>(), j.at("reference")[1].get<float>()};
        w.stats.mu = {j.at("mu")[0].get<double>(), j.at("mu")[1].get<double>()};
        w.stats.sigma = j.at("sigma").get<double>();
    }
    ds.split.train = side.at("split").at("train").get<std::vector<std::size_t>>();
    ds.split.test = side.at("split").at("test").get<std::vector<std::size_t>>();
    return ds;
}

}  // namespace fluidport
