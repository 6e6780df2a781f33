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
#include <limits>
#include <sstream>

#include "fluidport/checkpoint.hpp"
#include "fluidport/training.hpp"

using namespace fluidport;

namespace {

ScenarioConfig scenario() {
    ScenarioConfig c;
    c.ports_y = 2;
    c.ports_z = 3;
    c.aperture_y_wl = 0.4;
    c.aperture_z_wl = 1.2;
    c.path_count = 5;
    c.ue_count = 2;
    c.segments_per_ue = 3;
    c.samples_per_segment = 12;
    c.history = 3;
    c.horizon = 2;
    c.slot_duration_s = 4e-6;
    return c;
}

net::NetConfig net_for(const ScenarioConfig& s) {
    net::NetConfig n;
    n.d_model = 16;
    n.heads = 2;
    n.layers = 1;
    n.backbone_heads = 2;
    n.lora_rank = 2;
    n.grid_n = s.ports_z;
    n.grid_m = s.ports_y;
    n.history = s.history;
    n.horizon = s.horizon;
    return n;
}

TrainConfig train_cfg(int epochs) {
    TrainConfig t;
    t.epochs = epochs;
    t.batch_size = 8;
    t.peak_lr = 3e-3;
    t.seed = 5;
    return t;
}

}  // namespace

TEST_CASE("learning-rate schedule endpoints") {
    TrainConfig cfg;
    cfg.peak_lr = 1e-3;
    const auto s = LrSchedule::from(cfg, 200);
    CHECK(s.warmup == 10);
    CHECK(lr_at(0, s) == 0.0);
    CHECK(lr_at(1, s) == doctest::Approx(1e-4));
    CHECK(lr_at(10, s) == doctest::Approx(1e-3));
    CHECK(lr_at(200, s) == doctest::Approx(1e-5));
    CHECK(lr_at(105, s) == doctest::Approx(1e-5 + (1e-3 - 1e-5) * 0.5));
    for (long k = 11; k < 200; ++k) CHECK(lr_at(k, s) <= lr_at(k - 1, s));
}

TEST_CASE("loss identities") {
    TableSeries<double> s(2, 2, 2);
    for (std::size_t k = 0; k < s.values.size(); ++k) s.values[k] = {double(k) + 1.0, -0.5 * double(k)};
    TableSeries<double> zero(2, 2, 2), twice = s;
    for (auto& v : twice.values) v *= 2.0;
    CHECK(loss_nmse(s, s) == 0.0);
    CHECK(loss_nmse(zero, s) == doctest::Approx(1.0));
    CHECK(loss_nmse(twice, s) == doctest::Approx(1.0));

    const std::vector<cplx> h{{1, 2}, {3, -1}}, z{{0, 0}, {0, 0}};
    CHECK(validate_port(h, h) == 0.0);
    CHECK(validate_port(z, h) == doctest::Approx(1.0));
    CHECK_THROWS_AS(validate_port(h, z), DegenerateSample);
}

TEST_CASE("training lowers the loss and leaves frozen tensors alone") {
    const auto sc = scenario();
    const Dataset ds = generate_dataset(sc);
    net::PortLlm<float> model(net_for(sc), 1);
    std::vector<std::string> before;
    for (std::size_t k = 0; k < model.params().infos().size(); ++k) before.push_back(tensor_sha256(model.params(), int(k)));
    const double start = mean_table_nmse(model, ds, ds.split.train);
    AdamState st;
    const auto log = train(model, ds, train_cfg(4), st);
    CHECK(log.size() == 4);
    CHECK(st.epochs_done == 4);
    CHECK(mean_table_nmse(model, ds, ds.split.train) < start);
    for (std::size_t k = 0; k < before.size(); ++k) {
        const bool same = tensor_sha256(model.params(), int(k)) == before[k];
        CHECK(same == model.params().infos()[k].frozen);
    }
}

TEST_CASE("identical seeds give identical logs; resume continues the same run") {
    const auto sc = scenario();
    const Dataset ds = generate_dataset(sc);

    net::PortLlm<float> a(net_for(sc), 2), b(net_for(sc), 2);
    AdamState sa, sb;
    const auto la = train(a, ds, train_cfg(3), sa);
    const auto lb = train(b, ds, train_cfg(3), sb);
    std::ostringstream ca, cb;
    write_metrics_csv(ca, la);
    write_metrics_csv(cb, lb);
    CHECK(ca.str() == cb.str());
    CHECK(a.params().data() == b.params().data());

    // stop after one epoch, checkpoint, reload, finish
    net::PortLlm<float> c(net_for(sc), 2);
    AdamState sc1;
    TrainHooks stop;
    const auto dir = std::filesystem::temp_directory_path() / "fluidport_resume_test";
    std::filesystem::remove_all(dir);
    stop.on_epoch = [&](const EpochRecord& r, const net::PortLlm<float>& m, const AdamState& s) {
        if (r.epoch == 1) save_checkpoint(dir / "ck", m, s, {r});
    };
    train(c, ds, train_cfg(3), sc1, stop);
    Checkpoint ck = load_checkpoint(dir / "ck.json");
    CHECK(ck.adam.epochs_done == 1);
    const auto rest = train(*ck.model, ds, train_cfg(3), ck.adam);
    REQUIRE(rest.size() == 2);
    CHECK(rest.front().epoch == 2);
    CHECK(rest.back().train_nmse == la.back().train_nmse);
    CHECK(ck.model->params().data() == a.params().data());
    std::filesystem::remove_all(dir);
}

TEST_CASE("non-finite values abort training") {
    const auto sc = scenario();
    const Dataset ds = generate_dataset(sc);
    net::PortLlm<float> model(net_for(sc), 3);
    model.params().mat(model.ids().out_b)(0, 0) = std::numeric_limits<float>::quiet_NaN();
    AdamState st;
    CHECK_THROWS_AS(train(model, ds, train_cfg(1), st), NumericalAbort);
}

TEST_CASE("port validation picks the port closest to the reference") {
    WindowSample w;
    w.history = TableSeries<float>(1, 2, 2);
    w.future = TableSeries<float>(2, 2, 2);
    w.reference = {1.0f, 0.0f};
    w.future.values = {{0, 0}, {0.9f, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {1, 0}};
    TableSeries<double> s_hat(2, 2, 2);
    s_hat.values = {{0, 0}, {1, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}, {1, 0}};
    const auto v = validate_window(s_hat, w);
    REQUIRE(v.ports.size() == 2);
    CHECK(v.ports[0] == PortIndex{0, 1});
    CHECK(v.ports[1] == PortIndex{1, 1});
    CHECK(v.ratios[0] == doctest::Approx(0.01).epsilon(1e-6));
    CHECK(v.ratios[1] == 0.0);
    CHECK(v.mean() == doctest::Approx(0.005).epsilon(1e-6));
}

TEST_CASE("metrics CSV layout") {
    std::ostringstream os;
    const std::vector<EpochRecord> log{{1, 10, 0.001, 0.5, 0.25}};
    write_metrics_csv(os, log);
    CHECK(os.str() == "epoch,step,lr,train_nmse,val_nmse_v\n1,10,0.001,0.5,0.25\n");
}
