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

#include "fluidport/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "fluidport/io.hpp"
#include "fluidport/parallel.hpp"

namespace fluidport {

void TrainConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) { throw InvalidInput("train." + field + ": " + why); };
    if (epochs < 1) fail("epochs", "must be >= 1");
    if (batch_size < 1) fail("batch_size", "must be >= 1");
    if (!(peak_lr > 0.0)) fail("peak_lr", "must be positive");
    if (!(warmup_fraction >= 0.0 && warmup_fraction < 1.0)) fail("warmup_fraction", "must lie in [0, 1)");
    if (!(min_lr_fraction >= 0.0 && min_lr_fraction <= 1.0)) fail("min_lr_fraction", "must lie in [0, 1]");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) fail("beta1", "must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) fail("beta2", "must lie in [0, 1)");
    if (!(eps > 0.0)) fail("eps", "must be positive");
    if (checkpoint_every < 1) fail("checkpoint_every", "must be >= 1");
}

LrSchedule LrSchedule::from(const TrainConfig& cfg, long total_steps) {
    LrSchedule s;
    s.peak = cfg.peak_lr;
    s.min = cfg.peak_lr * cfg.min_lr_fraction;
    s.total = std::max(1L, total_steps);
    s.warmup = std::lround(cfg.warmup_fraction * static_cast<double>(s.total));
    s.warmup = std::clamp(s.warmup, 0L, s.total - 1);
    return s;
}

double LrSchedule::at(long step) const {
    if (step <= 0) return warmup > 0 ? 0.0 : peak;
    if (step < warmup) return peak * static_cast<double>(step) / static_cast<double>(warmup);
    if (step >= total) return min;
    const double progress = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
    return min + (peak - min) * 0.5 * (1.0 + std::cos(kPi * progress));
}

double lr_at(long step, const LrSchedule& schedule) { return schedule.at(step); }

double loss_nmse(const TableSeries<double>& s_hat, const TableSeries<double>& s) { return net::table_nmse(s_hat, s); }
double loss_nmse(const TableSeries<double>& s_hat, const TableSeries<float>& s) { return net::table_nmse(s_hat, s); }

double validate_port(std::span<const cplx> h, std::span<const cplx> h_ref) {
    if (h.size() != h_ref.size()) throw InvalidInput("validate_port: channel lengths differ");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i) {
        num += std::norm(h_ref[i] - h[i]);
        den += std::norm(h_ref[i]);
    }
    if (!(den > 0.0)) throw DegenerateSample("validate_port: reference channel has zero norm");
    return num / den;
}

double WindowValidation::mean() const {
    if (ratios.empty()) return 0.0;
    return std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(ratios.size());
}

WindowValidation validate_window(const TableSeries<double>& s_hat, const WindowSample& w) {
    if (s_hat.steps != w.future.steps || s_hat.n != w.future.n || s_hat.m != w.future.m)
        throw InvalidInput("validate_window: prediction shape does not match window");
    const ChannelTable h_ref = ChannelTable::Constant(w.future.n, w.future.m, cplx(w.reference));
    WindowValidation out;
    for (int f = 0; f < s_hat.steps; ++f) {
        const PortIndex p = select_port_single(s_hat.table(f), h_ref);
        const cplx h = cplx(w.future.at(f, p.n, p.m));
        const cplx r = cplx(w.reference);
        out.ports.push_back(p);
        out.ratios.push_back(validate_port(std::span<const cplx>(&h, 1), std::span<const cplx>(&r, 1)));
    }
    return out;
}

double mean_table_nmse(const net::PortLlm<float>& model, const Dataset& data, std::span<const std::size_t> idx,
                       int threads) {
    if (idx.empty()) return 0.0;
    std::vector<double> r(idx.size());
    parallel_for(idx.size(), threads, [&](std::size_t k) {
        const auto& w = data.samples[idx[k]];
        r[k] = loss_nmse(model.forward(w.history), w.future);
    });
    return std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
}

double mean_port_validation(const net::PortLlm<float>& model, const Dataset& data, std::span<const std::size_t> idx,
                            int threads) {
    if (idx.empty()) return 0.0;
    std::vector<double> r(idx.size());
    parallel_for(idx.size(), threads, [&](std::size_t k) {
        const auto& w = data.samples[idx[k]];
        r[k] = validate_window(model.forward(w.history), w).mean();
    });
    return std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
}

namespace {

constexpr std::size_t kGradChunks = 4;

void adam_update(net::PortLlm<float>& model, const std::vector<float>& grad, AdamState& st, const TrainConfig& cfg,
                 double lr) {
    auto& params = model.params();
    ++st.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(st.step));
    const auto b1 = static_cast<float>(cfg.beta1);
    const auto b2 = static_cast<float>(cfg.beta2);
    for (const auto& info : params.infos()) {
        if (info.frozen) continue;
        float* w = params.data().data() + info.offset;
        const auto g0 = static_cast<std::size_t>(info.grad_offset);
        for (std::size_t k = 0; k < info.size(); ++k) {
            const float g = grad[g0 + k];
            float& m = st.m[g0 + k];
            float& v = st.v[g0 + k];
            m = b1 * m + (1.0f - b1) * g;
            v = b2 * v + (1.0f - b2) * g * g;
            const double mhat = m / bc1;
            const double vhat = v / bc2;
            w[k] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    }
}

}  // namespace

std::vector<EpochRecord> train(net::PortLlm<float>& model, const Dataset& data, const TrainConfig& cfg,
                               AdamState& state, const TrainHooks& hooks) {
    cfg.validate();
    if (data.split.train.empty()) throw InvalidInput("train: empty training split");
    const std::size_t n_trainable = model.params().trainable_count();
    if (state.m.size() != n_trainable) {
        state.m.assign(n_trainable, 0.0f);
        state.v.assign(n_trainable, 0.0f);
        state.step = 0;
        state.epochs_done = 0;
    }

    const std::size_t n_train = data.split.train.size();
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    const long steps_per_epoch = static_cast<long>((n_train + batch - 1) / batch);
    const LrSchedule schedule = LrSchedule::from(cfg, steps_per_epoch * cfg.epochs);

    std::vector<EpochRecord> log;
    std::vector<std::vector<float>> chunk_grads(kGradChunks);
    std::vector<double> chunk_loss(kGradChunks);
    std::vector<float> grad(n_trainable);

    for (int epoch = state.epochs_done; epoch < cfg.epochs; ++epoch) {
        std::vector<std::size_t> order(data.split.train);
        std::mt19937_64 rng(derive_seed(cfg.seed, "shuffle", static_cast<std::uint64_t>(epoch)));
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        double lr = 0.0;
        for (std::size_t start = 0; start < n_train; start += batch) {
            const std::size_t count = std::min(batch, n_train - start);
            const std::size_t chunks = std::min(kGradChunks, count);
            const float weight = 1.0f / static_cast<float>(count);
            parallel_for(chunks, cfg.threads, [&](std::size_t c) {
                auto& g = chunk_grads[c];
                g.assign(n_trainable, 0.0f);
                double l = 0.0;
                for (std::size_t k = c; k < count; k += chunks)
                    l += model.loss_and_gradient(data.samples[order[start + k]], g, weight);
                chunk_loss[c] = l;
            });
            std::fill(grad.begin(), grad.end(), 0.0f);
            double batch_loss = 0.0;
            for (std::size_t c = 0; c < chunks; ++c) {
                batch_loss += chunk_loss[c];
                for (std::size_t k = 0; k < n_trainable; ++k) grad[k] += chunk_grads[c][k];
            }
            double norm2 = 0.0;
            for (float g : grad) norm2 += static_cast<double>(g) * g;
            if (!std::isfinite(batch_loss) || !std::isfinite(norm2))
                throw NumericalAbort("non-finite loss or gradient at epoch " + std::to_string(epoch + 1) + ", step " +
                                     std::to_string(state.step + 1));
            const double norm = std::sqrt(norm2);
            if (cfg.clip_norm > 0.0 && norm > cfg.clip_norm) {
                const auto s = static_cast<float>(cfg.clip_norm / norm);
                for (float& g : grad) g *= s;
            }
            lr = schedule.at(state.step + 1);
            adam_update(model, grad, state, cfg, lr);
            loss_sum += batch_loss;
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.step = state.step;
        rec.lr = lr;
        rec.train_nmse = loss_sum / static_cast<double>(n_train);
        rec.val_nmse_v = data.split.test.empty() ? 0.0 : mean_port_validation(model, data, data.split.test, cfg.threads);
        state.epochs_done = epoch + 1;
        log.push_back(rec);
        if (hooks.on_epoch) hooks.on_epoch(rec, model, state);
    }
    return log;
}

void write_metrics_csv(std::ostream& os, std::span<const EpochRecord> log) {
    os << "epoch,step,lr,train_nmse,val_nmse_v\n";
    for (const auto& r : log)
        os << r.epoch << ',' << r.step << ',' << io::fmt_double(r.lr) << ',' << io::fmt_double(r.train_nmse) << ','
           << io::fmt_double(r.val_nmse_v) << '\n';
}

}  // namespace fluidport
