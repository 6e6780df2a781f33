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

#include "fluidport/net/portllm.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <optional>
#include <random>
#include <string>

#include "json.hpp"

#include "fluidport/io.hpp"

namespace fluidport::net {

void NetConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& why) { throw InvalidInput("net." + field + ": " + why); };
    if (d_model < 1) fail("d_model", "must be >= 1");
    if (heads < 1 || d_model % heads != 0) fail("heads", "must divide d_model");
    if (backbone_heads < 1 || d_model % backbone_heads != 0) fail("backbone_heads", "must divide d_model");
    if (layers < 0) fail("layers", "must be >= 0");
    if (lora_rank < 1) fail("lora_rank", "must be >= 1");
    if (lora_rank * 8 > d_model) fail("lora_rank", "must satisfy r <= d_model / 8");
    if (history < 1) fail("history", "must be >= 1");
    if (horizon < 1) fail("horizon", "must be >= 1");
    if (grid_n < 1 || grid_m < 1) fail("grid", "dimensions must be >= 1");
    if (horizon > n_ctx) fail("horizon", "exceeds the backbone positional capacity n_ctx");
    if (mlp_ratio < 1) fail("mlp_ratio", "must be >= 1");
}

std::size_t NetConfig::expected_trainable() const {
    const std::size_t d = static_cast<std::size_t>(d_model);
    const std::size_t nm = static_cast<std::size_t>(ports());
    const std::size_t embed_linears = 2 * (nm * d + d);
    const std::size_t embed_attention = 3 * d * d;
    const std::size_t resize = static_cast<std::size_t>(horizon) * 2 * static_cast<std::size_t>(history);
    const std::size_t out_head = 2 * nm * d + 2 * nm;
    const std::size_t lora = static_cast<std::size_t>(layers) * 2 * static_cast<std::size_t>(lora_rank) * (d + d);
    return embed_linears + embed_attention + resize + out_head + lora;
}

std::size_t NetConfig::expected_frozen() const {
    const std::size_t d = static_cast<std::size_t>(d_model);
    const std::size_t hidden = static_cast<std::size_t>(mlp_ratio) * d;
    const std::size_t per_block = 2 * 2 * d            // ln_1, ln_2
                                  + 4 * (d * d + d)    // q, k, v, proj
                                  + (hidden * d + hidden) + (d * hidden + d);
    return static_cast<std::size_t>(layers) * per_block + static_cast<std::size_t>(n_ctx) * d + 2 * d;
}

template <typename T>
PortLlm<T>::PortLlm(const NetConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    const int d = cfg_.d_model;
    const int nm = cfg_.ports();
    const int r = cfg_.lora_rank;
    const int hid = cfg_.mlp_ratio * d;
    auto& p = params_;

    ids_.emb_re_w = p.add("embed.re.weight", d, nm, false);
    ids_.emb_re_b = p.add("embed.re.bias", 1, d, false);
    ids_.emb_im_w = p.add("embed.im.weight", d, nm, false);
    ids_.emb_im_b = p.add("embed.im.bias", 1, d, false);
    ids_.mha_wq = p.add("embed.attn.wq", d, d, false);
    ids_.mha_wk = p.add("embed.attn.wk", d, d, false);
    ids_.mha_wv = p.add("embed.attn.wv", d, d, false);
    ids_.resize_w = p.add("resize.weight", cfg_.horizon, 2 * cfg_.history, false);
    ids_.wpe = p.add("backbone.wpe", cfg_.n_ctx, d, true);
    for (int l = 0; l < cfg_.layers; ++l) {
        const std::string pre = "backbone.h." + std::to_string(l) + ".";
        typename Ids::Block b{};
        b.ln1_g = p.add(pre + "ln_1.weight", 1, d, true);
        b.ln1_b = p.add(pre + "ln_1.bias", 1, d, true);
        b.q_w = p.add(pre + "attn.q.weight", d, d, true);
        b.q_b = p.add(pre + "attn.q.bias", 1, d, true);
        b.q_a = p.add(pre + "attn.q.lora_A", r, d, false);
        b.q_bm = p.add(pre + "attn.q.lora_B", d, r, false);
        b.k_w = p.add(pre + "attn.k.weight", d, d, true);
        b.k_b = p.add(pre + "attn.k.bias", 1, d, true);
        b.v_w = p.add(pre + "attn.v.weight", d, d, true);
        b.v_b = p.add(pre + "attn.v.bias", 1, d, true);
        b.v_a = p.add(pre + "attn.v.lora_A", r, d, false);
        b.v_bm = p.add(pre + "attn.v.lora_B", d, r, false);
        b.proj_w = p.add(pre + "attn.c_proj.weight", d, d, true);
        b.proj_b = p.add(pre + "attn.c_proj.bias", 1, d, true);
        b.ln2_g = p.add(pre + "ln_2.weight", 1, d, true);
        b.ln2_b = p.add(pre + "ln_2.bias", 1, d, true);
        b.fc_w = p.add(pre + "mlp.c_fc.weight", hid, d, true);
        b.fc_b = p.add(pre + "mlp.c_fc.bias", 1, hid, true);
        b.fcp_w = p.add(pre + "mlp.c_proj.weight", d, hid, true);
        b.fcp_b = p.add(pre + "mlp.c_proj.bias", 1, d, true);
        ids_.blocks.push_back(b);
    }
    ids_.lnf_g = p.add("backbone.ln_f.weight", 1, d, true);
    ids_.lnf_b = p.add("backbone.ln_f.bias", 1, d, true);
    ids_.out_w = p.add("head.weight", 2 * nm, d, false);
    ids_.out_b = p.add("head.bias", 1, 2 * nm, false);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    auto fill_normal = [&](int id, double std) {
        auto m = p.mat(id);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(std * gauss(rng));
    };
    // default trainable Linear init: U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases
    auto fill_uniform = [&](int id, int fan_in) {
        auto m = p.mat(id);
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(bound * unit(rng));
    };
    auto fill_const = [&](int id, double v) { p.mat(id).setConstant(static_cast<T>(v)); };

    fill_uniform(ids_.emb_re_w, nm);
    fill_uniform(ids_.emb_re_b, nm);
    fill_uniform(ids_.emb_im_w, nm);
    fill_uniform(ids_.emb_im_b, nm);
    fill_uniform(ids_.mha_wq, d);
    fill_uniform(ids_.mha_wk, d);
    fill_uniform(ids_.mha_wv, d);
    fill_uniform(ids_.resize_w, 2 * cfg_.history);
    fill_normal(ids_.wpe, 0.01);
    const double resid_std = 0.02 / std::sqrt(2.0 * std::max(1, cfg_.layers));
    for (const auto& b : ids_.blocks) {
        fill_const(b.ln1_g, 1.0);
        fill_const(b.ln1_b, 0.0);
        fill_normal(b.q_w, 0.02);
        fill_const(b.q_b, 0.0);
        fill_normal(b.q_a, 1.0 / r);
        fill_const(b.q_bm, 0.0);
        fill_normal(b.k_w, 0.02);
        fill_const(b.k_b, 0.0);
        fill_normal(b.v_w, 0.02);
        fill_const(b.v_b, 0.0);
        fill_normal(b.v_a, 1.0 / r);
        fill_const(b.v_bm, 0.0);
        fill_normal(b.proj_w, resid_std);
        fill_const(b.proj_b, 0.0);
        fill_const(b.ln2_g, 1.0);
        fill_const(b.ln2_b, 0.0);
        fill_normal(b.fc_w, 0.02);
        fill_const(b.fc_b, 0.0);
        fill_normal(b.fcp_w, resid_std);
        fill_const(b.fcp_b, 0.0);
    }
    fill_const(ids_.lnf_g, 1.0);
    fill_const(ids_.lnf_b, 0.0);
    fill_uniform(ids_.out_w, d);
    fill_uniform(ids_.out_b, d);
}

template <typename T>
Preprocessed<T> PortLlm<T>::preprocess(const TableSeries<double>& history) const {
    if (history.steps != cfg_.history || history.n != cfg_.grid_n || history.m != cfg_.grid_m)
        throw InvalidInput("preprocess: history shape (" + std::to_string(history.steps) + "," +
                           std::to_string(history.n) + "," + std::to_string(history.m) + ") does not match model");
    const Normalized norm = normalize(history);
    Preprocessed<T> out;
    out.stats = norm.stats;
    const int nm = cfg_.ports();
    out.real.resize(cfg_.history, nm);
    out.imag.resize(cfg_.history, nm);
    for (int k = 0; k < cfg_.history; ++k)
        for (int j = 0; j < nm; ++j) {
            const auto v = norm.values.values[static_cast<std::size_t>(k * nm + j)];
            out.real(k, j) = static_cast<T>(v.real());
            out.imag(k, j) = static_cast<T>(v.imag());
        }
    return out;
}

template <typename T>
Mat<T> PortLlm<T>::embed_stream(const Mat<T>& x, int w_id, int b_id, StreamCache<T>* cache) const {
    StreamCache<T> local;
    StreamCache<T>& c = cache ? *cache : local;
    c.x = x;
    c.e = linear<T>(x, params_.mat(w_id), params_.mat(b_id));
    c.q = linear_nobias<T>(c.e, params_.mat(ids_.mha_wq));
    c.k = linear_nobias<T>(c.e, params_.mat(ids_.mha_wk));
    c.v = linear_nobias<T>(c.e, params_.mat(ids_.mha_wv));
    return attention<T>(c.q, c.k, c.v, cfg_.heads, false, c.attn);
}

template <typename T>
Mat<T> PortLlm<T>::embed(const Preprocessed<T>& pre, ForwardCache<T>* cache) const {
    if (pre.real.rows() != cfg_.history || pre.real.cols() != cfg_.ports() || pre.imag.rows() != pre.real.rows() ||
        pre.imag.cols() != pre.real.cols())
        throw InvalidInput("embed: input shape does not match model");
    const Mat<T> r = embed_stream(pre.real, ids_.emb_re_w, ids_.emb_re_b, cache ? &cache->re : nullptr);
    const Mat<T> i = embed_stream(pre.imag, ids_.emb_im_w, ids_.emb_im_b, cache ? &cache->im : nullptr);
    Mat<T> tokens(2 * cfg_.history, cfg_.d_model);
    tokens.topRows(cfg_.history) = r;
    tokens.bottomRows(cfg_.history) = i;
    return tokens;
}

template <typename T>
Mat<T> PortLlm<T>::token_resize(const Mat<T>& tokens) const {
    if (tokens.rows() != 2 * cfg_.history || tokens.cols() != cfg_.d_model)
        throw InvalidInput("token_resize: expected 2T x d_model tokens");
    return params_.mat(ids_.resize_w) * tokens;
}

template <typename T>
Mat<T> PortLlm<T>::backbone_forward(const Mat<T>& x, ForwardCache<T>* cache) const {
    if (x.cols() != cfg_.d_model || x.rows() < 1 || x.rows() > cfg_.n_ctx)
        throw InvalidInput("backbone_forward: sequence shape does not fit the backbone");
    const auto len = x.rows();
    Mat<T> h = x + params_.mat(ids_.wpe).topRows(len);
    if (cache) {
        cache->h0 = h;
        cache->blocks.assign(ids_.blocks.size(), BlockCache<T>{});
    }
    for (std::size_t l = 0; l < ids_.blocks.size(); ++l) {
        const auto& b = ids_.blocks[l];
        BlockCache<T> local;
        BlockCache<T>& c = cache ? cache->blocks[l] : local;
        c.x_in = h;
        c.a = layer_norm<T>(h, params_.mat(b.ln1_g), params_.mat(b.ln1_b), c.ln1);
        c.q = linear<T>(c.a, params_.mat(b.q_w), params_.mat(b.q_b));
        c.k = linear<T>(c.a, params_.mat(b.k_w), params_.mat(b.k_b));
        c.v = linear<T>(c.a, params_.mat(b.v_w), params_.mat(b.v_b));
        if (cfg_.lora_enabled) {
            c.u_q = c.a * params_.mat(b.q_a).transpose();
            c.q += c.u_q * params_.mat(b.q_bm).transpose();
            c.u_v = c.a * params_.mat(b.v_a).transpose();
            c.v += c.u_v * params_.mat(b.v_bm).transpose();
        }
        c.attn_out = attention<T>(c.q, c.k, c.v, cfg_.backbone_heads, true, c.attn);
        c.x_mid = h + linear<T>(c.attn_out, params_.mat(b.proj_w), params_.mat(b.proj_b));
        c.b = layer_norm<T>(c.x_mid, params_.mat(b.ln2_g), params_.mat(b.ln2_b), c.ln2);
        c.fc_pre = linear<T>(c.b, params_.mat(b.fc_w), params_.mat(b.fc_b));
        c.fc_act = gelu<T>(c.fc_pre);
        h = c.x_mid + linear<T>(c.fc_act, params_.mat(b.fcp_w), params_.mat(b.fcp_b));
    }
    LnCache<T> lnf_local;
    if (cache) cache->pre_lnf = h;
    Mat<T> out = layer_norm<T>(h, params_.mat(ids_.lnf_g), params_.mat(ids_.lnf_b), cache ? cache->lnf : lnf_local);
    if (cache) cache->hidden = out;
    return out;
}

template <typename T>
Mat<T> PortLlm<T>::head(const Mat<T>& hidden) const {
    return linear<T>(hidden, params_.mat(ids_.out_w), params_.mat(ids_.out_b));
}

template <typename T>
TableSeries<double> PortLlm<T>::project_output(const Mat<T>& y, const NormStats& stats) const {
    const int nm = cfg_.ports();
    if (y.cols() != 2 * nm) throw InvalidInput("project_output: head width must be 2 N M");
    TableSeries<double> out(static_cast<int>(y.rows()), cfg_.grid_n, cfg_.grid_m);
    for (Eigen::Index f = 0; f < y.rows(); ++f)
        for (int j = 0; j < nm; ++j) {
            const double re = stats.sigma * static_cast<double>(y(f, j)) + stats.mu.real();
            const double im = stats.sigma * static_cast<double>(y(f, nm + j)) + stats.mu.imag();
            out.values[static_cast<std::size_t>(f * nm + j)] = {re, im};
        }
    return out;
}

template <typename T>
TableSeries<double> PortLlm<T>::forward(const TableSeries<double>& history, ForwardCache<T>* cache) const {
    const Preprocessed<T> pre = preprocess(history);
    Mat<T> tokens = embed(pre, cache);
    Mat<T> resized = token_resize(tokens);
    Mat<T> hidden = backbone_forward(resized, cache);
    Mat<T> y = head(hidden);
    auto out = project_output(y, pre.stats);
    if (cache) {
        cache->tokens = std::move(tokens);
        cache->resized = std::move(resized);
        cache->y = std::move(y);
        cache->stats = pre.stats;
    }
    return out;
}

template <typename T>
TableSeries<double> PortLlm<T>::forward(const TableSeries<float>& history, ForwardCache<T>* cache) const {
    return forward(history.template cast<double>(), cache);
}

template <typename T>
void PortLlm<T>::backward(const ForwardCache<T>& c, const Mat<T>& dy, std::vector<T>& grad) const {
    if (grad.size() != params_.trainable_count()) throw InvalidInput("backward: gradient buffer has wrong size");
    auto g = [&](int id) -> std::optional<MatMap<T>> {
        if (params_.frozen(id)) return std::nullopt;
        return params_.grad(id, grad);
    };
    auto ptr = [](std::optional<MatMap<T>>& o) { return o ? &*o : nullptr; };

    // head
    auto g_out_w = g(ids_.out_w);
    auto g_out_b = g(ids_.out_b);
    Mat<T> dh = linear_backward<T>(dy, c.hidden, params_.mat(ids_.out_w), ptr(g_out_w), ptr(g_out_b));
    dh = layer_norm_backward<T>(dh, c.lnf, params_.mat(ids_.lnf_g), nullptr, nullptr);

    // decoder blocks, frozen except LoRA factors
    for (std::size_t li = ids_.blocks.size(); li-- > 0;) {
        const auto& b = ids_.blocks[li];
        const auto& bc = c.blocks[li];
        Mat<T> dx_mid = dh;
        const Mat<T> d_act = linear_backward<T>(dh, bc.fc_act, params_.mat(b.fcp_w), nullptr, nullptr);
        const Mat<T> d_pre = gelu_backward<T>(d_act, bc.fc_pre);
        const Mat<T> d_b = linear_backward<T>(d_pre, bc.b, params_.mat(b.fc_w), nullptr, nullptr);
        dx_mid += layer_norm_backward<T>(d_b, bc.ln2, params_.mat(b.ln2_g), nullptr, nullptr);

        const Mat<T> d_attn = linear_backward<T>(dx_mid, bc.attn_out, params_.mat(b.proj_w), nullptr, nullptr);
        Mat<T> dq, dk, dv;
        attention_backward<T>(d_attn, bc.q, bc.k, bc.v, cfg_.backbone_heads, bc.attn, dq, dk, dv);
        Mat<T> da = dq * params_.mat(b.q_w) + dk * params_.mat(b.k_w) + dv * params_.mat(b.v_w);
        if (cfg_.lora_enabled) {
            auto lora = [&](const Mat<T>& dout, const Mat<T>& u, int a_id, int bm_id) {
                auto ga = g(a_id);
                auto gb = g(bm_id);
                if (gb) gb->noalias() += dout.transpose() * u;
                const Mat<T> du = dout * params_.mat(bm_id);
                if (ga) ga->noalias() += du.transpose() * bc.a;
                da.noalias() += du * params_.mat(a_id);
            };
            lora(dq, bc.u_q, b.q_a, b.q_bm);
            lora(dv, bc.u_v, b.v_a, b.v_bm);
        }
        dh = dx_mid + layer_norm_backward<T>(da, bc.ln1, params_.mat(b.ln1_g), nullptr, nullptr);
    }

    // positional embedding is frozen; dh is now d(resized)
    auto g_resize = g(ids_.resize_w);
    if (g_resize) g_resize->noalias() += dh * c.tokens.transpose();
    const Mat<T> dtokens = params_.mat(ids_.resize_w).transpose() * dh;

    auto g_wq = g(ids_.mha_wq);
    auto g_wk = g(ids_.mha_wk);
    auto g_wv = g(ids_.mha_wv);
    auto stream = [&](const StreamCache<T>& sc, const Mat<T>& dout, int w_id, int b_id) {
        Mat<T> dq, dk, dv;
        attention_backward<T>(dout, sc.q, sc.k, sc.v, cfg_.heads, sc.attn, dq, dk, dv);
        Mat<T> de = linear_backward<T>(dq, sc.e, params_.mat(ids_.mha_wq), ptr(g_wq), nullptr);
        de += linear_backward<T>(dk, sc.e, params_.mat(ids_.mha_wk), ptr(g_wk), nullptr);
        de += linear_backward<T>(dv, sc.e, params_.mat(ids_.mha_wv), ptr(g_wv), nullptr);
        auto gw = g(w_id);
        auto gb = g(b_id);
        if (gw) gw->noalias() += de.transpose() * sc.x;
        if (gb) gb->row(0) += de.colwise().sum();
    };
    stream(c.re, dtokens.topRows(cfg_.history), ids_.emb_re_w, ids_.emb_re_b);
    stream(c.im, dtokens.bottomRows(cfg_.history), ids_.emb_im_w, ids_.emb_im_b);
}

template <typename T>
double PortLlm<T>::loss_and_gradient(const WindowSample& sample, std::vector<T>& grad, T weight) const {
    ForwardCache<T> cache;
    const TableSeries<double> s_hat = forward(sample.history, &cache);
    const auto& target = sample.future;
    if (target.steps != s_hat.steps || target.n != s_hat.n || target.m != s_hat.m)
        throw InvalidInput("loss: prediction and target shapes differ");
    const double denom = squared_norm(target);
    if (!(denom > 0.0)) throw DegenerateSample("loss: target table has zero norm");

    const int nm = cfg_.ports();
    Mat<T> dy(cache.y.rows(), cache.y.cols());
    double num = 0.0;
    const double scale = 2.0 * cache.stats.sigma / denom;
    for (int f = 0; f < s_hat.steps; ++f)
        for (int j = 0; j < nm; ++j) {
            const auto idx = static_cast<std::size_t>(f * nm + j);
            const cplx diff = s_hat.values[idx] - cplx(target.values[idx]);
            num += std::norm(diff);
            dy(f, j) = static_cast<T>(scale * diff.real());
            dy(f, nm + j) = static_cast<T>(scale * diff.imag());
        }
    dy *= weight;
    backward(cache, dy, grad);
    return num / denom;
}

namespace {

struct SafeTensor {
    std::vector<std::size_t> shape;
    std::vector<float> data;
};

std::map<std::string, SafeTensor> read_safetensors(const std::filesystem::path& path) {
    const auto bytes = io::read_bytes(path);
    if (bytes.size() < 8) throw InvalidInput(path.string() + ": truncated safetensors file");
    std::uint64_t header_len = 0;
    for (int k = 0; k < 8; ++k) header_len |= static_cast<std::uint64_t>(bytes[static_cast<std::size_t>(k)]) << (8 * k);
    if (8 + header_len > bytes.size()) throw InvalidInput(path.string() + ": header exceeds file size");
    const auto header =
        nlohmann::json::parse(std::string(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(header_len)));
    const std::size_t base = 8 + header_len;
    std::map<std::string, SafeTensor> out;
    for (const auto& [name, info] : header.items()) {
        if (name == "__metadata__") continue;
        if (info.at("dtype").get<std::string>() != "F32")
            throw InvalidInput(path.string() + ": tensor " + name + " is not F32");
        SafeTensor t;
        t.shape = info.at("shape").get<std::vector<std::size_t>>();
        const auto off = info.at("data_offsets").get<std::vector<std::size_t>>();
        if (off.size() != 2 || off[1] < off[0] || base + off[1] > bytes.size())
            throw InvalidInput(path.string() + ": bad offsets for " + name);
        t.data.resize((off[1] - off[0]) / 4);
        for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] = io::read_le_f32(bytes.data() + base + off[0] + 4 * i);
        std::string key = name;
        if (key.rfind("transformer.", 0) == 0) key = key.substr(12);
        out.emplace(std::move(key), std::move(t));
    }
    return out;
}

}  // namespace

template <typename T>
int PortLlm<T>::import_gpt2_backbone(const std::filesystem::path& path) {
    const auto tensors = read_safetensors(path);
    const std::size_t d = static_cast<std::size_t>(cfg_.d_model);
    auto get = [&](const std::string& name, std::vector<std::size_t> shape) -> const SafeTensor& {
        const auto it = tensors.find(name);
        if (it == tensors.end()) throw InvalidInput(path.string() + ": missing tensor " + name);
        if (shape.size() == 2 && shape[0] == 0) shape[0] = it->second.shape.at(0);
        if (it->second.shape != shape) throw InvalidInput(path.string() + ": tensor " + name + " has unexpected shape");
        return it->second;
    };
    // Conv1D weights are stored [in, out]; ours are [out, in].
    auto load_conv = [&](int id, const SafeTensor& t, std::size_t col0) {
        auto m = params_.mat(id);
        const std::size_t width = t.shape[1];
        for (Eigen::Index o = 0; o < m.rows(); ++o)
            for (Eigen::Index i = 0; i < m.cols(); ++i)
                m(o, i) = static_cast<T>(t.data[static_cast<std::size_t>(i) * width + col0 + static_cast<std::size_t>(o)]);
    };
    auto load_vec = [&](int id, const SafeTensor& t, std::size_t off) {
        auto m = params_.mat(id);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(t.data[off + static_cast<std::size_t>(i)]);
    };
    int loaded = 0;
    const auto& wpe = get("wpe.weight", {0, d});
    if (wpe.shape[0] < static_cast<std::size_t>(cfg_.n_ctx)) throw InvalidInput("wpe has fewer positions than n_ctx");
    load_vec(ids_.wpe, wpe, 0);
    ++loaded;
    const std::size_t hid = static_cast<std::size_t>(cfg_.mlp_ratio) * d;
    for (std::size_t l = 0; l < ids_.blocks.size(); ++l) {
        const auto& b = ids_.blocks[l];
        const std::string pre = "h." + std::to_string(l) + ".";
        load_vec(b.ln1_g, get(pre + "ln_1.weight", {d}), 0);
        load_vec(b.ln1_b, get(pre + "ln_1.bias", {d}), 0);
        const auto& attn_w = get(pre + "attn.c_attn.weight", {d, 3 * d});
        const auto& attn_b = get(pre + "attn.c_attn.bias", {3 * d});
        load_conv(b.q_w, attn_w, 0);
        load_conv(b.k_w, attn_w, d);
        load_conv(b.v_w, attn_w, 2 * d);
        load_vec(b.q_b, attn_b, 0);
        load_vec(b.k_b, attn_b, d);
        load_vec(b.v_b, attn_b, 2 * d);
        load_conv(b.proj_w, get(pre + "attn.c_proj.weight", {d, d}), 0);
        load_vec(b.proj_b, get(pre + "attn.c_proj.bias", {d}), 0);
        load_vec(b.ln2_g, get(pre + "ln_2.weight", {d}), 0);
        load_vec(b.ln2_b, get(pre + "ln_2.bias", {d}), 0);
        load_conv(b.fc_w, get(pre + "mlp.c_fc.weight", {d, hid}), 0);
        load_vec(b.fc_b, get(pre + "mlp.c_fc.bias", {hid}), 0);
        load_conv(b.fcp_w, get(pre + "mlp.c_proj.weight", {hid, d}), 0);
        load_vec(b.fcp_b, get(pre + "mlp.c_proj.bias", {d}), 0);
        loaded += 12;
    }
    load_vec(ids_.lnf_g, get("ln_f.weight", {d}), 0);
    load_vec(ids_.lnf_b, get("ln_f.bias", {d}), 0);
    return loaded + 2;
}

template class PortLlm<float>;
template class PortLlm<double>;

namespace {
template <typename S>
double nmse_impl(const TableSeries<double>& s_hat, const TableSeries<S>& s) {
    if (s_hat.values.size() != s.values.size()) throw InvalidInput("table_nmse: shape mismatch");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        num += std::norm(s_hat.values[i] - cplx(s.values[i]));
        den += std::norm(cplx(s.values[i]));
    }
    if (!(den > 0.0)) throw DegenerateSample("table_nmse: target has zero norm");
    return num / den;
}
}  // namespace

double table_nmse(const TableSeries<double>& s_hat, const TableSeries<float>& s) { return nmse_impl(s_hat, s); }
double table_nmse(const TableSeries<double>& s_hat, const TableSeries<double>& s) { return nmse_impl(s_hat, s); }

}  // namespace fluidport::net
