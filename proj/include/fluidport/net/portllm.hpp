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

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fluidport/common.hpp"
#include "fluidport/dataset.hpp"
#include "fluidport/net/layers.hpp"
#include "fluidport/net/param_store.hpp"

namespace fluidport::net {

struct NetConfig {
    int d_model = 768;
    int heads = 8;            // K, embedding attention heads
    int layers = 6;           // N_L
    int backbone_heads = 12;  // GPT-2 small
    int lora_rank = 4;        // r
    int history = 8;          // T
    int horizon = 8;          // F
    int grid_n = 50;
    int grid_m = 100;
    int n_ctx = 1024;  // positional capacity of the backbone
    int mlp_ratio = 4;
    bool lora_enabled = true;

    void validate() const;
    [[nodiscard]] int ports() const { return grid_n * grid_m; }
    [[nodiscard]] int head_width() const { return d_model / heads; }

    // Closed-form trainable count: embedding linears + embedding attention + token resize + head + LoRA factors.
    [[nodiscard]] std::size_t expected_trainable() const;
    [[nodiscard]] std::size_t expected_frozen() const;
};

template <typename T>
struct BlockCache {
    Mat<T> x_in;
    LnCache<T> ln1;
    Mat<T> a;                // ln_1 output
    Mat<T> u_q, u_v;         // LoRA intermediates a A^T
    Mat<T> q, k, v;
    AttentionCache<T> attn;
    Mat<T> attn_out;         // concatenated heads
    Mat<T> x_mid;
    LnCache<T> ln2;
    Mat<T> b;                // ln_2 output
    Mat<T> fc_pre, fc_act;
};

template <typename T>
struct StreamCache {
    Mat<T> x;        // T x NM normalized component
    Mat<T> e;        // T x d_model after the linear
    Mat<T> q, k, v;
    AttentionCache<T> attn;
};

template <typename T>
struct ForwardCache {
    StreamCache<T> re, im;
    Mat<T> tokens;    // 2T x d_model, rows [r_1..r_T, i_1..i_T]
    Mat<T> resized;   // F x d_model
    Mat<T> h0;        // resized + positional embedding
    std::vector<BlockCache<T>> blocks;
    Mat<T> pre_lnf;
    LnCache<T> lnf;
    Mat<T> hidden;    // F x d_model backbone output
    Mat<T> y;         // F x 2NM head output, normalized units
    NormStats stats;
};

template <typename T>
struct Preprocessed {
    Mat<T> real;  // T x NM
    Mat<T> imag;
    NormStats stats;
};

// Forecaster: normalized real/imag split -> per-stream linear + self-attention embedding -> token resize
// -> GPT-2-shaped decoder with LoRA on Q and V -> linear head -> denormalized complex tables.
template <typename T>
class PortLlm {
public:
    PortLlm(const NetConfig& cfg, std::uint64_t seed);

    [[nodiscard]] const NetConfig& config() const { return cfg_; }
    [[nodiscard]] ParamStore<T>& params() { return params_; }
    [[nodiscard]] const ParamStore<T>& params() const { return params_; }
    void set_lora_enabled(bool on) { cfg_.lora_enabled = on; }

    // Throws DegenerateSample for constant history.
    [[nodiscard]] Preprocessed<T> preprocess(const TableSeries<double>& history) const;
    [[nodiscard]] Mat<T> embed(const Preprocessed<T>& pre, ForwardCache<T>* cache = nullptr) const;
    [[nodiscard]] Mat<T> token_resize(const Mat<T>& tokens) const;
    [[nodiscard]] Mat<T> backbone_forward(const Mat<T>& x, ForwardCache<T>* cache = nullptr) const;
    [[nodiscard]] Mat<T> head(const Mat<T>& hidden) const;
    // Rearranges F x 2NM to (F, 2, N, M), denormalizes and reassembles complex tables.
    [[nodiscard]] TableSeries<double> project_output(const Mat<T>& y, const NormStats& stats) const;

    [[nodiscard]] TableSeries<double> forward(const TableSeries<double>& history, ForwardCache<T>* cache = nullptr) const;
    [[nodiscard]] TableSeries<double> forward(const TableSeries<float>& history, ForwardCache<T>* cache = nullptr) const;

    // Backpropagates dL/dy (F x 2NM, normalized head output) into grad (size trainable_count()).
    void backward(const ForwardCache<T>& cache, const Mat<T>& dy, std::vector<T>& grad) const;

    // Per-sample table NMSE and its gradient accumulated into grad with the given weight.
    double loss_and_gradient(const WindowSample& sample, std::vector<T>& grad, T weight) const;

    // SafeTensors file with GPT-2 tensor names (wpe, h.<l>.*, ln_f.*). Returns the number of tensors loaded.
    int import_gpt2_backbone(const std::filesystem::path& path);

    // Parameter ids, exposed for tests and tooling.
    struct Ids {
        int emb_re_w, emb_re_b, emb_im_w, emb_im_b;
        int mha_wq, mha_wk, mha_wv;
        int resize_w;
        int wpe;
        struct Block {
            int ln1_g, ln1_b;
            int q_w, q_b, q_a, q_bm;
            int k_w, k_b;
            int v_w, v_b, v_a, v_bm;
            int proj_w, proj_b;
            int ln2_g, ln2_b;
            int fc_w, fc_b, fcp_w, fcp_b;
        };
        std::vector<Block> blocks;
        int lnf_g, lnf_b;
        int out_w, out_b;
    };
    [[nodiscard]] const Ids& ids() const { return ids_; }

private:
    Mat<T> embed_stream(const Mat<T>& x, int w_id, int b_id, StreamCache<T>* cache) const;

    NetConfig cfg_;
    ParamStore<T> params_;
    Ids ids_{};
};

extern template class PortLlm<float>;
extern template class PortLlm<double>;

// Sum of squared differences over all entries / squared norm of the target.
double table_nmse(const TableSeries<double>& s_hat, const TableSeries<float>& s);
double table_nmse(const TableSeries<double>& s_hat, const TableSeries<double>& s);

}  // namespace fluidport::net
