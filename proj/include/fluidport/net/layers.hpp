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

#include <cmath>
#include <vector>

#include "fluidport/net/param_store.hpp"

// Layer primitives with explicit backward passes. Activations are row-per-token.
namespace fluidport::net {

// y = x W^T + b
template <typename T, typename W, typename B>
Mat<T> linear(const Mat<T>& x, const W& w, const B& b) {
    Mat<T> y = x * w.transpose();
    y.rowwise() += b.row(0);
    return y;
}

template <typename T, typename W>
Mat<T> linear_nobias(const Mat<T>& x, const W& w) {
    return x * w.transpose();
}

// Accumulates dW and db when the pointers are non-null; returns dx.
template <typename T, typename W>
Mat<T> linear_backward(const Mat<T>& dy, const Mat<T>& x, const W& w, MatMap<T>* dw, MatMap<T>* db) {
    if (dw) dw->noalias() += dy.transpose() * x;
    if (db) db->row(0) += dy.colwise().sum();
    return dy * w;
}

template <typename T>
struct LnCache {
    Mat<T> xhat;
    Eigen::Matrix<T, Eigen::Dynamic, 1> rstd;
};

template <typename T, typename G, typename B>
Mat<T> layer_norm(const Mat<T>& x, const G& gamma, const B& beta, LnCache<T>& cache, T eps = T(1e-5)) {
    const auto rows = x.rows();
    const auto cols = x.cols();
    cache.xhat.resize(rows, cols);
    cache.rstd.resize(rows);
    Mat<T> y(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const T mean = x.row(r).mean();
        const T var = (x.row(r).array() - mean).square().mean();
        const T rstd = T(1) / std::sqrt(var + eps);
        cache.rstd[r] = rstd;
        cache.xhat.row(r) = (x.row(r).array() - mean) * rstd;
        y.row(r) = cache.xhat.row(r).array() * gamma.row(0).array() + beta.row(0).array();
    }
    return y;
}

template <typename T, typename G>
Mat<T> layer_norm_backward(const Mat<T>& dy, const LnCache<T>& cache, const G& gamma, MatMap<T>* dgamma,
                           MatMap<T>* dbeta) {
    const auto rows = dy.rows();
    const auto cols = dy.cols();
    if (dgamma) dgamma->row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    if (dbeta) dbeta->row(0) += dy.colwise().sum();
    Mat<T> dx(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto dxhat = (dy.row(r).array() * gamma.row(0).array()).eval();
        const T m1 = dxhat.mean();
        const T m2 = (dxhat * cache.xhat.row(r).array()).mean();
        dx.row(r) = cache.rstd[r] * (dxhat - m1 - cache.xhat.row(r).array() * m2);
    }
    return dx;
}

// tanh-approximated GELU as used by GPT-2.
template <typename T>
Mat<T> gelu(const Mat<T>& x) {
    const T k = T(0.7978845608028654);  // sqrt(2/pi)
    return x.unaryExpr([k](T v) { return T(0.5) * v * (T(1) + std::tanh(k * (v + T(0.044715) * v * v * v))); });
}

template <typename T>
Mat<T> gelu_backward(const Mat<T>& dy, const Mat<T>& x) {
    const T k = T(0.7978845608028654);
    const Mat<T> d = x.unaryExpr([k](T v) {
        const T t = std::tanh(k * (v + T(0.044715) * v * v * v));
        return T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * k * (T(1) + T(3) * T(0.044715) * v * v);
    });
    return dy.cwiseProduct(d);
}

template <typename T>
struct AttentionCache {
    std::vector<Mat<T>> probs;  // one L x L matrix per head
};

// Multi-head scaled dot-product attention over row tokens; heads are contiguous column blocks.
template <typename T>
Mat<T> attention(const Mat<T>& q, const Mat<T>& k, const Mat<T>& v, int heads, bool causal, AttentionCache<T>& cache) {
    const auto len = q.rows();
    const auto width = q.cols();
    const auto dh = width / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    cache.probs.assign(static_cast<std::size_t>(heads), Mat<T>());
    Mat<T> out(len, width);
    for (int h = 0; h < heads; ++h) {
        Mat<T> s = (q.middleCols(h * dh, dh) * k.middleCols(h * dh, dh).transpose()) * scale;
        for (Eigen::Index r = 0; r < len; ++r) {
            const Eigen::Index visible = causal ? r + 1 : len;
            const T mx = s.row(r).head(visible).maxCoeff();
            T sum = T(0);
            for (Eigen::Index c = 0; c < len; ++c) {
                const T e = c < visible ? std::exp(s(r, c) - mx) : T(0);
                s(r, c) = e;
                sum += e;
            }
            s.row(r) /= sum;
        }
        out.middleCols(h * dh, dh) = s * v.middleCols(h * dh, dh);
        cache.probs[static_cast<std::size_t>(h)] = std::move(s);
    }
    return out;
}

template <typename T>
void attention_backward(const Mat<T>& dout, const Mat<T>& q, const Mat<T>& k, const Mat<T>& v, int heads,
                        const AttentionCache<T>& cache, Mat<T>& dq, Mat<T>& dk, Mat<T>& dv) {
    const auto len = q.rows();
    const auto width = q.cols();
    const auto dh = width / heads;
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    dq.setZero(len, width);
    dk.setZero(len, width);
    dv.setZero(len, width);
    for (int h = 0; h < heads; ++h) {
        const Mat<T>& p = cache.probs[static_cast<std::size_t>(h)];
        const Mat<T> dO = dout.middleCols(h * dh, dh);
        dv.middleCols(h * dh, dh) = p.transpose() * dO;
        const Mat<T> dp = dO * v.middleCols(h * dh, dh).transpose();
        Mat<T> ds = p.cwiseProduct(dp);
        const Eigen::Matrix<T, Eigen::Dynamic, 1> rowdot = ds.rowwise().sum();
        ds -= p.cwiseProduct(rowdot.replicate(1, len));
        ds *= scale;
        dq.middleCols(h * dh, dh) = ds * k.middleCols(h * dh, dh);
        dk.middleCols(h * dh, dh) = ds.transpose() * q.middleCols(h * dh, dh);
    }
}

}  // namespace fluidport::net
