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

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fluidport/common.hpp"

namespace fluidport::net {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatMap = Eigen::Map<Mat<T>>;
template <typename T>
using ConstMatMap = Eigen::Map<const Mat<T>>;

struct ParamInfo {
    std::string name;
    int rows = 0;
    int cols = 0;
    std::size_t offset = 0;
    bool frozen = false;
    std::ptrdiff_t grad_offset = -1;  // -1 for frozen tensors

    [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols); }
};

// All tensors of a model in one contiguous buffer. Gradients cover trainable tensors only.
template <typename T>
class ParamStore {
public:
    int add(std::string name, int rows, int cols, bool frozen) {
        ParamInfo info{std::move(name), rows, cols, data_.size(), frozen, -1};
        if (!frozen) {
            info.grad_offset = static_cast<std::ptrdiff_t>(trainable_);
            trainable_ += info.size();
        }
        data_.resize(data_.size() + info.size(), T(0));
        infos_.push_back(std::move(info));
        return static_cast<int>(infos_.size()) - 1;
    }

    [[nodiscard]] MatMap<T> mat(int id) {
        const auto& i = infos_[static_cast<std::size_t>(id)];
        return MatMap<T>(data_.data() + i.offset, i.rows, i.cols);
    }
    [[nodiscard]] ConstMatMap<T> mat(int id) const {
        const auto& i = infos_[static_cast<std::size_t>(id)];
        return ConstMatMap<T>(data_.data() + i.offset, i.rows, i.cols);
    }
    // Gradient view for a trainable tensor inside a buffer of size trainable_count().
    [[nodiscard]] MatMap<T> grad(int id, std::vector<T>& buffer) const {
        const auto& i = infos_[static_cast<std::size_t>(id)];
        return MatMap<T>(buffer.data() + i.grad_offset, i.rows, i.cols);
    }
    [[nodiscard]] bool frozen(int id) const { return infos_[static_cast<std::size_t>(id)].frozen; }

    [[nodiscard]] const std::vector<ParamInfo>& infos() const { return infos_; }
    [[nodiscard]] std::vector<T>& data() { return data_; }
    [[nodiscard]] const std::vector<T>& data() const { return data_; }
    [[nodiscard]] std::size_t total_count() const { return data_.size(); }
    [[nodiscard]] std::size_t trainable_count() const { return trainable_; }
    [[nodiscard]] std::size_t frozen_count() const { return data_.size() - trainable_; }

    [[nodiscard]] int find(const std::string& name) const {
        for (std::size_t k = 0; k < infos_.size(); ++k)
            if (infos_[k].name == name) return static_cast<int>(k);
        return -1;
    }

    // Flat position in data() of trainable scalar j.
    [[nodiscard]] std::size_t trainable_position(std::size_t j) const {
        for (const auto& i : infos_) {
            if (i.frozen) continue;
            const auto g = static_cast<std::size_t>(i.grad_offset);
            if (j >= g && j < g + i.size()) return i.offset + (j - g);
        }
        throw InvalidInput("trainable index out of range");
    }

private:
    std::vector<T> data_;
    std::vector<ParamInfo> infos_;
    std::size_t trainable_ = 0;
};

}  // namespace fluidport::net
