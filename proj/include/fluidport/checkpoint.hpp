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

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "fluidport/net/portllm.hpp"
#include "fluidport/training.hpp"

namespace fluidport {

struct Checkpoint {
    std::unique_ptr<net::PortLlm<float>> model;
    AdamState adam;
    std::vector<EpochRecord> metrics;
    nlohmann::json extra;  // free-form provenance (dataset hash, seeds)
};

struct CheckpointFiles {
    std::filesystem::path header;  // <stem>.json
    std::filesystem::path blob;    // <stem>.bin: params, adam m, adam v as little-endian float32
    std::string blob_sha256;
};

// Per-tensor hashes let loaders and tests spot frozen-weight drift.
std::string tensor_sha256(const net::ParamStore<float>& p, int id);

CheckpointFiles save_checkpoint(const std::filesystem::path& stem, const net::PortLlm<float>& model, const AdamState& adam,
                                const std::vector<EpochRecord>& metrics, const nlohmann::json& extra = {});
// Throws InvalidInput on a hash or manifest mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& header);

}  // namespace fluidport
