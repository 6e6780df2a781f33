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

#include "fluidport/checkpoint.hpp"

#include "fluidport/config.hpp"
#include "fluidport/io.hpp"

namespace fluidport {

namespace {

constexpr int kFormatVersion = 1;

void append_all(std::vector<unsigned char>& out, const float* p, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) io::append_le_f32(out, p[k]);
}

void read_all(const unsigned char*& cur, const unsigned char* end, float* dst, std::size_t n) {
    if (static_cast<std::size_t>(end - cur) < n * 4) throw InvalidInput("checkpoint: blob is truncated");
    for (std::size_t k = 0; k < n; ++k, cur += 4) dst[k] = io::read_le_f32(cur);
}

}  // namespace

std::string tensor_sha256(const net::ParamStore<float>& p, int id) {
    const auto& info = p.infos()[static_cast<std::size_t>(id)];
    std::vector<unsigned char> bytes;
    bytes.reserve(info.size() * 4);
    append_all(bytes, p.data().data() + info.offset, info.size());
    return io::sha256_hex(bytes);
}

CheckpointFiles save_checkpoint(const std::filesystem::path& stem, const net::PortLlm<float>& model, const AdamState& adam,
                                const std::vector<EpochRecord>& metrics, const nlohmann::json& extra) {
    const auto& p = model.params();
    if (adam.m.size() != p.trainable_count() || adam.v.size() != p.trainable_count())
        throw InvalidInput("checkpoint: optimizer state does not match the trainable partition");

    std::vector<unsigned char> blob;
    blob.reserve((p.total_count() + 2 * p.trainable_count()) * 4);
    append_all(blob, p.data().data(), p.total_count());
    append_all(blob, adam.m.data(), adam.m.size());
    append_all(blob, adam.v.data(), adam.v.size());

    CheckpointFiles files;
    files.header = stem;
    files.header += ".json";
    files.blob = stem;
    files.blob += ".bin";
    files.blob_sha256 = io::sha256_hex(blob);

    nlohmann::json tensors = nlohmann::json::array();
    for (std::size_t k = 0; k < p.infos().size(); ++k) {
        const auto& i = p.infos()[k];
        tensors.push_back({{"name", i.name},
                           {"shape", {i.rows, i.cols}},
                           {"offset", i.offset},
                           {"frozen", i.frozen},
                           {"sha256", tensor_sha256(p, static_cast<int>(k))}});
    }
    nlohmann::json log = nlohmann::json::array();
    for (const auto& r : metrics)
        log.push_back({{"epoch", r.epoch}, {"step", r.step}, {"lr", r.lr}, {"train_nmse", r.train_nmse}, {"val_nmse_v", r.val_nmse_v}});

    nlohmann::json h;
    h["format_version"] = kFormatVersion;
    h["net"] = net_to_json(model.config());
    h["tensors"] = tensors;
    h["param_count"] = p.total_count();
    h["trainable_count"] = p.trainable_count();
    h["adam"] = {{"step", adam.step}, {"epochs_done", adam.epochs_done}};
    h["metrics"] = log;
    h["extra"] = extra;
    h["blob"] = files.blob.filename().string();
    h["blob_sha256"] = files.blob_sha256;

    if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
    io::write_bytes(files.blob, blob);
    io::write_text(files.header, h.dump(2) + "\n");
    return files;
}

Checkpoint load_checkpoint(const std::filesystem::path& header) {
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(io::read_text(header));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("checkpoint " + header.string() + ": " + e.what());
    }
    if (h.value("format_version", 0) != kFormatVersion) throw InvalidInput("checkpoint: unsupported format version");

    Checkpoint ck;
    try {
        const auto cfg = net_from_json(h.at("net"));
        ck.model = std::make_unique<net::PortLlm<float>>(cfg, 0);
        auto& p = ck.model->params();

        const auto& tensors = h.at("tensors");
        if (tensors.size() != p.infos().size()) throw InvalidInput("checkpoint: tensor manifest does not match the model");
        for (std::size_t k = 0; k < tensors.size(); ++k) {
            const auto& i = p.infos()[k];
            const auto& t = tensors[k];
            if (t.at("name").get<std::string>() != i.name || t.at("shape")[0].get<int>() != i.rows ||
                t.at("shape")[1].get<int>() != i.cols || t.at("frozen").get<bool>() != i.frozen)
                throw InvalidInput("checkpoint: tensor " + t.at("name").get<std::string>() + " does not match the model layout");
        }

        const auto blob_path = header.parent_path() / h.at("blob").get<std::string>();
        const auto blob = io::read_bytes(blob_path);
        if (io::sha256_hex(blob) != h.at("blob_sha256").get<std::string>())
            throw InvalidInput("checkpoint: blob hash mismatch for " + blob_path.string());

        const unsigned char* cur = blob.data();
        const unsigned char* end = blob.data() + blob.size();
        read_all(cur, end, p.data().data(), p.total_count());
        ck.adam.m.resize(p.trainable_count());
        ck.adam.v.resize(p.trainable_count());
        read_all(cur, end, ck.adam.m.data(), ck.adam.m.size());
        read_all(cur, end, ck.adam.v.data(), ck.adam.v.size());
        if (cur != end) throw InvalidInput("checkpoint: trailing bytes in blob");

        for (std::size_t k = 0; k < tensors.size(); ++k)
            if (tensor_sha256(p, static_cast<int>(k)) != tensors[k].at("sha256").get<std::string>())
                throw InvalidInput("checkpoint: tensor " + p.infos()[k].name + " hash mismatch");

        ck.adam.step = h.at("adam").at("step").get<long>();
        ck.adam.epochs_done = h.at("adam").at("epochs_done").get<int>();
        for (const auto& r : h.at("metrics"))
            ck.metrics.push_back({r.at("epoch").get<int>(), r.at("step").get<long>(), r.at("lr").get<double>(),
                                  r.at("train_nmse").get<double>(), r.at("val_nmse_v").get<double>()});
        ck.extra = h.value("extra", nlohmann::json::object());
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput("checkpoint " + header.string() + ": " + e.what());
    }
    return ck;
}

}  // namespace fluidport
