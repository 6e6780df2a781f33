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

#include "fluidport/config.hpp"

#include <yaml-cpp/yaml.h>

#include <functional>
#include <map>
#include <set>

#include "fluidport/io.hpp"

namespace fluidport {

ConfigError::ConfigError(std::string field, int line, const std::string& what)
    : std::runtime_error(field + (line > 0 ? " (line " + std::to_string(line) + ")" : std::string()) + ": " + what),
      field_(std::move(field)),
      line_(line) {}

namespace {

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

template <typename V>
V as(const YAML::Node& n, const std::string& field) {
    try {
        return n.as<V>();
    } catch (const YAML::Exception&) {
        throw ConfigError(field, line_of(n), "cannot read value '" + (n.IsScalar() ? n.Scalar() : std::string("<node>")) + "'");
    }
}

// Reads known keys of one mapping; anything left over is rejected.
class Section {
public:
    Section(const YAML::Node& node, std::string name) : node_(node), name_(std::move(name)) {
        if (node_ && !node_.IsMap()) throw ConfigError(name_, line_of(node_), "expected a mapping");
    }

    template <typename V>
    void get(const std::string& key, V& out) {
        seen_.insert(key);
        if (!node_) return;
        const auto v = node_[key];
        if (v) out = as<V>(v, field(key));
    }

    template <typename V>
    void get(const std::string& key, V& out, const std::function<V(V)>& convert) {
        seen_.insert(key);
        if (!node_) return;
        const auto v = node_[key];
        if (v) out = convert(as<V>(v, field(key)));
    }

    YAML::Node raw(const std::string& key) {
        seen_.insert(key);
        return node_ ? node_[key] : YAML::Node();
    }

    void finish() const {
        if (!node_) return;
        std::set<std::string> keys;
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!seen_.count(key)) throw ConfigError(field(key), line_of(kv.first), "unknown field");
            if (!keys.insert(key).second) throw ConfigError(field(key), line_of(kv.first), "duplicate field");
        }
    }

    [[nodiscard]] std::string field(const std::string& key) const { return name_ + "." + key; }

private:
    YAML::Node node_;
    std::string name_;
    std::set<std::string> seen_;
};

template <typename Fn>
void checked(const std::string& section, const YAML::Node& node, Fn&& validate) {
    try {
        validate();
    } catch (const InvalidInput& e) {
        // messages are "<section>.<field>: why"
        const std::string msg = e.what();
        const auto colon = msg.find(':');
        std::string field = colon == std::string::npos ? section : msg.substr(0, colon);
        int line = line_of(node);
        const auto dot = field.find('.');
        if (node && dot != std::string::npos) {
            const auto key = field.substr(dot + 1);
            if (node[key]) line = line_of(node[key]);
        }
        throw ConfigError(field, line, colon == std::string::npos ? msg : msg.substr(colon + 2));
    }
}

nlohmann::json yaml_to_json(const YAML::Node& n) {
    switch (n.Type()) {
        case YAML::NodeType::Map: {
            nlohmann::json j = nlohmann::json::object();
            for (const auto& kv : n) j[kv.first.as<std::string>()] = yaml_to_json(kv.second);
            return j;
        }
        case YAML::NodeType::Sequence: {
            nlohmann::json j = nlohmann::json::array();
            for (const auto& e : n) j.push_back(yaml_to_json(e));
            return j;
        }
        case YAML::NodeType::Scalar: {
            const std::string& s = n.Scalar();
            if (s == "true" || s == "false") return s == "true";
            try {
                std::size_t pos = 0;
                const long long i = std::stoll(s, &pos);
                if (pos == s.size()) return i;
                const double d = std::stod(s, &pos);
                if (pos == s.size()) return d;
            } catch (const std::exception&) {
            }
            return s;
        }
        default: return nullptr;
    }
}

ScenarioConfig read_scenario(const YAML::Node& node) {
    ScenarioConfig c;
    Section s(node, "scenario");
    s.get("carrier_ghz", c.carrier_ghz);
    s.get("bs_ny", c.bs_ny);
    s.get("bs_nz", c.bs_nz);
    s.get("bs_spacing_wl", c.bs_spacing_wl);
    s.get("aperture_y_wl", c.aperture_y_wl);
    s.get("aperture_z_wl", c.aperture_z_wl);
    s.get("ports_y", c.ports_y);
    s.get("ports_z", c.ports_z);
    s.get("rho_y", c.rho_y);
    s.get("rho_z", c.rho_z);
    s.get("path_count", c.path_count);
    s.get("k_factor_db", c.k_factor_db);
    s.get("delay_spread_ns", c.delay_spread_ns);
    if (auto n = s.raw("nlos_angle_spread_deg")) {
        const auto v = as<std::vector<double>>(n, s.field("nlos_angle_spread_deg"));
        if (v.size() != 4) throw ConfigError(s.field("nlos_angle_spread_deg"), line_of(n), "expected 4 values");
        std::copy(v.begin(), v.end(), c.nlos_angle_spread_deg.begin());
    }
    if (auto n = s.raw("angle_rows_deg")) {
        const auto rows = as<std::vector<std::vector<double>>>(n, s.field("angle_rows_deg"));
        c.angle_rows.clear();
        for (const auto& r : rows) {
            if (r.size() != 4) throw ConfigError(s.field("angle_rows_deg"), line_of(n), "each row needs 4 angles");
            c.angle_rows.push_back({r[0], r[1], r[2], r[3]});
        }
    }
    s.get("ue_count", c.ue_count);
    s.get("speed_min_kmh", c.speed_min_kmh);
    s.get("speed_max_kmh", c.speed_max_kmh);
    s.get<double>("slot_duration_ms", c.slot_duration_s, [](double ms) { return ms * 1e-3; });
    s.get("symbols_per_slot", c.symbols_per_slot);
    s.get("t0_slots", c.t0_slots);
    s.get<double>("csi_delay_ms", c.csi_delay_s, [](double ms) { return ms * 1e-3; });
    s.get("history", c.history);
    s.get("horizon", c.horizon);
    s.get("segments_per_ue", c.segments_per_ue);
    s.get("samples_per_segment", c.samples_per_segment);
    s.get("train_fraction", c.train_fraction);
    s.get("seed", c.seed);
    s.finish();
    checked("scenario", node, [&] { c.validate(); });
    return c;
}

net::NetConfig read_net(const YAML::Node& node, std::string& weights) {
    net::NetConfig c;
    Section s(node, "net");
    s.get("d_model", c.d_model);
    s.get("heads", c.heads);
    s.get("layers", c.layers);
    s.get("backbone_heads", c.backbone_heads);
    s.get("lora_rank", c.lora_rank);
    s.get("n_ctx", c.n_ctx);
    s.get("mlp_ratio", c.mlp_ratio);
    s.get("lora_enabled", c.lora_enabled);
    s.get("gpt2_weights", weights);
    s.finish();
    return c;
}

TrainConfig read_train(const YAML::Node& node) {
    TrainConfig c;
    Section s(node, "train");
    s.get("epochs", c.epochs);
    s.get("batch_size", c.batch_size);
    s.get("peak_lr", c.peak_lr);
    s.get("warmup_fraction", c.warmup_fraction);
    s.get("min_lr_fraction", c.min_lr_fraction);
    s.get("beta1", c.beta1);
    s.get("beta2", c.beta2);
    s.get("eps", c.eps);
    s.get("clip_norm", c.clip_norm);
    s.get("checkpoint_every", c.checkpoint_every);
    s.finish();
    checked("train", node, [&] { c.validate(); });
    return c;
}

EvalConfig read_eval(const YAML::Node& node) {
    EvalConfig c;
    Section s(node, "eval");
    if (auto n = s.raw("arrays")) {
        const auto rows = as<std::vector<std::vector<int>>>(n, s.field("arrays"));
        c.arrays.clear();
        for (const auto& r : rows) {
            if (r.size() != 2) throw ConfigError(s.field("arrays"), line_of(n), "each array is [N_y, N_z]");
            c.arrays.emplace_back(r[0], r[1]);
        }
    }
    s.get("speeds_kmh", c.speeds_kmh);
    s.get("snr_db", c.snr_db);
    s.get("n_ue", c.n_ue);
    if (auto n = s.raw("baselines")) {
        c.baselines.clear();
        for (const auto& b : n) {
            try {
                c.baselines.push_back(baseline_from_string(as<std::string>(b, s.field("baselines"))));
            } catch (const InvalidInput& e) {
                throw ConfigError(s.field("baselines"), line_of(b), e.what());
            }
        }
    }
    s.get("realizations", c.realizations);
    s.get("windows_per_realization", c.windows_per_realization);
    s.get("seed", c.seed);
    s.finish();
    checked("eval", node, [&] { c.validate(); });
    return c;
}

}  // namespace

net::NetConfig net_for_scenario(net::NetConfig net, const ScenarioConfig& sc) {
    net.grid_n = sc.ports_z;
    net.grid_m = sc.ports_y;
    net.history = sc.history;
    net.horizon = sc.horizon;
    return net;
}

RunConfig parse_config(const std::string& yaml_text) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError("<document>", e.mark.line + 1, e.msg);
    }
    if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    if (!root.IsMap()) throw ConfigError("<document>", line_of(root), "expected a mapping at top level");
    std::set<std::string> sections;
    for (const auto& kv : root) {
        const auto key = kv.first.as<std::string>();
        if (key != "scenario" && key != "net" && key != "train" && key != "eval")
            throw ConfigError(key, line_of(kv.first), "unknown section");
        if (!sections.insert(key).second) throw ConfigError(key, line_of(kv.first), "duplicate section");
    }

    RunConfig rc;
    rc.scenario = read_scenario(root["scenario"]);
    rc.net = net_for_scenario(read_net(root["net"], rc.gpt2_weights), rc.scenario);
    checked("net", root["net"], [&] {
        try {
            rc.net.validate();
        } catch (const InvalidInput& e) {
            const std::string m = e.what();
            throw InvalidInput(m.rfind("net.", 0) == 0 ? m : "net." + m);
        }
    });
    rc.train = read_train(root["train"]);
    rc.eval = read_eval(root["eval"]);
    rc.raw = yaml_to_json(root);
    return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_text(path);
    } catch (const std::exception& e) {
        throw ConfigError("<file>", 0, "cannot read " + path.string() + ": " + e.what());
    }
    return parse_config(text);
}

nlohmann::json scenario_to_json(const ScenarioConfig& c) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : c.angle_rows) rows.push_back(r);
    return {{"carrier_ghz", c.carrier_ghz},
            {"bs_ny", c.bs_ny},
            {"bs_nz", c.bs_nz},
            {"bs_spacing_wl", c.bs_spacing_wl},
            {"aperture_y_wl", c.aperture_y_wl},
            {"aperture_z_wl", c.aperture_z_wl},
            {"ports_y", c.ports_y},
            {"ports_z", c.ports_z},
            {"rho_y", c.rho_y},
            {"rho_z", c.rho_z},
            {"path_count", c.path_count},
            {"k_factor_db", c.k_factor_db},
            {"delay_spread_ns", c.delay_spread_ns},
            {"nlos_angle_spread_deg", c.nlos_angle_spread_deg},
            {"angle_rows_deg", rows},
            {"ue_count", c.ue_count},
            {"speed_min_kmh", c.speed_min_kmh},
            {"speed_max_kmh", c.speed_max_kmh},
            {"slot_duration_s", c.slot_duration_s},
            {"symbols_per_slot", c.symbols_per_slot},
            {"t0_slots", c.t0_slots},
            {"csi_delay_s", c.csi_delay_s},
            {"history", c.history},
            {"horizon", c.horizon},
            {"segments_per_ue", c.segments_per_ue},
            {"samples_per_segment", c.samples_per_segment},
            {"train_fraction", c.train_fraction},
            {"seed", c.seed}};
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    ScenarioConfig c;
    j.at("carrier_ghz").get_to(c.carrier_ghz);
    j.at("bs_ny").get_to(c.bs_ny);
    j.at("bs_nz").get_to(c.bs_nz);
    j.at("bs_spacing_wl").get_to(c.bs_spacing_wl);
    j.at("aperture_y_wl").get_to(c.aperture_y_wl);
    j.at("aperture_z_wl").get_to(c.aperture_z_wl);
    j.at("ports_y").get_to(c.ports_y);
    j.at("ports_z").get_to(c.ports_z);
    j.at("rho_y").get_to(c.rho_y);
    j.at("rho_z").get_to(c.rho_z);
    j.at("path_count").get_to(c.path_count);
    j.at("k_factor_db").get_to(c.k_factor_db);
    j.at("delay_spread_ns").get_to(c.delay_spread_ns);
    j.at("nlos_angle_spread_deg").get_to(c.nlos_angle_spread_deg);
    c.angle_rows.clear();
    for (const auto& r : j.at("angle_rows_deg")) c.angle_rows.push_back(r.get<AngleRow>());
    j.at("ue_count").get_to(c.ue_count);
    j.at("speed_min_kmh").get_to(c.speed_min_kmh);
    j.at("speed_max_kmh").get_to(c.speed_max_kmh);
    j.at("slot_duration_s").get_to(c.slot_duration_s);
    j.at("symbols_per_slot").get_to(c.symbols_per_slot);
    j.at("t0_slots").get_to(c.t0_slots);
    j.at("csi_delay_s").get_to(c.csi_delay_s);
    j.at("history").get_to(c.history);
    j.at("horizon").get_to(c.horizon);
    j.at("segments_per_ue").get_to(c.segments_per_ue);
    j.at("samples_per_segment").get_to(c.samples_per_segment);
    j.at("train_fraction").get_to(c.train_fraction);
    j.at("seed").get_to(c.seed);
    return c;
}

nlohmann::json net_to_json(const net::NetConfig& c) {
    return {{"d_model", c.d_model},   {"heads", c.heads},       {"layers", c.layers},
            {"backbone_heads", c.backbone_heads}, {"lora_rank", c.lora_rank}, {"history", c.history},
            {"horizon", c.horizon},   {"grid_n", c.grid_n},     {"grid_m", c.grid_m},
            {"n_ctx", c.n_ctx},       {"mlp_ratio", c.mlp_ratio}, {"lora_enabled", c.lora_enabled}};
}

net::NetConfig net_from_json(const nlohmann::json& j) {
    net::NetConfig c;
    j.at("d_model").get_to(c.d_model);
    j.at("heads").get_to(c.heads);
    j.at("layers").get_to(c.layers);
    j.at("backbone_heads").get_to(c.backbone_heads);
    j.at("lora_rank").get_to(c.lora_rank);
    j.at("history").get_to(c.history);
    j.at("horizon").get_to(c.horizon);
    j.at("grid_n").get_to(c.grid_n);
    j.at("grid_m").get_to(c.grid_m);
    j.at("n_ctx").get_to(c.n_ctx);
    j.at("mlp_ratio").get_to(c.mlp_ratio);
    j.at("lora_enabled").get_to(c.lora_enabled);
    return c;
}

nlohmann::json train_to_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},       {"batch_size", c.batch_size},
            {"peak_lr", c.peak_lr},     {"warmup_fraction", c.warmup_fraction},
            {"min_lr_fraction", c.min_lr_fraction}, {"beta1", c.beta1},
            {"beta2", c.beta2},         {"eps", c.eps},
            {"clip_norm", c.clip_norm}, {"seed", c.seed},
            {"checkpoint_every", c.checkpoint_every}};
}

nlohmann::json eval_to_json(const EvalConfig& c) {
    nlohmann::json arrays = nlohmann::json::array();
    for (const auto& [y, z] : c.arrays) arrays.push_back({y, z});
    nlohmann::json bl = nlohmann::json::array();
    for (auto b : c.baselines) bl.push_back(to_string(b));
    return {{"arrays", arrays},   {"speeds_kmh", c.speeds_kmh}, {"snr_db", c.snr_db},
            {"n_ue", c.n_ue},     {"baselines", bl},            {"realizations", c.realizations},
            {"windows_per_realization", c.windows_per_realization}, {"seed", c.seed}};
}

}  // namespace fluidport
