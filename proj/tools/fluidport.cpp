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

// fluidport generate|train|evaluate

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fluidport/checkpoint.hpp"
#include "fluidport/config.hpp"
#include "fluidport/dataset.hpp"
#include "fluidport/evaluation.hpp"
#include "fluidport/io.hpp"
#include "fluidport/parallel.hpp"
#include "fluidport/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fluidport;

namespace {

constexpr const char* kVersion = "0.3.0";

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumeric = 4 };

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> epochs;
    std::string data;
    std::string checkpoint;
    std::string resume;
    bool baselines_only = false;
    bool plot_data = false;
};

class Manifest {
public:
    Manifest(std::string command, const RunConfig& rc, std::optional<std::uint64_t> seed)
        : start_(std::chrono::steady_clock::now()) {
        doc_["command"] = std::move(command);
        doc_["tool_version"] = kVersion;
        doc_["config"] = rc.raw;
        doc_["seed"] = seed ? json(*seed) : json(nullptr);
        doc_["inputs"] = json::object();
        doc_["outputs"] = json::object();
    }
    void input(const fs::path& p) { doc_["inputs"][p.string()] = io::sha256_file(p); }
    void output(const fs::path& p) { doc_["outputs"][p.filename().string()] = io::sha256_file(p); }
    json& operator[](const char* key) { return doc_[key]; }
    void write(const fs::path& dir) {
        doc_["wall_clock_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        io::write_text(dir / "manifest.json", doc_.dump(2) + "\n");
    }

private:
    json doc_;
    std::chrono::steady_clock::time_point start_;
};

void apply_seed(RunConfig& rc, const Options& o) {
    if (!o.seed) return;
    rc.scenario.seed = derive_seed(*o.seed, "dataset");
    rc.train.seed = derive_seed(*o.seed, "shuffle");
}

std::uint64_t init_seed(const RunConfig& rc, const Options& o) {
    return derive_seed(o.seed ? *o.seed : rc.train.seed, "init");
}

fs::path resolve_sidecar(const fs::path& p) {
    if (!fs::is_directory(p)) return p;
    std::vector<fs::path> found;
    for (const auto& e : fs::directory_iterator(p)) {
        const auto name = e.path().filename().string();
        if (name.rfind("dataset-", 0) == 0 && e.path().extension() == ".json") found.push_back(e.path());
    }
    if (found.size() != 1)
        throw InvalidInput(p.string() + ": expected exactly one dataset-*.json, found " + std::to_string(found.size()));
    return found.front();
}

template <typename Fn>
void write_file(const fs::path& p, Fn&& fn) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw InvalidInput("cannot write " + p.string());
    fn(os);
    if (!os) throw InvalidInput("write failed: " + p.string());
}

int cmd_generate(const Options& o) {
    RunConfig rc = load_config(o.config);
    apply_seed(rc, o);
    const fs::path out(o.out);
    fs::create_directories(out);
    Manifest man("generate", rc, o.seed);
    man.input(o.config);

    const Dataset ds = generate_dataset(rc.scenario, default_threads());
    const auto files = save_dataset(ds, out);
    man.output(files.sidecar);
    man.output(files.blob);
    man["train_fraction"] = rc.scenario.train_fraction;
    man["counts"] = {{"samples", ds.samples.size()}, {"train", ds.split.train.size()}, {"test", ds.split.test.size()}};
    man.write(out);

    std::cout << "samples " << ds.samples.size() << " (train " << ds.split.train.size() << ", test "
              << ds.split.test.size() << ", train fraction " << io::fmt_double(rc.scenario.train_fraction) << ")\n"
              << "wrote " << files.sidecar.string() << "\n";
    return kOk;
}

int cmd_train(const Options& o) {
    RunConfig rc = load_config(o.config);
    apply_seed(rc, o);
    if (o.epochs) rc.train.epochs = *o.epochs;
    rc.train.validate();
    rc.train.threads = default_threads();
    if (o.data.empty()) throw ConfigError("--data", 0, "train needs a dataset (sidecar file or directory)");
    const fs::path out(o.out);
    fs::create_directories(out);
    Manifest man("train", rc, o.seed);
    man.input(o.config);

    const fs::path sidecar = resolve_sidecar(o.data);
    const Dataset ds = load_dataset(sidecar);
    man.input(sidecar);
    const std::string dataset_hash = io::sha256_file(sidecar);
    const net::NetConfig ncfg = net_for_scenario(rc.net, ds.config);

    std::unique_ptr<net::PortLlm<float>> model;
    AdamState adam;
    std::vector<EpochRecord> log;
    if (!o.resume.empty()) {
        Checkpoint ck = load_checkpoint(o.resume);
        man.input(o.resume);
        if (ck.extra.value("dataset_sha256", std::string()) != dataset_hash)
            throw InvalidInput("resume: checkpoint was trained on a different dataset");
        model = std::move(ck.model);
        adam = std::move(ck.adam);
        log = std::move(ck.metrics);
        std::cout << "resuming after epoch " << adam.epochs_done << "\n";
    } else {
        model = std::make_unique<net::PortLlm<float>>(ncfg, init_seed(rc, o));
        if (!rc.gpt2_weights.empty()) {
            const int n = model->import_gpt2_backbone(rc.gpt2_weights);
            man.input(rc.gpt2_weights);
            std::cout << "loaded " << n << " backbone tensors from " << rc.gpt2_weights << "\n";
        }
    }

    const json extra = {{"dataset_sha256", dataset_hash}, {"train", train_to_json(rc.train)}};
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : log) best = std::min(best, r.val_nmse_v);

    TrainHooks hooks;
    hooks.on_epoch = [&](const EpochRecord& rec, const net::PortLlm<float>& m, const AdamState& st) {
        log.push_back(rec);
        std::cout << "epoch " << rec.epoch << "  lr " << io::fmt_double(rec.lr) << "  train_nmse "
                  << io::fmt_double(rec.train_nmse) << "  val_nmse_v " << io::fmt_double(rec.val_nmse_v) << std::endl;
        if (rec.val_nmse_v < best) {
            best = rec.val_nmse_v;
            save_checkpoint(out / "checkpoint-best", m, st, log, extra);
        }
        if (rec.epoch % rc.train.checkpoint_every == 0) save_checkpoint(out / "checkpoint-last", m, st, log, extra);
    };
    train(*model, ds, rc.train, adam, hooks);

    const auto final_files = save_checkpoint(out / "checkpoint-final", *model, adam, log, extra);
    write_file(out / "metrics.csv", [&](std::ostream& os) { write_metrics_csv(os, log); });
    man.output(final_files.header);
    man.output(final_files.blob);
    if (fs::exists(out / "checkpoint-best.json")) {
        man.output(out / "checkpoint-best.json");
        man.output(out / "checkpoint-best.bin");
    }
    man.output(out / "metrics.csv");
    man["dataset_sha256"] = dataset_hash;
    man["params"] = {{"total", model->params().total_count()}, {"trainable", model->params().trainable_count()}};
    man.write(out);
    std::cout << "wrote " << (out / "checkpoint-final.json").string() << "\n";
    return kOk;
}

int cmd_evaluate(const Options& o) {
    RunConfig rc = load_config(o.config);
    apply_seed(rc, o);
    if (o.seed) rc.eval.seed = derive_seed(*o.seed, "eval");
    rc.eval.threads = default_threads();
    const fs::path out(o.out);
    fs::create_directories(out);
    Manifest man("evaluate", rc, o.seed);
    man.input(o.config);

    std::unique_ptr<net::PortLlm<float>> model;
    if (o.baselines_only) {
        std::erase_if(rc.eval.baselines, [](Baseline b) { return b == Baseline::port_llm; });
        if (rc.eval.baselines.empty()) throw ConfigError("eval.baselines", 0, "no baselines left after --baselines-only");
    } else if (!o.checkpoint.empty()) {
        model = std::move(load_checkpoint(o.checkpoint).model);
        man.input(o.checkpoint);
    } else if (std::count(rc.eval.baselines.begin(), rc.eval.baselines.end(), Baseline::port_llm)) {
        throw ConfigError("--checkpoint", 0, "port_llm evaluation needs --checkpoint (or use --baselines-only)");
    }

    const EvalReport report = run_evaluation(rc.scenario, rc.eval, model.get());

    const std::string cfg_hash = io::sha256_hex(rc.raw.dump());
    write_file(out / "results.csv", [&](std::ostream& os) {
        write_results_csv(os, report.rows, {"fluidport " + std::string(kVersion), "config_sha256 " + cfg_hash});
    });
    man.output(out / "results.csv");
    if (!report.traces.empty()) {
        write_file(out / "port_traces.csv", [&](std::ostream& os) {
            os << "speed_kmh,bs_ny,bs_nz,snapshot,n,m,d_min\n";
            for (const auto& t : report.traces)
                for (std::size_t k = 0; k < t.decisions.size(); ++k)
                    os << io::fmt_double(t.speed_kmh) << ',' << t.bs_ny << ',' << t.bs_nz << ',' << k << ','
                       << t.decisions[k].port.n1() << ',' << t.decisions[k].port.m1() << ','
                       << io::fmt_double(t.decisions[k].d_min) << '\n';
        });
        man.output(out / "port_traces.csv");
    }
    if (o.plot_data) {
        write_file(out / "plot_se_vs_snr.csv", [&](std::ostream& os) { write_se_plot_csv(os, report.rows); });
        write_file(out / "plot_nmse_vs_step.csv", [&](std::ostream& os) { write_nmse_plot_csv(os, report.steps); });
        man.output(out / "plot_se_vs_snr.csv");
        man.output(out / "plot_nmse_vs_step.csv");
    }
    man["rows"] = report.rows.size();
    man.write(out);
    std::cout << "rows " << report.rows.size() << "\nwrote " << (out / "results.csv").string() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fluid-antenna port prediction: dataset generation, training and evaluation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "YAML run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory (created if missing)")->required();
        sub->add_option("--seed", o.seed, "master seed; derives dataset, init and shuffle seeds");
    };
    auto* gen = app.add_subcommand("generate", "simulate channels and write a windowed dataset");
    common(gen);
    auto* tr = app.add_subcommand("train", "train the forecaster on a dataset");
    common(tr);
    tr->add_option("--data", o.data, "dataset sidecar (dataset-*.json) or the directory holding it")->required();
    tr->add_option("--epochs", o.epochs, "override train.epochs")->check(CLI::PositiveNumber);
    tr->add_option("--resume", o.resume, "checkpoint header to continue from")->check(CLI::ExistingFile);
    auto* ev = app.add_subcommand("evaluate", "sweep baselines and the trained forecaster");
    common(ev);
    ev->add_option("--checkpoint", o.checkpoint, "checkpoint header (.json)")->check(CLI::ExistingFile);
    ev->add_flag("--baselines-only", o.baselines_only, "skip the learned predictor");
    ev->add_flag("--plot-data", o.plot_data, "also write long-format plot CSVs");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*gen) return cmd_generate(o);
        if (*tr) return cmd_train(o);
        if (*ev) return cmd_evaluate(o);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kData;
    }
    return kConfig;
}
