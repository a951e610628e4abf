// Command-line front end: dataset generation, training, evaluation sweeps,
// complexity reporting and gradient checks.

#include "mlsync/errors.hpp"
#include "mlsync/pipeline.hpp"
#include "mlsync/version.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace mlsync;

namespace {

struct Common {
    std::string config;
    std::vector<std::string> overrides;
    std::string out;
    int workers = 1;
};

void add_common(CLI::App* sub, Common& c, bool with_config = true) {
    if (with_config) {
        sub->add_option("--config", c.config, "Run configuration (JSON)")->check(CLI::ExistingFile);
        sub->add_option("--set", c.overrides, "Override a config value, e.g. train.alpha=0.01")
            ->type_name("KEY=VALUE");
    }
    sub->add_option("--out", c.out, "Output directory");
    sub->add_option("--workers", c.workers, "Worker threads (results do not depend on it)")
        ->check(CLI::Range(1, 1024));
}

fs::path output_dir(const Common& c, const RunConfig* run, const std::string& subcommand) {
    if (!c.out.empty()) return c.out;
    if (run && !run->output_dir.empty()) return run->output_dir;
    fs::path root = "mlsync_out";
    if (const char* env = std::getenv("MLSYNC_OUT"); env && *env) root = env;
    return root / subcommand;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw FormatError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw FormatError("cannot write " + p.string());
}

class Manifest {
public:
    Manifest(std::string subcommand, std::vector<std::string> args)
        : doc_{{"tool", "mlsync"},
               {"version", kVersion},
               {"subcommand", std::move(subcommand)},
               {"args", std::move(args)},
               {"formats", {{"dataset", kDatasetVersion}, {"checkpoint", kCheckpointVersion}}},
               {"inputs", json::array()},
               {"outputs", json::array()}} {}

    void set_run(const RunConfig& run) {
        doc_["config"] = to_json(run);
        doc_["config_digest"] = run.digest();
        doc_["system_digest"] = run.system.digest();
        doc_["seed"] = run.seed ? json(*run.seed) : json(nullptr);
    }
    void input(const fs::path& p) { doc_["inputs"].push_back(describe(p)); }
    void output(const fs::path& p) { doc_["outputs"].push_back(describe(p)); }
    void set(const std::string& key, json value) { doc_[key] = std::move(value); }

    void write(const fs::path& dir) const { write_text(dir / "manifest.json", doc_.dump(2) + "\n"); }

private:
    static json describe(const fs::path& p) {
        if (fs::is_directory(p)) {
            json files = json::array();
            std::vector<fs::path> entries;
            for (const auto& e : fs::directory_iterator(p))
                if (e.is_regular_file()) entries.push_back(e.path());
            std::sort(entries.begin(), entries.end());
            for (const auto& e : entries) files.push_back(describe(e));
            return json{{"path", p.string()}, {"files", files}};
        }
        const auto bytes = read_file(p);
        return json{{"path", p.string()}, {"bytes", bytes.size()}, {"fnv1a64", to_hex64(fnv1a64(bytes))}};
    }

    json doc_;
};

RunConfig load(const Common& c) { return load_run_config(c.config, c.overrides); }

const ModelSpec& pick_model(const RunConfig& run, const std::string& name) {
    if (name.empty()) return run.models.front();
    for (const auto& m : run.models)
        if (m.name == name) return m;
    throw ConfigError("models: no model named '" + name + "'");
}

void print_json(const json& j) { std::cout << j.dump() << "\n"; }

int cmd_gen_data(const Common& c, const std::string& model_name, Manifest& manifest) {
    const auto run = load(c);
    const auto& model = pick_model(run, model_name);
    const auto dir = output_dir(c, &run, "gen-data");
    fs::create_directories(dir);
    const auto data = generate_dataset(dataset_for_model(run, model), run.system, c.workers);
    save_dataset(data, dir);
    manifest.set_run(run);
    manifest.set("model", model.name);
    for (const char* f : {"meta.json", "inputs.f32", "labels.u8"}) manifest.output(dir / f);
    manifest.write(dir);
    print_json({{"status", "ok"}, {"dataset", dir.string()}, {"samples", data.size()}, {"train", data.n_train}});
    return 0;
}

void save_trained(const ModelCheckpoint& ckpt, const TrainReport& report, const fs::path& dir, Manifest& manifest) {
    const auto ckpt_path = dir / (ckpt.method + ".ckpt");
    const auto report_path = dir / (ckpt.method + ".train.json");
    save_checkpoint(ckpt, ckpt_path);
    write_text(report_path, to_json(report).dump(2) + "\n");
    manifest.output(ckpt_path);
    manifest.output(report_path);
}

int cmd_train(const Common& c, const std::string& data_dir, std::string model_name, Manifest& manifest) {
    const auto run = load(c);
    const auto data = load_dataset(data_dir);
    if (model_name.empty()) {
        // The model whose generator settings produced this dataset.
        for (const auto& m : run.models)
            if (dataset_for_model(run, m).digest() == data.gen.digest()) {
                model_name = m.name;
                break;
            }
        if (model_name.empty()) throw ConfigError("dataset matches no configured model; pass --model");
    }
    const auto& model = pick_model(run, model_name);
    const auto dir = output_dir(c, &run, "train");
    fs::create_directories(dir);
    TrainReport report;
    const auto ckpt = train_model(run, model, data, &report);
    manifest.set_run(run);
    manifest.input(data_dir);
    save_trained(ckpt, report, dir, manifest);
    manifest.write(dir);
    print_json({{"status", "ok"},
                {"model", model.name},
                {"best_epoch", report.best_epoch},
                {"best_val_mse", report.best_val_mse},
                {"stop_reason", report.stop_reason}});
    return 0;
}

int write_eval(const RunConfig& run, const std::vector<ModelCheckpoint>& models, const fs::path& dir,
               const std::string& file, int workers, Manifest& manifest) {
    const auto result = evaluate_models(run, models, workers);
    std::ostringstream csv;
    write_eval_csv(csv, result);
    write_text(dir / file, csv.str());
    manifest.output(dir / file);
    manifest.write(dir);
    print_json({{"status", "ok"}, {"csv", (dir / file).string()}, {"rows", result.rows.size()}});
    return 0;
}

int cmd_eval(const Common& c, const std::vector<std::string>& model_paths, Manifest& manifest) {
    const auto run = load(c);
    std::vector<ModelCheckpoint> models;
    for (const auto& p : model_paths) {
        models.push_back(load_checkpoint(p));
        manifest.input(p);
    }
    const auto dir = output_dir(c, &run, "eval");
    fs::create_directories(dir);
    manifest.set_run(run);
    return write_eval(run, models, dir, "eval.csv", c.workers, manifest);
}

int cmd_sweep(const Common& c, Manifest& manifest) {
    const auto run = load(c);
    const auto dir = output_dir(c, &run, "sweep");
    fs::create_directories(dir);
    manifest.set_run(run);
    // Models with identical generator settings share one dataset.
    std::map<std::string, Dataset> datasets;
    std::vector<ModelCheckpoint> models;
    for (const auto& m : run.models) {
        const auto gen = dataset_for_model(run, m);
        auto it = datasets.find(gen.digest());
        if (it == datasets.end()) it = datasets.emplace(gen.digest(), generate_dataset(gen, run.system, c.workers)).first;
        TrainReport report;
        models.push_back(train_model(run, m, it->second, &report));
        save_trained(models.back(), report, dir, manifest);
        std::cerr << m.name << ": best epoch " << report.best_epoch << ", val mse " << report.best_val_mse << "\n";
    }
    return write_eval(run, models, dir, "sweep.csv", c.workers, manifest);
}

int cmd_complexity(const Common& c, const ComplexityDims& dims) {
    const std::vector<CmMethod> all{CmMethod::JointTsCe, CmMethod::ElmLabel, CmMethod::Dnn,
                                    CmMethod::Proposed,  CmMethod::NnOnly,   CmMethod::Correlator};
    std::ostringstream csv;
    write_complexity_csv(csv, dims, all);
    std::cout << csv.str();
    if (!c.out.empty()) {
        fs::create_directories(c.out);
        write_text(fs::path(c.out) / "complexity.csv", csv.str());
        Manifest manifest("complexity", {});
        manifest.set("dims", {{"N", dims.N}, {"Ns", dims.Ns}, {"Ng", dims.Ng}, {"L", dims.L}});
        manifest.output(fs::path(c.out) / "complexity.csv");
        manifest.write(c.out);
    }
    return 0;
}

int cmd_gradcheck(const Common& c, bool toy, int seeds) {
    SystemConfig system = SystemConfig::make(16, 4);
    if (!toy) system = load(c).system;
    bool ok = true;
    for (auto v : {net::Variant::Prop, net::Variant::DnnBaseline, net::Variant::RawSignalProp}) {
        const auto arch = net::NetworkArch::for_system(v, system);
        double worst = 0.0;
        long checked = 0;
        bool passed = true;
        for (int s = 0; s < seeds; ++s) {
            const auto r = net::grad_check(arch, static_cast<std::uint64_t>(s + 1), 1);
            worst = std::max(worst, r.max_rel_error);
            checked += r.params_checked;
            passed = passed && r.passed;
        }
        ok = ok && passed;
        print_json({{"variant", net::to_string(v)},
                    {"N", system.n_subcarriers},
                    {"Ng", system.cp_len},
                    {"seeds", seeds},
                    {"params_checked", checked},
                    {"max_rel_error", worst},
                    {"status", passed ? "pass" : "fail"}});
    }
    return ok ? 0 : 1;
}

int report_error(const char* type, const std::string& message, int code) {
    std::cerr << json{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}}.dump() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"OFDM timing synchronization with a learned timing metric"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Common common;
    std::string model_name, data_dir;
    std::vector<std::string> model_paths;
    bool toy = false;
    int seeds = 10;
    ComplexityDims dims;
    long ns = 0;

    auto* gen = app.add_subcommand("gen-data", "Generate a training dataset");
    add_common(gen, common);
    gen->add_option("--model", model_name, "Model whose dataset to build (default: first)");

    auto* tr = app.add_subcommand("train", "Train one model on a dataset");
    add_common(tr, common);
    tr->add_option("--data", data_dir, "Dataset directory")->required()->check(CLI::ExistingDirectory);
    tr->add_option("--model", model_name, "Model to train (default: the one matching the dataset)");

    auto* ev = app.add_subcommand("eval", "Monte-Carlo evaluation of trained models");
    add_common(ev, common);
    ev->add_option("--model", model_paths, "Checkpoint files")->check(CLI::ExistingFile);

    auto* sw = app.add_subcommand("sweep", "Generate, train and evaluate every configured model");
    add_common(sw, common);

    auto* cx = app.add_subcommand("complexity", "Complex multiplications per timing estimate");
    add_common(cx, common, false);
    cx->add_option("--N", dims.N, "Subcarriers")->check(CLI::PositiveNumber);
    cx->add_option("--Ns", ns, "Search length (default N + Ng)")->check(CLI::PositiveNumber);
    cx->add_option("--Ng", dims.Ng, "Cyclic prefix length")->check(CLI::PositiveNumber);
    cx->add_option("--L", dims.L, "Channel taps")->check(CLI::PositiveNumber);

    auto* gc = app.add_subcommand("gradcheck", "Finite-difference gradient check of every network variant");
    add_common(gc, common);
    gc->add_flag("--toy", toy, "Use toy dimensions (N=16, Ng=4)");
    gc->add_option("--seeds", seeds, "Random parameter draws per variant")->check(CLI::Range(1, 1000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error("UsageError", e.what(), 2);
    }

    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        if (*gen) {
            Manifest m("gen-data", args);
            return cmd_gen_data(common, model_name, m);
        }
        if (*tr) {
            Manifest m("train", args);
            return cmd_train(common, data_dir, model_name, m);
        }
        if (*ev) {
            Manifest m("eval", args);
            return cmd_eval(common, model_paths, m);
        }
        if (*sw) {
            Manifest m("sweep", args);
            return cmd_sweep(common, m);
        }
        if (*cx) {
            dims.Ns = ns > 0 ? ns : dims.N + dims.Ng;
            return cmd_complexity(common, dims);
        }
        if (*gc) return cmd_gradcheck(common, toy, seeds);
    } catch (const ConfigError& e) {
        return report_error("ConfigError", e.what(), 2);
    } catch (const FormatError& e) {
        return report_error("FormatError", e.what(), 3);
    } catch (const DomainError& e) {
        return report_error("DomainError", e.what(), 4);
    } catch (const TrainingError& e) {
        return report_error("TrainingError", e.what(), 5);
    } catch (const std::exception& e) {
        return report_error("InternalError", e.what(), 1);
    }
    return 1;
}
