#include "mlsync/pipeline.hpp"

#include "mlsync/errors.hpp"
#include "mlsync/random.hpp"

#include <fstream>
#include <set>

namespace mlsync {

namespace {

template <typename T>
void read_opt(const json& j, const char* key, const std::string& path, T& out) {
    if (j.contains(key)) out = get_as<T>(j, key, path);
}

// A scalar or a non-empty array of scalars.
template <typename T>
std::vector<T> read_list(const json& j, const char* key, const std::string& path) {
    const std::string where = path + "." + key;
    if (!j.contains(key)) throw ConfigError(where + ": missing");
    const json& v = j.at(key);
    std::vector<T> out;
    try {
        if (v.is_array()) {
            for (const auto& e : v) out.push_back(e.get<T>());
        } else {
            out.push_back(v.get<T>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(where + ": " + e.what());
    }
    if (out.empty()) throw ConfigError(where + ": empty list");
    return out;
}

void parse_channels(const json& j, const std::string& path, std::vector<ChannelSpec>& out) {
    if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a non-empty array");
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string p = path + "[" + std::to_string(i) + "]";
        const json& c = j[i];
        if (!c.is_object()) throw ConfigError(p + ": expected an object");
        const auto kind = c.contains("kind") ? get_as<std::string>(c, "kind", p) : std::string("exponential");
        if (kind == "exponential") {
            reject_unknown_keys(c, {"kind", "num_taps", "eta"}, p);
            std::optional<double> eta;
            if (c.contains("eta") && !c.at("eta").is_null()) eta = get_as<double>(c, "eta", p);
            for (int l : read_list<int>(c, "num_taps", p)) out.push_back(ChannelSpec::exponential(l, eta));
        } else if (kind == "tdl") {
            reject_unknown_keys(c, {"kind", "name", "delay_spread", "max_delay"}, p);
            const bool has_ds = c.contains("delay_spread"), has_max = c.contains("max_delay");
            if (has_ds == has_max) throw ConfigError(p + ": give exactly one of delay_spread or max_delay");
            for (const auto& name : read_list<std::string>(c, "name", p)) {
                auto spec = ChannelSpec::tdl(name, 0.0);
                spec.delay_spread = has_ds ? get_as<double>(c, "delay_spread", p) : 0.0;
                spec.max_delay = has_max ? std::optional<int>(get_as<int>(c, "max_delay", p)) : std::nullopt;
                out.push_back(spec);
            }
        } else {
            throw ConfigError(p + ".kind: unknown value '" + kind + "'");
        }
    }
}

json channel_to_json(const ChannelSpec& c) {
    if (c.kind == ChannelSpec::Kind::Exponential) {
        json j{{"kind", "exponential"}, {"num_taps", c.num_taps}};
        if (c.eta) j["eta"] = *c.eta;
        return j;
    }
    json j{{"kind", "tdl"}, {"name", c.tdl_name}};
    if (c.max_delay)
        j["max_delay"] = *c.max_delay;
    else
        j["delay_spread"] = c.delay_spread;
    return j;
}

} // namespace

EvalConfig EvalSettings::for_channel(const ChannelSpec& channel) const {
    EvalConfig e;
    e.snr_points_db = snr_points_db;
    e.channel = channel;
    e.trials_per_point = trials_per_point;
    e.epsilon = epsilon;
    e.zc_root = zc_root;
    e.master_seed = master_seed;
    e.keep_outcomes = keep_outcomes;
    return e;
}

void RunConfig::validate() const {
    system.validate();
    dataset.validate(system);
    train.validate();
    if (models.empty()) throw ConfigError("models: at least one model is required");
    std::set<std::string> names;
    for (const auto& m : models) {
        if (m.name.empty()) throw ConfigError("models: empty name");
        if (m.name == classic_method().name) throw ConfigError("models: '" + m.name + "' is reserved");
        if (!names.insert(m.name).second) throw ConfigError("models: duplicate name '" + m.name + "'");
        dataset_for_model(*this, m).validate(system);
    }
    if (eval.snr_points_db.empty()) throw ConfigError("eval.snr_db: empty");
    if (eval.trials_per_point <= 0) throw ConfigError("eval.trials_per_point must be positive");
    if (eval.channels.empty()) throw ConfigError("eval.channels: empty");
    for (const auto& c : eval.channels) c.build(system); // throws on delays outside the CP
}

std::string RunConfig::digest() const { return to_hex64(fnv1a64(to_json(*this).dump())); }

RunConfig run_config_from_json(const json& j) {
    reject_unknown_keys(j, {"system", "dataset", "train", "models", "eval", "output_dir", "seed"}, "config");
    RunConfig c;
    if (j.contains("system")) c.system = system_config_from_json(j.at("system"), "system");
    if (j.contains("dataset")) c.dataset = dataset_config_from_json(j.at("dataset"), "dataset");
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"), "train");

    if (j.contains("models")) {
        const json& ms = j.at("models");
        if (!ms.is_array()) throw ConfigError("models: expected an array");
        c.models.clear();
        for (std::size_t i = 0; i < ms.size(); ++i) {
            const std::string p = "models[" + std::to_string(i) + "]";
            reject_unknown_keys(ms[i], {"name", "variant", "fixed_tau_hat"}, p);
            ModelSpec m;
            m.name = get_as<std::string>(ms[i], "name", p);
            if (ms[i].contains("variant")) {
                try {
                    m.variant = net::variant_from_string(get_as<std::string>(ms[i], "variant", p));
                } catch (const ConfigError& e) {
                    throw ConfigError(p + ".variant: " + e.what());
                }
            }
            if (ms[i].contains("fixed_tau_hat") && !ms[i].at("fixed_tau_hat").is_null())
                m.fixed_tau_hat = get_as<int>(ms[i], "fixed_tau_hat", p);
            c.models.push_back(m);
        }
    }

    if (j.contains("eval")) {
        const json& e = j.at("eval");
        reject_unknown_keys(e, {"snr_db", "trials_per_point", "epsilon", "zc_root", "master_seed", "classic", "channels"},
                            "eval");
        if (e.contains("snr_db")) {
            const json& s = e.at("snr_db");
            if (!s.is_array()) throw ConfigError("eval.snr_db: expected an array");
            c.eval.snr_points_db.clear();
            for (std::size_t i = 0; i < s.size(); ++i)
                c.eval.snr_points_db.push_back(snr_from_json(s[i], "eval.snr_db[" + std::to_string(i) + "]"));
        }
        read_opt(e, "trials_per_point", "eval", c.eval.trials_per_point);
        read_opt(e, "epsilon", "eval", c.eval.epsilon);
        read_opt(e, "zc_root", "eval", c.eval.zc_root);
        read_opt(e, "master_seed", "eval", c.eval.master_seed);
        read_opt(e, "classic", "eval", c.eval.classic);
        if (e.contains("channels")) {
            c.eval.channels.clear();
            parse_channels(e.at("channels"), "eval.channels", c.eval.channels);
        }
    }
    read_opt(j, "output_dir", "config", c.output_dir);

    if (j.contains("seed")) {
        const auto seed = get_as<std::uint64_t>(j, "seed", "config");
        const bool explicit_sub = (j.contains("dataset") && j.at("dataset").contains("master_seed")) ||
                                  (j.contains("train") && j.at("train").contains("seed")) ||
                                  (j.contains("eval") && j.at("eval").contains("master_seed"));
        if (explicit_sub) throw ConfigError("config.seed: conflicts with a per-section seed");
        c.seed = seed;
        c.dataset.master_seed = derive_seed(seed, {1});
        c.train.seed = derive_seed(seed, {2});
        c.eval.master_seed = derive_seed(seed, {3});
    }

    for (auto& ch : c.eval.channels)
        if (ch.max_delay)
            ch.delay_spread = tdl_delay_spread_for_max_delay(ch.tdl_name, *ch.max_delay, c.system.sample_period);

    c.validate();
    return c;
}

json to_json(const RunConfig& c) {
    json models = json::array();
    for (const auto& m : c.models) {
        json jm{{"name", m.name}, {"variant", net::to_string(m.variant)}};
        jm["fixed_tau_hat"] = m.fixed_tau_hat ? json(*m.fixed_tau_hat) : json(nullptr);
        models.push_back(jm);
    }
    json snrs = json::array();
    for (double s : c.eval.snr_points_db) snrs.push_back(snr_to_json(s));
    json channels = json::array();
    for (const auto& ch : c.eval.channels) channels.push_back(channel_to_json(ch));
    // Seeds are written resolved; the top-level seed is reported separately.
    return json{{"system", to_json(c.system)},
                {"dataset", to_json(c.dataset)},
                {"train", to_json(c.train)},
                {"models", models},
                {"eval",
                 {{"snr_db", snrs},
                  {"trials_per_point", c.eval.trials_per_point},
                  {"epsilon", c.eval.epsilon},
                  {"zc_root", c.eval.zc_root},
                  {"master_seed", c.eval.master_seed},
                  {"classic", c.eval.classic},
                  {"channels", channels}}},
                {"output_dir", c.output_dir}};
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "': expected key=value");
    const std::string key = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;

    json* node = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override '" + key + "': empty path component");
        if (node->is_null()) *node = json::object();
        if (node->is_array()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(part);
            } catch (const std::exception&) {
                throw ConfigError("override '" + key + "': '" + part + "' is not an array index");
            }
            if (idx >= node->size()) throw ConfigError("override '" + key + "': index out of range");
            node = &(*node)[idx];
        } else if (node->is_object()) {
            node = &(*node)[part];
        } else {
            throw ConfigError("override '" + key + "': '" + part + "' is inside a scalar");
        }
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *node = value;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    json doc = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config " + path.string());
        doc = json::parse(in, nullptr, false);
        if (doc.is_discarded()) throw ConfigError(path.string() + ": not valid JSON");
    }
    for (const auto& o : overrides) apply_override(doc, o);
    return run_config_from_json(doc);
}

DatasetGenConfig dataset_for_model(const RunConfig& run, const ModelSpec& model) {
    DatasetGenConfig g = run.dataset;
    // The generator only cares about the input representation, so the
    // metric-input variants share one dataset.
    g.variant = model.variant == net::Variant::RawSignalProp ? net::Variant::RawSignalProp : net::Variant::Prop;
    g.fixed_tau_hat = model.fixed_tau_hat;
    return g;
}

ModelCheckpoint train_model(const RunConfig& run, const ModelSpec& model, const Dataset& data,
                            TrainReport* report) {
    const auto gen = dataset_for_model(run, model);
    if (data.gen.digest() != gen.digest() || !(data.system == run.system))
        throw ConfigError("dataset was not generated for model '" + model.name + "'");
    auto result = train(data, run.train, net::NetworkArch::for_system(model.variant, run.system));
    ModelCheckpoint ckpt;
    ckpt.method = model.name;
    ckpt.params = std::move(result.params);
    ckpt.system = run.system;
    const json provenance{{"system", run.system.digest()},
                          {"dataset", gen.digest()},
                          {"train", to_json(run.train)},
                          {"model", {{"name", model.name}, {"variant", net::to_string(model.variant)}}}};
    ckpt.config_digest = to_hex64(fnv1a64(provenance.dump()));
    if (report) *report = std::move(result.report);
    return ckpt;
}

EvalResult evaluate_models(const RunConfig& run, const std::vector<ModelCheckpoint>& models, int workers) {
    std::vector<Method> methods;
    for (const auto& m : models) {
        require_compatible(m, run.system);
        methods.push_back(network_method(m.method, std::make_shared<const net::NetworkParams>(m.params)));
    }
    if (run.eval.classic) methods.push_back(classic_method());
    if (methods.empty()) throw ConfigError("nothing to evaluate");

    EvalResult all;
    for (const auto& ch : run.eval.channels) {
        auto r = run_monte_carlo(run.eval.for_channel(ch), methods, run.system, workers);
        for (auto& row : r.rows) all.rows.push_back(std::move(row));
    }
    return all;
}

} // namespace mlsync
