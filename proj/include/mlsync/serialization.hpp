#pragma once

#include "mlsync/config.hpp"
#include "mlsync/errors.hpp"
#include "mlsync/lightnet.hpp"
#include "mlsync/trainer.hpp"

#include <json.hpp>

#include <initializer_list>
#include <string>

namespace mlsync {

using json = nlohmann::json;

/// Throws ConfigError naming `path.key` for any key of `obj` not in `known`.
void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                         const std::string& path);

/// SNR values may be written as "inf" for noiseless runs.
double snr_from_json(const json& v, const std::string& path);
json snr_to_json(double snr_db);

// Strict conversions: unknown keys are rejected, missing keys keep defaults.
json to_json(const SystemConfig& c);
SystemConfig system_config_from_json(const json& j, const std::string& path = "system");

json to_json(const DatasetGenConfig& c);
DatasetGenConfig dataset_config_from_json(const json& j, const std::string& path = "dataset");

json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const json& j, const std::string& path = "train");

json to_json(const net::NetworkArch& a);
net::NetworkArch arch_from_json(const json& j, const std::string& path = "arch");

json to_json(const TrainReport& r);

/// Reads a value of the expected JSON type or throws ConfigError with the path.
template <typename T>
T get_as(const json& obj, const char* key, const std::string& path) {
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path + "." + key + ": " + e.what());
    }
}

} // namespace mlsync
