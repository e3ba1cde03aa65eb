#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "framot/faam.hpp"
#include "framot/pts.hpp"
#include "framot/synth_detector.hpp"
#include "framot/tracker.hpp"

namespace framot {

/// Bad, unknown or missing configuration key. Maps to exit code 2.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key + ": " + what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

struct ConfigKey {
    std::string name;
    std::string default_value;
    std::string symbol;  // notation used in the method description, if any
    std::string help;
};

/// Every accepted key, in documentation order.
const std::vector<ConfigKey>& config_keys();

/// key=value settings over the documented defaults.
class RunConfig {
public:
    RunConfig();

    /// Parses a key=value file body; '#' starts a comment. Unknown keys and
    /// malformed lines throw ConfigError.
    void merge_text(std::string_view text);
    /// One "key=value" override.
    void set(const std::string& assignment);
    void set(const std::string& key, const std::string& value);

    const std::string& get(const std::string& key) const;
    /// Throws ConfigError naming the key when the value is empty.
    const std::string& require(const std::string& key) const;
    double get_double(const std::string& key) const;
    int get_int(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<int> get_ints(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;

    /// All keys with their effective values, sorted.
    std::string dump() const;

private:
    std::map<std::string, std::string> values_;
};

SceneConfig scene_config(const RunConfig& config);
NoiseModel noise_model(const RunConfig& config);
TrackerConfig tracker_config(const RunConfig& config);
FaamShape faam_shape(const RunConfig& config);
TrainConfig train_config(const RunConfig& config);
PtsConfig pts_config(const RunConfig& config);

/// Help text listing subcommands and every configuration key.
std::string usage();

/// Entry point. Exit codes: 0 success, 1 pipeline error, 2 configuration
/// error.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

}  // namespace framot
