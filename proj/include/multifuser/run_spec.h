#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "multifuser/config.h"
#include "multifuser/synthetic_data.h"
#include "multifuser/train.h"

namespace multifuser {

// Flat key/value settings for a run. Grammar of a config file, one entry per
// line:
//
//   # comment
//   key = value
//
// Keys are dotted names from the known set (see default_settings()); values
// are scalars with surrounding whitespace trimmed. Unknown keys are rejected.
class Settings {
  public:
    Settings();

    static Settings parse(const std::string& text);
    static Settings load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    // "key=value"
    void apply_override(const std::string& assignment);
    const std::string& get(const std::string& key) const;

    std::size_t get_size(const std::string& key) const;
    std::uint64_t get_u64(const std::string& key) const;
    double get_double(const std::string& key) const;
    bool get_bool(const std::string& key) const;

    // Every key in sorted order; parsing this text reproduces the settings.
    std::string resolved_text() const;

    ModelConfig model_config() const;
    TrainConfig train_config() const;
    DataSpec train_data_spec() const;
    DataSpec eval_data_spec() const;

    const std::map<std::string, std::string>& entries() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
};

const std::map<std::string, std::string>& default_settings();

struct RunSpec {
    std::string subcommand;
    std::filesystem::path config_path;
    std::filesystem::path out_dir = "run";
    std::vector<std::string> overrides;
    bool has_seed = false;
    std::uint64_t seed = 0;
    std::filesystem::path checkpoint;

    // File values, then --set overrides, then --seed.
    Settings resolve() const;
};

}  // namespace multifuser
