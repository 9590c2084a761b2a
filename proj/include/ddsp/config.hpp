#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ddsp/data_pipeline.hpp"
#include "ddsp/evaluation.hpp"
#include "ddsp/gmm_em.hpp"
#include "ddsp/recurrent.hpp"
#include "ddsp/synth.hpp"

namespace ddsp {

/// Thrown for bad configuration; the message starts with the field path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& field, const std::string& what);
    std::string field;
};

/// One experiment's settings as dotted keys ("train.epochs = 50").
/// Every key has a documented default; unknown keys are rejected.
class PipelineConfig {
public:
    struct Field {
        std::string key;
        std::string default_value;
        std::string help;
    };

    PipelineConfig();

    static const std::vector<Field>& fields();

    /// Parses "key = value" lines; '#' starts a comment.
    static PipelineConfig parse(std::istream& in, const std::string& origin = "<config>");
    static PipelineConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    const std::string& get(const std::string& key) const;
    bool has(const std::string& key) const;

    std::string get_string(const std::string& key) const { return get(key); }
    double get_double(const std::string& key) const;
    long get_int(const std::string& key) const;
    std::size_t get_size(const std::string& key) const;
    std::uint64_t get_seed(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    Day get_date(const std::string& key) const;

    /// Sorted "key = value" lines; the input of config_hash().
    std::string canonical() const;
    /// FNV-1a 64 of canonical(), hex.
    std::string hash() const;

    /// Input files named by data.* keys must exist when set.
    void check_input_paths() const;

    ModelSpec model_spec(std::size_t zones) const;
    TrainConfig train_config() const;
    EmOptions em_options() const;
    EvaluationConfig evaluation_config() const;
    SynthConfig synth_config() const;

private:
    std::map<std::string, std::string> values_;
};

std::string fnv1a_hex(const std::string& data);

}  // namespace ddsp
