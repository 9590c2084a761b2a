#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace ddsp {

/// Raised when a command's input is missing; names the command that makes it.
class MissingArtifact : public std::runtime_error {
public:
    MissingArtifact(const std::filesystem::path& path, const std::string& producer);
    std::filesystem::path path;
    std::string producer;
};

void require_artifact(const std::filesystem::path& path, const std::string& producer);

/// Provenance block stored in every artifact. No wall-clock fields, so
/// reruns with identical inputs write identical bytes.
nlohmann::json make_manifest(const std::string& command, const std::string& config_hash, std::uint64_t seed,
                             const std::vector<std::filesystem::path>& inputs);

nlohmann::json read_json(const std::filesystem::path& path, const std::string& producer);
void write_json(const nlohmann::json& j, const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

}  // namespace ddsp
