#include "ddsp/artifacts.hpp"

#include <fstream>

namespace ddsp {

MissingArtifact::MissingArtifact(const std::filesystem::path& p, const std::string& prod)
    : std::runtime_error("missing input '" + p.string() + "'; create it with `ddsp " + prod + "`"),
      path(p),
      producer(prod) {}

void require_artifact(const std::filesystem::path& path, const std::string& producer) {
    if (!std::filesystem::exists(path)) throw MissingArtifact(path, producer);
}

nlohmann::json make_manifest(const std::string& command, const std::string& config_hash, std::uint64_t seed,
                             const std::vector<std::filesystem::path>& inputs) {
    nlohmann::json in = nlohmann::json::array();
    for (const auto& p : inputs) in.push_back(p.filename().string());
    return {{"command", command}, {"config_hash", config_hash}, {"seed", seed}, {"inputs", in}};
}

nlohmann::json read_json(const std::filesystem::path& path, const std::string& producer) {
    require_artifact(path, producer);
    std::ifstream in(path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    write_text(j.dump(2) + "\n", path);
}

void write_text(const std::string& text, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

}  // namespace ddsp
