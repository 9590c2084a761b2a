#include "ddsp/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace ddsp {

namespace {

std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t out = 0;
        for (int b = 0; b < 8; ++b) out |= ((v >> (8 * b)) & 0xFFu) << (8 * (7 - b));
        return out;
    }
    return v;
}

std::filesystem::path sidecar_for(const std::filesystem::path& manifest) {
    std::filesystem::path p = manifest;
    p.replace_extension(".bin");
    return p;
}

}  // namespace

nlohmann::json spec_to_json(const ModelSpec& spec) {
    return nlohmann::json{{"cell", to_string(spec.cell)},
                          {"input_size", spec.input_size},
                          {"hidden", spec.hidden},
                          {"dense", spec.dense},
                          {"window", spec.window},
                          {"sigma_floor", spec.sigma_floor},
                          {"head",
                           {{"kind", to_string(spec.head.kind)},
                            {"zones", spec.head.zones},
                            {"components", spec.head.components},
                            {"aux_point", spec.head.aux_point}}}};
}

ModelSpec spec_from_json(const nlohmann::json& j) {
    ModelSpec s;
    s.cell = parse_cell_type(j.at("cell").get<std::string>());
    j.at("input_size").get_to(s.input_size);
    j.at("hidden").get_to(s.hidden);
    j.at("dense").get_to(s.dense);
    j.at("window").get_to(s.window);
    j.at("sigma_floor").get_to(s.sigma_floor);
    const auto& h = j.at("head");
    s.head.kind = parse_head_kind(h.at("kind").get<std::string>());
    h.at("zones").get_to(s.head.zones);
    h.at("components").get_to(s.head.components);
    h.at("aux_point").get_to(s.head.aux_point);
    s.validate();
    return s;
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
    return nlohmann::json{{"learning_rate", cfg.learning_rate}, {"batch_size", cfg.batch_size},
                          {"epochs", cfg.epochs},               {"clip_norm", cfg.clip_norm},
                          {"seed", cfg.seed},                   {"optimizer", to_string(cfg.optimizer)},
                          {"momentum", cfg.momentum}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    j.at("learning_rate").get_to(c.learning_rate);
    j.at("batch_size").get_to(c.batch_size);
    j.at("epochs").get_to(c.epochs);
    j.at("clip_norm").get_to(c.clip_norm);
    j.at("seed").get_to(c.seed);
    c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    j.at("momentum").get_to(c.momentum);
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& manifest) {
    const auto bin = sidecar_for(manifest);
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& t : ckpt.model.tensors()) {
        tensors.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}, {"offset", t.offset}});
    }
    nlohmann::json j{{"format", "ddsp-checkpoint"},
                     {"version", 1},
                     {"layout", "column-major tensors, little-endian float64"},
                     {"data_file", bin.filename().string()},
                     {"parameter_count", ckpt.model.parameter_count()},
                     {"spec", spec_to_json(ckpt.model.spec())},
                     {"tensors", tensors},
                     {"standardizer", ckpt.standardizer},
                     {"zone_ids", ckpt.zone_ids},
                     {"train_config", train_config_to_json(ckpt.train)},
                     {"init_seed", ckpt.init_seed},
                     {"history", ckpt.history},
                     {"extra", ckpt.extra}};

    std::ofstream out(manifest);
    if (!out) throw std::runtime_error("cannot write checkpoint manifest '" + manifest.string() + "'");
    out << j.dump(2) << '\n';

    std::ofstream data(bin, std::ios::binary);
    if (!data) throw std::runtime_error("cannot write checkpoint data '" + bin.string() + "'");
    for (double v : ckpt.model.parameters()) {
        const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
        char buf[8];
        std::memcpy(buf, &bits, 8);
        data.write(buf, 8);
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw std::runtime_error("cannot read checkpoint manifest '" + manifest.string() + "'");
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("format", "") != "ddsp-checkpoint") {
        throw std::runtime_error("'" + manifest.string() + "' is not a checkpoint manifest");
    }
    Checkpoint ckpt;
    ckpt.model = RecurrentModel::zeros(spec_from_json(j.at("spec")));
    const auto params = ckpt.model.parameters();
    if (j.at("parameter_count").get<std::size_t>() != params.size()) {
        throw std::runtime_error("checkpoint parameter count does not match its spec");
    }
    const auto bin = manifest.parent_path() / j.at("data_file").get<std::string>();
    std::ifstream data(bin, std::ios::binary);
    if (!data) throw std::runtime_error("cannot read checkpoint data '" + bin.string() + "'");
    for (double& v : params) {
        char buf[8];
        if (!data.read(buf, 8)) throw std::runtime_error("checkpoint data '" + bin.string() + "' is truncated");
        std::uint64_t bits;
        std::memcpy(&bits, buf, 8);
        v = std::bit_cast<double>(to_little_endian(bits));
    }
    ckpt.standardizer = j.at("standardizer").get<Standardizer>();
    j.at("zone_ids").get_to(ckpt.zone_ids);
    ckpt.train = train_config_from_json(j.at("train_config"));
    j.at("init_seed").get_to(ckpt.init_seed);
    j.at("history").get_to(ckpt.history);
    ckpt.extra = j.value("extra", nlohmann::json::object());
    return ckpt;
}

}  // namespace ddsp
