#include "multifuser/checkpoint.h"

#include <json.hpp>

#include "binary_io.h"
#include "file_util.h"
#include "multifuser/errors.h"

namespace multifuser {

namespace {

using nlohmann::json;

json config_to_json(const ModelConfig& c) {
    return json{{"modalities", c.modalities}, {"frames", c.frames},
                {"height", c.height},         {"width", c.width},
                {"channels", c.channels},     {"patch", c.patch},
                {"embed_dim", c.embed_dim},   {"heads", c.heads},
                {"layers", c.layers},         {"synth_layers", c.synth_layers},
                {"num_classes", c.num_classes}, {"kernel", c.kernel},
                {"fusion", to_string(c.fusion)}, {"seed", c.seed}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    auto field = [&](const char* key) -> const json& {
        if (!j.contains(key)) throw LoadError("checkpoint manifest: missing model_config." + std::string(key));
        return j.at(key);
    };
    try {
        c.modalities = field("modalities");
        c.frames = field("frames");
        c.height = field("height");
        c.width = field("width");
        c.channels = field("channels");
        c.patch = field("patch");
        c.embed_dim = field("embed_dim");
        c.heads = field("heads");
        c.layers = field("layers");
        c.synth_layers = field("synth_layers");
        c.num_classes = field("num_classes");
        c.kernel = field("kernel");
        c.fusion = parse_fusion_strategy(field("fusion").get<std::string>());
        c.seed = field("seed");
    } catch (const json::exception& e) {
        throw LoadError("checkpoint manifest: bad model_config (" + std::string(e.what()) + ")");
    } catch (const ConfigError& e) {
        throw LoadError("checkpoint manifest: model_config.fusion: " + std::string(e.what()));
    }
    return c;
}

}  // namespace

std::string model_config_json(const ModelConfig& config) { return config_to_json(config).dump(2); }

ModelConfig model_config_from_json(const std::string& text) {
    try {
        return config_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw LoadError(std::string("model config: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& dir, const MultiFuserModel& model, const AdamWState& optimizer,
                     std::size_t epochs_done) {
    const ParamList params = model.parameters();
    if (optimizer.first_moment.size() != params.size() || optimizer.second_moment.size() != params.size()) {
        throw ContractError("save_checkpoint: optimizer state does not match the model");
    }
    json entries = json::array();
    std::size_t offset = 0;
    for (const NamedTensor& p : params) {
        entries.push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"offset", offset}});
        offset += 8 * p.tensor.numel();
    }
    json manifest{{"format", "multifuser-checkpoint"},
                  {"format_version", kCheckpointVersion},
                  {"model_config", config_to_json(model.config())},
                  {"epochs_done", epochs_done},
                  {"optimizer", {{"step", optimizer.step}, {"sections", {"parameters", "first_moment", "second_moment"}}}},
                  {"section_bytes", offset},
                  {"parameters", entries}};

    std::string payload;
    payload.reserve(3 * offset);
    for (const NamedTensor& p : params)
        for (double v : p.tensor.data()) detail::put_f64(payload, v);
    for (const auto* moments : {&optimizer.first_moment, &optimizer.second_moment}) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            if ((*moments)[i].size() != params[i].tensor.numel()) {
                throw ContractError("save_checkpoint: moment size mismatch for " + params[i].name);
            }
            for (double v : (*moments)[i]) detail::put_f64(payload, v);
        }
    }
    std::filesystem::create_directories(dir);
    detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    detail::write_file(dir / "tensors.bin", payload);
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
    json manifest;
    try {
        manifest = json::parse(detail::read_file(dir / "manifest.json"));
    } catch (const json::exception& e) {
        throw LoadError("checkpoint manifest: not valid JSON (" + std::string(e.what()) + ")");
    }
    auto require = [&](const char* key) -> const json& {
        if (!manifest.contains(key)) throw LoadError("checkpoint manifest: missing field '" + std::string(key) + "'");
        return manifest.at(key);
    };
    if (require("format") != "multifuser-checkpoint") throw LoadError("checkpoint manifest: field 'format' is not a checkpoint");
    const json& version = require("format_version");
    if (!version.is_number_integer() || version.get<int>() != kCheckpointVersion) {
        throw LoadError("checkpoint manifest: unsupported format_version " + version.dump());
    }
    const ModelConfig config = config_from_json(require("model_config"));
    try {
        config.validate();
    } catch (const ConfigError& e) {
        throw LoadError("checkpoint manifest: model_config invalid: " + std::string(e.what()));
    }

    MultiFuserModel model(config);
    const ParamList params = model.parameters();
    const json& entries = require("parameters");
    if (!entries.is_array() || entries.size() != params.size()) {
        throw LoadError("checkpoint manifest: field 'parameters' has " + std::to_string(entries.size()) +
                        " entries, model expects " + std::to_string(params.size()));
    }
    std::vector<std::size_t> offsets(params.size());
    std::size_t section = 0;
    try {
        for (std::size_t i = 0; i < params.size(); ++i) {
            const json& e = entries[i];
            if (e.at("name").get<std::string>() != params[i].name) {
                throw LoadError("checkpoint manifest: parameter " + std::to_string(i) + " is '" +
                                e.at("name").get<std::string>() + "', expected '" + params[i].name + "'");
            }
            if (e.at("shape").get<Shape>() != params[i].tensor.shape()) {
                throw LoadError("checkpoint manifest: shape mismatch for '" + params[i].name + "'");
            }
            offsets[i] = e.at("offset").get<std::size_t>();
            if (offsets[i] != section) throw LoadError("checkpoint manifest: bad offset for '" + params[i].name + "'");
            section += 8 * params[i].tensor.numel();
        }
        if (require("section_bytes").get<std::size_t>() != section) {
            throw LoadError("checkpoint manifest: field 'section_bytes' disagrees with parameter shapes");
        }
    } catch (const json::exception& e) {
        throw LoadError("checkpoint manifest: malformed parameter entry (" + std::string(e.what()) + ")");
    }

    const std::string payload = detail::read_file(dir / "tensors.bin");
    if (payload.size() != 3 * section) {
        throw LoadError("checkpoint payload: tensors.bin has " + std::to_string(payload.size()) + " bytes, expected " +
                        std::to_string(3 * section));
    }
    AdamWState optimizer = AdamWState::zeros_like(params);
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor t = params[i].tensor;
        auto values = t.mutable_data();
        for (std::size_t j = 0; j < values.size(); ++j) {
            values[j] = detail::get_f64(payload.data() + offsets[i] + 8 * j);
            optimizer.first_moment[i][j] = detail::get_f64(payload.data() + section + offsets[i] + 8 * j);
            optimizer.second_moment[i][j] = detail::get_f64(payload.data() + 2 * section + offsets[i] + 8 * j);
        }
    }
    Checkpoint out{std::move(model), std::move(optimizer), 0};
    try {
        out.optimizer.step = require("optimizer").at("step").get<std::uint64_t>();
        out.epochs_done = require("epochs_done").get<std::size_t>();
    } catch (const json::exception& e) {
        throw LoadError("checkpoint manifest: field 'optimizer.step' or 'epochs_done' malformed");
    }
    return out;
}

}  // namespace multifuser
