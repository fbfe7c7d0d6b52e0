#include "multifuser/config.h"

#include "multifuser/errors.h"

namespace multifuser {

std::string to_string(FusionStrategy strategy) {
    switch (strategy) {
        case FusionStrategy::kEarly: return "early";
        case FusionStrategy::kLate: return "late";
        case FusionStrategy::kCascade: return "cascade";
        case FusionStrategy::kParallel: return "parallel";
    }
    return "unknown";
}

FusionStrategy parse_fusion_strategy(const std::string& text) {
    if (text == "early") return FusionStrategy::kEarly;
    if (text == "late") return FusionStrategy::kLate;
    if (text == "cascade") return FusionStrategy::kCascade;
    if (text == "parallel") return FusionStrategy::kParallel;
    throw ConfigError("unknown fusion strategy '" + text + "' (expected early|late|cascade|parallel)");
}

void ModelConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v == 0) throw ConfigError(std::string(name) + " must be positive");
    };
    positive(modalities, "modalities");
    positive(frames, "frames");
    positive(height, "height");
    positive(width, "width");
    positive(channels, "channels");
    positive(patch, "patch");
    positive(embed_dim, "embed_dim");
    positive(heads, "heads");
    positive(layers, "layers");
    positive(num_classes, "num_classes");
    if (height % patch != 0 || width % patch != 0) throw ConfigError("frame size must be a multiple of the patch side");
    if (embed_dim % heads != 0) throw ConfigError("embed_dim must be divisible by heads");
    if (synth_layers < 1 || synth_layers > layers) throw ConfigError("synth_layers must lie in [1, layers]");
    if (kernel % 2 == 0) throw ConfigError("kernel side must be odd");
}

ModelConfig tiny_config() {
    ModelConfig c;
    c.modalities = 2;
    c.frames = 2;
    c.height = 16;
    c.width = 16;
    c.channels = 3;
    c.patch = 8;
    c.embed_dim = 8;
    c.heads = 2;
    c.layers = 2;
    c.synth_layers = 1;
    c.num_classes = 4;
    return c;
}

}  // namespace multifuser
