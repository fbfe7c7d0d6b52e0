#include "multifuser/model.h"

#include <cstdint>

#include "multifuser/decomposition.h"
#include "multifuser/errors.h"
#include "multifuser/ops.h"

namespace multifuser {

Tensor classify(const Tensor& synthesizer, const Tensor& class_tokens, const Linear& classifier) {
    std::vector<Tensor> parts;
    if (synthesizer.defined()) parts.push_back(reshape(synthesizer, {1, synthesizer.numel()}));
    parts.push_back(reshape(class_tokens, {1, class_tokens.numel()}));
    Tensor features = parts.size() == 1 ? parts.front() : concat(parts, 1);
    if (features.extent(1) != classifier.weight.extent(0)) {
        throw DimensionError("classify: " + std::to_string(features.extent(1)) + " features vs classifier " +
                             shape_str(classifier.weight.shape()));
    }
    Tensor logits = classifier.apply(features);
    return reshape(logits, {logits.numel()});
}

MultiFuserModel::MultiFuserModel(const ModelConfig& config) : config_(config) {
    config_.validate();
    ParamInit init(config_.seed);
    const std::size_t M = config_.modalities, D = config_.embed_dim, H = config_.heads;
    const std::size_t N = config_.layers, K = config_.synth_layers;
    const FusionStrategy strategy = config_.fusion;

    embedding = EmbeddingParams::create(config_, strategy == FusionStrategy::kEarly ? 1 : M, init);
    std::size_t features = 0;
    if (strategy == FusionStrategy::kEarly) {
        for (std::size_t i = 0; i < N; ++i) shared_blocks.push_back(VitBlockParams::create(D, H, init));
        features = D;
    } else {
        for (std::size_t i = 0; i < N; ++i) experts.push_back(ExpertParams::create(M, D, H, init));
        features = M * D;
    }
    if (strategy == FusionStrategy::kParallel || strategy == FusionStrategy::kCascade) {
        const std::size_t paf_layers = strategy == FusionStrategy::kCascade ? N : K;
        for (std::size_t i = 0; i < paf_layers; ++i) paf.push_back(PafParams::create(D, H, init));
        for (std::size_t i = 0; i < K; ++i) integration.push_back(IntegrationParams::create(D, H, config_.kernel, init));
        synthesizer_init = init.normal({D});
        features += D;
    }
    classifier = Linear::create(features, config_.num_classes, init);
}

const PafParams& MultiFuserModel::paf_for_layer(std::size_t layer) const {
    if (config_.fusion == FusionStrategy::kCascade) return paf.at(layer);
    if (!config_.has_synthesizer(layer)) throw ContractError("no PAF block at layer " + std::to_string(layer));
    return paf.at(layer + config_.synth_layers - config_.layers);
}

const IntegrationParams& MultiFuserModel::integration_for_layer(std::size_t layer) const {
    if (!config_.has_synthesizer(layer)) throw ContractError("no integration block at layer " + std::to_string(layer));
    return integration.at(layer + config_.synth_layers - config_.layers);
}

TokenState MultiFuserModel::embed_input(const Tensor& pixels) const {
    return embed(patchify(pixels, config_), embedding, grid());
}

void MultiFuserModel::require(FusionStrategy strategy) const {
    if (config_.fusion != strategy) {
        throw ContractError("model built for " + to_string(config_.fusion) + " fusion cannot run " +
                            to_string(strategy));
    }
}

Tensor MultiFuserModel::forward(const Tensor& pixels, TokenState* final_state) const {
    switch (config_.fusion) {
        case FusionStrategy::kParallel: return forward_parallel(pixels, final_state);
        case FusionStrategy::kCascade: return forward_cascade(pixels, final_state);
        case FusionStrategy::kEarly: return forward_early(pixels, final_state);
        case FusionStrategy::kLate: return forward_late(pixels, final_state);
    }
    throw ContractError("unknown fusion strategy");
}

Tensor MultiFuserModel::forward_parallel(const Tensor& pixels, TokenState* final_state) const {
    require(FusionStrategy::kParallel);
    const std::size_t S = config_.spatial(), T = config_.frames;
    TokenState x = embed_input(pixels);
    for (std::size_t i = 0; i < config_.layers; ++i) {
        TokenState next = inter_stream_layer(x, experts[i]);
        if (config_.has_synthesizer(i)) {
            // The intra stream reads the same X_i; its output only feeds the synthesizer.
            Tensor fused = intra_unview(paf_block(intra_view(x.patches), paf_for_layer(i)), S, T);
            const IntegrationParams& integ = integration_for_layer(i);
            Tensor fused_hat = dynamic_pos_embed(fused, integ, x.grid);
            Tensor h = x.synthesizer.defined() ? x.synthesizer : synthesizer_init;
            next.synthesizer = synthesizer_update(h, fused_hat, integ);
        }
        x = std::move(next);
    }
    if (!x.synthesizer.defined()) throw ContractError("forward_parallel: no synthesizer at the final layer");
    if (final_state) *final_state = x;
    return classify(x.synthesizer, x.class_tokens, classifier);
}

Tensor MultiFuserModel::forward_cascade(const Tensor& pixels, TokenState* final_state) const {
    require(FusionStrategy::kCascade);
    const std::size_t S = config_.spatial(), T = config_.frames;
    TokenState x = embed_input(pixels);
    for (std::size_t i = 0; i < config_.layers; ++i) {
        TokenState next = inter_stream_layer(x, experts[i]);
        next.patches = intra_unview(paf_block(intra_view(next.patches), paf_for_layer(i)), S, T);
        if (config_.has_synthesizer(i)) {
            const IntegrationParams& integ = integration_for_layer(i);
            Tensor fused_hat = dynamic_pos_embed(next.patches, integ, x.grid);
            Tensor h = x.synthesizer.defined() ? x.synthesizer : synthesizer_init;
            next.synthesizer = synthesizer_update(h, fused_hat, integ);
        }
        x = std::move(next);
    }
    if (!x.synthesizer.defined()) throw ContractError("forward_cascade: no synthesizer at the final layer");
    if (final_state) *final_state = x;
    return classify(x.synthesizer, x.class_tokens, classifier);
}

Tensor MultiFuserModel::forward_early(const Tensor& pixels, TokenState* final_state) const {
    require(FusionStrategy::kEarly);
    TokenState x = embed_input(pixels);
    const std::size_t D = config_.embed_dim;
    const std::size_t tokens = x.patches.numel() / D;
    Tensor sequence = concat({x.class_tokens, reshape(x.patches, {tokens, D})}, 0);
    for (const VitBlockParams& block : shared_blocks) sequence = vit_block(sequence, block);
    x.class_tokens = slice(sequence, 0, 0, 1);
    x.patches = reshape(slice(sequence, 0, 1, tokens + 1), x.patches.shape());
    if (final_state) *final_state = x;
    return classify(Tensor(), x.class_tokens, classifier);
}

Tensor MultiFuserModel::forward_late(const Tensor& pixels, TokenState* final_state) const {
    require(FusionStrategy::kLate);
    TokenState x = embed_input(pixels);
    for (const ExpertParams& layer : experts) x = inter_stream_layer(x, layer);
    if (final_state) *final_state = x;
    return classify(Tensor(), x.class_tokens, classifier);
}

ParamList MultiFuserModel::parameters() const {
    ParamList out;
    embedding.collect(out, "embed");
    for (std::size_t i = 0; i < experts.size(); ++i) experts[i].collect(out, "layer" + std::to_string(i) + ".vit");
    for (std::size_t i = 0; i < shared_blocks.size(); ++i) {
        shared_blocks[i].collect(out, "layer" + std::to_string(i) + ".vit");
    }
    const std::size_t first_paf = config_.fusion == FusionStrategy::kCascade ? 0 : config_.layers - config_.synth_layers;
    for (std::size_t i = 0; i < paf.size(); ++i) paf[i].collect(out, "layer" + std::to_string(first_paf + i) + ".paf");
    const std::size_t first_synth = config_.layers - config_.synth_layers;
    for (std::size_t i = 0; i < integration.size(); ++i) {
        integration[i].collect(out, "layer" + std::to_string(first_synth + i) + ".integration");
    }
    if (synthesizer_init.defined()) out.push_back({"synthesizer.init", synthesizer_init});
    classifier.collect(out, "classifier");
    return out;
}

std::size_t MultiFuserModel::parameter_count() const {
    std::size_t n = 0;
    for (const NamedTensor& p : parameters()) n += p.tensor.numel();
    return n;
}

MultiFuserModel MultiFuserModel::clone() const {
    MultiFuserModel copy(config_);
    ParamList src = parameters();
    ParamList dst = copy.parameters();
    for (std::size_t i = 0; i < src.size(); ++i) {
        auto from = src[i].tensor.data();
        auto to = dst[i].tensor.mutable_data();
        std::copy(from.begin(), from.end(), to.begin());
    }
    return copy;
}

std::size_t closed_form_parameter_count(const ModelConfig& c) {
    const std::size_t M = c.modalities, D = c.embed_dim, N = c.layers, K = c.synth_layers, C = c.num_classes;
    const std::size_t k3 = c.kernel * c.kernel * c.kernel;
    const std::size_t vit = 12 * D * D + 13 * D;
    const std::size_t paf = 12 * D * D + 9 * D;
    const std::size_t integ = 12 * D * D + (13 + k3) * D;
    const std::size_t base = M * c.patch_dim() * D + c.spatial() * c.frames * D;
    switch (c.fusion) {
        case FusionStrategy::kEarly: return base + D + N * vit + D * C + C;
        case FusionStrategy::kLate: return base + M * D + N * M * vit + M * D * C + C;
        case FusionStrategy::kParallel:
            return base + M * D + N * M * vit + K * paf + K * integ + D + (M + 1) * D * C + C;
        case FusionStrategy::kCascade:
            return base + M * D + N * M * vit + N * paf + K * integ + D + (M + 1) * D * C + C;
    }
    return 0;
}

ModelConfig budget_matched_config(const ModelConfig& config, std::size_t target) {
    ModelConfig best = config;
    std::size_t best_gap = SIZE_MAX;
    for (std::size_t d = config.heads; d <= 4 * config.embed_dim; d += config.heads) {
        ModelConfig candidate = config;
        candidate.embed_dim = d;
        const std::size_t count = closed_form_parameter_count(candidate);
        const std::size_t gap = count > target ? count - target : target - count;
        if (gap < best_gap) {
            best_gap = gap;
            best = candidate;
        }
    }
    return best;
}

}  // namespace multifuser
