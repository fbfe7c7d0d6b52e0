#pragma once

#include <vector>

#include "multifuser/config.h"
#include "multifuser/expert_vit.h"
#include "multifuser/integration.h"
#include "multifuser/paf.h"
#include "multifuser/patch_embedding.h"

namespace multifuser {

// logits = concat(h, class tokens flattened) W + b. `synthesizer` may be
// undefined (late / early fusion classify from class tokens alone).
Tensor classify(const Tensor& synthesizer, const Tensor& class_tokens, const Linear& classifier);

// Full network for one fusion strategy. Parameters are created from
// config.seed; which blocks exist depends on the strategy:
//   parallel  embedding, N layers of experts, PAF + integration in the last K
//   cascade   embedding, N layers of experts, PAF in every layer, integration in the last K
//   late      embedding, N layers of experts
//   early     embedding with one shared class token, N shared ViT blocks
class MultiFuserModel {
  public:
    explicit MultiFuserModel(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }

    // pixels [M, T, H, W, C] -> logits [n_classes], dispatched on the
    // configured strategy. `final_state` receives the last layer's tokens.
    Tensor forward(const Tensor& pixels, TokenState* final_state = nullptr) const;
    Tensor forward_parallel(const Tensor& pixels, TokenState* final_state = nullptr) const;
    Tensor forward_cascade(const Tensor& pixels, TokenState* final_state = nullptr) const;
    Tensor forward_early(const Tensor& pixels, TokenState* final_state = nullptr) const;
    Tensor forward_late(const Tensor& pixels, TokenState* final_state = nullptr) const;

    // Named parameters in a fixed order (the checkpoint order).
    ParamList parameters() const;
    std::size_t parameter_count() const;

    // Deep copy with independent storage.
    MultiFuserModel clone() const;

    Grid grid() const { return {config_.grid_rows(), config_.grid_cols()}; }
    const PafParams& paf_for_layer(std::size_t layer) const;
    const IntegrationParams& integration_for_layer(std::size_t layer) const;

    EmbeddingParams embedding;
    std::vector<ExpertParams> experts;          // per layer (not early)
    std::vector<VitBlockParams> shared_blocks;  // per layer (early only)
    std::vector<PafParams> paf;                 // K entries (parallel) or N (cascade)
    std::vector<IntegrationParams> integration;  // K entries
    Tensor synthesizer_init;                     // [D]
    Linear classifier;

  private:
    TokenState embed_input(const Tensor& pixels) const;
    void require(FusionStrategy strategy) const;

    ModelConfig config_;
};

// Parameter count implied by the config alone (see README for the formula).
std::size_t closed_form_parameter_count(const ModelConfig& config);

// Copy of `config` whose embed_dim (a multiple of heads, at most four times
// the original) gives the parameter count closest to `target`; ties go to
// the smaller width.
ModelConfig budget_matched_config(const ModelConfig& config, std::size_t target);

}  // namespace multifuser
