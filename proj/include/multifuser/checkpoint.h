#pragma once

#include <filesystem>
#include <string>

#include "multifuser/model.h"
#include "multifuser/train.h"

namespace multifuser {

inline constexpr int kCheckpointVersion = 1;

// On-disk layout of a checkpoint directory:
//   manifest.json  format_version, model config echo, epochs_done, optimizer
//                  step, and the ordered parameter list (name, shape, byte
//                  offset into each section)
//   tensors.bin    three sections of little-endian float64 in the same
//                  layout: parameters, Adam first moments, second moments
struct Checkpoint {
    MultiFuserModel model;
    AdamWState optimizer;
    std::size_t epochs_done = 0;
};

void save_checkpoint(const std::filesystem::path& dir, const MultiFuserModel& model, const AdamWState& optimizer,
                     std::size_t epochs_done);

// Throws LoadError naming the offending field; never returns a partially
// populated model.
Checkpoint load_checkpoint(const std::filesystem::path& dir);

std::string model_config_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace multifuser
