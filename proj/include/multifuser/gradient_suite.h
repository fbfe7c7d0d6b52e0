#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "multifuser/gradcheck.h"
#include "multifuser/layers.h"

namespace multifuser {

struct SuiteEntry {
    std::string block;
    GradcheckReport report;
};

// Overwrites every parameter with N(0, std^2) draws.
void randomize_parameters(const ParamList& params, std::uint64_t seed, double std);

// Finite-difference checks of every composite block (paf_block,
// dynamic_pos_embed, synthesizer_update, vit_block, classify) and of all four
// end-to-end forwards on the tiny config, with inputs and parameters drawn
// from `seed`.
std::vector<SuiteEntry> run_gradient_suite(const GradcheckOptions& options, std::uint64_t seed = 7);

}  // namespace multifuser
