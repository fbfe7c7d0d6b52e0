#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "multifuser/run_spec.h"

namespace multifuser {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point behind the `multifuser` binary. Subcommands: gen-data, train,
// eval, gradcheck, ablate.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct AblationRow {
    std::string subset;
    std::string strategy;
    std::size_t embed_dim = 0;
    std::size_t parameters = 0;
    double top1 = 0.0;
    double mean1 = 0.0;
};

// Trains and evaluates one model per (modality subset, strategy) pair. With
// `cross` false the rows are every non-empty subset under parallel fusion
// plus every strategy on the full modality set. Non-parallel strategies are
// widened or narrowed to the parallel model's parameter budget.
std::vector<AblationRow> run_ablation(const Settings& settings, bool cross, std::ostream& log);

std::string modality_subset_name(const std::vector<std::size_t>& subset);

}  // namespace multifuser
