#include "multifuser/gradient_suite.h"

#include <random>

#include "multifuser/expert_vit.h"
#include "multifuser/integration.h"
#include "multifuser/model.h"
#include "multifuser/ops.h"
#include "multifuser/paf.h"

namespace multifuser {

void randomize_parameters(const ParamList& params, std::uint64_t seed, double std) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, std);
    for (const NamedTensor& p : params) {
        Tensor t = p.tensor;
        for (double& v : t.mutable_data()) v = dist(rng);
    }
}

namespace {

Tensor random_tensor(Shape shape, std::mt19937_64& rng, bool requires_grad) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> v(shape_numel(shape));
    for (double& x : v) x = dist(rng);
    return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

// Fixed random projection of a block output to a scalar.
Tensor probe(const Tensor& out, const Tensor& weights) { return sum(mul(out, weights)); }

constexpr double kParamStd = 0.5;

}  // namespace

std::vector<SuiteEntry> run_gradient_suite(const GradcheckOptions& options, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<SuiteEntry> results;
    const std::size_t D = 8, heads = 2;

    {
        ParamInit init(seed + 1);
        PafParams p = PafParams::create(D, heads, init);
        ParamList params;
        p.collect(params, "paf");
        randomize_parameters(params, seed + 2, kParamStd);
        Tensor x = random_tensor({3, D}, rng, true);
        Tensor w = random_tensor({3, D}, rng, false);
        params.push_back({"input", x});
        results.push_back({"paf_block", finite_diff_gradcheck([&] { return probe(paf_block(x, p), w); }, params, options)});
    }
    {
        ParamInit init(seed + 3);
        IntegrationParams p = IntegrationParams::create(D, heads, 3, init);
        ParamList params{{"kernel", p.kernel}};
        randomize_parameters(params, seed + 4, kParamStd);
        Tensor x = random_tensor({2, 4, 2, D}, rng, true);
        Tensor w = random_tensor({2, 4, 2, D}, rng, false);
        params.push_back({"input", x});
        results.push_back({"dynamic_pos_embed",
                           finite_diff_gradcheck([&] { return probe(dynamic_pos_embed(x, p, Grid{2, 2}), w); }, params,
                                                 options)});
    }
    {
        ParamInit init(seed + 5);
        IntegrationParams p = IntegrationParams::create(D, heads, 3, init);
        ParamList params;
        p.collect(params, "integration");
        params.erase(params.begin());  // kernel is not used by the update
        randomize_parameters(params, seed + 6, kParamStd);
        Tensor h = random_tensor({D}, rng, true);
        Tensor x = random_tensor({2, 4, 2, D}, rng, true);
        Tensor w = random_tensor({D}, rng, false);
        params.push_back({"synthesizer", h});
        params.push_back({"fused", x});
        results.push_back({"synthesizer_update",
                           finite_diff_gradcheck([&] { return probe(synthesizer_update(h, x, p), w); }, params, options)});
    }
    {
        ParamInit init(seed + 7);
        VitBlockParams p = VitBlockParams::create(D, heads, init);
        ParamList params;
        p.collect(params, "vit");
        randomize_parameters(params, seed + 8, kParamStd);
        Tensor x = random_tensor({5, D}, rng, true);
        Tensor w = random_tensor({5, D}, rng, false);
        params.push_back({"input", x});
        results.push_back({"vit_block", finite_diff_gradcheck([&] { return probe(vit_block(x, p), w); }, params, options)});
    }
    {
        ParamInit init(seed + 9);
        Linear cls = Linear::create(3 * D, 4, init);
        ParamList params;
        cls.collect(params, "classifier");
        randomize_parameters(params, seed + 10, kParamStd);
        Tensor h = random_tensor({D}, rng, true);
        Tensor tokens = random_tensor({2, D}, rng, true);
        params.push_back({"synthesizer", h});
        params.push_back({"class_tokens", tokens});
        results.push_back({"classify", finite_diff_gradcheck([&] { return cross_entropy(classify(h, tokens, cls), 2); },
                                                             params, options)});
    }
    for (FusionStrategy strategy :
         {FusionStrategy::kParallel, FusionStrategy::kCascade, FusionStrategy::kEarly, FusionStrategy::kLate}) {
        ModelConfig config = tiny_config();
        config.fusion = strategy;
        config.seed = seed + 11;
        MultiFuserModel model(config);
        ParamList params = model.parameters();
        randomize_parameters(params, seed + 12, 0.2);
        std::uniform_real_distribution<double> pixel(0.0, 1.0);
        std::vector<double> values(config.modalities * config.frames * config.height * config.width * config.channels);
        for (double& v : values) v = pixel(rng);
        Tensor pixels = Tensor::from_data({config.modalities, config.frames, config.height, config.width, config.channels},
                                          std::move(values));
        results.push_back({"model_" + to_string(strategy),
                           finite_diff_gradcheck([&] { return cross_entropy(model.forward(pixels), 1); }, params,
                                                 options)});
    }
    return results;
}

}  // namespace multifuser
