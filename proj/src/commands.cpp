#include "multifuser/commands.h"

#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "file_util.h"
#include "multifuser/checkpoint.h"
#include "multifuser/errors.h"
#include "multifuser/gradient_suite.h"

namespace multifuser {

namespace fs = std::filesystem;

namespace {

struct Datasets {
    std::vector<SyntheticClip> train;
    std::vector<SyntheticClip> eval;
};

Datasets load_or_generate(const Settings& settings) {
    const std::string& dir = settings.get("data.dir");
    if (!dir.empty()) return {load_dataset(fs::path(dir) / "train"), load_dataset(fs::path(dir) / "eval")};
    return {gen_dataset(settings.train_data_spec()), gen_dataset(settings.eval_data_spec())};
}

void print_eval(std::ostream& out, const EvalResult& r) {
    out << std::setprecision(6) << "top1 " << r.top1 << "\nmean1 " << r.mean1 << "\nconfusion (rows = true label)\n";
    for (const auto& row : r.confusion) {
        for (std::size_t j = 0; j < row.size(); ++j) out << (j ? " " : "") << row[j];
        out << '\n';
    }
}

int cmd_gen_data(const Settings& settings, const fs::path& out_dir, std::ostream& out) {
    const DataSpec train_spec = settings.train_data_spec();
    const DataSpec eval_spec = settings.eval_data_spec();
    save_dataset(out_dir / "data" / "train", train_spec, gen_dataset(train_spec));
    save_dataset(out_dir / "data" / "eval", eval_spec, gen_dataset(eval_spec));
    out << "wrote " << train_spec.samples << " train and " << eval_spec.samples << " eval samples to "
        << (out_dir / "data").string() << '\n';
    return kExitOk;
}

int cmd_train(const Settings& settings, const fs::path& out_dir, std::ostream& out) {
    const ModelConfig config = settings.model_config();
    const TrainConfig tc = settings.train_config();
    const Datasets data = load_or_generate(settings);
    MultiFuserModel model(config);
    out << "model " << to_string(config.fusion) << ", " << model.parameter_count() << " parameters\n";

    Trainer trainer(model, tc);
    std::ofstream text(out_dir / "report.txt");
    std::ofstream csv(out_dir / "report.csv");
    csv << "epoch,loss,top1,mean1\n";
    csv << std::setprecision(17);
    for (std::size_t e = 0; e < tc.epochs; ++e) {
        const EpochStats s = trainer.run_epoch(data.train);
        std::ostringstream line;
        line << "epoch " << s.epoch << " loss " << std::setprecision(6) << s.loss << " top1 " << s.top1 << " mean1 "
             << s.mean1;
        out << line.str() << std::endl;
        text << line.str() << '\n';
        csv << s.epoch << ',' << s.loss << ',' << s.top1 << ',' << s.mean1 << '\n';
    }
    save_checkpoint(out_dir / "checkpoint", model, trainer.optimizer_state(), trainer.epochs_done());
    const EvalResult r = evaluate(model, data.eval);
    std::ofstream eval_file(out_dir / "eval.txt");
    print_eval(eval_file, r);
    print_eval(out, r);
    return kExitOk;
}

int cmd_eval(const Settings& settings, const fs::path& checkpoint, std::ostream& out) {
    Checkpoint ckpt = load_checkpoint(checkpoint);
    const Datasets data = load_or_generate(settings);
    print_eval(out, evaluate(ckpt.model, data.eval));
    return kExitOk;
}

int cmd_gradcheck(const Settings& settings, const fs::path& out_dir, std::ostream& out) {
    GradcheckOptions options;
    options.step = settings.get_double("gradcheck.step");
    options.tolerance = settings.get_double("gradcheck.tolerance");
    const auto results = run_gradient_suite(options, settings.get_u64("seed") + 7);
    std::ofstream csv(out_dir / "gradcheck.csv");
    csv << "block,max_rel_error,entries,passed\n";
    bool ok = true;
    for (const SuiteEntry& e : results) {
        out << std::left << std::setw(20) << e.block << " max_rel_error " << std::scientific << std::setprecision(3)
            << e.report.max_rel_error << std::defaultfloat << "  entries " << e.report.entries_checked << "  "
            << (e.report.passed ? "PASS" : "FAIL") << "  worst " << e.report.worst_param << "[" << e.report.worst_index
            << "] analytic " << std::setprecision(10) << e.report.analytic_at_worst << " numeric "
            << e.report.numeric_at_worst << '\n';
        csv << e.block << ',' << std::setprecision(6) << e.report.max_rel_error << ',' << e.report.entries_checked << ','
            << (e.report.passed ? "true" : "false") << '\n';
        ok = ok && e.report.passed;
    }
    return ok ? kExitOk : kExitFailure;
}

int cmd_ablate(const Settings& settings, const fs::path& out_dir, std::ostream& out) {
    const auto rows = run_ablation(settings, settings.get_bool("ablate.cross"), out);
    std::ofstream csv(out_dir / "ablation.csv");
    csv << "subset,strategy,embed_dim,parameters,top1,mean1\n" << std::setprecision(6);
    for (const AblationRow& r : rows) {
        csv << r.subset << ',' << r.strategy << ',' << r.embed_dim << ',' << r.parameters << ',' << r.top1 << ','
            << r.mean1 << '\n';
    }
    out << "wrote " << rows.size() << " rows to " << (out_dir / "ablation.csv").string() << '\n';
    return kExitOk;
}

std::vector<std::vector<std::size_t>> nonempty_subsets(std::size_t m) {
    std::vector<std::vector<std::size_t>> subsets;
    for (std::size_t size = 1; size <= m; ++size) {
        for (std::size_t mask = 1; mask < (std::size_t{1} << m); ++mask) {
            if (static_cast<std::size_t>(__builtin_popcountll(mask)) != size) continue;
            std::vector<std::size_t> s;
            for (std::size_t i = 0; i < m; ++i)
                if (mask & (std::size_t{1} << i)) s.push_back(i);
            subsets.push_back(std::move(s));
        }
    }
    return subsets;
}

}  // namespace

std::string modality_subset_name(const std::vector<std::size_t>& subset) {
    std::string name;
    for (std::size_t m : subset) name += (name.empty() ? "m" : "+m") + std::to_string(m);
    return name;
}

std::vector<AblationRow> run_ablation(const Settings& settings, bool cross, std::ostream& log) {
    const ModelConfig base = settings.model_config();
    const TrainConfig tc = settings.train_config();
    const Datasets data = load_or_generate(settings);

    std::vector<std::pair<std::vector<std::size_t>, FusionStrategy>> runs;
    const auto subsets = nonempty_subsets(base.modalities);
    const FusionStrategy all[] = {FusionStrategy::kParallel, FusionStrategy::kCascade, FusionStrategy::kLate,
                                  FusionStrategy::kEarly};
    for (const auto& subset : subsets) {
        if (cross) {
            for (FusionStrategy s : all) runs.emplace_back(subset, s);
        } else if (subset.size() < base.modalities) {
            runs.emplace_back(subset, FusionStrategy::kParallel);
        } else {
            for (FusionStrategy s : all) runs.emplace_back(subset, s);
        }
    }

    std::vector<AblationRow> rows;
    for (const auto& [subset, strategy] : runs) {
        ModelConfig parallel = base;
        parallel.modalities = subset.size();
        parallel.fusion = FusionStrategy::kParallel;
        ModelConfig config = parallel;
        config.fusion = strategy;
        // Baselines get the width whose parameter count is closest to the parallel model's.
        config = budget_matched_config(config, closed_form_parameter_count(parallel));
        MultiFuserModel model(config);
        const auto train_set = select_modalities(data.train, subset);
        train(model, train_set, tc);
        const EvalResult r = evaluate(model, select_modalities(data.eval, subset));
        rows.push_back({modality_subset_name(subset), to_string(strategy), config.embed_dim, model.parameter_count(), r.top1,
                        r.mean1});
        log << std::setprecision(4) << rows.back().subset << " " << rows.back().strategy << " top1 " << r.top1
            << " mean1 " << r.mean1 << '\n';
    }
    return rows;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv;
    for (const std::string& a : args) argv.push_back(a.c_str());
    return dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"MultiFuser multimodal fusion transformer on synthetic multimodal clips", "multifuser"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::help);
    RunSpec spec;
    std::string config_path, out_dir = "run", checkpoint;
    std::uint64_t seed = 0;

    const std::vector<std::pair<std::string, std::string>> subcommands{
        {"gen-data", "write the synthetic train/eval datasets"},
        {"train", "train a model, write checkpoint and report"},
        {"eval", "evaluate a checkpoint on the eval set"},
        {"gradcheck", "finite-difference check of every block and the end-to-end models"},
        {"ablate", "train/evaluate each modality subset and fusion strategy"},
    };
    for (const auto& [name, help] : subcommands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "flat key = value config file");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--set", spec.overrides, "override, key=value (repeatable)");
        sub->add_option("--seed", seed, "run seed");
        if (name == "eval") sub->add_option("--checkpoint", checkpoint, "checkpoint directory (default OUT/checkpoint)");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    spec.subcommand = app.get_subcommands().front()->get_name();
    spec.config_path = config_path;
    spec.out_dir = out_dir;
    spec.has_seed = app.get_subcommands().front()->count("--seed") > 0;
    spec.seed = seed;
    spec.checkpoint = checkpoint.empty() ? spec.out_dir / "checkpoint" : fs::path(checkpoint);

    Settings settings;
    try {
        settings = spec.resolve();
        settings.model_config();
        settings.train_config();
        settings.train_data_spec();
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n' << app.help();
        return kExitUsage;
    }

    try {
        fs::create_directories(spec.out_dir);
        detail::write_file(spec.out_dir / "config.txt", settings.resolved_text());
        if (spec.subcommand == "gen-data") return cmd_gen_data(settings, spec.out_dir, out);
        if (spec.subcommand == "train") return cmd_train(settings, spec.out_dir, out);
        if (spec.subcommand == "eval") return cmd_eval(settings, spec.checkpoint, out);
        if (spec.subcommand == "gradcheck") return cmd_gradcheck(settings, spec.out_dir, out);
        if (spec.subcommand == "ablate") return cmd_ablate(settings, spec.out_dir, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}

}  // namespace multifuser
