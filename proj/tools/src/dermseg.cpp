// Command-line front end: synth, segment, train, eval.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dermseg/commands.hpp"
#include "dermseg/errors.hpp"

namespace {

// Precedence: built-in defaults, then $DERMSEG_CONFIG, then --config, then
// --set overrides.
dermseg::Config resolve_config(const std::string& config_path,
                               const std::vector<std::string>& overrides) {
    dermseg::Config cfg;
    const char* env = std::getenv("DERMSEG_CONFIG");
    if (env && *env) cfg = dermseg::Config::load(env);
    if (!config_path.empty()) cfg = dermseg::Config::load(config_path);
    for (const std::string& line : overrides) cfg.set_line(line);
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Skin lesion segmentation toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // --config/--set may follow the subcommand

    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "key=value config file");
    app.add_option("--set", overrides, "config override, e.g. --set fcm.c=5");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic lesion dataset");
    dermseg::SynthOptions synth_opt;
    synth->add_option("--out", synth_opt.out_dir, "output directory")->required();
    synth->add_option("--count", synth_opt.count, "number of samples");
    synth->add_option("--seed", synth_opt.seed, "generator seed");
    synth->add_option("--hairs", synth_opt.hairs, "hair strokes per image");
    synth->add_flag("--vignette", synth_opt.vignette, "darken corners");
    synth->add_option("--canvas", synth_opt.canvas, "canvas edge in pixels");
    synth->add_option("--noise", synth_opt.noise_sigma, "additive noise sigma");

    auto* segment = app.add_subcommand("segment", "Segment an image or a dataset directory");
    dermseg::SegmentOptions segment_opt;
    segment->add_option("--method", segment_opt.method, "cluster | unet-a | unet-b")->required();
    segment->add_option("--input", segment_opt.input, "image file or dataset directory")
        ->required();
    segment->add_option("--out", segment_opt.out, "mask file or output directory")->required();
    segment->add_option("--model", segment_opt.model, "checkpoint (unet methods)");
    segment->add_option("--threshold", segment_opt.threshold, "unet-b binarization threshold");
    segment->add_option("--seed", segment_opt.seed, "clustering seed");
    segment->add_option("--jobs", segment_opt.jobs, "worker threads");

    auto* train_cmd = app.add_subcommand("train", "Train a U-Net on a dataset with masks");
    dermseg::TrainOptions train_opt;
    train_cmd->add_option("--data", train_opt.data_dir, "dataset directory")->required();
    train_cmd->add_option("--mode", train_opt.mode, "1a | 1b")->required();
    train_cmd->add_option("--iterations", train_opt.iterations, "training iterations");
    train_cmd->add_option("--seed", train_opt.seed, "training seed");
    train_cmd->add_option("--out", train_opt.out, "checkpoint path")->required();

    auto* eval_cmd = app.add_subcommand("eval", "Cross-validated evaluation with a report");
    dermseg::EvalOptions eval_opt;
    std::vector<std::string> methods;
    eval_cmd->add_option("--data", eval_opt.data_dir, "dataset directory")->required();
    eval_cmd->add_option("--methods", methods, "any of cluster, unet-a, unet-b")
        ->required()
        ->delimiter(',');
    eval_cmd->add_option("--folds", eval_opt.folds, "fold count");
    eval_cmd->add_option("--train-frac", eval_opt.train_frac, "train fraction per fold");
    eval_cmd->add_option("--seed", eval_opt.seed, "fold/training seed");
    eval_cmd->add_option("--out", eval_opt.out_dir, "report directory")->required();
    eval_cmd->add_option("--jobs", eval_opt.jobs, "worker threads");

    CLI11_PARSE(app, argc, argv);

    try {
        dermseg::Config cfg = resolve_config(config_path, overrides);
        if (synth->parsed()) return dermseg::cmd_synth(synth_opt);
        if (segment->parsed()) {
            segment_opt.config = cfg;
            return dermseg::cmd_segment(segment_opt);
        }
        if (train_cmd->parsed()) {
            train_opt.config = cfg;
            return dermseg::cmd_train(train_opt);
        }
        if (eval_cmd->parsed()) {
            eval_opt.config = cfg;
            eval_opt.methods = methods;
            return dermseg::cmd_eval(eval_opt);
        }
    } catch (const dermseg::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return dermseg::kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return dermseg::kExitIo;
    }
    return 0;
}
