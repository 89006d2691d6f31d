#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scar/errors.hpp"
#include "scar/harness.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    bool seed_given = false;
    std::uint64_t seed = 0;

    scar::RunConfig load() const {
        std::vector<std::string> all = overrides;
        if (seed_given) all.push_back("seed=" + std::to_string(seed));
        return scar::RunConfig::load(config_path, all);
    }
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "Config file (key = value lines)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out_dir, "Output directory");
    cmd->add_option("--set", args.overrides, "Override a config key, e.g. --set train.steps=100");
    cmd->add_option("--seed", args.seed, "Override the config seed")
        ->each([&args](const std::string&) { args.seed_given = true; });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"structure-and-contact-aware HOI video toolkit"};
    app.require_subcommand(1);

    CommonArgs synth_args, curate_args, train_args, sample_args, eval_args, oracle_args;
    std::string curate_data, train_data, train_resume, sample_ckpt, sample_cond, eval_generated,
        eval_reference;
    bool train_migrate = false, sample_migrate = false, oracle_fault = false;

    auto* synth = app.add_subcommand("synth-gen", "Generate a synthetic dataset");
    add_common(synth, synth_args);

    auto* curate = app.add_subcommand("curate", "Curate a dataset into RGB/SCAR pairs");
    add_common(curate, curate_args);
    curate->add_option("--data", curate_data, "Dataset directory")->required();

    auto* train = app.add_subcommand("train", "Train the joint denoiser on curated pairs");
    add_common(train, train_args);
    train->add_option("--data", train_data, "Curated dataset directory")->required();
    train->add_option("--resume", train_resume, "Checkpoint to resume from");
    train->add_flag("--migrate", train_migrate, "Load checkpoints with mismatched model shape");

    auto* sample = app.add_subcommand("sample", "Sample RGB + SCAR from a checkpoint");
    add_common(sample, sample_args);
    sample->add_option("--checkpoint", sample_ckpt, "Trained checkpoint")->required();
    sample->add_option("--cond", sample_cond, "Conditioning clip manifest")->required();
    sample->add_flag("--migrate", sample_migrate, "Load checkpoints with mismatched model shape");

    auto* eval = app.add_subcommand("eval", "Compare generated clips against references");
    add_common(eval, eval_args);
    eval->add_option("--generated", eval_generated, "Generated clips directory")->required();
    eval->add_option("--reference", eval_reference, "Reference clips directory")->required();

    auto* oracle = app.add_subcommand("oracle-check", "Run the morphology oracle suite");
    add_common(oracle, oracle_args);
    oracle->add_flag("--inject-fault", oracle_fault,
                     "Test hook: bias the fast path radius by one");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) {
            scar::harness::cmd_synth_gen(synth_args.load(), synth_args.out_dir);
        } else if (curate->parsed()) {
            scar::harness::cmd_curate(curate_args.load(), curate_data, curate_args.out_dir);
        } else if (train->parsed()) {
            scar::harness::cmd_train(train_args.load(), train_data, train_args.out_dir,
                                     train_resume, train_migrate);
        } else if (sample->parsed()) {
            scar::harness::cmd_sample(sample_args.load(), sample_ckpt, sample_cond,
                                      sample_args.out_dir, sample_migrate);
        } else if (eval->parsed()) {
            scar::harness::cmd_eval(eval_args.load(), eval_generated, eval_reference,
                                    eval_args.out_dir);
        } else if (oracle->parsed()) {
            if (!scar::harness::cmd_oracle_check(oracle_args.load(), oracle_args.out_dir,
                                                 oracle_fault))
                return 1;
        }
    } catch (const scar::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
