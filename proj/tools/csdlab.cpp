// csdlab: synthetic common-specific decomposition experiments.
//
//   csdlab generate  --config cfg.json --out data/
//   csdlab compare   --config cfg.json [--out dir] [--workers N] [--seed S]
//   csdlab sweep     --config cfg.json ...
//   csdlab ablate    --config cfg.json ...
//   csdlab decompose --matrix W.csv --k 1 --out dir
//   csdlab diagnose  --checkpoint ckpt.json --dataset data/ --out dir
//
// Exit codes: 0 ok, 2 config/input error, 3 IO error, 4 every run of an arm
// failed, 5 degenerate decomposition.

#include <CLI11.hpp>

#include <iostream>

#include "csdlab/experiment.hpp"

namespace {

using Command = int (*)(const csdlab::CommandOptions&, std::ostream&);

void add_run_flags(CLI::App* sub, csdlab::CommandOptions& o) {
    sub->add_option("--config", o.config, "experiment config (csdlab-cfg-1)")->required();
    sub->add_option("--out", o.out, "output directory (overrides output_dir)");
    sub->add_option("--workers", o.workers, "worker threads (default: CSDLAB_WORKERS or all cores)");
    sub->add_option("--seed", o.seed, "base seed for data and training");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Common-specific decomposition experiments on synthetic multi-domain data"};
    app.require_subcommand(1);
    csdlab::CommandOptions opts;
    Command command = nullptr;

    auto* gen = app.add_subcommand("generate", "write a synthetic dataset");
    gen->add_option("--config", opts.config, "experiment config (generator section is used)")->required();
    gen->add_option("--out", opts.out, "dataset directory (overrides output_dir)");
    gen->add_option("--seed", opts.seed, "generator seed");
    gen->callback([&] { command = csdlab::cmd_generate; });

    auto* cmp = app.add_subcommand("compare", "ERM against CSD over repeated seeds");
    add_run_flags(cmp, opts);
    cmp->callback([&] { command = csdlab::cmd_compare; });

    auto* sw = app.add_subcommand("sweep", "CSD over the k, lambda and kappa axes");
    add_run_flags(sw, opts);
    sw->callback([&] { command = csdlab::cmd_sweep; });

    auto* ab = app.add_subcommand("ablate", "loss-term ablation rows");
    add_run_flags(ab, opts);
    ab->callback([&] { command = csdlab::cmd_ablate; });

    auto* dec = app.add_subcommand("decompose", "closed-form decomposition of an m x D classifier matrix");
    dec->add_option("--matrix", opts.matrix, "CSV matrix, one column per domain")->required();
    dec->add_option("--k", opts.k, "rank of the specific part")->required();
    dec->add_option("--out", opts.out, "output directory")->required();
    dec->callback([&] { command = csdlab::cmd_decompose; });

    auto* dia = app.add_subcommand("diagnose", "component Beta fits and head spectrum of a checkpoint");
    dia->add_option("--checkpoint", opts.checkpoint, "checkpoint (csdlab-ckpt-1)")->required();
    dia->add_option("--dataset", opts.dataset, "dataset directory (csdlab-ds-1)")->required();
    dia->add_option("--out", opts.out, "output directory")->required();
    dia->callback([&] { command = csdlab::cmd_diagnose; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : csdlab::kExitConfig;
    }

    try {
        return command(opts, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return csdlab::exit_code_for(e);
    }
}
