#pragma once

// Experiment harness behind the command-line tool: config parsing, seeded
// multi-run scheduling over a worker pool, and CSV/JSON report writing.
//
// Repeat r of every cell uses dataset seed generator.seed + r and training
// seed train.seed + r, so cells are paired run-for-run on identical data.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "csdlab/csd_model.hpp"
#include "csdlab/datagen.hpp"
#include "csdlab/json_fields.hpp"

namespace csdlab {

inline constexpr std::string_view kConfigFormat = "csdlab-cfg-1";

// Stable process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitIo = 3,
    kExitAllRunsFailed = 4,
    kExitDegenerate = 5,
};

struct AblationRow {
    bool use_common_loss = true;
    bool use_specific_loss = true;
    bool use_ortho_reg = true;

    friend bool operator==(const AblationRow&, const AblationRow&) = default;
};

// The six (common, specific, ortho) toggle patterns, baseline first.
std::vector<AblationRow> standard_ablation_rows();

struct SweepAxes {
    std::vector<std::size_t> k;
    std::vector<double> lambda;  // empty means {csd.lambda}
    std::vector<double> kappa;   // empty means {csd.kappa}
};

struct ExperimentConfig {
    GeneratorConfig generator;
    TrainConfig train;
    CsdConfig csd;
    std::size_t repeats = 3;
    std::optional<SweepAxes> sweep;
    std::optional<std::vector<AblationRow>> ablation;
    std::filesystem::path output_dir;
};

// Strict parse: "format" must be "csdlab-cfg-1", "generator" is required,
// unknown fields anywhere raise ConfigError naming the dotted path.
ExperimentConfig experiment_config_from_json(const Json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
Json to_json(const ExperimentConfig& cfg);

// One training run of a cell.
struct RunSpec {
    std::size_t index = 0;   // position in the report
    std::size_t cell = 0;
    std::size_t repeat = 0;
    Mode mode = Mode::csd;
    CsdConfig csd;
    std::uint64_t data_seed = 0;
    std::uint64_t train_seed = 0;
};

struct RunResult {
    RunSpec spec;
    bool ok = false;
    std::string error;
    double in_acc = 0.0;
    double out_acc = 0.0;
    double angle_deg = 0.0;
    double specific_ratio = 0.0;
    Vector scaled_head;  // (w_c[1] − w_c[0]) scaled to unit e_c-coordinate
    HistoryRow final;
    CsdParams params;
    double wall_seconds = 0.0;
};

// ‖P_{E_s}·d‖ / |⟨d, ŵ*⟩| for the common-head difference vector d, with
// ŵ* the normalized ground-truth classifier.
double specific_ratio(std::span<const double> direction, const GeneratorConfig& gen);

// Common-head difference vector scaled so its component along ŵ* is one.
Vector scaled_head_direction(const CsdParams& p, const GeneratorConfig& gen);

// Trains every spec (in parallel when workers > 1) on datasets generated
// from cfg.generator with the spec's data seed. Results come back in index
// order; training failures are recorded, not thrown.
std::vector<RunResult> execute_runs(const ExperimentConfig& cfg, const std::vector<RunSpec>& specs,
                                    std::size_t workers);

struct CellSummary {
    std::size_t cell = 0;
    std::size_t n_ok = 0;
    std::size_t n_failed = 0;
    double in_acc_mean = 0.0, in_acc_std = 0.0;
    double out_acc_mean = 0.0, out_acc_std = 0.0;
    double angle_mean = 0.0, angle_std = 0.0;
    double ratio_mean = 0.0, ratio_std = 0.0, ratio_median = 0.0;
};

// Mean, sample standard deviation (n−1) and median over successful runs,
// summed in run order. NaN where undefined.
CellSummary summarize_cell(const std::vector<RunResult>& runs, std::size_t cell);

struct CommandOptions {
    std::filesystem::path config;
    std::filesystem::path out;
    std::optional<std::size_t> workers;
    std::optional<std::uint64_t> seed;
    std::filesystem::path checkpoint;
    std::filesystem::path dataset;
    std::filesystem::path matrix;
    std::optional<std::size_t> k;
};

// Worker count from the flag, then CSDLAB_WORKERS, then the hardware.
std::size_t resolve_workers(std::optional<std::size_t> flag);

// Each command writes its reports under the output directory and prints a
// short summary to `out`. Errors are thrown as typed exceptions; the
// return value is kExitOk or kExitAllRunsFailed.
int cmd_generate(const CommandOptions& opts, std::ostream& out);
int cmd_compare(const CommandOptions& opts, std::ostream& out);
int cmd_sweep(const CommandOptions& opts, std::ostream& out);
int cmd_ablate(const CommandOptions& opts, std::ostream& out);
int cmd_decompose(const CommandOptions& opts, std::ostream& out);
int cmd_diagnose(const CommandOptions& opts, std::ostream& out);

// Maps an exception thrown by a command to its exit code.
int exit_code_for(const std::exception& e) noexcept;

// Plain numeric CSV without a header row.
Matrix read_matrix_csv(const std::filesystem::path& path);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace csdlab
