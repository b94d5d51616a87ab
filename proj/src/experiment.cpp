#include "csdlab/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <thread>

#include "csdlab/decompose.hpp"
#include "csdlab/diagnostics.hpp"
#include "csdlab/error.hpp"

namespace csdlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double x) {
    if (std::isnan(x)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

const char* yn(bool b) { return b ? "Y" : "N"; }

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::size_t> count_list(FieldReader& r, std::string_view name) {
    const auto xs = r.u64_list(name);
    return {xs.begin(), xs.end()};
}

AblationRow ablation_row_from_json(FieldReader& r) {
    AblationRow row;
    row.use_common_loss = r.boolean("use_common_loss");
    row.use_specific_loss = r.boolean("use_specific_loss");
    row.use_ortho_reg = r.boolean("use_ortho_reg");
    r.reject_unknown();
    return row;
}

ExperimentConfig load_with_overrides(const CommandOptions& opts) {
    if (opts.config.empty()) throw ConfigError("--config", "a config file is required");
    ExperimentConfig cfg = load_experiment_config(opts.config);
    if (opts.seed) {
        cfg.generator.seed = *opts.seed;
        cfg.train.seed = *opts.seed;
    }
    if (!opts.out.empty()) cfg.output_dir = opts.out;
    if (cfg.output_dir.empty()) throw ConfigError("output_dir", "required unless --out is given");
    return cfg;
}

std::filesystem::path require_out(const CommandOptions& opts) {
    if (opts.out.empty()) throw ConfigError("--out", "an output directory is required");
    return opts.out;
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string cell_key(Mode mode, const CsdConfig& c) {
    return std::string(to_string(mode)) + "," + std::to_string(c.k) + "," + num(c.lambda) + "," + num(c.kappa) +
           "," + yn(c.use_common_loss) + "," + yn(c.use_specific_loss) + "," + yn(c.use_ortho_reg);
}

struct Cell {
    Mode mode = Mode::csd;
    CsdConfig csd;
};

std::vector<RunSpec> expand(const ExperimentConfig& cfg, const std::vector<Cell>& cells) {
    std::vector<RunSpec> specs;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        for (std::size_t r = 0; r < cfg.repeats; ++r) {
            RunSpec s;
            s.index = specs.size();
            s.cell = c;
            s.repeat = r;
            s.mode = cells[c].mode;
            s.csd = cells[c].csd;
            s.data_seed = cfg.generator.seed + r;
            s.train_seed = cfg.train.seed + r;
            specs.push_back(s);
        }
    }
    return specs;
}

std::string runs_csv(const std::vector<RunResult>& runs) {
    std::string s =
        "run,cell,repeat,data_seed,train_seed,mode,k,lambda,kappa,use_common,use_specific,use_ortho,status,"
        "in_acc,out_acc,angle_deg,specific_ratio,final_l_s,final_l_c,final_r,error\n";
    for (const RunResult& r : runs) {
        const RunSpec& sp = r.spec;
        s += std::to_string(sp.index) + "," + std::to_string(sp.cell) + "," + std::to_string(sp.repeat) + "," +
             std::to_string(sp.data_seed) + "," + std::to_string(sp.train_seed) + "," +
             cell_key(sp.mode, sp.csd) + "," + (r.ok ? "ok" : "failed") + ",";
        if (r.ok) {
            s += num(r.in_acc) + "," + num(r.out_acc) + "," + num(r.angle_deg) + "," + num(r.specific_ratio) + "," +
                 num(r.final.l_s) + "," + num(r.final.l_c) + "," + num(r.final.r) + ",\n";
        } else {
            std::string err = r.error;
            std::replace(err.begin(), err.end(), ',', ';');
            std::replace(err.begin(), err.end(), '\n', ' ');
            s += "nan,nan,nan,nan,nan,nan,nan," + err + "\n";
        }
    }
    return s;
}

std::string aggregate_csv(const std::vector<RunResult>& runs, const std::vector<Cell>& cells) {
    std::string s =
        "cell,mode,k,lambda,kappa,use_common,use_specific,use_ortho,n_ok,n_failed,in_acc_mean,in_acc_std,"
        "out_acc_mean,out_acc_std,angle_mean,angle_std,ratio_mean,ratio_std,ratio_median\n";
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const CellSummary a = summarize_cell(runs, c);
        s += std::to_string(c) + "," + cell_key(cells[c].mode, cells[c].csd) + "," + std::to_string(a.n_ok) + "," +
             std::to_string(a.n_failed) + "," + num(a.in_acc_mean) + "," + num(a.in_acc_std) + "," +
             num(a.out_acc_mean) + "," + num(a.out_acc_std) + "," + num(a.angle_mean) + "," + num(a.angle_std) +
             "," + num(a.ratio_mean) + "," + num(a.ratio_std) + "," + num(a.ratio_median) + "\n";
    }
    return s;
}

Json cells_json(const std::vector<RunResult>& runs, const std::vector<Cell>& cells) {
    Json out = Json::array();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const CellSummary a = summarize_cell(runs, c);
        out.push_back({{"cell", c},
                       {"mode", std::string(to_string(cells[c].mode))},
                       {"csd", to_json(cells[c].csd)},
                       {"n_ok", a.n_ok},
                       {"n_failed", a.n_failed},
                       {"out_acc_mean", a.out_acc_mean},
                       {"out_acc_std", a.out_acc_std},
                       {"ratio_median", a.ratio_median}});
    }
    return out;
}

void write_run_reports(const std::filesystem::path& dir, const std::vector<RunResult>& runs,
                       const std::vector<Cell>& cells, Json report) {
    ensure_dir(dir);
    write_file_atomic(dir / "runs.csv", runs_csv(runs));
    write_file_atomic(dir / "aggregate.csv", aggregate_csv(runs, cells));
    report["cells"] = cells_json(runs, cells);
    write_file_atomic(dir / "report.json", report.dump(2) + "\n");
}

Json report_header(std::string_view command, const ExperimentConfig& cfg) {
    return Json{{"command", std::string(command)}, {"config", to_json(cfg)}};
}

// Exit status for a set of arms: every arm needs at least one success.
int arms_status(const std::vector<RunResult>& runs, std::size_t num_cells) {
    std::vector<std::size_t> ok(num_cells, 0);
    for (const RunResult& r : runs) ok[r.spec.cell] += r.ok;
    for (std::size_t c : ok) {
        if (c == 0) return kExitAllRunsFailed;
    }
    return kExitOk;
}

void print_cells(std::ostream& out, const std::vector<RunResult>& runs, const std::vector<Cell>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const CellSummary a = summarize_cell(runs, c);
        out << cell_key(cells[c].mode, cells[c].csd) << "  ok=" << a.n_ok << " failed=" << a.n_failed
            << "  out_acc=" << num(a.out_acc_mean) << " ± " << num(a.out_acc_std)
            << "  ratio_median=" << num(a.ratio_median) << "\n";
    }
}

std::string matrix_csv(const Matrix& m) {
    std::string s;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) s += ",";
            s += num(m(i, j));
        }
        s += "\n";
    }
    return s;
}

double mean_pairwise_gap(const std::vector<double>& xs) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = i + 1; j < xs.size(); ++j) {
            sum += std::abs(xs[i] - xs[j]);
            ++n;
        }
    }
    return n ? sum / static_cast<double>(n) : kNaN;
}

}  // namespace

std::vector<AblationRow> standard_ablation_rows() {
    return {{true, false, false}, {false, true, false}, {false, true, true},
            {true, false, true},  {true, true, false},  {true, true, true}};
}

ExperimentConfig experiment_config_from_json(const Json& doc) {
    FieldReader top(doc, "");
    const std::string format = top.string("format");
    if (format != kConfigFormat) throw ConfigError("format", "expected \"" + std::string(kConfigFormat) + "\", got \"" + format + "\"");

    ExperimentConfig cfg;
    FieldReader gen = top.object("generator");
    cfg.generator = generator_config_from_json(gen);
    if (top.has("train")) {
        FieldReader tr = top.object("train");
        cfg.train = train_config_from_json(tr);
    }
    if (top.has("csd")) {
        FieldReader cr = top.object("csd");
        cfg.csd = csd_config_from_json(cr);
    }
    cfg.repeats = top.count_or("repeats", cfg.repeats);
    if (cfg.repeats == 0) throw ConfigError("repeats", "must be at least 1");

    if (top.has("sweep")) {
        FieldReader sw = top.object("sweep");
        SweepAxes axes;
        if (sw.has("k")) axes.k = count_list(sw, "k");
        if (sw.has("lambda")) axes.lambda = sw.number_list("lambda");
        if (sw.has("kappa")) axes.kappa = sw.number_list("kappa");
        sw.reject_unknown();
        for (double l : axes.lambda) {
            if (l < 0.0) throw ConfigError("sweep.lambda", "values must be non-negative");
        }
        for (double k : axes.kappa) {
            if (k < 0.0) throw ConfigError("sweep.kappa", "values must be non-negative");
        }
        cfg.sweep = axes;
    }
    if (top.has("ablation")) {
        const Json& ab = top.raw("ablation");
        if (ab.is_string()) {
            if (ab.get<std::string>() != "standard") throw ConfigError("ablation", "expected \"standard\" or a list of rows");
            cfg.ablation = standard_ablation_rows();
        } else if (ab.is_array()) {
            std::vector<AblationRow> rows;
            for (std::size_t i = 0; i < ab.size(); ++i) {
                FieldReader rr(ab[i], "ablation[" + std::to_string(i) + "]");
                rows.push_back(ablation_row_from_json(rr));
            }
            if (rows.empty()) throw ConfigError("ablation", "must not be empty");
            cfg.ablation = rows;
        } else {
            throw ConfigError("ablation", "expected \"standard\" or a list of rows");
        }
    }
    cfg.output_dir = top.string_or("output_dir", "");
    top.reject_unknown();
    return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ConfigError(path.filename().string(), std::string("invalid JSON: ") + e.what());
    }
    return experiment_config_from_json(doc);
}

Json to_json(const ExperimentConfig& cfg) {
    Json j{{"format", std::string(kConfigFormat)},
           {"generator", to_json(cfg.generator)},
           {"train", to_json(cfg.train)},
           {"csd", to_json(cfg.csd)},
           {"repeats", cfg.repeats},
           {"output_dir", cfg.output_dir.generic_string()}};
    if (cfg.sweep) {
        Json sw = Json::object();
        sw["k"] = cfg.sweep->k;
        sw["lambda"] = cfg.sweep->lambda;
        sw["kappa"] = cfg.sweep->kappa;
        j["sweep"] = sw;
    }
    if (cfg.ablation) {
        Json rows = Json::array();
        for (const AblationRow& r : *cfg.ablation) {
            rows.push_back({{"use_common_loss", r.use_common_loss},
                            {"use_specific_loss", r.use_specific_loss},
                            {"use_ortho_reg", r.use_ortho_reg}});
        }
        j["ablation"] = rows;
    }
    return j;
}

Vector scaled_head_direction(const CsdParams& p, const GeneratorConfig& gen) {
    if (p.classes != 2) throw InvalidArgument("scaled_head_direction: needs a binary head");
    if (p.feature_map.kind != FeatureKind::identity) {
        throw InvalidArgument("scaled_head_direction: only defined for the identity feature map");
    }
    const Vector truth = ground_truth_classifier(gen);
    const double tn = norm(truth);
    if (tn == 0.0) throw InvalidArgument("scaled_head_direction: ground-truth classifier is zero");
    const Vector d = subtract(p.w_c.row(1), p.w_c.row(0));
    const double along = dot(d, truth) / tn;
    if (along == 0.0) throw InvalidArgument("scaled_head_direction: head has no ground-truth component");
    return scale(1.0 / along, d);
}

double specific_ratio(std::span<const double> direction, const GeneratorConfig& gen) {
    const Vector truth = ground_truth_classifier(gen);
    const double tn = norm(truth);
    if (tn == 0.0) throw InvalidArgument("specific_ratio: ground-truth classifier is zero");
    const double along = std::abs(dot(direction, truth)) / tn;
    if (along == 0.0) return std::numeric_limits<double>::infinity();
    return norm(project_onto_span(gen.e_s, direction)) / along;
}

std::vector<RunResult> execute_runs(const ExperimentConfig& cfg, const std::vector<RunSpec>& specs,
                                    std::size_t workers) {
    // One dataset per distinct data seed, shared read-only by every run.
    std::vector<MultiDomainDataset> datasets(cfg.repeats);
    for (std::size_t r = 0; r < cfg.repeats; ++r) {
        GeneratorConfig g = cfg.generator;
        g.seed = cfg.generator.seed + r;
        datasets[r] = generate(g);
    }

    std::vector<RunResult> results(specs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < specs.size(); i = next++) {
            const RunSpec& sp = specs[i];
            RunResult& res = results[i];
            res.spec = sp;
            const auto t0 = std::chrono::steady_clock::now();
            try {
                const MultiDomainDataset& ds = datasets.at(sp.repeat);
                TrainConfig tc = cfg.train;
                tc.mode = sp.mode;
                tc.seed = sp.train_seed;
                TrainResult tr = train(ds, tc, sp.csd);
                res.params = std::move(tr.params);
                res.final = tr.history.back();
                res.in_acc = cfg.generator.n_holdout_per_domain > 0
                                 ? accuracy(res.params, ds, EvalSet::train_holdout, Head::common)
                                 : kNaN;
                res.out_acc = cfg.generator.d_test > 0 ? accuracy(res.params, ds, EvalSet::test, Head::common) : kNaN;
                const Vector d = subtract(res.params.w_c.row(1), res.params.w_c.row(0));
                if (res.params.feature_map.kind == FeatureKind::identity && res.params.classes == 2) {
                    res.angle_deg = angle_to_truth(d, ground_truth_classifier(cfg.generator));
                    res.specific_ratio = specific_ratio(d, cfg.generator);
                    res.scaled_head = scaled_head_direction(res.params, cfg.generator);
                } else {
                    res.angle_deg = kNaN;
                    res.specific_ratio = kNaN;
                }
                res.ok = true;
            } catch (const Error& e) {
                res.ok = false;
                res.error = e.what();
            }
            res.wall_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    };

    const std::size_t n = std::max<std::size_t>(1, std::min(workers, specs.size()));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    }
    return results;
}

CellSummary summarize_cell(const std::vector<RunResult>& runs, std::size_t cell) {
    CellSummary s;
    s.cell = cell;
    std::vector<double> in, out, angle, ratio;
    for (const RunResult& r : runs) {
        if (r.spec.cell != cell) continue;
        if (!r.ok) {
            ++s.n_failed;
            continue;
        }
        ++s.n_ok;
        in.push_back(r.in_acc);
        out.push_back(r.out_acc);
        angle.push_back(r.angle_deg);
        ratio.push_back(r.specific_ratio);
    }
    auto stats = [](const std::vector<double>& xs, double& mean, double& sd) {
        if (xs.empty()) {
            mean = sd = kNaN;
            return;
        }
        double sum = 0.0;
        for (double x : xs) sum += x;
        mean = sum / static_cast<double>(xs.size());
        if (xs.size() < 2) {
            sd = kNaN;
            return;
        }
        double ss = 0.0;
        for (double x : xs) ss += (x - mean) * (x - mean);
        sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    };
    stats(in, s.in_acc_mean, s.in_acc_std);
    stats(out, s.out_acc_mean, s.out_acc_std);
    stats(angle, s.angle_mean, s.angle_std);
    stats(ratio, s.ratio_mean, s.ratio_std);
    if (ratio.empty()) {
        s.ratio_median = kNaN;
    } else {
        std::sort(ratio.begin(), ratio.end());
        const std::size_t n = ratio.size();
        s.ratio_median = n % 2 ? ratio[n / 2] : 0.5 * (ratio[n / 2 - 1] + ratio[n / 2]);
    }
    return s;
}

std::size_t resolve_workers(std::optional<std::size_t> flag) {
    if (flag) {
        if (*flag == 0) throw ConfigError("--workers", "must be at least 1");
        return *flag;
    }
    if (const char* env = std::getenv("CSDLAB_WORKERS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (*end != '\0' || v == 0) throw ConfigError("CSDLAB_WORKERS", "must be a positive integer");
        return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_generate(const CommandOptions& opts, std::ostream& out) {
    const ExperimentConfig cfg = load_with_overrides(opts);
    const MultiDomainDataset ds = generate(cfg.generator);
    save(ds, cfg.output_dir);

    std::size_t samples = 0;
    for (const DomainData& d : ds.domains) samples += d.x.rows();
    out << "domains: " << ds.domains.size() << " (train " << cfg.generator.d_train << ", val "
        << cfg.generator.d_val << ", test " << cfg.generator.d_test << ")\n";
    out << "samples: " << samples << "\n";
    out << "seed: " << cfg.generator.seed << "\n";
    out << "ground-truth classifier:";
    for (double v : ground_truth_classifier(cfg.generator)) out << " " << num(v);
    out << "\nwrote " << cfg.output_dir.string() << "\n";
    return kExitOk;
}

int cmd_compare(const CommandOptions& opts, std::ostream& out) {
    const ExperimentConfig cfg = load_with_overrides(opts);
    const std::vector<Cell> cells = {{Mode::erm, cfg.csd}, {Mode::csd, cfg.csd}};
    const auto runs = execute_runs(cfg, expand(cfg, cells), resolve_workers(opts.workers));
    for (const RunResult& r : runs) {
        std::cerr << "run " << r.spec.index << " (" << to_string(r.spec.mode) << ", repeat " << r.spec.repeat
                  << "): " << num(r.wall_seconds) << " s\n";
    }

    ensure_dir(cfg.output_dir / "checkpoints");
    std::string heads = "run,repeat,mode,status";
    const std::size_t m = cfg.generator.m;
    for (std::size_t l = 0; l < m; ++l) heads += ",c" + std::to_string(l);
    heads += "\n";
    std::size_t csd_below = 0, paired = 0;
    for (const RunResult& r : runs) {
        heads += std::to_string(r.spec.index) + "," + std::to_string(r.spec.repeat) + "," +
                 std::string(to_string(r.spec.mode)) + "," + (r.ok ? "ok" : "failed");
        for (std::size_t l = 0; l < m; ++l) heads += "," + (r.ok && !r.scaled_head.empty() ? num(r.scaled_head[l]) : "nan");
        heads += "\n";
        if (r.ok) {
            char name[64];
            std::snprintf(name, sizeof name, "run_%03zu_%s.json", r.spec.index, std::string(to_string(r.spec.mode)).c_str());
            TrainConfig tc = cfg.train;
            tc.mode = r.spec.mode;
            tc.seed = r.spec.train_seed;
            save_checkpoint({r.params, tc, r.spec.csd}, cfg.output_dir / "checkpoints" / name);
        }
    }
    for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
        const RunResult& e = runs[rep];
        const RunResult& c = runs[cfg.repeats + rep];
        if (e.ok && c.ok) {
            ++paired;
            csd_below += c.specific_ratio < e.specific_ratio;
        }
    }
    write_file_atomic(cfg.output_dir / "heads.csv", heads);

    Json report = report_header("compare", cfg);
    report["erm_ratio_median"] = summarize_cell(runs, 0).ratio_median;
    report["csd_ratio_median"] = summarize_cell(runs, 1).ratio_median;
    report["csd_below_erm"] = csd_below;
    report["paired_runs"] = paired;
    write_run_reports(cfg.output_dir, runs, cells, report);

    print_cells(out, runs, cells);
    out << "csd ratio below erm in " << csd_below << "/" << paired << " paired runs\n";
    return arms_status(runs, cells.size());
}

int cmd_sweep(const CommandOptions& opts, std::ostream& out) {
    const ExperimentConfig cfg = load_with_overrides(opts);
    if (!cfg.sweep || cfg.sweep->k.empty()) throw ConfigError("sweep.k", "the sweep command needs a non-empty k axis");
    const std::vector<double> lambdas = cfg.sweep->lambda.empty() ? std::vector<double>{cfg.csd.lambda} : cfg.sweep->lambda;
    const std::vector<double> kappas = cfg.sweep->kappa.empty() ? std::vector<double>{cfg.csd.kappa} : cfg.sweep->kappa;
    std::vector<Cell> cells;
    for (std::size_t k : cfg.sweep->k) {
        for (double l : lambdas) {
            for (double kp : kappas) {
                CsdConfig c = cfg.csd;
                c.k = k;
                c.lambda = l;
                c.kappa = kp;
                cells.push_back({Mode::csd, c});
            }
        }
    }
    const auto runs = execute_runs(cfg, expand(cfg, cells), resolve_workers(opts.workers));
    write_run_reports(cfg.output_dir, runs, cells, report_header("sweep", cfg));
    print_cells(out, runs, cells);
    return arms_status(runs, cells.size());
}

int cmd_ablate(const CommandOptions& opts, std::ostream& out) {
    const ExperimentConfig cfg = load_with_overrides(opts);
    if (!cfg.ablation) throw ConfigError("ablation", "the ablate command needs an ablation axis");
    std::vector<Cell> cells;
    for (const AblationRow& row : *cfg.ablation) {
        CsdConfig c = cfg.csd;
        c.use_common_loss = row.use_common_loss;
        c.use_specific_loss = row.use_specific_loss;
        c.use_ortho_reg = row.use_ortho_reg;
        cells.push_back({Mode::csd, c});
    }
    // Reference arm for the common-loss-only row.
    cells.push_back({Mode::erm, cfg.csd});
    const auto runs = execute_runs(cfg, expand(cfg, cells), resolve_workers(opts.workers));
    write_run_reports(cfg.output_dir, runs, cells, report_header("ablate", cfg));
    print_cells(out, runs, cells);
    return arms_status(runs, cells.size());
}

int cmd_decompose(const CommandOptions& opts, std::ostream& out) {
    if (opts.matrix.empty()) throw ConfigError("--matrix", "a matrix CSV is required");
    if (!opts.k) throw ConfigError("--k", "a rank is required");
    const std::filesystem::path dir = require_out(opts);
    const Matrix w = read_matrix_csv(opts.matrix);
    const Decomposition d = decompose_theorem1(w, *opts.k);
    const double objective = decomposition_objective(w, d);
    const double ortho = orthogonality_residual(d);

    ensure_dir(dir);
    write_file_atomic(dir / "w_c.csv", matrix_csv(Matrix::from_columns(std::vector<Vector>{d.w_c})));
    write_file_atomic(dir / "w_s.csv", matrix_csv(d.w_s));
    write_file_atomic(dir / "gamma.csv", matrix_csv(d.gamma));
    const Json summary{{"m", w.rows()},
                       {"D", w.cols()},
                       {"k", *opts.k},
                       {"objective", objective},
                       {"orthogonality_residual", ortho}};
    write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
    out << "objective: " << num(objective) << "\northogonality residual: " << num(ortho) << "\n";
    return kExitOk;
}

int cmd_diagnose(const CommandOptions& opts, std::ostream& out) {
    if (opts.checkpoint.empty()) throw ConfigError("--checkpoint", "a checkpoint file is required");
    if (opts.dataset.empty()) throw ConfigError("--dataset", "a dataset directory is required");
    const std::filesystem::path dir = require_out(opts);
    const Checkpoint ck = load_checkpoint(opts.checkpoint);
    const MultiDomainDataset ds = load(opts.dataset);
    const CsdParams& p = ck.params;
    if (p.feature_map.input_dim != ds.config.m) throw InvalidInput("checkpoint and dataset feature sizes differ");
    if (p.num_domains() != ds.num_train_domains()) throw InvalidInput("checkpoint and dataset domain counts differ");

    const ComponentReport rep = component_scores(p, ds);
    std::string fits = "domain,beta_i,side,alpha,beta,mode,interior_mode,mean,variance,n,error\n";
    std::vector<double> betas, common_modes, specific_modes;
    auto row = [&](std::size_t dom, double b, Side side, const std::optional<BetaFit>& f, const std::string& err) {
        fits += std::to_string(dom) + "," + num(b) + "," + std::string(to_string(side)) + ",";
        if (f) {
            fits += num(f->alpha) + "," + num(f->beta) + "," + num(f->mode()) + "," + (f->interior_mode() ? "1" : "0") +
                    "," + num(f->mean) + "," + num(f->variance) + "," + std::to_string(f->n) + ",\n";
        } else {
            std::string e = err;
            std::replace(e.begin(), e.end(), ',', ';');
            fits += "nan,nan,nan,0,nan,nan,0," + e + "\n";
        }
    };
    bool all_specific = rep.specific_available;
    for (const DomainComponentRecord& r : rep.domains) {
        const double b = ds.domain(r.domain).spec.beta.empty() ? kNaN : ds.domain(r.domain).spec.beta[0];
        row(r.domain, b, Side::common, r.common, r.common_error);
        if (rep.specific_available) row(r.domain, b, Side::specific, r.specific, r.specific_error);
        betas.push_back(b);
        common_modes.push_back(r.common ? r.common->mode() : kNaN);
        specific_modes.push_back(r.specific ? r.specific->mode() : kNaN);
        all_specific = all_specific && r.specific.has_value() && r.common.has_value();
    }

    const Vector spectrum = stacked_head_spectrum(p);
    std::string spec_csv = "index,sigma\n";
    for (std::size_t i = 0; i < spectrum.size(); ++i) spec_csv += std::to_string(i) + "," + num(spectrum[i]) + "\n";

    Json summary{{"k", p.k}, {"specific_available", rep.specific_available}, {"domains", rep.domains.size()}};
    if (p.classes == 2 && p.feature_map.kind == FeatureKind::identity) {
        const Vector d = subtract(p.w_c.row(1), p.w_c.row(0));
        summary["angle_to_truth_deg"] = angle_to_truth(d, ground_truth_classifier(ds.config));
    }
    if (all_specific && betas.size() >= 2) {
        summary["spearman_specific_mode_vs_beta"] = spearman(specific_modes, betas);
        summary["mean_pairwise_gap_common"] = mean_pairwise_gap(common_modes);
        summary["mean_pairwise_gap_specific"] = mean_pairwise_gap(specific_modes);
    }

    ensure_dir(dir);
    write_file_atomic(dir / "beta_fits.csv", fits);
    write_file_atomic(dir / "spectrum.csv", spec_csv);
    write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");

    if (!rep.specific_available) out << "notice: k=0 checkpoint, specific side omitted\n";
    if (summary.contains("angle_to_truth_deg")) out << "angle to truth: " << num(summary["angle_to_truth_deg"].get<double>()) << " deg\n";
    if (summary.contains("spearman_specific_mode_vs_beta")) {
        out << "spearman(specific mode, beta): " << num(summary["spearman_specific_mode_vs_beta"].get<double>()) << "\n";
    }
    out << "wrote " << dir.string() << "\n";
    return kExitOk;
}

int exit_code_for(const std::exception& e) noexcept {
    if (dynamic_cast<const IoError*>(&e)) return kExitIo;
    if (dynamic_cast<const DegenerateDecomposition*>(&e)) return kExitDegenerate;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const VersionError*>(&e) || dynamic_cast<const InvalidArgument*>(&e) ||
        dynamic_cast<const InvalidInput*>(&e)) {
        return kExitConfig;
    }
    if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kExitIo;
    return 1;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    std::istringstream in(text);
    std::string line;
    std::vector<double> data;
    std::size_t rows = 0, cols = 0, lineno = 0, offset = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t line_start = offset;
        offset += line.size() + 1;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t count = 0, pos = 0;
        while (true) {
            const std::size_t comma = line.find(',', pos);
            const std::string cell = line.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (cell.empty() || *end != '\0' || !std::isfinite(v)) {
                throw ParseError(path.filename().string() + ": line " + std::to_string(lineno) + ": bad number \"" +
                                     cell + "\"",
                                 lineno, line_start + pos);
            }
            data.push_back(v);
            ++count;
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (rows == 0) cols = count;
        if (count != cols) {
            throw ParseError(path.filename().string() + ": line " + std::to_string(lineno) + ": expected " +
                                 std::to_string(cols) + " fields, got " + std::to_string(count),
                             lineno, line_start);
        }
        ++rows;
    }
    if (rows == 0) throw ParseError(path.filename().string() + ": empty matrix", 1, 0);
    return Matrix(rows, cols, std::move(data));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IoError("cannot write " + tmp.string());
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw IoError("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace csdlab
