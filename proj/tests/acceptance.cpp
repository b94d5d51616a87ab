// Acceptance suite: one [PASS]/[FAIL] line per criterion, nonzero exit if
// any criterion fails. Every training-based criterion goes through the
// same command functions as the CLI and reads back the written reports.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "csdlab/decompose.hpp"
#include "csdlab/diagnostics.hpp"
#include "csdlab/error.hpp"
#include "csdlab/experiment.hpp"
#include "oracles.hpp"

using namespace csdlab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const fs::path& root() {
    static const fs::path r = [] {
        fs::path p = fs::temp_directory_path() / "csdlab_acceptance";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return r;
}

// Shared training setup for every criterion that trains.
TrainConfig acceptance_train() {
    TrainConfig t;
    t.epochs = 200;
    t.batch_size = 32;
    t.learning_rate = 0.1;
    t.optimizer = Optimizer::sgd;
    t.seed = 0;
    return t;
}

GeneratorConfig rank2_generator() {
    GeneratorConfig g = reference_generator_config();
    g.m = 3;
    g.k_true = 2;
    g.e_c = Vector{1, 0, 0};
    g.e_s = Matrix::from_rows({{0, 0}, {1, 0}, {0, 1}});
    return g;
}

fs::path write_config(const std::string& name, const GeneratorConfig& g, const Json& extra = Json::object()) {
    Json j{{"format", std::string(kConfigFormat)},
           {"generator", to_json(g)},
           {"train", to_json(acceptance_train())},
           {"csd", to_json(CsdConfig{})},
           {"repeats", 10}};
    for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
    const fs::path p = root() / (name + ".json");
    std::ofstream(p) << j.dump(2);
    return p;
}

CommandOptions options(const fs::path& config, const fs::path& out) {
    CommandOptions o;
    o.config = config;
    o.out = out;
    return o;
}

// Every file under dir, keyed by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
    }
    return files;
}

// Runs cmd and records the output directory for the determinism check.
struct Recorded {
    std::string name;
    std::function<int()> run;
    fs::path out;
};
std::vector<Recorded>& recorded() {
    static std::vector<Recorded> r;
    return r;
}

int record(const std::string& name, const fs::path& out, std::function<int()> run) {
    recorded().push_back({name, run, out});
    return run();
}

Json read_json(const fs::path& p) { return Json::parse(slurp(p)); }

double num(const Json& v) { return v.is_null() ? std::nan("") : v.get<double>(); }

// ---------------------------------------------------------------------------

Outcome criterion1(double& secs) {
    const auto t0 = Clock::now();
    const fs::path cfg = write_config("compare", reference_generator_config());
    const fs::path out = root() / "compare";
    const int rc = record("compare", out, [=] {
        std::ostringstream sink;
        return cmd_compare(options(cfg, out), sink); });
    secs = seconds_since(t0);
    const Json rep = read_json(out / "report.json");
    const double csd = num(rep["csd_ratio_median"]), erm = num(rep["erm_ratio_median"]);
    const auto below = rep["csd_below_erm"].get<std::size_t>();
    const auto paired = rep["paired_runs"].get<std::size_t>();
    Outcome o;
    o.pass = rc == kExitOk && paired == 10 && csd <= 0.1 && erm >= 0.15 && below >= 8 && secs <= 60.0;
    o.detail = "CSD median ratio " + fmt("%.4f", csd) + " (<= 0.1), ERM median " + fmt("%.4f", erm) +
               " (>= 0.15), CSD < ERM in " + std::to_string(below) + "/" + std::to_string(paired) + " (>= 8)";
    return o;
}

Outcome criterion2(double& secs) {
    const auto t0 = Clock::now();
    std::size_t ok = 0, total = 0;
    double worst_upper = -1e300, worst_lower = 1e300;
    for (std::uint64_t s = 0; s < 20; ++s) {
        CounterRng rng(1000 + s, 0);
        const Matrix w = oracle::random_matrix(6, 8, rng);
        for (std::size_t k = 1; k <= 3; ++k) {
            const double f = decomposition_objective(w, decompose_theorem1(w, k));
            const double pg = oracle::projected_gradient_oracle(w, k, 50, 2000, 7000 + s * 10 + k);
            const double floor = oracle::low_rank_residual(w, k + 1);
            const double upper = (f - pg) / pg;  // must be <= 1e-6
            const double lower = f - floor;      // must be >= -1e-10
            worst_upper = std::max(worst_upper, upper);
            worst_lower = std::min(worst_lower, lower);
            ok += upper <= 1e-6 && lower >= -1e-10;
            ++total;
        }
    }
    secs = seconds_since(t0);
    Outcome o;
    o.pass = ok == total && secs <= 30.0;
    o.detail = std::to_string(ok) + "/" + std::to_string(total) + " instances, max (f - oracle)/oracle " +
               fmt("%.2e", worst_upper) + ", min f - rank-(k+1) residual " + fmt("%.2e", worst_lower);
    return o;
}

Outcome criterion3() {
    double worst0 = 0.0, worst1 = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        CounterRng rng(2000 + s, 0);
        const Matrix w = oracle::random_matrix(8, 5, rng);
        const Vector mean = column_mean(w);
        const Decomposition d0 = decompose_theorem1(w, 0);
        for (std::size_t i = 0; i < mean.size(); ++i) worst0 = std::max(worst0, std::abs(d0.w_c[i] - mean[i]));
        const Vector expect = oracle::normalized_pinv_ones(w);
        const Decomposition d1 = decompose_theorem1(w, 4);
        for (std::size_t i = 0; i < expect.size(); ++i) worst1 = std::max(worst1, std::abs(d1.w_c[i] - expect[i]));
    }
    Outcome o;
    o.pass = worst0 <= 1e-12 && worst1 <= 1e-10;
    o.detail = "k=0 max deviation from column mean " + fmt("%.2e", worst0) + ", k=D-1 max deviation " +
               fmt("%.2e", worst1);
    return o;
}

Outcome criterion4() {
    std::size_t forward = 0, converse = 0, done = 0;
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        CounterRng rng(3000 + s, 0);
        GroundTruthModel gt;
        gt.e_c = Vector(5);
        for (double& v : gt.e_c) v = rng.normal();
        gt.e_s = oracle::random_matrix(5, 2, rng);
        const Matrix gamma = oracle::random_matrix(8, 2, rng);
        const IdentifiabilityReport r = verify_lemma1(gt, gamma, 1e-6, s);
        worst = std::max(worst, r.forward_relative);
        forward += r.forward_relative <= 1e-6;
        converse += r.converse_deviation > 1e-3;
        ++done;
    }
    Outcome o;
    o.pass = forward == done && converse >= 48;
    o.detail = "forward " + std::to_string(forward) + "/" + std::to_string(done) + " (max rel " +
               fmt("%.2e", worst) + "), mixed form deviates > 1e-3 in " + std::to_string(converse) + "/50 (>= 48)";
    return o;
}

Outcome criterion5(double& secs) {
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        CsdConfig c;
        c.k = 1;
        c.classes = 2;
        TrainConfig t;
        t.seed = s;
        CsdParams p = init_params(c, t, 3, 2);
        CounterRng rng(4000 + s, 0);
        for (std::span<double> v : param_views(p))
            for (double& x : v) x = rng.normal() * 0.7;
        const Matrix x = oracle::random_matrix(8, 3, rng);
        std::vector<Example> batch;
        for (std::size_t i = 0; i < 8; ++i) batch.push_back({x.row(i), rng.below(2), rng.below(2)});
        const LossWeights w = loss_weights(Mode::csd, c);
        Gradients g = gradients(p, w, batch);
        const auto numeric = oracle::numeric_gradient(p, [&] { return loss(p, w, batch).total; }, 1e-5);
        const auto ana = grad_views(g);
        for (std::size_t v = 0; v < numeric.size(); ++v)
            for (std::size_t i = 0; i < numeric[v].size(); ++i) {
                const double a = ana[v][i], n = numeric[v][i];
                worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}));
            }
    }
    secs = seconds_since(t0);
    Outcome o;
    o.pass = worst <= 1e-5 && secs <= 10.0;
    o.detail = "max relative error " + fmt("%.2e", worst) + " over 20 instances (<= 1e-5)";
    return o;
}

struct CellStat {
    double mean = 0.0, std = 0.0;
};

std::map<std::size_t, CellStat> sweep_stats(const fs::path& out) {
    std::map<std::size_t, CellStat> by_k;
    const Json rep = read_json(out / "report.json");
    for (const Json& c : rep["cells"]) {
        by_k[c["csd"]["k"].get<std::size_t>()] = {num(c["out_acc_mean"]), num(c["out_acc_std"])};
    }
    return by_k;
}

Outcome criterion6() {
    const Json axis{{"sweep", {{"k", {0, 1, 2, 4}}}}};
    const fs::path cfg1 = write_config("sweep_rank1", reference_generator_config(), axis);
    const fs::path out1 = root() / "sweep_rank1";
    record("sweep_rank1", out1, [=] {
        std::ostringstream sink;
        return cmd_sweep(options(cfg1, out1), sink); });
    const fs::path cfg2 = write_config("sweep_rank2", rank2_generator(), axis);
    const fs::path out2 = root() / "sweep_rank2";
    record("sweep_rank2", out2, [=] {
        std::ostringstream sink;
        return cmd_sweep(options(cfg2, out2), sink); });

    const auto s1 = sweep_stats(out1);
    const double pooled = std::sqrt(0.5 * (s1.at(0).std * s1.at(0).std + s1.at(1).std * s1.at(1).std));
    const double gap = s1.at(1).mean - s1.at(0).mean;
    const bool part1 = gap > pooled;

    const auto s2 = sweep_stats(out2);
    std::size_t best = 0;
    for (const auto& [k, st] : s2)
        if (st.mean > s2.at(best).mean) best = k;
    const bool part2 = best != 0 && s2.at(best).mean > s2.at(0).mean;

    Outcome o;
    o.pass = part1 && part2;
    o.detail = "rank-1 data: acc(k=1) - acc(k=0) = " + fmt("%.4f", gap) + " vs pooled std " + fmt("%.4f", pooled) +
               "; rank-2 data: best k = " + std::to_string(best) + " (" + fmt("%.4f", s2.at(best).mean) +
               " vs k=0 " + fmt("%.4f", s2.at(0).mean) + ")";
    return o;
}

Outcome criterion7() {
    const fs::path cfg = write_config("ablate", reference_generator_config(), Json{{"ablation", "standard"}});
    const fs::path out = root() / "ablate";
    record("ablate", out, [=] {
        std::ostringstream sink;
        return cmd_ablate(options(cfg, out), sink); });

    const Json cells = read_json(out / "report.json")["cells"];
    const auto rows = standard_ablation_rows();
    std::vector<double> means;
    std::size_t full = rows.size(), ynn = rows.size(), erm = cells.size();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const Json& c = cells[i];
        if (c["mode"] == "erm") {
            erm = i;
            continue;
        }
        const AblationRow r{c["csd"]["use_common_loss"].get<bool>(), c["csd"]["use_specific_loss"].get<bool>(),
                            c["csd"]["use_ortho_reg"].get<bool>()};
        if (r == AblationRow{true, true, true}) full = means.size();
        if (r == AblationRow{true, false, false}) ynn = means.size();
        means.push_back(num(c["out_acc_mean"]));
    }
    bool highest = full < means.size() && means.size() == rows.size();
    std::string table;
    for (std::size_t i = 0; i < means.size(); ++i) {
        if (highest && means[i] > means[full]) highest = false;
        const AblationRow& r = rows[i];
        table += std::string(i ? " " : "") + (r.use_common_loss ? "Y" : "N") + (r.use_specific_loss ? "Y" : "N") +
                 (r.use_ortho_reg ? "Y" : "N") + "=" + fmt("%.4f", means[i]);
    }

    // (Y,N,N) against ERM, repeat by repeat, on every reported number.
    std::ifstream in(out / "runs.csv");
    std::string line;
    std::getline(in, line);
    std::map<std::size_t, std::vector<std::string>> by_cell;
    while (std::getline(in, line)) {
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        // in_acc .. final_r, skipping the cell's own config columns.
        std::string key;
        for (std::size_t j = 13; j <= 19 && j < f.size(); ++j) key += f[j] + ",";
        by_cell[std::stoul(f[1])].push_back(key);
    }
    const bool bitmatch = ynn < means.size() && erm < cells.size() && !by_cell[ynn].empty() &&
                          by_cell[ynn] == by_cell[erm];

    Outcome o;
    o.pass = highest && bitmatch;
    o.detail = "out-domain means " + table + "; (Y,N,N) bit-matches ERM: " + (bitmatch ? "yes" : "no");
    return o;
}

Outcome criterion8() {
    // Pre-declared run: CSD repeat 0 of the criterion 1 compare run, on the
    // matching seed-0 dataset.
    const fs::path data = root() / "dataset_seed0";
    const fs::path cfg = root() / "compare.json";
    record("generate", data, [=] {
        std::ostringstream sink;
        return cmd_generate(options(cfg, data), sink); });
    const fs::path out = root() / "diagnose";
    CommandOptions o2;
    o2.checkpoint = root() / "compare" / "checkpoints" / "run_010_csd.json";
    o2.dataset = data;
    o2.out = out;
    record("diagnose", out, [=] {
        std::ostringstream sink;
        return cmd_diagnose(o2, sink); });

    const Json s = read_json(out / "summary.json");
    Outcome o;
    if (!s.contains("spearman_specific_mode_vs_beta")) {
        o.detail = "no specific-side fits available";
        return o;
    }
    const double rho = num(s["spearman_specific_mode_vs_beta"]);
    const double gc = num(s["mean_pairwise_gap_common"]), gs = num(s["mean_pairwise_gap_specific"]);
    o.pass = rho >= 0.9 && gc < gs;
    o.detail = "spearman(specific mode, beta) " + fmt("%.4f", rho) + " (>= 0.9), mean mode gap common " +
               fmt("%.4f", gc) + " vs specific " + fmt("%.4f", gs);
    return o;
}

Outcome criterion9(double& secs) {
    const auto t0 = Clock::now();
    double svd_err = 0.0, penrose = 0.0, idem = 0.0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        CounterRng rng(9000 + s, 0);
        const std::size_t r = 1 + rng.below(10), c = 1 + rng.below(10);
        Matrix a = oracle::random_matrix(r, c, rng);
        if (s % 4 == 3 && std::min(r, c) > 1) {
            const std::size_t rank = 1 + rng.below(std::min(r, c) - 1);
            a = oracle::random_matrix(r, rank, rng) * oracle::random_matrix(rank, c, rng);
        }
        const double na = frobenius_norm(a);
        svd_err = std::max(svd_err, frobenius_norm(a - svd(a).reconstruct()) / na);

        const Matrix ap = pseudoinverse(a);
        const double scale = 1.0 + na;
        const Matrix aap = a * ap, apa = ap * a;
        penrose = std::max({penrose, frobenius_norm(aap * a - a) / scale, frobenius_norm(apa * ap - ap) / scale,
                            frobenius_norm(aap.transpose() - aap) / scale, frobenius_norm(apa.transpose() - apa) / scale});

        const Matrix p = projection_matrix(a);
        idem = std::max(idem, frobenius_norm(p * p - p));
        Vector v(r);
        for (double& x : v) x = rng.normal();
        const Vector pv = project_onto_span(a, v);
        idem = std::max(idem, norm(subtract(project_onto_span(a, pv), pv)));
    }
    secs = seconds_since(t0);
    Outcome o;
    o.pass = svd_err <= 1e-9 && penrose <= 1e-8 && idem <= 1e-10 && secs <= 10.0;
    o.detail = "svd reconstruction " + fmt("%.2e", svd_err) + ", Penrose " + fmt("%.2e", penrose) +
               ", projection idempotence " + fmt("%.2e", idem);
    return o;
}

Outcome criterion10() {
    std::size_t same = 0, files = 0;
    std::string first_diff;
    for (const Recorded& r : recorded()) {
        const auto before = snapshot(r.out);
        r.run();
        const auto after = snapshot(r.out);
        for (const auto& [name, bytes] : before) {
            ++files;
            const auto it = after.find(name);
            if (it != after.end() && it->second == bytes) {
                ++same;
            } else if (first_diff.empty()) {
                first_diff = r.name + "/" + name;
            }
        }
        files += after.size() > before.size() ? after.size() - before.size() : 0;
    }
    Outcome o;
    o.pass = files > 0 && same == files;
    o.detail = std::to_string(same) + "/" + std::to_string(files) + " report files byte-identical across " +
               std::to_string(recorded().size()) + " repeated commands" +
               (first_diff.empty() ? "" : ", first difference " + first_diff);
    return o;
}

}  // namespace

int main() {
    int failed = 0;
    auto line = [&](int n, const std::string& name, const std::function<Outcome(double&)>& f, double limit) {
        double secs = 0.0;
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = f(secs);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        if (secs == 0.0) secs = seconds_since(t0);
        failed += !o.pass;
        std::string time = fmt("%.1f s", secs);
        if (limit > 0.0) time += fmt(" (limit %.0f s)", limit);
        std::printf("[%s] C%d %s: %s; %s\n", o.pass ? "PASS" : "FAIL", n, name.c_str(), o.detail.c_str(), time.c_str());
        std::fflush(stdout);
    };
    auto untimed = [](Outcome (*f)()) { return [f](double&) { return f(); }; };

    line(1, "synthetic ERM vs CSD", criterion1, 60.0);
    line(2, "decomposition optimality", criterion2, 30.0);
    line(3, "decomposition special cases", untimed(criterion3), 0.0);
    line(4, "identifiability round trip", untimed(criterion4), 0.0);
    line(5, "gradient check", criterion5, 10.0);
    line(6, "rank sweep", untimed(criterion6), 0.0);
    line(7, "loss ablation", untimed(criterion7), 0.0);
    line(8, "component diagnostic", untimed(criterion8), 0.0);
    line(9, "numerical kernels", criterion9, 10.0);
    line(10, "determinism", untimed(criterion10), 0.0);
    std::printf("%d/10 criteria passed\n", 10 - failed);
    return failed == 0 ? 0 : 1;
}
