#include "csdlab/csd_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "csdlab/error.hpp"
#include "csdlab/rng.hpp"

namespace csdlab {

namespace {

constexpr double kProbFloor = 1e-12;

constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kShuffleStream = 1;

void fill_uniform(std::span<double> xs, double half_width, CounterRng& rng) {
    for (double& x : xs) x = rng.uniform(-half_width, half_width);
}

// In-place max-subtracted softmax; returns false on non-finite logits.
bool softmax_inplace(std::span<double> z) {
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : z) {
        if (!std::isfinite(v)) return false;
        mx = std::max(mx, v);
    }
    double sum = 0.0;
    for (double& v : z) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (double& v : z) v /= sum;
    return true;
}

double cross_entropy(std::span<const double> probs, std::size_t label) {
    return -std::log(std::max(probs[label], kProbFloor));
}

// head (C×m) times f.
void head_logits(const Matrix& head, std::span<const double> f, std::span<double> out) {
    for (std::size_t c = 0; c < head.rows(); ++c) out[c] = dot(head.row(c), f);
}

struct FeatureCache {
    Vector pre;     // W1·x + b1
    Vector hidden;  // relu(pre)
    Vector out;
};

FeatureCache feature_forward(const FeatureMap& fm, std::span<const double> x) {
    FeatureCache c;
    if (fm.kind == FeatureKind::identity) {
        c.out.assign(x.begin(), x.end());
        return c;
    }
    c.pre = add(fm.w1 * x, fm.b1);
    c.hidden = c.pre;
    for (double& h : c.hidden) h = std::max(h, 0.0);
    c.out = add(fm.w2 * c.hidden, fm.b2);
    return c;
}

void feature_backward(const FeatureMap& fm, std::span<const double> x, const FeatureCache& cache,
                      std::span<const double> grad_out, Gradients& g) {
    if (fm.kind == FeatureKind::identity) return;
    const std::size_t h = fm.hidden();
    Vector grad_hidden(h, 0.0);
    for (std::size_t o = 0; o < fm.output_dim; ++o) {
        g.b2[o] += grad_out[o];
        for (std::size_t j = 0; j < h; ++j) {
            g.w2(o, j) += grad_out[o] * cache.hidden[j];
            grad_hidden[j] += fm.w2(o, j) * grad_out[o];
        }
    }
    for (std::size_t j = 0; j < h; ++j) {
        if (!(cache.pre[j] > 0.0)) continue;
        g.b1[j] += grad_hidden[j];
        for (std::size_t i = 0; i < fm.input_dim; ++i) g.w1(j, i) += grad_hidden[j] * x[i];
    }
}

// Columns of Ŵ[y]: w_c[y] then W_s[y, :, j].
Matrix stacked_class_head(const CsdParams& p, std::size_t y) {
    const std::size_t m = p.feature_dim();
    Matrix wh(m, p.k + 1);
    for (std::size_t l = 0; l < m; ++l) {
        wh(l, 0) = p.w_c(y, l);
        for (std::size_t j = 0; j < p.k; ++j) wh(l, j + 1) = p.w_s(y, l, j);
    }
    return wh;
}

LossTerms evaluate(const CsdParams& p, const LossWeights& w, std::span<const Example> batch, Gradients* g) {
    if (batch.empty()) throw InvalidArgument("loss: empty batch");
    const std::size_t classes = p.classes;
    const std::size_t m = p.feature_dim();
    const std::size_t k = p.k;
    const double inv_n = 1.0 / static_cast<double>(batch.size());

    LossTerms t;
    Vector zs(classes);
    Vector zc(classes);
    Vector mix(k);
    for (const Example& ex : batch) {
        if (ex.domain >= p.num_domains()) {
            throw InvalidArgument("loss: domain index " + std::to_string(ex.domain) + " out of range");
        }
        if (ex.label >= classes) throw InvalidArgument("loss: label out of range");

        const FeatureCache fc = feature_forward(p.feature_map, ex.x);
        const Vector& f = fc.out;
        for (std::size_t j = 0; j < k; ++j) mix[j] = sigmoid(p.gamma_raw(ex.domain, j));
        const Matrix head = domain_head(p, ex.domain);
        head_logits(head, f, zs);
        head_logits(p.w_c, f, zc);
        if (!softmax_inplace(zs) || !softmax_inplace(zc)) {
            throw NumericOverflow("non-finite logits in loss evaluation");
        }
        t.l_s += cross_entropy(zs, ex.label);
        t.l_c += cross_entropy(zc, ex.label);

        if (g == nullptr) continue;

        // zs, zc now hold probabilities; turn them into weighted residuals.
        zs[ex.label] -= 1.0;
        zc[ex.label] -= 1.0;
        Vector grad_f(m, 0.0);
        if (w.specific != 0.0) {
            for (std::size_t c = 0; c < classes; ++c) {
                const double ds = w.specific * (zs[c] * inv_n);
                for (std::size_t l = 0; l < m; ++l) {
                    const double gh = ds * f[l];
                    g->w_c(c, l) += gh;
                    for (std::size_t j = 0; j < k; ++j) {
                        g->w_s(c, l, j) += mix[j] * gh;
                        g->gamma_raw(ex.domain, j) += mix[j] * (1.0 - mix[j]) * gh * p.w_s(c, l, j);
                    }
                    grad_f[l] += ds * head(c, l);
                }
            }
        }
        if (w.common != 0.0) {
            for (std::size_t c = 0; c < classes; ++c) {
                const double dc = w.common * (zc[c] * inv_n);
                for (std::size_t l = 0; l < m; ++l) {
                    g->w_c(c, l) += dc * f[l];
                    grad_f[l] += dc * p.w_c(c, l);
                }
            }
        }
        feature_backward(p.feature_map, ex.x, fc, grad_f, *g);
    }
    t.l_s *= inv_n;
    t.l_c *= inv_n;
    t.r = ortho_penalty(p);

    if (g != nullptr && w.ortho != 0.0) {
        // dR/dŴ = −4·Ŵ·(I − ŴᵀŴ)
        for (std::size_t y = 0; y < classes; ++y) {
            const Matrix wh = stacked_class_head(p, y);
            const Matrix resid = Matrix::identity(k + 1) - wh.transpose() * wh;
            const Matrix dwh = (-4.0 * w.ortho) * (wh * resid);
            for (std::size_t l = 0; l < m; ++l) {
                g->w_c(y, l) += dwh(l, 0);
                for (std::size_t j = 0; j < k; ++j) g->w_s(y, l, j) += dwh(l, j + 1);
            }
        }
    }
    t.total = w.specific * t.l_s + w.common * t.l_c + w.ortho * t.r;
    if (!std::isfinite(t.total)) throw NumericOverflow("non-finite loss");
    return t;
}

bool all_finite(const CsdParams& p) {
    auto& q = const_cast<CsdParams&>(p);
    for (std::span<double> v : param_views(q)) {
        for (double x : v) {
            if (!std::isfinite(x)) return false;
        }
    }
    return true;
}

double common_accuracy(const CsdParams& p, std::span<const Example> examples) {
    if (examples.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t hits = 0;
    for (const Example& ex : examples) hits += predict_common(p, ex.x) == ex.label;
    return static_cast<double>(hits) / static_cast<double>(examples.size());
}

std::vector<Example> examples_for_split(const MultiDomainDataset& ds, Split split) {
    std::vector<Example> out;
    for (const DomainData& d : ds.domains) {
        if (d.split != split) continue;
        for (std::size_t s = 0; s < d.x.rows(); ++s) {
            out.push_back({d.x.row(s), class_of(d.y[s]), d.spec.id});
        }
    }
    return out;
}

Mode parse_mode(const std::string& s, const std::string& field) {
    if (s == "csd") return Mode::csd;
    if (s == "erm") return Mode::erm;
    throw ConfigError(field, "expected \"csd\" or \"erm\"");
}

Optimizer parse_optimizer(const std::string& s, const std::string& field) {
    if (s == "sgd") return Optimizer::sgd;
    if (s == "sgd-momentum") return Optimizer::sgd_momentum;
    throw ConfigError(field, "expected \"sgd\" or \"sgd-momentum\"");
}

FeatureKind parse_feature(const std::string& s, const std::string& field) {
    if (s == "identity") return FeatureKind::identity;
    if (s == "one-hidden-layer") return FeatureKind::hidden_relu;
    throw ConfigError(field, "expected \"identity\" or \"one-hidden-layer\"");
}

Json tensor_to_json(const Tensor3& t) { return Json{{"shape", {t.d0, t.d1, t.d2}}, {"data", t.data}}; }

}  // namespace

std::string_view to_string(Mode m) noexcept { return m == Mode::csd ? "csd" : "erm"; }
std::string_view to_string(Optimizer o) noexcept { return o == Optimizer::sgd ? "sgd" : "sgd-momentum"; }
std::string_view to_string(FeatureKind k) noexcept {
    return k == FeatureKind::identity ? "identity" : "one-hidden-layer";
}

FeatureMap FeatureMap::identity(std::size_t m) {
    FeatureMap fm;
    fm.input_dim = m;
    fm.output_dim = m;
    return fm;
}

Vector FeatureMap::forward(std::span<const double> x) const {
    if (x.size() != input_dim) throw InvalidArgument("FeatureMap: input has wrong length");
    return feature_forward(*this, x).out;
}

void TrainConfig::validate() const {
    if (epochs == 0) throw ConfigError("train.epochs", "must be positive");
    if (batch_size == 0) throw ConfigError("train.batch_size", "must be positive");
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate", "must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("train.momentum", "must lie in [0, 1)");
    if (init_scale < 0.0) throw ConfigError("train.init_scale", "must be non-negative");
    if (feature == FeatureKind::hidden_relu && hidden == 0) {
        throw ConfigError("train.hidden", "must be positive for a one-hidden-layer feature map");
    }
}

Json to_json(const TrainConfig& c) {
    return Json{{"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"learning_rate", c.learning_rate},
                {"optimizer", std::string(to_string(c.optimizer))},
                {"momentum", c.momentum},
                {"init_scale", c.init_scale},
                {"mode", std::string(to_string(c.mode))},
                {"seed", c.seed},
                {"feature_map", std::string(to_string(c.feature))},
                {"hidden", c.hidden},
                {"feature_dim", c.feature_dim}};
}

Json to_json(const CsdConfig& c) {
    return Json{{"k", c.k},
                {"lambda", c.lambda},
                {"kappa", c.kappa},
                {"classes", c.classes},
                {"use_common_loss", c.use_common_loss},
                {"use_specific_loss", c.use_specific_loss},
                {"use_ortho_reg", c.use_ortho_reg}};
}

TrainConfig train_config_from_json(FieldReader& r) {
    TrainConfig c;
    c.epochs = r.count_or("epochs", c.epochs);
    c.batch_size = r.count_or("batch_size", c.batch_size);
    c.learning_rate = r.number_or("learning_rate", c.learning_rate);
    if (r.has("optimizer")) c.optimizer = parse_optimizer(r.string("optimizer"), r.field_path("optimizer"));
    c.momentum = r.number_or("momentum", c.momentum);
    c.init_scale = r.number_or("init_scale", c.init_scale);
    if (r.has("mode")) c.mode = parse_mode(r.string("mode"), r.field_path("mode"));
    c.seed = r.u64_or("seed", c.seed);
    if (r.has("feature_map")) c.feature = parse_feature(r.string("feature_map"), r.field_path("feature_map"));
    c.hidden = r.count_or("hidden", c.hidden);
    c.feature_dim = r.count_or("feature_dim", c.feature_dim);
    r.reject_unknown();
    c.validate();
    return c;
}

CsdConfig csd_config_from_json(FieldReader& r) {
    CsdConfig c;
    c.k = r.count_or("k", c.k);
    c.lambda = r.number_or("lambda", c.lambda);
    c.kappa = r.number_or("kappa", c.kappa);
    c.classes = r.count_or("classes", c.classes);
    c.use_common_loss = r.boolean_or("use_common_loss", c.use_common_loss);
    c.use_specific_loss = r.boolean_or("use_specific_loss", c.use_specific_loss);
    c.use_ortho_reg = r.boolean_or("use_ortho_reg", c.use_ortho_reg);
    r.reject_unknown();
    if (c.lambda < 0.0) throw ConfigError(r.field_path("lambda"), "must be non-negative");
    if (c.kappa < 0.0) throw ConfigError(r.field_path("kappa"), "must be non-negative");
    if (c.classes < 2) throw ConfigError(r.field_path("classes"), "must be at least 2");
    return c;
}

Gradients Gradients::zeros_like(const CsdParams& p) {
    Gradients g;
    const FeatureMap& fm = p.feature_map;
    g.w1 = Matrix(fm.w1.rows(), fm.w1.cols());
    g.b1 = Vector(fm.b1.size(), 0.0);
    g.w2 = Matrix(fm.w2.rows(), fm.w2.cols());
    g.b2 = Vector(fm.b2.size(), 0.0);
    g.w_c = Matrix(p.w_c.rows(), p.w_c.cols());
    g.w_s = Tensor3(p.w_s.d0, p.w_s.d1, p.w_s.d2);
    g.gamma_raw = Matrix(p.gamma_raw.rows(), p.gamma_raw.cols());
    return g;
}

std::vector<std::span<double>> param_views(CsdParams& p) {
    return {p.feature_map.w1.data(), p.feature_map.b1, p.feature_map.w2.data(), p.feature_map.b2,
            p.w_c.data(),            p.w_s.data,       p.gamma_raw.data()};
}

std::vector<std::span<double>> grad_views(Gradients& g) {
    return {g.w1.data(), g.b1, g.w2.data(), g.b2, g.w_c.data(), g.w_s.data, g.gamma_raw.data()};
}

LossWeights loss_weights(Mode mode, const CsdConfig& cfg) {
    if (mode == Mode::erm) return {0.0, 1.0, 0.0};
    return {cfg.use_specific_loss ? 1.0 : 0.0, cfg.use_common_loss ? cfg.lambda : 0.0,
            cfg.use_ortho_reg ? cfg.kappa : 0.0};
}

CsdParams init_params(const CsdConfig& csd, const TrainConfig& train, std::size_t input_dim,
                      std::size_t num_domains) {
    train.validate();
    if (csd.classes < 2) throw InvalidArgument("init_params: need at least two classes");
    CsdParams p;
    p.k = csd.k;
    p.lambda = csd.lambda;
    p.kappa = csd.kappa;
    p.classes = csd.classes;

    const std::size_t m = train.feature == FeatureKind::identity
                              ? input_dim
                              : (train.feature_dim > 0 ? train.feature_dim : input_dim);
    const double s = train.init_scale > 0.0 ? train.init_scale : 1.0 / std::sqrt(static_cast<double>(m));

    CounterRng rng(train.seed, kInitStream);
    p.w_c = Matrix(csd.classes, m);
    fill_uniform(p.w_c.data(), s, rng);
    p.w_s = Tensor3(csd.classes, m, csd.k);
    fill_uniform(p.w_s.data, s, rng);
    p.gamma_raw = Matrix(num_domains, csd.k);

    if (train.feature == FeatureKind::identity) {
        p.feature_map = FeatureMap::identity(input_dim);
    } else {
        FeatureMap& fm = p.feature_map;
        fm.kind = FeatureKind::hidden_relu;
        fm.input_dim = input_dim;
        fm.output_dim = m;
        fm.w1 = Matrix(train.hidden, input_dim);
        fill_uniform(fm.w1.data(), 1.0 / std::sqrt(static_cast<double>(input_dim)), rng);
        fm.b1 = Vector(train.hidden, 0.0);
        fm.w2 = Matrix(m, train.hidden);
        fill_uniform(fm.w2.data(), 1.0 / std::sqrt(static_cast<double>(train.hidden)), rng);
        fm.b2 = Vector(m, 0.0);
    }
    return p;
}

double sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

Matrix domain_head(const CsdParams& p, std::size_t domain) {
    if (domain >= p.num_domains()) {
        throw InvalidArgument("domain_head: domain " + std::to_string(domain) + " out of range [0, " +
                              std::to_string(p.num_domains()) + ")");
    }
    Matrix head = p.w_c;
    if (p.k == 0) return head;
    Vector mix(p.k);
    for (std::size_t j = 0; j < p.k; ++j) mix[j] = sigmoid(p.gamma_raw(domain, j));
    for (std::size_t c = 0; c < head.rows(); ++c) {
        for (std::size_t l = 0; l < head.cols(); ++l) {
            for (std::size_t j = 0; j < p.k; ++j) head(c, l) += mix[j] * p.w_s(c, l, j);
        }
    }
    return head;
}

double ortho_penalty(const CsdParams& p) {
    double r = 0.0;
    for (std::size_t y = 0; y < p.classes; ++y) {
        const Matrix wh = stacked_class_head(p, y);
        const Matrix resid = Matrix::identity(p.k + 1) - wh.transpose() * wh;
        const double f = frobenius_norm(resid);
        r += f * f;
    }
    return r;
}

Vector common_logits(const CsdParams& p, std::span<const double> x) {
    return p.w_c * p.feature_map.forward(x);
}

LossTerms loss(const CsdParams& p, const LossWeights& w, std::span<const Example> batch) {
    return evaluate(p, w, batch, nullptr);
}

Gradients gradients(const CsdParams& p, const LossWeights& w, std::span<const Example> batch, LossTerms* terms) {
    Gradients g = Gradients::zeros_like(p);
    const LossTerms t = evaluate(p, w, batch, &g);
    if (terms != nullptr) *terms = t;
    return g;
}

std::size_t predict_common(const CsdParams& p, std::span<const double> x) {
    const Vector z = common_logits(p, x);
    std::size_t best = 0;
    for (std::size_t c = 1; c < z.size(); ++c) {
        if (z[c] > z[best]) best = c;
    }
    return best;
}

std::vector<Example> training_examples(const MultiDomainDataset& ds) { return examples_for_split(ds, Split::train); }

TrainResult train(const MultiDomainDataset& ds, const TrainConfig& train_cfg, const CsdConfig& csd_cfg) {
    std::vector<Example> examples = training_examples(ds);
    if (examples.empty()) throw InvalidArgument("train: dataset has no training examples");
    const std::vector<Example> val = examples_for_split(ds, Split::val);

    TrainResult result;
    CsdParams& p = result.params;
    p = init_params(csd_cfg, train_cfg, ds.config.m, ds.num_train_domains());
    const LossWeights weights = loss_weights(train_cfg.mode, csd_cfg);

    Gradients velocity = Gradients::zeros_like(p);
    const bool momentum = train_cfg.optimizer == Optimizer::sgd_momentum;
    CounterRng shuffle(train_cfg.seed, kShuffleStream);

    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<Example> batch;
    batch.reserve(train_cfg.batch_size);

    for (std::size_t epoch = 1; epoch <= train_cfg.epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            std::swap(order[i - 1], order[shuffle.below(i)]);
        }
        std::size_t step = 0;
        for (std::size_t start = 0; start < order.size(); start += train_cfg.batch_size, ++step) {
            batch.clear();
            const std::size_t end = std::min(order.size(), start + train_cfg.batch_size);
            for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
            try {
                Gradients g = gradients(p, weights, batch);
                auto params = param_views(p);
                auto grads = grad_views(g);
                auto vel = grad_views(velocity);
                for (std::size_t t = 0; t < params.size(); ++t) {
                    for (std::size_t e = 0; e < params[t].size(); ++e) {
                        if (momentum) {
                            vel[t][e] = train_cfg.momentum * vel[t][e] + grads[t][e];
                            params[t][e] -= train_cfg.learning_rate * vel[t][e];
                        } else {
                            params[t][e] -= train_cfg.learning_rate * grads[t][e];
                        }
                    }
                }
                if (!all_finite(p)) throw NumericOverflow("non-finite parameters after update");
            } catch (const NumericOverflow& e) {
                throw NumericOverflow(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", step " +
                                      std::to_string(step) + ")");
            }
        }

        HistoryRow row;
        row.epoch = epoch;
        const LossTerms t = loss(p, weights, examples);
        row.l_s = t.l_s;
        row.l_c = t.l_c;
        row.r = t.r;
        row.total = t.total;
        row.train_acc = common_accuracy(p, examples);
        row.val_acc = common_accuracy(p, val);
        result.history.push_back(row);
    }
    return result;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const CsdParams& p = ckpt.params;
    const FeatureMap& fm = p.feature_map;
    Json feature{{"kind", std::string(to_string(fm.kind))},
                 {"input_dim", fm.input_dim},
                 {"output_dim", fm.output_dim}};
    if (fm.kind == FeatureKind::hidden_relu) {
        feature["w1"] = matrix_to_rows(fm.w1);
        feature["b1"] = fm.b1;
        feature["w2"] = matrix_to_rows(fm.w2);
        feature["b2"] = fm.b2;
    }
    const Json doc{{"format_version", std::string(kCheckpointFormat)},
                   {"seed", ckpt.train.seed},
                   {"train_config", to_json(ckpt.train)},
                   {"csd_config", to_json(ckpt.csd)},
                   {"params",
                    {{"feature_map", feature},
                     {"w_c", matrix_to_rows(p.w_c)},
                     {"w_s", tensor_to_json(p.w_s)},
                     {"gamma_raw", matrix_to_rows(p.gamma_raw)},
                     {"num_domains", p.gamma_raw.rows()}}}};

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    Json doc;
    try {
        doc = Json::parse(ss.str());
    } catch (const Json::parse_error& e) {
        throw ParseError(path.filename().string() + ": " + e.what(), 0, e.byte);
    }

    try {
        FieldReader top(doc, "");
        const std::string version = top.string("format_version");
        if (version != kCheckpointFormat) throw VersionError(std::string(kCheckpointFormat), version);
        Checkpoint ck;
        FieldReader tr = top.object("train_config");
        ck.train = train_config_from_json(tr);
        FieldReader cr = top.object("csd_config");
        ck.csd = csd_config_from_json(cr);
        if (top.u64("seed") != ck.train.seed) throw ParseError("checkpoint: seed disagrees with train_config", 0, 0);

        FieldReader pr = top.object("params");
        CsdParams& p = ck.params;
        p.k = ck.csd.k;
        p.lambda = ck.csd.lambda;
        p.kappa = ck.csd.kappa;
        p.classes = ck.csd.classes;

        FieldReader fr = pr.object("feature_map");
        FeatureMap& fm = p.feature_map;
        fm.kind = parse_feature(fr.string("kind"), fr.field_path("kind"));
        fm.input_dim = fr.count("input_dim");
        fm.output_dim = fr.count("output_dim");
        if (fm.kind == FeatureKind::hidden_relu) {
            fm.w1 = fr.matrix_rows("w1", fm.input_dim);
            fm.b1 = fr.vector("b1");
            fm.w2 = fr.matrix_rows("w2");
            fm.b2 = fr.vector("b2");
        }
        fr.reject_unknown();

        p.w_c = pr.matrix_rows("w_c");
        FieldReader ws = pr.object("w_s");
        const auto shape = ws.u64_list("shape");
        const auto data = ws.number_list("data");
        ws.reject_unknown();
        if (shape.size() != 3 || data.size() != shape[0] * shape[1] * shape[2]) {
            throw ParseError("checkpoint: w_s shape and data disagree", 0, 0);
        }
        p.w_s = Tensor3(shape[0], shape[1], shape[2]);
        p.w_s.data = data;
        const std::size_t domains = pr.count("num_domains");
        p.gamma_raw = pr.matrix_rows("gamma_raw", p.k);
        pr.reject_unknown();
        top.reject_unknown();

        if (p.gamma_raw.rows() != domains || p.gamma_raw.cols() != p.k || p.w_c.rows() != p.classes ||
            p.w_c.cols() != fm.output_dim || p.w_s.d0 != p.classes || p.w_s.d1 != fm.output_dim ||
            p.w_s.d2 != p.k) {
            throw ParseError("checkpoint: parameter shapes are inconsistent", 0, 0);
        }
        return ck;
    } catch (const ConfigError& e) {
        throw ParseError(std::string("checkpoint: ") + e.what(), 0, 0);
    }
}

}  // namespace csdlab
