#pragma once

// Common-specific decomposition training of a softmax head.
//
// Every training example carries a domain index i. Its domain head is
//
//     w_i = w_c + Σ_j σ(γ_{i,j}) · W_s[:, :, j]      (σ = logistic sigmoid)
//
// and the objective is
//
//     L_s(w_i) + λ·L_c(w_c) + κ·R,   R = Σ_y ‖I − Ŵ[y]ᵀŴ[y]‖_F²,
//
// where Ŵ[y] stacks w_c[y] and the k specific columns of class y. Only the
// feature map and w_c are needed for inference.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "csdlab/datagen.hpp"
#include "csdlab/json_fields.hpp"
#include "csdlab/linalg.hpp"

namespace csdlab {

inline constexpr std::string_view kCheckpointFormat = "csdlab-ckpt-1";

enum class Mode { csd, erm };
enum class Optimizer { sgd, sgd_momentum };
enum class FeatureKind { identity, hidden_relu };

std::string_view to_string(Mode m) noexcept;
std::string_view to_string(Optimizer o) noexcept;
std::string_view to_string(FeatureKind k) noexcept;

// G_θ: identity, or x ↦ W2·relu(W1·x + b1) + b2.
struct FeatureMap {
    FeatureKind kind = FeatureKind::identity;
    std::size_t input_dim = 0;
    std::size_t output_dim = 0;
    Matrix w1;  // hidden×input
    Vector b1;
    Matrix w2;  // output×hidden
    Vector b2;

    static FeatureMap identity(std::size_t m);

    std::size_t hidden() const noexcept { return w1.rows(); }
    Vector forward(std::span<const double> x) const;

    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

// Dense C×m×k array, row-major in that index order.
struct Tensor3 {
    std::size_t d0 = 0, d1 = 0, d2 = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(std::size_t a, std::size_t b, std::size_t c) : d0(a), d1(b), d2(c), data(a * b * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j, std::size_t l) noexcept { return data[(i * d1 + j) * d2 + l]; }
    double operator()(std::size_t i, std::size_t j, std::size_t l) const noexcept {
        return data[(i * d1 + j) * d2 + l];
    }

    friend bool operator==(const Tensor3&, const Tensor3&) = default;
};

struct CsdConfig {
    std::size_t k = 1;
    double lambda = 1.0;
    double kappa = 1.0;
    std::size_t classes = 2;
    bool use_common_loss = true;
    bool use_specific_loss = true;
    bool use_ortho_reg = true;

    friend bool operator==(const CsdConfig&, const CsdConfig&) = default;
};

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 0.1;
    Optimizer optimizer = Optimizer::sgd;
    double momentum = 0.9;
    // Half-width of the uniform initializer for w_c and W_s; 0 means 1/√m.
    double init_scale = 0.0;
    Mode mode = Mode::csd;
    std::uint64_t seed = 0;
    FeatureKind feature = FeatureKind::identity;
    std::size_t hidden = 0;       // hidden width for hidden_relu
    std::size_t feature_dim = 0;  // representation size m for hidden_relu; 0 means input dim

    void validate() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

Json to_json(const TrainConfig& c);
Json to_json(const CsdConfig& c);
TrainConfig train_config_from_json(FieldReader& reader);
CsdConfig csd_config_from_json(FieldReader& reader);

struct CsdParams {
    FeatureMap feature_map;
    Matrix w_c;         // C×m
    Tensor3 w_s;        // C×m×k
    Matrix gamma_raw;   // D×k, pre-sigmoid
    std::size_t k = 0;
    double lambda = 1.0;
    double kappa = 1.0;
    std::size_t classes = 2;

    std::size_t feature_dim() const noexcept { return w_c.cols(); }
    std::size_t num_domains() const noexcept { return gamma_raw.rows(); }

    friend bool operator==(const CsdParams&, const CsdParams&) = default;
};

// Same shapes as CsdParams' trainable tensors.
struct Gradients {
    Matrix w1;
    Vector b1;
    Matrix w2;
    Vector b2;
    Matrix w_c;
    Tensor3 w_s;
    Matrix gamma_raw;

    static Gradients zeros_like(const CsdParams& p);
};

// Trainable tensors in a fixed order; param_views and grad_views line up.
std::vector<std::span<double>> param_views(CsdParams& p);
std::vector<std::span<double>> grad_views(Gradients& g);

// Weights applied to (L_s, L_c, R). ERM mode is (0, 1, 0).
struct LossWeights {
    double specific = 1.0;
    double common = 1.0;
    double ortho = 1.0;
};
LossWeights loss_weights(Mode mode, const CsdConfig& cfg);

struct Example {
    std::span<const double> x;
    std::size_t label = 0;   // class index; y = −1 ↦ 0, y = +1 ↦ 1
    std::size_t domain = 0;  // index into gamma_raw rows
};

inline std::size_t class_of(int y) noexcept { return y > 0 ? 1 : 0; }

struct LossTerms {
    double total = 0.0;
    double l_s = 0.0;
    double l_c = 0.0;
    double r = 0.0;
};

// Fresh parameters: w_c, W_s ~ U[−s, s], gamma_raw = 0.
CsdParams init_params(const CsdConfig& csd, const TrainConfig& train, std::size_t input_dim,
                      std::size_t num_domains);

double sigmoid(double z) noexcept;

Matrix domain_head(const CsdParams& p, std::size_t domain);
double ortho_penalty(const CsdParams& p);
Vector common_logits(const CsdParams& p, std::span<const double> x);

LossTerms loss(const CsdParams& p, const LossWeights& w, std::span<const Example> batch);
Gradients gradients(const CsdParams& p, const LossWeights& w, std::span<const Example> batch,
                    LossTerms* terms = nullptr);

// Argmax of the common-head logits; ties go to the lowest class index.
std::size_t predict_common(const CsdParams& p, std::span<const double> x);

struct HistoryRow {
    std::size_t epoch = 0;
    double l_s = 0.0;
    double l_c = 0.0;
    double r = 0.0;
    double total = 0.0;
    double train_acc = 0.0;
    double val_acc = std::numeric_limits<double>::quiet_NaN();  // NaN without validation domains
};

struct TrainResult {
    CsdParams params;
    std::vector<HistoryRow> history;
};

// Training examples (main samples of every training domain), in domain order.
std::vector<Example> training_examples(const MultiDomainDataset& ds);

TrainResult train(const MultiDomainDataset& ds, const TrainConfig& train_cfg, const CsdConfig& csd_cfg);

struct Checkpoint {
    CsdParams params;
    TrainConfig train;
    CsdConfig csd;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace csdlab
