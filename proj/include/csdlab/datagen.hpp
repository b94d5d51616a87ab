#pragma once

// Seeded synthetic multi-domain data:
//
//     x = y·(e_c + Σ_j β_{i,j}·e_s[:, j]) + ε,   ε_l ~ N(0, σ_{i,l}²),   y = ±1
//
// With k_true = 1 this is the rank-1 single-specific-direction model.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "csdlab/json_fields.hpp"
#include "csdlab/linalg.hpp"

namespace csdlab {

inline constexpr std::string_view kDatasetFormat = "csdlab-ds-1";

enum class Split { train, val, test };

std::string_view to_string(Split s) noexcept;
Split parse_split(std::string_view s);

struct GeneratorConfig {
    std::size_t m = 2;
    std::size_t k_true = 1;
    std::size_t d_train = 10;
    std::size_t d_val = 2;
    std::size_t d_test = 5;
    std::size_t n_per_domain = 100;
    // Held-out samples per training domain for in-domain evaluation.
    std::size_t n_holdout_per_domain = 100;
    double beta_low = -1.0;
    double beta_high = 2.0;
    double beta_test_low = 2.0;
    double beta_test_high = 3.5;
    double sigma_low = 0.0;
    double sigma_high = 1.0;
    Vector e_c{1.0, 0.0};
    Matrix e_s = Matrix(2, 1, std::vector<double>{0.0, 1.0});
    std::uint64_t seed = 0;

    std::size_t total_domains() const noexcept { return d_train + d_val + d_test; }

    // Throws ConfigError naming the offending field.
    void validate() const;

    friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

// JSON object form used by dataset metadata and experiment configs. e_s is
// stored as a list of columns. Missing optional fields take the defaults
// above; unknown fields are rejected.
Json to_json(const GeneratorConfig& config);
GeneratorConfig generator_config_from_json(FieldReader& reader);

// D=10 training domains, m=2, 100 points per domain, β ~ U[−1, 2],
// σ ~ U[0, 1], e_c = (1, 0), e_s = (0, 1).
GeneratorConfig reference_generator_config();

struct DomainSpec {
    std::size_t id = 0;
    Vector beta;        // length k_true
    Vector sigma_diag;  // length m, per-coordinate noise std

    friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

struct DomainData {
    DomainSpec spec;
    Split split = Split::train;
    Matrix x;            // n×m
    std::vector<int> y;  // labels in {−1, +1}
    Matrix x_holdout;    // held-out samples (training domains only)
    std::vector<int> y_holdout;

    friend bool operator==(const DomainData&, const DomainData&) = default;
};

struct MultiDomainDataset {
    GeneratorConfig config;
    std::vector<DomainData> domains;  // ordered by id: train, then val, then test

    std::size_t num_train_domains() const noexcept { return config.d_train; }
    const DomainData& domain(std::size_t id) const { return domains.at(id); }

    friend bool operator==(const MultiDomainDataset&, const MultiDomainDataset&) = default;
};

// Draws β and σ for every domain. Ids run 0..total−1 with training domains
// first, then validation, then test.
std::vector<DomainSpec> sample_domains(const GeneratorConfig& config);

MultiDomainDataset generate(const GeneratorConfig& config);

// e_c − P_{E_s}·e_c.
Vector ground_truth_classifier(const GeneratorConfig& config);

// Directory layout: metadata.json plus domain_<id>.csv (and
// domain_<id>_holdout.csv for training domains with held-out samples).
void save(const MultiDomainDataset& dataset, const std::filesystem::path& dir);
MultiDomainDataset load(const std::filesystem::path& dir);

}  // namespace csdlab
