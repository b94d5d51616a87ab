#include "csdlab/datagen.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "csdlab/error.hpp"
#include "csdlab/rng.hpp"

namespace csdlab {

namespace fs = std::filesystem;

namespace {

// Stream ids: 0 for domain parameters, then two per domain.
constexpr std::uint64_t kSpecStream = 0;
std::uint64_t sample_stream(std::size_t id) { return 1 + 2 * static_cast<std::uint64_t>(id); }
std::uint64_t holdout_stream(std::size_t id) { return 2 + 2 * static_cast<std::uint64_t>(id); }

Split split_of(const GeneratorConfig& c, std::size_t id) {
    if (id < c.d_train) return Split::train;
    if (id < c.d_train + c.d_val) return Split::val;
    return Split::test;
}

void draw_samples(const GeneratorConfig& c, const DomainSpec& spec, std::size_t n, std::uint64_t stream,
                  Matrix& x, std::vector<int>& y) {
    const Vector mean = add(c.e_c, c.e_s * spec.beta);
    CounterRng rng(c.seed, stream);
    x = Matrix(n, c.m);
    y.assign(n, 0);
    for (std::size_t s = 0; s < n; ++s) {
        const int label = rng.uniform() < 0.5 ? -1 : 1;
        y[s] = label;
        for (std::size_t l = 0; l < c.m; ++l) {
            x(s, l) = label * mean[l] + spec.sigma_diag[l] * rng.normal();
        }
    }
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const fs::path& path, const Matrix& x, const std::vector<int>& y) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "y";
    for (std::size_t l = 0; l < x.cols(); ++l) out << ",x" << l;
    out << '\n';
    for (std::size_t s = 0; s < x.rows(); ++s) {
        out << y[s];
        for (std::size_t l = 0; l < x.cols(); ++l) out << ',' << format_double(x(s, l));
        out << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

double parse_double_field(std::string_view field, const std::string& where, std::size_t line, std::size_t col) {
    std::string tmp(field);
    char* end = nullptr;
    const double v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size() || !std::isfinite(v)) {
        throw ParseError(where + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed number \"" +
                             tmp + "\"",
                         line, col);
    }
    return v;
}

void read_csv(const fs::path& path, std::size_t m, std::size_t n, Matrix& x, std::vector<int>& y) {
    const std::string text = read_file(path);
    const std::string where = path.filename().string();
    x = Matrix(n, m);
    y.assign(n, 0);

    std::size_t pos = 0;
    std::size_t line = 0;
    std::size_t rows = 0;
    while (pos < text.size()) {
        const std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) {
            throw ParseError(where + ":" + std::to_string(line + 1) + ": truncated line (no newline terminator)",
                             line + 1, pos);
        }
        ++line;
        std::string_view row(text.data() + pos, eol - pos);
        const std::size_t row_offset = pos;
        pos = eol + 1;

        std::vector<std::string_view> fields;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = row.find(',', start);
            fields.push_back(row.substr(start, comma == std::string_view::npos ? row.npos : comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (fields.size() != m + 1) {
            throw ParseError(where + ":" + std::to_string(line) + ": expected " + std::to_string(m + 1) +
                                 " fields, found " + std::to_string(fields.size()),
                             line, row_offset);
        }
        if (line == 1) {
            bool ok = fields[0] == "y";
            for (std::size_t l = 0; l < m; ++l) ok = ok && fields[l + 1] == "x" + std::to_string(l);
            if (!ok) throw ParseError(where + ":1: unexpected header", 1, 0);
            continue;
        }
        if (rows >= n) {
            throw ParseError(where + ":" + std::to_string(line) + ": more rows than the " + std::to_string(n) +
                                 " declared in metadata",
                             line, row_offset);
        }
        if (fields[0] != "1" && fields[0] != "-1") {
            throw ParseError(where + ":" + std::to_string(line) + ":1: label must be -1 or 1", line, row_offset);
        }
        y[rows] = fields[0] == "1" ? 1 : -1;
        for (std::size_t l = 0; l < m; ++l) {
            x(rows, l) = parse_double_field(fields[l + 1], where, line, l + 2);
        }
        ++rows;
    }
    if (line == 0) throw ParseError(where + ": empty file", 0, 0);
    if (rows != n) {
        throw ParseError(where + ":" + std::to_string(line + 1) + ": expected " + std::to_string(n) +
                             " rows, found " + std::to_string(rows) + " (truncated file?)",
                         line + 1, text.size());
    }
}

std::string domain_file(std::size_t id, bool holdout) {
    char buf[64];
    std::snprintf(buf, sizeof buf, holdout ? "domain_%03zu_holdout.csv" : "domain_%03zu.csv", id);
    return buf;
}

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) line += text[i] == '\n';
    return line;
}

}  // namespace

std::string_view to_string(Split s) noexcept {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw InvalidArgument("unknown split \"" + std::string(s) + "\"");
}

void GeneratorConfig::validate() const {
    if (m == 0) throw ConfigError("generator.m", "must be positive");
    if (k_true == 0) throw ConfigError("generator.k_true", "must be positive");
    if (d_train == 0) throw ConfigError("generator.d_train", "must be positive");
    if (n_per_domain == 0) throw ConfigError("generator.n_per_domain", "must be positive");
    if (beta_low > beta_high) throw ConfigError("generator.beta_low", "must not exceed beta_high");
    if (beta_test_low > beta_test_high) throw ConfigError("generator.beta_test_low", "must not exceed beta_test_high");
    if (sigma_low < 0.0) throw ConfigError("generator.sigma_low", "must be non-negative");
    if (sigma_low > sigma_high) throw ConfigError("generator.sigma_low", "must not exceed sigma_high");
    if (e_c.size() != m) throw ConfigError("generator.e_c", "length must equal m");
    if (norm(e_c) == 0.0) throw ConfigError("generator.e_c", "must be nonzero");
    if (e_s.rows() != m || e_s.cols() != k_true) {
        throw ConfigError("generator.e_s", "must hold k_true columns of length m");
    }
    for (std::size_t j = 0; j < k_true; ++j) {
        if (norm(e_s.col(j)) == 0.0) throw ConfigError("generator.e_s", "columns must be nonzero");
    }
}

Json to_json(const GeneratorConfig& c) {
    Json cols = Json::array();
    for (std::size_t j = 0; j < c.e_s.cols(); ++j) cols.push_back(c.e_s.col(j));
    return Json{{"m", c.m},
                {"k_true", c.k_true},
                {"d_train", c.d_train},
                {"d_val", c.d_val},
                {"d_test", c.d_test},
                {"n_per_domain", c.n_per_domain},
                {"n_holdout_per_domain", c.n_holdout_per_domain},
                {"beta_low", c.beta_low},
                {"beta_high", c.beta_high},
                {"beta_test_low", c.beta_test_low},
                {"beta_test_high", c.beta_test_high},
                {"sigma_low", c.sigma_low},
                {"sigma_high", c.sigma_high},
                {"e_c", c.e_c},
                {"e_s", cols},
                {"seed", c.seed}};
}

GeneratorConfig generator_config_from_json(FieldReader& r) {
    GeneratorConfig c;
    c.m = r.count("m");
    c.d_train = r.count("d_train");
    c.n_per_domain = r.count("n_per_domain");
    c.e_c = r.vector("e_c");
    c.seed = r.u64("seed");
    c.d_val = r.count_or("d_val", c.d_val);
    c.d_test = r.count_or("d_test", c.d_test);
    c.n_holdout_per_domain = r.count_or("n_holdout_per_domain", c.n_holdout_per_domain);
    c.beta_low = r.number_or("beta_low", c.beta_low);
    c.beta_high = r.number_or("beta_high", c.beta_high);
    c.beta_test_low = r.number_or("beta_test_low", c.beta_test_low);
    c.beta_test_high = r.number_or("beta_test_high", c.beta_test_high);
    c.sigma_low = r.number_or("sigma_low", c.sigma_low);
    c.sigma_high = r.number_or("sigma_high", c.sigma_high);

    // e_s is a list of columns; transpose of the row-list reader.
    const Matrix cols = r.matrix_rows("e_s", c.m);
    c.e_s = cols.transpose();
    c.k_true = r.count_or("k_true", c.e_s.cols());
    if (c.k_true != c.e_s.cols()) throw ConfigError(r.field_path("k_true"), "must equal the number of e_s columns");
    r.reject_unknown();
    c.validate();
    return c;
}

GeneratorConfig reference_generator_config() {
    GeneratorConfig c;
    c.m = 2;
    c.k_true = 1;
    c.d_train = 10;
    c.n_per_domain = 100;
    c.beta_low = -1.0;
    c.beta_high = 2.0;
    c.sigma_low = 0.0;
    c.sigma_high = 1.0;
    c.e_c = {1.0, 0.0};
    c.e_s = Matrix(2, 1, std::vector<double>{0.0, 1.0});
    return c;
}

std::vector<DomainSpec> sample_domains(const GeneratorConfig& config) {
    config.validate();
    CounterRng rng(config.seed, kSpecStream);
    std::vector<DomainSpec> specs(config.total_domains());
    for (std::size_t id = 0; id < specs.size(); ++id) {
        const bool test = split_of(config, id) == Split::test;
        const double lo = test ? config.beta_test_low : config.beta_low;
        const double hi = test ? config.beta_test_high : config.beta_high;
        DomainSpec& s = specs[id];
        s.id = id;
        s.beta.resize(config.k_true);
        for (double& b : s.beta) b = rng.uniform(lo, hi);
        s.sigma_diag.resize(config.m);
        for (double& v : s.sigma_diag) v = rng.uniform(config.sigma_low, config.sigma_high);
    }
    return specs;
}

MultiDomainDataset generate(const GeneratorConfig& config) {
    MultiDomainDataset ds;
    ds.config = config;
    for (DomainSpec& spec : sample_domains(config)) {
        DomainData d;
        d.split = split_of(config, spec.id);
        draw_samples(config, spec, config.n_per_domain, sample_stream(spec.id), d.x, d.y);
        if (d.split == Split::train) {
            draw_samples(config, spec, config.n_holdout_per_domain, holdout_stream(spec.id), d.x_holdout,
                         d.y_holdout);
        } else {
            d.x_holdout = Matrix(0, config.m);
        }
        d.spec = std::move(spec);
        ds.domains.push_back(std::move(d));
    }
    return ds;
}

Vector ground_truth_classifier(const GeneratorConfig& config) {
    return subtract(config.e_c, project_onto_span(config.e_s, config.e_c));
}

void save(const MultiDomainDataset& dataset, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

    Json domains = Json::array();
    for (const DomainData& d : dataset.domains) {
        Json entry{{"id", d.spec.id},
                   {"split", std::string(to_string(d.split))},
                   {"beta", d.spec.beta},
                   {"sigma_diag", d.spec.sigma_diag},
                   {"n", d.x.rows()},
                   {"file", domain_file(d.spec.id, false)},
                   {"n_holdout", d.x_holdout.rows()}};
        write_csv(dir / domain_file(d.spec.id, false), d.x, d.y);
        if (d.x_holdout.rows() > 0) {
            entry["holdout_file"] = domain_file(d.spec.id, true);
            write_csv(dir / domain_file(d.spec.id, true), d.x_holdout, d.y_holdout);
        }
        domains.push_back(std::move(entry));
    }
    const Json meta{{"format_version", std::string(kDatasetFormat)},
                    {"seed", dataset.config.seed},
                    {"config", to_json(dataset.config)},
                    {"domains", std::move(domains)}};
    std::ofstream out(dir / "metadata.json", std::ios::binary);
    if (!out) throw IoError("cannot write " + (dir / "metadata.json").string());
    out << meta.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + (dir / "metadata.json").string());
}

MultiDomainDataset load(const fs::path& dir) {
    const fs::path meta_path = dir / "metadata.json";
    const std::string text = read_file(meta_path);
    Json meta;
    try {
        meta = Json::parse(text);
    } catch (const Json::parse_error& e) {
        const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
        throw ParseError("metadata.json:" + std::to_string(line_of_offset(text, offset)) + ": " + e.what(),
                         line_of_offset(text, offset), offset);
    }

    try {
        FieldReader top(meta, "");
        const std::string version = top.string("format_version");
        if (version != kDatasetFormat) throw VersionError(std::string(kDatasetFormat), version);
        const std::uint64_t seed = top.u64("seed");
        FieldReader cfg_reader = top.object("config");
        MultiDomainDataset ds;
        ds.config = generator_config_from_json(cfg_reader);
        if (ds.config.seed != seed) throw ParseError("metadata.json: seed disagrees with config.seed", 0, 0);

        const Json& entries = top.raw("domains");
        top.reject_unknown();
        if (!entries.is_array() || entries.size() != ds.config.total_domains()) {
            throw ParseError("metadata.json: domain list does not match the configured domain counts", 0, 0);
        }
        for (std::size_t i = 0; i < entries.size(); ++i) {
            FieldReader e(entries[i], "domains[" + std::to_string(i) + "]");
            DomainData d;
            d.spec.id = e.count("id");
            if (d.spec.id != i) throw ParseError("metadata.json: domain ids must be 0..D-1 in order", 0, 0);
            d.split = parse_split(e.string("split"));
            d.spec.beta = e.vector("beta");
            d.spec.sigma_diag = e.vector("sigma_diag");
            const std::size_t n = e.count("n");
            const std::size_t n_holdout = e.count("n_holdout");
            read_csv(dir / e.string("file"), ds.config.m, n, d.x, d.y);
            if (n_holdout > 0) {
                read_csv(dir / e.string("holdout_file"), ds.config.m, n_holdout, d.x_holdout, d.y_holdout);
            } else {
                d.x_holdout = Matrix(0, ds.config.m);
            }
            e.reject_unknown();
            ds.domains.push_back(std::move(d));
        }
        return ds;
    } catch (const ConfigError& e) {
        throw ParseError(std::string("metadata.json: ") + e.what(), 0, 0);
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("metadata.json: ") + e.what(), 0, 0);
    }
}

}  // namespace csdlab
