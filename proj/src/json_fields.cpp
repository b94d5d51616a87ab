#include "csdlab/json_fields.hpp"

#include <cmath>

namespace csdlab {

FieldReader::FieldReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a JSON object");
}

std::string FieldReader::field_path(std::string_view name) const {
    return path_.empty() ? std::string(name) : path_ + "." + std::string(name);
}

bool FieldReader::has(std::string_view name) const { return obj_.contains(std::string(name)); }

const Json& FieldReader::raw(std::string_view name) {
    const std::string key(name);
    if (!obj_.contains(key)) throw ConfigError(field_path(name), "required field is missing");
    seen_.insert(key);
    return obj_.at(key);
}

double FieldReader::number(std::string_view name) {
    const Json& v = raw(name);
    if (!v.is_number()) throw ConfigError(field_path(name), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field_path(name), "must be finite");
    return x;
}

double FieldReader::number_or(std::string_view name, double fallback) {
    return has(name) ? number(name) : fallback;
}

std::uint64_t FieldReader::u64(std::string_view name) {
    const Json& v = raw(name);
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
        throw ConfigError(field_path(name), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

std::uint64_t FieldReader::u64_or(std::string_view name, std::uint64_t fallback) {
    return has(name) ? u64(name) : fallback;
}

bool FieldReader::boolean(std::string_view name) {
    const Json& v = raw(name);
    if (!v.is_boolean()) throw ConfigError(field_path(name), "expected true or false");
    return v.get<bool>();
}

bool FieldReader::boolean_or(std::string_view name, bool fallback) {
    return has(name) ? boolean(name) : fallback;
}

std::string FieldReader::string(std::string_view name) {
    const Json& v = raw(name);
    if (!v.is_string()) throw ConfigError(field_path(name), "expected a string");
    return v.get<std::string>();
}

std::string FieldReader::string_or(std::string_view name, std::string fallback) {
    return has(name) ? string(name) : std::move(fallback);
}

Vector FieldReader::vector(std::string_view name) { return number_list(name); }

std::vector<double> FieldReader::number_list(std::string_view name) {
    const Json& v = raw(name);
    if (!v.is_array()) throw ConfigError(field_path(name), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number() || !std::isfinite(v[i].get<double>())) {
            throw ConfigError(field_path(name) + "[" + std::to_string(i) + "]", "expected a finite number");
        }
        out.push_back(v[i].get<double>());
    }
    return out;
}

std::vector<std::uint64_t> FieldReader::u64_list(std::string_view name) {
    const Json& v = raw(name);
    if (!v.is_array()) throw ConfigError(field_path(name), "expected an array of integers");
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number_integer() || (!v[i].is_number_unsigned() && v[i].get<std::int64_t>() < 0)) {
            throw ConfigError(field_path(name) + "[" + std::to_string(i) + "]", "expected a non-negative integer");
        }
        out.push_back(v[i].get<std::uint64_t>());
    }
    return out;
}

Matrix FieldReader::matrix_rows(std::string_view name, std::size_t cols_if_empty) {
    const Json& v = raw(name);
    if (!v.is_array()) throw ConfigError(field_path(name), "expected an array of rows");
    if (v.empty()) return Matrix(0, cols_if_empty);
    std::vector<double> data;
    std::size_t cols = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const std::string where = field_path(name) + "[" + std::to_string(i) + "]";
        if (!v[i].is_array()) throw ConfigError(where, "expected an array of numbers");
        if (i == 0) cols = v[i].size();
        if (v[i].size() != cols) throw ConfigError(where, "rows must all have the same length");
        for (const auto& x : v[i]) {
            if (!x.is_number() || !std::isfinite(x.get<double>())) throw ConfigError(where, "expected finite numbers");
            data.push_back(x.get<double>());
        }
    }
    return Matrix(v.size(), cols, std::move(data));
}

FieldReader FieldReader::object(std::string_view name) { return FieldReader(raw(name), field_path(name)); }

void FieldReader::reject_unknown() const {
    for (const auto& [key, value] : obj_.items()) {
        if (!seen_.contains(key)) throw ConfigError(field_path(key), "unknown field");
    }
}

Json matrix_to_rows(const Matrix& m) {
    Json rows = Json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        rows.push_back(Json(std::vector<double>(m.row(i).begin(), m.row(i).end())));
    }
    return rows;
}

}  // namespace csdlab
