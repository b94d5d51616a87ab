#pragma once

// Strict reading of JSON objects: every field access is recorded so that
// unknown keys can be rejected, and every failure names the dotted path of
// the offending field.

#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "csdlab/error.hpp"
#include "csdlab/linalg.hpp"

namespace csdlab {

using Json = nlohmann::json;

class FieldReader {
public:
    FieldReader(const Json& obj, std::string path);

    bool has(std::string_view name) const;
    const Json& raw(std::string_view name);

    double number(std::string_view name);
    double number_or(std::string_view name, double fallback);
    std::uint64_t u64(std::string_view name);
    std::uint64_t u64_or(std::string_view name, std::uint64_t fallback);
    std::size_t count(std::string_view name) { return static_cast<std::size_t>(u64(name)); }
    std::size_t count_or(std::string_view name, std::size_t fallback) {
        return static_cast<std::size_t>(u64_or(name, fallback));
    }
    bool boolean(std::string_view name);
    bool boolean_or(std::string_view name, bool fallback);
    std::string string(std::string_view name);
    std::string string_or(std::string_view name, std::string fallback);
    Vector vector(std::string_view name);
    std::vector<std::uint64_t> u64_list(std::string_view name);
    std::vector<double> number_list(std::string_view name);
    // Matrix stored as a list of rows.
    Matrix matrix_rows(std::string_view name, std::size_t cols_if_empty = 0);
    FieldReader object(std::string_view name);

    std::string field_path(std::string_view name) const;

    // Throws ConfigError for any key that was never read.
    void reject_unknown() const;

private:
    const Json& obj_;
    std::string path_;
    std::set<std::string, std::less<>> seen_;
};

Json matrix_to_rows(const Matrix& m);

}  // namespace csdlab
