#ifndef MIXCENS_DATA_HPP
#define MIXCENS_DATA_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixcens/common.hpp"

namespace mixcens {

struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

/// One unit's record: covariates, treatment, censoring flag, and the outcome
/// (present exactly when the unit is uncensored).
struct Observation {
    std::vector<double> x;
    int a = 0;
    int c = 0;
    std::optional<double> y;

    bool operator==(const Observation&) const = default;
};

struct Dataset {
    std::vector<Observation> observations;
    std::vector<std::string> covariate_names;

    std::size_t size() const { return observations.size(); }
    std::size_t dim() const { return covariate_names.size(); }

    bool operator==(const Dataset&) const = default;

    // n >= 1, both arms, and at least one uncensored unit per arm; required
    // before any estimation step.
    void require_estimable() const {
        if (observations.empty()) throw DataError("dataset is empty");
        bool arm[2] = {false, false};
        bool unc[2] = {false, false};
        for (const auto& o : observations) {
            arm[o.a] = true;
            if (o.c == 0) unc[o.a] = true;
        }
        for (int a = 0; a < 2; ++a) {
            if (!arm[a]) throw DataError("treatment arm " + std::to_string(a) + " is empty");
            if (!unc[a])
                throw DataError("no uncensored units in treatment arm " + std::to_string(a));
        }
    }
};

namespace detail {

inline void validate_observation(const Observation& o, std::size_t row) {
    const std::string at = ", row " + std::to_string(row);
    if (o.a != 0 && o.a != 1) throw DataError("treatment indicator not in {0,1}" + at);
    if (o.c != 0 && o.c != 1) throw DataError("censoring indicator not in {0,1}" + at);
    if (o.c == 1 && o.y.has_value())
        throw DataError("outcome present for censored unit" + at);
    if (o.c == 0) {
        if (!o.y.has_value()) throw DataError("outcome absent for uncensored unit" + at);
        if (!(*o.y >= 0.0 && *o.y <= 1.0))
            throw DataError("outcome outside [0,1]" + at);
    }
    for (double v : o.x) {
        if (!std::isfinite(v)) throw DataError("non-finite covariate" + at);
    }
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// CSV schema: header `y,a,c,x1,...,xp`; `y` empty iff `c=1`.
inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto header = detail::split_csv_line(line);
    if (header.size() < 4 || header[0] != "y" || header[1] != "a" || header[2] != "c")
        throw DataError("header must be y,a,c,x1,...,xp; got: " + line);
    Dataset d;
    d.covariate_names.assign(header.begin() + 3, header.end());

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        ++row;
        const std::string at = ", row " + std::to_string(row);
        auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw DataError("expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()) + at);
        Observation o;
        try {
            if (!fields[0].empty()) o.y = std::stod(fields[0]);
            o.a = std::stoi(fields[1]);
            o.c = std::stoi(fields[2]);
            o.x.reserve(d.dim());
            for (std::size_t j = 3; j < fields.size(); ++j) o.x.push_back(std::stod(fields[j]));
        } catch (const std::exception&) {
            throw DataError("malformed row" + at + ": " + line);
        }
        detail::validate_observation(o, row);
        d.observations.push_back(std::move(o));
    }
    if (d.observations.empty()) throw DataError("no data rows in " + path);
    return d;
}

inline void save_dataset(const Dataset& d, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "y,a,c";
    for (const auto& name : d.covariate_names) out << ',' << name;
    out << '\n';
    for (const auto& o : d.observations) {
        if (o.y.has_value()) out << detail::format_double(*o.y);
        out << ',' << o.a << ',' << o.c;
        for (double v : o.x) out << ',' << detail::format_double(v);
        out << '\n';
    }
}

/// Deterministic partition of 0..n-1 into k near-equal folds.
struct FoldAssignment {
    std::vector<int> fold_of;
    int k = 2;
    std::uint64_t seed = 0;
};

inline FoldAssignment split_folds(std::size_t n, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("split_folds: k must be >= 2");
    if (n < static_cast<std::size_t>(k))
        throw std::invalid_argument("split_folds: need n >= k");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    FoldAssignment f;
    f.k = k;
    f.seed = seed;
    f.fold_of.resize(n);
    for (std::size_t j = 0; j < n; ++j) f.fold_of[idx[j]] = static_cast<int>(j % k);
    return f;
}

}  // namespace mixcens

#endif  // MIXCENS_DATA_HPP
