#include "hyperts/data/dataset.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>

#include "hyperts/core/csv.hpp"
#include "hyperts/core/error.hpp"
#include "json.hpp"

namespace hyperts::data {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

bool parse_cell(const std::string& cell, double& out) {
    if (cell.empty()) {
        out = kMissing;
        return true;
    }
    const char* begin = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end != begin + cell.size()) return false;
    if (std::isinf(v)) return false;
    out = v; // NaN text counts as a missing value
    return true;
}

} // namespace

std::string strip_path_prefix(const std::string& name) {
    const auto pos = name.find_last_of("/\\");
    return pos == std::string::npos ? name : name.substr(pos + 1);
}

TimeSeriesDataset load_csv(const std::string& path, const CsvSchema& schema) {
    csv::Table table = csv::read_file(path);
    if (table.rows.empty()) throw DataError(path + ": no data rows");

    std::vector<std::string> names;
    names.reserve(table.header.size());
    for (const auto& raw : table.header) names.push_back(strip_path_prefix(raw));

    int label_col = -1, ts_col = -1;
    std::vector<std::size_t> value_cols;
    for (std::size_t c = 0; c < names.size(); ++c) {
        if (names[c] == schema.label_column && label_col < 0)
            label_col = static_cast<int>(c);
        else if (names[c] == schema.timestamp_column && ts_col < 0)
            ts_col = static_cast<int>(c);
        else
            value_cols.push_back(c);
    }
    if (value_cols.empty()) throw DataError(path + ": no feature columns");

    TimeSeriesDataset ds;
    for (std::size_t c : value_cols) ds.feature_names.push_back(names[c]);
    {
        std::set<std::string> unique(ds.feature_names.begin(), ds.feature_names.end());
        if (unique.size() != ds.feature_names.size())
            throw DataError(path + ": duplicate feature names after prefix stripping");
    }

    const std::size_t t_len = table.rows.size();
    ds.values = Mat(t_len, value_cols.size());
    if (label_col >= 0) ds.labels.resize(t_len);
    if (ts_col >= 0) ds.timestamps.resize(t_len);

    for (std::size_t r = 0; r < t_len; ++r) {
        const auto& row = table.rows[r];
        for (std::size_t k = 0; k < value_cols.size(); ++k) {
            double v;
            if (!parse_cell(row[value_cols[k]], v))
                throw DataError(path + ": unparseable cell at row " + std::to_string(r + 2) +
                                ", column '" + names[value_cols[k]] + "'");
            ds.values(r, k) = v;
        }
        if (label_col >= 0) {
            const std::string& cell = row[static_cast<std::size_t>(label_col)];
            double v;
            if (!parse_cell(cell, v) || std::isnan(v) || (v != 0.0 && v != 1.0))
                throw DataError(path + ": label at row " + std::to_string(r + 2) +
                                " must be 0 or 1, got '" + cell + "'");
            ds.labels[r] = v != 0.0 ? 1 : 0;
        }
        if (ts_col >= 0) {
            double v;
            if (!parse_cell(row[static_cast<std::size_t>(ts_col)], v) || std::isnan(v))
                throw DataError(path + ": unparseable timestamp at row " + std::to_string(r + 2));
            ds.timestamps[r] = v;
        }
    }
    return ds;
}

void save_csv(const std::string& path, const TimeSeriesDataset& ds) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    for (std::size_t c = 0; c < ds.feature_names.size(); ++c) {
        if (c) out << ',';
        out << ds.feature_names[c];
    }
    if (ds.has_labels()) out << ",label";
    out << '\n';
    for (std::size_t r = 0; r < ds.timesteps(); ++r) {
        for (std::size_t c = 0; c < ds.features(); ++c) {
            if (c) out << ',';
            out << csv::format_double(ds.values(r, c));
        }
        if (ds.has_labels()) out << ',' << (ds.labels[r] ? '1' : '0');
        out << '\n';
    }
    if (!out) throw DataError("write failed: " + path);
}

TimeSeriesDataset clean(const TimeSeriesDataset& ds) {
    TimeSeriesDataset out = ds;
    const std::size_t t_len = ds.timesteps();
    for (std::size_t c = 0; c < ds.features(); ++c) {
        double sum = 0.0;
        std::size_t observed = 0;
        for (std::size_t r = 0; r < t_len; ++r) {
            const double v = ds.values(r, c);
            if (!std::isnan(v)) {
                sum += v;
                ++observed;
            }
        }
        const double fill = observed == 0 ? 0.0 : sum / static_cast<double>(observed);
        for (std::size_t r = 0; r < t_len; ++r)
            if (std::isnan(out.values(r, c))) out.values(r, c) = fill;
    }
    return out;
}

NormalizationState minmax_fit(const TimeSeriesDataset& train) {
    if (train.timesteps() == 0) throw DataError("minmax_fit: empty dataset");
    NormalizationState state;
    state.feature_names = train.feature_names;
    state.min_values.resize(train.features());
    state.max_values.resize(train.features());
    for (std::size_t c = 0; c < train.features(); ++c) {
        double lo = train.values(0, c), hi = train.values(0, c);
        for (std::size_t r = 1; r < train.timesteps(); ++r) {
            lo = std::min(lo, train.values(r, c));
            hi = std::max(hi, train.values(r, c));
        }
        state.min_values[c] = lo;
        state.max_values[c] = hi;
    }
    return state;
}

namespace {

std::vector<std::size_t> match_features(const TimeSeriesDataset& ds,
                                        const NormalizationState& state) {
    std::vector<std::size_t> index(ds.features());
    for (std::size_t c = 0; c < ds.features(); ++c) {
        bool found = false;
        for (std::size_t s = 0; s < state.feature_names.size(); ++s) {
            if (state.feature_names[s] == ds.feature_names[c]) {
                index[c] = s;
                found = true;
                break;
            }
        }
        if (!found)
            throw ConfigError("normalization state has no entry for feature '" +
                              ds.feature_names[c] + "'");
    }
    return index;
}

constexpr double kConstEps = 1e-12;

} // namespace

TimeSeriesDataset minmax_apply(const TimeSeriesDataset& ds, const NormalizationState& state) {
    const auto index = match_features(ds, state);
    TimeSeriesDataset out = ds;
    for (std::size_t c = 0; c < ds.features(); ++c) {
        const double lo = state.min_values[index[c]];
        const double range = state.max_values[index[c]] - lo;
        for (std::size_t r = 0; r < ds.timesteps(); ++r)
            out.values(r, c) = range < kConstEps ? 0.0 : (ds.values(r, c) - lo) / range;
    }
    return out;
}

TimeSeriesDataset minmax_invert(const TimeSeriesDataset& ds, const NormalizationState& state) {
    const auto index = match_features(ds, state);
    TimeSeriesDataset out = ds;
    for (std::size_t c = 0; c < ds.features(); ++c) {
        const double lo = state.min_values[index[c]];
        const double range = state.max_values[index[c]] - lo;
        for (std::size_t r = 0; r < ds.timesteps(); ++r)
            out.values(r, c) = range < kConstEps ? lo : ds.values(r, c) * range + lo;
    }
    return out;
}

void NormalizationState::save_json(const std::string& path) const {
    nlohmann::json j;
    for (std::size_t c = 0; c < feature_names.size(); ++c)
        j[feature_names[c]] = {{"min", min_values[c]}, {"max", max_values[c]}};
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << j.dump(2) << '\n';
}

NormalizationState NormalizationState::load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path + ": invalid JSON: " + e.what());
    }
    NormalizationState state;
    for (const auto& [name, entry] : j.items()) {
        state.feature_names.push_back(name);
        state.min_values.push_back(entry.at("min").get<double>());
        state.max_values.push_back(entry.at("max").get<double>());
    }
    return state;
}

Splits split(const TimeSeriesDataset& ds, const SplitRatios& ratios, std::size_t min_len) {
    if (ratios.train <= 0.0 || ratios.val <= 0.0 || ratios.test <= 0.0)
        throw ConfigError("split ratios must all be positive");
    if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9)
        throw ConfigError("split ratios must sum to 1");

    const std::size_t t_len = ds.timesteps();
    const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(t_len) * ratios.train));
    const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(t_len) * ratios.val));
    const std::size_t n_test = t_len - n_train - n_val;
    if (n_train < min_len || n_val < min_len || n_test < min_len)
        throw ConfigError("split produces a segment shorter than " + std::to_string(min_len) +
                          " timesteps (" + std::to_string(n_train) + "/" + std::to_string(n_val) +
                          "/" + std::to_string(n_test) + ")");

    auto take = [&](std::size_t begin, std::size_t end) {
        TimeSeriesDataset part;
        part.feature_names = ds.feature_names;
        part.values = ds.values.slice_rows(begin, end);
        if (ds.has_labels())
            part.labels.assign(ds.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                               ds.labels.begin() + static_cast<std::ptrdiff_t>(end));
        if (!ds.timestamps.empty())
            part.timestamps.assign(ds.timestamps.begin() + static_cast<std::ptrdiff_t>(begin),
                                   ds.timestamps.begin() + static_cast<std::ptrdiff_t>(end));
        return part;
    };
    return Splits{take(0, n_train), take(n_train, n_train + n_val), take(n_train + n_val, t_len)};
}

} // namespace hyperts::data
