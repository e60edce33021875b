#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "occ/random.hpp"

namespace occ {

enum class Label { target, outlier };

/// Labeled feature matrix. `target` is the class models are fitted on
/// (trusted users); `outlier` samples are only ever used for evaluation.
struct Dataset {
    Eigen::MatrixXd features;                // N x D
    std::vector<Label> labels;               // N
    std::vector<std::string> feature_names;  // D

    Eigen::Index n() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }

    Eigen::Index count(Label label) const {
        return static_cast<Eigen::Index>(std::count(labels.begin(), labels.end(), label));
    }

    /// Rows of one class, in dataset order.
    std::vector<int> indices_of(Label label) const {
        std::vector<int> idx;
        for (int i = 0; i < static_cast<int>(labels.size()); ++i) {
            if (labels[i] == label) idx.push_back(i);
        }
        return idx;
    }

    Eigen::MatrixXd rows(const std::vector<int>& idx) const {
        Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), features.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = features.row(idx[r]);
        return out;
    }

    Eigen::MatrixXd target_matrix() const { return rows(indices_of(Label::target)); }

    Dataset subset(const std::vector<int>& idx) const {
        Dataset out;
        out.features = rows(idx);
        out.labels.reserve(idx.size());
        for (int i : idx) out.labels.push_back(labels[static_cast<std::size_t>(i)]);
        out.feature_names = feature_names;
        return out;
    }
};

/// Per-feature z-scoring statistics, fitted on target-class rows only.
struct NormalizationStats {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;
};

struct SplitPlan {
    std::uint64_t seed = 0;
    int n_repeats = 5;
    double train_fraction = 0.7;
    // One (train_indices, test_indices) pair per repeat, each sorted ascending.
    std::vector<std::pair<std::vector<int>, std::vector<int>>> repeats;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

inline bool parse_double(const std::string& cell, double& out) {
    const char* begin = cell.data();
    const char* end = cell.data() + cell.size();
    while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end != begin && (*(end - 1) == ' ' || *(end - 1) == '\t')) --end;
    if (begin == end) return false;
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

}  // namespace detail

/// Reads a UTF-8, comma-separated file with one header row. The column named
/// `label_column` supplies the class; cells equal to `positive_label` map to
/// Label::target and every other value to Label::outlier. All remaining
/// columns must parse as finite reals.
inline Dataset load_csv(const std::string& path, const std::string& label_column,
                        const std::string& positive_label) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: missing header row in " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = detail::split_csv_line(line);
    int label_col = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
        for (std::size_t j = i + 1; j < header.size(); ++j) {
            if (header[i] == header[j]) {
                throw std::runtime_error("load_csv: duplicate header column \"" + header[i] + "\"");
            }
        }
        if (header[i] == label_column) label_col = static_cast<int>(i);
    }
    if (label_col < 0) {
        throw std::runtime_error("load_csv: label column \"" + label_column + "\" not found in " + path);
    }

    Dataset data;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (static_cast<int>(i) != label_col) data.feature_names.push_back(header[i]);
    }
    const std::size_t n_features = data.feature_names.size();
    if (n_features == 0) throw std::runtime_error("load_csv: no feature columns in " + path);

    std::vector<double> values;
    int row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == EOF) break;  // trailing newline
        ++row;
        const std::vector<std::string> cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw std::runtime_error("load_csv: row " + std::to_string(row) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (static_cast<int>(i) == label_col) {
                data.labels.push_back(cells[i] == positive_label ? Label::target : Label::outlier);
                continue;
            }
            double v = 0.0;
            if (!detail::parse_double(cells[i], v)) {
                throw std::runtime_error("load_csv: unparseable cell at row " + std::to_string(row) +
                                         ", column \"" + header[i] + "\": \"" + cells[i] + "\"");
            }
            if (!std::isfinite(v)) {
                throw std::runtime_error("load_csv: non-finite value at row " + std::to_string(row) +
                                         ", column \"" + header[i] + "\"");
            }
            values.push_back(v);
        }
    }
    if (row == 0) throw std::runtime_error("load_csv: no data rows in " + path);

    data.features.resize(row, static_cast<Eigen::Index>(n_features));
    for (int r = 0; r < row; ++r) {
        for (std::size_t c = 0; c < n_features; ++c) {
            data.features(r, static_cast<Eigen::Index>(c)) = values[static_cast<std::size_t>(r) * n_features + c];
        }
    }
    return data;
}

/// Stratified train/test splits, independently reshuffled per repeat.
/// Per class, round(train_fraction * class_count) rows go to train (clamped
/// so both sides keep at least one row of each class).
inline SplitPlan make_split_plan(const Dataset& dataset, std::uint64_t seed, int n_repeats = 5,
                                 double train_fraction = 0.7) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("make_split_plan: train_fraction must lie in (0,1)");
    }
    if (n_repeats < 1) throw std::invalid_argument("make_split_plan: n_repeats must be >= 1");
    for (Label cls : {Label::target, Label::outlier}) {
        if (dataset.count(cls) < 2) {
            throw std::invalid_argument("make_split_plan: each class needs at least 2 samples");
        }
    }

    SplitPlan plan;
    plan.seed = seed;
    plan.n_repeats = n_repeats;
    plan.train_fraction = train_fraction;
    for (int r = 0; r < n_repeats; ++r) {
        auto rng = seeded_rng(seed, static_cast<std::uint64_t>(r));
        std::vector<int> train, test;
        for (Label cls : {Label::target, Label::outlier}) {
            std::vector<int> idx = dataset.indices_of(cls);
            shuffle(idx, rng);
            const auto n_class = static_cast<long long>(idx.size());
            long long n_train = std::llround(train_fraction * static_cast<double>(n_class));
            n_train = std::clamp(n_train, 1LL, n_class - 1);
            train.insert(train.end(), idx.begin(), idx.begin() + n_train);
            test.insert(test.end(), idx.begin() + n_train, idx.end());
        }
        std::sort(train.begin(), train.end());
        std::sort(test.begin(), test.end());
        plan.repeats.emplace_back(std::move(train), std::move(test));
    }
    return plan;
}

/// Mean/std per feature over target-class rows only; population formula.
/// Zero-variance components get std 1 so the feature normalizes to constant 0.
inline NormalizationStats fit_normalizer(const Dataset& train) {
    const Eigen::MatrixXd target = train.target_matrix();
    if (target.rows() == 0) throw std::invalid_argument("fit_normalizer: no target-class rows");

    NormalizationStats stats;
    stats.mean = target.colwise().mean();
    const Eigen::MatrixXd centered = target.rowwise() - stats.mean.transpose();
    stats.std = centered.array().square().colwise().mean().sqrt();
    for (Eigen::Index j = 0; j < stats.std.size(); ++j) {
        if (stats.std[j] < 1e-12 * (1.0 + std::abs(stats.mean[j]))) stats.std[j] = 1.0;
    }
    return stats;
}

inline Dataset apply_normalizer(const NormalizationStats& stats, const Dataset& data) {
    if (stats.mean.size() != data.dim()) {
        throw std::invalid_argument("apply_normalizer: dimension mismatch");
    }
    Dataset out = data;
    out.features = (data.features.rowwise() - stats.mean.transpose()).array().rowwise() /
                   stats.std.transpose().array();
    return out;
}

/// Stratified k-fold partition of 0..N-1. Returns (fit_indices,
/// validate_indices) per fold; folds are disjoint and cover all rows.
inline std::vector<std::pair<std::vector<int>, std::vector<int>>> kfold_indices(
    const Dataset& train, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("kfold_indices: k must be >= 2");
    for (Label cls : {Label::target, Label::outlier}) {
        if (train.count(cls) < k) {
            throw std::invalid_argument("kfold_indices: a class has fewer samples than folds");
        }
    }

    auto rng = seeded_rng(seed, 0x6b666f6cULL);  // "kfol"
    std::vector<std::vector<int>> folds(static_cast<std::size_t>(k));
    for (Label cls : {Label::target, Label::outlier}) {
        std::vector<int> idx = train.indices_of(cls);
        shuffle(idx, rng);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            folds[i % static_cast<std::size_t>(k)].push_back(idx[i]);
        }
    }

    std::vector<std::pair<std::vector<int>, std::vector<int>>> out;
    for (int f = 0; f < k; ++f) {
        std::vector<int> validate = folds[static_cast<std::size_t>(f)];
        std::vector<int> fit;
        for (int g = 0; g < k; ++g) {
            if (g == f) continue;
            fit.insert(fit.end(), folds[static_cast<std::size_t>(g)].begin(), folds[static_cast<std::size_t>(g)].end());
        }
        std::sort(fit.begin(), fit.end());
        std::sort(validate.begin(), validate.end());
        out.emplace_back(std::move(fit), std::move(validate));
    }
    return out;
}

}  // namespace occ
