#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "urbdiff/errors.hpp"
#include "urbdiff/metrics.hpp"

namespace urbdiff {

struct ForestConfig {
    int n_trees = 100;
    int max_depth = 12;
    int min_leaf = 2;
    std::uint64_t seed = 0;
    // Features examined per split: ceil(sqrt(F)), fixed by convention.

    void validate() const;  // ConfigError on violation
};

// Row-major labeled feature table; labels are binary {0,1}.
struct FeatureRows {
    int n_features = 0;
    std::vector<double> values;  // n_rows * n_features
    std::vector<int> labels;

    int n_rows() const { return static_cast<int>(labels.size()); }
    const double* row(int i) const { return values.data() + static_cast<std::size_t>(i) * n_features; }
};

struct TreeNode {
    int feature = -1;        // -1 marks a leaf
    double threshold = 0.0;  // go left when value <= threshold
    std::int32_t left = -1, right = -1;
    std::int32_t leaf_class = -1;
};

struct Tree {
    std::vector<TreeNode> nodes;  // node 0 is the root
};

struct Forest {
    int n_features = 0;
    std::vector<Tree> trees;
};

// Stratified shuffled split (split_fraction to training), then one tree per
// bootstrap sample with Gini-impurity splits over ceil(sqrt(F)) randomly
// drawn features. Ties in the majority vote resolve to class 0. When
// `held_out` is given it receives the confusion matrix over the holdout rows
// (class 1 = positive). Single-class input raises DegenerateSplit.
Forest train_forest(const FeatureRows& rows, double split_fraction, const ForestConfig& cfg,
                    Confusion* held_out = nullptr);

int predict_forest(const Forest& f, const double* row, int n_features);
std::vector<int> predict_forest(const Forest& f, const FeatureRows& rows);

// Versioned binary container: magic "RFOR", format version, tree count,
// feature count, then per tree its node array.
void save_forest(const Forest& f, const std::string& path);
Forest load_forest(const std::string& path);

}  // namespace urbdiff
