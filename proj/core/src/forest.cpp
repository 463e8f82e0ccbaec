#include "urbdiff/forest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "urbdiff/rng.hpp"
#include "urbdiff/version.hpp"

namespace urbdiff {

void ForestConfig::validate() const {
    if (n_trees < 1) throw ConfigError("forest: n_trees must be >= 1");
    if (max_depth < 1) throw ConfigError("forest: max_depth must be >= 1");
    if (min_leaf < 1) throw ConfigError("forest: min_leaf must be >= 1");
}

namespace {

double gini(std::int64_t c0, std::int64_t c1) {
    const double n = static_cast<double>(c0 + c1);
    if (n <= 0.0) return 0.0;
    const double p0 = c0 / n, p1 = c1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

struct TreeBuilder {
    const FeatureRows& rows;
    const ForestConfig& cfg;
    Rng& rng;
    int f_try;
    Tree tree;

    // Grows the subtree over `idx` (bootstrap indices) and returns its node id.
    std::int32_t grow(std::vector<int>& idx, int depth) {
        std::int64_t c0 = 0, c1 = 0;
        for (int i : idx) (rows.labels[i] ? c1 : c0) += 1;

        const std::int32_t id = static_cast<std::int32_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        auto make_leaf = [&]() {
            tree.nodes[id].leaf_class = c1 > c0 ? 1 : 0;  // tie -> class 0
            return id;
        };
        if (c0 == 0 || c1 == 0 || depth >= cfg.max_depth ||
            static_cast<int>(idx.size()) < 2 * cfg.min_leaf)
            return make_leaf();

        // Candidate features: f_try distinct draws, order-deterministic.
        std::vector<int> feats(rows.n_features);
        for (int f = 0; f < rows.n_features; ++f) feats[f] = f;
        for (int j = 0; j < f_try; ++j) {
            const int pick = j + static_cast<int>(rng.next_index(feats.size() - j));
            std::swap(feats[j], feats[pick]);
        }

        const double parent = gini(c0, c1);
        double best_gain = 1e-12;
        int best_feature = -1;
        double best_threshold = 0.0;

        std::vector<std::pair<double, int>> order(idx.size());
        for (int j = 0; j < f_try; ++j) {
            const int f = feats[j];
            for (std::size_t i = 0; i < idx.size(); ++i)
                order[i] = {rows.row(idx[i])[f], rows.labels[idx[i]]};
            std::sort(order.begin(), order.end());

            std::int64_t l0 = 0, l1 = 0;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                (order[i].second ? l1 : l0) += 1;
                if (order[i].first == order[i + 1].first) continue;  // no boundary here
                const std::int64_t nl = l0 + l1;
                const std::int64_t nr = static_cast<std::int64_t>(order.size()) - nl;
                if (nl < cfg.min_leaf || nr < cfg.min_leaf) continue;
                const double weighted =
                    (nl * gini(l0, l1) + nr * gini(c0 - l0, c1 - l1)) / order.size();
                const double gain = parent - weighted;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_feature = f;
                    best_threshold = order[i].first + 0.5 * (order[i + 1].first - order[i].first);
                }
            }
        }
        if (best_feature < 0) return make_leaf();

        std::vector<int> left, right;
        for (int i : idx)
            (rows.row(i)[best_feature] <= best_threshold ? left : right).push_back(i);
        idx.clear();
        idx.shrink_to_fit();

        tree.nodes[id].feature = best_feature;
        tree.nodes[id].threshold = best_threshold;
        const std::int32_t l = grow(left, depth + 1);
        const std::int32_t r = grow(right, depth + 1);
        tree.nodes[id].left = l;
        tree.nodes[id].right = r;
        return id;
    }
};

int predict_tree(const Tree& t, const double* row) {
    std::int32_t node = 0;
    while (t.nodes[node].feature >= 0)
        node = row[t.nodes[node].feature] <= t.nodes[node].threshold ? t.nodes[node].left
                                                                     : t.nodes[node].right;
    return t.nodes[node].leaf_class;
}

}  // namespace

Forest train_forest(const FeatureRows& rows, double split_fraction, const ForestConfig& cfg,
                    Confusion* held_out) {
    cfg.validate();
    if (rows.n_features < 1) throw ConfigError("train_forest: no features");
    if (rows.n_rows() < 2) throw ConfigError("train_forest: need at least 2 rows");
    if (rows.values.size() != static_cast<std::size_t>(rows.n_rows()) * rows.n_features)
        throw ShapeError("train_forest: value buffer does not match row count");
    if (!(split_fraction > 0.0 && split_fraction < 1.0))
        throw ConfigError("train_forest: split_fraction must lie in (0,1)");
    for (int lab : rows.labels)
        if (lab != 0 && lab != 1)
            throw LabelError("train_forest: labels must be binary, got " + std::to_string(lab));

    std::vector<int> by_class[2];
    for (int i = 0; i < rows.n_rows(); ++i) by_class[rows.labels[i]].push_back(i);
    if (by_class[0].empty() || by_class[1].empty())
        throw DegenerateSplit("train_forest: training data contains a single class");

    // Stratified shuffled split; each class keeps at least one row per side
    // when it has two or more rows.
    std::vector<int> train_idx, test_idx;
    for (int c = 0; c < 2; ++c) {
        auto& idx = by_class[c];
        Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(c) + 1));
        for (std::size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.next_index(i)]);
        const int n = static_cast<int>(idx.size());
        int n_train = static_cast<int>(std::llround(split_fraction * n));
        n_train = std::clamp(n_train, 1, std::max(1, n - 1));
        for (int i = 0; i < n; ++i) (i < n_train ? train_idx : test_idx).push_back(idx[i]);
    }

    Forest forest;
    forest.n_features = rows.n_features;
    const int f_try = static_cast<int>(
        std::min<double>(rows.n_features, std::ceil(std::sqrt(rows.n_features))));
    for (int t = 0; t < cfg.n_trees; ++t) {
        Rng rng(Rng::derive(cfg.seed, 1000 + static_cast<std::uint64_t>(t)));
        std::vector<int> sample(train_idx.size());
        for (std::size_t i = 0; i < sample.size(); ++i)
            sample[i] = train_idx[rng.next_index(train_idx.size())];
        TreeBuilder builder{rows, cfg, rng, f_try, {}};
        builder.grow(sample, 0);
        forest.trees.push_back(std::move(builder.tree));
    }

    if (held_out) {
        *held_out = Confusion{};
        for (int i : test_idx) {
            const int pred = predict_forest(forest, rows.row(i), rows.n_features);
            const int truth = rows.labels[i];
            if (pred == 1 && truth == 1) ++held_out->tp;
            else if (pred == 1 && truth == 0) ++held_out->fp;
            else if (pred == 0 && truth == 1) ++held_out->fn;
            else ++held_out->tn;
        }
    }
    return forest;
}

int predict_forest(const Forest& f, const double* row, int n_features) {
    if (n_features != f.n_features)
        throw ShapeError("predict_forest: feature length " + std::to_string(n_features) +
                         " does not match training length " + std::to_string(f.n_features));
    int votes1 = 0;
    for (const Tree& t : f.trees) votes1 += predict_tree(t, row);
    const int votes0 = static_cast<int>(f.trees.size()) - votes1;
    return votes1 > votes0 ? 1 : 0;  // tie -> class 0
}

std::vector<int> predict_forest(const Forest& f, const FeatureRows& rows) {
    std::vector<int> out(rows.n_rows());
    for (int i = 0; i < rows.n_rows(); ++i) out[i] = predict_forest(f, rows.row(i), rows.n_features);
    return out;
}

namespace {

constexpr char kForestMagic[4] = {'R', 'F', 'O', 'R'};

template <class T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::ifstream& in, const std::string& path) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError("truncated forest file '" + path + "'");
    return v;
}

}  // namespace

void save_forest(const Forest& f, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open forest file for writing: '" + path + "'");
    out.write(kForestMagic, 4);
    write_pod<std::uint32_t>(out, kForestFormatVersion);
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(f.trees.size()));
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(f.n_features));
    for (const Tree& t : f.trees) {
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.nodes.size()));
        for (const TreeNode& n : t.nodes) {
            write_pod<std::int32_t>(out, n.feature);
            write_pod<double>(out, n.threshold);
            write_pod<std::int32_t>(out, n.left);
            write_pod<std::int32_t>(out, n.right);
            write_pod<std::int32_t>(out, n.leaf_class);
        }
    }
    if (!out) throw ConfigError("failed writing forest file '" + path + "'");
}

Forest load_forest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open forest file '" + path + "'");
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kForestMagic, 4) != 0)
        throw ParseError("'" + path + "' is not a forest file (bad magic)");
    const auto version = read_pod<std::uint32_t>(in, path);
    if (version != kForestFormatVersion)
        throw ParseError("forest file '" + path + "' has unsupported version " +
                         std::to_string(version));
    const auto n_trees = read_pod<std::uint32_t>(in, path);
    const auto n_features = read_pod<std::uint32_t>(in, path);
    if (n_trees > 1000000 || n_features > 1000000)
        throw ParseError("corrupt forest file '" + path + "'");

    Forest f;
    f.n_features = static_cast<int>(n_features);
    for (std::uint32_t t = 0; t < n_trees; ++t) {
        const auto n_nodes = read_pod<std::uint32_t>(in, path);
        if (n_nodes == 0 || n_nodes > 100000000)
            throw ParseError("corrupt forest file '" + path + "'");
        Tree tree;
        tree.nodes.resize(n_nodes);
        for (TreeNode& n : tree.nodes) {
            n.feature = read_pod<std::int32_t>(in, path);
            n.threshold = read_pod<double>(in, path);
            n.left = read_pod<std::int32_t>(in, path);
            n.right = read_pod<std::int32_t>(in, path);
            n.leaf_class = read_pod<std::int32_t>(in, path);
            const auto limit = static_cast<std::int32_t>(n_nodes);
            if (n.feature >= static_cast<std::int32_t>(n_features) || n.left >= limit ||
                n.right >= limit)
                throw ParseError("corrupt forest file '" + path + "' (node out of range)");
        }
        f.trees.push_back(std::move(tree));
    }
    return f;
}

}  // namespace urbdiff
