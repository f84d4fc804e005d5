#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "crossflow/errors.hpp"
#include "crossflow/format.hpp"
#include "crossflow/heatmap.hpp"
#include "crossflow/parallel.hpp"
#include "crossflow/rng.hpp"
#include "crossflow/scenario.hpp"

namespace crossflow {

struct ForestParams {
    int n_trees = 20;
    int mtry = 0;              // features considered per split; 0 = all
    int min_samples_split = 2;
    int max_depth = 0;         // 0 = unbounded
    bool bootstrap = true;
    std::uint64_t rng_seed = 0;
};

inline void validate(const ForestParams& p, std::size_t n_features) {
    if (p.n_trees < 1) throw ConfigError("n_trees must be >= 1");
    if (p.mtry < 0 || static_cast<std::size_t>(p.mtry) > n_features)
        throw ConfigError("mtry must be in [1, feature dimension] (or 0 for all)");
    if (p.min_samples_split < 2) throw ConfigError("min_samples_split must be >= 2");
    if (p.max_depth < 0) throw ConfigError("max_depth must be >= 0 (0 = unbounded)");
}

struct TreeNode {
    bool is_leaf = true;
    int feature_index = -1;  // internal only
    double threshold = 0.0;  // internal only; x[feature] <= threshold goes left
    int left = -1, right = -1;
    double value = 0.0;      // leaf only: mean target of the leaf samples
};

/// Nodes are stored in preorder (parent, left subtree, right subtree), the
/// same order the serialized model uses.
struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict(const double* features) const {
        int i = 0;
        while (!nodes[static_cast<std::size_t>(i)].is_leaf) {
            const TreeNode& nd = nodes[static_cast<std::size_t>(i)];
            i = features[nd.feature_index] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(i)].value;
    }
};

/// Non-owning row-major view of a feature matrix.
struct MatrixView {
    const double* data = nullptr;
    std::size_t rows = 0, cols = 0;
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Per-feature argsort of the training matrix, computed once and shared by
/// every tree (each tree only re-expands it by its bootstrap counts).
struct FeaturePresort {
    std::size_t rows = 0, cols = 0;
    std::vector<std::int32_t> order;  // cols blocks of rows indices

    const std::int32_t* feature(std::size_t f) const { return order.data() + f * rows; }
};

inline FeaturePresort make_presort(const MatrixView& X) {
    FeaturePresort pre;
    pre.rows = X.rows;
    pre.cols = X.cols;
    pre.order.resize(X.rows * X.cols);
    for (std::size_t f = 0; f < X.cols; ++f) {
        std::int32_t* block = pre.order.data() + f * X.rows;
        std::iota(block, block + X.rows, 0);
        std::sort(block, block + X.rows, [&](std::int32_t a, std::int32_t b) {
            const double va = X.at(static_cast<std::size_t>(a), f);
            const double vb = X.at(static_cast<std::size_t>(b), f);
            if (va != vb) return va < vb;
            return a < b;  // ties by row index, so input-order permutations cannot leak in
        });
    }
    return pre;
}

namespace detail {

/// Grows one CART regression tree over index arrays that stay sorted per
/// feature: finding the best split of a node is a linear scan and descending
/// into the children is a stable partition, so no per-node re-sorting happens.
class TreeBuilder {
public:
    TreeBuilder(const MatrixView& X, const double* y, const ForestParams& params)
        : x_(X), y_(y), params_(params) {}

    RegressionTree build(const FeaturePresort& pre, RngEngine& rng) {
        const std::size_t n = x_.rows, f = x_.cols;
        rng_ = &rng;

        std::vector<std::int32_t> counts(n, 1);
        if (params_.bootstrap) {
            std::fill(counts.begin(), counts.end(), 0);
            for (std::size_t i = 0; i < n; ++i) ++counts[bounded_uint(rng, n)];
        }

        idx_.assign(f, {});
        val_.assign(f, {});
        for (std::size_t feat = 0; feat < f; ++feat) {
            idx_[feat].reserve(n);
            val_[feat].reserve(n);
            const std::int32_t* block = pre.feature(feat);
            for (std::size_t r = 0; r < n; ++r) {
                const std::int32_t row = block[r];
                const double v = x_.at(static_cast<std::size_t>(row), feat);
                for (std::int32_t c = 0; c < counts[static_cast<std::size_t>(row)]; ++c) {
                    idx_[feat].push_back(row);
                    val_[feat].push_back(v);
                }
            }
        }
        scratch_idx_.resize(n);
        scratch_val_.resize(n);
        goes_left_.assign(n, 0);
        feature_pool_.resize(f);

        RegressionTree tree;
        nodes_ = &tree.nodes;
        build_node(0, idx_.empty() ? 0 : idx_[0].size(), 0);
        return tree;
    }

private:
    struct Split {
        std::size_t feature = 0;
        double threshold = 0.0;
        std::size_t n_left = 0;
        double score = -1.0;  // sumL^2/nL + sumR^2/nR, larger is better
    };

    int make_leaf(double mean) {
        const int slot = static_cast<int>(nodes_->size());
        TreeNode nd;
        nd.is_leaf = true;
        nd.value = mean;
        nodes_->push_back(nd);
        return slot;
    }

    int build_node(std::size_t b, std::size_t e, int depth) {
        const auto m = static_cast<double>(e - b);
        double sum = 0.0;
        for (std::size_t i = b; i < e; ++i) sum += y_[idx_[0][i]];
        const double mean = sum / m;

        // Two-pass SSE: the naive sumsq - sum^2/m cancels catastrophically on
        // near-constant targets and would misclassify pure nodes.
        double sse = 0.0;
        for (std::size_t i = b; i < e; ++i) {
            const double d = y_[idx_[0][i]] - mean;
            sse += d * d;
        }

        const bool depth_capped = params_.max_depth > 0 && depth >= params_.max_depth;
        if (sse <= 1e-9 || e - b < static_cast<std::size_t>(params_.min_samples_split) ||
            depth_capped)
            return make_leaf(mean);

        const Split split = best_split(b, e, sum);
        if (split.score < 0.0) return make_leaf(mean);  // no feature offers a valid threshold

        const int slot = static_cast<int>(nodes_->size());
        TreeNode nd;
        nd.is_leaf = false;
        nd.feature_index = static_cast<int>(split.feature);
        nd.threshold = split.threshold;
        nodes_->push_back(nd);

        partition(b, e, split);
        const int left = build_node(b, b + split.n_left, depth + 1);
        const int right = build_node(b + split.n_left, e, depth + 1);
        (*nodes_)[static_cast<std::size_t>(slot)].left = left;
        (*nodes_)[static_cast<std::size_t>(slot)].right = right;
        return slot;
    }

    /// Minimum weighted child variance == maximum sumL^2/nL + sumR^2/nR (the
    /// total sum of squares is constant per node). Ties keep the first
    /// candidate found, i.e. the lowest feature index, then lowest threshold
    /// (thresholds ascend within a feature scan).
    Split best_split(std::size_t b, std::size_t e, double sum_node) {
        Split best;
        const double m = static_cast<double>(e - b);

        std::size_t n_candidates = x_.cols;
        if (params_.mtry > 0 && static_cast<std::size_t>(params_.mtry) < x_.cols) {
            n_candidates = static_cast<std::size_t>(params_.mtry);
            std::iota(feature_pool_.begin(), feature_pool_.end(), std::int32_t{0});
            for (std::size_t j = 0; j < n_candidates; ++j) {
                const auto pick = j + bounded_uint(*rng_, x_.cols - j);
                std::swap(feature_pool_[j], feature_pool_[pick]);
            }
            std::sort(feature_pool_.begin(), feature_pool_.begin() +
                                                 static_cast<std::ptrdiff_t>(n_candidates));
        } else {
            std::iota(feature_pool_.begin(), feature_pool_.end(), std::int32_t{0});
        }

        for (std::size_t j = 0; j < n_candidates; ++j) {
            const auto feat = static_cast<std::size_t>(feature_pool_[j]);
            const double* vals = val_[feat].data();
            const std::int32_t* rows = idx_[feat].data();
            double sum_left = 0.0;
            for (std::size_t i = b; i + 1 < e; ++i) {
                sum_left += y_[rows[i]];
                const double v = vals[i], vnext = vals[i + 1];
                if (!(v < vnext)) continue;
                const double n_left = static_cast<double>(i + 1 - b);
                const double n_right = m - n_left;
                const double sum_right = sum_node - sum_left;
                const double score =
                    sum_left * sum_left / n_left + sum_right * sum_right / n_right;
                if (score > best.score) {
                    double mid = v + (vnext - v) * 0.5;
                    // Adjacent floats can round the midpoint onto vnext, which
                    // would move the right group left; fall back to v, which
                    // partitions identically via x <= threshold.
                    if (mid >= vnext) mid = v;
                    best = {feat, mid, i + 1 - b, score};
                }
            }
        }
        return best;
    }

    /// Stable-partitions every per-feature segment by the chosen split so the
    /// children's segments stay feature-sorted.
    void partition(std::size_t b, std::size_t e, const Split& split) {
        for (std::size_t i = b; i < e; ++i) {
            const std::int32_t row = idx_[split.feature][i];
            goes_left_[static_cast<std::size_t>(row)] =
                x_.at(static_cast<std::size_t>(row), split.feature) <= split.threshold ? 1 : 0;
        }
        for (std::size_t feat = 0; feat < x_.cols; ++feat) {
            std::int32_t* rows = idx_[feat].data();
            double* vals = val_[feat].data();
            std::size_t out_left = 0, out_right = 0;
            for (std::size_t i = b; i < e; ++i) {
                if (goes_left_[static_cast<std::size_t>(rows[i])]) {
                    scratch_idx_[out_left] = rows[i];
                    scratch_val_[out_left] = vals[i];
                    ++out_left;
                } else {
                    scratch_idx_[e - b - 1 - out_right] = rows[i];
                    scratch_val_[e - b - 1 - out_right] = vals[i];
                    ++out_right;
                }
            }
            // Right-side entries were collected back-to-front; restore order.
            std::reverse(scratch_idx_.begin() + static_cast<std::ptrdiff_t>(out_left),
                         scratch_idx_.begin() + static_cast<std::ptrdiff_t>(e - b));
            std::reverse(scratch_val_.begin() + static_cast<std::ptrdiff_t>(out_left),
                         scratch_val_.begin() + static_cast<std::ptrdiff_t>(e - b));
            std::copy(scratch_idx_.begin(), scratch_idx_.begin() + static_cast<std::ptrdiff_t>(e - b),
                      rows + b);
            std::copy(scratch_val_.begin(), scratch_val_.begin() + static_cast<std::ptrdiff_t>(e - b),
                      vals + b);
        }
    }

    MatrixView x_;
    const double* y_;
    ForestParams params_;
    RngEngine* rng_ = nullptr;
    std::vector<std::vector<std::int32_t>> idx_;  // per feature, segment-sorted row ids
    std::vector<std::vector<double>> val_;        // per feature, the matching values
    std::vector<std::int32_t> scratch_idx_;
    std::vector<double> scratch_val_;
    std::vector<std::uint8_t> goes_left_;
    std::vector<std::int32_t> feature_pool_;
    std::vector<TreeNode>* nodes_ = nullptr;
};

}  // namespace detail

/// Fits one CART regression tree (bootstrap per params). Exposed mainly for
/// oracle tests; forests share the presort across trees instead.
inline RegressionTree fit_tree(const MatrixView& X, const std::vector<double>& y,
                               const ForestParams& params, RngEngine& rng) {
    if (X.rows == 0) throw ConfigError("fit_tree: empty training set");
    if (y.size() != X.rows) throw DimensionMismatchError("fit_tree: |y| != rows of X");
    validate(params, X.cols);
    const FeaturePresort pre = make_presort(X);
    detail::TreeBuilder builder(X, y.data(), params);
    return builder.build(pre, rng);
}

struct SplitChoice {
    std::size_t feature_index = 0;
    double threshold = 0.0;
};

/// The split the tree grower would pick for a single node over the full
/// sample set (no bootstrap): lowest-feature/lowest-threshold maximizer of
/// the variance reduction. nullopt when the node is pure or no considered
/// feature has two distinct values.
inline std::optional<SplitChoice> best_split(const MatrixView& X, const std::vector<double>& y,
                                             int mtry, RngEngine& rng) {
    ForestParams params;
    params.mtry = mtry;
    params.max_depth = 1;
    params.bootstrap = false;
    const RegressionTree stub = fit_tree(X, y, params, rng);
    const TreeNode& root = stub.nodes.front();
    if (root.is_leaf) return std::nullopt;
    return SplitChoice{static_cast<std::size_t>(root.feature_index), root.threshold};
}

struct Forest {
    std::vector<RegressionTree> trees;
    ForestParams params;
    int destination_id = -1;
    std::size_t n_features = 0;

    double predict(const std::vector<double>& features) const {
        if (features.size() != n_features)
            throw DimensionMismatchError("forest expects " + std::to_string(n_features) +
                                         " features, got " + std::to_string(features.size()));
        double sum = 0.0;
        for (const RegressionTree& t : trees) sum += t.predict(features.data());
        return sum / static_cast<double>(trees.size());
    }
};

/// Trains one forest; tree t draws its RNG stream from
/// derive_seed(params.rng_seed, destination_id, t), so results do not depend
/// on scheduling or on how many trees train concurrently.
inline Forest fit_forest(const MatrixView& X, const std::vector<double>& y,
                         const ForestParams& params, int destination_id,
                         const FeaturePresort& pre, unsigned jobs = 1) {
    if (X.rows == 0) throw ConfigError("fit_forest: empty training set");
    if (y.size() != X.rows) throw DimensionMismatchError("fit_forest: |y| != rows of X");
    validate(params, X.cols);
    Forest forest;
    forest.params = params;
    forest.destination_id = destination_id;
    forest.n_features = X.cols;
    forest.trees.resize(static_cast<std::size_t>(params.n_trees));
    parallel_for(forest.trees.size(), jobs, [&](std::size_t t) {
        RngEngine rng = make_rng(derive_seed(params.rng_seed,
                                             static_cast<std::uint64_t>(destination_id), t));
        detail::TreeBuilder builder(X, y.data(), params);
        forest.trees[t] = builder.build(pre, rng);
    });
    return forest;
}

inline Forest fit_forest(const MatrixView& X, const std::vector<double>& y,
                         const ForestParams& params, int destination_id, unsigned jobs = 1) {
    return fit_forest(X, y, params, destination_id, make_presort(X), jobs);
}

/// One forest per destination (L, S, R) over a shared feature space; joint
/// predictions are normalized onto the 100-simplex.
struct DestinationPredictor {
    std::array<Forest, kNumDestinations> forests;
    std::size_t n_features = 0;

    std::array<double, 3> predict_distribution(const std::vector<double>& features) const {
        if (features.size() != n_features)
            throw DimensionMismatchError("predictor expects " + std::to_string(n_features) +
                                         " features, got " + std::to_string(features.size()));
        std::array<double, 3> raw{};
        for (std::size_t d = 0; d < kNumDestinations; ++d)
            raw[d] = std::max(0.0, forests[d].predict(features));
        const double total = raw[0] + raw[1] + raw[2];
        if (total <= 1e-12) return {100.0 / 3.0, 100.0 / 3.0, 100.0 / 3.0};
        for (double& v : raw) v *= 100.0 / total;
        return raw;
    }
};

/// Flattens the dataset's samples into a contiguous row-major matrix for
/// training. The matrix owns its storage; views into it stay valid while it
/// lives.
struct TrainingMatrix {
    std::vector<double> x;  // n * f
    std::array<std::vector<double>, kNumDestinations> y;
    std::size_t rows = 0, cols = 0;

    MatrixView view() const { return {x.data(), rows, cols}; }
};

inline TrainingMatrix make_training_matrix(const Dataset& ds) {
    TrainingMatrix m;
    m.rows = ds.samples.size();
    m.cols = ds.feature_dim();
    m.x.reserve(m.rows * m.cols);
    for (std::size_t d = 0; d < kNumDestinations; ++d) m.y[d].reserve(m.rows);
    for (const HeatmapSample& s : ds.samples) {
        if (s.features.size() != m.cols)
            throw DimensionMismatchError("dataset rows disagree on feature length");
        m.x.insert(m.x.end(), s.features.begin(), s.features.end());
        for (std::size_t d = 0; d < kNumDestinations; ++d) m.y[d].push_back(s.response[d]);
    }
    return m;
}

/// Trains the three per-destination forests. All 3 * n_trees trees share one
/// feature presort and are independent work items, so they can be trained in
/// parallel with schedule-independent results.
inline DestinationPredictor fit_predictor(const Dataset& train, const ForestParams& params,
                                          unsigned jobs = 1) {
    if (train.samples.empty()) throw ConfigError("fit_predictor: empty training set");
    const TrainingMatrix m = make_training_matrix(train);
    validate(params, m.cols);
    const FeaturePresort pre = make_presort(m.view());

    DestinationPredictor predictor;
    predictor.n_features = m.cols;
    for (std::size_t d = 0; d < kNumDestinations; ++d) {
        Forest& forest = predictor.forests[d];
        forest.params = params;
        forest.destination_id = static_cast<int>(d);
        forest.n_features = m.cols;
        forest.trees.resize(static_cast<std::size_t>(params.n_trees));
    }
    const auto n_trees = static_cast<std::size_t>(params.n_trees);
    parallel_for(kNumDestinations * n_trees, jobs, [&](std::size_t slot) {
        const std::size_t d = slot / n_trees;
        const std::size_t t = slot % n_trees;
        RngEngine rng = make_rng(derive_seed(params.rng_seed, d, t));
        detail::TreeBuilder builder(m.view(), m.y[d].data(), params);
        predictor.forests[d].trees[t] = builder.build(pre, rng);
    });
    return predictor;
}

// -- Model persistence --------------------------------------------------------

inline constexpr const char* kModelMagic = "crossflow-model";
inline constexpr const char* kModelVersion = "v1";

namespace detail {

inline void save_tree(std::ostream& out, const RegressionTree& tree) {
    out << "tree " << tree.nodes.size() << "\n";
    // Nodes are built in preorder, so vector order is already the format's
    // order and child indices reconstruct implicitly on load.
    for (const TreeNode& nd : tree.nodes) {
        if (nd.is_leaf)
            out << "leaf " << format_double(nd.value) << "\n";
        else
            out << "internal " << nd.feature_index << " " << format_double(nd.threshold) << "\n";
    }
}

inline int load_node(std::istream& in, RegressionTree& tree, std::size_t n_features) {
    std::string kind;
    if (!(in >> kind)) throw IoError("model file: truncated tree");
    const int slot = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (kind == "leaf") {
        std::string value;
        in >> value;
        tree.nodes[static_cast<std::size_t>(slot)].value = parse_double(value, "leaf value");
    } else if (kind == "internal") {
        std::string feat, thr;
        in >> feat >> thr;
        TreeNode nd;
        nd.is_leaf = false;
        nd.feature_index = static_cast<int>(parse_int(feat, "feature index"));
        nd.threshold = parse_double(thr, "threshold");
        if (nd.feature_index < 0 || static_cast<std::size_t>(nd.feature_index) >= n_features)
            throw IoError("model file: feature index out of range");
        tree.nodes[static_cast<std::size_t>(slot)] = nd;
        const int left = load_node(in, tree, n_features);
        const int right = load_node(in, tree, n_features);
        tree.nodes[static_cast<std::size_t>(slot)].left = left;
        tree.nodes[static_cast<std::size_t>(slot)].right = right;
    } else {
        throw IoError("model file: unknown node kind '" + kind + "'");
    }
    return slot;
}

}  // namespace detail

inline void save_model(std::ostream& out, const DestinationPredictor& predictor) {
    const ForestParams& p = predictor.forests[0].params;
    out << kModelMagic << " " << kModelVersion << "\n";
    out << "feature_dim " << predictor.n_features << "\n";
    out << "n_trees " << p.n_trees << "\n";
    out << "mtry " << p.mtry << "\n";
    out << "min_samples_split " << p.min_samples_split << "\n";
    out << "max_depth " << p.max_depth << "\n";
    out << "bootstrap " << (p.bootstrap ? 1 : 0) << "\n";
    out << "seed " << p.rng_seed << "\n";
    for (std::size_t d = 0; d < kNumDestinations; ++d) {
        out << "forest " << kDestinationLabels[d] << "\n";
        for (const RegressionTree& tree : predictor.forests[d].trees) detail::save_tree(out, tree);
    }
}

inline DestinationPredictor load_model(std::istream& in) {
    auto expect = [&](const std::string& want) {
        std::string got;
        if (!(in >> got) || got != want)
            throw IoError("model file: expected '" + want + "', got '" + got + "'");
    };
    auto read_int = [&](const std::string& key) {
        expect(key);
        std::string tok;
        if (!(in >> tok)) throw IoError("model file: missing value for " + key);
        return parse_int(tok, key);
    };
    expect(kModelMagic);
    expect(kModelVersion);

    DestinationPredictor predictor;
    predictor.n_features = static_cast<std::size_t>(read_int("feature_dim"));
    ForestParams p;
    p.n_trees = static_cast<int>(read_int("n_trees"));
    p.mtry = static_cast<int>(read_int("mtry"));
    p.min_samples_split = static_cast<int>(read_int("min_samples_split"));
    p.max_depth = static_cast<int>(read_int("max_depth"));
    p.bootstrap = read_int("bootstrap") != 0;
    expect("seed");
    std::string seed_tok;
    if (!(in >> seed_tok)) throw IoError("model file: missing seed");
    p.rng_seed = parse_uint64(seed_tok, "seed");

    for (std::size_t d = 0; d < kNumDestinations; ++d) {
        expect("forest");
        expect(kDestinationLabels[d]);
        Forest& forest = predictor.forests[d];
        forest.params = p;
        forest.destination_id = static_cast<int>(d);
        forest.n_features = predictor.n_features;
        forest.trees.resize(static_cast<std::size_t>(p.n_trees));
        for (RegressionTree& tree : forest.trees) {
            expect("tree");
            std::string count_tok;
            if (!(in >> count_tok)) throw IoError("model file: missing node count");
            const auto n_nodes = static_cast<std::size_t>(parse_int(count_tok, "node count"));
            tree.nodes.reserve(n_nodes);
            detail::load_node(in, tree, predictor.n_features);
            if (tree.nodes.size() != n_nodes)
                throw IoError("model file: tree node count mismatch");
        }
    }
    return predictor;
}

}  // namespace crossflow
