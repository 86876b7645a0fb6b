#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "caisson/errors.hpp"
#include "caisson/rng.hpp"
#include "caisson/vecmath.hpp"

namespace caisson {

struct SomParams {
    int n = 10;          // grid side
    int dim = 434;       // embedding dimension
    double alpha0 = 0.05;
    double gamma = 0.8;
    double sigma0 = 0.0;        // 0 -> n / 2
    double lambda_decay = 0.0;  // 0 -> 8 / epochs
    int epochs = 150;
    int batch_size = 32;
    uint64_t seed = 0;

    // The neighborhood shrinks to sub-cell width by roughly a third of the
    // schedule, so the bulk of the organization happens early and the rest of
    // the run fine-tunes node means.
    SomParams resolved() const {
        SomParams p = *this;
        if (p.sigma0 <= 0.0) p.sigma0 = static_cast<double>(p.n) / 2.0;
        if (p.lambda_decay <= 0.0) p.lambda_decay = 8.0 / static_cast<double>(p.epochs);
        return p;
    }
};

// alpha(t) = alpha0 * (1 - gamma * t / T), linear decay over epochs.
inline double learning_rate(double alpha0, double gamma, int t, int epochs) {
    return alpha0 * (1.0 - gamma * static_cast<double>(t) / static_cast<double>(epochs));
}

// sigma(t) = sigma0 * exp(-lambda * t)
inline double neighborhood_sigma(double sigma0, double lambda_decay, int t) {
    return sigma0 * std::exp(-lambda_decay * static_cast<double>(t));
}

// h_ci = alpha(t) * exp(-||r_c - r_i||^2 / (2 sigma(t)^2)), grid_dist2 being
// the squared Euclidean distance between lattice positions.
inline double neighborhood_influence(double alpha, double grid_dist2, double sigma) {
    return alpha * std::exp(-grid_dist2 / (2.0 * sigma * sigma));
}

struct SomEntry {
    std::string id;
    std::vector<float> vec;
};

struct TrainingTrace {
    std::vector<double> quantization_errors;  // Q per epoch, computed post-update
    std::vector<double> epoch_millis;
};

// n x n lattice. Beyond the classical representative vectors, every node
// keeps the full set of documents mapped to it, so each node doubles as a
// local vector store for retrieval.
class SomGrid {
public:
    SomGrid() = default;

    static SomGrid init(const SomParams& params) {
        if (params.n < 2) throw ValidationError("SOM grid side must be >= 2");
        if (params.dim < 1) throw ValidationError("SOM dimension must be >= 1");
        if (params.alpha0 <= 0.0 || params.alpha0 > 1.0)
            throw ValidationError("alpha0 must lie in (0, 1]");
        if (params.epochs < 1) throw ValidationError("epochs must be >= 1");
        if (params.batch_size < 1) throw ValidationError("batch_size must be >= 1");
        SomGrid g;
        g.params_ = params.resolved();
        g.n_ = params.n;
        g.dim_ = params.dim;
        size_t cells = static_cast<size_t>(g.n_) * static_cast<size_t>(g.n_);
        g.weights_.resize(cells * static_cast<size_t>(g.dim_));
        Rng rng(g.params_.seed);
        for (float& w : g.weights_) w = static_cast<float>(rng.uniform(-0.1, 0.1));
        g.collections_.assign(cells, {});
        return g;
    }

    static SomGrid restore(const SomParams& params, std::vector<float> weights,
                           std::vector<std::vector<SomEntry>> collections, bool trained) {
        SomGrid g;
        g.params_ = params.resolved();
        g.n_ = params.n;
        g.dim_ = params.dim;
        size_t cells = static_cast<size_t>(g.n_) * static_cast<size_t>(g.n_);
        if (weights.size() != cells * static_cast<size_t>(g.dim_))
            throw ValidationError("restored SOM weight block has wrong size");
        if (collections.size() != cells)
            throw ValidationError("restored SOM collection count has wrong size");
        g.weights_ = std::move(weights);
        g.collections_ = std::move(collections);
        g.trained_ = trained;
        return g;
    }

    int n() const { return n_; }
    int dim() const { return dim_; }
    int cell_count() const { return n_ * n_; }
    bool trained() const { return trained_; }
    const SomParams& params() const { return params_; }
    const std::vector<float>& raw_weights() const { return weights_; }

    std::span<const float> weight(int node) const {
        return {weights_.data() + static_cast<size_t>(node) * static_cast<size_t>(dim_),
                static_cast<size_t>(dim_)};
    }

    std::pair<int, int> grid_pos(int node) const { return {node / n_, node % n_}; }

    const std::vector<SomEntry>& collection(int node) const {
        return collections_[static_cast<size_t>(node)];
    }

    size_t stored_count() const {
        size_t total = 0;
        for (const auto& c : collections_) total += c.size();
        return total;
    }

    // Index of the node nearest to x (Euclidean); ties resolve to the
    // smallest row-major index.
    int find_bmu(std::span<const float> x) const {
        check_dim(x);
        int best = 0;
        float best_d = squared_distance(weight(0), x);
        const int cells = cell_count();
        for (int i = 1; i < cells; ++i) {
            float d = squared_distance(weight(i), x);
            if (d < best_d) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }

    // One epoch over the inputs in the given order. Inputs are walked in
    // batches of batch_size with per-sample sequential updates inside each
    // batch; batching therefore only sets the walk granularity. Returns the
    // post-update quantization error.
    double train_epoch(const std::vector<const SomEntry*>& inputs, int t) {
        if (t >= params_.epochs)
            throw ValidationError("epoch " + std::to_string(t) + " is past the schedule end " +
                                  std::to_string(params_.epochs));
        const double alpha = learning_rate(params_.alpha0, params_.gamma, t, params_.epochs);
        const double sigma = neighborhood_sigma(params_.sigma0, params_.lambda_decay, t);
        const int cells = cell_count();

        // h depends only on (bmu, node) within an epoch; precompute the table
        std::vector<float> influence(static_cast<size_t>(cells) * static_cast<size_t>(cells));
        for (int c = 0; c < cells; ++c) {
            auto [cr, cc] = grid_pos(c);
            for (int i = 0; i < cells; ++i) {
                auto [ir, ic] = grid_pos(i);
                double gd2 = static_cast<double>((cr - ir) * (cr - ir) + (cc - ic) * (cc - ic));
                influence[static_cast<size_t>(c) * static_cast<size_t>(cells) +
                          static_cast<size_t>(i)] =
                    static_cast<float>(neighborhood_influence(alpha, gd2, sigma));
            }
        }

        const size_t batch = static_cast<size_t>(params_.batch_size);
        for (size_t start = 0; start < inputs.size(); start += batch) {
            size_t end = std::min(inputs.size(), start + batch);
            for (size_t s = start; s < end; ++s) {
                const SomEntry& entry = *inputs[s];
                check_dim(entry.vec);
                int bmu = find_bmu(entry.vec);
                const float* h_row =
                    influence.data() + static_cast<size_t>(bmu) * static_cast<size_t>(cells);
                const float* x = entry.vec.data();
                for (int i = 0; i < cells; ++i) {
                    float h = h_row[i];
                    float* w = weights_.data() +
                               static_cast<size_t>(i) * static_cast<size_t>(dim_);
                    for (int j = 0; j < dim_; ++j) w[j] += h * (x[j] - w[j]);
                }
            }
        }

        double q = 0.0;
        for (const SomEntry* entry : inputs) {
            int bmu = find_bmu(entry->vec);
            q += static_cast<double>(squared_distance(weight(bmu), entry->vec));
        }
        return q / static_cast<double>(inputs.size());
    }

    // Full schedule: seeded epoch-level shuffling, synchronized Q trace, and a
    // final storage pass that assigns every document to its end-state BMU.
    TrainingTrace train(const std::vector<SomEntry>& corpus) {
        if (corpus.empty()) throw ValidationError("cannot train on an empty corpus");
        for (const SomEntry& e : corpus) check_dim(e.vec);

        std::vector<const SomEntry*> order(corpus.size());
        for (size_t i = 0; i < corpus.size(); ++i) order[i] = &corpus[i];

        TrainingTrace trace;
        Rng shuffle_rng(params_.seed ^ 0x0e70c5u);
        for (int t = 0; t < params_.epochs; ++t) {
            auto started = std::chrono::steady_clock::now();
            shuffle_rng.shuffle(order);
            double q = train_epoch(order, t);
            auto elapsed = std::chrono::steady_clock::now() - started;
            trace.quantization_errors.push_back(q);
            trace.epoch_millis.push_back(
                std::chrono::duration<double, std::milli>(elapsed).count());
        }

        for (auto& c : collections_) c.clear();
        for (const SomEntry& e : corpus) {
            int bmu = find_bmu(e.vec);
            collections_[static_cast<size_t>(bmu)].push_back(e);
        }
        trained_ = true;
        return trace;
    }

    // Union of the collections of all nodes within Chebyshev grid distance
    // <= radius of the query's BMU, walked row-major with per-node insertion
    // order preserved.
    std::vector<const SomEntry*> neighborhood_search(std::span<const float> q,
                                                     int radius) const {
        if (!trained_) throw ValidationError("SOM is not trained");
        if (radius < 0) throw ValidationError("search radius must be >= 0");
        check_dim(q);
        auto [br, bc] = grid_pos(find_bmu(q));
        int r0 = std::max(0, br - radius), r1 = std::min(n_ - 1, br + radius);
        int c0 = std::max(0, bc - radius), c1 = std::min(n_ - 1, bc + radius);
        std::vector<const SomEntry*> out;
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c)
                for (const SomEntry& e : collections_[static_cast<size_t>(r * n_ + c)])
                    out.push_back(&e);
        return out;
    }

private:
    void check_dim(std::span<const float> x) const {
        if (static_cast<int>(x.size()) != dim_)
            throw ValidationError("vector has dimension " + std::to_string(x.size()) +
                                  ", expected " + std::to_string(dim_));
    }

    SomParams params_;
    int n_ = 0;
    int dim_ = 0;
    std::vector<float> weights_;  // row-major cells x dim
    std::vector<std::vector<SomEntry>> collections_;
    bool trained_ = false;
};

}  // namespace caisson
