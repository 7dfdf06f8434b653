#pragma once

#include <algorithm>
#include <map>
#include <utility>
#include <vector>

#include "i2c/bank.hpp"
#include "i2c/errors.hpp"
#include "i2c/graph.hpp"
#include "i2c/rng.hpp"
#include "i2c/seeds.hpp"

namespace i2c {

struct LossWeights {
    double lambda1 = 0.008;  // SC weight
    double lambda2 = 0.001;  // GC weight
    int warmup_epochs = 1;   // epochs trained with the classification loss only

    void validate() const {
        if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("loss weights must be non-negative");
        if (warmup_epochs < 0) throw ConfigError("warmup_epochs must be non-negative");
    }
};

// Same-class images of one batch plus the disjoint pairs used by the SC loss.
// An odd leftover image still contributes to the class representation.
struct BatchClassGroup {
    int class_id = -1;
    std::vector<SeedVectors> members;
    std::vector<std::pair<int, int>> pairs;  // indices into members
};

// Groups per-image seed vectors by class and forms floor(|B^y|/2) disjoint
// pairs after shuffling each group with the batch rng.
inline std::vector<BatchClassGroup> build_class_groups(const std::vector<SeedVectors>& seeds,
                                                       Rng& rng) {
    std::map<int, BatchClassGroup> by_class;
    for (const SeedVectors& s : seeds) {
        auto& grp = by_class[s.class_id];
        grp.class_id = s.class_id;
        grp.members.push_back(s);
    }
    std::vector<BatchClassGroup> groups;
    groups.reserve(by_class.size());
    for (auto& [cls, grp] : by_class) {
        std::vector<int> order(grp.members.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        rng.shuffle(order);
        for (std::size_t i = 0; i + 1 < order.size(); i += 2)
            grp.pairs.emplace_back(order[i], order[i + 1]);
        groups.push_back(std::move(grp));
    }
    return groups;
}

// Stochastic consistency between two same-class images:
//   L_sc = (1/K) sum_k ||v_i^k - v_j^k||^2
// Rows pair by seed index k; the gradient flows symmetrically into both.
inline Graph::Id sc_loss(Graph& g, const SeedVectors& vi, const SeedVectors& vj) {
    if (vi.class_id != vj.class_id)
        throw InputError("sc_loss requires same-class seed vectors, got classes " +
                         std::to_string(vi.class_id) + " and " + std::to_string(vj.class_id));
    return squared_l2_mean(g, vi.vectors, vj.vectors);
}

// Mean of sc_loss over every formed pair across all groups; a batch with no
// same-class pair contributes a constant zero. Groups are accumulated in
// class-id order so the result is independent of caller-side ordering.
inline Graph::Id batch_sc_loss(Graph& g, const std::vector<BatchClassGroup>& groups) {
    std::vector<const BatchClassGroup*> ordered;
    ordered.reserve(groups.size());
    for (const auto& grp : groups) ordered.push_back(&grp);
    std::sort(ordered.begin(), ordered.end(),
              [](const BatchClassGroup* a, const BatchClassGroup* b) {
                  return a->class_id < b->class_id;
              });
    std::vector<Graph::Id> pair_losses;
    for (const BatchClassGroup* grp : ordered)
        for (const auto& [a, b] : grp->pairs)
            pair_losses.push_back(sc_loss(g, grp->members[static_cast<std::size_t>(a)],
                                          grp->members[static_cast<std::size_t>(b)]));
    if (pair_losses.empty()) return g.constant(Tensor::scalar(0.0));
    const std::vector<double> coeffs(pair_losses.size(), 1.0 / static_cast<double>(pair_losses.size()));
    return weighted_sum(g, pair_losses, coeffs);
}

// Batch representation of one class:
//   a^y = (1 / (K * |B^y|)) * sum of all seed vectors of the group
// Differentiable into every contributing seed vector.
inline Graph::Id class_batch_representation(Graph& g, const BatchClassGroup& group) {
    if (group.members.empty()) throw InputError("class_batch_representation: empty group");
    std::vector<Graph::Id> parts;
    parts.reserve(group.members.size());
    for (const SeedVectors& s : group.members) parts.push_back(s.vectors);
    return row_mean(g, concat_rows(g, parts));
}

// Global consistency against the center bank:
//   L_gc = (1/|Y^B|) sum_y ||a^y - w^y||^2
// Bank centers are read as constants: the backward pass assigns the bank no
// gradient and leaves it bitwise unchanged.
inline Graph::Id gc_loss(Graph& g, const std::vector<std::pair<int, Graph::Id>>& reps,
                         const CenterBank& bank) {
    if (reps.empty()) throw InputError("gc_loss: no class representations");
    std::vector<std::pair<int, Graph::Id>> ordered = reps;
    std::sort(ordered.begin(), ordered.end());
    const int d = bank.dim();
    Tensor centers = Tensor::zeros({static_cast<int>(ordered.size()), d});
    std::vector<Graph::Id> rows;
    rows.reserve(ordered.size());
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        const auto& [cls, rep] = ordered[i];
        const double* w = bank.center(cls);  // throws InputError on unknown class
        std::copy(w, w + d, centers.data.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(d)));
        rows.push_back(rep);
    }
    return squared_l2_mean(g, stack_rows(g, rows), g.constant(std::move(centers)));
}

// Joint objective L = L_cls + lambda1 * L_sc + lambda2 * L_gc. While
// epoch < warmup_epochs both effective weights are zero.
inline Graph::Id total_loss(Graph& g, Graph::Id cls, Graph::Id sc, Graph::Id gc,
                            const LossWeights& weights, int epoch) {
    weights.validate();
    const bool warm = epoch < weights.warmup_epochs;
    const double l1 = warm ? 0.0 : weights.lambda1;
    const double l2 = warm ? 0.0 : weights.lambda2;
    return weighted_sum(g, {cls, sc, gc}, {1.0, l1, l2});
}

}  // namespace i2c
