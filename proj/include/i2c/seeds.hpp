#pragma once

#include <utility>
#include <vector>

#include "i2c/errors.hpp"
#include "i2c/graph.hpp"
#include "i2c/locmap.hpp"
#include "i2c/rng.hpp"
#include "i2c/tensor.hpp"

namespace i2c {

struct SeedSelection {
    std::vector<std::pair<int, int>> coords;  // always exactly K entries
    bool fallback = false;                    // set when no pixel cleared the threshold
};

// Picks K confident object pixels from a normalized localization map.
// Eligible set E = { (i,j) : map[i,j] > delta }, scanned row-major.
//   |E| >= K : uniform sample without replacement
//   0<|E|<K : all of E, remaining slots uniform with replacement from E
//   E empty : K copies of the row-major-first argmax, fallback flag set
// Selection is pure data: no gradient flows through the decision.
inline SeedSelection select_seeds(const Tensor& normalized, double delta, int k, Rng& rng) {
    if (k < 1) throw ConfigError("seed count K must be >= 1, got " + std::to_string(k));
    if (normalized.rank() != 2) throw InputError("select_seeds expects a 2-D map");
    const int h = normalized.shape[0], w = normalized.shape[1];

    std::vector<std::pair<int, int>> eligible;
    for (int i = 0; i < h; ++i)
        for (int j = 0; j < w; ++j)
            if (normalized.data[normalized.at2(i, j)] > delta) eligible.emplace_back(i, j);

    SeedSelection sel;
    sel.coords.reserve(static_cast<std::size_t>(k));
    if (eligible.empty()) {
        int bi = 0, bj = 0;
        double bv = normalized.data[0];
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < w; ++j)
                if (normalized.data[normalized.at2(i, j)] > bv) {
                    bv = normalized.data[normalized.at2(i, j)];
                    bi = i;
                    bj = j;
                }
        sel.coords.assign(static_cast<std::size_t>(k), {bi, bj});
        sel.fallback = true;
        return sel;
    }
    const int e = static_cast<int>(eligible.size());
    if (e >= k) {
        for (int idx : rng.sample_without_replacement(e, k))
            sel.coords.push_back(eligible[static_cast<std::size_t>(idx)]);
    } else {
        sel.coords = eligible;
        for (int i = e; i < k; ++i)
            sel.coords.push_back(eligible[static_cast<std::size_t>(rng.uniform_int(e))]);
    }
    return sel;
}

// Gathers the high-level feature vectors at the selected coordinates: the
// resulting [K,D] node carries gradient into F at exactly the seed pixels.
inline Graph::Id extract_seed_vectors(Graph& g, Graph::Id features,
                                      const std::vector<std::pair<int, int>>& coords) {
    return gather_spatial(g, features, coords);
}

// Seed vectors of one image, ready for the consistency losses.
struct SeedVectors {
    std::vector<std::pair<int, int>> coords;
    Graph::Id vectors = -1;  // [K,D]
    int class_id = -1;
    int image_id = -1;
    bool fallback = false;
};

}  // namespace i2c
