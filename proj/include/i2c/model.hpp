#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "i2c/errors.hpp"
#include "i2c/graph.hpp"
#include "i2c/optimizer.hpp"
#include "i2c/rng.hpp"
#include "i2c/tensor.hpp"

namespace i2c {

// Small CAM-style classifier: three 3x3 conv stages with two 2x2 maxpool
// downsamples (total stride 4), a bias-free 1x1 classification conv on top of
// the feature maps, and global average pooling for the logits. A 64x64 input
// yields 16x16 feature and per-class localization maps.
struct ModelConfig {
    int input_size = 64;
    int num_classes = 8;
    int feature_channels = 32;   // D, channels of the high-level feature maps
    int stride_total = 4;        // spatial downsample factor of the backbone
    std::vector<int> stage_widths = {12, 24};  // conv1/conv2 output channels

    void validate() const {
        if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
        if (feature_channels < 1) throw ConfigError("feature_channels must be >= 1");
        if (input_size < stride_total || input_size % stride_total != 0)
            throw ConfigError("input_size " + std::to_string(input_size) +
                              " must be a positive multiple of stride_total " +
                              std::to_string(stride_total));
        if (stride_total != 4)
            throw ConfigError("backbone has two maxpool2 stages; stride_total must be 4");
        if (stage_widths.size() != 2 || stage_widths[0] < 1 || stage_widths[1] < 1)
            throw ConfigError("stage_widths must hold two positive channel counts");
    }

    int map_size() const { return input_size / stride_total; }
};

struct ModelParams {
    ModelConfig config;
    ParamList params;
};

namespace detail {

inline Tensor he_uniform(Rng& rng, Shape shape, int fan_in) {
    const double bound = std::sqrt(6.0 / fan_in);
    Tensor t = Tensor::zeros(std::move(shape));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
    return t;
}

}  // namespace detail

// He-style fan-in scaled uniform initialization, deterministic per seed.
// Biases start at zero; the 1x1 classification conv is bias-free (a per-class
// bias shifts the raw map uniformly and vanishes under min-max normalization).
inline ModelParams init_model(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    ModelParams m;
    m.config = config;
    Rng rng = Rng::derive(seed, {0x4d4f44ull});  // "MOD"
    const int c1 = config.stage_widths[0];
    const int c2 = config.stage_widths[1];
    const int d = config.feature_channels;
    m.params.add("conv1.w", detail::he_uniform(rng, {c1, 3, 3, 3}, 3 * 9));
    m.params.add("conv1.b", Tensor::zeros({c1}));
    m.params.add("conv2.w", detail::he_uniform(rng, {c2, c1, 3, 3}, c1 * 9));
    m.params.add("conv2.b", Tensor::zeros({c2}));
    m.params.add("conv3.w", detail::he_uniform(rng, {d, c2, 3, 3}, c2 * 9));
    m.params.add("conv3.b", Tensor::zeros({d}));
    m.params.add("cls.w", detail::he_uniform(rng, {config.num_classes, d, 1, 1}, d));
    return m;
}

struct ForwardNodes {
    Graph::Id features;    // [N,D,H,W]
    Graph::Id class_maps;  // [N,Y,H,W]
    Graph::Id logits;      // [N,Y]
};

// One differentiable pass. logits[n] == global_average_pool(class_maps[n])
// holds exactly by construction. Pure given (params, images).
inline ForwardNodes forward(Graph& g, ModelParams& m, const Tensor& images) {
    const ModelConfig& cfg = m.config;
    if (images.rank() != 4 || images.shape[1] != 3 || images.shape[2] != cfg.input_size ||
        images.shape[3] != cfg.input_size)
        throw InputError("forward expects images [N,3," + std::to_string(cfg.input_size) + "," +
                         std::to_string(cfg.input_size) + "], got " + shape_str(images.shape));
    const Graph::Id img = g.input(images);
    Graph::Id x = conv2d(g, img, g.param(m.params.at("conv1.w")), 1, 1);
    x = bias_add(g, x, g.param(m.params.at("conv1.b")));
    x = relu(g, x);
    x = maxpool2(g, x);
    x = conv2d(g, x, g.param(m.params.at("conv2.w")), 1, 1);
    x = bias_add(g, x, g.param(m.params.at("conv2.b")));
    x = relu(g, x);
    x = maxpool2(g, x);
    x = conv2d(g, x, g.param(m.params.at("conv3.w")), 1, 1);
    x = bias_add(g, x, g.param(m.params.at("conv3.b")));
    const Graph::Id features = relu(g, x);
    const Graph::Id class_maps = conv2d(g, features, g.param(m.params.at("cls.w")), 1, 0);
    const Graph::Id logits = global_average_pool(g, class_maps);
    return {features, class_maps, logits};
}

}  // namespace i2c
