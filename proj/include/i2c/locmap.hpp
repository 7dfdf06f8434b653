#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "i2c/bbox.hpp"
#include "i2c/errors.hpp"
#include "i2c/tensor.hpp"

namespace i2c {

// Boolean 2-D grid used for thresholded localization maps.
struct Mask {
    int h = 0, w = 0;
    std::vector<std::uint8_t> v;

    Mask() = default;
    Mask(int height, int width) : h(height), w(width), v(static_cast<std::size_t>(h) * w, 0) {}

    std::uint8_t& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
    std::uint8_t at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

// Min-max normalization of a raw localization map into [0,1]. A constant map
// normalizes to all zeros (degenerate policy).
inline Tensor normalize_map(const Tensor& raw) {
    if (raw.rank() != 2 || raw.numel() == 0)
        throw InputError("normalize_map expects a non-empty 2-D map, got " + shape_str(raw.shape));
    double lo = raw.data[0], hi = raw.data[0];
    for (double v : raw.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    Tensor out = Tensor::zeros(raw.shape);
    if (hi > lo) {
        const double span = hi - lo;
        for (std::size_t i = 0; i < raw.data.size(); ++i) out.data[i] = (raw.data[i] - lo) / span;
    }
    return out;
}

// Foreground mask of pixels strictly above the threshold.
inline Mask object_mask(const Tensor& normalized, double delta) {
    if (normalized.rank() != 2) throw InputError("object_mask expects a 2-D map");
    if (!(delta > 0.0 && delta < 1.0))
        throw ConfigError("threshold must lie in (0,1), got " + std::to_string(delta));
    Mask m(normalized.shape[0], normalized.shape[1]);
    for (std::size_t i = 0; i < normalized.data.size(); ++i)
        m.v[i] = normalized.data[i] > delta ? 1 : 0;
    return m;
}

// Tight box of the largest 4-connected foreground component. Ties go to the
// component whose first pixel comes earliest in row-major order. Empty mask
// yields nothing.
inline std::optional<BBox> largest_component_bbox(const Mask& mask) {
    const int h = mask.h, w = mask.w;
    std::vector<std::uint8_t> seen(static_cast<std::size_t>(h) * w, 0);
    std::vector<int> stack;
    std::optional<BBox> best;
    long long best_count = 0;
    for (int sy = 0; sy < h; ++sy) {
        for (int sx = 0; sx < w; ++sx) {
            const std::size_t start = static_cast<std::size_t>(sy) * w + sx;
            if (!mask.v[start] || seen[start]) continue;
            long long count = 0;
            int minx = sx, maxx = sx, miny = sy, maxy = sy;
            stack.push_back(static_cast<int>(start));
            seen[start] = 1;
            while (!stack.empty()) {
                const int p = stack.back();
                stack.pop_back();
                const int y = p / w, x = p % w;
                ++count;
                minx = std::min(minx, x);
                maxx = std::max(maxx, x);
                miny = std::min(miny, y);
                maxy = std::max(maxy, y);
                const int ny[4] = {y - 1, y + 1, y, y};
                const int nx[4] = {x, x, x - 1, x + 1};
                for (int k = 0; k < 4; ++k) {
                    if (ny[k] < 0 || ny[k] >= h || nx[k] < 0 || nx[k] >= w) continue;
                    const std::size_t q = static_cast<std::size_t>(ny[k]) * w + nx[k];
                    if (mask.v[q] && !seen[q]) {
                        seen[q] = 1;
                        stack.push_back(static_cast<int>(q));
                    }
                }
            }
            // strict > keeps the earlier-discovered component on ties
            if (count > best_count) {
                best_count = count;
                best = BBox{minx, miny, maxx + 1, maxy + 1};
            }
        }
    }
    return best;
}

// Bilinear resize with the half-pixel-center convention: output (i,j) samples
// input coordinate ((i+0.5)*H/H0 - 0.5, (j+0.5)*W/W0 - 0.5), clamped.
inline Tensor upsample_bilinear(const Tensor& map, int h0, int w0) {
    if (map.rank() != 2) throw InputError("upsample_bilinear expects a 2-D map");
    if (h0 < 1 || w0 < 1)
        throw InputError("upsample_bilinear target extents must be positive, got " +
                         std::to_string(h0) + "x" + std::to_string(w0));
    const int h = map.shape[0], w = map.shape[1];
    Tensor out = Tensor::zeros({h0, w0});
    const double sy = static_cast<double>(h) / h0;
    const double sx = static_cast<double>(w) / w0;
    for (int i = 0; i < h0; ++i) {
        double fy = (i + 0.5) * sy - 0.5;
        fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, h - 1);
        const double wy = fy - y0;
        for (int j = 0; j < w0; ++j) {
            double fx = (j + 0.5) * sx - 0.5;
            fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, w - 1);
            const double wx = fx - x0;
            const double top = (1.0 - wx) * map.data[map.at2(y0, x0)] + wx * map.data[map.at2(y0, x1)];
            const double bot = (1.0 - wx) * map.data[map.at2(y1, x0)] + wx * map.data[map.at2(y1, x1)];
            out.data[out.at2(i, j)] = (1.0 - wy) * top + wy * bot;
        }
    }
    return out;
}

struct ThresholdSweep {
    double best_tau = 0.0;
    std::vector<std::pair<double, double>> error_per_tau;  // (tau, Gt-known error %)
};

// Scores each candidate binarization threshold by Gt-known error over the
// given (normalized full-size map, ground-truth boxes) pairs and returns the
// minimizer; ties resolve to the smallest threshold.
inline ThresholdSweep sweep_threshold(
    const std::vector<std::pair<Tensor, std::vector<BBox>>>& maps_with_gt,
    const std::vector<double>& grid) {
    if (maps_with_gt.empty()) throw InputError("sweep_threshold: empty map collection");
    if (grid.empty()) throw InputError("sweep_threshold: empty threshold grid");
    for (double tau : grid)
        if (!(tau > 0.0 && tau < 1.0))
            throw ConfigError("sweep threshold " + std::to_string(tau) + " outside (0,1)");

    ThresholdSweep result;
    double best_err = 0.0;
    bool first = true;
    for (double tau : grid) {
        long long hits = 0;
        for (const auto& [map, gt_boxes] : maps_with_gt) {
            const auto box = largest_component_bbox(object_mask(map, tau));
            if (!box) continue;  // none-box counts as a miss
            for (const BBox& gt : gt_boxes)
                if (iou(*box, gt) > 0.5) {
                    ++hits;
                    break;
                }
        }
        const double err =
            100.0 * (1.0 - static_cast<double>(hits) / static_cast<double>(maps_with_gt.size()));
        result.error_per_tau.emplace_back(tau, err);
        if (first || err < best_err || (err == best_err && tau < result.best_tau)) {
            first = false;
            best_err = err;
            result.best_tau = tau;
        }
    }
    return result;
}

}  // namespace i2c
