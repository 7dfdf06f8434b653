#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "i2c/bbox.hpp"
#include "i2c/errors.hpp"
#include "i2c/io.hpp"
#include "i2c/locmap.hpp"
#include "i2c/rng.hpp"
#include "i2c/tensor.hpp"

namespace i2c {

// The eight shape classes, in label order.
enum class ShapeKind : int {
    Disk = 0,
    Square,
    Triangle,
    Ring,
    Cross,
    BarHorizontal,
    BarVertical,
    Diamond,
};

inline const char* shape_name(int label) {
    static const char* names[8] = {"disk",  "square", "triangle",       "ring",
                                   "cross", "bar-h",  "bar-v",          "diamond"};
    return (label >= 0 && label < 8) ? names[label] : "?";
}

struct Sample {
    std::vector<float> image;  // [3,S,S] channel-major, values in [0,1]
    int label = -1;
    std::vector<BBox> gt_boxes;
    int sample_id = -1;
};

struct DatasetSpec {
    int num_classes = 8;
    int image_size = 64;
    int train_count = 2000;
    int val_count = 250;
    int test_count = 500;
    int clutter_blobs = 10;         // background blobs per image
    double clutter_alpha = 0.8;     // peak blend strength of a blob
    double clutter_sat_max = 0.30;  // clutter stays far below foreground saturation
    double fg_sat_min = 0.75;
    double fg_val_min = 0.70;
    double shape_min = 7.0;  // foreground half-extent range, pixels
    double shape_max = 13.0;
    double noise = 0.02;  // per-pixel texture jitter amplitude
    std::uint64_t master_seed = 1;

    void validate() const {
        if (num_classes < 2 || num_classes > 8)
            throw ConfigError("num_classes must lie in [2,8], got " + std::to_string(num_classes));
        if (image_size < 16 || image_size % 4 != 0)
            throw ConfigError("image_size must be a multiple of 4 and >= 16");
        for (int count : {train_count, val_count, test_count})
            if (count < 2 * num_classes)
                throw ConfigError("split count " + std::to_string(count) +
                                  " leaves fewer than 2 images per class (pairing requires 2)");
        if (shape_min < 3.0 || shape_max < shape_min ||
            shape_max > image_size / 2.0 - 3.0)
            throw ConfigError("shape extent range does not fit the canvas");
        if (clutter_blobs < 0 || noise < 0.0) throw ConfigError("negative clutter/noise setting");
    }
};

namespace detail {

inline void hsv_to_rgb(double h, double s, double v, double rgb[3]) {
    h = h - std::floor(h);  // wrap to [0,1)
    const double i = std::floor(h * 6.0);
    const double f = h * 6.0 - i;
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - f * s);
    const double t = v * (1.0 - (1.0 - f) * s);
    switch (static_cast<int>(i) % 6) {
        case 0: rgb[0] = v; rgb[1] = t; rgb[2] = p; break;
        case 1: rgb[0] = q; rgb[1] = v; rgb[2] = p; break;
        case 2: rgb[0] = p; rgb[1] = v; rgb[2] = t; break;
        case 3: rgb[0] = p; rgb[1] = q; rgb[2] = v; break;
        case 4: rgb[0] = t; rgb[1] = p; rgb[2] = v; break;
        default: rgb[0] = v; rgb[1] = p; rgb[2] = q; break;
    }
}

}  // namespace detail

// Shape membership test at integer pixel coordinates. aux is the secondary
// extent (ring inner radius, bar/cross arm half-thickness); ignored by shapes
// that have none.
inline bool shape_contains(ShapeKind kind, double cx, double cy, double r, double aux, int x,
                           int y) {
    const double dx = x - cx;
    const double dy = y - cy;
    switch (kind) {
        case ShapeKind::Disk: return dx * dx + dy * dy <= r * r;
        case ShapeKind::Square: return std::abs(dx) <= r && std::abs(dy) <= r;
        case ShapeKind::Triangle: return dy <= r && std::abs(dx) <= (dy + r) / 2.0;
        case ShapeKind::Ring: {
            const double d2 = dx * dx + dy * dy;
            return d2 <= r * r && d2 >= aux * aux;
        }
        case ShapeKind::Cross:
            return (std::abs(dx) <= aux && std::abs(dy) <= r) ||
                   (std::abs(dy) <= aux && std::abs(dx) <= r);
        case ShapeKind::BarHorizontal: return std::abs(dx) <= r && std::abs(dy) <= aux;
        case ShapeKind::BarVertical: return std::abs(dx) <= aux && std::abs(dy) <= r;
        case ShapeKind::Diamond: return std::abs(dx) + std::abs(dy) <= r;
    }
    return false;
}

// Rasterizes a shape onto an SxS foreground mask.
inline Mask rasterize_shape(ShapeKind kind, double cx, double cy, double r, double aux, int size) {
    Mask mask(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            if (shape_contains(kind, cx, cy, r, aux, x, y)) mask.at(y, x) = 1;
    return mask;
}

// Tight box of the mask's foreground pixels, half-open.
inline BBox tight_box(const Mask& mask) {
    int minx = mask.w, maxx = -1, miny = mask.h, maxy = -1;
    for (int y = 0; y < mask.h; ++y)
        for (int x = 0; x < mask.w; ++x)
            if (mask.at(y, x)) {
                minx = std::min(minx, x);
                maxx = std::max(maxx, x);
                miny = std::min(miny, y);
                maxy = std::max(maxy, y);
            }
    if (maxx < 0) throw InputError("tight_box: empty mask");
    return BBox{minx, miny, maxx + 1, maxy + 1};
}

// Renders one sample: a saturated foreground shape over a low-saturation
// cluttered background, with a per-pixel texture jitter that never touches
// the foreground mask. The ground-truth box is scanned from the rendered
// mask, so box and foreground pixels coincide exactly.
inline Sample generate_sample(const DatasetSpec& spec, int label, Rng& rng) {
    spec.validate();
    if (label < 0 || label >= spec.num_classes)
        throw InputError("class id " + std::to_string(label) + " out of range [0," +
                         std::to_string(spec.num_classes) + ")");
    const int s = spec.image_size;
    const auto kind = static_cast<ShapeKind>(label);

    // background: near-gray base
    std::vector<float> img(static_cast<std::size_t>(3) * s * s);
    {
        double base[3];
        detail::hsv_to_rgb(rng.uniform(), rng.uniform(0.0, 0.12), rng.uniform(0.25, 0.55), base);
        for (int c = 0; c < 3; ++c)
            std::fill_n(img.begin() + static_cast<std::ptrdiff_t>(c) * s * s, s * s,
                        static_cast<float>(base[c]));
    }

    // clutter: soft elliptical low-saturation blobs, no crisp outlines
    for (int b = 0; b < spec.clutter_blobs; ++b) {
        const double bx = rng.uniform(0.0, s - 1.0);
        const double by = rng.uniform(0.0, s - 1.0);
        const double rx = rng.uniform(3.0, 10.0);
        const double ry = rng.uniform(3.0, 10.0);
        const double alpha = rng.uniform(0.3, spec.clutter_alpha);
        double col[3];
        detail::hsv_to_rgb(rng.uniform(), rng.uniform(0.0, spec.clutter_sat_max),
                           rng.uniform(0.2, 0.8), col);
        const int x0 = std::max(0, static_cast<int>(bx - rx) - 1);
        const int x1 = std::min(s - 1, static_cast<int>(bx + rx) + 1);
        const int y0 = std::max(0, static_cast<int>(by - ry) - 1);
        const int y1 = std::min(s - 1, static_cast<int>(by + ry) + 1);
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double u = (x - bx) / rx;
                const double v = (y - by) / ry;
                const double d2 = u * u + v * v;
                if (d2 >= 1.0) continue;
                const double a = alpha * (1.0 - d2);
                for (int c = 0; c < 3; ++c) {
                    auto& px = img[(static_cast<std::size_t>(c) * s + y) * s + x];
                    px = static_cast<float>((1.0 - a) * px + a * col[c]);
                }
            }
    }

    // foreground shape; resample geometry until it fits fully inside
    Mask mask;
    for (int attempt = 0;; ++attempt) {
        if (attempt >= 100)
            throw InputError("generate_sample: no fitting shape placement after 100 attempts");
        const double r = rng.uniform(spec.shape_min, spec.shape_max);
        const double margin = r + 2.0;
        if (2.0 * margin >= s - 1.0) continue;
        const double cx = rng.uniform(margin, s - 1.0 - margin);
        const double cy = rng.uniform(margin, s - 1.0 - margin);
        double aux = 0.0;
        if (kind == ShapeKind::Ring)
            aux = r * rng.uniform(0.45, 0.60);
        else if (kind == ShapeKind::Cross)
            aux = std::max(1.5, r * rng.uniform(0.22, 0.35));
        else if (kind == ShapeKind::BarHorizontal || kind == ShapeKind::BarVertical)
            aux = std::max(1.5, r * rng.uniform(0.28, 0.42));
        mask = rasterize_shape(kind, cx, cy, r, aux, s);
        bool any = false;
        for (std::uint8_t m : mask.v) any |= (m != 0);
        if (any) break;
    }
    double fg[3];
    detail::hsv_to_rgb(rng.uniform(), rng.uniform(spec.fg_sat_min, 1.0),
                       rng.uniform(spec.fg_val_min, 1.0), fg);
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x)
            if (mask.at(y, x))
                for (int c = 0; c < 3; ++c)
                    img[(static_cast<std::size_t>(c) * s + y) * s + x] = static_cast<float>(fg[c]);

    // texture jitter over the whole frame
    if (spec.noise > 0.0)
        for (auto& px : img) {
            const double v = px + rng.uniform(-spec.noise, spec.noise);
            px = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }

    Sample sample;
    sample.image = std::move(img);
    sample.label = label;
    sample.gt_boxes.push_back(tight_box(mask));
    return sample;
}

struct Dataset {
    int image_size = 0;
    int num_classes = 0;
    std::vector<Sample> samples;
    std::vector<std::vector<int>> by_class;  // sample indices per label

    void rebuild_index() {
        by_class.assign(static_cast<std::size_t>(num_classes), {});
        for (std::size_t i = 0; i < samples.size(); ++i) {
            const int label = samples[i].label;
            if (label < 0 || label >= num_classes)
                throw FormatError("sample " + std::to_string(i) + " has label " +
                                  std::to_string(label) + " outside [0," +
                                  std::to_string(num_classes) + ")");
            by_class[static_cast<std::size_t>(label)].push_back(static_cast<int>(i));
        }
    }
};

// Deterministic split generation: sample i of a split gets class i mod Y and
// its own derived rng stream, so results are independent of generation order.
inline Dataset generate_split(const DatasetSpec& spec, int split_tag, int count) {
    spec.validate();
    Dataset ds;
    ds.image_size = spec.image_size;
    ds.num_classes = spec.num_classes;
    ds.samples.resize(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        Rng rng = Rng::derive(spec.master_seed,
                              {0x44415441ull, static_cast<std::uint64_t>(split_tag),
                               static_cast<std::uint64_t>(i)});
        Sample sm = generate_sample(spec, i % spec.num_classes, rng);
        sm.sample_id = i;
        ds.samples[static_cast<std::size_t>(i)] = std::move(sm);
    }
    ds.rebuild_index();
    return ds;
}

// Paired-category batch: C categories drawn without replacement, m distinct
// images per category, order shuffled. Group structure stays recoverable via
// the labels.
inline std::vector<int> pair_batch_sampler(const Dataset& ds, int categories_per_batch,
                                           int images_per_category, Rng& rng) {
    const int c = categories_per_batch, m = images_per_category;
    if (c < 1 || c > ds.num_classes)
        throw ConfigError("categories_per_batch " + std::to_string(c) + " must lie in [1," +
                          std::to_string(ds.num_classes) + "]");
    if (m < 1) throw ConfigError("images_per_category must be >= 1");
    for (int y = 0; y < ds.num_classes; ++y)
        if (static_cast<int>(ds.by_class[static_cast<std::size_t>(y)].size()) < m)
            throw ConfigError("class " + std::to_string(y) + " has fewer than " +
                              std::to_string(m) + " images");
    std::vector<int> batch;
    batch.reserve(static_cast<std::size_t>(c) * m);
    for (int cat : rng.sample_without_replacement(ds.num_classes, c)) {
        const auto& pool = ds.by_class[static_cast<std::size_t>(cat)];
        for (int pick : rng.sample_without_replacement(static_cast<int>(pool.size()), m))
            batch.push_back(pool[static_cast<std::size_t>(pick)]);
    }
    rng.shuffle(batch);
    return batch;
}

// Copies one sample's image into a double tensor [3,S,S].
inline Tensor sample_image_tensor(const Sample& sm, int image_size) {
    Tensor t = Tensor::zeros({3, image_size, image_size});
    if (sm.image.size() != t.numel()) throw InputError("sample image size mismatch");
    for (std::size_t i = 0; i < t.numel(); ++i) t.data[i] = static_cast<double>(sm.image[i]);
    return t;
}

// ---- on-disk split format -------------------------------------------------
// magic "I2CD", u32 version, u32 count, then per sample:
//   u32 label, u32 box count, per box 4*u32 (x1,y1,x2,y2),
//   image as 3*S*S single-precision little-endian values, channel-major.
inline constexpr std::uint32_t kDatasetVersion = 1;

inline std::vector<std::uint8_t> encode_split(const Dataset& ds) {
    std::vector<std::uint8_t> out;
    put_bytes(out, "I2CD", 4);
    put_u32(out, kDatasetVersion);
    put_u32(out, static_cast<std::uint32_t>(ds.samples.size()));
    for (const Sample& sm : ds.samples) {
        put_u32(out, static_cast<std::uint32_t>(sm.label));
        put_u32(out, static_cast<std::uint32_t>(sm.gt_boxes.size()));
        for (const BBox& b : sm.gt_boxes) {
            put_u32(out, static_cast<std::uint32_t>(b.x1));
            put_u32(out, static_cast<std::uint32_t>(b.y1));
            put_u32(out, static_cast<std::uint32_t>(b.x2));
            put_u32(out, static_cast<std::uint32_t>(b.y2));
        }
        for (float v : sm.image) put_f32(out, v);
    }
    return out;
}

inline Dataset decode_split(const std::vector<std::uint8_t>& bytes, int image_size,
                            int num_classes, const std::string& source) {
    ByteReader rd(bytes, source);
    if (rd.str(4) != "I2CD") throw FormatError(source + ": bad magic at offset 0");
    const std::uint32_t version = rd.u32();
    if (version != kDatasetVersion)
        throw FormatError(source + ": unsupported version " + std::to_string(version));
    const std::uint32_t count = rd.u32();
    Dataset ds;
    ds.image_size = image_size;
    ds.num_classes = num_classes;
    ds.samples.resize(count);
    const std::size_t pixels = static_cast<std::size_t>(3) * image_size * image_size;
    for (std::uint32_t i = 0; i < count; ++i) {
        Sample& sm = ds.samples[i];
        sm.sample_id = static_cast<int>(i);
        sm.label = static_cast<int>(rd.u32());
        const std::uint32_t nboxes = rd.u32();
        if (nboxes == 0) throw FormatError(source + ": sample " + std::to_string(i) + " has no boxes");
        for (std::uint32_t b = 0; b < nboxes; ++b) {
            BBox box;
            box.x1 = static_cast<int>(rd.u32());
            box.y1 = static_cast<int>(rd.u32());
            box.x2 = static_cast<int>(rd.u32());
            box.y2 = static_cast<int>(rd.u32());
            box.validate();
            sm.gt_boxes.push_back(box);
        }
        sm.image.resize(pixels);
        for (std::size_t p = 0; p < pixels; ++p) sm.image[p] = rd.f32();
    }
    if (rd.remaining() != 0)
        throw FormatError(source + ": " + std::to_string(rd.remaining()) +
                          " trailing bytes at offset " + std::to_string(rd.offset()));
    ds.rebuild_index();
    return ds;
}

}  // namespace i2c
