#pragma once

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "i2c/bbox.hpp"
#include "i2c/errors.hpp"
#include "i2c/graph.hpp"
#include "i2c/locmap.hpp"
#include "i2c/model.hpp"
#include "i2c/parallel.hpp"
#include "i2c/synthdata.hpp"

namespace i2c {

inline std::string fmt_f6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

struct SampleJudgement {
    int sample_id = -1;
    int pred_label = -1;
    std::optional<BBox> pred_box;  // from the argmax class map; nothing counts as a miss
    double pred_iou = 0.0;         // best IoU of pred_box against the gt boxes
    bool top1_hit = false;
    bool top5_hit = false;
    bool gtknown_hit = false;
    bool cls1_hit = false;
    bool cls5_hit = false;
};

struct EvalReport {
    double top1_loc_err = 100.0;
    double top5_loc_err = 100.0;
    double gtknown_loc_err = 100.0;
    double top1_cls_err = 100.0;
    double top5_cls_err = 100.0;
    double tau = 0.0;
    int k_top = 5;
    bool low_discrimination_top5 = false;  // k_top is large relative to Y
    std::vector<SampleJudgement> records;
};

// Scores one sample against the Sec. 4.1 criteria:
//   Top-1 hit : argmax class is correct AND its map's box clears IoU > 0.5
//   Top-5 hit : the label appears in the top-k AND that class's own map box
//               clears IoU > 0.5 (the matching class is the label itself)
//   Gt-known  : the ground-truth class map box clears IoU > 0.5,
//               regardless of the classification outcome
// maps must already be normalized and upsampled to full resolution.
inline SampleJudgement judge_sample(const std::vector<double>& logits,
                                    const std::vector<Tensor>& maps, int gt_label,
                                    const std::vector<BBox>& gt_boxes, double tau, int k_top) {
    const int y_count = static_cast<int>(logits.size());
    if (static_cast<int>(maps.size()) != y_count)
        throw InputError("judge_sample: " + std::to_string(maps.size()) + " maps for " +
                         std::to_string(y_count) + " classes");
    if (gt_label < 0 || gt_label >= y_count) throw InputError("judge_sample: bad gt label");
    k_top = std::min(k_top, y_count);

    std::vector<int> order(static_cast<std::size_t>(y_count));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return logits[static_cast<std::size_t>(a)] >
                                                logits[static_cast<std::size_t>(b)]; });

    auto box_hit = [&](int cls, std::optional<BBox>* out_box, double* out_iou) {
        const auto box = largest_component_bbox(object_mask(maps[static_cast<std::size_t>(cls)], tau));
        if (out_box) *out_box = box;
        double best = 0.0;
        if (box)
            for (const BBox& gt : gt_boxes) best = std::max(best, iou(*box, gt));
        if (out_iou) *out_iou = best;
        return best > 0.5;
    };

    SampleJudgement j;
    j.pred_label = order[0];
    j.cls1_hit = j.pred_label == gt_label;
    for (int k = 0; k < k_top; ++k) j.cls5_hit |= order[static_cast<std::size_t>(k)] == gt_label;
    j.gtknown_hit = box_hit(gt_label, nullptr, nullptr);
    const bool pred_box_hit = box_hit(j.pred_label, &j.pred_box, &j.pred_iou);
    j.top1_hit = j.cls1_hit && pred_box_hit;
    j.top5_hit = j.cls5_hit && j.gtknown_hit;
    return j;
}

namespace detail {

inline void check_judgement_implications(const SampleJudgement& j) {
    if (j.top1_hit && !j.top5_hit) throw Error("judgement violates Top-1 => Top-5");
    if (j.top1_hit && !j.gtknown_hit) throw Error("judgement violates Top-1 => Gt-known");
    if (j.top1_hit && !j.cls1_hit) throw Error("judgement violates Top-1 => correct class");
}

}  // namespace detail

// Order-independent aggregation: hit counts are integers, so the report is
// exactly invariant to sample ordering.
inline EvalReport aggregate_judgements(std::vector<SampleJudgement> records, double tau, int k_top,
                                       int num_classes) {
    if (records.empty()) throw InputError("evaluate: empty split");
    long long top1 = 0, top5 = 0, gtk = 0, cls1 = 0, cls5 = 0;
    for (const SampleJudgement& j : records) {
        detail::check_judgement_implications(j);
        top1 += j.top1_hit;
        top5 += j.top5_hit;
        gtk += j.gtknown_hit;
        cls1 += j.cls1_hit;
        cls5 += j.cls5_hit;
    }
    const double n = static_cast<double>(records.size());
    EvalReport r;
    r.top1_loc_err = 100.0 - 100.0 * static_cast<double>(top1) / n;
    r.top5_loc_err = 100.0 - 100.0 * static_cast<double>(top5) / n;
    r.gtknown_loc_err = 100.0 - 100.0 * static_cast<double>(gtk) / n;
    r.top1_cls_err = 100.0 - 100.0 * static_cast<double>(cls1) / n;
    r.top5_cls_err = 100.0 - 100.0 * static_cast<double>(cls5) / n;
    r.tau = tau;
    r.k_top = k_top;
    r.low_discrimination_top5 = 2 * k_top >= num_classes;
    r.records = std::move(records);
    if (r.gtknown_loc_err > r.top1_loc_err + 1e-9 || r.top5_loc_err > r.top1_loc_err + 1e-9 ||
        r.top1_loc_err + 1e-9 < r.top1_cls_err)
        throw Error("evaluation metric ordering invariant violated");
    return r;
}

// Per-sample normalized full-resolution class maps plus the logits row.
struct SampleMaps {
    std::vector<double> logits;
    std::vector<Tensor> maps;
};

inline SampleMaps compute_sample_maps(ModelParams& params, const Sample& sm, int image_size) {
    Graph g;
    const Tensor image = sample_image_tensor(sm, image_size);
    Tensor batch = Tensor::zeros({1, 3, image_size, image_size});
    std::copy(image.data.begin(), image.data.end(), batch.data.begin());
    const ForwardNodes out = forward(g, params, batch);
    const Tensor& logits = g.val(out.logits);
    const Tensor& cmaps = g.val(out.class_maps);
    const int y_count = params.config.num_classes;
    const int h = cmaps.shape[2], w = cmaps.shape[3];
    SampleMaps result;
    result.logits.assign(logits.data.begin(), logits.data.end());
    result.maps.reserve(static_cast<std::size_t>(y_count));
    for (int c = 0; c < y_count; ++c) {
        Tensor raw = Tensor::zeros({h, w});
        std::copy_n(cmaps.data.begin() + static_cast<std::ptrdiff_t>(cmaps.at4(0, c, 0, 0)),
                    static_cast<std::size_t>(h) * w, raw.data.begin());
        result.maps.push_back(upsample_bilinear(normalize_map(raw), image_size, image_size));
    }
    return result;
}

// Full-split evaluation at a fixed binarization threshold. Deterministic and
// parallel over samples; metric ordering invariants are asserted on the way
// out.
inline EvalReport evaluate(ModelParams& params, const Dataset& ds, double tau, int k_top) {
    if (ds.samples.empty()) throw InputError("evaluate: empty split");
    if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0,1)");
    const int n = static_cast<int>(ds.samples.size());
    std::vector<SampleJudgement> records(static_cast<std::size_t>(n));
    const int k = std::min(k_top, params.config.num_classes);
    parallel_for(n, [&](int i) {
        const Sample& sm = ds.samples[static_cast<std::size_t>(i)];
        const SampleMaps sp = compute_sample_maps(params, sm, ds.image_size);
        records[static_cast<std::size_t>(i)] =
            judge_sample(sp.logits, sp.maps, sm.label, sm.gt_boxes, tau, k);
        records[static_cast<std::size_t>(i)].sample_id = sm.sample_id;
    });
    return aggregate_judgements(std::move(records), tau, k, params.config.num_classes);
}

// Gt-class maps paired with their ground-truth boxes, for the threshold sweep.
inline std::vector<std::pair<Tensor, std::vector<BBox>>> collect_gt_maps(ModelParams& params,
                                                                         const Dataset& ds) {
    const int n = static_cast<int>(ds.samples.size());
    std::vector<std::pair<Tensor, std::vector<BBox>>> out(static_cast<std::size_t>(n));
    parallel_for(n, [&](int i) {
        const Sample& sm = ds.samples[static_cast<std::size_t>(i)];
        SampleMaps sp = compute_sample_maps(params, sm, ds.image_size);
        out[static_cast<std::size_t>(i)] = {std::move(sp.maps[static_cast<std::size_t>(sm.label)]),
                                            sm.gt_boxes};
    });
    return out;
}

inline std::string metrics_csv(const EvalReport& r) {
    std::string s = "metric,value\n";
    s += "top1_loc_err," + fmt_f6(r.top1_loc_err) + "\n";
    s += "top5_loc_err," + fmt_f6(r.top5_loc_err) + "\n";
    s += "gtknown_loc_err," + fmt_f6(r.gtknown_loc_err) + "\n";
    s += "top1_cls_err," + fmt_f6(r.top1_cls_err) + "\n";
    s += "top5_cls_err," + fmt_f6(r.top5_cls_err) + "\n";
    s += "tau," + fmt_f6(r.tau) + "\n";
    s += "k_top," + std::to_string(r.k_top) + "\n";
    return s;
}

inline std::string per_sample_csv(const EvalReport& r) {
    std::string s = "sample_id,pred_label,iou,top1_hit,top5_hit,gtknown_hit\n";
    for (const SampleJudgement& j : r.records) {
        s += std::to_string(j.sample_id) + "," + std::to_string(j.pred_label) + "," +
             fmt_f6(j.pred_iou) + "," + std::to_string(j.top1_hit ? 1 : 0) + "," +
             std::to_string(j.top5_hit ? 1 : 0) + "," + std::to_string(j.gtknown_hit ? 1 : 0) + "\n";
    }
    return s;
}

}  // namespace i2c
