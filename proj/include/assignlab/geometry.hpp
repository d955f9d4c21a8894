/**
 * @file geometry.hpp
 * @brief Axis-aligned box arithmetic: IoU, GIoU, center distance,
 *        containment, and greedy per-class non-maximum suppression.
 *
 * All geometry is double precision in continuous image coordinates
 * (origin top-left, no +1 pixel offsets: width = x2 - x1).
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

namespace assignlab {

/// Axis-aligned box, corners (x1, y1) top-left and (x2, y2) bottom-right.
struct BBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    double width() const { return x2 - x1; }
    double height() const { return y2 - y1; }
    double area() const { return width() * height(); }
    double center_x() const { return 0.5 * (x1 + x2); }
    double center_y() const { return 0.5 * (y1 + y2); }

    static BBox from_center(double cx, double cy, double w, double h) {
        return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
    }

    bool operator==(const BBox&) const = default;
};

struct Point {
    double x = 0, y = 0;

    bool operator==(const Point&) const = default;
};

/// Scored box, the carrier of the inference post-processing pipeline.
struct Detection {
    BBox box;
    double score = 0;   // confidence in [0, 1]
    int category = -1;

    bool operator==(const Detection&) const = default;
};

/// One labeled object box. `id` is the per-image ordinal.
struct GroundTruth {
    BBox box;
    int category = 0;
    int id = 0;
};

/// Boundary-inclusive point-in-box test.
inline bool contains(const BBox& b, const Point& p) {
    return p.x >= b.x1 && p.x <= b.x2 && p.y >= b.y1 && p.y <= b.y2;
}

/// Intersection-over-union in [0, 1]. Disjoint or fully degenerate pairs
/// give 0; the union uses inclusion-exclusion.
inline double iou(const BBox& a, const BBox& b) {
    const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// Generalized IoU in (-1, 1]: IoU minus the normalized empty area of the
/// smallest enclosing box. A metric here, not a loss.
inline double giou(const BBox& a, const BBox& b) {
    const double iw = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    const double ih = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    const double enc_w = std::max(a.x2, b.x2) - std::min(a.x1, b.x1);
    const double enc_h = std::max(a.y2, b.y2) - std::min(a.y1, b.y1);
    const double enc = enc_w * enc_h;
    const double base = uni > 0.0 ? inter / uni : 0.0;
    if (enc <= 0.0) return base;
    return base - (enc - uni) / enc;
}

/// Squared L2 distance between box centers.
inline double center_distance_sq(const BBox& a, const BBox& b) {
    const double dx = a.center_x() - b.center_x();
    const double dy = a.center_y() - b.center_y();
    return dx * dx + dy * dy;
}

/// Post-processing knobs for `nms`: score filter, per-class greedy
/// suppression, and the top-k truncations around it.
struct NmsParams {
    double iou_threshold = 0.6;
    double score_floor = 0.05;
    std::size_t pre_topk = 1000;
    std::size_t post_topk = 100;
};

/**
 * Greedy per-category non-maximum suppression.
 *
 * Detections below `score_floor` are discarded, the rest are ranked by
 * descending score (ties broken by lower input index), truncated to
 * `pre_topk`, greedily suppressed per category at `iou_threshold`
 * (strictly greater suppresses), and the survivors truncated to
 * `post_topk`. Output is sorted by descending score.
 */
inline std::vector<Detection> nms(const std::vector<Detection>& dets,
                                  const NmsParams& params = {}) {
    std::vector<std::size_t> order;
    order.reserve(dets.size());
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (dets[i].score >= params.score_floor) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
        return a < b;
    });
    if (order.size() > params.pre_topk) order.resize(params.pre_topk);

    std::vector<Detection> kept;
    kept.reserve(std::min(order.size(), params.post_topk));
    for (std::size_t idx : order) {
        if (kept.size() == params.post_topk) break;
        const Detection& cand = dets[idx];
        bool suppressed = false;
        for (const Detection& k : kept) {
            if (k.category == cand.category &&
                iou(k.box, cand.box) > params.iou_threshold) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(cand);
    }
    return kept;
}

}  // namespace assignlab
