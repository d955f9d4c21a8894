// Brute-force reference implementations used to check the library. Each is
// written directly from the strategy definitions with no shared code paths:
// exhaustive sorts instead of partial sorts, O(n^2) suppression, and a local
// IoU. Labels are encoded as plain ints so the oracles never touch the
// library's label types: g >= 0 means positive for ground truth g,
// -1 negative, -2 ignore.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "assignlab/geometry.hpp"
#include "assignlab/pyramid.hpp"

namespace oracle {

constexpr int kNegative = -1;
constexpr int kIgnore = -2;

inline double box_iou(const assignlab::BBox& a, const assignlab::BBox& b) {
    const double ix1 = std::max(a.x1, b.x1);
    const double iy1 = std::max(a.y1, b.y1);
    const double ix2 = std::min(a.x2, b.x2);
    const double iy2 = std::min(a.y2, b.y2);
    const double iw = std::max(0.0, ix2 - ix1);
    const double ih = std::max(0.0, iy2 - iy1);
    const double inter = iw * ih;
    const double uni = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

inline bool point_in_box(const assignlab::BBox& b, double x, double y) {
    return x >= b.x1 && x <= b.x2 && y >= b.y1 && y <= b.y2;
}

inline double max_side_distance(const assignlab::BBox& b, double x, double y) {
    double m = x - b.x1;
    m = std::max(m, y - b.y1);
    m = std::max(m, b.x2 - x);
    m = std::max(m, b.y2 - y);
    return m;
}

inline std::vector<assignlab::Detection> nms(const std::vector<assignlab::Detection>& dets,
                                             const assignlab::NmsParams& p) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (dets[i].score >= p.score_floor) order.push_back(i);
    }
    std::sort(order.begin(), order.end(), [&dets](std::size_t a, std::size_t b) {
        if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
        return a < b;
    });
    if (order.size() > p.pre_topk) order.resize(p.pre_topk);

    std::vector<char> removed(order.size(), 0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (removed[i]) continue;
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            if (removed[j]) continue;
            if (dets[order[i]].category != dets[order[j]].category) continue;
            if (box_iou(dets[order[i]].box, dets[order[j]].box) > p.iou_threshold)
                removed[j] = 1;
        }
    }
    std::vector<assignlab::Detection> kept;
    for (std::size_t i = 0; i < order.size() && kept.size() < p.post_topk; ++i) {
        if (!removed[i]) kept.push_back(dets[order[i]]);
    }
    return kept;
}

// Top-k anchors of one level by squared center distance, ties to the lower
// index, via a full sort of the level.
inline std::vector<std::size_t> level_topk(const assignlab::AnchorSet& anchors,
                                           std::size_t level, double gcx, double gcy, int k) {
    const auto& lv = anchors.levels[level];
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(lv.count);
    for (std::size_t i = lv.first; i < lv.first + lv.count; ++i) {
        const double dx = anchors.centers[i].x - gcx;
        const double dy = anchors.centers[i].y - gcy;
        d.emplace_back(dx * dx + dy * dy, i);
    }
    std::sort(d.begin(), d.end());
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), d.size());
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < take; ++j) out.push_back(d[j].second);
    return out;
}

struct AtssGtStats {
    double mean = 0.0, stddev = 0.0, threshold = 0.0;
};

inline std::vector<int> atss(const assignlab::AnchorSet& anchors,
                             const std::vector<assignlab::GroundTruth>& gts, int k,
                             std::vector<AtssGtStats>* stats = nullptr) {
    std::vector<int> label(anchors.size(), kNegative);
    std::vector<double> best_iou(anchors.size(), -1.0);
    if (stats) stats->assign(gts.size(), {});
    for (std::size_t g = 0; g < gts.size(); ++g) {
        const assignlab::BBox& box = gts[g].box;
        const double gcx = 0.5 * (box.x1 + box.x2);
        const double gcy = 0.5 * (box.y1 + box.y2);
        std::vector<std::size_t> cand;
        for (std::size_t l = 0; l < anchors.levels.size(); ++l) {
            const auto sel = level_topk(anchors, l, gcx, gcy, k);
            cand.insert(cand.end(), sel.begin(), sel.end());
        }
        std::vector<double> ious;
        ious.reserve(cand.size());
        for (std::size_t idx : cand) ious.push_back(box_iou(anchors.boxes[idx], box));
        double sum = 0.0;
        for (double v : ious) sum += v;
        const double mean = sum / static_cast<double>(ious.size());
        double ss = 0.0;
        for (double v : ious) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(ious.size()));
        const double thr = mean + sd;
        if (stats) (*stats)[g] = {mean, sd, thr};
        for (std::size_t j = 0; j < cand.size(); ++j) {
            const std::size_t idx = cand[j];
            const auto& c = anchors.centers[idx];
            if (ious[j] >= thr && point_in_box(box, c.x, c.y) && ious[j] > best_iou[idx]) {
                best_iou[idx] = ious[j];
                label[idx] = static_cast<int>(g);
            }
        }
    }
    return label;
}

inline std::vector<int> iou_assign(const assignlab::AnchorSet& anchors,
                                   const std::vector<assignlab::GroundTruth>& gts,
                                   double theta_p, double theta_n, bool force_best_match) {
    const std::size_t n = anchors.size();
    std::vector<int> base(n, kNegative);
    std::vector<double> claim_iou(n, -1.0);
    std::vector<int> claim_gt(n, -1);
    if (gts.empty()) return base;

    for (std::size_t a = 0; a < n; ++a) {
        double best = -1.0;
        int best_g = -1;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            const double v = box_iou(anchors.boxes[a], gts[g].box);
            if (v > best) {
                best = v;
                best_g = static_cast<int>(g);
            }
        }
        if (best > theta_p) {
            claim_iou[a] = best;
            claim_gt[a] = best_g;
        } else if (!(best < theta_n)) {
            base[a] = kIgnore;
        }
    }
    if (force_best_match) {
        for (std::size_t g = 0; g < gts.size(); ++g) {
            double best = -1.0;
            std::size_t best_a = 0;
            for (std::size_t a = 0; a < n; ++a) {
                const double v = box_iou(anchors.boxes[a], gts[g].box);
                if (v > best) {
                    best = v;
                    best_a = a;
                }
            }
            const int gi = static_cast<int>(g);
            if (claim_gt[best_a] < 0 || best > claim_iou[best_a] ||
                (best == claim_iou[best_a] && gi < claim_gt[best_a])) {
                claim_iou[best_a] = best;
                claim_gt[best_a] = gi;
            }
        }
    }
    std::vector<int> label(n);
    for (std::size_t a = 0; a < n; ++a) label[a] = claim_gt[a] >= 0 ? claim_gt[a] : base[a];
    return label;
}

inline std::vector<int> spatial_scale(const assignlab::AnchorSet& anchors,
                                      const std::vector<assignlab::GroundTruth>& gts,
                                      const std::vector<double>& bounds) {
    std::vector<int> label(anchors.size(), kNegative);
    for (std::size_t l = 0; l < anchors.levels.size(); ++l) {
        const auto& lv = anchors.levels[l];
        for (std::size_t a = lv.first; a < lv.first + lv.count; ++a) {
            const auto& c = anchors.centers[a];
            double best_area = std::numeric_limits<double>::infinity();
            int best = kNegative;
            for (std::size_t g = 0; g < gts.size(); ++g) {
                const assignlab::BBox& box = gts[g].box;
                if (!point_in_box(box, c.x, c.y)) continue;
                const double mx = max_side_distance(box, c.x, c.y);
                if (!(mx > bounds[l] && mx <= bounds[l + 1])) continue;
                const double area = (box.x2 - box.x1) * (box.y2 - box.y1);
                if (area < best_area) {
                    best_area = area;
                    best = static_cast<int>(g);
                }
            }
            label[a] = best;
        }
    }
    return label;
}

inline std::vector<int> center_sampling(const assignlab::AnchorSet& anchors,
                                        const std::vector<assignlab::GroundTruth>& gts, int k,
                                        const std::vector<double>& bounds) {
    std::vector<int> label(anchors.size(), kNegative);
    std::vector<double> claim_area(anchors.size(),
                                   std::numeric_limits<double>::infinity());
    for (std::size_t g = 0; g < gts.size(); ++g) {
        const assignlab::BBox& box = gts[g].box;
        const double gcx = 0.5 * (box.x1 + box.x2);
        const double gcy = 0.5 * (box.y1 + box.y2);
        const double area = (box.x2 - box.x1) * (box.y2 - box.y1);
        for (std::size_t l = 0; l < anchors.levels.size(); ++l) {
            for (std::size_t a : level_topk(anchors, l, gcx, gcy, k)) {
                const auto& c = anchors.centers[a];
                if (!point_in_box(box, c.x, c.y)) continue;
                const double mx = max_side_distance(box, c.x, c.y);
                if (!(mx > bounds[l] && mx <= bounds[l + 1])) continue;
                if (area < claim_area[a]) {
                    claim_area[a] = area;
                    label[a] = static_cast<int>(g);
                }
            }
        }
    }
    return label;
}

}  // namespace oracle
