/**
 * @file assign.hpp
 * @brief Positive/negative training-sample definition strategies over an
 *        anchor pyramid: fixed IoU thresholding, spatial/scale constraints,
 *        adaptive selection (ATSS), and the center-sampling lite variant.
 *
 * Every strategy maps (anchors, ground truths) to one label per anchor plus
 * per-ground-truth diagnostics. All strategies are pure and deterministic:
 * every tie is broken explicitly, so identical inputs give identical
 * results regardless of scheduling.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "assignlab/geometry.hpp"
#include "assignlab/pyramid.hpp"

namespace assignlab {

enum class LabelKind : std::uint8_t { Negative = 0, Positive = 1, Ignore = 2 };

/// Per-anchor assignment outcome; `gt` indexes the ground-truth list and is
/// meaningful only when `kind == Positive`.
struct AnchorLabel {
    LabelKind kind = LabelKind::Negative;
    std::int32_t gt = -1;

    bool operator==(const AnchorLabel&) const = default;
};

/// Adaptive selection: candidates per pyramid level.
struct AtssConfig {
    int top_k = 9;
};

/// Fixed-threshold IoU strategy. Anchors above `theta_p` are positive,
/// below `theta_n` negative, in between ignored. `force_best_match` labels
/// each object's highest-IoU anchor positive even below the threshold.
struct IouAssignConfig {
    double theta_p = 0.5;
    double theta_n = 0.4;
    bool force_best_match = true;
};

/// Per-level regression-distance ranges for the spatial/scale strategy:
/// level i accepts candidates whose max side distance lies in
/// (bounds[i], bounds[i+1]]. Needs one more bound than there are levels.
struct ScaleRangeConfig {
    std::vector<double> bounds{0.0, 64.0, 128.0, 256.0, 512.0,
                               std::numeric_limits<double>::infinity()};

    /// The conventional ranges truncated to `level_count` levels
    /// (finite prefix of 0, 64, 128, 256, 512, then unbounded).
    static ScaleRangeConfig for_levels(std::size_t level_count) {
        static constexpr double kSteps[] = {0.0, 64.0, 128.0, 256.0, 512.0};
        if (level_count < 1 || level_count > 5)
            throw std::invalid_argument("scale ranges: default bounds cover 1..5 levels");
        ScaleRangeConfig cfg;
        cfg.bounds.assign(kSteps, kSteps + level_count);
        cfg.bounds.push_back(std::numeric_limits<double>::infinity());
        return cfg;
    }

    void validate(std::size_t level_count) const {
        if (bounds.size() != level_count + 1)
            throw std::invalid_argument("scale ranges: need exactly one bound more than levels (" +
                                        std::to_string(level_count + 1) + " values)");
        for (std::size_t i = 1; i < bounds.size(); ++i) {
            if (!(bounds[i] > bounds[i - 1]))
                throw std::invalid_argument("scale ranges: bounds must be strictly increasing");
        }
    }
};

/// Per-object bookkeeping. Candidate lists and IoU statistics are filled by
/// the strategies that have them (ATSS fills everything, center sampling
/// fills the candidate lists); the rest leave them empty/NaN.
struct GtDiagnostics {
    std::vector<std::vector<std::uint32_t>> level_candidates;  // selection order per level
    std::vector<double> candidate_ious;                        // level-major, parallel
    double iou_mean = std::numeric_limits<double>::quiet_NaN();
    double iou_std = std::numeric_limits<double>::quiet_NaN();
    double iou_threshold = std::numeric_limits<double>::quiet_NaN();
    std::uint32_t positives = 0;  // final count, after conflict resolution

    std::size_t candidate_count() const {
        std::size_t n = 0;
        for (const auto& lvl : level_candidates) n += lvl.size();
        return n;
    }
};

struct LabelCounts {
    std::int64_t positives = 0, negatives = 0, ignores = 0;
};

/// Labels partition the anchor set: every anchor carries exactly one label.
struct AssignmentResult {
    std::vector<AnchorLabel> labels;
    std::vector<GtDiagnostics> per_gt;
    std::vector<std::size_t> level_offsets;  // size L+1; level l is [offsets[l], offsets[l+1])

    LabelCounts counts() const {
        LabelCounts c;
        for (const AnchorLabel& l : labels) {
            switch (l.kind) {
                case LabelKind::Positive: ++c.positives; break;
                case LabelKind::Negative: ++c.negatives; break;
                case LabelKind::Ignore: ++c.ignores; break;
            }
        }
        return c;
    }

    int level_of(std::size_t anchor) const {
        for (std::size_t l = level_offsets.size() - 1; l-- > 0;) {
            if (anchor >= level_offsets[l]) return static_cast<int>(l);
        }
        return 0;
    }
};

namespace detail {

inline std::vector<std::size_t> level_offsets(const AnchorSet& anchors) {
    std::vector<std::size_t> off;
    off.reserve(anchors.levels.size() + 1);
    for (const auto& lv : anchors.levels) off.push_back(lv.first);
    off.push_back(anchors.size());
    return off;
}

/// Per level, the min(k, level size) anchors whose centers are closest to
/// the object center by L2 distance (compared squared; ties broken by lower
/// global index). Returned in selection order. `d2` is caller scratch.
inline std::vector<std::vector<std::uint32_t>> closest_per_level(
    const AnchorSet& anchors, const BBox& gt, int k,
    std::vector<double>& d2, std::vector<std::uint32_t>& idx) {
    const double gcx = gt.center_x();
    const double gcy = gt.center_y();
    const std::size_t n = anchors.size();
    d2.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = anchors.centers[i].x - gcx;
        const double dy = anchors.centers[i].y - gcy;
        d2[i] = dx * dx + dy * dy;
    }
    std::vector<std::vector<std::uint32_t>> out;
    out.reserve(anchors.levels.size());
    for (const auto& lv : anchors.levels) {
        idx.resize(lv.count);
        std::iota(idx.begin(), idx.end(), static_cast<std::uint32_t>(lv.first));
        const std::size_t take = std::min(static_cast<std::size_t>(k), lv.count);
        std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                          [&d2](std::uint32_t a, std::uint32_t b) {
                              if (d2[a] != d2[b]) return d2[a] < d2[b];
                              return a < b;
                          });
        out.emplace_back(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
    }
    return out;
}

/// Max of the four distances from a point to the box sides (the scale of
/// the regression target an anchor at this point would have to produce).
inline double max_side_distance(const BBox& b, const Point& p) {
    const double left = p.x - b.x1;
    const double top = p.y - b.y1;
    const double right = b.x2 - p.x;
    const double bottom = b.y2 - p.y;
    return std::max(std::max(left, top), std::max(right, bottom));
}

}  // namespace detail

/**
 * Adaptive training sample selection.
 *
 * For each object g: take the k anchors per level whose centers are
 * closest to the center of g, pool them as candidates, and compute the
 * candidate IoUs. The IoU threshold for g is mean + population standard
 * deviation of those IoUs; candidates at or above it whose center lies
 * inside g (boundary inclusive) become positive. An anchor claimed by
 * several objects keeps the one with the highest IoU (ties keep the
 * earlier object). Everything else is negative; the strategy never emits
 * ignore labels. The IoU statistics deliberately include candidates whose
 * centers fall outside g; the center constraint applies only at the final
 * selection step. An object may end up with zero positives; such objects
 * are counted, not patched.
 */
inline AssignmentResult assign_atss(const AnchorSet& anchors,
                                    const std::vector<GroundTruth>& gts,
                                    const AtssConfig& cfg = {}) {
    if (cfg.top_k < 1) throw std::invalid_argument("atss: top_k must be >= 1");
    AssignmentResult res;
    res.labels.assign(anchors.size(), AnchorLabel{});
    res.per_gt.resize(gts.size());
    res.level_offsets = detail::level_offsets(anchors);

    std::vector<double> d2;
    std::vector<std::uint32_t> idx;
    std::vector<double> claim_iou(anchors.size(), -1.0);
    std::vector<std::int32_t> claim_gt(anchors.size(), -1);

    for (std::size_t g = 0; g < gts.size(); ++g) {
        const BBox& box = gts[g].box;
        GtDiagnostics& diag = res.per_gt[g];
        diag.level_candidates = detail::closest_per_level(anchors, box, cfg.top_k, d2, idx);
        diag.candidate_ious.reserve(diag.candidate_count());
        for (const auto& lvl : diag.level_candidates) {
            for (std::uint32_t a : lvl) diag.candidate_ious.push_back(iou(anchors.boxes[a], box));
        }
        const double n = static_cast<double>(diag.candidate_ious.size());
        double sum = 0.0;
        for (double v : diag.candidate_ious) sum += v;
        const double mean = sum / n;
        double ss = 0.0;
        for (double v : diag.candidate_ious) ss += (v - mean) * (v - mean);
        diag.iou_mean = mean;
        diag.iou_std = std::sqrt(ss / n);
        diag.iou_threshold = mean + diag.iou_std;

        std::size_t j = 0;
        for (const auto& lvl : diag.level_candidates) {
            for (std::uint32_t a : lvl) {
                const double v = diag.candidate_ious[j++];
                if (v >= diag.iou_threshold && contains(box, anchors.centers[a]) &&
                    v > claim_iou[a]) {
                    claim_iou[a] = v;
                    claim_gt[a] = static_cast<std::int32_t>(g);
                }
            }
        }
    }

    for (std::size_t a = 0; a < anchors.size(); ++a) {
        if (claim_gt[a] >= 0) {
            res.labels[a] = {LabelKind::Positive, claim_gt[a]};
            ++res.per_gt[static_cast<std::size_t>(claim_gt[a])].positives;
        }
    }
    return res;
}

/**
 * Fixed IoU thresholding.
 *
 * Each anchor's fate is decided by its best IoU over all objects:
 * above theta_p positive (for the argmax object), below theta_n negative,
 * otherwise ignored. With `force_best_match`, each object's argmax anchor
 * is labeled positive for it even when the thresholds would say negative
 * or ignore; an anchor forced by several objects keeps the highest IoU
 * (ties keep the earlier object). No objects means all anchors negative.
 */
inline AssignmentResult assign_iou(const AnchorSet& anchors,
                                   const std::vector<GroundTruth>& gts,
                                   const IouAssignConfig& cfg = {}) {
    if (!(cfg.theta_n >= 0.0 && cfg.theta_n <= cfg.theta_p && cfg.theta_p <= 1.0))
        throw std::invalid_argument("iou assign: need 0 <= theta_n <= theta_p <= 1");
    AssignmentResult res;
    res.labels.assign(anchors.size(), AnchorLabel{});
    res.per_gt.resize(gts.size());
    res.level_offsets = detail::level_offsets(anchors);
    if (gts.empty()) return res;

    const std::size_t n = anchors.size();
    std::vector<LabelKind> base(n, LabelKind::Negative);
    std::vector<double> claim_iou(n, -1.0);
    std::vector<std::int32_t> claim_gt(n, -1);
    std::vector<double> gt_best_iou(gts.size(), -1.0);
    std::vector<std::size_t> gt_best_anchor(gts.size(), 0);

    for (std::size_t a = 0; a < n; ++a) {
        double best = -1.0;
        std::int32_t best_g = -1;
        for (std::size_t g = 0; g < gts.size(); ++g) {
            const double v = iou(anchors.boxes[a], gts[g].box);
            if (v > best) {
                best = v;
                best_g = static_cast<std::int32_t>(g);
            }
            if (v > gt_best_iou[g]) {
                gt_best_iou[g] = v;
                gt_best_anchor[g] = a;
            }
        }
        if (best > cfg.theta_p) {
            claim_iou[a] = best;
            claim_gt[a] = best_g;
        } else if (best < cfg.theta_n) {
            base[a] = LabelKind::Negative;
        } else {
            base[a] = LabelKind::Ignore;
        }
    }

    if (cfg.force_best_match) {
        for (std::size_t g = 0; g < gts.size(); ++g) {
            const std::size_t a = gt_best_anchor[g];
            const double v = gt_best_iou[g];
            if (claim_gt[a] < 0 || v > claim_iou[a] ||
                (v == claim_iou[a] && static_cast<std::int32_t>(g) < claim_gt[a])) {
                claim_iou[a] = v;
                claim_gt[a] = static_cast<std::int32_t>(g);
            }
        }
    }

    for (std::size_t a = 0; a < n; ++a) {
        if (claim_gt[a] >= 0) {
            res.labels[a] = {LabelKind::Positive, claim_gt[a]};
            ++res.per_gt[static_cast<std::size_t>(claim_gt[a])].positives;
        } else if (base[a] == LabelKind::Ignore) {
            res.labels[a] = {LabelKind::Ignore, -1};
        }
    }
    return res;
}

/**
 * Spatial plus scale constraints.
 *
 * An anchor whose center lies inside an object box (boundary inclusive) is
 * a spatial candidate for it; the candidate is positive at level i when the
 * max of its four side distances falls in (bounds[i], bounds[i+1]]. A point
 * inside several qualifying objects goes to the smallest-area one (ties
 * keep the earlier object). All other anchors are negative.
 */
inline AssignmentResult assign_spatial_scale(const AnchorSet& anchors,
                                             const std::vector<GroundTruth>& gts,
                                             const ScaleRangeConfig& cfg = {}) {
    cfg.validate(anchors.levels.size());
    AssignmentResult res;
    res.labels.assign(anchors.size(), AnchorLabel{});
    res.per_gt.resize(gts.size());
    res.level_offsets = detail::level_offsets(anchors);

    for (std::size_t l = 0; l < anchors.levels.size(); ++l) {
        const auto& lv = anchors.levels[l];
        const double lo = cfg.bounds[l];
        const double hi = cfg.bounds[l + 1];
        for (std::size_t a = lv.first; a < lv.first + lv.count; ++a) {
            const Point& c = anchors.centers[a];
            double best_area = std::numeric_limits<double>::infinity();
            std::int32_t best_g = -1;
            for (std::size_t g = 0; g < gts.size(); ++g) {
                const BBox& box = gts[g].box;
                if (!contains(box, c)) continue;
                const double mx = detail::max_side_distance(box, c);
                if (!(mx > lo && mx <= hi)) continue;
                const double area = box.area();
                if (area < best_area) {
                    best_area = area;
                    best_g = static_cast<std::int32_t>(g);
                }
            }
            if (best_g >= 0) {
                res.labels[a] = {LabelKind::Positive, best_g};
                ++res.per_gt[static_cast<std::size_t>(best_g)].positives;
            }
        }
    }
    return res;
}

/**
 * Center sampling, the lite variant: candidates are the top-k closest
 * anchors per level exactly as in `assign_atss`, but the final positives
 * are picked by the fixed per-level scale ranges and the center constraint
 * instead of the adaptive IoU threshold. Conflicts resolve to the
 * smallest-area object, matching `assign_spatial_scale`.
 */
inline AssignmentResult assign_center_sampling(const AnchorSet& anchors,
                                               const std::vector<GroundTruth>& gts,
                                               const AtssConfig& atss_cfg = {},
                                               const ScaleRangeConfig& range_cfg = {}) {
    if (atss_cfg.top_k < 1) throw std::invalid_argument("center sampling: top_k must be >= 1");
    range_cfg.validate(anchors.levels.size());
    AssignmentResult res;
    res.labels.assign(anchors.size(), AnchorLabel{});
    res.per_gt.resize(gts.size());
    res.level_offsets = detail::level_offsets(anchors);

    std::vector<double> d2;
    std::vector<std::uint32_t> idx;
    std::vector<double> claim_area(anchors.size(), std::numeric_limits<double>::infinity());
    std::vector<std::int32_t> claim_gt(anchors.size(), -1);

    for (std::size_t g = 0; g < gts.size(); ++g) {
        const BBox& box = gts[g].box;
        GtDiagnostics& diag = res.per_gt[g];
        diag.level_candidates =
            detail::closest_per_level(anchors, box, atss_cfg.top_k, d2, idx);
        const double area = box.area();
        for (std::size_t l = 0; l < diag.level_candidates.size(); ++l) {
            const double lo = range_cfg.bounds[l];
            const double hi = range_cfg.bounds[l + 1];
            for (std::uint32_t a : diag.level_candidates[l]) {
                const Point& c = anchors.centers[a];
                if (!contains(box, c)) continue;
                const double mx = detail::max_side_distance(box, c);
                if (!(mx > lo && mx <= hi)) continue;
                if (area < claim_area[a]) {
                    claim_area[a] = area;
                    claim_gt[a] = static_cast<std::int32_t>(g);
                }
            }
        }
    }

    for (std::size_t a = 0; a < anchors.size(); ++a) {
        if (claim_gt[a] >= 0) {
            res.labels[a] = {LabelKind::Positive, claim_gt[a]};
            ++res.per_gt[static_cast<std::size_t>(claim_gt[a])].positives;
        }
    }
    return res;
}

enum class Strategy { Atss, Iou, SpatialScale, CenterSampling };

/// Strategy selection plus every per-strategy knob; unused knobs are inert.
struct StrategyConfig {
    Strategy kind = Strategy::Atss;
    AtssConfig atss;
    IouAssignConfig iou;
    ScaleRangeConfig ranges;
};

inline const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::Atss: return "atss";
        case Strategy::Iou: return "iou";
        case Strategy::SpatialScale: return "fcos";
        case Strategy::CenterSampling: return "center-sampling";
    }
    return "?";
}

inline Strategy parse_strategy(std::string_view name) {
    if (name == "atss") return Strategy::Atss;
    if (name == "iou") return Strategy::Iou;
    if (name == "fcos") return Strategy::SpatialScale;
    if (name == "center-sampling") return Strategy::CenterSampling;
    throw std::invalid_argument("unknown strategy '" + std::string(name) +
                                "' (expected atss|iou|fcos|center-sampling)");
}

inline AssignmentResult run_assignment(const AnchorSet& anchors,
                                       const std::vector<GroundTruth>& gts,
                                       const StrategyConfig& cfg) {
    switch (cfg.kind) {
        case Strategy::Atss: return assign_atss(anchors, gts, cfg.atss);
        case Strategy::Iou: return assign_iou(anchors, gts, cfg.iou);
        case Strategy::SpatialScale: return assign_spatial_scale(anchors, gts, cfg.ranges);
        case Strategy::CenterSampling:
            return assign_center_sampling(anchors, gts, cfg.atss, cfg.ranges);
    }
    throw std::invalid_argument("unknown strategy");
}

}  // namespace assignlab
