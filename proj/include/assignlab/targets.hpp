/**
 * @file targets.hpp
 * @brief Regression-target codecs for the two box-regression conventions:
 *        offsets from an anchor box and side distances from an anchor point.
 *
 * Both codecs are exact bijections onto positive-area boxes; no scaling
 * weights are applied to the components.
 */

#pragma once

#include <cmath>
#include <stdexcept>

#include "assignlab/geometry.hpp"

namespace assignlab {

/// Center offsets normalized by anchor size plus log size ratios.
struct BoxDelta {
    double dx = 0.0, dy = 0.0, dw = 0.0, dh = 0.0;

    bool operator==(const BoxDelta&) const = default;
};

/// Pixel distances from a point to the four box sides (left, top, right,
/// bottom). All non-negative when the point lies inside the box.
struct DistanceTarget {
    double l = 0.0, t = 0.0, r = 0.0, b = 0.0;

    bool operator==(const DistanceTarget&) const = default;
};

inline BoxDelta encode_box_offsets(const BBox& anchor, const BBox& gt) {
    if (!(anchor.width() > 0.0 && anchor.height() > 0.0))
        throw std::invalid_argument("encode_box_offsets: anchor must have positive dimensions");
    if (!(gt.width() > 0.0 && gt.height() > 0.0))
        throw std::invalid_argument("encode_box_offsets: gt must have positive dimensions");
    BoxDelta d;
    d.dx = (gt.center_x() - anchor.center_x()) / anchor.width();
    d.dy = (gt.center_y() - anchor.center_y()) / anchor.height();
    d.dw = std::log(gt.width() / anchor.width());
    d.dh = std::log(gt.height() / anchor.height());
    return d;
}

inline BBox decode_box_offsets(const BBox& anchor, const BoxDelta& d) {
    if (!(anchor.width() > 0.0 && anchor.height() > 0.0))
        throw std::invalid_argument("decode_box_offsets: anchor must have positive dimensions");
    const double cx = anchor.center_x() + d.dx * anchor.width();
    const double cy = anchor.center_y() + d.dy * anchor.height();
    const double w = anchor.width() * std::exp(d.dw);
    const double h = anchor.height() * std::exp(d.dh);
    return BBox::from_center(cx, cy, w, h);
}

inline DistanceTarget encode_point_distances(const Point& p, const BBox& gt) {
    if (!contains(gt, p))
        throw std::invalid_argument("encode_point_distances: point must lie inside the box");
    return {p.x - gt.x1, p.y - gt.y1, gt.x2 - p.x, gt.y2 - p.y};
}

inline BBox decode_point_distances(const Point& p, const DistanceTarget& d) {
    return {p.x - d.l, p.y - d.t, p.x + d.r, p.y + d.b};
}

}  // namespace assignlab
