/**
 * @file pyramid.hpp
 * @brief Multi-level anchor grids (boxes and center points) for a feature
 *        pyramid, with a stable global anchor index.
 *
 * Grid dimensions follow ceil(image_dim / stride). Anchors are centered at
 * ((col + 0.5) * stride, (row + 0.5) * stride) and are not clipped to the
 * image. Global indices are contiguous, level-major, then row-major within
 * a level, templates innermost.
 */

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "assignlab/geometry.hpp"

namespace assignlab {

/// One pyramid level: stride plus the anchor templates tiled per location.
struct LevelSpec {
    int stride = 8;
    double scale_multiplier = 8.0;       // square anchor side = multiplier * stride
    std::vector<double> aspect_ratios{1.0};  // w:h, area-preserving
    int scales_per_octave = 1;           // octave step 2^(1/scales_per_octave)

    int templates_per_location() const {
        return scales_per_octave * static_cast<int>(aspect_ratios.size());
    }
};

struct PyramidConfig {
    std::vector<LevelSpec> levels;

    /// Five-level pyramid with strides 8..128, one square anchor of
    /// `scale * stride` per location.
    static PyramidConfig five_level(double scale = 8.0,
                                    std::vector<double> ratios = {1.0},
                                    int scales_per_octave = 1) {
        PyramidConfig cfg;
        for (int stride : {8, 16, 32, 64, 128}) {
            cfg.levels.push_back({stride, scale, ratios, scales_per_octave});
        }
        return cfg;
    }

    /// Throws std::invalid_argument on non-increasing strides, non-positive
    /// multipliers or ratios, or an empty level list.
    void validate() const {
        if (levels.empty()) throw std::invalid_argument("pyramid: no levels");
        int prev = 0;
        for (const LevelSpec& lv : levels) {
            if (lv.stride <= prev)
                throw std::invalid_argument("pyramid: strides must be strictly increasing");
            prev = lv.stride;
            if (!(lv.scale_multiplier > 0))
                throw std::invalid_argument("pyramid: scale_multiplier must be > 0");
            if (lv.aspect_ratios.empty())
                throw std::invalid_argument("pyramid: aspect_ratios must be non-empty");
            for (double r : lv.aspect_ratios) {
                if (!(r > 0))
                    throw std::invalid_argument("pyramid: aspect ratios must be > 0");
            }
            if (lv.scales_per_octave < 1)
                throw std::invalid_argument("pyramid: scales_per_octave must be >= 1");
        }
    }
};

/**
 * All anchors of one image, flattened level-major. `boxes` and `centers`
 * are parallel arrays; the (level, row, col, template) coordinate of every
 * global index is recoverable through `coord_of` / `index_of`.
 */
struct AnchorSet {
    struct Level {
        int stride = 0;
        int rows = 0, cols = 0;
        int templates = 1;
        std::size_t first = 0;  // global index of the level's first anchor
        std::size_t count = 0;
    };

    struct Coord {
        int level = 0, row = 0, col = 0, tmpl = 0;

        bool operator==(const Coord&) const = default;
    };

    int image_w = 0, image_h = 0;
    std::vector<Level> levels;
    std::vector<BBox> boxes;
    std::vector<Point> centers;

    std::size_t size() const { return boxes.size(); }

    int level_of(std::size_t index) const {
        for (std::size_t l = levels.size(); l-- > 1;) {
            if (index >= levels[l].first) return static_cast<int>(l);
        }
        return 0;
    }

    Coord coord_of(std::size_t index) const {
        const int l = level_of(index);
        const Level& lv = levels[static_cast<std::size_t>(l)];
        std::size_t local = index - lv.first;
        const int tmpl = static_cast<int>(local % static_cast<std::size_t>(lv.templates));
        local /= static_cast<std::size_t>(lv.templates);
        const int col = static_cast<int>(local % static_cast<std::size_t>(lv.cols));
        const int row = static_cast<int>(local / static_cast<std::size_t>(lv.cols));
        return {l, row, col, tmpl};
    }

    std::size_t index_of(const Coord& c) const {
        const Level& lv = levels[static_cast<std::size_t>(c.level)];
        const std::size_t location =
            static_cast<std::size_t>(c.row) * static_cast<std::size_t>(lv.cols) +
            static_cast<std::size_t>(c.col);
        return lv.first + location * static_cast<std::size_t>(lv.templates) +
               static_cast<std::size_t>(c.tmpl);
    }
};

/**
 * Tiles anchors over every pyramid level for an image of the given size.
 *
 * For octave index o and ratio r the template has area (side_o)^2 with
 * side_o = scale_multiplier * stride * 2^(o / scales_per_octave); the box is
 * side_o * sqrt(r) wide and side_o / sqrt(r) tall, so ratio variants at one
 * location share the same area. Template order is octave-major.
 */
inline AnchorSet generate_anchors(int image_w, int image_h, const PyramidConfig& cfg) {
    if (image_w < 1 || image_h < 1)
        throw std::invalid_argument("generate_anchors: image dimensions must be >= 1");
    cfg.validate();

    AnchorSet out;
    out.image_w = image_w;
    out.image_h = image_h;

    for (const LevelSpec& spec : cfg.levels) {
        AnchorSet::Level lv;
        lv.stride = spec.stride;
        lv.rows = (image_h + spec.stride - 1) / spec.stride;
        lv.cols = (image_w + spec.stride - 1) / spec.stride;
        lv.templates = spec.templates_per_location();
        lv.first = out.boxes.size();
        lv.count = static_cast<std::size_t>(lv.rows) * static_cast<std::size_t>(lv.cols) *
                   static_cast<std::size_t>(lv.templates);

        // Template dimensions, octave-major then ratio.
        std::vector<double> tw, th;
        tw.reserve(static_cast<std::size_t>(lv.templates));
        th.reserve(static_cast<std::size_t>(lv.templates));
        for (int o = 0; o < spec.scales_per_octave; ++o) {
            const double side = spec.scale_multiplier * spec.stride *
                                std::pow(2.0, static_cast<double>(o) / spec.scales_per_octave);
            for (double r : spec.aspect_ratios) {
                const double root = std::sqrt(r);
                tw.push_back(side * root);
                th.push_back(side / root);
            }
        }

        out.boxes.reserve(out.boxes.size() + lv.count);
        out.centers.reserve(out.centers.size() + lv.count);
        for (int row = 0; row < lv.rows; ++row) {
            const double cy = (row + 0.5) * spec.stride;
            for (int col = 0; col < lv.cols; ++col) {
                const double cx = (col + 0.5) * spec.stride;
                for (int t = 0; t < lv.templates; ++t) {
                    out.boxes.push_back(BBox::from_center(
                        cx, cy, tw[static_cast<std::size_t>(t)], th[static_cast<std::size_t>(t)]));
                    out.centers.push_back({cx, cy});
                }
            }
        }
        out.levels.push_back(lv);
    }
    return out;
}

}  // namespace assignlab
