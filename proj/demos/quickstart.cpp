// Walkthrough of the library on one hand-made scene: build the anchor
// pyramid, run every assignment strategy, encode a regression target, and
// push a few scored boxes through NMS.

#include <cstdio>

#include "assignlab/assign.hpp"
#include "assignlab/geometry.hpp"
#include "assignlab/pyramid.hpp"
#include "assignlab/targets.hpp"

using namespace assignlab;

int main() {
    const int width = 640, height = 480;
    const PyramidConfig pyramid = PyramidConfig::five_level();
    const AnchorSet anchors = generate_anchors(width, height, pyramid);
    std::printf("image %dx%d: %zu anchors over %zu levels\n", width, height, anchors.size(),
                anchors.levels.size());
    for (std::size_t l = 0; l < anchors.levels.size(); ++l) {
        const auto& lv = anchors.levels[l];
        std::printf("  level %zu: stride %d, %zux%zu grid, %zu anchors\n", l, lv.stride, lv.rows,
                    lv.cols, lv.count);
    }

    const std::vector<GroundTruth> gts{
        {{100, 100, 180, 160}, 1, 0},   // small-ish object
        {{200, 120, 460, 400}, 2, 1},   // large object
        {{140, 130, 240, 210}, 3, 2},   // overlaps both
    };

    const ScaleRangeConfig ranges;  // 0, 64, 128, 256, 512, inf
    struct Row {
        const char* name;
        AssignmentResult res;
    };
    const Row rows[] = {
        {"atss", assign_atss(anchors, gts, {9})},
        {"iou", assign_iou(anchors, gts, {})},
        {"fcos", assign_spatial_scale(anchors, gts, ranges)},
        {"center-sampling", assign_center_sampling(anchors, gts, {9}, ranges)},
    };
    std::printf("\n%-16s %9s %9s %8s   positives per object\n", "strategy", "positive", "negative",
                "ignore");
    for (const Row& row : rows) {
        const LabelCounts c = row.res.counts();
        std::printf("%-16s %9lld %9lld %8lld   ", row.name,
                    static_cast<long long>(c.positives), static_cast<long long>(c.negatives),
                    static_cast<long long>(c.ignores));
        for (const auto& g : row.res.per_gt) std::printf("%u ", g.positives);
        std::printf("\n");
    }

    // ATSS publishes the per-object adaptive threshold it used.
    const AssignmentResult& atss = rows[0].res;
    std::printf("\natss thresholds: ");
    for (const auto& g : atss.per_gt) std::printf("%.3f ", g.iou_threshold);
    std::printf("\n");

    // Both regression codecs express the same box exactly.
    const BBox anchor = anchors.boxes[anchors.size() / 2];
    const BBox target{150, 150, 300, 260};
    const BoxDelta delta = encode_box_offsets(anchor, target);
    const BBox back = decode_box_offsets(anchor, delta);
    std::printf("box offsets (%.3f, %.3f, %.3f, %.3f) decode back to [%g, %g, %g, %g]\n",
                delta.dx, delta.dy, delta.dw, delta.dh, back.x1, back.y1, back.x2, back.y2);

    const std::vector<Detection> dets{
        {{100, 100, 180, 160}, 0.95, 1},
        {{104, 102, 184, 164}, 0.90, 1},  // overlaps the first, same class
        {{101, 99, 181, 161}, 0.92, 2},   // overlaps, different class: kept
        {{400, 300, 460, 380}, 0.40, 1},
    };
    const auto kept = nms(dets);
    std::printf("nms kept %zu of %zu detections:\n", kept.size(), dets.size());
    for (const auto& d : kept) {
        std::printf("  score %.2f class %d [%g, %g, %g, %g]\n", d.score, d.category, d.box.x1,
                    d.box.y1, d.box.x2, d.box.y2);
    }
    return 0;
}
