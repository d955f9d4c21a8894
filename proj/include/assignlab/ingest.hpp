/**
 * @file ingest.hpp
 * @brief COCO-format annotation loading and the shorter-side-800 /
 *        longer-side-1333 resize policy applied to ground-truth boxes.
 *
 * Only the annotation subset needed for assignment is consumed:
 * images[{id,width,height}], annotations[{image_id,bbox,category_id,
 * iscrowd}], categories. Image pixels are never touched.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"

#include "assignlab/geometry.hpp"

namespace assignlab {

/// Uniform-scale resize: shorter side driven to `shorter_target` unless the
/// longer side would exceed `longer_max`.
struct ResizePolicy {
    int shorter_target = 800;
    int longer_max = 1333;

    void validate() const {
        if (!(shorter_target > 0 && shorter_target <= longer_max))
            throw std::invalid_argument("resize policy: need 0 < shorter target <= longer max");
    }

    double scale_for(int w, int h) const {
        const int shorter = w < h ? w : h;
        const int longer = w < h ? h : w;
        const double s1 = static_cast<double>(shorter_target) / shorter;
        const double s2 = static_cast<double>(longer_max) / longer;
        return s1 < s2 ? s1 : s2;
    }
};

/// One annotated image. Boxes are in the coordinate frame of (width,
/// height), which equals the original frame until a resize is applied.
struct DatasetImage {
    std::int64_t id = 0;
    int original_width = 0, original_height = 0;
    int width = 0, height = 0;
    std::vector<GroundTruth> gts;
};

struct LoadStats {
    std::size_t raw_annotations = 0;
    std::size_t dropped_crowd = 0;
    std::size_t dropped_degenerate = 0;
    std::size_t dropped_empty_after_clip = 0;  // filled by resize
    std::size_t category_count = 0;
};

struct Dataset {
    std::vector<DatasetImage> images;
    LoadStats stats;

    std::size_t total_gts() const {
        std::size_t n = 0;
        for (const auto& img : images) n += img.gts.size();
        return n;
    }
};

/// Parses a COCO instance-annotation file. Crowd annotations and degenerate
/// boxes (side <= 1e-6) are dropped and counted; surviving boxes get
/// per-image ordinal ids in file order. Boxes stay in original coordinates.
/// Throws std::runtime_error on missing files, malformed JSON, or an
/// annotation that references an unknown image id.
inline Dataset load_coco(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open annotation file");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": malformed JSON: " + e.what());
    }

    Dataset ds;
    std::unordered_map<std::int64_t, std::size_t> by_id;
    try {
        for (const auto& im : j.at("images")) {
            DatasetImage img;
            img.id = im.at("id").get<std::int64_t>();
            img.original_width = im.at("width").get<int>();
            img.original_height = im.at("height").get<int>();
            if (img.original_width < 1 || img.original_height < 1)
                throw std::runtime_error(path + ": image " + std::to_string(img.id) +
                                         " has non-positive dimensions");
            img.width = img.original_width;
            img.height = img.original_height;
            if (!by_id.emplace(img.id, ds.images.size()).second)
                throw std::runtime_error(path + ": duplicate image id " + std::to_string(img.id));
            ds.images.push_back(std::move(img));
        }
        for (const auto& an : j.at("annotations")) {
            ++ds.stats.raw_annotations;
            const std::int64_t image_id = an.at("image_id").get<std::int64_t>();
            const auto it = by_id.find(image_id);
            if (it == by_id.end())
                throw std::runtime_error(path + ": annotation references unknown image id " +
                                         std::to_string(image_id));
            if (an.value("iscrowd", 0) == 1) {
                ++ds.stats.dropped_crowd;
                continue;
            }
            const auto& bb = an.at("bbox");
            if (!bb.is_array() || bb.size() != 4)
                throw std::runtime_error(path + ": bbox must be [x,y,w,h]");
            const double x = bb[0].get<double>();
            const double y = bb[1].get<double>();
            const double w = bb[2].get<double>();
            const double h = bb[3].get<double>();
            if (w <= 1e-6 || h <= 1e-6) {
                ++ds.stats.dropped_degenerate;
                continue;
            }
            DatasetImage& img = ds.images[it->second];
            GroundTruth gt;
            gt.box = {x, y, x + w, y + h};
            gt.category = an.at("category_id").get<int>();
            gt.id = static_cast<int>(img.gts.size());
            img.gts.push_back(gt);
        }
        ds.stats.category_count = j.at("categories").size();
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": malformed JSON: " + e.what());
    }
    return ds;
}

/// Applies the resize policy to one image: dims scale uniformly (rounded to
/// nearest integer), boxes scale by the same factor and are clipped to the
/// resized image. Boxes left without area by the clip are dropped; the drop
/// count is added to *dropped when given. Surviving ids are re-ordinaled.
inline DatasetImage resize_gt(const DatasetImage& img, const ResizePolicy& policy,
                              std::size_t* dropped = nullptr) {
    policy.validate();
    const double s = policy.scale_for(img.original_width, img.original_height);
    DatasetImage out;
    out.id = img.id;
    out.original_width = img.original_width;
    out.original_height = img.original_height;
    out.width = static_cast<int>(std::lround(img.original_width * s));
    out.height = static_cast<int>(std::lround(img.original_height * s));
    const double w = out.width;
    const double h = out.height;
    for (const GroundTruth& gt : img.gts) {
        GroundTruth r = gt;
        r.box.x1 = std::min(std::max(gt.box.x1 * s, 0.0), w);
        r.box.y1 = std::min(std::max(gt.box.y1 * s, 0.0), h);
        r.box.x2 = std::min(std::max(gt.box.x2 * s, 0.0), w);
        r.box.y2 = std::min(std::max(gt.box.y2 * s, 0.0), h);
        if (!(r.box.width() > 0.0 && r.box.height() > 0.0)) {
            if (dropped) ++*dropped;
            continue;
        }
        r.id = static_cast<int>(out.gts.size());
        out.gts.push_back(r);
    }
    return out;
}

inline void resize_dataset(Dataset& ds, const ResizePolicy& policy) {
    std::size_t dropped = 0;
    for (auto& img : ds.images) img = resize_gt(img, policy, &dropped);
    ds.stats.dropped_empty_after_clip += dropped;
}

}  // namespace assignlab
