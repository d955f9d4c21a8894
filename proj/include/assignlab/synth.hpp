/**
 * @file synth.hpp
 * @brief Seeded synthetic annotation corpus: images already satisfying the
 *        800/1333 resize policy, boxes with log-uniform sizes, written and
 *        read in the same COCO-format subset as real annotations.
 *
 * Randomness comes from mt19937_64 plus an explicit 53-bit-to-double map,
 * so corpora are bit-identical across platforms and standard libraries.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>

#include "json.hpp"

#include "assignlab/ingest.hpp"

namespace assignlab {

struct SynthConfig {
    std::uint64_t seed = 42;
    int images = 100;
    int boxes_per_image = 6;
    double min_size = 16.0;   // sqrt-area, pixels
    double max_size = 512.0;
    int categories = 80;

    void validate() const {
        if (images < 0 || boxes_per_image < 0)
            throw std::invalid_argument("synthetic corpus: counts must be non-negative");
        if (!(min_size > 0.0 && min_size <= max_size))
            throw std::invalid_argument("synthetic corpus: need 0 < min size <= max size");
        if (max_size * std::sqrt(2.0) > 800.0)
            throw std::invalid_argument("synthetic corpus: max size too large to fit an 800px side");
        if (categories < 1) throw std::invalid_argument("synthetic corpus: need >= 1 category");
    }
};

namespace detail {

// (x >> 11) * 2^-53: uniform in [0, 1) with full 53-bit resolution.
inline double u01(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Images have their shorter side exactly 800 and longer side in
/// [800, 1333] with random orientation, so the standard resize policy is
/// the identity on them. Box sizes (sqrt-area) are log-uniform in
/// [min_size, max_size], aspect ratios log-uniform in [1/2, 2], positions
/// uniform with the whole box inside the image.
inline Dataset make_synthetic(const SynthConfig& cfg) {
    cfg.validate();
    std::mt19937_64 eng(cfg.seed);
    Dataset ds;
    ds.stats.category_count = static_cast<std::size_t>(cfg.categories);
    const double log_min = std::log(cfg.min_size);
    const double log_max = std::log(cfg.max_size);
    const double log_ar = std::log(2.0);
    for (int i = 0; i < cfg.images; ++i) {
        DatasetImage img;
        img.id = i + 1;
        const int longer = 800 + static_cast<int>(detail::u01(eng) * 534.0);
        const bool landscape = detail::u01(eng) < 0.5;
        img.width = landscape ? longer : 800;
        img.height = landscape ? 800 : longer;
        img.original_width = img.width;
        img.original_height = img.height;
        for (int b = 0; b < cfg.boxes_per_image; ++b) {
            const double size = std::exp(log_min + detail::u01(eng) * (log_max - log_min));
            const double ar = std::exp(-log_ar + detail::u01(eng) * 2.0 * log_ar);
            const double w = size * std::sqrt(ar);
            const double h = size / std::sqrt(ar);
            const double x1 = detail::u01(eng) * (img.width - w);
            const double y1 = detail::u01(eng) * (img.height - h);
            GroundTruth gt;
            gt.box = {x1, y1, x1 + w, y1 + h};
            gt.category = 1 + static_cast<int>(detail::u01(eng) * cfg.categories);
            if (gt.category > cfg.categories) gt.category = cfg.categories;
            gt.id = b;
            img.gts.push_back(gt);
            ++ds.stats.raw_annotations;
        }
        ds.images.push_back(std::move(img));
    }
    return ds;
}

/// Writes a dataset back out as COCO-format annotation JSON (the same
/// subset of fields load_coco reads), so synthetic corpora flow through
/// the exact ingestion path as real ones.
inline void write_coco(const Dataset& ds, const std::string& path) {
    nlohmann::json j;
    j["images"] = nlohmann::json::array();
    j["annotations"] = nlohmann::json::array();
    j["categories"] = nlohmann::json::array();
    int max_category = 0;
    std::int64_t next_ann = 1;
    for (const auto& img : ds.images) {
        j["images"].push_back({{"id", img.id}, {"width", img.width}, {"height", img.height}});
        for (const auto& gt : img.gts) {
            j["annotations"].push_back({{"id", next_ann++},
                                        {"image_id", img.id},
                                        {"bbox", {gt.box.x1, gt.box.y1, gt.box.width(), gt.box.height()}},
                                        {"category_id", gt.category},
                                        {"iscrowd", 0},
                                        {"area", gt.box.area()}});
            if (gt.category > max_category) max_category = gt.category;
        }
    }
    const int n_cat = std::max(max_category, static_cast<int>(ds.stats.category_count));
    for (int c = 1; c <= n_cat; ++c) {
        j["categories"].push_back({{"id", c}, {"name", "cat-" + std::to_string(c)}});
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << j.dump(2) << '\n';
}

}  // namespace assignlab
