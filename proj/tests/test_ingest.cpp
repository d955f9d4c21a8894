#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include <catch2/catch_amalgamated.hpp>

#include "assignlab/ingest.hpp"
#include "assignlab/synth.hpp"

using namespace assignlab;

namespace {

std::string fixture(const char* name) {
    return std::string(FIXTURES_DIR) + "/" + name;
}

std::string write_tmp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / ("assignlab_" + name);
    std::ofstream out(path);
    out << content;
    return path.string();
}

}  // namespace

TEST_CASE("annotation loading: drops, counts, corner form") {
    const Dataset ds = load_coco(fixture("coco_fixture.json"));

    REQUIRE(ds.images.size() == 3);
    REQUIRE(ds.stats.raw_annotations == 7);
    REQUIRE(ds.stats.dropped_crowd == 1);
    REQUIRE(ds.stats.dropped_degenerate == 1);
    REQUIRE(ds.stats.dropped_empty_after_clip == 0);
    REQUIRE(ds.stats.category_count == 4);
    REQUIRE(ds.total_gts() == 5);

    const DatasetImage& im1 = ds.images[0];
    REQUIRE(im1.id == 1);
    REQUIRE(im1.width == 640);
    REQUIRE(im1.height == 480);
    REQUIRE(im1.original_width == 640);
    REQUIRE(im1.gts.size() == 2);
    REQUIRE(im1.gts[0].box == BBox{100, 100, 150, 180});
    REQUIRE(im1.gts[0].category == 1);
    REQUIRE(im1.gts[0].id == 0);
    REQUIRE(im1.gts[1].box == BBox{0, 0, 640, 480});
    REQUIRE(im1.gts[1].id == 1);

    REQUIRE(ds.images[1].gts.size() == 1);
    REQUIRE(ds.images[1].gts[0].box == BBox{200, 300, 300, 500});

    const DatasetImage& im3 = ds.images[2];
    REQUIRE(im3.gts.size() == 2);
    REQUIRE(im3.gts[0].box == BBox{900, 700, 1200, 900});  // extends past the image
    REQUIRE(im3.gts[0].category == 4);
    REQUIRE(im3.gts[1].box == BBox{50, 60, 250, 160});
}

TEST_CASE("annotation loading: images without annotations stay, ids stay sparse") {
    const char* sparse = R"({
      "images": [{"id": 7, "width": 320, "height": 240},
                 {"id": 2, "width": 100, "height": 100}],
      "annotations": [{"id": 1, "image_id": 2, "bbox": [5, 5, 20, 20], "category_id": 1}],
      "categories": [{"id": 1, "name": "alpha"}]
    })";
    Dataset ds = load_coco(write_tmp("sparse.json", sparse));
    REQUIRE(ds.images.size() == 2);
    REQUIRE(ds.images[0].id == 7);
    REQUIRE(ds.images[0].gts.empty());
    REQUIRE(ds.images[1].gts.size() == 1);

    resize_dataset(ds, {});
    REQUIRE(ds.images[0].width == 1067);  // 320x240 scales by 10/3
    REQUIRE(ds.images[0].height == 800);
    REQUIRE(ds.images[0].gts.empty());
}

TEST_CASE("resize policy: scale selection") {
    const ResizePolicy p;
    REQUIRE(p.scale_for(640, 480) == 800.0 / 480.0);    // shorter side binds
    REQUIRE(p.scale_for(800, 1000) == 1.0);
    REQUIRE(p.scale_for(1024, 768) == 800.0 / 768.0);
    REQUIRE(p.scale_for(500, 2000) == 1333.0 / 2000.0);  // longer side binds

    REQUIRE_THROWS_AS((ResizePolicy{0, 1333}.validate()), std::invalid_argument);
    REQUIRE_THROWS_AS((ResizePolicy{800, 700}.validate()), std::invalid_argument);
}

TEST_CASE("resize: dimensions, box scaling, clipping") {
    Dataset ds = load_coco(fixture("coco_fixture.json"));
    resize_dataset(ds, {});

    const DatasetImage& im1 = ds.images[0];
    REQUIRE(im1.width == 1067);
    REQUIRE(im1.height == 800);
    REQUIRE(im1.original_width == 640);
    REQUIRE(im1.original_height == 480);
    const double s1 = 800.0 / 480.0;
    REQUIRE(im1.gts[0].box == BBox{100 * s1, 100 * s1, 150 * s1, 180 * s1});
    // The full-frame box ends exactly on the resized bottom edge.
    REQUIRE(im1.gts[1].box.x1 == 0.0);
    REQUIRE(im1.gts[1].box.x2 == 640 * s1);
    REQUIRE(im1.gts[1].box.y2 == 800.0);

    // Scale 1 is a bitwise no-op.
    REQUIRE(ds.images[1].width == 800);
    REQUIRE(ds.images[1].height == 1000);
    REQUIRE(ds.images[1].gts[0].box == BBox{200, 300, 300, 500});

    // The box hanging past the right/bottom edges clips to the resized frame.
    const DatasetImage& im3 = ds.images[2];
    REQUIRE(im3.width == 1067);
    REQUIRE(im3.height == 800);
    const double s3 = 800.0 / 768.0;
    REQUIRE(im3.gts[0].box == BBox{900 * s3, 700 * s3, 1067.0, 800.0});
    REQUIRE(im3.gts[0].category == 4);
    REQUIRE(im3.gts[1].box == BBox{50 * s3, 60 * s3, 250 * s3, 160 * s3});

    REQUIRE(ds.stats.dropped_empty_after_clip == 0);
    REQUIRE(ds.stats.raw_annotations ==
            ds.total_gts() + ds.stats.dropped_crowd + ds.stats.dropped_degenerate +
                ds.stats.dropped_empty_after_clip);

    SECTION("resized dims satisfy the policy with one side binding") {
        for (const auto& img : ds.images) {
            const int shorter = std::min(img.width, img.height);
            const int longer = std::max(img.width, img.height);
            REQUIRE(shorter <= 800);
            REQUIRE(longer <= 1333);
            REQUIRE((shorter == 800 || longer == 1333));
        }
    }
}

TEST_CASE("resize: boxes with no interior left after clipping are dropped") {
    DatasetImage img;
    img.id = 1;
    img.original_width = 2000;
    img.original_height = 500;  // scale 1333/2000, resized 1333x333 (333.25 rounds down)
    img.width = 2000;
    img.height = 500;
    img.gts.push_back({{100, 100, 200, 180}, 1, 0});
    img.gts.push_back({{1990, 499.8, 2005, 510}, 2, 1});  // lands past the rounded edge

    std::size_t dropped = 0;
    const DatasetImage out = resize_gt(img, {}, &dropped);
    REQUIRE(out.width == 1333);
    REQUIRE(out.height == 333);
    REQUIRE(dropped == 1);
    REQUIRE(out.gts.size() == 1);
    REQUIRE(out.gts[0].category == 1);
    REQUIRE(out.gts[0].id == 0);

    SECTION("a box straddling the edge survives with clipped extent") {
        img.gts[1].box = {1900, 400, 2005, 505};
        dropped = 0;
        const DatasetImage out2 = resize_gt(img, {}, &dropped);
        REQUIRE(dropped == 0);
        REQUIRE(out2.gts.size() == 2);
        REQUIRE(out2.gts[1].box.x2 == 1333.0);
        REQUIRE(out2.gts[1].box.y2 == 333.0);
        REQUIRE(out2.gts[1].id == 1);
    }
}

TEST_CASE("loading errors are data errors") {
    REQUIRE_THROWS_AS(load_coco("/nonexistent/annotations.json"), std::runtime_error);
    REQUIRE_THROWS_AS(load_coco(write_tmp("bad.json", "{[")), std::runtime_error);
    REQUIRE_THROWS_AS(load_coco(write_tmp("empty.json", "{}")), std::runtime_error);

    const char* unknown_image = R"({
      "images": [{"id": 1, "width": 100, "height": 100}],
      "annotations": [{"id": 1, "image_id": 2, "bbox": [0, 0, 10, 10], "category_id": 1}],
      "categories": []
    })";
    REQUIRE_THROWS_WITH(load_coco(write_tmp("unknown.json", unknown_image)),
                        Catch::Matchers::ContainsSubstring("unknown image id"));

    const char* bad_bbox = R"({
      "images": [{"id": 1, "width": 100, "height": 100}],
      "annotations": [{"id": 1, "image_id": 1, "bbox": [0, 0, 10], "category_id": 1}],
      "categories": []
    })";
    REQUIRE_THROWS_WITH(load_coco(write_tmp("badbbox.json", bad_bbox)),
                        Catch::Matchers::ContainsSubstring("bbox"));

    const char* dup_image = R"({
      "images": [{"id": 3, "width": 100, "height": 100},
                 {"id": 3, "width": 50, "height": 50}],
      "annotations": [],
      "categories": []
    })";
    REQUIRE_THROWS_WITH(load_coco(write_tmp("dup.json", dup_image)),
                        Catch::Matchers::ContainsSubstring("duplicate image id"));

    const char* zero_dim = R"({
      "images": [{"id": 1, "width": 0, "height": 100}],
      "annotations": [],
      "categories": []
    })";
    REQUIRE_THROWS_WITH(load_coco(write_tmp("zerodim.json", zero_dim)),
                        Catch::Matchers::ContainsSubstring("non-positive"));
}

TEST_CASE("synthetic corpus: deterministic and policy-conformant") {
    SynthConfig cfg;
    cfg.seed = 7;
    cfg.images = 40;
    cfg.boxes_per_image = 5;

    const Dataset a = make_synthetic(cfg);
    const Dataset b = make_synthetic(cfg);

    REQUIRE(a.images.size() == 40);
    REQUIRE(a.stats.raw_annotations == 200);
    REQUIRE(a.stats.category_count == 80);
    REQUIRE(a.total_gts() == 200);

    for (std::size_t i = 0; i < a.images.size(); ++i) {
        const DatasetImage& img = a.images[i];
        REQUIRE(img.width == b.images[i].width);
        REQUIRE(img.height == b.images[i].height);

        REQUIRE(std::min(img.width, img.height) == 800);
        REQUIRE(std::max(img.width, img.height) >= 800);
        REQUIRE(std::max(img.width, img.height) <= 1333);

        REQUIRE(img.gts.size() == 5);
        for (std::size_t g = 0; g < img.gts.size(); ++g) {
            const GroundTruth& gt = img.gts[g];
            REQUIRE(gt.box == b.images[i].gts[g].box);

            REQUIRE(gt.box.x1 >= 0.0);
            REQUIRE(gt.box.y1 >= 0.0);
            REQUIRE(gt.box.x2 <= img.width);
            REQUIRE(gt.box.y2 <= img.height);

            const double size = std::sqrt(gt.box.area());
            REQUIRE(size >= 16.0 * (1 - 1e-9));
            REQUIRE(size <= 512.0 * (1 + 1e-9));
            const double ar = gt.box.width() / gt.box.height();
            REQUIRE(ar >= 0.5 * (1 - 1e-9));
            REQUIRE(ar <= 2.0 * (1 + 1e-9));

            REQUIRE(gt.category >= 1);
            REQUIRE(gt.category <= 80);
        }
    }

    SECTION("the standard resize is a bitwise no-op on synthetic images") {
        Dataset resized = make_synthetic(cfg);
        resize_dataset(resized, {});
        REQUIRE(resized.stats.dropped_empty_after_clip == 0);
        for (std::size_t i = 0; i < a.images.size(); ++i) {
            REQUIRE(resized.images[i].width == a.images[i].width);
            REQUIRE(resized.images[i].height == a.images[i].height);
            for (std::size_t g = 0; g < a.images[i].gts.size(); ++g)
                REQUIRE(resized.images[i].gts[g].box == a.images[i].gts[g].box);
        }
    }

    SECTION("different seeds give different corpora") {
        SynthConfig other = cfg;
        other.seed = 8;
        const Dataset c = make_synthetic(other);
        bool any_difference = false;
        for (std::size_t i = 0; i < a.images.size() && !any_difference; ++i) {
            any_difference = c.images[i].width != a.images[i].width ||
                             !(c.images[i].gts[0].box == a.images[i].gts[0].box);
        }
        REQUIRE(any_difference);
    }
}

TEST_CASE("synthetic corpus: write and reload through the standard loader") {
    SynthConfig cfg;
    cfg.seed = 12;
    cfg.images = 15;
    cfg.boxes_per_image = 4;

    const Dataset ds = make_synthetic(cfg);
    const std::string path = write_tmp("roundtrip.json", "");
    write_coco(ds, path);
    const Dataset back = load_coco(path);

    REQUIRE(back.images.size() == ds.images.size());
    REQUIRE(back.stats.raw_annotations == 60);
    REQUIRE(back.stats.dropped_crowd == 0);
    REQUIRE(back.stats.category_count == 80);

    for (std::size_t i = 0; i < ds.images.size(); ++i) {
        REQUIRE(back.images[i].id == ds.images[i].id);
        REQUIRE(back.images[i].width == ds.images[i].width);
        REQUIRE(back.images[i].height == ds.images[i].height);
        REQUIRE(back.images[i].gts.size() == ds.images[i].gts.size());
        for (std::size_t g = 0; g < ds.images[i].gts.size(); ++g) {
            const BBox& orig = ds.images[i].gts[g].box;
            const BBox& rt = back.images[i].gts[g].box;
            // x1/y1 survive unchanged; x2/y2 go through x1 + (x2 - x1).
            REQUIRE(rt.x1 == orig.x1);
            REQUIRE(rt.y1 == orig.y1);
            REQUIRE_THAT(rt.x2, Catch::Matchers::WithinAbs(orig.x2, 1e-9));
            REQUIRE_THAT(rt.y2, Catch::Matchers::WithinAbs(orig.y2, 1e-9));
            REQUIRE(back.images[i].gts[g].category == ds.images[i].gts[g].category);
        }
    }
}

TEST_CASE("synthetic corpus: config validation") {
    SynthConfig cfg;
    cfg.images = -1;
    REQUIRE_THROWS_AS(make_synthetic(cfg), std::invalid_argument);
    cfg = {};
    cfg.min_size = 0.0;
    REQUIRE_THROWS_AS(make_synthetic(cfg), std::invalid_argument);
    cfg = {};
    cfg.min_size = 100.0;
    cfg.max_size = 50.0;
    REQUIRE_THROWS_AS(make_synthetic(cfg), std::invalid_argument);
    cfg = {};
    cfg.max_size = 600.0;  // sqrt(2)*600 cannot fit an 800px side
    REQUIRE_THROWS_AS(make_synthetic(cfg), std::invalid_argument);
    cfg = {};
    cfg.categories = 0;
    REQUIRE_THROWS_AS(make_synthetic(cfg), std::invalid_argument);
}
