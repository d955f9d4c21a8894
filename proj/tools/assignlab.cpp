// Command-line entry point. Subcommands: assign, sweep, compare, synth,
// nms-demo. Exit codes: 0 success, 1 usage, 2 configuration error,
// 3 data error. Every run with the same flags and seed writes byte-identical
// files, whatever --workers says.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "assignlab/assign.hpp"
#include "assignlab/geometry.hpp"
#include "assignlab/ingest.hpp"
#include "assignlab/pyramid.hpp"
#include "assignlab/report.hpp"
#include "assignlab/runner.hpp"
#include "assignlab/synth.hpp"

namespace fs = std::filesystem;
using namespace assignlab;

namespace {

struct CliOptions {
    std::string dataset;
    std::string synthetic;
    bool synthetic_set = false;
    std::string strategy = "atss";
    int k = 9;
    double theta_p = 0.5;
    double theta_n = 0.4;
    bool force_best_match = true;
    std::vector<std::string> scale_ranges;
    std::vector<int> strides{8, 16, 32, 64, 128};
    double anchor_scale = 8.0;
    std::vector<std::string> aspect_ratios{"1"};
    int scales_per_octave = 1;
    std::string out = "out";
    std::vector<std::string> formats;
    std::uint64_t seed = 42;
    int workers = 1;

    // sweep
    std::string param;
    std::vector<std::string> values;

    // nms-demo
    std::string detections;
    NmsParams nms;
};

double parse_number(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string(what) + ": '" + s + "' is not a number");
    }
}

// "a:b" (width:height) or a plain positive number
double parse_ratio(const std::string& s) {
    const auto colon = s.find(':');
    double v;
    if (colon != std::string::npos) {
        const double a = parse_number(s.substr(0, colon), "aspect ratio");
        const double b = parse_number(s.substr(colon + 1), "aspect ratio");
        if (!(b > 0.0)) throw std::invalid_argument("aspect ratio: denominator must be > 0");
        v = a / b;
    } else {
        v = parse_number(s, "aspect ratio");
    }
    if (!(v > 0.0)) throw std::invalid_argument("aspect ratio: must be > 0");
    return v;
}

double parse_bound(const std::string& s) {
    if (s == "inf" || s == "+inf" || s == "Inf") return std::numeric_limits<double>::infinity();
    return parse_number(s, "scale range bound");
}

SynthConfig parse_synthetic(const std::string& spec, std::uint64_t default_seed) {
    SynthConfig cfg;
    cfg.seed = default_seed;
    std::size_t start = 0;
    while (start <= spec.size()) {
        const std::size_t end = std::min(spec.find(',', start), spec.size());
        const std::string item = spec.substr(start, end - start);
        start = end + 1;
        if (item.empty()) continue;
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("--synthetic: expected key=value, got '" + item + "'");
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(
                parse_number(val, "--synthetic seed"));
        } else if (key == "images") {
            cfg.images = static_cast<int>(parse_number(val, "--synthetic images"));
        } else if (key == "boxes") {
            cfg.boxes_per_image = static_cast<int>(parse_number(val, "--synthetic boxes"));
        } else if (key == "min-size") {
            cfg.min_size = parse_number(val, "--synthetic min-size");
        } else if (key == "max-size") {
            cfg.max_size = parse_number(val, "--synthetic max-size");
        } else if (key == "categories") {
            cfg.categories = static_cast<int>(parse_number(val, "--synthetic categories"));
        } else {
            throw std::invalid_argument("--synthetic: unknown key '" + key +
                                        "' (seed, images, boxes, min-size, max-size, categories)");
        }
    }
    cfg.validate();
    return cfg;
}

PyramidConfig build_pyramid(const CliOptions& o) {
    if (o.strides.empty()) throw std::invalid_argument("--strides: need at least one stride");
    std::vector<double> ratios;
    ratios.reserve(o.aspect_ratios.size());
    for (const auto& r : o.aspect_ratios) ratios.push_back(parse_ratio(r));
    PyramidConfig cfg;
    for (int s : o.strides) {
        LevelSpec lvl;
        lvl.stride = s;
        lvl.scale_multiplier = o.anchor_scale;
        lvl.aspect_ratios = ratios;
        lvl.scales_per_octave = o.scales_per_octave;
        cfg.levels.push_back(std::move(lvl));
    }
    cfg.validate();
    return cfg;
}

ScaleRangeConfig build_ranges(const CliOptions& o, std::size_t levels, bool needed) {
    if (!o.scale_ranges.empty()) {
        ScaleRangeConfig cfg;
        cfg.bounds.clear();
        for (const auto& b : o.scale_ranges) cfg.bounds.push_back(parse_bound(b));
        cfg.validate(levels);
        return cfg;
    }
    if (needed) return ScaleRangeConfig::for_levels(levels);
    return {};
}

StrategyConfig build_strategy(const CliOptions& o, Strategy kind, std::size_t levels) {
    StrategyConfig cfg;
    cfg.kind = kind;
    cfg.atss.top_k = o.k;
    cfg.iou = {o.theta_p, o.theta_n, o.force_best_match};
    const bool needs_ranges = kind == Strategy::SpatialScale || kind == Strategy::CenterSampling;
    cfg.ranges = build_ranges(o, levels, needs_ranges);
    return cfg;
}

Dataset build_dataset(const CliOptions& o) {
    const bool have_file = !o.dataset.empty();
    if (have_file == o.synthetic_set)
        throw std::invalid_argument("exactly one of --dataset and --synthetic is required");
    Dataset ds = have_file ? load_coco(o.dataset)
                           : make_synthetic(parse_synthetic(o.synthetic, o.seed));
    resize_dataset(ds, ResizePolicy{});
    return ds;
}

std::vector<std::string> resolve_formats(const CliOptions& o,
                                         std::vector<std::string> defaults) {
    std::vector<std::string> fmts = o.formats.empty() ? std::move(defaults) : o.formats;
    std::vector<std::string> out;
    for (const auto& f : fmts) {
        if (f != "json" && f != "txt" && f != "csv")
            throw std::invalid_argument("--format: unknown format '" + f +
                                        "' (expected json, txt, csv)");
        if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
    }
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(path.string() + ": cannot open for writing");
    f << content;
    if (!f) throw std::runtime_error(path.string() + ": write failed");
    std::cout << "wrote " << path.string() << '\n';
}

void write_formats(const fs::path& dir, const std::string& stem,
                   const std::vector<std::string>& fmts, const nlohmann::json& j,
                   const std::string& txt, const std::string& csv) {
    fs::create_directories(dir);
    for (const auto& f : fmts) {
        if (f == "json") write_file(dir / (stem + ".json"), j.dump(2) + "\n");
        if (f == "txt") write_file(dir / (stem + ".txt"), txt);
        if (f == "csv") write_file(dir / (stem + ".csv"), csv);
    }
}

int cmd_assign(const CliOptions& o) {
    const Dataset ds = build_dataset(o);
    const PyramidConfig pyr = build_pyramid(o);
    const StrategyConfig cfg = build_strategy(o, parse_strategy(o.strategy), pyr.levels.size());
    const RunResult rr = run_strategy(ds, pyr, cfg, o.workers, /*want_assignments=*/true);
    const auto fmts = resolve_formats(o, {"json", "txt"});
    write_formats(o.out, "report", fmts, report_to_json(rr.report), report_to_text(rr.report),
                  report_to_csv(rr.report));
    write_file(fs::path(o.out) / "assignments.json", rr.assignments.dump(2) + "\n");
    return 0;
}

int cmd_sweep(const CliOptions& o) {
    const Dataset ds = build_dataset(o);
    const PyramidConfig pyr = build_pyramid(o);
    const StrategyConfig cfg = build_strategy(o, parse_strategy(o.strategy), pyr.levels.size());

    std::string param = o.param;
    if (param == "anchor-scale" || param == "scale") param = "anchor_scale_multiplier";
    if (param == "aspect-ratio" || param == "ratio") param = "aspect_ratio";
    std::vector<double> values;
    values.reserve(o.values.size());
    for (const auto& v : o.values) {
        values.push_back(param == "aspect_ratio" ? parse_ratio(v)
                                                 : parse_number(v, "--values"));
    }
    const SweepTable table = run_sweep(ds, pyr, cfg, param, values, o.workers);
    const auto fmts = resolve_formats(o, {"json", "txt", "csv"});
    write_formats(o.out, "sweep", fmts, sweep_to_json(table), sweep_to_text(table),
                  sweep_to_csv(table));
    return 0;
}

int cmd_compare(const CliOptions& o) {
    const Dataset ds = build_dataset(o);
    const PyramidConfig pyr = build_pyramid(o);
    std::vector<StrategyConfig> cfgs;
    for (Strategy kind : {Strategy::Atss, Strategy::Iou, Strategy::SpatialScale,
                          Strategy::CenterSampling}) {
        cfgs.push_back(build_strategy(o, kind, pyr.levels.size()));
    }
    const ComparisonRecord rec = compare_strategies(ds, pyr, cfgs, o.workers);
    const auto fmts = resolve_formats(o, {"json", "txt"});
    write_formats(o.out, "compare", fmts, comparison_to_json(rec), comparison_to_text(rec),
                  comparison_to_csv(rec));
    return 0;
}

int cmd_synth(const CliOptions& o) {
    if (!o.dataset.empty())
        throw std::invalid_argument("synth generates a corpus; --dataset is not applicable");
    const SynthConfig cfg = parse_synthetic(o.synthetic, o.seed);
    const Dataset ds = make_synthetic(cfg);
    fs::create_directories(o.out);
    const fs::path path = fs::path(o.out) / "corpus.json";
    write_coco(ds, path.string());
    std::cout << "wrote " << path.string() << " (" << ds.images.size() << " images, "
              << ds.total_gts() << " boxes)\n";
    return 0;
}

std::vector<Detection> load_detections(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open detections file");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        const nlohmann::json& arr = j.is_array() ? j : j.at("detections");
        std::vector<Detection> dets;
        dets.reserve(arr.size());
        for (const auto& d : arr) {
            const auto& bb = d.at("bbox");
            if (!bb.is_array() || bb.size() != 4)
                throw std::runtime_error(path + ": bbox must be [x1,y1,x2,y2]");
            Detection det;
            det.box = {bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
                       bb[3].get<double>()};
            det.score = d.at("score").get<double>();
            det.category = d.value("category", -1);
            dets.push_back(det);
        }
        return dets;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": malformed detections JSON: " + e.what());
    }
}

int cmd_nms_demo(const CliOptions& o) {
    if (!(o.nms.iou_threshold >= 0.0 && o.nms.iou_threshold <= 1.0))
        throw std::invalid_argument("--iou-threshold: must be in [0, 1]");
    const std::vector<Detection> dets = load_detections(o.detections);
    const std::vector<Detection> kept = nms(dets, o.nms);

    nlohmann::json j;
    j["params"] = {{"iou_threshold", o.nms.iou_threshold},
                   {"score_floor", o.nms.score_floor},
                   {"pre_topk", o.nms.pre_topk},
                   {"post_topk", o.nms.post_topk}};
    j["input_count"] = dets.size();
    j["kept_count"] = kept.size();
    j["kept"] = nlohmann::json::array();
    for (const auto& d : kept) {
        j["kept"].push_back({{"bbox", {d.box.x1, d.box.y1, d.box.x2, d.box.y2}},
                             {"score", d.score},
                             {"category", d.category}});
    }

    std::ostringstream txt;
    txt << "kept " << kept.size() << " of " << dets.size() << " detections\n";
    txt << "score      category   box\n";
    for (const auto& d : kept) {
        char line[160];
        std::snprintf(line, sizeof line, "%-10.4f %-10d [%g, %g, %g, %g]\n", d.score, d.category,
                      d.box.x1, d.box.y1, d.box.x2, d.box.y2);
        txt << line;
    }

    std::ostringstream csv;
    csv << "rank,score,category,x1,y1,x2,y2\n";
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto& d = kept[i];
        char line[200];
        std::snprintf(line, sizeof line, "%zu,%.10g,%d,%.10g,%.10g,%.10g,%.10g\n", i, d.score,
                      d.category, d.box.x1, d.box.y1, d.box.x2, d.box.y2);
        csv << line;
    }

    const auto fmts = resolve_formats(o, {"json", "txt"});
    write_formats(o.out, "nms", fmts, j, txt.str(), csv.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"training-sample assignment strategies over anchor pyramids"};
    app.fallthrough();
    app.set_config("--config", "", "read options from an INI file (flags win)");

    CliOptions o;
    auto* syn = app.add_option("--synthetic", o.synthetic,
                               "synthetic corpus spec: seed=,images=,boxes=,min-size=,max-size=,"
                               "categories= (empty value for defaults)")
                    ->expected(1);
    app.add_option("--dataset", o.dataset, "COCO-format annotation JSON");
    app.add_option("--strategy", o.strategy, "atss|iou|fcos|center-sampling (default atss)");
    app.add_option("--k", o.k, "top-k candidates per level (default 9)");
    app.add_option("--theta-p", o.theta_p, "IoU positive threshold (default 0.5)");
    app.add_option("--theta-n", o.theta_n, "IoU negative threshold (default 0.4)");
    app.add_flag("--force-best-match,!--no-force-best-match", o.force_best_match,
                 "force each object's best anchor positive (default on)");
    app.add_option("--scale-ranges", o.scale_ranges,
                   "per-level bounds, levels+1 comma-separated values, 'inf' allowed")
        ->delimiter(',');
    app.add_option("--strides", o.strides, "pyramid strides (default 8,16,32,64,128)")
        ->delimiter(',');
    app.add_option("--anchor-scale", o.anchor_scale,
                   "anchor side = scale * stride (default 8)");
    app.add_option("--aspect-ratios", o.aspect_ratios,
                   "anchor aspect ratios, e.g. 0.5,1,2 or 1:2,1:1,2:1 (default 1)")
        ->delimiter(',');
    app.add_option("--scales-per-octave", o.scales_per_octave,
                   "anchor scales per octave (default 1)");
    app.add_option("--out", o.out, "output directory (default ./out)");
    app.add_option("--format", o.formats, "output formats: json,txt,csv")->delimiter(',');
    app.add_option("--seed", o.seed, "seed for synthetic data (default 42)");
    app.add_option("--workers", o.workers, "worker threads (default 1)");

    auto* assign_cmd =
        app.add_subcommand("assign", "run one strategy over a corpus and report statistics");
    auto* sweep_cmd = app.add_subcommand("sweep", "re-run one strategy across parameter values");
    sweep_cmd->add_option("--param", o.param,
                          "swept parameter: k | anchor-scale | aspect-ratio")
        ->required();
    sweep_cmd->add_option("--values", o.values, "comma-separated swept values")
        ->delimiter(',')
        ->required();
    auto* compare_cmd =
        app.add_subcommand("compare", "run all four strategies on shared anchors and "
                                      "measure positive-set agreement");
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic annotation corpus");
    auto* nms_cmd = app.add_subcommand("nms-demo", "run the inference post-processing "
                                                   "pipeline on a detections file");
    nms_cmd->add_option("--detections", o.detections, "detections JSON file")->required();
    nms_cmd->add_option("--iou-threshold", o.nms.iou_threshold, "suppression IoU (default 0.6)");
    nms_cmd->add_option("--score-floor", o.nms.score_floor, "minimum score (default 0.05)");
    nms_cmd->add_option("--pre-topk", o.nms.pre_topk, "keep top N before NMS (default 1000)");
    nms_cmd->add_option("--post-topk", o.nms.post_topk, "keep top N after NMS (default 100)");

    app.require_subcommand(1);

    if (argc <= 1) {
        std::cout << app.help();
        return 1;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    o.synthetic_set = syn->count() > 0;

    try {
        if (*assign_cmd) return cmd_assign(o);
        if (*sweep_cmd) return cmd_sweep(o);
        if (*compare_cmd) return cmd_compare(o);
        if (*synth_cmd) return cmd_synth(o);
        if (*nms_cmd) return cmd_nms_demo(o);
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::runtime_error& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
