/**
 * @file report.hpp
 * @brief Aggregation of per-image assignment results into corpus statistics,
 *        positive-set agreement between strategies, and the JSON / text /
 *        CSV renderings of both.
 *
 * Aggregation is a two-step map/reduce: summarize_image produces a compact
 * per-image summary, reduce_summaries folds them in image order. The fold
 * is sequential and index-ordered, so reports are bit-identical no matter
 * how many threads produced the per-image pieces.
 */

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "assignlab/assign.hpp"
#include "assignlab/ingest.hpp"

namespace assignlab {

/// Appears in every report: anchor grids intentionally cover the image with
/// ceil(dim/stride) cells, so border anchors can have centers past the edge.
inline constexpr std::string_view kUnclippedAnchorsNote =
    "anchor boxes are generated unclipped; grid cells cover the image by excess, so border "
    "anchor centers can lie outside it";

/// Appears in sweep output: the stability bands quoted next to sweep tables
/// measure assignment statistics only.
inline constexpr std::string_view kProxyThresholdNote =
    "stability bands are artifact-defined proxies quantifying assignment statistics, not "
    "detection accuracy";

/// Ground truths bucketed by sqrt(area) octaves; bucket i covers
/// (edge[i], edge[i+1]].
inline const std::vector<double>& octave_edges() {
    static const std::vector<double> edges{
        0.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0,
        std::numeric_limits<double>::infinity()};
    return edges;
}

struct OctaveBucket {
    double lo = 0.0, hi = 0.0;
    std::size_t gts = 0;
    std::size_t positives = 0;
    double mean_positives = std::numeric_limits<double>::quiet_NaN();
};

struct LevelRow {
    std::size_t anchors = 0;
    std::size_t positives = 0;
};

struct AssignmentReport {
    std::string strategy;
    std::size_t images = 0, gts = 0, anchors = 0;
    LabelCounts labels;
    double mean_positives = std::numeric_limits<double>::quiet_NaN();
    double median_positives = std::numeric_limits<double>::quiet_NaN();
    double std_positives = std::numeric_limits<double>::quiet_NaN();
    double zero_positive_fraction = 0.0;
    double ignore_fraction = 0.0;
    // means over ground truths of the ATSS candidate-IoU statistics
    double mean_iou_mean = std::numeric_limits<double>::quiet_NaN();
    double mean_iou_std = std::numeric_limits<double>::quiet_NaN();
    double mean_iou_threshold = std::numeric_limits<double>::quiet_NaN();
    std::vector<OctaveBucket> octaves;
    std::vector<LevelRow> levels;
    std::vector<std::string> notes;
};

/// Everything the corpus statistics need from one image's result.
struct ImageSummary {
    std::size_t anchors = 0;
    LabelCounts labels;
    std::vector<std::size_t> level_anchors;
    std::vector<std::size_t> level_positives;
    struct GtRow {
        std::uint32_t positives = 0;
        double iou_mean, iou_std, iou_threshold;
    };
    std::vector<GtRow> gts;
};

inline ImageSummary summarize_image(const AssignmentResult& res) {
    ImageSummary s;
    s.anchors = res.labels.size();
    s.labels = res.counts();
    const std::size_t levels = res.level_offsets.empty() ? 0 : res.level_offsets.size() - 1;
    s.level_anchors.resize(levels, 0);
    s.level_positives.resize(levels, 0);
    for (std::size_t l = 0; l < levels; ++l) {
        s.level_anchors[l] = res.level_offsets[l + 1] - res.level_offsets[l];
        for (std::size_t a = res.level_offsets[l]; a < res.level_offsets[l + 1]; ++a) {
            if (res.labels[a].kind == LabelKind::Positive) ++s.level_positives[l];
        }
    }
    s.gts.reserve(res.per_gt.size());
    for (const GtDiagnostics& d : res.per_gt) {
        s.gts.push_back({d.positives, d.iou_mean, d.iou_std, d.iou_threshold});
    }
    return s;
}

/// Folds per-image summaries, in image order, into the corpus report.
/// `summaries` must be parallel to `ds.images`.
inline AssignmentReport reduce_summaries(const Dataset& ds,
                                         const std::vector<ImageSummary>& summaries,
                                         std::string strategy) {
    if (summaries.size() != ds.images.size())
        throw std::invalid_argument("report: need exactly one summary per image");
    AssignmentReport rep;
    rep.strategy = std::move(strategy);
    rep.images = ds.images.size();

    const auto& edges = octave_edges();
    rep.octaves.resize(edges.size() - 1);
    for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        rep.octaves[b].lo = edges[b];
        rep.octaves[b].hi = edges[b + 1];
    }

    std::vector<std::uint32_t> counts;
    double sum_m = 0.0, sum_v = 0.0, sum_t = 0.0;
    std::size_t n_stats = 0;
    for (std::size_t i = 0; i < summaries.size(); ++i) {
        const ImageSummary& s = summaries[i];
        if (s.gts.size() != ds.images[i].gts.size())
            throw std::invalid_argument("report: summary does not match the image's ground truths");
        rep.anchors += s.anchors;
        rep.labels.positives += s.labels.positives;
        rep.labels.negatives += s.labels.negatives;
        rep.labels.ignores += s.labels.ignores;
        if (s.level_anchors.size() > rep.levels.size()) rep.levels.resize(s.level_anchors.size());
        for (std::size_t l = 0; l < s.level_anchors.size(); ++l) {
            rep.levels[l].anchors += s.level_anchors[l];
            rep.levels[l].positives += s.level_positives[l];
        }
        for (std::size_t g = 0; g < s.gts.size(); ++g) {
            const auto& row = s.gts[g];
            counts.push_back(row.positives);
            const double sa = std::sqrt(ds.images[i].gts[g].box.area());
            const std::size_t b =
                static_cast<std::size_t>(std::lower_bound(edges.begin() + 1, edges.end() - 1, sa) -
                                         (edges.begin() + 1));
            ++rep.octaves[b].gts;
            rep.octaves[b].positives += row.positives;
            if (std::isfinite(row.iou_threshold)) {
                sum_m += row.iou_mean;
                sum_v += row.iou_std;
                sum_t += row.iou_threshold;
                ++n_stats;
            }
        }
    }
    rep.gts = counts.size();

    if (!counts.empty()) {
        std::sort(counts.begin(), counts.end());
        std::uint64_t total = 0, zero = 0;
        for (std::uint32_t c : counts) {
            total += c;
            if (c == 0) ++zero;
        }
        const double n = static_cast<double>(counts.size());
        rep.mean_positives = static_cast<double>(total) / n;
        double ss = 0.0;
        for (std::uint32_t c : counts) {
            const double d = static_cast<double>(c) - rep.mean_positives;
            ss += d * d;
        }
        rep.std_positives = std::sqrt(ss / n);
        const std::size_t mid = counts.size() / 2;
        rep.median_positives = counts.size() % 2 == 1
                                   ? static_cast<double>(counts[mid])
                                   : 0.5 * (static_cast<double>(counts[mid - 1]) +
                                            static_cast<double>(counts[mid]));
        rep.zero_positive_fraction = static_cast<double>(zero) / n;
    }
    if (rep.anchors > 0) {
        rep.ignore_fraction =
            static_cast<double>(rep.labels.ignores) / static_cast<double>(rep.anchors);
    }
    if (n_stats > 0) {
        rep.mean_iou_mean = sum_m / static_cast<double>(n_stats);
        rep.mean_iou_std = sum_v / static_cast<double>(n_stats);
        rep.mean_iou_threshold = sum_t / static_cast<double>(n_stats);
    }
    for (auto& b : rep.octaves) {
        if (b.gts > 0)
            b.mean_positives = static_cast<double>(b.positives) / static_cast<double>(b.gts);
    }
    return rep;
}

/// One-shot aggregation when all results are in memory (tests, small runs).
inline AssignmentReport summarize(const Dataset& ds, const std::vector<AssignmentResult>& results,
                                  std::string strategy) {
    std::vector<ImageSummary> summaries;
    summaries.reserve(results.size());
    for (const auto& r : results) summaries.push_back(summarize_image(r));
    return reduce_summaries(ds, summaries, std::move(strategy));
}

struct SweepRow {
    double value = 0.0;
    AssignmentReport report;
};

struct SweepTable {
    std::string parameter;
    std::vector<SweepRow> rows;
    std::vector<std::string> notes;
};

/// Positive-set agreement between two strategies over a corpus. Counts are
/// summed over images before the ratio, and an empty union counts as
/// perfect agreement.
struct PairAgreement {
    std::string a, b;
    std::size_t intersection = 0;
    std::size_t set_union = 0;
    double jaccard = 1.0;
    std::vector<double> level_jaccard;
    double mean_abs_count_delta = 0.0;  // mean over GTs of |positives_a - positives_b|
};

struct ComparisonRecord {
    std::vector<AssignmentReport> reports;
    std::vector<PairAgreement> pairs;
};

/// Agreement between two per-image result sets that used identical anchors.
inline PairAgreement positive_set_agreement(const std::vector<AssignmentResult>& ra,
                                            const std::vector<AssignmentResult>& rb,
                                            std::string name_a, std::string name_b) {
    if (ra.size() != rb.size())
        throw std::invalid_argument("comparison: result lists cover different image counts");
    PairAgreement out;
    out.a = std::move(name_a);
    out.b = std::move(name_b);
    std::vector<std::size_t> lvl_inter, lvl_union;
    std::uint64_t delta_sum = 0, gt_count = 0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        const auto& A = ra[i];
        const auto& B = rb[i];
        if (A.labels.size() != B.labels.size() || A.level_offsets != B.level_offsets)
            throw std::invalid_argument("comparison: mismatched anchor sets");
        const std::size_t levels = A.level_offsets.size() - 1;
        if (levels > lvl_inter.size()) {
            lvl_inter.resize(levels, 0);
            lvl_union.resize(levels, 0);
        }
        for (std::size_t l = 0; l < levels; ++l) {
            for (std::size_t a = A.level_offsets[l]; a < A.level_offsets[l + 1]; ++a) {
                const bool pa = A.labels[a].kind == LabelKind::Positive;
                const bool pb = B.labels[a].kind == LabelKind::Positive;
                if (pa && pb) {
                    ++out.intersection;
                    ++lvl_inter[l];
                }
                if (pa || pb) {
                    ++out.set_union;
                    ++lvl_union[l];
                }
            }
        }
        if (A.per_gt.size() != B.per_gt.size())
            throw std::invalid_argument("comparison: mismatched ground-truth lists");
        for (std::size_t g = 0; g < A.per_gt.size(); ++g) {
            const auto pa = static_cast<std::int64_t>(A.per_gt[g].positives);
            const auto pb = static_cast<std::int64_t>(B.per_gt[g].positives);
            delta_sum += static_cast<std::uint64_t>(pa > pb ? pa - pb : pb - pa);
            ++gt_count;
        }
    }
    out.jaccard = out.set_union == 0
                      ? 1.0
                      : static_cast<double>(out.intersection) / static_cast<double>(out.set_union);
    out.level_jaccard.resize(lvl_inter.size(), 1.0);
    for (std::size_t l = 0; l < lvl_inter.size(); ++l) {
        if (lvl_union[l] > 0)
            out.level_jaccard[l] =
                static_cast<double>(lvl_inter[l]) / static_cast<double>(lvl_union[l]);
    }
    if (gt_count > 0)
        out.mean_abs_count_delta =
            static_cast<double>(delta_sum) / static_cast<double>(gt_count);
    return out;
}

namespace detail {

inline std::string fmt(double v, const char* spec = "%.6g") {
    if (std::isnan(v)) return "-";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline nlohmann::json num_or_null(double v) {
    if (!std::isfinite(v)) return nullptr;
    return v;
}

}  // namespace detail

inline nlohmann::json report_to_json(const AssignmentReport& r) {
    nlohmann::json j;
    j["strategy"] = r.strategy;
    j["images"] = r.images;
    j["gts"] = r.gts;
    j["anchors"] = r.anchors;
    j["labels"] = {{"positives", r.labels.positives},
                   {"negatives", r.labels.negatives},
                   {"ignores", r.labels.ignores}};
    j["positives_per_gt"] = {{"mean", detail::num_or_null(r.mean_positives)},
                             {"median", detail::num_or_null(r.median_positives)},
                             {"std", detail::num_or_null(r.std_positives)}};
    j["zero_positive_gt_fraction"] = r.zero_positive_fraction;
    j["ignore_fraction"] = r.ignore_fraction;
    j["candidate_iou"] = {{"mean", detail::num_or_null(r.mean_iou_mean)},
                          {"std", detail::num_or_null(r.mean_iou_std)},
                          {"threshold", detail::num_or_null(r.mean_iou_threshold)}};
    j["scale_buckets"] = nlohmann::json::array();
    for (const auto& b : r.octaves) {
        j["scale_buckets"].push_back({{"sqrt_area_min", b.lo},
                                      {"sqrt_area_max", detail::num_or_null(b.hi)},
                                      {"gts", b.gts},
                                      {"positives", b.positives},
                                      {"mean_positives_per_gt",
                                       detail::num_or_null(b.mean_positives)}});
    }
    j["levels"] = nlohmann::json::array();
    for (std::size_t l = 0; l < r.levels.size(); ++l) {
        j["levels"].push_back(
            {{"level", l}, {"anchors", r.levels[l].anchors}, {"positives", r.levels[l].positives}});
    }
    j["notes"] = r.notes;
    return j;
}

inline std::string report_to_text(const AssignmentReport& r) {
    std::ostringstream os;
    os << "strategy: " << r.strategy << '\n';
    os << "images: " << r.images << "  gts: " << r.gts << "  anchors: " << r.anchors << '\n';
    os << "labels: positive " << r.labels.positives << "  negative " << r.labels.negatives
       << "  ignore " << r.labels.ignores << '\n';
    os << "positives per gt: mean " << detail::fmt(r.mean_positives) << "  median "
       << detail::fmt(r.median_positives) << "  std " << detail::fmt(r.std_positives) << '\n';
    os << "zero-positive gt fraction: " << detail::fmt(r.zero_positive_fraction) << '\n';
    os << "ignore fraction: " << detail::fmt(r.ignore_fraction) << '\n';
    os << "candidate iou: mean " << detail::fmt(r.mean_iou_mean) << "  std "
       << detail::fmt(r.mean_iou_std) << "  threshold " << detail::fmt(r.mean_iou_threshold)
       << '\n';
    os << '\n';
    os << "sqrt-area bucket     gts        positives  mean/gt\n";
    for (const auto& b : r.octaves) {
        if (b.gts == 0) continue;
        char range[48];
        std::snprintf(range, sizeof range, "(%g, %s]", b.lo,
                      std::isinf(b.hi) ? "inf" : detail::fmt(b.hi).c_str());
        char line[128];
        std::snprintf(line, sizeof line, "%-20s %-10zu %-10zu %s\n", range, b.gts, b.positives,
                      detail::fmt(b.mean_positives).c_str());
        os << line;
    }
    os << '\n';
    os << "level  anchors      positives\n";
    for (std::size_t l = 0; l < r.levels.size(); ++l) {
        char line[96];
        std::snprintf(line, sizeof line, "%-6zu %-12zu %zu\n", l, r.levels[l].anchors,
                      r.levels[l].positives);
        os << line;
    }
    if (!r.notes.empty()) {
        os << '\n' << "notes:\n";
        for (const auto& n : r.notes) os << "  - " << n << '\n';
    }
    return os.str();
}

inline constexpr std::string_view kReportCsvHeader =
    "strategy,images,gts,anchors,positives,negatives,ignores,mean_positives_per_gt,"
    "median_positives_per_gt,std_positives_per_gt,zero_positive_gt_fraction,ignore_fraction,"
    "mean_candidate_iou_threshold";

inline std::string report_to_csv(const AssignmentReport& r) {
    std::ostringstream os;
    os << kReportCsvHeader << '\n';
    os << r.strategy << ',' << r.images << ',' << r.gts << ',' << r.anchors << ','
       << r.labels.positives << ',' << r.labels.negatives << ',' << r.labels.ignores << ','
       << detail::fmt(r.mean_positives, "%.10g") << ','
       << detail::fmt(r.median_positives, "%.10g") << ','
       << detail::fmt(r.std_positives, "%.10g") << ','
       << detail::fmt(r.zero_positive_fraction, "%.10g") << ','
       << detail::fmt(r.ignore_fraction, "%.10g") << ','
       << detail::fmt(r.mean_iou_threshold, "%.10g") << '\n';
    return os.str();
}

inline constexpr std::string_view kSweepCsvHeader =
    "parameter,value,images,gts,anchors,positives,negatives,ignores,mean_positives_per_gt,"
    "median_positives_per_gt,std_positives_per_gt,zero_positive_gt_fraction,ignore_fraction,"
    "mean_candidate_iou_threshold";

inline nlohmann::json sweep_to_json(const SweepTable& t) {
    nlohmann::json j;
    j["parameter"] = t.parameter;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : t.rows) {
        j["rows"].push_back({{"value", row.value}, {"report", report_to_json(row.report)}});
    }
    j["notes"] = t.notes;
    return j;
}

inline std::string sweep_to_csv(const SweepTable& t) {
    std::ostringstream os;
    os << kSweepCsvHeader << '\n';
    for (const auto& row : t.rows) {
        const AssignmentReport& r = row.report;
        os << t.parameter << ',' << detail::fmt(row.value, "%.10g") << ',' << r.images << ','
           << r.gts << ',' << r.anchors << ',' << r.labels.positives << ',' << r.labels.negatives
           << ',' << r.labels.ignores << ',' << detail::fmt(r.mean_positives, "%.10g") << ','
           << detail::fmt(r.median_positives, "%.10g") << ','
           << detail::fmt(r.std_positives, "%.10g") << ','
           << detail::fmt(r.zero_positive_fraction, "%.10g") << ','
           << detail::fmt(r.ignore_fraction, "%.10g") << ','
           << detail::fmt(r.mean_iou_threshold, "%.10g") << '\n';
    }
    return os.str();
}

inline std::string sweep_to_text(const SweepTable& t) {
    std::ostringstream os;
    os << "sweep over " << t.parameter << '\n';
    os << "value      mean/gt    median     std        zero-pos   ignore\n";
    for (const auto& row : t.rows) {
        const AssignmentReport& r = row.report;
        char line[160];
        std::snprintf(line, sizeof line, "%-10s %-10s %-10s %-10s %-10s %s\n",
                      detail::fmt(row.value, "%.4g").c_str(),
                      detail::fmt(r.mean_positives, "%.4f").c_str(),
                      detail::fmt(r.median_positives, "%.4g").c_str(),
                      detail::fmt(r.std_positives, "%.4f").c_str(),
                      detail::fmt(r.zero_positive_fraction, "%.4f").c_str(),
                      detail::fmt(r.ignore_fraction, "%.4f").c_str());
        os << line;
    }
    if (!t.notes.empty()) {
        os << '\n' << "notes:\n";
        for (const auto& n : t.notes) os << "  - " << n << '\n';
    }
    return os.str();
}

inline nlohmann::json comparison_to_json(const ComparisonRecord& c) {
    nlohmann::json j;
    j["strategies"] = nlohmann::json::array();
    j["reports"] = nlohmann::json::array();
    for (const auto& r : c.reports) {
        j["strategies"].push_back(r.strategy);
        j["reports"].push_back(report_to_json(r));
    }
    j["pairs"] = nlohmann::json::array();
    for (const auto& p : c.pairs) {
        nlohmann::json pj;
        pj["a"] = p.a;
        pj["b"] = p.b;
        pj["positive_intersection"] = p.intersection;
        pj["positive_union"] = p.set_union;
        pj["jaccard"] = p.jaccard;
        pj["level_jaccard"] = p.level_jaccard;
        pj["mean_abs_gt_count_delta"] = p.mean_abs_count_delta;
        j["pairs"].push_back(pj);
    }
    return j;
}

inline std::string comparison_to_text(const ComparisonRecord& c) {
    std::ostringstream os;
    os << "strategy       mean/gt    zero-pos   ignore\n";
    for (const auto& r : c.reports) {
        char line[128];
        std::snprintf(line, sizeof line, "%-14s %-10s %-10s %s\n", r.strategy.c_str(),
                      detail::fmt(r.mean_positives, "%.4f").c_str(),
                      detail::fmt(r.zero_positive_fraction, "%.4f").c_str(),
                      detail::fmt(r.ignore_fraction, "%.4f").c_str());
        os << line;
    }
    os << '\n' << "positive-set agreement (jaccard)\n";
    for (const auto& p : c.pairs) {
        char line[192];
        std::snprintf(line, sizeof line, "%-14s vs %-14s %-10s mean |count delta| %s\n",
                      p.a.c_str(), p.b.c_str(), detail::fmt(p.jaccard, "%.4f").c_str(),
                      detail::fmt(p.mean_abs_count_delta, "%.4f").c_str());
        os << line;
    }
    return os.str();
}

inline std::string comparison_to_csv(const ComparisonRecord& c) {
    std::ostringstream os;
    os << "a,b,jaccard,positive_intersection,positive_union,mean_abs_gt_count_delta\n";
    for (const auto& p : c.pairs) {
        os << p.a << ',' << p.b << ',' << detail::fmt(p.jaccard, "%.10g") << ',' << p.intersection
           << ',' << p.set_union << ',' << detail::fmt(p.mean_abs_count_delta, "%.10g") << '\n';
    }
    return os.str();
}

/// Compact per-image dump of the labels themselves. Labels are run-length
/// encoded over the global anchor order as [length, code] pairs, where code
/// >= 0 is the positive ground-truth index, -1 negative, -2 ignore.
inline nlohmann::json assignment_record(const DatasetImage& img, const AssignmentResult& res) {
    nlohmann::json rec;
    rec["image_id"] = img.id;
    rec["width"] = img.width;
    rec["height"] = img.height;
    rec["anchors"] = res.labels.size();
    rec["level_offsets"] = res.level_offsets;
    nlohmann::json rle = nlohmann::json::array();
    std::size_t i = 0;
    while (i < res.labels.size()) {
        const AnchorLabel& l = res.labels[i];
        std::size_t run = 1;
        while (i + run < res.labels.size() && res.labels[i + run] == l) ++run;
        const int code = l.kind == LabelKind::Positive ? l.gt
                         : l.kind == LabelKind::Negative ? -1
                                                         : -2;
        rle.push_back({run, code});
        i += run;
    }
    rec["labels_rle"] = std::move(rle);
    nlohmann::json gts = nlohmann::json::array();
    for (std::size_t g = 0; g < res.per_gt.size(); ++g) {
        const GtDiagnostics& d = res.per_gt[g];
        const GroundTruth& gt = img.gts[g];
        gts.push_back({{"id", gt.id},
                       {"category", gt.category},
                       {"sqrt_area", std::sqrt(gt.box.area())},
                       {"positives", d.positives},
                       {"iou_mean", detail::num_or_null(d.iou_mean)},
                       {"iou_std", detail::num_or_null(d.iou_std)},
                       {"iou_threshold", detail::num_or_null(d.iou_threshold)}});
    }
    rec["gts"] = std::move(gts);
    return rec;
}

}  // namespace assignlab
