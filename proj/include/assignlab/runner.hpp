/**
 * @file runner.hpp
 * @brief Corpus-level execution: a worker pool over images feeding
 *        order-independent per-image slots, plus the sweep and comparison
 *        drivers built on it.
 *
 * Workers pull image indices from an atomic counter and write only into
 * their image's pre-sized slot; every reduction afterwards walks slots in
 * image order. Output bytes therefore never depend on the worker count.
 */

#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "assignlab/assign.hpp"
#include "assignlab/ingest.hpp"
#include "assignlab/pyramid.hpp"
#include "assignlab/report.hpp"

namespace assignlab {

/// Runs fn(i) for i in [0, n) on `workers` threads. The first exception
/// thrown by any call is rethrown here after all threads stop.
template <typename Fn>
inline void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    if (workers == 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        while (!failed.load(std::memory_order_relaxed)) {
            const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true, std::memory_order_relaxed);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

inline void validate_strategy(const StrategyConfig& cfg, std::size_t level_count) {
    switch (cfg.kind) {
        case Strategy::Atss:
            if (cfg.atss.top_k < 1) throw std::invalid_argument("atss: top_k must be >= 1");
            break;
        case Strategy::Iou:
            if (!(cfg.iou.theta_n >= 0.0 && cfg.iou.theta_n <= cfg.iou.theta_p &&
                  cfg.iou.theta_p <= 1.0))
                throw std::invalid_argument("iou assign: need 0 <= theta_n <= theta_p <= 1");
            break;
        case Strategy::SpatialScale:
            cfg.ranges.validate(level_count);
            break;
        case Strategy::CenterSampling:
            if (cfg.atss.top_k < 1)
                throw std::invalid_argument("center sampling: top_k must be >= 1");
            cfg.ranges.validate(level_count);
            break;
    }
}

struct RunResult {
    AssignmentReport report;
    nlohmann::json assignments;  // null unless requested
};

/// One strategy over the whole corpus. Per-image results are summarized and
/// discarded on the fly; with `want_assignments` the per-image label dump
/// is kept as well.
inline RunResult run_strategy(const Dataset& ds, const PyramidConfig& pyramid,
                              const StrategyConfig& strategy, int workers,
                              bool want_assignments = false) {
    pyramid.validate();
    validate_strategy(strategy, pyramid.levels.size());
    const std::size_t n = ds.images.size();
    std::vector<ImageSummary> summaries(n);
    std::vector<nlohmann::json> records(want_assignments ? n : 0);
    parallel_for(n, workers, [&](std::size_t i) {
        const DatasetImage& img = ds.images[i];
        const AnchorSet anchors = generate_anchors(img.width, img.height, pyramid);
        const AssignmentResult res = run_assignment(anchors, img.gts, strategy);
        summaries[i] = summarize_image(res);
        if (want_assignments) records[i] = assignment_record(img, res);
    });
    RunResult out;
    out.report = reduce_summaries(ds, summaries, strategy_name(strategy.kind));
    out.report.notes.push_back(std::string(kUnclippedAnchorsNote));
    if (want_assignments) {
        out.assignments["strategy"] = strategy_name(strategy.kind);
        out.assignments["images"] = nlohmann::json::array();
        for (auto& rec : records) out.assignments["images"].push_back(std::move(rec));
    }
    return out;
}

inline const std::vector<std::string>& sweep_parameters() {
    static const std::vector<std::string> names{"k", "anchor_scale_multiplier", "aspect_ratio"};
    return names;
}

/// One full run per value of the swept parameter; dataset, seed, and every
/// other knob stay fixed.
inline SweepTable run_sweep(const Dataset& ds, const PyramidConfig& pyramid,
                            const StrategyConfig& base, const std::string& parameter,
                            const std::vector<double>& values, int workers) {
    if (values.empty()) throw std::invalid_argument("sweep: need at least one value");
    SweepTable table;
    table.parameter = parameter;
    for (double v : values) {
        PyramidConfig pyr = pyramid;
        StrategyConfig cfg = base;
        if (parameter == "k") {
            const int k = static_cast<int>(v);
            if (k < 1 || static_cast<double>(k) != v)
                throw std::invalid_argument("sweep: k values must be positive integers");
            cfg.atss.top_k = k;
        } else if (parameter == "anchor_scale_multiplier") {
            if (!(v > 0.0)) throw std::invalid_argument("sweep: scale multipliers must be > 0");
            for (auto& lvl : pyr.levels) lvl.scale_multiplier = v;
        } else if (parameter == "aspect_ratio") {
            if (!(v > 0.0)) throw std::invalid_argument("sweep: aspect ratios must be > 0");
            for (auto& lvl : pyr.levels) lvl.aspect_ratios = {v};
        } else {
            throw std::invalid_argument("sweep: unknown parameter '" + parameter +
                                        "' (expected k, anchor_scale_multiplier, aspect_ratio)");
        }
        SweepRow row;
        row.value = v;
        row.report = run_strategy(ds, pyr, cfg, workers).report;
        table.rows.push_back(std::move(row));
    }
    table.notes.push_back(std::string(kProxyThresholdNote));
    table.notes.push_back(std::string(kUnclippedAnchorsNote));
    return table;
}

/// All strategies on identical anchors, image by image, so positive-set
/// overlaps can be counted without keeping any full result set around.
inline ComparisonRecord compare_strategies(const Dataset& ds, const PyramidConfig& pyramid,
                                           const std::vector<StrategyConfig>& strategies,
                                           int workers) {
    pyramid.validate();
    for (const auto& s : strategies) validate_strategy(s, pyramid.levels.size());
    if (strategies.size() < 2)
        throw std::invalid_argument("comparison: need at least two strategies");

    struct PairCounts {
        std::uint64_t inter = 0, uni = 0, delta = 0;
        std::vector<std::uint64_t> lvl_inter, lvl_uni;
    };
    const std::size_t n = ds.images.size();
    const std::size_t s_count = strategies.size();
    std::vector<std::pair<std::size_t, std::size_t>> pair_idx;
    for (std::size_t a = 0; a < s_count; ++a) {
        for (std::size_t b = a + 1; b < s_count; ++b) pair_idx.emplace_back(a, b);
    }

    std::vector<std::vector<ImageSummary>> summaries(s_count,
                                                     std::vector<ImageSummary>(n));
    std::vector<std::vector<PairCounts>> pair_slots(n);

    parallel_for(n, workers, [&](std::size_t i) {
        const DatasetImage& img = ds.images[i];
        const AnchorSet anchors = generate_anchors(img.width, img.height, pyramid);
        std::vector<AssignmentResult> results;
        results.reserve(s_count);
        for (const auto& cfg : strategies) results.push_back(run_assignment(anchors, img.gts, cfg));
        for (std::size_t s = 0; s < s_count; ++s) summaries[s][i] = summarize_image(results[s]);

        auto& slots = pair_slots[i];
        slots.resize(pair_idx.size());
        const auto& offsets = results[0].level_offsets;
        const std::size_t levels = offsets.size() - 1;
        for (std::size_t p = 0; p < pair_idx.size(); ++p) {
            const auto& A = results[pair_idx[p].first];
            const auto& B = results[pair_idx[p].second];
            PairCounts& pc = slots[p];
            pc.lvl_inter.assign(levels, 0);
            pc.lvl_uni.assign(levels, 0);
            for (std::size_t l = 0; l < levels; ++l) {
                for (std::size_t a = offsets[l]; a < offsets[l + 1]; ++a) {
                    const bool pa = A.labels[a].kind == LabelKind::Positive;
                    const bool pb = B.labels[a].kind == LabelKind::Positive;
                    if (pa && pb) ++pc.lvl_inter[l];
                    if (pa || pb) ++pc.lvl_uni[l];
                }
            }
            for (std::size_t g = 0; g < A.per_gt.size(); ++g) {
                const auto pa = static_cast<std::int64_t>(A.per_gt[g].positives);
                const auto pb = static_cast<std::int64_t>(B.per_gt[g].positives);
                pc.delta += static_cast<std::uint64_t>(pa > pb ? pa - pb : pb - pa);
            }
        }
    });

    ComparisonRecord rec;
    for (std::size_t s = 0; s < s_count; ++s) {
        rec.reports.push_back(
            reduce_summaries(ds, summaries[s], strategy_name(strategies[s].kind)));
        rec.reports.back().notes.push_back(std::string(kUnclippedAnchorsNote));
    }
    const std::size_t total_gts = ds.total_gts();
    for (std::size_t p = 0; p < pair_idx.size(); ++p) {
        PairAgreement pa;
        pa.a = strategy_name(strategies[pair_idx[p].first].kind);
        pa.b = strategy_name(strategies[pair_idx[p].second].kind);
        std::vector<std::uint64_t> lvl_inter, lvl_uni;
        std::uint64_t delta = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const PairCounts& pc = pair_slots[i][p];
            if (pc.lvl_inter.size() > lvl_inter.size()) {
                lvl_inter.resize(pc.lvl_inter.size(), 0);
                lvl_uni.resize(pc.lvl_uni.size(), 0);
            }
            for (std::size_t l = 0; l < pc.lvl_inter.size(); ++l) {
                lvl_inter[l] += pc.lvl_inter[l];
                lvl_uni[l] += pc.lvl_uni[l];
            }
            delta += pc.delta;
        }
        for (std::size_t l = 0; l < lvl_inter.size(); ++l) {
            pa.intersection += lvl_inter[l];
            pa.set_union += lvl_uni[l];
            pa.level_jaccard.push_back(
                lvl_uni[l] == 0 ? 1.0
                                : static_cast<double>(lvl_inter[l]) /
                                      static_cast<double>(lvl_uni[l]));
        }
        pa.jaccard = pa.set_union == 0 ? 1.0
                                       : static_cast<double>(pa.intersection) /
                                             static_cast<double>(pa.set_union);
        pa.mean_abs_count_delta =
            total_gts == 0 ? 0.0 : static_cast<double>(delta) / static_cast<double>(total_gts);
        rec.pairs.push_back(std::move(pa));
    }
    return rec;
}

}  // namespace assignlab
