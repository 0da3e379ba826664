// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "dba/csv.hpp"
#include "dba/error.hpp"
#include "dba/metrics.hpp"
#include "dba/strings.hpp"
#include "dba/text.hpp"

namespace dba::eval {

/// Per-item metric values; which fields are present depends on the branch.
/// Every present value lies in [0, 1].
struct ScoreComponents {
    std::optional<double> bleu;
    std::optional<double> rouge1;
    std::optional<double> rouge2;
    std::optional<double> rougeL;
    std::optional<double> accuracy;
    std::optional<double> fluency;
    std::optional<double> relevance;
};

enum class Branch { structured, unstructured };

constexpr std::string_view to_string(Branch b) {
    return b == Branch::structured ? "structured" : "unstructured";
}

inline Branch branch_from_string(std::string_view s) {
    if (s == "structured") return Branch::structured;
    if (s == "unstructured") return Branch::unstructured;
    throw config_error("unknown eval branch: " + std::string(s));
}

/// Weight coefficients for the composite score. The branch acts as the
/// switch: the structured branch combines overlap metrics, the unstructured
/// branch combines judge and semantic metrics with nonlinear terms.
struct CompositeWeights {
    Branch branch = Branch::unstructured;
    std::array<double, 5> c{0.2, 0.2, 0.2, 0.2, 0.2};  // bleu, r1, r2, rL, accuracy^2
    std::array<double, 3> d{0.3, 0.3, 0.4};            // fluency, log(acc+1), exp(relevance)

    void validate() const {
        for (double w : c)
            if (!(w >= 0.0)) throw config_error("structured weights must be non-negative");
        for (double w : d)
            if (!(w >= 0.0)) throw config_error("unstructured weights must be non-negative");
        if (branch == Branch::structured && std::accumulate(c.begin(), c.end(), 0.0) <= 0.0)
            throw config_error("structured weights sum to zero");
        if (branch == Branch::unstructured && std::accumulate(d.begin(), d.end(), 0.0) <= 0.0)
            throw config_error("unstructured weights sum to zero");
    }

    /// Branch value at all-ones components; used to normalize to percent.
    double raw_max() const {
        if (branch == Branch::structured) return std::accumulate(c.begin(), c.end(), 0.0);
        return d[0] + d[1] * std::log(2.0) + d[2] * std::exp(1.0);
    }
};

struct CompositeScore {
    double raw;
    double percent;
};

namespace detail {

inline double require(const std::optional<double>& v, const char* name) {
    if (!v) throw data_error(std::string("missing component: ") + name, "missing_component");
    if (!(*v >= 0.0 && *v <= 1.0))
        throw data_error(std::string("component out of [0,1]: ") + name, "bad_argument");
    return *v;
}

}  // namespace detail

/// Composite quality score.
///   structured:   c1*BLEU + c2*R1 + c3*R2 + c4*RL + c5*accuracy^2
///   unstructured: d1*fluency + d2*ln(accuracy + 1) + d3*e^relevance
/// percent = raw / raw_max * 100 with raw_max the branch value at all-ones
/// components, so percent is 100 exactly when every component is 1.
inline CompositeScore composite_score(const ScoreComponents& s, const CompositeWeights& w) {
    w.validate();
    double raw = 0.0;
    if (w.branch == Branch::structured) {
        const double acc = detail::require(s.accuracy, "accuracy");
        raw = w.c[0] * detail::require(s.bleu, "bleu") +
              w.c[1] * detail::require(s.rouge1, "rouge1") +
              w.c[2] * detail::require(s.rouge2, "rouge2") +
              w.c[3] * detail::require(s.rougeL, "rougeL") + w.c[4] * acc * acc;
    } else {
        raw = w.d[0] * detail::require(s.fluency, "fluency") +
              w.d[1] * std::log(detail::require(s.accuracy, "accuracy") + 1.0) +
              w.d[2] * std::exp(detail::require(s.relevance, "relevance"));
    }
    return {raw, raw / w.raw_max() * 100.0};
}

struct EvalItem {
    std::string candidate;
    std::string reference;
};

struct ItemScore {
    ScoreComponents components;
    std::optional<CompositeScore> composite;
    std::optional<std::string> error;  // set when the item could not be scored
};

struct ScoreReport {
    Branch branch = Branch::unstructured;
    std::vector<ItemScore> items;
    ScoreComponents mean_components;
    double mean_raw = 0.0;
    double mean_percent = 0.0;
    std::size_t scored = 0;
    std::size_t failed = 0;
    std::vector<double> histogram_edges;   // shared edges over [0, 100]
    std::vector<std::size_t> histogram_counts;
};

/// Scorer hooks for the unstructured branch. The judge calls are injected
/// so the metric core stays deterministic and unit-testable.
struct BatchScorers {
    std::function<double(const std::string& candidate)> fluency;
    std::function<double(const std::string& candidate, const std::string& reference)> relevance;
    const metrics::Embedder* embedder = nullptr;
    int bleu_max_n = 4;
};

/// Metric components for a single candidate/reference pair.
inline ScoreComponents score_item(const EvalItem& item, Branch branch, const BatchScorers& s) {
    ScoreComponents c;
    if (branch == Branch::structured) {
        auto cand = text::tokenize(item.candidate);
        auto ref = text::tokenize(item.reference);
        c.bleu = metrics::bleu(cand, ref, s.bleu_max_n);
        c.rouge1 = metrics::rouge(cand, ref, metrics::RougeVariant::r1);
        c.rouge2 = metrics::rouge(cand, ref, metrics::RougeVariant::r2);
        c.rougeL = metrics::rouge(cand, ref, metrics::RougeVariant::rL);
        c.accuracy = strings::normalize_match(item.candidate) ==
                             strings::normalize_match(item.reference)
                         ? 1.0
                         : 0.0;
    } else {
        if (!s.fluency || !s.relevance)
            throw config_error("unstructured scoring requires fluency and relevance scorers");
        if (!s.embedder)
            throw config_error("unstructured scoring requires an embedder");
        c.fluency = std::clamp(s.fluency(item.candidate), 0.0, 1.0);
        c.relevance = std::clamp(s.relevance(item.candidate, item.reference), 0.0, 1.0);
        c.accuracy = metrics::semantic_accuracy(item.candidate, item.reference, *s.embedder);
    }
    return c;
}

namespace detail {

inline std::vector<std::size_t> histogram(std::span<const double> values,
                                          const std::vector<double>& edges) {
    std::vector<std::size_t> counts(edges.size() - 1, 0);
    for (double v : values) {
        double clamped = std::clamp(v, edges.front(), edges.back());
        auto bin = static_cast<std::size_t>(
            std::upper_bound(edges.begin(), edges.end(), clamped) - edges.begin());
        bin = bin == 0 ? 0 : bin - 1;
        if (bin >= counts.size()) bin = counts.size() - 1;
        ++counts[bin];
    }
    return counts;
}

inline std::vector<double> percent_edges(int bins) {
    std::vector<double> edges(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i) edges[static_cast<std::size_t>(i)] = 100.0 * i / bins;
    return edges;
}

}  // namespace detail

/// Score every item, then aggregate. Scorer failures mark the item unscored
/// instead of aborting the batch. `workers` > 1 scores items concurrently.
inline ScoreReport evaluate_batch(std::span<const EvalItem> items, Branch branch,
                                  const CompositeWeights& weights, const BatchScorers& scorers,
                                  int workers = 1, int histogram_bins = 10) {
    if (items.empty()) throw data_error("empty evaluation batch", "bad_argument");
    CompositeWeights w = weights;
    w.branch = branch;
    w.validate();

    ScoreReport report;
    report.branch = branch;
    report.items.resize(items.size());

    auto score_one = [&](std::size_t i) {
        ItemScore out;
        try {
            out.components = score_item(items[i], branch, scorers);
            out.composite = composite_score(out.components, w);
        } catch (const std::exception& e) {
            out = ItemScore{};
            out.error = e.what();
        }
        report.items[i] = std::move(out);
    };

    const int n_workers = std::max(1, workers);
    if (n_workers == 1 || items.size() < 2) {
        for (std::size_t i = 0; i < items.size(); ++i) score_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const std::size_t spawn =
            std::min<std::size_t>(static_cast<std::size_t>(n_workers), items.size());
        for (std::size_t t = 0; t < spawn; ++t)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < report.items.size();
                     i = next.fetch_add(1))
                    score_one(i);
            });
        for (auto& th : pool) th.join();
    }

    auto add_mean = [&](std::optional<double> ScoreComponents::* field) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& item : report.items)
            if (!item.error && item.components.*field) {
                sum += *(item.components.*field);
                ++n;
            }
        if (n) report.mean_components.*field = sum / static_cast<double>(n);
    };
    add_mean(&ScoreComponents::bleu);
    add_mean(&ScoreComponents::rouge1);
    add_mean(&ScoreComponents::rouge2);
    add_mean(&ScoreComponents::rougeL);
    add_mean(&ScoreComponents::accuracy);
    add_mean(&ScoreComponents::fluency);
    add_mean(&ScoreComponents::relevance);

    std::vector<double> percents;
    for (const auto& item : report.items) {
        if (item.error) {
            ++report.failed;
            continue;
        }
        ++report.scored;
        report.mean_raw += item.composite->raw;
        report.mean_percent += item.composite->percent;
        percents.push_back(item.composite->percent);
    }
    if (report.scored) {
        report.mean_raw /= static_cast<double>(report.scored);
        report.mean_percent /= static_cast<double>(report.scored);
    }
    report.histogram_edges = detail::percent_edges(histogram_bins);
    report.histogram_counts = detail::histogram(percents, report.histogram_edges);
    return report;
}

// ---------------------------------------------------------------------------
// Distribution comparison (system vs. human percent scores)
// ---------------------------------------------------------------------------

struct DistributionReport {
    std::vector<double> bin_edges;
    std::vector<std::size_t> system_counts;
    std::vector<std::size_t> human_counts;
    double system_mean = 0.0, system_stddev = 0.0;
    double human_mean = 0.0, human_stddev = 0.0;
    std::size_t system_n = 0, human_n = 0;
    std::optional<double> rank_correlation;  // present when paired and non-degenerate
    bool degenerate = false;                 // constant input made the correlation undefined
};

namespace detail {

inline std::pair<double, double> mean_stddev(std::span<const double> v) {
    double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    return {mean, std::sqrt(var)};
}

/// Ranks with ties averaged (1-based).
inline std::vector<double> ranks(std::span<const double> v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace detail

/// Aligned histograms over [0, 100] plus summary statistics. Spearman rank
/// correlation is computed between paired scores when the lists have equal
/// length; a constant list makes it undefined and is reported as degenerate.
inline DistributionReport distribution_report(std::span<const double> system_scores,
                                              std::span<const double> human_scores, int bins) {
    if (system_scores.empty() || human_scores.empty())
        throw data_error("distribution report requires non-empty score lists", "bad_argument");
    if (bins < 2) throw data_error("bins must be at least 2", "bad_argument");

    DistributionReport rep;
    rep.bin_edges = detail::percent_edges(bins);
    rep.system_counts = detail::histogram(system_scores, rep.bin_edges);
    rep.human_counts = detail::histogram(human_scores, rep.bin_edges);
    std::tie(rep.system_mean, rep.system_stddev) = detail::mean_stddev(system_scores);
    std::tie(rep.human_mean, rep.human_stddev) = detail::mean_stddev(human_scores);
    rep.system_n = system_scores.size();
    rep.human_n = human_scores.size();

    if (system_scores.size() == human_scores.size()) {
        auto ra = detail::ranks(system_scores);
        auto rb = detail::ranks(human_scores);
        double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / static_cast<double>(ra.size());
        double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / static_cast<double>(rb.size());
        double cov = 0.0, va = 0.0, vb = 0.0;
        for (std::size_t i = 0; i < ra.size(); ++i) {
            cov += (ra[i] - ma) * (rb[i] - mb);
            va += (ra[i] - ma) * (ra[i] - ma);
            vb += (rb[i] - mb) * (rb[i] - mb);
        }
        if (va == 0.0 || vb == 0.0)
            rep.degenerate = true;
        else
            rep.rank_correlation = cov / std::sqrt(va * vb);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Report serialization
// ---------------------------------------------------------------------------

inline nlohmann::ordered_json components_json(const ScoreComponents& c) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    auto put = [&](const char* name, const std::optional<double>& v) {
        if (v) j[name] = *v;
    };
    put("bleu", c.bleu);
    put("rouge1", c.rouge1);
    put("rouge2", c.rouge2);
    put("rougeL", c.rougeL);
    put("accuracy", c.accuracy);
    put("fluency", c.fluency);
    put("relevance", c.relevance);
    return j;
}

inline nlohmann::ordered_json report_json(const ScoreReport& r) {
    nlohmann::ordered_json j;
    j["branch"] = std::string(to_string(r.branch));
    j["scored"] = r.scored;
    j["failed"] = r.failed;
    j["mean"] = components_json(r.mean_components);
    j["mean_raw"] = r.mean_raw;
    j["mean_percent"] = r.mean_percent;
    j["histogram"] = {{"edges", r.histogram_edges}, {"counts", r.histogram_counts}};
    auto items = nlohmann::ordered_json::array();
    for (const auto& item : r.items) {
        nlohmann::ordered_json ij;
        if (item.error) {
            ij["error"] = *item.error;
        } else {
            ij["components"] = components_json(item.components);
            ij["raw"] = item.composite->raw;
            ij["percent"] = item.composite->percent;
        }
        items.push_back(std::move(ij));
    }
    j["items"] = std::move(items);
    return j;
}

inline nlohmann::ordered_json distribution_json(const DistributionReport& r) {
    nlohmann::ordered_json j;
    j["bins"] = {{"edges", r.bin_edges},
                 {"system_counts", r.system_counts},
                 {"human_counts", r.human_counts}};
    j["system"] = {{"n", r.system_n}, {"mean", r.system_mean}, {"stddev", r.system_stddev}};
    j["human"] = {{"n", r.human_n}, {"mean", r.human_mean}, {"stddev", r.human_stddev}};
    if (r.rank_correlation)
        j["rank_correlation"] = *r.rank_correlation;
    else
        j["rank_correlation"] = r.degenerate ? "degenerate" : nullptr;
    return j;
}

/// One line of the comparison CSV; column layout matches the experiment
/// summary tables (model, method, compute_type, components, raw, percent).
struct SummaryRow {
    std::string model, method, compute_type;
    double fluency, accuracy, relevance, raw, percent;
};

inline std::string summary_csv(std::span<const SummaryRow> rows) {
    std::string out = "model,method,compute_type,fluency,accuracy,relevance,raw,percent\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.4f,%.4f,%.2f", r.fluency, r.accuracy,
                      r.relevance, r.raw, r.percent);
        out += csv::escape(r.model) + "," + csv::escape(r.method) + "," +
               csv::escape(r.compute_type) + "," + buf + "\n";
    }
    return out;
}

}  // namespace dba::eval
