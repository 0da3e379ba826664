// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 DBA Contributors

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dba/error.hpp"
#include "dba/strings.hpp"
#include "dba/text.hpp"

namespace dba::metrics {

using Tokens = std::span<const std::string>;

namespace detail {

/// n-gram multiset counts keyed by the joined token string.
inline std::map<std::string, int> ngram_counts(Tokens tokens, int n) {
    std::map<std::string, int> counts;
    if (n <= 0 || tokens.size() < static_cast<size_t>(n)) return counts;
    for (size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (int j = 0; j < n; ++j) {
            if (j) key.push_back('\x1f');
            key += tokens[i + j];
        }
        ++counts[key];
    }
    return counts;
}

inline size_t clipped_overlap(const std::map<std::string, int>& cand,
                              const std::map<std::string, int>& ref) {
    size_t overlap = 0;
    for (const auto& [gram, count] : cand) {
        auto it = ref.find(gram);
        if (it != ref.end()) overlap += static_cast<size_t>(std::min(count, it->second));
    }
    return overlap;
}

inline double f1(double precision, double recall) {
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace detail

/// BLEU: geometric mean of clipped n-gram precisions for n = 1..max_n times
/// the brevity penalty. Orders with zero matches use add-1 smoothing on both
/// numerator and denominator; unsmoothed they would zero out every short
/// candidate. Empty candidate scores 0; only an exact match scores 1.
inline double bleu(Tokens candidate, Tokens reference, int max_n = 4) {
    if (max_n < 1) throw data_error("max_n must be at least 1", "bad_argument");
    if (candidate.empty()) return 0.0;

    double log_sum = 0.0;
    for (int n = 1; n <= max_n; ++n) {
        auto cand = detail::ngram_counts(candidate, n);
        auto ref = detail::ngram_counts(reference, n);
        const size_t total =
            candidate.size() >= static_cast<size_t>(n) ? candidate.size() - n + 1 : 0;
        const size_t matched = detail::clipped_overlap(cand, ref);
        double p = matched == 0
                       ? static_cast<double>(matched + 1) / static_cast<double>(total + 1)
                       : static_cast<double>(matched) / static_cast<double>(total);
        log_sum += std::log(p);
    }
    double brevity = 1.0;
    if (candidate.size() < reference.size())
        brevity = std::exp(1.0 - static_cast<double>(reference.size()) /
                                     static_cast<double>(candidate.size()));
    return brevity * std::exp(log_sum / max_n);
}

enum class RougeVariant { r1, r2, rL };

inline size_t lcs_length(Tokens a, Tokens b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<size_t> prev(b.size() + 1, 0), curr(b.size() + 1, 0);
    for (size_t i = 1; i <= a.size(); ++i) {
        for (size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                curr[j] = prev[j - 1] + 1;
            else
                curr[j] = std::max(prev[j], curr[j - 1]);
        }
        std::swap(prev, curr);
    }
    return prev[b.size()];
}

/// ROUGE-1/-2 (clipped n-gram overlap F1) and ROUGE-L (LCS F1).
/// Scores 0 whenever either side is empty.
inline double rouge(Tokens candidate, Tokens reference, RougeVariant variant) {
    if (candidate.empty() || reference.empty()) return 0.0;
    if (variant == RougeVariant::rL) {
        const double lcs = static_cast<double>(lcs_length(candidate, reference));
        return detail::f1(lcs / static_cast<double>(candidate.size()),
                          lcs / static_cast<double>(reference.size()));
    }
    const int n = variant == RougeVariant::r1 ? 1 : 2;
    auto cand = detail::ngram_counts(candidate, n);
    auto ref = detail::ngram_counts(reference, n);
    const size_t cand_total =
        candidate.size() >= static_cast<size_t>(n) ? candidate.size() - n + 1 : 0;
    const size_t ref_total =
        reference.size() >= static_cast<size_t>(n) ? reference.size() - n + 1 : 0;
    if (cand_total == 0 || ref_total == 0) return 0.0;
    const double overlap = static_cast<double>(detail::clipped_overlap(cand, ref));
    return detail::f1(overlap / static_cast<double>(cand_total),
                      overlap / static_cast<double>(ref_total));
}

/// Fraction of positions where normalized prediction equals normalized label
/// (trim + case-fold). Lists must be the same non-zero length.
inline double exact_match_accuracy(std::span<const std::string> predictions,
                                   std::span<const std::string> labels) {
    if (predictions.size() != labels.size())
        throw data_error("predictions and labels differ in length", "bad_argument");
    if (predictions.empty()) throw data_error("empty prediction list", "bad_argument");
    size_t hits = 0;
    for (size_t i = 0; i < predictions.size(); ++i)
        if (strings::normalize_match(predictions[i]) == strings::normalize_match(labels[i]))
            ++hits;
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

/// Token embedding provider for the semantic accuracy scorer.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::vector<double> embed(std::string_view token) const = 0;
};

/// Test-fallback embedder: each distinct token type gets its own axis, so
/// cosine similarity is an equality indicator.
class OneHotEmbedder : public Embedder {
public:
    std::vector<double> embed(std::string_view token) const override {
        std::lock_guard lock(mutex_);
        auto [it, inserted] = index_.try_emplace(std::string(token), index_.size());
        std::vector<double> v(it->second + 1, 0.0);
        v[it->second] = 1.0;
        return v;
    }

private:
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, size_t> index_;
};

namespace detail {

/// Cosine over vectors of possibly different lengths; the shorter one is
/// zero-extended. Zero-norm vectors have similarity 0.
inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    const size_t common = std::min(a.size(), b.size());
    for (size_t i = 0; i < common; ++i) dot += a[i] * b[i];
    for (double x : a) na += x * x;
    for (double x : b) nb += x * x;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Greedy one-to-one matching: walk `from` in order, pair each token with
/// the unconsumed `to` token of highest positive similarity, and sum the
/// matched similarities. Non-positive similarities never consume a token.
inline double greedy_match_sum(const std::vector<std::vector<double>>& from,
                               const std::vector<std::vector<double>>& to) {
    std::vector<bool> used(to.size(), false);
    double sum = 0.0;
    for (const auto& f : from) {
        double best = 0.0;
        size_t best_j = to.size();
        for (size_t j = 0; j < to.size(); ++j) {
            if (used[j]) continue;
            double sim = cosine(f, to[j]);
            if (sim > best) {
                best = sim;
                best_j = j;
            }
        }
        if (best_j < to.size()) {
            used[best_j] = true;
            sum += best;
        }
    }
    return sum;
}

}  // namespace detail

/// Greedy-matching F1 over pairwise token-embedding cosine similarities.
/// With the one-hot embedder this equals ROUGE-1 F1 exactly: the matched
/// pairs per token type number min(candidate count, reference count).
inline double semantic_accuracy(const std::string& candidate, const std::string& reference,
                                const Embedder& embedder) {
    if (strings::trim(candidate).empty() || strings::trim(reference).empty())
        throw data_error("semantic_accuracy requires non-empty inputs", "bad_argument");
    auto cand_tokens = text::tokenize(candidate);
    auto ref_tokens = text::tokenize(reference);
    if (cand_tokens.empty() || ref_tokens.empty()) return 0.0;

    std::vector<std::vector<double>> cand_vecs, ref_vecs;
    cand_vecs.reserve(cand_tokens.size());
    ref_vecs.reserve(ref_tokens.size());
    for (const auto& t : cand_tokens) cand_vecs.push_back(embedder.embed(t));
    for (const auto& t : ref_tokens) ref_vecs.push_back(embedder.embed(t));

    const double precision =
        detail::greedy_match_sum(cand_vecs, ref_vecs) / static_cast<double>(cand_vecs.size());
    const double recall =
        detail::greedy_match_sum(ref_vecs, cand_vecs) / static_cast<double>(ref_vecs.size());
    return detail::f1(precision, recall);
}

}  // namespace dba::metrics
