#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "mbrsel/core.hpp"
#include "mbrsel/tokenize.hpp"
#include "mbrsel/utility.hpp"

namespace mbrsel {

/// Self-BLEU over the selection: mean sentence BLEU across all ordered
/// pairs, each text scored against each other single text. Higher means
/// the selection is more homogeneous.
inline double pairwise_bleu(const std::vector<std::string>& texts,
                            const TokenizerOptions& tok = {}, int max_n = 4) {
    if (texts.size() < 2) throw Error("p_bleu: need at least 2 texts");
    std::vector<detail::BleuProfile> profiles;
    profiles.reserve(texts.size());
    for (const auto& t : texts)
        profiles.push_back(detail::make_bleu_profile(tokenize(t, tok), max_n));
    double sum = 0.0;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        for (std::size_t j = 0; j < profiles.size(); ++j) {
            if (i == j) continue;
            const detail::BleuProfile* ref = &profiles[j];
            sum += detail::bleu_from_profiles(profiles[i], std::span(&ref, 1), max_n);
        }
    }
    const double pairs = static_cast<double>(texts.size()) *
                         static_cast<double>(texts.size() - 1);
    return sum / pairs;
}

/// Distinct-n over the pooled selection: unique n-grams divided by total
/// n-grams across all texts. Throws when no text has an n-gram of the
/// requested order.
inline double distinct_n(const std::vector<std::string>& texts, int n,
                         const TokenizerOptions& tok = {}) {
    if (n < 1) throw Error("distinct_n: order must be >= 1");
    if (texts.empty()) throw Error("distinct_n: empty selection");
    std::unordered_set<std::string> unique;
    std::size_t total = 0;
    for (const auto& t : texts) {
        const std::vector<std::string> tokens = tokenize(t, tok);
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
            unique.insert(detail::ngram_key(tokens, i, n));
            ++total;
        }
    }
    if (total == 0)
        throw Error("distinct_" + std::to_string(n) + ": no n-grams of order " +
                    std::to_string(n) + " in the selection");
    return static_cast<double>(unique.size()) / static_cast<double>(total);
}

/// Mean cosine similarity over unordered pairs of selection embeddings.
inline double pairwise_cosine(const std::vector<std::vector<double>>& embeddings) {
    if (embeddings.size() < 2) throw Error("p_cosine: need at least 2 embeddings");
    for (std::size_t i = 0; i < embeddings.size(); ++i)
        if (embeddings[i].empty())
            throw Error("p_cosine: selection entry " + std::to_string(i) +
                        ": missing embedding");
    double sum = 0.0;
    for (std::size_t i = 0; i < embeddings.size(); ++i)
        for (std::size_t j = i + 1; j < embeddings.size(); ++j)
            sum += embedding_cosine(embeddings[i], embeddings[j]);
    const double pairs = static_cast<double>(embeddings.size()) *
                         static_cast<double>(embeddings.size() - 1) / 2.0;
    return sum / pairs;
}

struct QualityStats {
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;  // oracle quality: the best hypothesis kept
};

/// Reference-based quality of each selected text, reduced to min / mean /
/// max over the selection. sentence_bleu scores against all references at
/// once; unigram_f1 takes the best per-reference score.
inline QualityStats quality_stats(const std::vector<std::string>& texts,
                                  const std::vector<std::string>& references,
                                  UtilityMetric metric, const TokenizerOptions& tok = {}) {
    if (texts.empty()) throw Error("quality: empty selection");
    if (references.empty()) throw Error("quality: no references");
    if (metric != UtilityMetric::sentence_bleu && metric != UtilityMetric::unigram_f1)
        throw Error(std::string("quality: unsupported metric '") + to_string(metric) + "'");
    std::vector<std::vector<std::string>> ref_tokens;
    ref_tokens.reserve(references.size());
    for (const auto& r : references) ref_tokens.push_back(tokenize(r, tok));
    std::vector<double> scores;
    scores.reserve(texts.size());
    for (const auto& t : texts) {
        const std::vector<std::string> hyp = tokenize(t, tok);
        if (metric == UtilityMetric::sentence_bleu) {
            scores.push_back(sentence_bleu(hyp, ref_tokens));
        } else {
            double best = 0.0;
            for (const auto& r : ref_tokens) best = std::max(best, unigram_f1(hyp, r));
            scores.push_back(best);
        }
    }
    QualityStats q;
    q.min = *std::min_element(scores.begin(), scores.end());
    q.max = *std::max_element(scores.begin(), scores.end());
    double sum = 0.0;
    for (double s : scores) sum += s;
    q.mean = sum / static_cast<double>(scores.size());
    return q;
}

/// Whether an optional metric is skipped, computed when its inputs exist,
/// or demanded (missing inputs become a recorded error).
enum class MetricRequest { off, if_available, required };

inline const char* to_string(MetricRequest r) {
    switch (r) {
        case MetricRequest::off: return "off";
        case MetricRequest::if_available: return "auto";
        case MetricRequest::required: return "on";
    }
    return "?";
}

struct EvalOptions {
    TokenizerOptions tokenizer;
    std::vector<int> distinct_orders{1, 2, 3};
    UtilityMetric quality_metric = UtilityMetric::sentence_bleu;
    MetricRequest quality = MetricRequest::if_available;
    MetricRequest embedding_diversity = MetricRequest::if_available;
};

struct InstanceEval {
    std::string instance_id;
    std::optional<double> p_bleu;
    std::map<int, double> distinct;  // order -> value, successful orders only
    std::optional<double> p_cosine;
    std::optional<QualityStats> quality;
    std::vector<std::string> errors;  // one entry per failed metric, metric named
};

/// Scores one selection against its candidate set. Metric failures (too few
/// texts, no n-grams, missing embeddings or references when demanded) are
/// recorded per metric in `errors`; structurally invalid selections throw.
inline InstanceEval evaluate_selection(const CandidateSet& cs,
                                       std::span<const std::size_t> selected,
                                       const EvalOptions& opt = {}) {
    if (selected.empty()) throw Error("evaluate: empty selection");
    for (std::size_t i : selected)
        if (i >= cs.size())
            throw Error("evaluate: selected index " + std::to_string(i) +
                        " out of range for pool size " + std::to_string(cs.size()));
    InstanceEval ev;
    ev.instance_id = cs.instance_id;
    std::vector<std::string> texts;
    texts.reserve(selected.size());
    for (std::size_t i : selected) texts.push_back(cs.candidates[i].text);

    try {
        ev.p_bleu = pairwise_bleu(texts, opt.tokenizer);
    } catch (const Error& e) {
        ev.errors.push_back(e.what());
    }
    for (int order : opt.distinct_orders) {
        try {
            ev.distinct[order] = distinct_n(texts, order, opt.tokenizer);
        } catch (const Error& e) {
            ev.errors.push_back(e.what());
        }
    }
    if (opt.embedding_diversity != MetricRequest::off) {
        bool have_all = true;
        for (std::size_t i : selected)
            if (!cs.candidates[i].has_embedding()) have_all = false;
        if (have_all || opt.embedding_diversity == MetricRequest::required) {
            try {
                std::vector<std::vector<double>> emb;
                emb.reserve(selected.size());
                for (std::size_t i : selected) emb.push_back(cs.candidates[i].embedding);
                ev.p_cosine = pairwise_cosine(emb);
            } catch (const Error& e) {
                ev.errors.push_back(e.what());
            }
        }
    }
    if (opt.quality != MetricRequest::off) {
        if (!cs.references.empty() || opt.quality == MetricRequest::required) {
            try {
                ev.quality = quality_stats(texts, cs.references, opt.quality_metric,
                                           opt.tokenizer);
            } catch (const Error& e) {
                ev.errors.push_back(e.what());
            }
        }
    }
    return ev;
}

struct CorpusAggregate {
    std::size_t instances = 0;
    std::optional<double> p_bleu;
    std::size_t p_bleu_count = 0;
    std::map<int, double> distinct;
    std::map<int, std::size_t> distinct_counts;
    std::optional<double> p_cosine;
    std::size_t p_cosine_count = 0;
    std::optional<QualityStats> quality;
    std::size_t quality_count = 0;
    std::size_t error_count = 0;  // metric errors summed over instances
};

namespace detail {

struct KahanSum {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        const double y = x - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
};

}  // namespace detail

/// Unweighted corpus means over the instances where each metric succeeded.
/// Instances are folded in the given order with compensated summation, so
/// the result does not depend on how the per-instance work was scheduled.
inline CorpusAggregate aggregate_evals(const std::vector<InstanceEval>& evals) {
    CorpusAggregate agg;
    agg.instances = evals.size();
    detail::KahanSum p_bleu, p_cosine, q_min, q_mean, q_max;
    std::map<int, detail::KahanSum> distinct;
    for (const InstanceEval& ev : evals) {
        agg.error_count += ev.errors.size();
        if (ev.p_bleu) {
            p_bleu.add(*ev.p_bleu);
            ++agg.p_bleu_count;
        }
        for (const auto& [order, value] : ev.distinct) {
            distinct[order].add(value);
            ++agg.distinct_counts[order];
        }
        if (ev.p_cosine) {
            p_cosine.add(*ev.p_cosine);
            ++agg.p_cosine_count;
        }
        if (ev.quality) {
            q_min.add(ev.quality->min);
            q_mean.add(ev.quality->mean);
            q_max.add(ev.quality->max);
            ++agg.quality_count;
        }
    }
    if (agg.p_bleu_count > 0) agg.p_bleu = p_bleu.sum / static_cast<double>(agg.p_bleu_count);
    for (const auto& [order, sum] : distinct)
        agg.distinct[order] = sum.sum / static_cast<double>(agg.distinct_counts[order]);
    if (agg.p_cosine_count > 0)
        agg.p_cosine = p_cosine.sum / static_cast<double>(agg.p_cosine_count);
    if (agg.quality_count > 0) {
        const double c = static_cast<double>(agg.quality_count);
        agg.quality = QualityStats{q_min.sum / c, q_mean.sum / c, q_max.sum / c};
    }
    return agg;
}

}  // namespace mbrsel
