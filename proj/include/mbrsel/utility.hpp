#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mbrsel/core.hpp"
#include "mbrsel/tokenize.hpp"

namespace mbrsel {

enum class UtilityMetric { sentence_bleu, unigram_f1, embedding_cosine, precomputed };

inline const char* to_string(UtilityMetric m) {
    switch (m) {
        case UtilityMetric::sentence_bleu: return "sentence_bleu";
        case UtilityMetric::unigram_f1: return "unigram_f1";
        case UtilityMetric::embedding_cosine: return "embedding_cosine";
        case UtilityMetric::precomputed: return "precomputed";
    }
    return "?";
}

struct UtilityKind {
    UtilityMetric metric = UtilityMetric::sentence_bleu;
    TokenizerOptions tokenizer;
};

namespace detail {

// N-gram key: tokens joined with 4-byte length prefixes, so tokens
// containing any byte value stay unambiguous.
inline void append_ngram_token(std::string& key, std::string_view token) {
    const std::uint32_t len = static_cast<std::uint32_t>(token.size());
    key.append(reinterpret_cast<const char*>(&len), sizeof(len));
    key.append(token);
}

inline std::string ngram_key(std::span<const std::string> tokens, std::size_t begin, int order) {
    std::string key;
    for (int j = 0; j < order; ++j) append_ngram_token(key, tokens[begin + j]);
    return key;
}

using NgramCounts = std::unordered_map<std::string, int>;

// Token count and per-order n-gram counts of one text, reusable as either
// side of a pairwise score.
struct BleuProfile {
    std::size_t length = 0;
    std::vector<NgramCounts> ngrams;  // index order-1
};

inline BleuProfile make_bleu_profile(std::span<const std::string> tokens, int max_order) {
    BleuProfile p;
    p.length = tokens.size();
    p.ngrams.resize(static_cast<std::size_t>(max_order));
    for (int n = 1; n <= max_order; ++n) {
        auto& counts = p.ngrams[n - 1];
        for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts[ngram_key(tokens, i, n)];
    }
    return p;
}

inline double bleu_from_profiles(const BleuProfile& hyp,
                                 std::span<const BleuProfile* const> refs, int max_order) {
    if (refs.empty()) throw Error("sentence_bleu: empty reference list");
    if (hyp.length == 0) return 0.0;
    const int effective = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(max_order), hyp.length));
    double log_sum = 0.0;
    for (int n = 1; n <= effective; ++n) {
        long clipped = 0;
        long total = 0;
        for (const auto& [gram, count] : hyp.ngrams[n - 1]) {
            int best = 0;
            for (const BleuProfile* ref : refs) {
                const auto it = ref->ngrams[n - 1].find(gram);
                if (it != ref->ngrams[n - 1].end()) best = std::max(best, it->second);
            }
            clipped += std::min(count, best);
            total += count;
        }
        if (n == 1) {
            if (clipped == 0) return 0.0;
            log_sum += std::log(static_cast<double>(clipped) / static_cast<double>(total));
        } else {
            // add-one smoothing on orders >= 2
            log_sum += std::log((static_cast<double>(clipped) + 1.0) /
                                (static_cast<double>(total) + 1.0));
        }
    }
    // brevity penalty against the reference length closest to |hyp|, ties
    // resolved toward the shorter reference
    const std::size_t hyp_len = hyp.length;
    std::size_t ref_len = refs[0]->length;
    const auto gap = [hyp_len](std::size_t r) { return r > hyp_len ? r - hyp_len : hyp_len - r; };
    for (const BleuProfile* ref : refs) {
        const std::size_t r = ref->length;
        if (gap(r) < gap(ref_len) || (gap(r) == gap(ref_len) && r < ref_len)) ref_len = r;
    }
    const double bp = hyp_len > ref_len
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    return bp * std::exp(log_sum / effective);
}

inline double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

}  // namespace detail

/// Sentence-level BLEU of one hypothesis against one or more references:
/// clipped n-gram precisions (clip count is the max across references),
/// add-one smoothing on orders >= 2, geometric mean over orders
/// 1..min(max_n, |hyp|), brevity penalty from the reference length closest
/// to |hyp| (ties -> shorter). Returns 0 for an empty hypothesis or a zero
/// unigram precision.
inline double sentence_bleu(const std::vector<std::string>& hyp,
                            const std::vector<std::vector<std::string>>& refs, int max_n = 4) {
    if (max_n < 1) throw Error("sentence_bleu: max_n must be >= 1");
    if (refs.empty()) throw Error("sentence_bleu: empty reference list");
    const detail::BleuProfile hyp_profile = detail::make_bleu_profile(hyp, max_n);
    std::vector<detail::BleuProfile> ref_profiles;
    ref_profiles.reserve(refs.size());
    for (const auto& r : refs) ref_profiles.push_back(detail::make_bleu_profile(r, max_n));
    std::vector<const detail::BleuProfile*> ref_ptrs;
    ref_ptrs.reserve(refs.size());
    for (const auto& r : ref_profiles) ref_ptrs.push_back(&r);
    return detail::bleu_from_profiles(hyp_profile, ref_ptrs, max_n);
}

/// F1 over clipped unigram counts. Both sequences empty -> 1, exactly one
/// empty -> 0.
inline double unigram_f1(const std::vector<std::string>& hyp, const std::vector<std::string>& ref) {
    if (hyp.empty() && ref.empty()) return 1.0;
    if (hyp.empty() || ref.empty()) return 0.0;
    std::unordered_map<std::string_view, long> ref_counts;
    for (const auto& t : ref) ++ref_counts[t];
    std::unordered_map<std::string_view, long> hyp_counts;
    for (const auto& t : hyp) ++hyp_counts[t];
    long overlap = 0;
    for (const auto& [tok, count] : hyp_counts) {
        const auto it = ref_counts.find(tok);
        if (it != ref_counts.end()) overlap += std::min(count, it->second);
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / static_cast<double>(hyp.size());
    const double recall = static_cast<double>(overlap) / static_cast<double>(ref.size());
    return 2.0 * precision * recall / (precision + recall);
}

/// Cosine similarity in [-1, 1]. Throws on dimension mismatch or a
/// zero-norm vector.
inline double embedding_cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw Error("embedding_cosine: dimension mismatch (" + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()) + ")");
    const double na = detail::squared_norm(a);
    const double nb = detail::squared_norm(b);
    if (na == 0.0 || nb == 0.0) throw Error("embedding_cosine: zero-norm embedding");
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

/// Materializes u(candidate_i, candidate_j) over all ordered pairs of the
/// pool, diagonal included. Cosine entries are rescaled to [0, 1] via
/// (c + 1) / 2 so selector-side positivity assumptions can hold. The
/// precomputed kind validates and passes through the sidecar matrix.
inline UtilityMatrix build_utility_matrix(const CandidateSet& cs, const UtilityKind& kind,
                                          const UtilityMatrix* precomputed = nullptr) {
    const std::size_t n = cs.size();
    UtilityMatrix m;
    m.n = n;
    m.values.assign(n * n, 0.0);
    switch (kind.metric) {
        case UtilityMetric::precomputed: {
            if (precomputed == nullptr)
                throw Error("build_utility_matrix: precomputed utility requested but no matrix supplied");
            return validate_utility_matrix(*precomputed, n);
        }
        case UtilityMetric::sentence_bleu: {
            constexpr int kMaxOrder = 4;
            std::vector<detail::BleuProfile> profiles;
            profiles.reserve(n);
            for (const auto& c : cs.candidates)
                profiles.push_back(detail::make_bleu_profile(tokenize(c.text, kind.tokenizer), kMaxOrder));
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const detail::BleuProfile* ref = &profiles[j];
                    m.values[i * n + j] =
                        detail::bleu_from_profiles(profiles[i], std::span(&ref, 1), kMaxOrder);
                }
            }
            break;
        }
        case UtilityMetric::unigram_f1: {
            std::vector<std::vector<std::string>> tokens;
            tokens.reserve(n);
            for (const auto& c : cs.candidates) tokens.push_back(tokenize(c.text, kind.tokenizer));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    m.values[i * n + j] = unigram_f1(tokens[i], tokens[j]);
            break;
        }
        case UtilityMetric::embedding_cosine: {
            for (std::size_t i = 0; i < n; ++i) {
                if (!cs.candidates[i].has_embedding())
                    throw Error("build_utility_matrix: candidate " + std::to_string(i) +
                                ": missing embedding");
                if (detail::squared_norm(cs.candidates[i].embedding) == 0.0)
                    throw Error("build_utility_matrix: candidate " + std::to_string(i) +
                                ": zero-norm embedding");
            }
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    const double c = embedding_cosine(cs.candidates[i].embedding,
                                                      cs.candidates[j].embedding);
                    m.values[i * n + j] = (c + 1.0) / 2.0;
                }
            }
            break;
        }
    }
    return validate_utility_matrix(std::move(m), n);
}

}  // namespace mbrsel
