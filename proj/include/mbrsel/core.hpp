#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mbrsel {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A problem with the run setup itself — unreadable or malformed input
/// files, inconsistent file pairs, bad parameter grids — as opposed to a
/// failure on one instance. The CLI maps this to exit code 2.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(what) {}
};

struct Candidate {
    std::string text;
    std::optional<double> logprob;  // natural-log sequence probability, <= 0
    std::vector<double> embedding;  // empty when absent

    bool has_embedding() const { return !embedding.empty(); }
};

/// One input's pool of candidate texts. Indices into `candidates` are the
/// canonical identity of a hypothesis everywhere in the library; the same
/// pool serves as both the candidate and the reference side of the
/// expected-utility estimate.
struct CandidateSet {
    std::string instance_id;
    std::optional<std::string> source;
    std::vector<Candidate> candidates;
    std::vector<std::string> references;

    std::size_t size() const { return candidates.size(); }

    bool all_have_embeddings() const {
        for (const auto& c : candidates)
            if (!c.has_embedding()) return false;
        return !candidates.empty();
    }

    bool all_have_logprobs() const {
        for (const auto& c : candidates)
            if (!c.logprob) return false;
        return !candidates.empty();
    }
};

/// n x n matrix with entry (i, j) = u(candidate_i as hypothesis,
/// candidate_j as reference). Row-major. Not necessarily symmetric.
struct UtilityMatrix {
    std::size_t n = 0;
    std::vector<double> values;
    bool all_positive = false;  // set by validate_utility_matrix

    double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
    double& operator()(std::size_t i, std::size_t j) { return values[i * n + j]; }
};

enum class SelectorKind { mbr_topk, dmbr, kmbr, oversample, oracle };
enum class ProbMode { raw, normalized };

inline const char* to_string(SelectorKind k) {
    switch (k) {
        case SelectorKind::mbr_topk: return "mbr_topk";
        case SelectorKind::dmbr: return "dmbr";
        case SelectorKind::kmbr: return "kmbr";
        case SelectorKind::oversample: return "oversample";
        case SelectorKind::oracle: return "oracle";
    }
    return "?";
}

inline const char* to_string(ProbMode m) {
    return m == ProbMode::raw ? "raw" : "normalized";
}

struct SelectorConfig {
    SelectorKind kind = SelectorKind::mbr_topk;
    std::size_t k = 4;
    double lambda = 0.0;                        // diversity strength (dmbr, oversample)
    std::uint64_t seed = 0;
    std::size_t max_iter = 300;                 // PAM swap iteration cap
    ProbMode prob_mode = ProbMode::normalized;  // oversample only

    void validate(std::size_t n) const {
        if (k == 0) throw Error("selector config: k must be positive");
        if (k > n)
            throw Error("selector config: k = " + std::to_string(k) +
                        " exceeds pool size N = " + std::to_string(n));
        if (!(lambda >= 0.0)) throw Error("selector config: lambda must be >= 0");
        if (max_iter == 0) throw Error("selector config: max_iter must be >= 1");
    }
};

struct SelectionResult {
    std::vector<std::size_t> selected;  // k distinct indices into the original pool
    double objective = 0.0;
    std::vector<double> trace;  // greedy: marginal gain per step; PAM: total distance after each accepted swap
    std::string selector;       // algorithm tag with parameters
};

namespace detail {

// Shortest decimal string that round-trips the exact double.
inline std::string fmt_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// "\r\n" and lone "\r" both become "\n"; idempotent.
inline std::string normalize_newlines(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < s.size() && s[i + 1] == '\n') ++i;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

}  // namespace detail

/// Checks the CandidateSet invariants and normalizes line endings in every
/// text field. Throws Error naming the first offending candidate index.
inline CandidateSet validate_candidate_set(CandidateSet cs) {
    const std::string where = "candidate set '" + cs.instance_id + "'";
    if (cs.candidates.empty()) throw Error(where + ": empty pool");
    std::size_t dim = 0;
    for (std::size_t i = 0; i < cs.candidates.size(); ++i) {
        Candidate& c = cs.candidates[i];
        c.text = detail::normalize_newlines(c.text);
        if (c.logprob) {
            if (std::isnan(*c.logprob))
                throw Error(where + ": candidate " + std::to_string(i) + ": NaN logprob");
            if (*c.logprob > 0.0)
                throw Error(where + ": candidate " + std::to_string(i) +
                            ": logprob must be <= 0");
        }
        if (!c.embedding.empty()) {
            for (double v : c.embedding)
                if (!std::isfinite(v))
                    throw Error(where + ": candidate " + std::to_string(i) +
                                ": non-finite embedding entry");
            if (dim == 0) {
                dim = c.embedding.size();
            } else if (c.embedding.size() != dim) {
                throw Error(where + ": candidate " + std::to_string(i) +
                            ": inconsistent embedding dimension (" +
                            std::to_string(c.embedding.size()) + " vs " +
                            std::to_string(dim) + ")");
            }
        }
    }
    if (cs.source) *cs.source = detail::normalize_newlines(*cs.source);
    for (std::string& r : cs.references) r = detail::normalize_newlines(r);
    return cs;
}

/// Checks that the matrix is n x n with finite entries and records whether
/// all entries are strictly positive.
inline UtilityMatrix validate_utility_matrix(UtilityMatrix m, std::size_t n) {
    if (m.n != n || m.values.size() != n * n)
        throw Error("utility matrix: dimension mismatch (got " + std::to_string(m.n) +
                    "x" + std::to_string(m.n) + " with " + std::to_string(m.values.size()) +
                    " entries, expected " + std::to_string(n) + "x" + std::to_string(n) + ")");
    bool positive = true;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            const double v = m.values[i * n + j];
            if (!std::isfinite(v))
                throw Error("utility matrix: non-finite entry at (" + std::to_string(i) +
                            ", " + std::to_string(j) + ")");
            if (!(v > 0.0)) positive = false;
        }
    }
    m.all_positive = positive;
    return m;
}

}  // namespace mbrsel
