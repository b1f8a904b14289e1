#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mbrsel/core.hpp"
#include "mbrsel/rng.hpp"

namespace mbrsel {

/// Monte-Carlo expected utility of each candidate: the mean of its row of
/// the utility matrix, the pool itself serving as the reference sample
/// (diagonal included).
inline std::vector<double> expected_utilities(const UtilityMatrix& u) {
    if (u.n == 0) throw Error("expected_utilities: empty matrix");
    std::vector<double> eu(u.n);
    for (std::size_t i = 0; i < u.n; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < u.n; ++j) s += u(i, j);
        eu[i] = s / static_cast<double>(u.n);
    }
    return eu;
}

namespace detail {

inline void check_indices(const UtilityMatrix& u, std::span<const std::size_t> h,
                          const char* who) {
    for (std::size_t i : h)
        if (i >= u.n)
            throw Error(std::string(who) + ": index " + std::to_string(i) +
                        " out of range for N = " + std::to_string(u.n));
}

// Sum of u over ordered pairs of distinct positions of h.
inline double pairwise_penalty(const UtilityMatrix& u, std::span<const std::size_t> h) {
    double s = 0.0;
    for (std::size_t a = 0; a < h.size(); ++a)
        for (std::size_t b = 0; b < h.size(); ++b)
            if (a != b) s += u(h[a], h[b]);
    return s;
}

// Greedy maximization of a modular term minus the (lambda / k)-scaled
// pairwise-utility penalty, shared by the diversity and the probability
// variants. Ties break toward the smallest index.
inline SelectionResult penalized_greedy(const UtilityMatrix& u,
                                        const std::vector<double>& modular,
                                        std::size_t k, double lambda) {
    const std::size_t n = u.n;
    const double scale = lambda / static_cast<double>(k);
    std::vector<double> penalty(n, 0.0);
    std::vector<char> taken(n, 0);
    SelectionResult result;
    result.selected.reserve(k);
    result.trace.reserve(k);
    for (std::size_t step = 0; step < k; ++step) {
        std::size_t best = n;
        double best_gain = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (taken[i]) continue;
            const double gain = modular[i] - scale * penalty[i];
            if (gain > best_gain) {
                best_gain = gain;
                best = i;
            }
        }
        result.selected.push_back(best);
        result.trace.push_back(best_gain);
        taken[best] = 1;
        for (std::size_t i = 0; i < n; ++i)
            if (!taken[i]) penalty[i] += u(i, best) + u(best, i);
    }
    return result;
}

// Total distance from every point to its nearest element of h.
inline double medoid_cost(const std::vector<double>& d, std::size_t n,
                          std::span<const std::size_t> h) {
    double cost = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t m : h) best = std::min(best, d[m * n + y]);
        cost += best;
    }
    return cost;
}

}  // namespace detail

/// Plain MBR top-k: the k candidates of highest expected utility, returned
/// in descending expected-utility order (ties toward the smaller index).
inline SelectionResult mbr_topk(const UtilityMatrix& u, const SelectorConfig& cfg) {
    if (cfg.kind != SelectorKind::mbr_topk) throw Error("mbr_topk: config kind mismatch");
    cfg.validate(u.n);
    const std::vector<double> eu = expected_utilities(u);
    std::vector<std::size_t> order(u.n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&eu](std::size_t a, std::size_t b) {
        if (eu[a] != eu[b]) return eu[a] > eu[b];
        return a < b;
    });
    SelectionResult result;
    result.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.k));
    double obj = 0.0;
    for (std::size_t i : result.selected) obj += eu[i];
    result.objective = obj;
    result.selector = "mbr_topk(k=" + std::to_string(cfg.k) + ")";
    return result;
}

/// Diversity-penalized set objective: sum of expected utilities of h minus
/// (lambda / k) times the sum of pairwise utilities over ordered pairs of
/// h. The normalizer is the target size k, not |h|, so the objective is
/// submodular on positive matrices. Empty h evaluates to 0.
inline double dmbr_objective(const UtilityMatrix& u, std::span<const std::size_t> h,
                             double lambda, std::size_t k) {
    if (k == 0) throw Error("dmbr_objective: k must be positive");
    detail::check_indices(u, h, "dmbr_objective");
    if (h.empty()) return 0.0;
    const std::vector<double> eu = expected_utilities(u);
    double val = 0.0;
    for (std::size_t i : h) val += eu[i];
    return val - (lambda / static_cast<double>(k)) * detail::pairwise_penalty(u, h);
}

/// Greedy maximizer of dmbr_objective; within a (1 - 1/e) factor of the
/// optimum whenever every marginal gain stays nonnegative. The selected
/// indices come back in insertion order and the trace holds the marginal
/// gain of each step.
inline SelectionResult dmbr_greedy(const UtilityMatrix& u, const SelectorConfig& cfg) {
    if (cfg.kind != SelectorKind::dmbr) throw Error("dmbr_greedy: config kind mismatch");
    cfg.validate(u.n);
    SelectionResult result = detail::penalized_greedy(u, expected_utilities(u), cfg.k, cfg.lambda);
    result.objective = dmbr_objective(u, result.selected, cfg.lambda, cfg.k);
    result.selector =
        "dmbr(k=" + std::to_string(cfg.k) + ",lambda=" + detail::fmt_double(cfg.lambda) + ")";
    return result;
}

/// Symmetrized dissimilarity used by the medoid selector:
/// d(i, j) = 1 - min(u(i, j), u(j, i)), clamped to [0, 1]. Row-major n x n.
inline std::vector<double> kmbr_distance_matrix(const UtilityMatrix& u) {
    const std::size_t n = u.n;
    std::vector<double> d(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            d[i * n + j] = std::max(0.0, std::min(1.0, 1.0 - std::min(u(i, j), u(j, i))));
    return d;
}

namespace detail {

inline std::vector<std::size_t> kmedoidspp_on_distances(const std::vector<double>& d,
                                                        std::size_t n, std::size_t k,
                                                        SplitMix64& rng) {
    std::vector<std::size_t> chosen;
    chosen.reserve(k);
    std::vector<char> is_chosen(n, 0);
    const std::size_t first = static_cast<std::size_t>(rng.next_below(n));
    chosen.push_back(first);
    is_chosen[first] = 1;
    std::vector<double> weight(n);
    while (chosen.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (is_chosen[i]) {
                weight[i] = 0.0;
            } else {
                double nearest = std::numeric_limits<double>::infinity();
                for (std::size_t m : chosen) nearest = std::min(nearest, d[i * n + m]);
                weight[i] = nearest * nearest;
            }
            total += weight[i];
        }
        std::size_t next = n;
        if (total <= 0.0) {
            // all remaining points coincide with a chosen medoid
            for (std::size_t i = 0; i < n; ++i) {
                if (!is_chosen[i]) {
                    next = i;
                    break;
                }
            }
        } else {
            const double r = rng.next_double() * total;
            double cum = 0.0;
            std::size_t last_positive = n;
            for (std::size_t i = 0; i < n; ++i) {
                if (weight[i] > 0.0) last_positive = i;
                cum += weight[i];
                if (r < cum) {
                    next = i;
                    break;
                }
            }
            if (next == n) next = last_positive;  // r landed on the rounding edge
        }
        chosen.push_back(next);
        is_chosen[next] = 1;
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

}  // namespace detail

/// k-medoids++ seeding over the symmetrized distances: first medoid uniform,
/// each further medoid drawn with probability proportional to the squared
/// distance to its nearest chosen medoid. Returns sorted indices.
inline std::vector<std::size_t> kmedoidspp_init(const UtilityMatrix& u, std::size_t k,
                                                std::uint64_t seed) {
    if (k == 0) throw Error("kmedoidspp_init: k must be positive");
    if (k > u.n)
        throw Error("kmedoidspp_init: k = " + std::to_string(k) +
                    " exceeds pool size N = " + std::to_string(u.n));
    SplitMix64 rng(seed);
    const std::vector<double> d = kmbr_distance_matrix(u);
    return detail::kmedoidspp_on_distances(d, u.n, k, rng);
}

/// PAM swap phase from a given medoid set: steepest-descent over all
/// (medoid, non-medoid) swaps, accepting the best strictly improving one
/// per iteration (ties toward the lexicographically smallest pair), until
/// convergence or max_iter accepted swaps. The trace records the total
/// distance after each accepted swap; the objective is the final total
/// distance (minimized).
inline SelectionResult pam_from_init(const UtilityMatrix& u, std::vector<std::size_t> init,
                                     std::size_t max_iter) {
    const std::size_t n = u.n;
    detail::check_indices(u, init, "pam_from_init");
    if (init.empty()) throw Error("pam_from_init: empty initial medoid set");
    if (max_iter == 0) throw Error("pam_from_init: max_iter must be >= 1");
    std::sort(init.begin(), init.end());
    if (std::adjacent_find(init.begin(), init.end()) != init.end())
        throw Error("pam_from_init: duplicate initial medoid");
    const std::vector<double> d = kmbr_distance_matrix(u);
    std::vector<std::size_t> medoids = std::move(init);
    std::vector<char> is_medoid(n, 0);
    for (std::size_t m : medoids) is_medoid[m] = 1;

    constexpr double kInf = std::numeric_limits<double>::infinity();
    std::vector<double> near_dist(n), second_dist(n);
    std::vector<std::size_t> near_medoid(n);
    SelectionResult result;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        for (std::size_t y = 0; y < n; ++y) {
            double d1 = kInf, d2 = kInf;
            std::size_t m1 = n;
            for (std::size_t m : medoids) {
                const double dm = d[m * n + y];
                if (dm < d1) {
                    d2 = d1;
                    d1 = dm;
                    m1 = m;
                } else if (dm < d2) {
                    d2 = dm;
                }
            }
            near_dist[y] = d1;
            second_dist[y] = d2;
            near_medoid[y] = m1;
        }
        double best_delta = 0.0;
        std::size_t best_out = n, best_in = n;
        for (std::size_t m : medoids) {
            for (std::size_t x = 0; x < n; ++x) {
                if (is_medoid[x]) continue;
                double delta = 0.0;
                for (std::size_t y = 0; y < n; ++y) {
                    const double dxy = d[x * n + y];
                    if (near_medoid[y] == m) {
                        delta += std::min(second_dist[y], dxy) - near_dist[y];
                    } else if (dxy < near_dist[y]) {
                        delta += dxy - near_dist[y];
                    }
                }
                if (delta < best_delta) {
                    best_delta = delta;
                    best_out = m;
                    best_in = x;
                }
            }
        }
        if (best_out == n) break;
        is_medoid[best_out] = 0;
        is_medoid[best_in] = 1;
        *std::find(medoids.begin(), medoids.end(), best_out) = best_in;
        std::sort(medoids.begin(), medoids.end());
        result.trace.push_back(detail::medoid_cost(d, n, medoids));
    }
    result.objective = detail::medoid_cost(d, n, medoids);
    result.selected = std::move(medoids);
    return result;
}

/// KMBR: k-medoids over the symmetrized distances, seeded with k-medoids++
/// and refined with the PAM swap phase. Selected indices come back in
/// ascending order; the objective is the total distance (lower is better).
inline SelectionResult kmbr_pam(const UtilityMatrix& u, const SelectorConfig& cfg) {
    if (cfg.kind != SelectorKind::kmbr) throw Error("kmbr_pam: config kind mismatch");
    cfg.validate(u.n);
    SelectionResult result = pam_from_init(u, kmedoidspp_init(u, cfg.k, cfg.seed), cfg.max_iter);
    result.selector = "kmbr(k=" + std::to_string(cfg.k) + ")";
    return result;
}

/// Per-candidate sequence probabilities from logprobs. raw exponentiates
/// as-is; normalized renormalizes over the pool (softmax with max-shift).
inline std::vector<double> candidate_probabilities(const CandidateSet& cs, ProbMode mode) {
    std::vector<double> p(cs.size());
    for (std::size_t i = 0; i < cs.size(); ++i)
        if (!cs.candidates[i].logprob)
            throw Error("candidate set '" + cs.instance_id + "': candidate " +
                        std::to_string(i) + ": missing logprob");
    if (mode == ProbMode::raw) {
        for (std::size_t i = 0; i < cs.size(); ++i) p[i] = std::exp(*cs.candidates[i].logprob);
        return p;
    }
    double max_lp = -std::numeric_limits<double>::infinity();
    for (const auto& c : cs.candidates) max_lp = std::max(max_lp, *c.logprob);
    if (max_lp == -std::numeric_limits<double>::infinity())
        throw Error("candidate set '" + cs.instance_id +
                    "': all candidate probabilities are zero");
    double z = 0.0;
    for (const auto& c : cs.candidates) z += std::exp(*c.logprob - max_lp);
    for (std::size_t i = 0; i < cs.size(); ++i)
        p[i] = std::exp(*cs.candidates[i].logprob - max_lp) / z;
    return p;
}

/// Probability-mass set objective: sum of candidate probabilities of h
/// minus (lambda / k) times the pairwise-utility penalty. Empty h -> 0.
inline double oversample_objective(const std::vector<double>& probs, const UtilityMatrix& u,
                                   std::span<const std::size_t> h, double lambda,
                                   std::size_t k) {
    if (k == 0) throw Error("oversample_objective: k must be positive");
    if (probs.size() != u.n) throw Error("oversample_objective: probability vector size mismatch");
    detail::check_indices(u, h, "oversample_objective");
    if (h.empty()) return 0.0;
    double val = 0.0;
    for (std::size_t i : h) val += probs[i];
    return val - (lambda / static_cast<double>(k)) * detail::pairwise_penalty(u, h);
}

/// Oversampling selector: the same greedy as dmbr_greedy but with the
/// candidate's own probability as the modular term instead of expected
/// utility.
inline SelectionResult oversample_select(const CandidateSet& cs, const UtilityMatrix& u,
                                         const SelectorConfig& cfg) {
    if (cfg.kind != SelectorKind::oversample) throw Error("oversample_select: config kind mismatch");
    if (cs.size() != u.n) throw Error("oversample_select: utility matrix size mismatch");
    cfg.validate(u.n);
    const std::vector<double> probs = candidate_probabilities(cs, cfg.prob_mode);
    SelectionResult result = detail::penalized_greedy(u, probs, cfg.k, cfg.lambda);
    result.objective = oversample_objective(probs, u, result.selected, cfg.lambda, cfg.k);
    result.selector = "oversample(k=" + std::to_string(cfg.k) +
                      ",lambda=" + detail::fmt_double(cfg.lambda) +
                      ",prob=" + to_string(cfg.prob_mode) + ")";
    return result;
}

enum class OracleObjective { dmbr, kmbr, oversample };

inline const char* to_string(OracleObjective o) {
    switch (o) {
        case OracleObjective::dmbr: return "dmbr";
        case OracleObjective::kmbr: return "kmbr";
        case OracleObjective::oversample: return "oversample";
    }
    return "?";
}

/// C(n, k) in double precision (exact until well past the enumeration
/// budget).
inline double binomial(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    k = std::min(k, n - k);
    double c = 1.0;
    for (std::size_t i = 0; i < k; ++i)
        c = c * static_cast<double>(n - i) / static_cast<double>(i + 1);
    return c;
}

/// Exhaustive optimum of the chosen set objective over all k-subsets,
/// refusing pools with C(N, k) > 10^6. Ties resolve to the
/// lexicographically first subset; `probs` is required for the oversample
/// objective and ignored otherwise.
inline SelectionResult oracle_exhaustive(OracleObjective objective, const UtilityMatrix& u,
                                         std::size_t k, double lambda = 0.0,
                                         const std::vector<double>* probs = nullptr) {
    const std::size_t n = u.n;
    if (k == 0) throw Error("oracle: k must be positive");
    if (k > n)
        throw Error("oracle: k = " + std::to_string(k) + " exceeds pool size N = " +
                    std::to_string(n));
    const double combos = binomial(n, k);
    if (combos > 1e6)
        throw Error("oracle: C(" + std::to_string(n) + ", " + std::to_string(k) + ") = " +
                    detail::fmt_double(combos) + " exceeds the enumeration budget of 1e6 subsets");
    if (objective == OracleObjective::oversample && probs == nullptr)
        throw Error("oracle: oversample objective requires candidate probabilities");

    std::vector<double> d;
    if (objective == OracleObjective::kmbr) d = kmbr_distance_matrix(u);
    const bool minimize = objective == OracleObjective::kmbr;
    const auto evaluate = [&](std::span<const std::size_t> h) {
        switch (objective) {
            case OracleObjective::dmbr: return dmbr_objective(u, h, lambda, k);
            case OracleObjective::kmbr: return detail::medoid_cost(d, n, h);
            case OracleObjective::oversample: return oversample_objective(*probs, u, h, lambda, k);
        }
        return 0.0;
    };

    std::vector<std::size_t> comb(k);
    std::iota(comb.begin(), comb.end(), std::size_t{0});
    SelectionResult result;
    result.selected = comb;
    result.objective = evaluate(comb);
    while (true) {
        // advance to the next combination in lexicographic order
        std::size_t i = k;
        while (i > 0 && comb[i - 1] == n - k + i - 1) --i;
        if (i == 0) break;
        ++comb[i - 1];
        for (std::size_t j = i; j < k; ++j) comb[j] = comb[j - 1] + 1;
        const double v = evaluate(comb);
        if (minimize ? v < result.objective : v > result.objective) {
            result.objective = v;
            result.selected = comb;
        }
    }
    result.selector = "oracle(" + std::string(to_string(objective)) +
                      ",k=" + std::to_string(k) + ",lambda=" + detail::fmt_double(lambda) + ")";
    return result;
}

}  // namespace mbrsel
