#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "mbrsel/core.hpp"
#include "mbrsel/corpus.hpp"
#include "mbrsel/metrics.hpp"
#include "mbrsel/rng.hpp"
#include "mbrsel/selection.hpp"
#include "mbrsel/utility.hpp"

namespace mbrsel {

namespace detail {

// Index-sliced work queue. Results must be written to per-index slots so
// the outcome is identical for any worker count; the first-by-index
// exception is rethrown after the pool drains.
template <typename Fn>
inline void parallel_for(std::size_t count, int jobs, Fn&& fn) {
    const std::size_t workers =
        std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&]() {
            while (true) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) break;
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

/// Drops exact-duplicate candidate texts, keeping the first occurrence.
/// Returns the reduced set and the map from reduced index to original
/// index.
inline std::pair<CandidateSet, std::vector<std::size_t>> dedup_candidates(
    const CandidateSet& cs) {
    CandidateSet reduced;
    reduced.instance_id = cs.instance_id;
    reduced.source = cs.source;
    reduced.references = cs.references;
    std::unordered_set<std::string_view> seen;
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < cs.candidates.size(); ++i) {
        if (seen.insert(cs.candidates[i].text).second) {
            kept.push_back(i);
            reduced.candidates.push_back(cs.candidates[i]);
        }
    }
    return {std::move(reduced), std::move(kept)};
}

/// The rows/columns of `m` named by `kept`, in that order.
inline UtilityMatrix subselect_matrix(const UtilityMatrix& m,
                                      const std::vector<std::size_t>& kept) {
    UtilityMatrix r;
    r.n = kept.size();
    r.values.reserve(r.n * r.n);
    for (std::size_t i : kept)
        for (std::size_t j : kept) r.values.push_back(m(i, j));
    return validate_utility_matrix(std::move(r), r.n);
}

/// One selection run: a corpus, a utility, and a grid of selector
/// configurations applied to every instance.
struct RunManifest {
    std::string corpus_path;
    std::string sidecar_path;  // empty = no sidecar
    std::string output_path;   // selections JSONL; empty = keep in memory only
    UtilityKind utility;
    std::vector<SelectorConfig> configs;
    std::optional<OracleObjective> oracle_objective;  // for kind == oracle
    bool dedup = false;
    int jobs = 1;
};

struct RunSummary {
    std::size_t instances = 0;
    std::size_t lines = 0;
    std::size_t failed = 0;  // error lines among them
    std::string jsonl;       // the full selections output, one line per (instance, config)
};

/// Runs one selector configuration on one instance. The stochastic
/// selector draws its stream from (cfg.seed, instance id), so results do
/// not depend on instance order or scheduling.
inline SelectionResult select_one(const CandidateSet& cs, const UtilityMatrix& u,
                                  SelectorConfig cfg,
                                  const std::optional<OracleObjective>& oracle_obj) {
    switch (cfg.kind) {
        case SelectorKind::mbr_topk:
            return mbr_topk(u, cfg);
        case SelectorKind::dmbr:
            return dmbr_greedy(u, cfg);
        case SelectorKind::kmbr:
            cfg.seed = instance_stream_seed(cfg.seed, cs.instance_id);
            return kmbr_pam(u, cfg);
        case SelectorKind::oversample:
            return oversample_select(cs, u, cfg);
        case SelectorKind::oracle: {
            if (!oracle_obj) throw Error("oracle selector requires an objective");
            cfg.validate(u.n);
            std::vector<double> probs;
            const std::vector<double>* probs_ptr = nullptr;
            if (*oracle_obj == OracleObjective::oversample) {
                probs = candidate_probabilities(cs, cfg.prob_mode);
                probs_ptr = &probs;
            }
            SelectionResult r = oracle_exhaustive(*oracle_obj, u, cfg.k, cfg.lambda, probs_ptr);
            return r;
        }
    }
    throw Error("select_one: unknown selector kind");
}

namespace detail {

inline std::string selector_name(const SelectorConfig& cfg,
                                 const std::optional<OracleObjective>& oracle_obj) {
    if (cfg.kind == SelectorKind::oracle && oracle_obj)
        return std::string("oracle_") + to_string(*oracle_obj);
    return to_string(cfg.kind);
}

inline std::string selection_line(const CandidateSet& original, const SelectorConfig& cfg,
                                  const std::optional<OracleObjective>& oracle_obj,
                                  const SelectionResult& r) {
    nlohmann::ordered_json j;
    j["id"] = original.instance_id;
    j["selector"] = selector_name(cfg, oracle_obj);
    j["k"] = cfg.k;
    j["lambda"] = cfg.lambda;
    j["seed"] = cfg.seed;
    j["selected"] = r.selected;
    nlohmann::ordered_json texts = nlohmann::ordered_json::array();
    for (std::size_t i : r.selected) texts.push_back(original.candidates[i].text);
    j["selected_texts"] = std::move(texts);
    j["objective"] = r.objective;
    return j.dump() + "\n";
}

inline std::string error_line(const std::string& id, const std::string& message) {
    nlohmann::ordered_json j;
    j["id"] = id;
    j["error"] = message;
    return j.dump() + "\n";
}

}  // namespace detail

inline RunSummary run_select(const RunManifest& man) {
    if (man.configs.empty()) throw UsageError("no selector configuration given");
    if (man.utility.metric == UtilityMetric::precomputed && man.sidecar_path.empty())
        throw UsageError("utility 'precomputed' requires a utility sidecar file");
    const std::vector<LoadedInstance> instances =
        load_corpus(man.corpus_path, man.sidecar_path);

    std::vector<std::string> chunks(instances.size());
    std::vector<std::size_t> chunk_failed(instances.size(), 0);
    detail::parallel_for(instances.size(), man.jobs, [&](std::size_t idx) {
        const LoadedInstance& inst = instances[idx];
        const std::string& id = inst.set.instance_id;
        std::string& chunk = chunks[idx];

        const CandidateSet* pool = &inst.set;
        CandidateSet reduced;
        std::vector<std::size_t> kept;
        if (man.dedup) {
            std::tie(reduced, kept) = dedup_candidates(inst.set);
            pool = &reduced;
        }
        UtilityMatrix u;
        std::string matrix_error;
        try {
            UtilityMatrix sub;
            const UtilityMatrix* pre = nullptr;
            if (man.utility.metric == UtilityMetric::precomputed) {
                if (!inst.utility)
                    throw Error("instance '" + id + "': no utility sidecar entry");
                if (man.dedup) {
                    sub = subselect_matrix(*inst.utility, kept);
                    pre = &sub;
                } else {
                    pre = &*inst.utility;
                }
            }
            u = build_utility_matrix(*pool, man.utility, pre);
        } catch (const Error& e) {
            matrix_error = e.what();
        }

        for (const SelectorConfig& cfg : man.configs) {
            if (!matrix_error.empty()) {
                chunk += detail::error_line(id, matrix_error);
                ++chunk_failed[idx];
                continue;
            }
            try {
                SelectionResult r = select_one(*pool, u, cfg, man.oracle_objective);
                if (man.dedup)
                    for (std::size_t& s : r.selected) s = kept[s];
                chunk += detail::selection_line(inst.set, cfg, man.oracle_objective, r);
            } catch (const Error& e) {
                chunk += detail::error_line(id, e.what());
                ++chunk_failed[idx];
            }
        }
    });

    RunSummary summary;
    summary.instances = instances.size();
    summary.lines = instances.size() * man.configs.size();
    for (std::size_t idx = 0; idx < chunks.size(); ++idx) {
        summary.jsonl += chunks[idx];
        summary.failed += chunk_failed[idx];
    }
    if (!man.output_path.empty()) {
        std::ofstream out(man.output_path, std::ios::binary);
        if (!out) throw UsageError("cannot write selections file '" + man.output_path + "'");
        out << summary.jsonl;
        if (!out) throw UsageError("failed writing selections file '" + man.output_path + "'");
    }
    return summary;
}

/// One evaluation run: a corpus, a selections file (or in-memory lines),
/// and where to put the report and CSV.
struct EvaluateManifest {
    std::string corpus_path;
    std::string selections_path;  // read from here unless `selections_text` is set
    std::optional<std::string> selections_text;
    std::string report_path;  // empty = report kept in memory only
    std::string csv_path;     // empty = CSV kept in memory only
    EvalOptions options;
    int jobs = 1;
};

struct EvaluateSummary {
    std::size_t groups = 0;
    std::size_t records = 0;
    std::size_t failed_selections = 0;  // error lines in the selections input
    std::size_t metric_errors = 0;
    std::string report_json;
    std::string csv;
};

namespace detail {

struct GroupKey {
    std::string selector;
    std::size_t k = 0;
    double lambda = 0.0;
    std::uint64_t seed = 0;

    bool operator<(const GroupKey& o) const {
        return std::tie(selector, k, lambda, seed) <
               std::tie(o.selector, o.k, o.lambda, o.seed);
    }
};

inline void put_optional(nlohmann::ordered_json& j, const char* key,
                         const std::optional<double>& v) {
    if (v) j[key] = *v;
}

inline std::string csv_cell(const std::optional<double>& v) {
    return v ? fmt_double(*v) : std::string();
}

}  // namespace detail

inline EvaluateSummary run_evaluate(const EvaluateManifest& man) {
    const std::vector<LoadedInstance> instances = load_corpus(man.corpus_path);
    std::unordered_map<std::string_view, const CandidateSet*> by_id;
    for (const LoadedInstance& inst : instances)
        by_id.emplace(inst.set.instance_id, &inst.set);

    const SelectionFile sels = man.selections_text
                                   ? parse_selections(*man.selections_text)
                                   : load_selections(man.selections_path);
    for (const SelectionRecord& rec : sels.records)
        if (by_id.find(rec.id) == by_id.end())
            throw UsageError("selection id '" + rec.id + "' not present in corpus '" +
                             man.corpus_path + "'");

    // evaluate every record, then fold into groups in file order
    std::vector<InstanceEval> evals(sels.records.size());
    detail::parallel_for(sels.records.size(), man.jobs, [&](std::size_t i) {
        const SelectionRecord& rec = sels.records[i];
        try {
            evals[i] = evaluate_selection(*by_id.at(rec.id), rec.selected, man.options);
        } catch (const Error& e) {
            evals[i].instance_id = rec.id;
            evals[i].errors.push_back(e.what());
        }
    });

    std::map<detail::GroupKey, std::size_t> group_of;
    std::vector<detail::GroupKey> group_keys;
    std::vector<std::vector<std::size_t>> group_records;
    for (std::size_t i = 0; i < sels.records.size(); ++i) {
        const SelectionRecord& rec = sels.records[i];
        const detail::GroupKey key{rec.selector, rec.k, rec.lambda, rec.seed};
        const auto [it, inserted] = group_of.emplace(key, group_keys.size());
        if (inserted) {
            group_keys.push_back(key);
            group_records.emplace_back();
        }
        group_records[it->second].push_back(i);
    }

    EvaluateSummary summary;
    summary.groups = group_keys.size();
    summary.records = sels.records.size();
    summary.failed_selections = sels.errors.size();

    nlohmann::ordered_json report;
    report["failed_selections"] = sels.errors.size();
    report["groups"] = nlohmann::ordered_json::array();
    std::string csv =
        "selector,k,lambda,mean_quality,min_quality,max_quality,"
        "p_bleu,distinct_1,distinct_2,distinct_3,p_cosine\n";

    for (std::size_t g = 0; g < group_keys.size(); ++g) {
        const detail::GroupKey& key = group_keys[g];
        std::vector<InstanceEval> group_evals;
        group_evals.reserve(group_records[g].size());
        for (std::size_t i : group_records[g]) group_evals.push_back(evals[i]);
        const CorpusAggregate agg = aggregate_evals(group_evals);
        summary.metric_errors += agg.error_count;

        nlohmann::ordered_json gj;
        gj["selector"] = key.selector;
        gj["k"] = key.k;
        gj["lambda"] = key.lambda;
        gj["seed"] = key.seed;
        nlohmann::ordered_json cj;
        cj["instances"] = agg.instances;
        detail::put_optional(cj, "p_bleu", agg.p_bleu);
        for (const auto& [order, value] : agg.distinct)
            cj["distinct_" + std::to_string(order)] = value;
        detail::put_optional(cj, "p_cosine", agg.p_cosine);
        if (agg.quality) {
            cj["min_quality"] = agg.quality->min;
            cj["mean_quality"] = agg.quality->mean;
            cj["max_quality"] = agg.quality->max;
        }
        cj["metric_errors"] = agg.error_count;
        gj["corpus"] = std::move(cj);
        nlohmann::ordered_json inst_array = nlohmann::ordered_json::array();
        for (const InstanceEval& ev : group_evals) {
            nlohmann::ordered_json ij;
            ij["id"] = ev.instance_id;
            detail::put_optional(ij, "p_bleu", ev.p_bleu);
            for (const auto& [order, value] : ev.distinct)
                ij["distinct_" + std::to_string(order)] = value;
            detail::put_optional(ij, "p_cosine", ev.p_cosine);
            if (ev.quality) {
                ij["min_quality"] = ev.quality->min;
                ij["mean_quality"] = ev.quality->mean;
                ij["max_quality"] = ev.quality->max;
            }
            if (!ev.errors.empty()) ij["errors"] = ev.errors;
            inst_array.push_back(std::move(ij));
        }
        gj["instances"] = std::move(inst_array);
        report["groups"].push_back(std::move(gj));

        const auto cell = [](std::optional<double> v) { return detail::csv_cell(v); };
        std::optional<double> d1, d2, d3;
        if (const auto it = agg.distinct.find(1); it != agg.distinct.end()) d1 = it->second;
        if (const auto it = agg.distinct.find(2); it != agg.distinct.end()) d2 = it->second;
        if (const auto it = agg.distinct.find(3); it != agg.distinct.end()) d3 = it->second;
        std::optional<double> qmin, qmean, qmax;
        if (agg.quality) {
            qmin = agg.quality->min;
            qmean = agg.quality->mean;
            qmax = agg.quality->max;
        }
        csv += key.selector + "," + std::to_string(key.k) + "," +
               detail::fmt_double(key.lambda) + "," + cell(qmean) + "," + cell(qmin) + "," +
               cell(qmax) + "," + cell(agg.p_bleu) + "," + cell(d1) + "," + cell(d2) + "," +
               cell(d3) + "," + cell(agg.p_cosine) + "\n";
    }

    summary.report_json = report.dump(2) + "\n";
    summary.csv = std::move(csv);
    if (!man.report_path.empty()) {
        std::ofstream out(man.report_path, std::ios::binary);
        if (!out) throw UsageError("cannot write report file '" + man.report_path + "'");
        out << summary.report_json;
        if (!out) throw UsageError("failed writing report file '" + man.report_path + "'");
    }
    if (!man.csv_path.empty()) {
        std::ofstream out(man.csv_path, std::ios::binary);
        if (!out) throw UsageError("cannot write CSV file '" + man.csv_path + "'");
        out << summary.csv;
        if (!out) throw UsageError("failed writing CSV file '" + man.csv_path + "'");
    }
    return summary;
}

}  // namespace mbrsel
