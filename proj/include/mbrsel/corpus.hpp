#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "mbrsel/core.hpp"

namespace mbrsel {

struct LoadedInstance {
    CandidateSet set;
    std::optional<UtilityMatrix> utility;  // attached from the sidecar, if any
};

namespace detail {

inline std::string at_line(const std::string& path, std::size_t line_no) {
    return path + ":" + std::to_string(line_no) + ": ";
}

inline nlohmann::json parse_json_line(const std::string& line, const std::string& path,
                                      std::size_t line_no) {
    try {
        nlohmann::json j = nlohmann::json::parse(line);
        if (!j.is_object()) throw UsageError(at_line(path, line_no) + "expected a JSON object");
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw UsageError(at_line(path, line_no) + "malformed JSON: " + e.what());
    }
}

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key,
                                           const std::string& ctx) {
    const auto it = j.find(key);
    if (it == j.end()) throw UsageError(ctx + "missing field '" + key + "'");
    return *it;
}

inline std::string require_string(const nlohmann::json& j, const char* key,
                                  const std::string& ctx) {
    const nlohmann::json& v = require_field(j, key, ctx);
    if (!v.is_string()) throw UsageError(ctx + "field '" + key + "' must be a string");
    return v.get<std::string>();
}

inline double require_number(const nlohmann::json& v, const std::string& ctx,
                             const std::string& what) {
    if (!v.is_number()) throw UsageError(ctx + what + " must be a number");
    return v.get<double>();
}

}  // namespace detail

/// Reads a JSONL corpus, one instance per line:
///   {"id": str, "source"?: str, "candidates": [{"text": str,
///    "logprob"?: num, "embedding"?: [num, ...]}, ...],
///    "references"?: [str, ...]}
/// and optionally a utility sidecar ({"id": str, "utility": [[num, ...]]})
/// whose square matrices are attached to the matching instances. All
/// structural problems throw UsageError naming file and line; instance
/// invariants are checked with validate_candidate_set.
inline std::vector<LoadedInstance> load_corpus(const std::string& path,
                                               const std::string& sidecar_path = "") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open corpus file '" + path + "'");
    std::vector<LoadedInstance> out;
    std::unordered_map<std::string, std::size_t> by_id;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const std::string ctx = detail::at_line(path, line_no);
        const nlohmann::json j = detail::parse_json_line(line, path, line_no);
        CandidateSet cs;
        cs.instance_id = detail::require_string(j, "id", ctx);
        if (const auto it = j.find("source"); it != j.end()) {
            if (!it->is_string()) throw UsageError(ctx + "field 'source' must be a string");
            cs.source = it->get<std::string>();
        }
        const nlohmann::json& cands = detail::require_field(j, "candidates", ctx);
        if (!cands.is_array()) throw UsageError(ctx + "field 'candidates' must be an array");
        for (std::size_t ci = 0; ci < cands.size(); ++ci) {
            const std::string cctx = ctx + "candidate " + std::to_string(ci) + ": ";
            const nlohmann::json& cj = cands[ci];
            if (!cj.is_object()) throw UsageError(cctx + "expected a JSON object");
            Candidate c;
            c.text = detail::require_string(cj, "text", cctx);
            if (const auto it = cj.find("logprob"); it != cj.end())
                c.logprob = detail::require_number(*it, cctx, "field 'logprob'");
            if (const auto it = cj.find("embedding"); it != cj.end()) {
                if (!it->is_array())
                    throw UsageError(cctx + "field 'embedding' must be an array of numbers");
                c.embedding.reserve(it->size());
                for (const nlohmann::json& x : *it)
                    c.embedding.push_back(
                        detail::require_number(x, cctx, "embedding entry"));
            }
            cs.candidates.push_back(std::move(c));
        }
        if (const auto it = j.find("references"); it != j.end()) {
            if (!it->is_array())
                throw UsageError(ctx + "field 'references' must be an array of strings");
            for (const nlohmann::json& r : *it) {
                if (!r.is_string())
                    throw UsageError(ctx + "field 'references' must be an array of strings");
                cs.references.push_back(r.get<std::string>());
            }
        }
        try {
            cs = validate_candidate_set(std::move(cs));
        } catch (const Error& e) {
            throw UsageError(ctx + e.what());
        }
        if (!by_id.emplace(cs.instance_id, out.size()).second)
            throw UsageError(ctx + "duplicate instance id '" + cs.instance_id + "'");
        out.push_back(LoadedInstance{std::move(cs), std::nullopt});
    }
    if (out.empty()) throw UsageError("corpus file '" + path + "' contains no instances");

    if (!sidecar_path.empty()) {
        std::ifstream side(sidecar_path, std::ios::binary);
        if (!side) throw UsageError("cannot open utility sidecar '" + sidecar_path + "'");
        std::unordered_set<std::string> seen;
        line_no = 0;
        while (std::getline(side, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.find_first_not_of(" \t") == std::string::npos) continue;
            const std::string ctx = detail::at_line(sidecar_path, line_no);
            const nlohmann::json j = detail::parse_json_line(line, sidecar_path, line_no);
            const std::string id = detail::require_string(j, "id", ctx);
            if (!seen.insert(id).second)
                throw UsageError(ctx + "duplicate sidecar id '" + id + "'");
            const auto inst = by_id.find(id);
            if (inst == by_id.end())
                throw UsageError(ctx + "sidecar id '" + id + "' not present in the corpus");
            const nlohmann::json& rows = detail::require_field(j, "utility", ctx);
            if (!rows.is_array())
                throw UsageError(ctx + "field 'utility' must be an array of rows");
            UtilityMatrix m;
            m.n = rows.size();
            m.values.reserve(m.n * m.n);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                if (!rows[r].is_array() || rows[r].size() != m.n)
                    throw UsageError(ctx + "utility matrix must be square: row " +
                                     std::to_string(r) + " has " +
                                     (rows[r].is_array() ? std::to_string(rows[r].size())
                                                         : std::string("no")) +
                                     " entries, expected " + std::to_string(m.n));
                for (const nlohmann::json& x : rows[r])
                    m.values.push_back(detail::require_number(x, ctx, "utility entry"));
            }
            try {
                out[inst->second].utility =
                    validate_utility_matrix(std::move(m), out[inst->second].set.size());
            } catch (const Error& e) {
                throw UsageError(ctx + "instance '" + id + "': " + e.what());
            }
        }
    }
    return out;
}

struct SelectionRecord {
    std::string id;
    std::string selector;
    std::size_t k = 0;
    double lambda = 0.0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> selected;
    std::vector<std::string> selected_texts;
    double objective = 0.0;
};

struct SelectionErrorRecord {
    std::string id;
    std::string error;
};

struct SelectionFile {
    std::vector<SelectionRecord> records;  // in file order
    std::vector<SelectionErrorRecord> errors;
};

namespace detail {

inline SelectionFile load_selections_stream(std::istream& in, const std::string& path) {
    SelectionFile file;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const std::string ctx = detail::at_line(path, line_no);
        const nlohmann::json j = detail::parse_json_line(line, path, line_no);
        if (j.contains("error")) {
            SelectionErrorRecord err;
            err.id = detail::require_string(j, "id", ctx);
            if (!j["error"].is_string())
                throw UsageError(ctx + "field 'error' must be a string");
            err.error = j["error"].get<std::string>();
            file.errors.push_back(std::move(err));
            continue;
        }
        SelectionRecord rec;
        rec.id = detail::require_string(j, "id", ctx);
        rec.selector = detail::require_string(j, "selector", ctx);
        const nlohmann::json& k = detail::require_field(j, "k", ctx);
        if (!k.is_number_unsigned()) throw UsageError(ctx + "field 'k' must be a nonnegative integer");
        rec.k = k.get<std::size_t>();
        rec.lambda = detail::require_number(detail::require_field(j, "lambda", ctx), ctx,
                                            "field 'lambda'");
        if (!std::isfinite(rec.lambda))
            throw UsageError(ctx + "field 'lambda' must be finite");
        const nlohmann::json& seed = detail::require_field(j, "seed", ctx);
        if (!seed.is_number_unsigned())
            throw UsageError(ctx + "field 'seed' must be a nonnegative integer");
        rec.seed = seed.get<std::uint64_t>();
        const nlohmann::json& sel = detail::require_field(j, "selected", ctx);
        if (!sel.is_array()) throw UsageError(ctx + "field 'selected' must be an array");
        for (const nlohmann::json& x : sel) {
            if (!x.is_number_unsigned())
                throw UsageError(ctx + "field 'selected' must hold nonnegative integers");
            rec.selected.push_back(x.get<std::size_t>());
        }
        if (const auto it = j.find("selected_texts"); it != j.end()) {
            if (!it->is_array())
                throw UsageError(ctx + "field 'selected_texts' must be an array of strings");
            for (const nlohmann::json& t : *it) {
                if (!t.is_string())
                    throw UsageError(ctx + "field 'selected_texts' must be an array of strings");
                rec.selected_texts.push_back(t.get<std::string>());
            }
        }
        rec.objective = detail::require_number(detail::require_field(j, "objective", ctx), ctx,
                                               "field 'objective'");
        file.records.push_back(std::move(rec));
    }
    return file;
}

}  // namespace detail

/// Reads a selections JSONL file as written by the select/oracle commands.
/// Lines carrying an "error" field are collected separately, mirroring how
/// the selector run recorded them.
inline SelectionFile load_selections(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open selections file '" + path + "'");
    return detail::load_selections_stream(in, path);
}

/// Same parse applied to in-memory JSONL (the sweep pipeline evaluates its
/// own selection lines without a file round-trip).
inline SelectionFile parse_selections(const std::string& text,
                                      const std::string& name = "<selections>") {
    std::istringstream in(text);
    return detail::load_selections_stream(in, name);
}

}  // namespace mbrsel
