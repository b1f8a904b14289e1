#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mbrsel/mbrsel.hpp"

namespace {

struct SelectArgs {
    std::string input;
    std::string sidecar;
    std::string output;
    std::string selector;
    std::string utility = "sentence_bleu";
    std::string tokenizer = "punct_split";
    bool no_lowercase = false;
    std::size_t k = 4;
    std::vector<double> lambdas;
    std::uint64_t seed = 0;
    std::size_t max_iter = 300;
    std::string prob_mode = "normalized";
    bool dedup = false;
    int jobs = 1;
};

struct EvalArgs {
    std::string input;
    std::string selections;
    std::string output;  // JSON report; stdout when empty
    std::string csv;
    std::string tokenizer = "punct_split";
    bool no_lowercase = false;
    std::string quality_metric = "sentence_bleu";
    std::string quality = "auto";
    std::string p_cosine = "auto";
    int jobs = 1;
};

mbrsel::UtilityMetric parse_metric(const std::string& s) {
    if (s == "sentence_bleu") return mbrsel::UtilityMetric::sentence_bleu;
    if (s == "unigram_f1") return mbrsel::UtilityMetric::unigram_f1;
    if (s == "embedding_cosine") return mbrsel::UtilityMetric::embedding_cosine;
    if (s == "precomputed") return mbrsel::UtilityMetric::precomputed;
    throw mbrsel::UsageError("unknown utility '" + s + "'");
}

mbrsel::SelectorKind parse_selector(const std::string& s) {
    if (s == "mbr_topk") return mbrsel::SelectorKind::mbr_topk;
    if (s == "dmbr") return mbrsel::SelectorKind::dmbr;
    if (s == "kmbr") return mbrsel::SelectorKind::kmbr;
    if (s == "oversample") return mbrsel::SelectorKind::oversample;
    throw mbrsel::UsageError("unknown selector '" + s + "'");
}

mbrsel::OracleObjective parse_objective(const std::string& s) {
    if (s == "dmbr") return mbrsel::OracleObjective::dmbr;
    if (s == "kmbr") return mbrsel::OracleObjective::kmbr;
    if (s == "oversample") return mbrsel::OracleObjective::oversample;
    throw mbrsel::UsageError("unknown oracle objective '" + s + "'");
}

mbrsel::MetricRequest parse_request(const std::string& s) {
    if (s == "off") return mbrsel::MetricRequest::off;
    if (s == "auto") return mbrsel::MetricRequest::if_available;
    if (s == "on") return mbrsel::MetricRequest::required;
    throw mbrsel::UsageError("unknown metric switch '" + s + "'");
}

mbrsel::TokenizerOptions make_tokenizer(const std::string& mode, bool no_lowercase) {
    mbrsel::TokenizerOptions tok;
    tok.mode = mode == "whitespace" ? mbrsel::TokenizerMode::whitespace
                                    : mbrsel::TokenizerMode::punct_split;
    tok.lowercase = !no_lowercase;
    return tok;
}

std::vector<double> checked_lambdas(std::vector<double> lambdas,
                                    const std::vector<double>& fallback) {
    if (lambdas.empty()) lambdas = fallback;
    for (double l : lambdas)
        if (!std::isfinite(l) || l < 0.0)
            throw mbrsel::UsageError("--lambda values must be finite and >= 0");
    return lambdas;
}

mbrsel::RunManifest make_select_manifest(const SelectArgs& a, mbrsel::SelectorKind kind,
                                         const std::vector<double>& default_lambdas) {
    if (a.k == 0) throw mbrsel::UsageError("--k must be >= 1");
    if (a.max_iter == 0) throw mbrsel::UsageError("--max-iter must be >= 1");
    mbrsel::RunManifest man;
    man.corpus_path = a.input;
    man.sidecar_path = a.sidecar;
    man.output_path = a.output;
    man.utility.metric = parse_metric(a.utility);
    man.utility.tokenizer = make_tokenizer(a.tokenizer, a.no_lowercase);
    man.dedup = a.dedup;
    man.jobs = a.jobs;
    for (double l : checked_lambdas(a.lambdas, default_lambdas)) {
        mbrsel::SelectorConfig cfg;
        cfg.kind = kind;
        cfg.k = a.k;
        cfg.lambda = l;
        cfg.seed = a.seed;
        cfg.max_iter = a.max_iter;
        cfg.prob_mode = a.prob_mode == "raw" ? mbrsel::ProbMode::raw
                                             : mbrsel::ProbMode::normalized;
        man.configs.push_back(cfg);
    }
    return man;
}

void add_select_flags(CLI::App* cmd, SelectArgs& a, bool with_selector) {
    cmd->add_option("-i,--input", a.input, "candidate corpus (JSONL)")->required();
    cmd->add_option("--sidecar", a.sidecar, "precomputed utility sidecar (JSONL)");
    cmd->add_option("-o,--output", a.output, "selections output (JSONL)")->required();
    if (with_selector)
        cmd->add_option("--selector", a.selector, "selection algorithm")
            ->required()
            ->check(CLI::IsMember({"mbr_topk", "dmbr", "kmbr", "oversample"}));
    cmd->add_option("--utility", a.utility, "pairwise utility")
        ->capture_default_str()
        ->check(CLI::IsMember(
            {"sentence_bleu", "unigram_f1", "embedding_cosine", "precomputed"}));
    cmd->add_option("--tokenizer", a.tokenizer, "tokenizer mode")
        ->capture_default_str()
        ->check(CLI::IsMember({"punct_split", "whitespace"}));
    cmd->add_flag("--no-lowercase", a.no_lowercase, "keep original casing");
    cmd->add_option("-k,--k", a.k, "selection size")->capture_default_str();
    cmd->add_option("--lambda", a.lambdas,
                    "diversity strength; repeat for a grid (default 0)");
    cmd->add_option("--seed", a.seed, "run seed")->capture_default_str();
    cmd->add_option("--max-iter", a.max_iter, "swap iteration cap (kmbr)")
        ->capture_default_str();
    cmd->add_option("--prob-mode", a.prob_mode, "oversample probability mode")
        ->capture_default_str()
        ->check(CLI::IsMember({"raw", "normalized"}));
    cmd->add_flag("--dedup", a.dedup, "drop exact-duplicate candidate texts first");
    cmd->add_option("-j,--jobs", a.jobs, "worker threads")
        ->capture_default_str()
        ->envname("MBRSEL_JOBS")
        ->check(CLI::Range(1, 256));
}

void add_eval_flags(CLI::App* cmd, EvalArgs& a, bool selections_file) {
    cmd->add_option("-i,--input", a.input, "candidate corpus (JSONL)")->required();
    if (selections_file)
        cmd->add_option("--selections", a.selections, "selections to score (JSONL)")
            ->required();
    cmd->add_option("--tokenizer", a.tokenizer, "tokenizer mode")
        ->capture_default_str()
        ->check(CLI::IsMember({"punct_split", "whitespace"}));
    cmd->add_flag("--no-lowercase", a.no_lowercase, "keep original casing");
    cmd->add_option("--quality-metric", a.quality_metric, "reference-based quality metric")
        ->capture_default_str()
        ->check(CLI::IsMember({"sentence_bleu", "unigram_f1"}));
    cmd->add_option("--quality", a.quality, "quality metrics: off, auto, on")
        ->capture_default_str()
        ->check(CLI::IsMember({"off", "auto", "on"}));
    cmd->add_option("--p-cosine", a.p_cosine, "embedding diversity: off, auto, on")
        ->capture_default_str()
        ->check(CLI::IsMember({"off", "auto", "on"}));
    cmd->add_option("-j,--jobs", a.jobs, "worker threads")
        ->capture_default_str()
        ->envname("MBRSEL_JOBS")
        ->check(CLI::Range(1, 256));
}

mbrsel::EvalOptions make_eval_options(const EvalArgs& a) {
    mbrsel::EvalOptions opt;
    opt.tokenizer = make_tokenizer(a.tokenizer, a.no_lowercase);
    opt.quality_metric = parse_metric(a.quality_metric);
    opt.quality = parse_request(a.quality);
    opt.embedding_diversity = parse_request(a.p_cosine);
    return opt;
}

int run_select_cmd(const SelectArgs& a) {
    const mbrsel::RunManifest man =
        make_select_manifest(a, parse_selector(a.selector), {0.0});
    const mbrsel::RunSummary s = mbrsel::run_select(man);
    std::cerr << "select: " << s.instances << " instances x " << man.configs.size()
              << " configs -> " << s.lines << " lines (" << s.failed << " failed): "
              << a.output << "\n";
    return s.failed > 0 ? 1 : 0;
}

int run_oracle_cmd(const SelectArgs& a, const std::string& objective) {
    mbrsel::RunManifest man = make_select_manifest(a, mbrsel::SelectorKind::oracle, {0.0});
    man.oracle_objective = parse_objective(objective);
    const mbrsel::RunSummary s = mbrsel::run_select(man);
    std::cerr << "oracle: " << s.instances << " instances x " << man.configs.size()
              << " configs -> " << s.lines << " lines (" << s.failed << " failed): "
              << a.output << "\n";
    return s.failed > 0 ? 1 : 0;
}

int run_evaluate_cmd(const EvalArgs& a) {
    mbrsel::EvaluateManifest man;
    man.corpus_path = a.input;
    man.selections_path = a.selections;
    man.report_path = a.output;
    man.csv_path = a.csv;
    man.options = make_eval_options(a);
    man.jobs = a.jobs;
    const mbrsel::EvaluateSummary s = mbrsel::run_evaluate(man);
    if (a.output.empty()) std::cout << s.report_json;
    std::cerr << "evaluate: " << s.records << " selections in " << s.groups
              << " groups, " << s.metric_errors << " metric errors, "
              << s.failed_selections << " failed selections\n";
    return s.metric_errors > 0 ? 1 : 0;
}

int run_sweep_cmd(const SelectArgs& a, const EvalArgs& e, const std::string& selections_out,
                  const std::string& report_out) {
    static const std::vector<double> kDefaultGrid = {0.0, 0.1, 0.3, 0.5, 1.0, 2.0};
    SelectArgs sel = a;
    sel.output = selections_out;  // may be empty: keep the lines in memory
    mbrsel::RunManifest man =
        make_select_manifest(sel, parse_selector(a.selector), kDefaultGrid);
    man.output_path = selections_out;
    const mbrsel::RunSummary rs = mbrsel::run_select(man);

    mbrsel::EvaluateManifest em;
    em.corpus_path = a.input;
    em.selections_text = rs.jsonl;
    em.report_path = report_out;
    em.csv_path = a.output;
    em.options = make_eval_options(e);
    em.options.tokenizer = make_tokenizer(a.tokenizer, a.no_lowercase);
    em.jobs = a.jobs;
    const mbrsel::EvaluateSummary es = mbrsel::run_evaluate(em);
    std::cerr << "sweep: " << rs.instances << " instances x " << man.configs.size()
              << " lambdas -> " << es.groups << " groups (" << rs.failed
              << " failed selections, " << es.metric_errors << " metric errors): "
              << a.output << "\n";
    return (rs.failed > 0 || es.metric_errors > 0) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diverse k-subset selection from candidate pools by expected utility"};
    app.require_subcommand(1);

    SelectArgs select_args;
    CLI::App* select_cmd =
        app.add_subcommand("select", "run a selector over a corpus");
    add_select_flags(select_cmd, select_args, /*with_selector=*/true);

    EvalArgs eval_args;
    CLI::App* eval_cmd =
        app.add_subcommand("evaluate", "score a selections file against its corpus");
    add_eval_flags(eval_cmd, eval_args, /*selections_file=*/true);
    eval_cmd->add_option("-o,--output", eval_args.output,
                         "JSON report path (stdout when omitted)");
    eval_cmd->add_option("--csv", eval_args.csv, "summary CSV path");

    SelectArgs sweep_args;
    EvalArgs sweep_eval;
    std::string sweep_selections, sweep_report;
    CLI::App* sweep_cmd = app.add_subcommand(
        "sweep", "run a lambda grid for one selector and emit the summary CSV");
    sweep_args.selector = "dmbr";
    add_select_flags(sweep_cmd, sweep_args, /*with_selector=*/false);
    sweep_cmd->add_option("--selector", sweep_args.selector, "selection algorithm")
        ->capture_default_str()
        ->check(CLI::IsMember({"mbr_topk", "dmbr", "kmbr", "oversample"}));
    sweep_cmd->add_option("--selections", sweep_selections,
                          "also write the intermediate selections (JSONL)");
    sweep_cmd->add_option("--report", sweep_report, "also write the JSON report");
    sweep_cmd->add_option("--quality-metric", sweep_eval.quality_metric,
                          "reference-based quality metric")
        ->capture_default_str()
        ->check(CLI::IsMember({"sentence_bleu", "unigram_f1"}));
    sweep_cmd->add_option("--quality", sweep_eval.quality, "quality metrics: off, auto, on")
        ->capture_default_str()
        ->check(CLI::IsMember({"off", "auto", "on"}));
    sweep_cmd->add_option("--p-cosine", sweep_eval.p_cosine,
                          "embedding diversity: off, auto, on")
        ->capture_default_str()
        ->check(CLI::IsMember({"off", "auto", "on"}));

    SelectArgs oracle_args;
    std::string oracle_objective;
    CLI::App* oracle_cmd = app.add_subcommand(
        "oracle", "exhaustive optimum of a set objective over all k-subsets");
    add_select_flags(oracle_cmd, oracle_args, /*with_selector=*/false);
    oracle_cmd->add_option("--objective", oracle_objective, "set objective to maximize")
        ->required()
        ->check(CLI::IsMember({"dmbr", "kmbr", "oversample"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (select_cmd->parsed()) return run_select_cmd(select_args);
        if (eval_cmd->parsed()) return run_evaluate_cmd(eval_args);
        if (sweep_cmd->parsed())
            return run_sweep_cmd(sweep_args, sweep_eval, sweep_selections, sweep_report);
        if (oracle_cmd->parsed()) return run_oracle_cmd(oracle_args, oracle_objective);
    } catch (const mbrsel::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
