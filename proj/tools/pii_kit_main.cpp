// pii-kit: command-line front end binding the annotation toolkit together.
//
// Exit codes: 0 success, 1 validation failure, 2 configuration error.
// Diagnostics go to standard error; a RunManifest is written next to every
// produced artifact.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pii/errors.hpp"
#include "pii/evaluation.hpp"
#include "pii/exemplar_store.hpp"
#include "pii/generator.hpp"
#include "pii/http_model.hpp"
#include "pii/llm_gateway.hpp"
#include "pii/manifest.hpp"
#include "pii/mock_provider.hpp"
#include "pii/pipeline.hpp"
#include "pii/preprocess.hpp"
#include "pii/taxonomy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kValidationFailure = 1;
constexpr int kConfigError = 2;

void log_err(const std::string& msg) { std::cerr << "[pii-kit] error: " << msg << "\n"; }
void log_info(const std::string& msg) { std::cerr << "[pii-kit] " << msg << "\n"; }

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Settings resolved with precedence: CLI flags > environment > config file >
// defaults. The CLI layer records which flags were given explicitly.
struct Settings {
    pii::ProviderConfig provider;      // includes retry policy
    std::string provider_flag;         // "", "mock", "mock:synth", "mock:echo", "openai"
    pii::RetrievalConfig retrieval;
    double correction_threshold = 0.85;
    double tau = 0.8;
    std::uint64_t seed = 0;
    int attempts_per_item = 3;
    std::string prompts_dir;
};

Settings load_settings(const std::string& config_path) {
    Settings s;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("cannot open config file: " + config_path);
        json doc;
        try {
            in >> doc;
        } catch (const std::exception& e) {
            throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
        }
        if (doc.contains("provider")) {
            const auto& p = doc["provider"];
            s.provider.kind = p.value("kind", s.provider.kind);
            s.provider.base_url = p.value("base_url", s.provider.base_url);
            s.provider.api_key = p.value("api_key", s.provider.api_key);
            s.provider.model = p.value("model", s.provider.model);
            s.provider.embed_model = p.value("embed_model", s.provider.embed_model);
            s.provider.max_in_flight = p.value("max_in_flight", s.provider.max_in_flight);
            if (p.contains("retry")) {
                const auto& r = p["retry"];
                s.provider.retry.max_attempts = r.value("max_attempts", s.provider.retry.max_attempts);
                s.provider.retry.backoff_ms = r.value("backoff_ms", s.provider.retry.backoff_ms);
                s.provider.retry.jitter = r.value("jitter", s.provider.retry.jitter);
            }
        }
        if (doc.contains("retrieval")) {
            s.retrieval.k = doc["retrieval"].value("k", s.retrieval.k);
            s.retrieval.max_n = doc["retrieval"].value("max_n", s.retrieval.max_n);
        }
        s.correction_threshold = doc.value("correction_threshold", s.correction_threshold);
        s.tau = doc.value("tau", s.tau);
        s.seed = doc.value("seed", s.seed);
        s.attempts_per_item = doc.value("attempts_per_item", s.attempts_per_item);
        s.prompts_dir = doc.value("prompts_dir", s.prompts_dir);
    }
    // Environment overrides the config file.
    s.provider = pii::provider_config_from_env(s.provider);
    return s;
}

// `gold` feeds the echo mock; remote and synthetic providers ignore it.
std::shared_ptr<pii::Gateway> make_gateway(const Settings& s,
                                           const std::vector<pii::AnnotatedMessage>* gold) {
    std::string kind = s.provider_flag.empty() ? s.provider.kind : s.provider_flag;
    std::shared_ptr<pii::Provider> provider;
    if (kind == "openai") {
        if (s.provider.base_url.empty())
            throw ConfigError("provider \"openai\" needs a base URL (PII_KIT_API_BASE or config)");
        provider = pii::make_openai_provider(s.provider);
    } else if (kind == "mock" || kind == "mock:synth" || kind == "mock:echo") {
        provider = pii::make_mock_provider(kind, gold, s.seed);
    } else {
        throw ConfigError("unknown provider kind: " + kind);
    }
    auto gw = std::make_shared<pii::Gateway>(provider, s.provider.retry);
    gw->set_max_in_flight(s.provider.max_in_flight);
    return gw;
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::exists(path)) throw ConfigError(what + " not found: " + path);
}

std::string redacted_provider_id(const Settings& s) {
    std::string kind = s.provider_flag.empty() ? s.provider.kind : s.provider_flag;
    std::string id = kind;
    if (!s.provider.model.empty()) id += " model=" + s.provider.model;
    if (!s.provider.base_url.empty()) id += " base=" + s.provider.base_url;
    return id;  // never the key
}

pii::RunManifest start_manifest(const std::string& command, const Settings& s, json config_extra) {
    pii::RunManifest m;
    m.command = command;
    m.started_at = pii::utc_now_iso8601();
    m.provider_id = redacted_provider_id(s);
    m.seed = s.seed;
    config_extra["correction_threshold"] = s.correction_threshold;
    config_extra["tau"] = s.tau;
    config_extra["retrieval"] = {{"k", s.retrieval.k}, {"max_n", s.retrieval.max_n}};
    m.config_json = config_extra.dump();
    return m;
}

void finish_manifest(pii::RunManifest& m, const std::string& path) {
    m.finished_at = pii::utc_now_iso8601();
    pii::save_manifest(path, m);
}

// ---- subcommand bodies ----------------------------------------------------

int cmd_validate_taxonomy(const std::string& path) {
    require_file(path, "taxonomy file");
    try {
        auto t = pii::load_taxonomy(path);
        log_info("taxonomy \"" + t.name() + "\" valid: " + std::to_string(t.size()) + " labels");
        return kOk;
    } catch (const pii::Error& e) {
        log_err(std::string("invalid taxonomy: ") + e.what());
        return kValidationFailure;
    }
}

int cmd_validate_dataset(const std::string& path, const std::string& taxonomy_path) {
    require_file(path, "dataset file");
    std::optional<pii::Taxonomy> taxonomy;
    if (!taxonomy_path.empty()) {
        require_file(taxonomy_path, "taxonomy file");
        taxonomy = pii::load_taxonomy(taxonomy_path);
    }
    std::vector<pii::DatasetIssue> issues;
    auto msgs = pii::load_dataset(path, taxonomy ? &*taxonomy : nullptr, &issues);
    for (const auto& i : issues) log_err("record " + i.id + ": " + i.detail);
    log_info(std::to_string(msgs.size()) + " valid records, " + std::to_string(issues.size()) +
             " issues");
    return issues.empty() ? kOk : kValidationFailure;
}

int cmd_normalize(const Settings& s, const std::string& dataset, const std::string& out) {
    require_file(dataset, "dataset file");
    auto msgs = pii::load_dataset(dataset);
    auto m = start_manifest("normalize", s, {});
    m.input_digests[dataset] = pii::file_digest(dataset);

    std::ofstream os(out, std::ios::binary | std::ios::trunc);
    if (!os) throw ConfigError("cannot write output: " + out);
    for (const auto& am : msgs) {
        pii::NormalizeOptions opts;
        auto nb = pii::normalize_body(am.message.body, opts);
        json spans = json::array();
        for (const auto& sp : nb.span_map)
            spans.push_back({{"orig_start", sp.orig_start},
                             {"orig_end", sp.orig_end},
                             {"norm_start", sp.norm_start},
                             {"norm_end", sp.norm_end},
                             {"transform", pii::to_string(sp.transform)}});
        json rec = {{"id", am.id},
                    {"original", nb.original},
                    {"normalized", nb.normalized},
                    {"span_map", spans}};
        os << rec.dump() << "\n";
    }
    os.close();
    m.output_digests[out] = pii::file_digest(out);
    finish_manifest(m, out + ".manifest.json");
    log_info("normalized " + std::to_string(msgs.size()) + " records -> " + out);
    return kOk;
}

int cmd_generate(const Settings& s, const std::string& taxonomy_path, std::size_t scenarios,
                 std::size_t requests_per_scenario, bool responses, const std::string& out_dir) {
    require_file(taxonomy_path, "taxonomy file");
    auto taxonomy = pii::load_taxonomy(taxonomy_path);
    auto gateway = make_gateway(s, nullptr);

    fs::create_directories(out_dir);
    auto m = start_manifest("generate", s,
                            {{"scenarios", scenarios},
                             {"requests_per_scenario", requests_per_scenario},
                             {"responses", responses},
                             {"attempts_per_item", s.attempts_per_item}});
    m.input_digests[taxonomy_path] = pii::file_digest(taxonomy_path);

    pii::GeneratorConfig gcfg;
    gcfg.seed = s.seed;
    gcfg.attempts_per_item = s.attempts_per_item;
    pii::SynthGenerator gen(taxonomy, gateway, gcfg);

    auto scen = gen.generate_scenarios(scenarios);
    std::vector<pii::AnnotatedMessage> corpus;
    for (const auto& sc : scen) {
        auto reqs = gen.generate_requests(sc, requests_per_scenario);
        for (auto& r : reqs) {
            if (responses) {
                try {
                    corpus.push_back(gen.generate_response(r, sc));
                } catch (const pii::GenerationBudgetExhausted& e) {
                    log_err(e.what());
                }
            }
            corpus.push_back(std::move(r));
        }
    }

    const std::string scen_path = out_dir + "/scenarios.json";
    const std::string req_path = out_dir + "/requests.jsonl";
    const std::string resp_path = out_dir + "/responses.jsonl";
    const std::string cov_path = out_dir + "/coverage.json";

    {
        std::ofstream os(scen_path, std::ios::binary | std::ios::trunc);
        os << pii::serialize_scenarios(scen) << "\n";
    }
    std::vector<pii::AnnotatedMessage> reqs, resps;
    for (auto& am : corpus)
        (am.message.kind == pii::MessageKind::request ? reqs : resps).push_back(am);
    pii::save_dataset(req_path, reqs);
    if (responses) pii::save_dataset(resp_path, resps);
    {
        std::ofstream os(cov_path, std::ios::binary | std::ios::trunc);
        os << pii::serialize_coverage(pii::coverage_report(corpus, scen, taxonomy)) << "\n";
    }

    m.output_digests[scen_path] = pii::file_digest(scen_path);
    m.output_digests[req_path] = pii::file_digest(req_path);
    if (responses) m.output_digests[resp_path] = pii::file_digest(resp_path);
    m.output_digests[cov_path] = pii::file_digest(cov_path);
    finish_manifest(m, out_dir + "/manifest.json");

    for (const auto& f : gen.failures()) log_err("generation: " + f.context + ": " + f.reason);
    log_info("generated " + std::to_string(scen.size()) + " scenarios, " +
             std::to_string(reqs.size()) + " requests, " + std::to_string(resps.size()) +
             " responses -> " + out_dir);
    const bool complete = scen.size() == scenarios &&
                          reqs.size() == scen.size() * requests_per_scenario;
    return complete ? kOk : kValidationFailure;
}

int cmd_split(const Settings& s, const std::string& in, double ratio, std::uint64_t seed,
              const std::string& out_eval, const std::string& out_examples) {
    require_file(in, "input dataset");
    auto corpus = pii::load_dataset(in);
    auto m = start_manifest("split", s, {{"ratio", ratio}});
    m.seed = seed;
    m.input_digests[in] = pii::file_digest(in);

    auto result = pii::stratified_split(corpus, ratio, seed);
    pii::save_dataset(out_eval, result.evaluation_set);
    pii::save_dataset(out_examples, result.example_set);

    m.output_digests[out_eval] = pii::file_digest(out_eval);
    m.output_digests[out_examples] = pii::file_digest(out_examples);
    finish_manifest(m, out_eval + ".manifest.json");
    log_info("split " + std::to_string(corpus.size()) + " -> " +
             std::to_string(result.evaluation_set.size()) + " evaluation / " +
             std::to_string(result.example_set.size()) +
             " examples (max label slack " + std::to_string(result.max_label_slack) + ")");
    return kOk;
}

int cmd_build_store(const Settings& s, const std::string& examples, const std::string& out) {
    require_file(examples, "example set");
    auto msgs = pii::load_dataset(examples);
    auto gateway = make_gateway(s, &msgs);
    auto m = start_manifest("build-store", s, {});
    m.input_digests[examples] = pii::file_digest(examples);

    auto store = pii::ExemplarStore::build(msgs, *gateway);
    store.save(out);

    m.output_digests[out] = pii::file_digest(out);
    finish_manifest(m, out + ".manifest.json");
    log_info("exemplar store: " + std::to_string(store.size()) + " exemplars, dimension " +
             std::to_string(store.dimension()) + " -> " + out);
    return kOk;
}

int cmd_annotate(const Settings& s, const std::string& dataset, const std::string& taxonomy_path,
                 const std::string& examples, const std::string& mode, bool review,
                 const std::string& out_dir) {
    require_file(dataset, "dataset file");
    require_file(taxonomy_path, "taxonomy file");
    auto taxonomy = pii::load_taxonomy(taxonomy_path);
    auto msgs = pii::load_dataset(dataset, &taxonomy);
    auto store = std::make_shared<pii::ExemplarStore>();
    if (!examples.empty()) {
        require_file(examples, "exemplar store");
        *store = pii::ExemplarStore::load(examples);
    }
    auto gateway = make_gateway(s, &msgs);

    pii::PipelineConfig cfg;
    cfg.mode = (mode == "single") ? pii::PipelineMode::single_stage : pii::PipelineMode::two_stage;
    cfg.review_enabled = review;
    cfg.retrieval = s.retrieval;
    cfg.correction_threshold = s.correction_threshold;
    cfg.checkpoint_dir = out_dir;
    if (!s.prompts_dir.empty()) cfg.prompts = pii::load_prompts(s.prompts_dir);

    fs::create_directories(out_dir);
    auto m = start_manifest("annotate", s, {{"mode", mode}, {"review", review}});
    m.input_digests[dataset] = pii::file_digest(dataset);
    m.input_digests[taxonomy_path] = pii::file_digest(taxonomy_path);
    if (!examples.empty()) m.input_digests[examples] = pii::file_digest(examples);

    pii::AnnotationPipeline pipeline(taxonomy, gateway, store, cfg);
    auto stages = pipeline.run(msgs);

    std::size_t failed = 0;
    for (const auto& [stage, records] : stages) {
        m.output_digests[out_dir + "/" + stage + ".jsonl"] =
            pii::file_digest(out_dir + "/" + stage + ".jsonl");
        for (const auto& r : records)
            if (r.failed) ++failed;
    }
    finish_manifest(m, out_dir + "/manifest.json");
    log_info("annotated " + std::to_string(msgs.size()) + " messages across " +
             std::to_string(stages.size()) + " stages (" + std::to_string(failed) +
             " per-message failures) -> " + out_dir);
    return failed == 0 ? kOk : kValidationFailure;
}

int cmd_evaluate(const Settings& s, const std::string& gold, const std::string& run_dir,
                 double tau, const std::string& out) {
    require_file(gold, "gold dataset");
    if (!fs::is_directory(run_dir)) throw ConfigError("run directory not found: " + run_dir);
    auto m = start_manifest("evaluate", s, {{"tau", tau}});
    m.input_digests[gold] = pii::file_digest(gold);

    auto report = pii::evaluate_run(run_dir, gold, tau);
    {
        std::ofstream os(out, std::ios::binary | std::ios::trunc);
        if (!os) throw ConfigError("cannot write report: " + out);
        os << pii::serialize_report(report) << "\n";
    }
    m.output_digests[out] = pii::file_digest(out);
    finish_manifest(m, out + ".manifest.json");

    for (const auto& [stage, sm] : report.stages) {
        std::ostringstream line;
        line << stage << ":";
        if (sm.label) line << " label F1=" << sm.label->f1;
        if (sm.exact) line << " exact F1=" << sm.exact->f1;
        if (sm.fuzzy) line << " fuzzy F1=" << sm.fuzzy->f1;
        log_info(line.str());
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"PII annotation toolkit for HTTP traffic"};
    app.require_subcommand(1);

    std::string config_path, provider_flag, prompts_dir;
    std::uint64_t seed = 0;
    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--provider", provider_flag,
                   "provider kind: mock, mock:synth, mock:echo, openai");
    auto* seed_opt = app.add_option("--seed", seed, "random seed");
    app.add_option("--prompts", prompts_dir, "directory with prompt templates");

    // validate
    auto* validate = app.add_subcommand("validate", "check a taxonomy or dataset file");
    validate->require_subcommand(1);
    std::string vt_path;
    auto* vtax = validate->add_subcommand("taxonomy", "validate a taxonomy document");
    vtax->add_option("path", vt_path, "taxonomy JSON file")->required();
    std::string vd_path, vd_taxonomy;
    auto* vdata = validate->add_subcommand("dataset", "validate a JSONL dataset");
    vdata->add_option("path", vd_path, "dataset JSONL file")->required();
    vdata->add_option("--taxonomy", vd_taxonomy, "taxonomy to check labels against");

    // normalize
    std::string nz_dataset, nz_out;
    auto* normalize = app.add_subcommand("normalize", "decode bodies and emit span maps");
    normalize->add_option("dataset", nz_dataset, "dataset JSONL file")->required();
    normalize->add_option("--out", nz_out, "output JSONL path")->required();

    // generate
    std::string g_taxonomy, g_out;
    std::size_t g_scenarios = 5, g_requests = 20;
    bool g_responses = false;
    auto* generate = app.add_subcommand("generate", "synthesize a labelled corpus");
    generate->add_option("--taxonomy", g_taxonomy, "taxonomy JSON file")->required();
    generate->add_option("--scenarios", g_scenarios, "number of scenario templates");
    generate->add_option("--requests-per-scenario", g_requests, "requests per scenario");
    generate->add_flag("--responses", g_responses, "also generate responses");
    generate->add_option("--out", g_out, "output directory")->required();

    // split
    std::string sp_in, sp_eval, sp_examples;
    double sp_ratio = 0.8;
    auto* split = app.add_subcommand("split", "stratified evaluation/example split");
    split->add_option("--in", sp_in, "input dataset JSONL")->required();
    split->add_option("--ratio", sp_ratio, "evaluation-set share");
    split->add_option("--out-eval", sp_eval, "evaluation set path")->required();
    split->add_option("--out-examples", sp_examples, "example set path")->required();

    // build-store
    std::string bs_in, bs_out;
    auto* build_store = app.add_subcommand("build-store", "embed an example set into a store");
    build_store->add_option("examples", bs_in, "example set JSONL")->required();
    build_store->add_option("--out", bs_out, "store output path")->required();

    // annotate
    std::string an_dataset, an_taxonomy, an_examples, an_mode = "two", an_out;
    bool an_review = false;
    auto* annotate = app.add_subcommand("annotate", "run the annotation pipeline");
    annotate->add_option("--dataset", an_dataset, "dataset JSONL")->required();
    annotate->add_option("--taxonomy", an_taxonomy, "taxonomy JSON file")->required();
    annotate->add_option("--examples", an_examples, "exemplar store JSONL");
    annotate->add_option("--mode", an_mode, "single or two")
        ->check(CLI::IsMember({"single", "two"}));
    annotate->add_flag("--review", an_review, "enable the review stage");
    annotate->add_option("--out", an_out, "checkpoint output directory")->required();

    // evaluate
    std::string ev_gold, ev_run, ev_out;
    double ev_tau = 0.8;
    auto* evaluate = app.add_subcommand("evaluate", "score checkpoints against gold");
    evaluate->add_option("--gold", ev_gold, "gold dataset JSONL")->required();
    evaluate->add_option("--run", ev_run, "checkpoint directory")->required();
    auto* tau_opt = evaluate->add_option("--tau", ev_tau, "fuzzy-match threshold");
    evaluate->add_option("--out", ev_out, "report JSON path")->required();

    // Accept the global flags (--seed, --provider, ...) after the subcommand
    // name too, as in `split --in a.jsonl --seed 7`.
    for (auto* sub : app.get_subcommands({})) {
        sub->fallthrough();
        for (auto* nested : sub->get_subcommands({})) nested->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kConfigError;
    }

    try {
        Settings s = load_settings(config_path);
        if (!provider_flag.empty()) s.provider_flag = provider_flag;
        if (seed_opt->count() > 0) s.seed = seed;
        if (!prompts_dir.empty()) s.prompts_dir = prompts_dir;
        if (tau_opt->count() > 0) s.tau = ev_tau;
        else ev_tau = s.tau;

        if (vtax->parsed()) return cmd_validate_taxonomy(vt_path);
        if (vdata->parsed()) return cmd_validate_dataset(vd_path, vd_taxonomy);
        if (normalize->parsed()) return cmd_normalize(s, nz_dataset, nz_out);
        if (generate->parsed())
            return cmd_generate(s, g_taxonomy, g_scenarios, g_requests, g_responses, g_out);
        if (split->parsed()) return cmd_split(s, sp_in, sp_ratio, s.seed, sp_eval, sp_examples);
        if (build_store->parsed()) return cmd_build_store(s, bs_in, bs_out);
        if (annotate->parsed())
            return cmd_annotate(s, an_dataset, an_taxonomy, an_examples, an_mode, an_review,
                                an_out);
        if (evaluate->parsed()) return cmd_evaluate(s, ev_gold, ev_run, ev_tau, ev_out);
        log_err("no subcommand given");
        return kConfigError;
    } catch (const ConfigError& e) {
        log_err(e.what());
        return kConfigError;
    } catch (const pii::Infeasible& e) {
        log_err(e.what());
        return kValidationFailure;
    } catch (const pii::Error& e) {
        log_err(e.what());
        return kValidationFailure;
    } catch (const std::exception& e) {
        log_err(e.what());
        return kValidationFailure;
    }
}
