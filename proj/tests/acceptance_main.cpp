// Acceptance harness: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Each check is self-contained and uses only deterministic
// mock providers, so the whole run needs no network access.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pii/embedding.hpp"
#include "pii/errors.hpp"
#include "pii/evaluation.hpp"
#include "pii/exemplar_store.hpp"
#include "pii/generator.hpp"
#include "pii/http_model.hpp"
#include "pii/mock_provider.hpp"
#include "pii/output_validation.hpp"
#include "pii/pipeline.hpp"
#include "pii/preprocess.hpp"
#include "pii/taxonomy.hpp"

using namespace pii;
using nlohmann::json;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail = "") {
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << number << ": " << name;
    if (!ok && !detail.empty()) std::cout << " — " << detail;
    std::cout << std::endl;
    if (!ok) ++g_failures;
}

AnnotatedMessage make_msg(const std::string& id,
                          const std::vector<std::pair<std::string, std::string>>& anns) {
    AnnotatedMessage am;
    am.id = id;
    am.message.kind = MessageKind::request;
    am.message.method = "POST";
    am.message.path = "/";
    for (const auto& [l, v] : anns) {
        am.message.body += v + " ";
        am.annotations.push_back({l, v, Placement::body});
    }
    return am;
}

// --- criterion 1: metric oracle equivalence --------------------------------

bool criterion_metrics(std::string& detail) {
    std::mt19937 rng(20260823);
    const std::vector<std::string> labels = {"L0", "L1", "L2", "L3", "L4", "L5"};
    const std::vector<std::string> values = {"alpha",  "alpha1", "alfa", "beta",
                                             "betta",  "gamma",  "gama", "delta",
                                             "de1ta",  "omega"};
    auto t0 = std::chrono::steady_clock::now();

    for (int trial = 0; trial < 1200; ++trial) {
        std::vector<std::pair<std::string, std::string>> gold, pred;
        int ng = static_cast<int>(rng() % 9), np = static_cast<int>(rng() % 9);
        for (int i = 0; i < ng; ++i)
            gold.push_back({labels[rng() % labels.size()], values[rng() % values.size()]});
        for (int i = 0; i < np; ++i)
            pred.push_back({labels[rng() % labels.size()], values[rng() % values.size()]});
        double tau = 0.4 + 0.6 * static_cast<double>(rng() % 100) / 100.0;

        auto g = make_msg("m", gold);
        auto p = make_msg("m", pred);

        // label-level oracle: unique label sets
        {
            std::set<std::string> gs, ps;
            for (const auto& [l, v] : gold) gs.insert(l);
            for (const auto& [l, v] : pred) ps.insert(l);
            std::uint64_t tp = 0;
            for (const auto& l : gs) tp += ps.count(l);
            ConfusionCounts want{tp, ps.size() - tp, gs.size() - tp};
            if (!(label_counts(g, p) == want)) {
                detail = "label_counts mismatch at trial " + std::to_string(trial);
                return false;
            }
        }
        // exact-instance oracle: multiset intersection
        {
            std::multiset<std::pair<std::string, std::string>> gm(gold.begin(), gold.end()),
                pm(pred.begin(), pred.end());
            std::uint64_t tp = 0;
            for (const auto& item : gm)
                if (auto it = pm.find(item); it != pm.end()) {
                    pm.erase(it);
                    ++tp;
                }
            ConfusionCounts want{tp, pred.size() - tp, gold.size() - tp};
            if (!(exact_instance_counts(g, p) == want)) {
                detail = "exact_instance_counts mismatch at trial " + std::to_string(trial);
                return false;
            }
        }
        // fuzzy oracle: independent greedy in gold order
        {
            std::vector<bool> used(pred.size(), false);
            std::uint64_t tp = 0;
            for (const auto& [gl, gv] : gold) {
                int best = -1;
                double best_sim = -1;
                for (std::size_t j = 0; j < pred.size(); ++j) {
                    if (used[j] || pred[j].first != gl) continue;
                    double sim = gestalt_similarity(gv, pred[j].second);
                    if (sim > best_sim) {
                        best_sim = sim;
                        best = static_cast<int>(j);
                    }
                }
                if (best >= 0 && best_sim >= tau) {
                    used[static_cast<std::size_t>(best)] = true;
                    ++tp;
                }
            }
            ConfusionCounts want{tp, pred.size() - tp, gold.size() - tp};
            auto got = fuzzy_instance_counts(g, p, tau);
            if (!(got == want)) {
                detail = "fuzzy_instance_counts mismatch at trial " + std::to_string(trial);
                return false;
            }
            auto check_prf = [&](const ConfusionCounts& c) {
                auto pr = prf(c);
                double denom_p = static_cast<double>(c.tp + c.fp);
                double denom_r = static_cast<double>(c.tp + c.fn);
                double wp = denom_p == 0 ? 0 : c.tp / denom_p;
                double wr = denom_r == 0 ? 0 : c.tp / denom_r;
                double wf = (wp + wr) == 0 ? 0 : 2 * wp * wr / (wp + wr);
                return std::abs(pr.precision - wp) < 1e-9 && std::abs(pr.recall - wr) < 1e-9 &&
                       std::abs(pr.f1 - wf) < 1e-9;
            };
            if (!check_prf(got)) {
                detail = "prf deviates from formula";
                return false;
            }
        }
    }
    auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= 60) {
        detail = "runtime " + std::to_string(secs) + "s exceeds 60s";
        return false;
    }
    return true;
}

// --- criterion 2: gestalt conformance --------------------------------------

bool criterion_gestalt(std::string& detail) {
    std::ifstream in(PII_TEST_DATA_DIR "/gestalt_pairs.json");
    if (!in) {
        detail = "oracle table missing";
        return false;
    }
    json pairs;
    in >> pairs;
    if (pairs.size() < 200) {
        detail = "table has fewer than 200 pairs";
        return false;
    }
    for (const auto& p : pairs) {
        double got = gestalt_similarity(p["a"].get<std::string>(), p["b"].get<std::string>());
        if (std::abs(got - p["ratio"].get<double>()) > 1e-9) {
            detail = "mismatch on pair \"" + p["a"].get<std::string>() + "\" / \"" +
                     p["b"].get<std::string>() + "\"";
            return false;
        }
    }
    if (gestalt_similarity("Email", "E-mail") < 0.8 ||
        gestalt_similarity("Date of Birth", "Date of birth") < 0.8) {
        detail = "paper-motivated pairs fall below tau=0.8";
        return false;
    }
    return true;
}

// --- criterion 3: end-to-end identity oracle -------------------------------

bool criterion_end_to_end(std::string& detail) {
    auto t0 = std::chrono::steady_clock::now();
    auto taxonomy = load_taxonomy(PII_REPO_DIR "/data/taxonomies/mhealth.taxonomy.json");

    // generate a 200-message corpus with the synthetic mock
    auto synth_gw = std::make_shared<Gateway>(make_mock_provider("mock:synth", nullptr, 97));
    GeneratorConfig gcfg;
    gcfg.seed = 97;
    SynthGenerator gen(taxonomy, synth_gw, gcfg);
    auto scenarios = gen.generate_scenarios(10);
    std::vector<AnnotatedMessage> corpus;
    for (const auto& s : scenarios)
        for (auto& r : gen.generate_requests(s, 20)) corpus.push_back(std::move(r));
    if (corpus.size() != 200) {
        detail = "corpus size " + std::to_string(corpus.size()) + " != 200";
        return false;
    }

    auto split = stratified_split(corpus, 0.8, 7);

    // store built from the example partition via the echo provider's embedder
    auto echo_gw = std::make_shared<Gateway>(std::make_shared<EchoProvider>(corpus));
    auto store = std::make_shared<ExemplarStore>(ExemplarStore::build(split.example_set, *echo_gw));

    PipelineConfig cfg;
    cfg.mode = PipelineMode::two_stage;
    cfg.review_enabled = true;
    cfg.checkpoint_dir = "acceptance_e2e_run";
    std::filesystem::remove_all(cfg.checkpoint_dir);
    AnnotationPipeline pipeline(taxonomy, echo_gw, store, cfg);
    auto stages = pipeline.run(split.evaluation_set);

    auto report = evaluate_checkpoints(stages, split.evaluation_set, 0.8);
    std::filesystem::remove_all(cfg.checkpoint_dir);
    for (const auto& [stage, sm] : report.stages) {
        auto check = [&](const std::optional<Prf>& prf_value, const char* regime) {
            if (prf_value && std::abs(prf_value->f1 - 1.0) > 1e-12) {
                detail = stage + std::string(" ") + regime + " F1=" +
                         std::to_string(prf_value->f1);
                return false;
            }
            return true;
        };
        if (!check(sm.label, "label") || !check(sm.exact, "exact") || !check(sm.fuzzy, "fuzzy"))
            return false;
    }
    if (report.stages.size() != 3) {
        detail = "expected 3 checkpoints, got " + std::to_string(report.stages.size());
        return false;
    }
    auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs >= 120) {
        detail = "runtime " + std::to_string(secs) + "s exceeds 120s";
        return false;
    }
    return true;
}

// --- criterion 4: validator guarantees -------------------------------------

bool criterion_validator(std::string& detail) {
    auto taxonomy = load_taxonomy(PII_REPO_DIR "/data/taxonomies/ai4privacy.taxonomy.json");
    Gateway gw(std::make_shared<ScriptedProvider>(std::vector<std::string>{"unused"}));
    std::mt19937 rng(555);

    const std::string body = "jane.doe@ex.org +1 555 0100 Jane Doe 1990-01-01 Berlin extra";
    std::vector<std::string> body_values = {"jane.doe@ex.org", "+1 555 0100", "Jane",
                                            "Doe",             "1990-01-01",  "Berlin"};
    std::vector<std::string> junk = {"not json",
                                     "{",
                                     "{}",
                                     "{\"annotations\":\"nope\"}",
                                     "{\"annotations\":[{\"data_type\":1,\"value\":2}]}",
                                     "{\"annotations\":[],\"extra\":true}",
                                     "```json\n{\"annotations\":[]}\n```",
                                     "[]"};

    for (int trial = 0; trial < 10000; ++trial) {
        std::string raw;
        if (trial % 3 == 0) {
            raw = junk[rng() % junk.size()];
        } else {
            json anns = json::array();
            int n = static_cast<int>(rng() % 5);
            for (int i = 0; i < n; ++i) {
                std::string label;
                switch (rng() % 4) {
                    case 0: label = taxonomy.entries()[rng() % taxonomy.size()].label; break;
                    case 1: label = "E-mail"; break;
                    case 2: label = "zzqx" + std::to_string(rng() % 10); break;
                    case 3: label = "Date of Birth"; break;
                }
                std::string value = (rng() % 4 == 0) ? "value-not-in-body-" + std::to_string(rng())
                                                     : body_values[rng() % body_values.size()];
                anns.push_back({{"data_type", label}, {"value", value}});
            }
            raw = json{{"annotations", anns}}.dump();
        }

        StructuredPayload payload;
        try {
            payload = validate_structure(raw, OutputSchema::annotations);
        } catch (const Error&) {
            continue;  // malformed input never reaches annotation emission
        }
        auto policy = (rng() % 2) ? InvalidLabelPolicy::discard : InvalidLabelPolicy::flag;
        auto v = validate_annotation_set(payload, taxonomy, body, policy, 0.85, gw);
        for (const auto& a : v.annotations) {
            if (!taxonomy.contains(a.data_type)) {
                detail = "emitted out-of-taxonomy label " + a.data_type;
                return false;
            }
            if (body.find(a.value) == std::string::npos) {
                detail = "emitted value absent from body: " + a.value;
                return false;
            }
        }
        // idempotence on the validated set
        StructuredPayload again;
        again.schema = OutputSchema::annotations;
        for (const auto& a : v.annotations) again.annotations.push_back({a.data_type, a.value});
        auto v2 = validate_annotation_set(again, taxonomy, body, policy, 0.85, gw);
        if (v2.outcome.status != ValidationStatus::valid || !(v2.annotations == v.annotations)) {
            detail = "validation not idempotent";
            return false;
        }
    }

    // Eq.-2-style corrections under the fallback embedder
    // The bundled taxonomy spells the member "Date of birth"; the variant with
    // different capitalisation is the out-of-vocabulary input to correct.
    auto c1 = correct_label("E-mail", taxonomy, 0.85, gw);
    auto c2 = correct_label("Date of Birth", taxonomy, 0.85, gw);
    if (!std::holds_alternative<LabelCorrection>(c1) ||
        std::get<LabelCorrection>(c1).corrected_label != "Email" ||
        !std::holds_alternative<LabelCorrection>(c2) ||
        std::get<LabelCorrection>(c2).corrected_label != "Date of birth") {
        detail = "near-miss label correction failed";
        return false;
    }
    return true;
}

// --- criterion 5: preprocessing round trips --------------------------------

bool criterion_preprocess(std::string& detail) {
    std::mt19937 rng(4242);
    const std::string plain = "abcdefghij KLMNOP 0123,;._-";
    const std::vector<std::string> b64_tokens = {
        "aGVsbG8gd29ybGQh",              // "hello world!"
        "U29tZSBsb25nZXIgdGV4dCBoZXJl",  // "Some longer text here"
        "QWxpY2UgU21pdGggbGl2ZXMgaGVyZQ==",
    };
    const std::vector<std::string> lookalikes = {
        "123e4567-e89b-12d3-a456-426614174000",  // UUID
        "deadbeefcafebabe1234567890abcdef",      // long hex
        "0123456789abcdef",
    };

    for (int trial = 0; trial < 1000; ++trial) {
        std::string body;
        std::vector<std::string> planted_b64, planted_look;
        int pieces = 3 + static_cast<int>(rng() % 6);
        for (int piece = 0; piece < pieces; ++piece) {
            switch (rng() % 5) {
                case 0:
                    for (int i = 0; i < 1 + static_cast<int>(rng() % 8); ++i)
                        body.push_back(plain[rng() % plain.size()]);
                    break;
                case 1:
                    body += "%2B%40%7B";
                    break;
                case 2:
                    body += "&amp;&#x40;&lt;";
                    break;
                case 3: {
                    const auto& tok = b64_tokens[rng() % b64_tokens.size()];
                    body += " " + tok + " ";
                    planted_b64.push_back(tok);
                    break;
                }
                case 4: {
                    const auto& tok = lookalikes[rng() % lookalikes.size()];
                    body += " " + tok + " ";
                    planted_look.push_back(tok);
                    break;
                }
            }
        }
        auto nb = normalize_body(body);
        if (reconstruct_normalized(nb) != nb.normalized) {
            detail = "reconstruction mismatch at trial " + std::to_string(trial);
            return false;
        }
        // lookalikes must stay verbatim
        for (const auto& tok : planted_look) {
            if (nb.normalized.find(tok) == std::string::npos) {
                detail = "lookalike decoded: " + tok;
                return false;
            }
        }
        // every annotated normalized span must map to an original range whose
        // transform reproduces it
        for (int probe = 0; probe < 5 && !nb.normalized.empty(); ++probe) {
            std::size_t start = rng() % nb.normalized.size();
            std::size_t len = 1 + rng() % std::min<std::size_t>(8, nb.normalized.size() - start);
            auto [os, oe] = map_to_original(nb, {start, start + len});
            if (oe < os || oe > nb.original.size()) {
                detail = "map_to_original out of bounds";
                return false;
            }
            // re-normalizing the mapped original slice must contain the span
            auto sub = normalize_body(nb.original.substr(os, oe - os));
            if (sub.normalized.find(nb.normalized.substr(start, len)) == std::string::npos) {
                detail = "mapped range does not reproduce the span (trial " +
                         std::to_string(trial) + ")";
                return false;
            }
        }
    }
    return true;
}

// --- criterion 6: retrieval correctness ------------------------------------

bool criterion_retrieval(std::string& detail) {
    std::mt19937 rng(31337);
    std::uniform_real_distribution<double> dist(-1, 1);

    // top-k vs exhaustive sort
    for (int trial = 0; trial < 100; ++trial) {
        ExemplarStore store;
        std::vector<EmbeddingVector> vecs;
        int n = 3 + static_cast<int>(rng() % 60);
        for (int i = 0; i < n; ++i) {
            std::vector<double> v(6);
            for (auto& x : v) x = dist(rng);
            bool zero = std::all_of(v.begin(), v.end(), [](double x) { return x == 0; });
            if (zero) v[0] = 1;
            vecs.push_back(EmbeddingVector{v});
            Exemplar e;
            e.embedding = vecs.back();
            e.label_set = {"L" + std::to_string(i % 7)};
            e.annotations.push_back({*e.label_set.begin(), "v", Placement::body});
            e.message_text = "m";
            store.add(std::move(e));
        }
        std::vector<double> q(6);
        for (auto& x : q) x = dist(rng);
        if (std::all_of(q.begin(), q.end(), [](double x) { return x == 0; })) q[0] = 1;
        EmbeddingVector query{q};
        std::size_t k = 1 + rng() % 8;

        auto got = store.retrieve_similar(query, k);
        std::vector<std::size_t> idx(vecs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return cosine(query, vecs[a]) > cosine(query, vecs[b]);
        });
        for (std::size_t i = 0; i < got.size(); ++i) {
            if (got[i] != &store.exemplars()[idx[i]]) {
                detail = "retrieve_similar deviates from the sort oracle";
                return false;
            }
        }
    }

    // greedy cover vs brute-force reachability
    for (int trial = 0; trial < 80; ++trial) {
        int n_labels = 3 + static_cast<int>(rng() % 8);
        int n_ex = 3 + static_cast<int>(rng() % 10);
        std::vector<std::set<std::string>> sets;
        ExemplarStore store;
        for (int i = 0; i < n_ex; ++i) {
            std::set<std::string> labels;
            for (int l = 0; l < n_labels; ++l)
                if (rng() % 3 == 0) labels.insert("L" + std::to_string(l));
            if (labels.empty()) labels.insert("L0");
            sets.push_back(labels);
            Exemplar e;
            e.embedding = EmbeddingVector{{1.0 + static_cast<double>(i), 1}};
            e.label_set = labels;
            for (const auto& l : labels) e.annotations.push_back({l, "v", Placement::body});
            e.message_text = "m";
            store.add(std::move(e));
        }
        std::set<std::string> targets;
        for (int l = 0; l < n_labels; ++l) targets.insert("L" + std::to_string(l));

        auto greedy = store.retrieve_label_cover(targets, n_ex);
        bool oracle_full = false;
        for (unsigned mask = 0; mask < (1u << n_ex) && !oracle_full; ++mask) {
            std::set<std::string> cov;
            for (int i = 0; i < n_ex; ++i)
                if (mask & (1u << i)) cov.insert(sets[i].begin(), sets[i].end());
            oracle_full = std::includes(cov.begin(), cov.end(), targets.begin(), targets.end());
        }
        if (greedy.uncovered.empty() != oracle_full) {
            detail = "cover reachability differs from the brute-force oracle";
            return false;
        }
        std::set<std::string> covered;
        for (const auto* e : greedy.exemplars) {
            std::size_t before = covered.size();
            for (const auto& l : e->label_set)
                if (targets.count(l)) covered.insert(l);
            if (covered.size() == before) {
                detail = "greedy returned a zero-gain exemplar";
                return false;
            }
        }
    }
    return true;
}

// --- criterion 7: split constraints ----------------------------------------

bool criterion_split(std::string& detail) {
    std::mt19937 rng(808);
    const char* labels[] = {"A", "B", "C", "D", "E"};
    for (int run = 0; run < 100; ++run) {
        std::vector<AnnotatedMessage> corpus;
        int n = 25 + static_cast<int>(rng() % 40);
        for (int i = 0; i < n; ++i) {
            std::vector<std::pair<std::string, std::string>> anns;
            anns.push_back({labels[i % 5], "v" + std::to_string(i)});
            if (rng() % 2) anns.push_back({labels[rng() % 5], "w" + std::to_string(i)});
            corpus.push_back(make_msg("m" + std::to_string(i), anns));
        }
        std::uint64_t seed = rng();
        SplitResult r1, r2;
        try {
            r1 = stratified_split(corpus, 0.8, seed);
            r2 = stratified_split(corpus, 0.8, seed);
        } catch (const Infeasible& e) {
            detail = std::string("unexpectedly infeasible: ") + e.what();
            return false;
        }
        if (!(r1.evaluation_set == r2.evaluation_set && r1.example_set == r2.example_set)) {
            detail = "same seed produced different partitions";
            return false;
        }
        if (std::abs(static_cast<double>(r1.evaluation_set.size()) - 0.8 * n) > 1.0) {
            detail = "evaluation size off by more than 1 from 80%";
            return false;
        }
        auto labels_of = [](const std::vector<AnnotatedMessage>& part) {
            std::set<std::string> s;
            for (const auto& m : part)
                for (const auto& a : m.annotations) s.insert(a.data_type);
            return s;
        };
        auto all = labels_of(corpus);
        if (labels_of(r1.evaluation_set) != all || labels_of(r1.example_set) != all) {
            detail = "label coverage broken in a partition";
            return false;
        }
    }
    return true;
}

// --- criterion 8: corpus shape at desk scale -------------------------------

bool criterion_corpus(std::string& detail) {
    auto taxonomy = load_taxonomy(PII_REPO_DIR "/data/taxonomies/playstore.taxonomy.json");
    auto gw = std::make_shared<Gateway>(make_mock_provider("mock:synth", nullptr, 12));
    GeneratorConfig cfg;
    cfg.seed = 12;
    SynthGenerator gen(taxonomy, gw, cfg);
    auto scenarios = gen.generate_scenarios(5);
    if (scenarios.size() != 5) {
        detail = "expected 5 scenarios";
        return false;
    }
    std::vector<AnnotatedMessage> corpus;
    for (const auto& s : scenarios)
        for (auto& r : gen.generate_requests(s, 20)) corpus.push_back(std::move(r));
    if (corpus.size() != 100) {
        detail = "expected 100 requests, got " + std::to_string(corpus.size());
        return false;
    }
    for (const auto& m : corpus) {
        for (const auto& a : m.annotations) {
            if (!value_present(m.message, a)) {
                detail = "annotation fails the verbatim placement check in " + m.id;
                return false;
            }
        }
    }
    auto report = coverage_report(corpus, scenarios, taxonomy);
    std::set<std::string> seen;
    for (const auto& m : corpus)
        for (const auto& a : m.annotations) seen.insert(a.data_type);
    for (const auto& e : taxonomy.entries()) {
        bool covered = seen.count(e.label) > 0;
        if (report.uncovered.count(e.label) == covered) {
            detail = "uncovered set disagrees with the independent scan for " + e.label;
            return false;
        }
    }
    return true;
}

}  // namespace

int main() {
    struct Criterion {
        int number;
        const char* name;
        std::function<bool(std::string&)> fn;
    };
    const std::vector<Criterion> criteria = {
        {1, "metric oracle equivalence", criterion_metrics},
        {2, "gestalt similarity conformance", criterion_gestalt},
        {3, "end-to-end identity oracle", criterion_end_to_end},
        {4, "validator guarantees", criterion_validator},
        {5, "pre-processing round trips", criterion_preprocess},
        {6, "retrieval correctness", criterion_retrieval},
        {7, "split constraints", criterion_split},
        {8, "corpus-shape reproduction at desk scale", criterion_corpus},
    };
    for (const auto& c : criteria) {
        std::string detail;
        bool ok = false;
        try {
            ok = c.fn(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        report(c.number, c.name, ok, detail);
    }
    return g_failures == 0 ? 0 : 1;
}
