#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include <json.hpp>

#include "pii/errors.hpp"
#include "pii/evaluation.hpp"

using namespace pii;
using nlohmann::json;

namespace {

AnnotatedMessage msg(const std::string& id,
                     std::vector<std::pair<std::string, std::string>> anns) {
    AnnotatedMessage am;
    am.id = id;
    am.message.kind = MessageKind::request;
    am.message.method = "POST";
    am.message.path = "/";
    for (auto& [l, v] : anns) {
        am.message.body += v + " ";
        am.annotations.push_back({l, v, Placement::body});
    }
    return am;
}

}  // namespace

TEST_CASE("prf formulas and conventions") {
    auto p = prf({2, 1, 1});
    CHECK(p.precision == doctest::Approx(0.6667).epsilon(1e-3));
    CHECK(p.recall == doctest::Approx(0.6667).epsilon(1e-3));
    CHECK(p.f1 == doctest::Approx(0.6667).epsilon(1e-3));

    auto zero = prf({0, 0, 0});
    CHECK(zero.precision == 0);
    CHECK(zero.recall == 0);
    CHECK(zero.f1 == 0);

    auto perfect = prf({5, 0, 0});
    CHECK(perfect.precision == 1);
    CHECK(perfect.recall == 1);
    CHECK(perfect.f1 == 1);
}

TEST_CASE("label counts work on unique label sets") {
    auto g = msg("1", {{"A", "x"}, {"B", "y"}});
    SUBCASE("identity") {
        auto c = label_counts(g, msg("1", {{"A", "x"}, {"B", "y"}}));
        CHECK(c == ConfusionCounts{2, 0, 0});
    }
    SUBCASE("one swap") {
        auto c = label_counts(g, msg("1", {{"A", "x"}, {"C", "z"}}));
        CHECK(c == ConfusionCounts{1, 1, 1});
    }
    SUBCASE("frequency-insensitive") {
        auto gold3 = msg("1", {{"A", "x"}, {"A", "y"}, {"A", "z"}});
        auto c = label_counts(gold3, msg("1", {{"A", "x"}}));
        CHECK(c == ConfusionCounts{1, 0, 0});
    }
}

TEST_CASE("exact instance counts use multiplicity") {
    auto g = msg("1", {{"Email", "a@b.co"}});
    CHECK(exact_instance_counts(g, msg("1", {{"Email", "a@b.co"}})) == ConfusionCounts{1, 0, 0});
    CHECK(exact_instance_counts(g, msg("1", {{"Email", "a@b.c"}})) == ConfusionCounts{0, 1, 1});
    auto g2 = msg("2", {{"L", "x"}, {"L", "x"}});
    CHECK(exact_instance_counts(g2, msg("2", {{"L", "x"}})) == ConfusionCounts{1, 0, 1});
}

TEST_CASE("id mismatch raises") {
    CHECK_THROWS_AS(exact_instance_counts(msg("1", {}), msg("2", {})), IdMismatch);
    CHECK_THROWS_AS(fuzzy_instance_counts(msg("1", {}), msg("2", {}), 0.8), IdMismatch);
}

TEST_CASE("gestalt trivial identities") {
    CHECK(gestalt_similarity("abc", "abc") == 1.0);
    CHECK(gestalt_similarity("abc", "xyz") == 0.0);
    CHECK(gestalt_similarity("", "") == 1.0);
}

TEST_CASE("gestalt agrees with the reference oracle table") {
    std::ifstream in(PII_TEST_DATA_DIR "/gestalt_pairs.json");
    REQUIRE(in.good());
    json pairs;
    in >> pairs;
    REQUIRE(pairs.size() >= 200);
    for (const auto& p : pairs) {
        auto a = p["a"].get<std::string>();
        auto b = p["b"].get<std::string>();
        double expected = p["ratio"].get<double>();
        CHECK(gestalt_similarity(a, b) == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("paper-motivated near-miss pairs clear tau=0.8") {
    CHECK(gestalt_similarity("Email", "E-mail") >= 0.8);
    CHECK(gestalt_similarity("Date of Birth", "Date of birth") >= 0.8);
}

TEST_CASE("fuzzy: exact duplicates match at any tau") {
    auto g = msg("1", {{"A", "x1"}, {"B", "y2"}, {"A", "z3"}});
    CHECK(fuzzy_instance_counts(g, g, 1.0) == ConfusionCounts{3, 0, 0});
    CHECK(fuzzy_instance_counts(g, g, 0.1) == ConfusionCounts{3, 0, 0});
}

TEST_CASE("fuzzy: trailing whitespace still matches at tau=0.8") {
    auto g = msg("1", {{"Email", "a@b.co"}});
    auto p = msg("1", {{"Email", "a@b.co "}});
    p.message.body = "a@b.co ";
    CHECK(fuzzy_instance_counts(g, p, 0.8) == ConfusionCounts{1, 0, 0});
}

TEST_CASE("fuzzy never matches across labels") {
    auto g = msg("1", {{"A", "same"}});
    auto p = msg("1", {{"B", "same"}});
    CHECK(fuzzy_instance_counts(g, p, 0.8) == ConfusionCounts{0, 1, 1});
}

TEST_CASE("fuzzy equals a step-by-step greedy oracle on random small instances") {
    std::mt19937 rng(77);
    const char* values[] = {"alpha", "alpha1", "alfa", "beta", "betta", "gamma", "g4mma"};
    const char* labels[] = {"L1", "L2", "L3"};
    for (int trial = 0; trial < 400; ++trial) {
        std::vector<std::pair<std::string, std::string>> gold, pred;
        int ng = static_cast<int>(rng() % 7), np = static_cast<int>(rng() % 7);
        for (int i = 0; i < ng; ++i) gold.push_back({labels[rng() % 3], values[rng() % 7]});
        for (int i = 0; i < np; ++i) pred.push_back({labels[rng() % 3], values[rng() % 7]});
        double tau = 0.5 + 0.5 * static_cast<double>(rng() % 100) / 100.0;

        auto g = msg("1", gold);
        auto p = msg("1", pred);
        auto got = fuzzy_instance_counts(g, p, tau);

        // oracle: same greedy procedure, written independently
        std::vector<bool> used(pred.size(), false);
        std::uint64_t tp = 0;
        for (const auto& [gl, gv] : gold) {
            int best = -1;
            double best_sim = -1;
            for (std::size_t j = 0; j < pred.size(); ++j) {
                if (used[j] || pred[j].first != gl) continue;
                double s = gestalt_similarity(gv, pred[j].second);
                if (s > best_sim) {
                    best_sim = s;
                    best = static_cast<int>(j);
                }
            }
            if (best >= 0 && best_sim >= tau) {
                used[static_cast<std::size_t>(best)] = true;
                ++tp;
            }
        }
        ConfusionCounts want{tp, np - tp, ng - tp};
        CHECK(got == want);
    }
}

TEST_CASE("evaluate_checkpoints: echoing gold yields F1=1 everywhere") {
    std::vector<AnnotatedMessage> gold;
    std::map<std::string, std::vector<CheckpointRecord>> stages;
    for (int i = 0; i < 5; ++i) {
        auto g = msg("m" + std::to_string(i), {{"A", "v" + std::to_string(i)}, {"B", "w"}});
        gold.push_back(g);
        CheckpointRecord c;
        c.id = g.id;
        c.stage = "classifier";
        c.labels = {"A", "B"};
        stages["classifier"].push_back(c);
        CheckpointRecord a;
        a.id = g.id;
        a.stage = "annotator_two";
        a.annotations = g.annotations;
        stages["annotator_two"].push_back(a);
    }
    auto report = evaluate_checkpoints(stages, gold, 0.8);
    CHECK(report.stages.at("classifier").label->f1 == doctest::Approx(1.0));
    CHECK_FALSE(report.stages.at("classifier").exact.has_value());
    CHECK(report.stages.at("annotator_two").exact->f1 == doctest::Approx(1.0));
    CHECK(report.stages.at("annotator_two").fuzzy->f1 == doctest::Approx(1.0));
}

TEST_CASE("empty predictions give zero recall by convention") {
    std::vector<AnnotatedMessage> gold{msg("m0", {{"A", "x"}})};
    std::map<std::string, std::vector<CheckpointRecord>> stages;
    CheckpointRecord a;
    a.id = "m0";
    a.stage = "annotator_two";
    stages["annotator_two"].push_back(a);
    auto report = evaluate_checkpoints(stages, gold, 0.8);
    CHECK(report.stages.at("annotator_two").exact->recall == 0);
    CHECK(report.stages.at("annotator_two").exact->precision == 0);
}

TEST_CASE("stratified split: infeasible when a label lacks support") {
    std::vector<AnnotatedMessage> corpus{msg("1", {{"Rare", "x"}}), msg("2", {{"Common", "y"}}),
                                         msg("3", {{"Common", "z"}})};
    CHECK_THROWS_AS(stratified_split(corpus, 0.8, 1), Infeasible);
    try {
        stratified_split(corpus, 0.8, 1);
    } catch (const Infeasible& e) {
        CHECK(std::string(e.what()).find("Rare") != std::string::npos);
    }
}

TEST_CASE("stratified split: coverage, sizes, determinism") {
    std::mt19937 rng(5);
    const char* labels[] = {"A", "B", "C", "D"};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<AnnotatedMessage> corpus;
        int n = 20 + static_cast<int>(rng() % 30);
        for (int i = 0; i < n; ++i) {
            std::vector<std::pair<std::string, std::string>> anns;
            anns.push_back({labels[i % 4], "v" + std::to_string(i)});
            if (rng() % 2) anns.push_back({labels[rng() % 4], "w" + std::to_string(i)});
            corpus.push_back(msg("m" + std::to_string(i), anns));
        }
        std::uint64_t seed = rng();
        auto r1 = stratified_split(corpus, 0.8, seed);
        auto r2 = stratified_split(corpus, 0.8, seed);
        CHECK(r1.evaluation_set == r2.evaluation_set);
        CHECK(r1.example_set == r2.example_set);

        auto size_diff = static_cast<double>(r1.evaluation_set.size()) - 0.8 * n;
        CHECK(std::abs(size_diff) <= 1.0);
        CHECK(r1.evaluation_set.size() + r1.example_set.size() == corpus.size());

        auto labels_of = [](const std::vector<AnnotatedMessage>& part) {
            std::set<std::string> s;
            for (const auto& m : part)
                for (const auto& a : m.annotations) s.insert(a.data_type);
            return s;
        };
        std::set<std::string> all = labels_of(corpus);
        CHECK(labels_of(r1.evaluation_set) == all);
        CHECK(labels_of(r1.example_set) == all);
    }
}

TEST_CASE("report serialization carries all regimes") {
    MetricsReport r;
    r.tau = 0.8;
    StageMetrics sm;
    sm.label = prf({1, 0, 0});
    sm.label_c = {1, 0, 0};
    sm.messages_scored = 1;
    r.stages["classifier"] = sm;
    auto text = serialize_report(r);
    auto doc = json::parse(text);
    CHECK(doc["tau"] == 0.8);
    CHECK(doc["stages"]["classifier"]["label"]["f1"] == 1.0);
}
