#include <doctest.h>

#include <algorithm>
#include <memory>
#include <variant>

#include "pii/errors.hpp"
#include "pii/llm_gateway.hpp"
#include "pii/mock_provider.hpp"
#include "pii/output_validation.hpp"
#include "pii/taxonomy.hpp"

using namespace pii;

namespace {

Taxonomy tiny_taxonomy() {
    return parse_taxonomy(R"({"name":"t","entries":[
        {"label":"Email","description":"electronic mail address"},
        {"label":"Date of Birth","description":"birth date"},
        {"label":"Phone number","description":"telephone number"}]})");
}

Gateway& fallback_gateway() {
    static Gateway gw(std::make_shared<ScriptedProvider>(std::vector<std::string>{"unused"}));
    return gw;
}

}  // namespace

TEST_CASE("well-formed annotations payload is valid") {
    auto p = validate_structure(R"({"annotations":[{"data_type":"Email","value":"a@b.co"}]})",
                                OutputSchema::annotations);
    REQUIRE(p.annotations.size() == 1);
    CHECK(p.annotations[0].first == "Email");
    CHECK(p.soft_repairs.empty());
}

TEST_CASE("extra keys violate the schema") {
    CHECK_THROWS_AS(
        validate_structure(R"({"annotations":[{"data_type":"Email","value":"a","note":"x"}]})",
                           OutputSchema::annotations),
        SchemaViolation);
    CHECK_THROWS_AS(validate_structure(R"({"annotations":[],"extra":1})",
                                       OutputSchema::annotations),
                    SchemaViolation);
}

TEST_CASE("non-JSON input is unparseable") {
    CHECK_THROWS_AS(validate_structure("not json", OutputSchema::annotations), Unparseable);
}

TEST_CASE("code fences are stripped as a soft repair") {
    auto p = validate_structure("```json\n{\"labels\":[\"Email\"]}\n```", OutputSchema::labels);
    REQUIRE(p.labels.size() == 1);
    CHECK_FALSE(p.soft_repairs.empty());
}

TEST_CASE("correct_label maps paper-style variants under the fallback embedder") {
    auto t = tiny_taxonomy();
    auto r1 = correct_label("E-mail", t, 0.85, fallback_gateway());
    REQUIRE(std::holds_alternative<LabelCorrection>(r1));
    CHECK(std::get<LabelCorrection>(r1).corrected_label == "Email");

    auto r2 = correct_label("Date of birth", t, 0.85, fallback_gateway());
    REQUIRE(std::holds_alternative<LabelCorrection>(r2));
    CHECK(std::get<LabelCorrection>(r2).corrected_label == "Date of Birth");
}

TEST_CASE("gibberish is rejected with a similarity below threshold") {
    auto t = tiny_taxonomy();
    auto r = correct_label("zzqx", t, 0.85, fallback_gateway());
    REQUIRE(std::holds_alternative<LabelRejection>(r));
    CHECK(std::get<LabelRejection>(r).best_similarity < 0.85);
}

TEST_CASE("annotation set: all valid passes through unchanged") {
    auto t = tiny_taxonomy();
    StructuredPayload p;
    p.schema = OutputSchema::annotations;
    p.annotations = {{"Email", "a@b.co"}};
    auto v = validate_annotation_set(p, t, "email=a@b.co", InvalidLabelPolicy::discard, 0.85,
                                     fallback_gateway());
    CHECK(v.outcome.status == ValidationStatus::valid);
    REQUIRE(v.annotations.size() == 1);
    CHECK(v.annotations[0].data_type == "Email");
}

TEST_CASE("annotation set: near-miss label corrected") {
    auto t = tiny_taxonomy();
    StructuredPayload p;
    p.schema = OutputSchema::annotations;
    p.annotations = {{"email", "a@b.co"}};
    auto v = validate_annotation_set(p, t, "email=a@b.co", InvalidLabelPolicy::discard, 0.85,
                                     fallback_gateway());
    CHECK(v.outcome.status == ValidationStatus::corrected);
    REQUIRE(v.outcome.corrections.size() == 1);
    CHECK(v.outcome.corrections[0].corrected_label == "Email");
    REQUIRE(v.annotations.size() == 1);
    CHECK(v.annotations[0].data_type == "Email");
}

TEST_CASE("annotation set: absent values dropped with value_not_found") {
    auto t = tiny_taxonomy();
    StructuredPayload p;
    p.schema = OutputSchema::annotations;
    p.annotations = {{"Email", "nobody@nowhere"}};
    auto v = validate_annotation_set(p, t, "email=a@b.co", InvalidLabelPolicy::discard, 0.85,
                                     fallback_gateway());
    CHECK(v.annotations.empty());
    REQUIRE(v.outcome.rejections.size() == 1);
    CHECK(v.outcome.rejections[0].reason == "value_not_found");
}

TEST_CASE("annotation set: duplicates collapse, flag policy requests requery") {
    auto t = tiny_taxonomy();
    StructuredPayload p;
    p.schema = OutputSchema::annotations;
    p.annotations = {{"Email", "a@b.co"}, {"Email", "a@b.co"}, {"Nonsense qq", "a@b.co"}};
    auto v = validate_annotation_set(p, t, "a@b.co", InvalidLabelPolicy::flag, 0.85,
                                     fallback_gateway());
    CHECK(v.annotations.size() == 1);
    CHECK(v.outcome.needs_requery);
}

TEST_CASE("validation is idempotent on valid sets") {
    auto t = tiny_taxonomy();
    StructuredPayload p;
    p.schema = OutputSchema::annotations;
    p.annotations = {{"Email", "a@b.co"}, {"Phone number", "+1 555 0100"}};
    std::string body = "a@b.co +1 555 0100";
    auto v1 = validate_annotation_set(p, t, body, InvalidLabelPolicy::discard, 0.85,
                                      fallback_gateway());
    StructuredPayload p2;
    p2.schema = OutputSchema::annotations;
    for (const auto& a : v1.annotations) p2.annotations.push_back({a.data_type, a.value});
    auto v2 = validate_annotation_set(p2, t, body, InvalidLabelPolicy::discard, 0.85,
                                      fallback_gateway());
    CHECK(v2.outcome.status == ValidationStatus::valid);
    CHECK(v2.annotations == v1.annotations);
}

TEST_CASE("label set validation corrects and never emits non-members") {
    auto t = tiny_taxonomy();
    StructuredPayload p;
    p.schema = OutputSchema::labels;
    p.labels = {"Email", "E-Mail", "garbage zz"};
    auto v = validate_label_set(p, t, InvalidLabelPolicy::discard, 0.85, fallback_gateway());
    for (const auto& l : v.labels) CHECK(t.contains(l));
    CHECK(std::count(v.labels.begin(), v.labels.end(), "Email") == 1);
}
