#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "pii/http_model.hpp"
#include "pii/llm_gateway.hpp"
#include "pii/taxonomy.hpp"

namespace pii {

struct PiiPlanEntry {
    std::string label;
    double weight = 1.0;
    std::set<Placement> placements{Placement::body};
};

struct ScenarioTemplate {
    std::string id;
    std::string goal;
    std::vector<std::string> hosts;
    std::vector<std::string> endpoints;
    std::vector<std::string> methods;
    std::vector<std::string> content_types;
    std::vector<PiiPlanEntry> pii_plan;
};

struct CoverageReport {
    std::map<std::string, std::size_t> scenario_coverage;
    std::map<std::string, std::size_t> message_coverage;
    std::set<std::string> uncovered;
};

struct GeneratorConfig {
    std::uint64_t seed = 0;
    int attempts_per_item = 3;  // regeneration budget
    std::size_t labels_per_request_min = 1;
    std::size_t labels_per_request_max = 5;
};

struct GenerationFailure {
    std::string context;
    std::string reason;
};

class SynthGenerator {
public:
    SynthGenerator(Taxonomy taxonomy, std::shared_ptr<Gateway> gateway, GeneratorConfig cfg);

    // Up to n validated scenario templates; invalid outputs are rejected and
    // regenerated within the per-item budget. When fewer than n survive the
    // partial set is returned and failures() carries the reasons.
    std::vector<ScenarioTemplate> generate_scenarios(std::size_t n);

    // Up to n validated ground-truth requests for one scenario. Label choice
    // samples the pii_plan weights, boosted for still-uncovered labels.
    std::vector<AnnotatedMessage> generate_requests(const ScenarioTemplate& s, std::size_t n);

    // One validated response linked to the request by id suffix.
    AnnotatedMessage generate_response(const AnnotatedMessage& req,
                                       const ScenarioTemplate& s);

    const std::vector<GenerationFailure>& failures() const { return failures_; }
    const std::map<std::string, std::size_t>& message_coverage() const {
        return message_coverage_;
    }

private:
    Taxonomy taxonomy_;
    std::shared_ptr<Gateway> gateway_;
    GeneratorConfig cfg_;
    std::vector<GenerationFailure> failures_;
    std::map<std::string, std::size_t> message_coverage_;
    std::uint64_t request_counter_ = 0;
};

// Exact label counts over validated scenarios and messages; `uncovered` is the
// taxonomy minus labels with a message count above zero.
CoverageReport coverage_report(const std::vector<AnnotatedMessage>& corpus,
                               const std::vector<ScenarioTemplate>& scenarios,
                               const Taxonomy& t);

std::string serialize_scenarios(const std::vector<ScenarioTemplate>& scenarios);
std::vector<ScenarioTemplate> parse_scenarios(const std::string& json_text);
std::string serialize_coverage(const CoverageReport& r);

}  // namespace pii
