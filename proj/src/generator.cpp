#include "pii/generator.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include <json.hpp>

#include "pii/errors.hpp"
#include "pii/output_validation.hpp"

namespace pii {

using nlohmann::json;

namespace {

const char* k_scenario_prompt =
    "You design scenario templates for synthetic HTTP traffic used in privacy research. "
    "Given a PII taxonomy and a set of target labels, produce ONE scenario as a JSON object "
    "with exactly the keys {id, goal, hosts, endpoints, methods, content_types, pii_plan}, "
    "where pii_plan is an array of {label, weight, placements} objects. Labels must be copied "
    "verbatim from the taxonomy. The scenario must describe a plausible application flow "
    "(registration, checkout, telemetry, ...). Output JSON only.";

const char* k_request_prompt =
    "You instantiate scenario templates into concrete synthetic HTTP requests for privacy "
    "research. Produce ONE request as a JSON object with exactly the keys {method, path, "
    "headers, body, annotations}, where headers is an array of [name, value] pairs and "
    "annotations is an array of {data_type, value, placement} objects. Every annotated value "
    "MUST appear verbatim in the named component. Use realistic, fictional values; never "
    "placeholders. Output JSON only.";

const char* k_response_prompt =
    "You synthesise a plausible HTTP response for a given synthetic request. Produce ONE "
    "response as a JSON object with exactly the keys {status, headers, body, annotations}, "
    "with the same annotation rules: every annotated value MUST appear verbatim in the "
    "response body. Output JSON only.";

std::vector<Header> parse_headers(const json& arr) {
    std::vector<Header> out;
    for (const auto& h : arr) {
        if (h.is_array() && h.size() == 2)
            out.push_back({h[0].get<std::string>(), h[1].get<std::string>()});
    }
    return out;
}

}  // namespace

SynthGenerator::SynthGenerator(Taxonomy taxonomy, std::shared_ptr<Gateway> gateway,
                               GeneratorConfig cfg)
    : taxonomy_(std::move(taxonomy)), gateway_(std::move(gateway)), cfg_(cfg) {}

std::vector<ScenarioTemplate> SynthGenerator::generate_scenarios(std::size_t n) {
    // Round-robin label partition so the scenario set jointly aims at full
    // taxonomy coverage.
    std::vector<std::vector<std::string>> chunks(n);
    {
        std::size_t i = 0;
        for (const auto& e : taxonomy_.entries()) chunks[i++ % n].push_back(e.label);
    }

    std::vector<ScenarioTemplate> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (chunks[i].empty()) chunks[i].push_back(taxonomy_.entries()[i % taxonomy_.size()].label);
        bool accepted = false;
        for (int attempt = 0; attempt < cfg_.attempts_per_item && !accepted; ++attempt) {
            ChatRequest req;
            req.task = "scenario";
            req.system_prompt = k_scenario_prompt;
            json input = {{"labels", chunks[i]},
                          {"index", i},
                          {"attempt", attempt},
                          {"taxonomy", taxonomy_.name()}};
            req.structured_input = input.dump();
            std::ostringstream user;
            user << "Target labels:\n";
            for (const auto& l : chunks[i]) user << "- " << l << "\n";
            req.user_content = user.str();

            try {
                auto result = gateway_->complete(req);
                json doc = json::parse(result.raw_text);
                ScenarioTemplate s;
                s.id = doc.value("id", "scenario-" + std::to_string(i));
                s.goal = doc.at("goal").get<std::string>();
                s.hosts = doc.at("hosts").get<std::vector<std::string>>();
                s.endpoints = doc.at("endpoints").get<std::vector<std::string>>();
                s.methods = doc.at("methods").get<std::vector<std::string>>();
                s.content_types = doc.at("content_types").get<std::vector<std::string>>();
                for (const auto& p : doc.at("pii_plan")) {
                    PiiPlanEntry e;
                    e.label = p.at("label").get<std::string>();
                    e.weight = p.value("weight", 1.0);
                    if (p.contains("placements")) {
                        e.placements.clear();
                        for (const auto& pl : p["placements"])
                            e.placements.insert(placement_from_string(pl.get<std::string>()));
                    }
                    if (!taxonomy_.contains(e.label)) {
                        auto corr = correct_label(e.label, taxonomy_, 0.85, *gateway_);
                        if (auto* c = std::get_if<LabelCorrection>(&corr))
                            e.label = c->corrected_label;
                        else
                            throw Error("pii_plan label \"" + e.label + "\" not in taxonomy");
                    }
                    if (e.weight <= 0) throw Error("pii_plan weight must be positive");
                    s.pii_plan.push_back(std::move(e));
                }
                if (s.endpoints.empty() || s.methods.empty())
                    throw Error("scenario needs at least one endpoint and method");
                if (s.pii_plan.empty()) throw Error("scenario has an empty pii_plan");
                out.push_back(std::move(s));
                accepted = true;
            } catch (const std::exception& e) {
                failures_.push_back({"scenario " + std::to_string(i), e.what()});
            }
        }
    }
    return out;  // possibly partial; failures() carries the report
}

std::vector<AnnotatedMessage> SynthGenerator::generate_requests(const ScenarioTemplate& s,
                                                                std::size_t n) {
    std::mt19937_64 rng(cfg_.seed ^ std::hash<std::string>{}(s.id));
    std::vector<AnnotatedMessage> out;

    for (std::size_t j = 0; j < n; ++j) {
        // Weighted label sample without replacement; labels the corpus has not
        // covered yet get a boost.
        std::vector<std::string> labels;
        {
            std::vector<std::pair<double, std::string>> pool;
            for (const auto& p : s.pii_plan) {
                double w = p.weight;
                if (message_coverage_[p.label] == 0) w *= 4.0;
                pool.emplace_back(w, p.label);
            }
            std::size_t want = std::min<std::size_t>(
                cfg_.labels_per_request_min +
                    rng() % (cfg_.labels_per_request_max - cfg_.labels_per_request_min + 1),
                pool.size());
            for (std::size_t k = 0; k < want; ++k) {
                double total = 0;
                for (const auto& [w, l] : pool) total += w;
                std::uniform_real_distribution<double> dist(0, total);
                double r = dist(rng);
                for (std::size_t q = 0; q < pool.size(); ++q) {
                    r -= pool[q].first;
                    if (r <= 0 || q + 1 == pool.size()) {
                        labels.push_back(pool[q].second);
                        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(q));
                        break;
                    }
                }
            }
        }

        const std::string host = s.hosts.empty() ? "api.example.com" : s.hosts[j % s.hosts.size()];
        const std::string endpoint = s.endpoints[j % s.endpoints.size()];

        bool accepted = false;
        for (int attempt = 0; attempt < cfg_.attempts_per_item && !accepted; ++attempt) {
            ChatRequest req;
            req.task = "request";
            req.system_prompt = k_request_prompt;
            json input = {{"labels", labels},
                          {"index", request_counter_},
                          {"attempt", attempt},
                          {"scenario", s.id},
                          {"goal", s.goal},
                          {"host", host},
                          {"endpoint", endpoint}};
            req.structured_input = input.dump();
            req.user_content = "Scenario: " + s.goal + "\nLabels: " + input["labels"].dump();

            try {
                auto result = gateway_->complete(req);
                json doc = json::parse(result.raw_text);
                AnnotatedMessage am;
                am.id = s.id + "-req-" + std::to_string(j);
                am.provenance = Provenance::ground_truth;
                am.message.kind = MessageKind::request;
                am.message.method = doc.at("method").get<std::string>();
                am.message.path = doc.at("path").get<std::string>();
                if (doc.contains("query")) am.message.query = doc["query"].get<std::string>();
                am.message.headers = parse_headers(doc.at("headers"));
                am.message.body = doc.at("body").get<std::string>();
                for (const auto& a : doc.at("annotations")) {
                    Annotation ann{a.at("data_type").get<std::string>(),
                                   a.at("value").get<std::string>(),
                                   placement_from_string(a.value("placement", "body"))};
                    if (!taxonomy_.contains(ann.data_type))
                        throw Error("annotation label \"" + ann.data_type +
                                    "\" not in taxonomy");
                    am.annotations.push_back(std::move(ann));
                }
                check_message_invariants(am);  // includes the verbatim placement gate
                for (const auto& a : am.annotations) message_coverage_[a.data_type]++;
                out.push_back(std::move(am));
                accepted = true;
            } catch (const std::exception& e) {
                failures_.push_back({s.id + " request " + std::to_string(j), e.what()});
            }
        }
        ++request_counter_;
    }
    return out;
}

AnnotatedMessage SynthGenerator::generate_response(const AnnotatedMessage& request,
                                                   const ScenarioTemplate& s) {
    std::vector<std::string> labels;
    for (const auto& p : s.pii_plan) labels.push_back(p.label);

    std::string last_error;
    for (int attempt = 0; attempt < cfg_.attempts_per_item; ++attempt) {
        ChatRequest req;
        req.task = "response";
        req.system_prompt = k_response_prompt;
        json input = {{"labels", labels},
                      {"attempt", attempt},
                      {"scenario", s.id},
                      {"request_body", request.message.body}};
        req.structured_input = input.dump();
        req.user_content = "Request body:\n" + request.message.body;

        try {
            auto result = gateway_->complete(req);
            json doc = json::parse(result.raw_text);
            AnnotatedMessage am;
            am.id = request.id + "-resp";
            am.provenance = Provenance::ground_truth;
            am.message.kind = MessageKind::response;
            am.message.status = doc.at("status").get<int>();
            am.message.headers = parse_headers(doc.at("headers"));
            am.message.body = doc.at("body").get<std::string>();
            for (const auto& a : doc.at("annotations")) {
                Annotation ann{a.at("data_type").get<std::string>(),
                               a.at("value").get<std::string>(),
                               placement_from_string(a.value("placement", "body"))};
                if (!taxonomy_.contains(ann.data_type))
                    throw Error("annotation label \"" + ann.data_type + "\" not in taxonomy");
                am.annotations.push_back(std::move(ann));
            }
            check_message_invariants(am);
            for (const auto& a : am.annotations) message_coverage_[a.data_type]++;
            return am;
        } catch (const std::exception& e) {
            last_error = e.what();
            failures_.push_back({request.id + " response", e.what()});
        }
    }
    throw GenerationBudgetExhausted("response generation for " + request.id +
                                    " exhausted its budget: " + last_error);
}

CoverageReport coverage_report(const std::vector<AnnotatedMessage>& corpus,
                               const std::vector<ScenarioTemplate>& scenarios,
                               const Taxonomy& t) {
    CoverageReport r;
    for (const auto& s : scenarios) {
        std::set<std::string> labels;
        for (const auto& p : s.pii_plan) labels.insert(p.label);
        for (const auto& l : labels) r.scenario_coverage[l]++;
    }
    for (const auto& m : corpus) {
        std::set<std::string> labels;
        for (const auto& a : m.annotations) labels.insert(a.data_type);
        for (const auto& l : labels) r.message_coverage[l]++;
    }
    for (const auto& e : t.entries()) {
        auto it = r.message_coverage.find(e.label);
        if (it == r.message_coverage.end() || it->second == 0) r.uncovered.insert(e.label);
    }
    return r;
}

std::string serialize_scenarios(const std::vector<ScenarioTemplate>& scenarios) {
    json doc = json::array();
    for (const auto& s : scenarios) {
        json plan = json::array();
        for (const auto& p : s.pii_plan) {
            json placements = json::array();
            for (const auto& pl : p.placements) placements.push_back(to_string(pl));
            plan.push_back({{"label", p.label}, {"weight", p.weight}, {"placements", placements}});
        }
        doc.push_back({{"id", s.id},
                       {"goal", s.goal},
                       {"hosts", s.hosts},
                       {"endpoints", s.endpoints},
                       {"methods", s.methods},
                       {"content_types", s.content_types},
                       {"pii_plan", plan}});
    }
    return doc.dump(2);
}

std::vector<ScenarioTemplate> parse_scenarios(const std::string& json_text) {
    json doc = json::parse(json_text);
    std::vector<ScenarioTemplate> out;
    for (const auto& item : doc) {
        ScenarioTemplate s;
        s.id = item.at("id").get<std::string>();
        s.goal = item.at("goal").get<std::string>();
        s.hosts = item.at("hosts").get<std::vector<std::string>>();
        s.endpoints = item.at("endpoints").get<std::vector<std::string>>();
        s.methods = item.at("methods").get<std::vector<std::string>>();
        s.content_types = item.at("content_types").get<std::vector<std::string>>();
        for (const auto& p : item.at("pii_plan")) {
            PiiPlanEntry e;
            e.label = p.at("label").get<std::string>();
            e.weight = p.at("weight").get<double>();
            e.placements.clear();
            for (const auto& pl : p.at("placements"))
                e.placements.insert(placement_from_string(pl.get<std::string>()));
            s.pii_plan.push_back(std::move(e));
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string serialize_coverage(const CoverageReport& r) {
    json doc;
    doc["scenario_coverage"] = r.scenario_coverage;
    doc["message_coverage"] = r.message_coverage;
    doc["uncovered"] = r.uncovered;
    return doc.dump(2);
}

}  // namespace pii
