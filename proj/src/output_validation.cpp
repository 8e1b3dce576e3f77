#include "pii/output_validation.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "pii/errors.hpp"

namespace pii {

using nlohmann::json;

std::string to_string(ValidationStatus s) {
    switch (s) {
        case ValidationStatus::valid: return "valid";
        case ValidationStatus::corrected: return "corrected";
        case ValidationStatus::rejected: return "rejected";
    }
    return "valid";
}

std::string ValidationOutcome::to_json() const {
    json doc;
    doc["status"] = to_string(status);
    doc["corrections"] = json::array();
    for (const auto& c : corrections)
        doc["corrections"].push_back({{"invalid_label", c.invalid_label},
                                      {"corrected_label", c.corrected_label},
                                      {"similarity", c.similarity}});
    doc["rejections"] = json::array();
    for (const auto& r : rejections)
        doc["rejections"].push_back({{"invalid_label", r.invalid_label},
                                     {"best_similarity", r.best_similarity},
                                     {"reason", r.reason}});
    doc["soft_repairs"] = soft_repairs;
    return doc.dump();
}

namespace {

// First balanced JSON object in free text; fences and prose around it become a
// soft repair, never a hard failure.
std::optional<std::string> extract_json_object(const std::string& raw, bool& repaired) {
    auto first = raw.find('{');
    if (first == std::string::npos) return std::nullopt;
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t i = first; i < raw.size(); ++i) {
        char c = raw[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{') ++depth;
        else if (c == '}' && --depth == 0) {
            repaired = first != 0 || i + 1 != raw.size();
            return raw.substr(first, i - first + 1);
        }
    }
    return std::nullopt;
}

}  // namespace

StructuredPayload validate_structure(const std::string& raw, OutputSchema schema) {
    StructuredPayload out;
    out.schema = schema;

    bool repaired = false;
    std::string candidate = raw;
    json doc;
    try {
        doc = json::parse(candidate);
    } catch (const json::exception&) {
        auto extracted = extract_json_object(raw, repaired);
        if (!extracted) throw Unparseable("no JSON object found in model output");
        try {
            doc = json::parse(*extracted);
        } catch (const json::exception& e) {
            throw Unparseable(std::string("extracted JSON does not parse: ") + e.what());
        }
    }
    if (repaired) out.soft_repairs.push_back("stripped surrounding text to reach a JSON object");

    if (!doc.is_object()) throw SchemaViolation("top level must be a JSON object");
    const char* key = schema == OutputSchema::annotations ? "annotations" : "labels";
    if (doc.size() != 1 || !doc.contains(key))
        throw SchemaViolation(std::string("top level must have exactly the key \"") + key +
                              "\"");
    if (!doc[key].is_array())
        throw SchemaViolation(std::string("\"") + key + "\" must be an array");

    if (schema == OutputSchema::labels) {
        for (const auto& l : doc[key]) {
            if (!l.is_string()) throw SchemaViolation("labels must be strings");
            out.labels.push_back(l.get<std::string>());
        }
        return out;
    }

    for (const auto& item : doc[key]) {
        if (!item.is_object()) throw SchemaViolation("annotation entries must be objects");
        if (item.size() != 2 || !item.contains("data_type") || !item.contains("value"))
            throw SchemaViolation(
                "annotation objects must have exactly {data_type, value}");
        if (!item["data_type"].is_string() || !item["value"].is_string())
            throw SchemaViolation("data_type and value must be strings");
        out.annotations.emplace_back(item["data_type"].get<std::string>(),
                                     item["value"].get<std::string>());
    }
    return out;
}

std::variant<LabelCorrection, LabelRejection> correct_label(const std::string& label,
                                                            const Taxonomy& taxonomy,
                                                            double threshold, Gateway& gateway) {
    EmbeddingVector lv = gateway.embed(label);
    double best = -2.0;
    std::string best_label;
    for (const auto& entry : taxonomy.entries()) {
        double sim = cosine(lv, gateway.embed(entry.label));
        if (sim > best) {  // strict >: ties keep the earlier entry
            best = sim;
            best_label = entry.label;
        }
    }
    if (best >= threshold) return LabelCorrection{label, best_label, best};
    return LabelRejection{label, best, "below correction threshold"};
}

namespace {

struct LabelResolution {
    std::optional<std::string> label;  // nullopt: dropped/flagged
};

LabelResolution resolve_label(const std::string& raw_label, const Taxonomy& taxonomy,
                              InvalidLabelPolicy policy, double threshold, Gateway& gateway,
                              ValidationOutcome& outcome) {
    if (taxonomy.contains(raw_label)) return {raw_label};
    auto result = correct_label(raw_label, taxonomy, threshold, gateway);
    if (auto* corr = std::get_if<LabelCorrection>(&result)) {
        outcome.corrections.push_back(*corr);
        return {corr->corrected_label};
    }
    auto rej = std::get<LabelRejection>(result);
    outcome.rejections.push_back(rej);
    if (policy == InvalidLabelPolicy::flag) outcome.needs_requery = true;
    return {std::nullopt};
}

void finalize_status(ValidationOutcome& outcome) {
    if (!outcome.rejections.empty())
        outcome.status = ValidationStatus::rejected;
    else if (!outcome.corrections.empty())
        outcome.status = ValidationStatus::corrected;
    else
        outcome.status = ValidationStatus::valid;
}

}  // namespace

ValidatedAnnotations validate_annotation_set(const StructuredPayload& payload,
                                             const Taxonomy& taxonomy, const std::string& body,
                                             InvalidLabelPolicy policy, double threshold,
                                             Gateway& gateway) {
    ValidatedAnnotations out;
    out.outcome.soft_repairs = payload.soft_repairs;

    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& [raw_label, value] : payload.annotations) {
        if (value.empty()) {
            out.outcome.rejections.push_back({raw_label, 0.0, "empty value"});
            continue;
        }
        auto resolved =
            resolve_label(raw_label, taxonomy, policy, threshold, gateway, out.outcome);
        if (!resolved.label) continue;
        if (body.find(value) == std::string::npos) {
            out.outcome.rejections.push_back({*resolved.label, 1.0, "value_not_found"});
            continue;
        }
        if (!seen.insert({*resolved.label, value}).second) continue;  // exact duplicate
        out.annotations.push_back({*resolved.label, value, Placement::body});
    }
    finalize_status(out.outcome);
    return out;
}

ValidatedLabels validate_label_set(const StructuredPayload& payload, const Taxonomy& taxonomy,
                                   InvalidLabelPolicy policy, double threshold,
                                   Gateway& gateway) {
    ValidatedLabels out;
    out.outcome.soft_repairs = payload.soft_repairs;
    std::set<std::string> seen;
    for (const auto& raw_label : payload.labels) {
        auto resolved =
            resolve_label(raw_label, taxonomy, policy, threshold, gateway, out.outcome);
        if (!resolved.label) continue;
        if (seen.insert(*resolved.label).second) out.labels.push_back(*resolved.label);
    }
    finalize_status(out.outcome);
    return out;
}

}  // namespace pii
