#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pii/http_model.hpp"
#include "pii/llm_gateway.hpp"
#include "pii/taxonomy.hpp"

namespace pii {

enum class ValidationStatus { valid, corrected, rejected };
enum class InvalidLabelPolicy { discard, flag };

std::string to_string(ValidationStatus s);

struct LabelCorrection {
    std::string invalid_label;
    std::string corrected_label;
    double similarity = 0;
};

struct LabelRejection {
    std::string invalid_label;
    double best_similarity = 0;
    std::string reason;
};

struct ValidationOutcome {
    ValidationStatus status = ValidationStatus::valid;
    std::vector<LabelCorrection> corrections;
    std::vector<LabelRejection> rejections;
    std::vector<std::string> soft_repairs;
    bool needs_requery = false;  // set under the flag policy

    std::string to_json() const;
};

// Schema the annotator/reviewer stages must produce: exactly
// {"annotations": [{"data_type": str, "value": str}, ...]}.
// The classifier schema is {"labels": [str, ...]}.
enum class OutputSchema { annotations, labels };

struct StructuredPayload {
    OutputSchema schema;
    std::vector<std::pair<std::string, std::string>> annotations;  // (data_type, value)
    std::vector<std::string> labels;
    std::vector<std::string> soft_repairs;
};

// Strict structural validation. Tolerates surrounding code fences / prose by
// extracting the first balanced JSON object (recorded as a soft repair).
// Throws Unparseable or SchemaViolation.
StructuredPayload validate_structure(const std::string& raw, OutputSchema schema);

// Embedding-based nearest-neighbour label correction. Precondition: l is not
// an exact taxonomy member. Ties broken by taxonomy entry order.
std::variant<LabelCorrection, LabelRejection> correct_label(const std::string& label,
                                                            const Taxonomy& taxonomy,
                                                            double threshold,
                                                            Gateway& gateway);

struct ValidatedAnnotations {
    ValidationOutcome outcome;
    std::vector<Annotation> annotations;
};

// Per annotation: exact members kept, near-misses corrected above threshold,
// the rest dropped or flagged per policy. Values must occur verbatim in
// `body`; exact duplicate (label, value) pairs collapse to one.
ValidatedAnnotations validate_annotation_set(const StructuredPayload& payload,
                                             const Taxonomy& taxonomy, const std::string& body,
                                             InvalidLabelPolicy policy, double threshold,
                                             Gateway& gateway);

// Same contract for a bare label set (classifier output).
struct ValidatedLabels {
    ValidationOutcome outcome;
    std::vector<std::string> labels;
};
ValidatedLabels validate_label_set(const StructuredPayload& payload, const Taxonomy& taxonomy,
                                   InvalidLabelPolicy policy, double threshold, Gateway& gateway);

}  // namespace pii
