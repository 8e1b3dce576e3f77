#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pii/checkpoint.hpp"
#include "pii/exemplar_store.hpp"
#include "pii/http_model.hpp"
#include "pii/llm_gateway.hpp"
#include "pii/output_validation.hpp"
#include "pii/taxonomy.hpp"

namespace pii {

enum class PipelineMode { single_stage, two_stage };

struct PromptTemplates {
    std::string classifier;
    std::string annotator;
    std::string reviewer;
};

// Built-in templates; the annotator prompt is the default system prompt, the
// classifier and reviewer mirror its structure.
PromptTemplates default_prompts();
PromptTemplates load_prompts(const std::string& dir);

struct RetrievalConfig {
    std::size_t k = 3;       // similarity neighbours
    std::size_t max_n = 5;   // label-coverage exemplars
};

struct PipelineConfig {
    PipelineMode mode = PipelineMode::two_stage;
    bool review_enabled = false;
    RetrievalConfig retrieval;
    double correction_threshold = 0.85;
    PromptTemplates prompts = default_prompts();
    std::string checkpoint_dir;
    int classifier_requery_budget = 1;
};

// Two-column taxonomy table as rendered into every prompt; descriptions
// truncated at 200 characters.
std::string render_taxonomy_table(const Taxonomy& t);

class AnnotationPipeline {
public:
    AnnotationPipeline(Taxonomy taxonomy, std::shared_ptr<Gateway> gateway,
                       std::shared_ptr<const ExemplarStore> store, PipelineConfig cfg);

    // Label-level classification over the normalized body; empty set is legal.
    std::set<std::string> classify(const std::string& body, ValidationOutcome* outcome = nullptr);

    // Instance extraction. In two-stage mode `labels` must be given; an empty
    // set short-circuits to no annotations without a model call.
    std::vector<Annotation> annotate(const std::string& body,
                                     const std::optional<std::set<std::string>>& labels,
                                     ValidationOutcome* outcome = nullptr);

    // Wholesale replacement after validation; prior returned on stage failure.
    std::vector<Annotation> review(const std::string& body,
                                   const std::vector<Annotation>& prior,
                                   ValidationOutcome* outcome = nullptr);

    // Full run: normalize, stage chain per config, one checkpoint file per
    // stage under cfg.checkpoint_dir. Per-message failures are isolated.
    std::map<std::string, std::vector<CheckpointRecord>> run(
        const std::vector<AnnotatedMessage>& dataset);

    const PipelineConfig& config() const { return cfg_; }

private:
    ChatRequest build_request(const std::string& task, const std::string& system_prompt,
                              const std::string& body,
                              const std::set<std::string>* target_labels,
                              const std::vector<Annotation>* prior);

    Taxonomy taxonomy_;
    std::shared_ptr<Gateway> gateway_;
    std::shared_ptr<const ExemplarStore> store_;
    PipelineConfig cfg_;
    std::string taxonomy_table_;
};

}  // namespace pii
