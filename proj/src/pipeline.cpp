#include "pii/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "pii/errors.hpp"
#include "pii/preprocess.hpp"

namespace pii {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot open prompt template: " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

PromptTemplates load_prompts(const std::string& dir) {
    namespace fs = std::filesystem;
    PromptTemplates t = default_prompts();
    if (fs::exists(fs::path(dir) / "classifier.txt"))
        t.classifier = read_file(fs::path(dir) / "classifier.txt");
    if (fs::exists(fs::path(dir) / "annotator.txt"))
        t.annotator = read_file(fs::path(dir) / "annotator.txt");
    if (fs::exists(fs::path(dir) / "reviewer.txt"))
        t.reviewer = read_file(fs::path(dir) / "reviewer.txt");
    return t;
}

std::string render_taxonomy_table(const Taxonomy& t) {
    std::ostringstream out;
    out << "| PII Data type | Description |\n|---|---|\n";
    for (const auto& e : t.entries()) {
        std::string desc = e.description;
        if (desc.size() > 200) desc = desc.substr(0, 200);
        for (char& c : desc)
            if (c == '\n' || c == '|') c = ' ';
        out << "| " << e.label << " | " << desc << " |\n";
    }
    return out.str();
}

AnnotationPipeline::AnnotationPipeline(Taxonomy taxonomy, std::shared_ptr<Gateway> gateway,
                                       std::shared_ptr<const ExemplarStore> store,
                                       PipelineConfig cfg)
    : taxonomy_(std::move(taxonomy)),
      gateway_(std::move(gateway)),
      store_(std::move(store)),
      cfg_(std::move(cfg)),
      taxonomy_table_(render_taxonomy_table(taxonomy_)) {}

ChatRequest AnnotationPipeline::build_request(const std::string& task,
                                              const std::string& system_prompt,
                                              const std::string& body,
                                              const std::set<std::string>* target_labels,
                                              const std::vector<Annotation>* prior) {
    ChatRequest req;
    req.task = task;
    req.system_prompt = system_prompt;

    std::ostringstream user;
    user << "## PII taxonomy table\n\n" << taxonomy_table_ << "\n";
    if (target_labels) {
        user << "## Target labels\n\nAnnotate values only for these labels:\n";
        for (const auto& l : *target_labels) user << "- " << l << "\n";
        user << "\n";
    }
    if (prior) {
        json prior_json = json::array();
        for (const auto& a : *prior)
            prior_json.push_back({{"data_type", a.data_type}, {"value", a.value}});
        user << "## Prior annotations\n\n" << prior_json.dump() << "\n\n";
    }
    user << "## HTTP body\n\n" << body;
    req.user_content = user.str();

    json input;
    input["body"] = body;
    if (target_labels) input["labels"] = *target_labels;
    if (prior) {
        input["prior"] = json::array();
        for (const auto& a : *prior)
            input["prior"].push_back({{"data_type", a.data_type}, {"value", a.value}});
    }
    req.structured_input = input.dump();

    // Similarity neighbours; annotation additionally pulls coverage exemplars
    // over the target labels.
    if (store_ && store_->size() > 0 && !body.empty()) {
        EmbeddingVector query = gateway_->embed(body);
        auto similar = store_->retrieve_similar(query, cfg_.retrieval.k);
        std::vector<const Exemplar*> chosen(similar.begin(), similar.end());
        if (task == "annotate" && target_labels) {
            auto cover = store_->retrieve_label_cover(*target_labels, cfg_.retrieval.max_n,
                                                      &query);
            for (const auto* e : cover.exemplars)
                if (std::find(chosen.begin(), chosen.end(), e) == chosen.end())
                    chosen.push_back(e);
        }
        for (const auto* e : chosen) {
            json expected;
            if (task == "classify") {
                expected["labels"] = e->label_set;
            } else {
                expected["annotations"] = json::array();
                for (const auto& a : e->annotations)
                    expected["annotations"].push_back(
                        {{"data_type", a.data_type}, {"value", a.value}});
            }
            req.exemplars.emplace_back(e->message_text, expected.dump());
        }
    }
    return req;
}

std::set<std::string> AnnotationPipeline::classify(const std::string& body,
                                                   ValidationOutcome* outcome) {
    if (body.find_first_not_of(" \t\r\n") == std::string::npos) return {};

    auto req = build_request("classify", cfg_.prompts.classifier, body, nullptr, nullptr);
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.classifier_requery_budget; ++attempt) {
        try {
            auto result = gateway_->complete(req);
            auto payload = validate_structure(result.raw_text, OutputSchema::labels);
            auto validated = validate_label_set(payload, taxonomy_, InvalidLabelPolicy::flag,
                                                cfg_.correction_threshold, *gateway_);
            if (outcome) *outcome = validated.outcome;
            if (validated.outcome.needs_requery && attempt < cfg_.classifier_requery_budget)
                continue;
            return {validated.labels.begin(), validated.labels.end()};
        } catch (const Error& e) {
            last_error = e.what();
        }
    }
    throw StageFailed("classifier failed after re-query budget: " + last_error);
}

std::vector<Annotation> AnnotationPipeline::annotate(
    const std::string& body, const std::optional<std::set<std::string>>& labels,
    ValidationOutcome* outcome) {
    const bool two_stage = cfg_.mode == PipelineMode::two_stage;
    if (two_stage && !labels)
        throw StageFailed("two-stage annotation needs the classifier's label set");
    if (two_stage && labels->empty()) return {};  // vacuous extraction, no model call

    auto req = build_request("annotate", cfg_.prompts.annotator, body,
                             two_stage ? &*labels : nullptr, nullptr);
    try {
        auto result = gateway_->complete(req);
        auto payload = validate_structure(result.raw_text, OutputSchema::annotations);
        auto validated =
            validate_annotation_set(payload, taxonomy_, body, InvalidLabelPolicy::discard,
                                    cfg_.correction_threshold, *gateway_);
        if (outcome) *outcome = validated.outcome;
        if (!two_stage) return validated.annotations;
        // Extraction stays inside the predicted label set; corrections that
        // land outside it are dropped.
        std::vector<Annotation> constrained;
        for (const auto& a : validated.annotations)
            if (labels->count(a.data_type)) constrained.push_back(a);
        return constrained;
    } catch (const StageFailed&) {
        throw;
    } catch (const Error& e) {
        throw StageFailed(std::string("annotator failed: ") + e.what());
    }
}

std::vector<Annotation> AnnotationPipeline::review(const std::string& body,
                                                   const std::vector<Annotation>& prior,
                                                   ValidationOutcome* outcome) {
    auto req = build_request("review", cfg_.prompts.reviewer, body, nullptr, &prior);
    try {
        auto result = gateway_->complete(req);
        auto payload = validate_structure(result.raw_text, OutputSchema::annotations);
        auto validated =
            validate_annotation_set(payload, taxonomy_, body, InvalidLabelPolicy::discard,
                                    cfg_.correction_threshold, *gateway_);
        if (outcome) *outcome = validated.outcome;
        return validated.annotations;  // wholesale replacement after validation
    } catch (const Error& e) {
        // Review never breaks a message: fall back to the prior set, flagged.
        if (outcome) {
            outcome->status = ValidationStatus::rejected;
            outcome->soft_repairs.push_back(std::string("review stage failed, prior kept: ") +
                                            e.what());
        }
        return prior;
    }
}

std::map<std::string, std::vector<CheckpointRecord>> AnnotationPipeline::run(
    const std::vector<AnnotatedMessage>& dataset) {
    const bool two_stage = cfg_.mode == PipelineMode::two_stage;
    std::vector<std::string> stages;
    if (two_stage) {
        stages.push_back("classifier");
        stages.push_back("annotator_two");
        if (cfg_.review_enabled) stages.push_back("reviewer_two");
    } else {
        stages.push_back("annotator_single");
        if (cfg_.review_enabled) stages.push_back("reviewer_single");
    }

    std::map<std::string, std::vector<CheckpointRecord>> out;
    for (const auto& s : stages) out[s].resize(dataset.size());

    auto process = [&](std::size_t i) {
        const auto& am = dataset[i];
        std::string body = normalize_body(am.message.body).normalized;
        try {
            std::vector<Annotation> annotations;
            if (two_stage) {
                ValidationOutcome vo;
                auto labels = classify(body, &vo);
                auto& rec = out["classifier"][i];
                rec.id = am.id;
                rec.stage = "classifier";
                rec.labels.assign(labels.begin(), labels.end());
                rec.validation_json = vo.to_json();

                ValidationOutcome vo2;
                annotations = annotate(body, labels, &vo2);
                auto& rec2 = out["annotator_two"][i];
                rec2.id = am.id;
                rec2.stage = "annotator_two";
                rec2.annotations = annotations;
                rec2.validation_json = vo2.to_json();
            } else {
                ValidationOutcome vo;
                annotations = annotate(body, std::nullopt, &vo);
                auto& rec = out["annotator_single"][i];
                rec.id = am.id;
                rec.stage = "annotator_single";
                rec.annotations = annotations;
                rec.validation_json = vo.to_json();
            }
            if (cfg_.review_enabled) {
                const std::string stage = two_stage ? "reviewer_two" : "reviewer_single";
                ValidationOutcome vo;
                auto reviewed = review(body, annotations, &vo);
                auto& rec = out[stage][i];
                rec.id = am.id;
                rec.stage = stage;
                rec.annotations = reviewed;
                rec.validation_json = vo.to_json();
            }
        } catch (const Error& e) {
            for (const auto& s : stages) {
                auto& rec = out[s][i];
                if (!rec.id.empty()) continue;  // stage already completed
                rec.id = am.id;
                rec.stage = s;
                rec.failed = true;
                rec.failure_reason = e.what();
            }
        }
    };

    int workers = std::max(1, gateway_->max_in_flight());
    if (workers == 1 || dataset.size() < 2) {
        for (std::size_t i = 0; i < dataset.size(); ++i) process(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < dataset.size();
                     i = next.fetch_add(1))
                    process(i);
            });
        for (auto& t : pool) t.join();
    }

    if (!cfg_.checkpoint_dir.empty()) {
        std::filesystem::create_directories(cfg_.checkpoint_dir);
        for (const auto& s : stages)
            save_checkpoint((std::filesystem::path(cfg_.checkpoint_dir) / (s + ".jsonl")).string(),
                            out[s]);
    }
    return out;
}

}  // namespace pii
