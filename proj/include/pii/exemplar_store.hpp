#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pii/embedding.hpp"
#include "pii/http_model.hpp"
#include "pii/llm_gateway.hpp"

namespace pii {

struct Exemplar {
    std::string message_text;  // normalized body
    std::vector<Annotation> annotations;
    EmbeddingVector embedding;
    std::set<std::string> label_set;  // derived from annotations
};

struct CoverResult {
    std::vector<const Exemplar*> exemplars;
    std::set<std::string> uncovered;
};

class ExemplarStore {
public:
    ExemplarStore() = default;

    // Normalizes each message body, embeds it, keeps body annotations.
    static ExemplarStore build(const std::vector<AnnotatedMessage>& example_set,
                               Gateway& gateway);

    void add(Exemplar e);
    const std::vector<Exemplar>& exemplars() const { return exemplars_; }
    std::size_t size() const { return exemplars_.size(); }
    std::size_t dimension() const { return dimension_; }

    // min(k, N) exemplars in non-increasing cosine order; ties by insertion
    // order. Exhaustive scan is the reference behaviour.
    std::vector<const Exemplar*> retrieve_similar(const EmbeddingVector& query,
                                                  std::size_t k) const;

    // Greedy cover of `targets`: repeatedly the exemplar adding the most
    // uncovered target labels. Equal gains prefer higher cosine to `query`
    // when given, else lower store index.
    CoverResult retrieve_label_cover(const std::set<std::string>& targets, std::size_t max_n,
                                     const EmbeddingVector* query = nullptr) const;

    void save(const std::string& path) const;
    static ExemplarStore load(const std::string& path);

private:
    std::vector<Exemplar> exemplars_;
    std::size_t dimension_ = 0;
};

}  // namespace pii
