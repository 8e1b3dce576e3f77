#include "pii/exemplar_store.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "pii/errors.hpp"
#include "pii/preprocess.hpp"

namespace pii {

using nlohmann::json;

ExemplarStore ExemplarStore::build(const std::vector<AnnotatedMessage>& example_set,
                                   Gateway& gateway) {
    ExemplarStore store;
    for (const auto& am : example_set) {
        Exemplar e;
        e.message_text = normalize_body(am.message.body).normalized;
        for (const auto& a : am.annotations)
            if (a.placement == Placement::body) e.annotations.push_back(a);
        for (const auto& a : e.annotations) e.label_set.insert(a.data_type);
        if (e.message_text.empty()) continue;
        e.embedding = gateway.embed(e.message_text);
        store.add(std::move(e));
    }
    return store;
}

void ExemplarStore::add(Exemplar e) {
    if (dimension_ == 0) dimension_ = e.embedding.dimension();
    if (e.embedding.dimension() != dimension_)
        throw DimensionMismatch("exemplar embedding dimension " +
                                std::to_string(e.embedding.dimension()) +
                                " does not match store dimension " + std::to_string(dimension_));
    exemplars_.push_back(std::move(e));
}

std::vector<const Exemplar*> ExemplarStore::retrieve_similar(const EmbeddingVector& query,
                                                             std::size_t k) const {
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(exemplars_.size());
    for (std::size_t i = 0; i < exemplars_.size(); ++i)
        scored.emplace_back(cosine(query, exemplars_[i].embedding), i);
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<const Exemplar*> out;
    for (std::size_t i = 0; i < std::min(k, scored.size()); ++i)
        out.push_back(&exemplars_[scored[i].second]);
    return out;
}

CoverResult ExemplarStore::retrieve_label_cover(const std::set<std::string>& targets,
                                                std::size_t max_n,
                                                const EmbeddingVector* query) const {
    CoverResult res;
    res.uncovered = targets;
    std::vector<bool> used(exemplars_.size(), false);

    while (!res.uncovered.empty() && res.exemplars.size() < max_n) {
        std::size_t best_idx = 0;
        std::size_t best_gain = 0;
        double best_sim = -2.0;
        for (std::size_t i = 0; i < exemplars_.size(); ++i) {
            if (used[i]) continue;
            std::size_t gain = 0;
            for (const auto& l : exemplars_[i].label_set)
                if (res.uncovered.count(l)) ++gain;
            if (gain == 0) continue;
            double sim = query ? cosine(*query, exemplars_[i].embedding) : -2.0;
            if (gain > best_gain || (gain == best_gain && query && sim > best_sim)) {
                best_gain = gain;
                best_idx = i;
                best_sim = sim;
            }
        }
        if (best_gain == 0) break;  // nothing adds coverage
        used[best_idx] = true;
        res.exemplars.push_back(&exemplars_[best_idx]);
        for (const auto& l : exemplars_[best_idx].label_set) res.uncovered.erase(l);
    }
    return res;
}

void ExemplarStore::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write exemplar store: " + path);
    for (const auto& e : exemplars_) {
        json rec;
        rec["message_text"] = e.message_text;
        rec["annotations"] = json::array();
        for (const auto& a : e.annotations)
            rec["annotations"].push_back({{"data_type", a.data_type},
                                          {"value", a.value},
                                          {"placement", to_string(a.placement)}});
        rec["embedding"] = e.embedding.values;
        out << rec.dump() << '\n';
    }
}

ExemplarStore ExemplarStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open exemplar store: " + path);
    ExemplarStore store;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json rec = json::parse(line);
        Exemplar e;
        e.message_text = rec.at("message_text").get<std::string>();
        for (const auto& a : rec.at("annotations"))
            e.annotations.push_back({a.at("data_type").get<std::string>(),
                                     a.at("value").get<std::string>(),
                                     placement_from_string(a.at("placement").get<std::string>())});
        for (const auto& a : e.annotations) e.label_set.insert(a.data_type);
        e.embedding.values = rec.at("embedding").get<std::vector<double>>();
        store.add(std::move(e));
    }
    return store;
}

}  // namespace pii
