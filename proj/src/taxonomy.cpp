#include "pii/taxonomy.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "pii/errors.hpp"

namespace pii {

using nlohmann::json;

std::string to_string(Sensitivity s) {
    switch (s) {
        case Sensitivity::low: return "low";
        case Sensitivity::medium: return "medium";
        case Sensitivity::high: return "high";
    }
    return "low";
}

Sensitivity sensitivity_from_string(const std::string& s) {
    if (s == "low") return Sensitivity::low;
    if (s == "medium") return Sensitivity::medium;
    if (s == "high") return Sensitivity::high;
    throw MalformedDocument("unknown sensitivity level: \"" + s + "\"");
}

namespace {

std::string trimmed(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Taxonomy::Taxonomy(std::string name, std::vector<TaxonomyEntry> entries)
    : name_(std::move(name)), entries_(std::move(entries)) {
    if (entries_.empty()) throw EmptyTaxonomy("taxonomy \"" + name_ + "\" has no entries");
    std::unordered_set<std::string> seen;
    for (const auto& e : entries_) {
        if (trimmed(e.label).empty())
            throw MalformedDocument("taxonomy \"" + name_ + "\" contains an empty label");
        if (!seen.insert(e.label).second) throw DuplicateLabel(e.label);
    }
}

bool Taxonomy::contains(const std::string& label) const {
    return find(label) != nullptr;
}

const TaxonomyEntry* Taxonomy::find(const std::string& label) const {
    for (const auto& e : entries_)
        if (e.label == label) return &e;
    return nullptr;
}

std::set<std::string> Taxonomy::label_set() const {
    std::set<std::string> out;
    for (const auto& e : entries_) out.insert(e.label);
    return out;
}

Taxonomy parse_taxonomy(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw MalformedDocument(std::string("taxonomy document is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("name") || !doc.contains("entries"))
        throw MalformedDocument("taxonomy document must be an object with \"name\" and \"entries\"");
    if (!doc["name"].is_string() || !doc["entries"].is_array())
        throw MalformedDocument("\"name\" must be a string and \"entries\" an array");

    std::vector<TaxonomyEntry> entries;
    for (const auto& item : doc["entries"]) {
        if (!item.is_object() || !item.contains("label") || !item["label"].is_string())
            throw MalformedDocument("every entry needs a string \"label\"");
        TaxonomyEntry e;
        e.label = item["label"].get<std::string>();
        if (item.contains("description")) {
            if (!item["description"].is_string())
                throw MalformedDocument("entry \"description\" must be a string");
            e.description = item["description"].get<std::string>();
        }
        if (item.contains("category")) {
            if (!item["category"].is_string())
                throw MalformedDocument("entry \"category\" must be a string");
            e.category = item["category"].get<std::string>();
        }
        if (item.contains("sensitivity")) {
            if (!item["sensitivity"].is_string())
                throw MalformedDocument("entry \"sensitivity\" must be a string");
            e.sensitivity = sensitivity_from_string(item["sensitivity"].get<std::string>());
        }
        entries.push_back(std::move(e));
    }
    return Taxonomy(doc["name"].get<std::string>(), std::move(entries));
}

Taxonomy load_taxonomy(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedDocument("cannot open taxonomy document: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_taxonomy(buf.str());
}

std::string serialize_taxonomy(const Taxonomy& t) {
    json doc;
    doc["name"] = t.name();
    doc["entries"] = json::array();
    for (const auto& e : t.entries()) {
        json item;
        item["label"] = e.label;
        item["description"] = e.description;
        if (e.category) item["category"] = *e.category;
        if (e.sensitivity) item["sensitivity"] = to_string(*e.sensitivity);
        doc["entries"].push_back(std::move(item));
    }
    return doc.dump(2);
}

}  // namespace pii
