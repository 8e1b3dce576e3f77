#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

namespace pii {

enum class Sensitivity { low, medium, high };

std::string to_string(Sensitivity s);
Sensitivity sensitivity_from_string(const std::string& s);

struct TaxonomyEntry {
    std::string label;
    std::string description;
    std::optional<std::string> category;
    std::optional<Sensitivity> sensitivity;

    bool operator==(const TaxonomyEntry&) const = default;
};

// Runtime-supplied label scheme. Entries keep document order; labels are
// unique under case-sensitive comparison.
class Taxonomy {
public:
    Taxonomy(std::string name, std::vector<TaxonomyEntry> entries);

    const std::string& name() const { return name_; }
    const std::vector<TaxonomyEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    // Exact-string membership; "Email" being present says nothing about "email".
    bool contains(const std::string& label) const;
    const TaxonomyEntry* find(const std::string& label) const;
    std::set<std::string> label_set() const;

    bool operator==(const Taxonomy&) const = default;

private:
    std::string name_;
    std::vector<TaxonomyEntry> entries_;
};

Taxonomy load_taxonomy(const std::string& path);
Taxonomy parse_taxonomy(const std::string& json_text);
std::string serialize_taxonomy(const Taxonomy& t);

}  // namespace pii
