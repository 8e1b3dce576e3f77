#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pii/taxonomy.hpp"

namespace pii {

enum class MessageKind { request, response };
enum class Placement { path, query, header, body };
enum class Provenance { ground_truth, predicted };

std::string to_string(MessageKind k);
std::string to_string(Placement p);
std::string to_string(Provenance p);
MessageKind message_kind_from_string(const std::string& s);
Placement placement_from_string(const std::string& s);
Provenance provenance_from_string(const std::string& s);

struct Header {
    std::string name;
    std::string value;
    bool operator==(const Header&) const = default;
};

struct HttpMessage {
    MessageKind kind = MessageKind::request;
    std::optional<std::string> method;   // requests only
    std::optional<std::string> path;     // requests only
    std::optional<std::string> query;
    std::optional<int> status;           // responses only, 100-599
    std::vector<Header> headers;
    std::string body;                    // UTF-8 text, replacement applied at ingestion

    bool operator==(const HttpMessage&) const = default;
};

struct Annotation {
    std::string data_type;
    std::string value;
    Placement placement = Placement::body;

    bool operator==(const Annotation&) const = default;
    auto operator<=>(const Annotation&) const = default;
};

struct AnnotatedMessage {
    std::string id;
    HttpMessage message;
    std::vector<Annotation> annotations;
    Provenance provenance = Provenance::ground_truth;
    std::optional<std::string> stage;

    bool operator==(const AnnotatedMessage&) const = default;
};

// Checks structural invariants (kind/method/status consistency, header names,
// non-empty annotation values, no duplicate triples). Throws Error on violation.
void check_message_invariants(const AnnotatedMessage& am);

// All non-overlapping leftmost occurrences of ann.value in the component named
// by ann.placement. Throws PlacementUnavailable when the component is absent.
std::vector<std::pair<std::size_t, std::size_t>> locate_value(const HttpMessage& msg,
                                                              const Annotation& ann);

// Explicit-value requirement: the annotation value occurs verbatim in its
// placement component.
bool value_present(const HttpMessage& msg, const Annotation& ann);

// One JSONL record per message; parse(serialize(x)) == x.
std::string serialize_message(const AnnotatedMessage& am);
AnnotatedMessage parse_message(const std::string& record);

struct DatasetIssue {
    std::string id;
    std::string detail;
};

// Reads a JSONL dataset. With `taxonomy` given, annotation labels must be
// members; ground-truth records must pass the explicit-value check. Collected
// issues cause an Error naming the offending records unless `issues` is
// supplied, in which case they are reported and offending records skipped.
std::vector<AnnotatedMessage> load_dataset(const std::string& path,
                                           const Taxonomy* taxonomy = nullptr,
                                           std::vector<DatasetIssue>* issues = nullptr);
void save_dataset(const std::string& path, const std::vector<AnnotatedMessage>& msgs);

}  // namespace pii
