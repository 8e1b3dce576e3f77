#include "pii/http_model.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pii/errors.hpp"

namespace pii {

using nlohmann::json;

std::string to_string(MessageKind k) {
    return k == MessageKind::request ? "request" : "response";
}

std::string to_string(Placement p) {
    switch (p) {
        case Placement::path: return "path";
        case Placement::query: return "query";
        case Placement::header: return "header";
        case Placement::body: return "body";
    }
    return "body";
}

std::string to_string(Provenance p) {
    return p == Provenance::ground_truth ? "ground_truth" : "predicted";
}

MessageKind message_kind_from_string(const std::string& s) {
    if (s == "request") return MessageKind::request;
    if (s == "response") return MessageKind::response;
    throw MalformedDocument("unknown message kind: \"" + s + "\"");
}

Placement placement_from_string(const std::string& s) {
    if (s == "path") return Placement::path;
    if (s == "query") return Placement::query;
    if (s == "header") return Placement::header;
    if (s == "body") return Placement::body;
    throw MalformedDocument("unknown placement: \"" + s + "\"");
}

Provenance provenance_from_string(const std::string& s) {
    if (s == "ground_truth") return Provenance::ground_truth;
    if (s == "predicted") return Provenance::predicted;
    throw MalformedDocument("unknown provenance: \"" + s + "\"");
}

namespace {

bool is_token(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        auto u = static_cast<unsigned char>(c);
        if (u <= ' ' || u == 127 || c == ':') return false;
    }
    return true;
}

// Text of the component an annotation points at. Header placement concatenates
// header values so substring search covers all of them.
std::optional<std::string> component_text(const HttpMessage& msg, Placement p) {
    switch (p) {
        case Placement::path:
            return msg.path;
        case Placement::query:
            return msg.query;
        case Placement::header: {
            if (msg.headers.empty()) return std::nullopt;
            std::string joined;
            for (const auto& h : msg.headers) {
                joined += h.value;
                joined.push_back('\n');
            }
            return joined;
        }
        case Placement::body:
            return msg.body;
    }
    return std::nullopt;
}

}  // namespace

void check_message_invariants(const AnnotatedMessage& am) {
    const auto& m = am.message;
    if (m.kind == MessageKind::request) {
        if (!m.method) throw Error("request " + am.id + " lacks a method");
        if (m.status) throw Error("request " + am.id + " carries a status code");
    } else {
        if (!m.status) throw Error("response " + am.id + " lacks a status code");
        if (*m.status < 100 || *m.status > 599)
            throw Error("response " + am.id + " has out-of-range status " +
                        std::to_string(*m.status));
        if (m.method || m.path) throw Error("response " + am.id + " carries method/path");
    }
    for (const auto& h : m.headers)
        if (!is_token(h.name)) throw Error("message " + am.id + " has an invalid header name");

    std::set<Annotation> seen;
    for (const auto& a : am.annotations) {
        if (a.value.empty()) throw Error("message " + am.id + " has an empty annotation value");
        if (!seen.insert(a).second)
            throw Error("message " + am.id + " has duplicate annotation (" + a.data_type +
                        ", " + a.value + ", " + to_string(a.placement) + ")");
    }
    if (am.provenance == Provenance::ground_truth) {
        for (const auto& a : am.annotations)
            if (!value_present(m, a))
                throw Error("message " + am.id + ": ground-truth value \"" + a.value +
                            "\" not present in " + to_string(a.placement));
    }
}

std::vector<std::pair<std::size_t, std::size_t>> locate_value(const HttpMessage& msg,
                                                              const Annotation& ann) {
    auto text = component_text(msg, ann.placement);
    if (!text)
        throw PlacementUnavailable("message has no " + to_string(ann.placement) + " component");
    std::vector<std::pair<std::size_t, std::size_t>> out;
    if (ann.value.empty()) return out;
    std::size_t pos = 0;
    while ((pos = text->find(ann.value, pos)) != std::string::npos) {
        out.emplace_back(pos, pos + ann.value.size());
        pos += ann.value.size();  // leftmost non-overlapping
    }
    return out;
}

bool value_present(const HttpMessage& msg, const Annotation& ann) {
    try {
        return !locate_value(msg, ann).empty();
    } catch (const PlacementUnavailable&) {
        return false;
    }
}

std::string serialize_message(const AnnotatedMessage& am) {
    json rec;
    rec["id"] = am.id;
    rec["kind"] = to_string(am.message.kind);
    if (am.message.method) rec["method"] = *am.message.method;
    if (am.message.path) rec["path"] = *am.message.path;
    if (am.message.query) rec["query"] = *am.message.query;
    if (am.message.status) rec["status"] = *am.message.status;
    rec["headers"] = json::array();
    for (const auto& h : am.message.headers) rec["headers"].push_back({h.name, h.value});
    rec["body"] = am.message.body;
    rec["annotations"] = json::array();
    for (const auto& a : am.annotations)
        rec["annotations"].push_back({{"data_type", a.data_type},
                                      {"value", a.value},
                                      {"placement", to_string(a.placement)}});
    rec["provenance"] = to_string(am.provenance);
    if (am.stage) rec["stage"] = *am.stage;
    return rec.dump();
}

AnnotatedMessage parse_message(const std::string& record) {
    json rec;
    try {
        rec = json::parse(record);
    } catch (const json::exception& e) {
        throw MalformedDocument(std::string("dataset record is not valid JSON: ") + e.what());
    }
    if (!rec.is_object()) throw MalformedDocument("dataset record must be a JSON object");

    AnnotatedMessage am;
    am.id = rec.at("id").get<std::string>();
    am.message.kind = message_kind_from_string(rec.at("kind").get<std::string>());
    if (rec.contains("method")) am.message.method = rec["method"].get<std::string>();
    if (rec.contains("path")) am.message.path = rec["path"].get<std::string>();
    if (rec.contains("query")) am.message.query = rec["query"].get<std::string>();
    if (rec.contains("status")) am.message.status = rec["status"].get<int>();
    if (rec.contains("headers"))
        for (const auto& h : rec["headers"])
            am.message.headers.push_back({h.at(0).get<std::string>(), h.at(1).get<std::string>()});
    am.message.body = rec.at("body").get<std::string>();
    if (rec.contains("annotations"))
        for (const auto& a : rec["annotations"])
            am.annotations.push_back({a.at("data_type").get<std::string>(),
                                      a.at("value").get<std::string>(),
                                      placement_from_string(a.at("placement").get<std::string>())});
    am.provenance = provenance_from_string(rec.at("provenance").get<std::string>());
    if (rec.contains("stage")) am.stage = rec["stage"].get<std::string>();
    return am;
}

std::vector<AnnotatedMessage> load_dataset(const std::string& path, const Taxonomy* taxonomy,
                                           std::vector<DatasetIssue>* issues) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MalformedDocument("cannot open dataset: " + path);

    std::vector<AnnotatedMessage> out;
    std::vector<DatasetIssue> local;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            auto am = parse_message(line);
            check_message_invariants(am);
            if (taxonomy)
                for (const auto& a : am.annotations)
                    if (!taxonomy->contains(a.data_type))
                        throw Error("label \"" + a.data_type + "\" not in taxonomy \"" +
                                    taxonomy->name() + "\"");
            out.push_back(std::move(am));
        } catch (const Error& e) {
            local.push_back({"line " + std::to_string(lineno), e.what()});
        }
    }
    if (!local.empty()) {
        if (issues) {
            *issues = std::move(local);
        } else {
            std::ostringstream msg;
            msg << path << ": " << local.size() << " invalid record(s); first: "
                << local.front().id << ": " << local.front().detail;
            throw Error(msg.str());
        }
    }
    return out;
}

void save_dataset(const std::string& path, const std::vector<AnnotatedMessage>& msgs) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write dataset: " + path);
    for (const auto& m : msgs) out << serialize_message(m) << '\n';
}

}  // namespace pii
