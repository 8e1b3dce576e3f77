#include "pii/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pii/errors.hpp"

namespace pii {

using nlohmann::json;

std::string RunManifest::to_json() const {
    json doc;
    doc["command"] = command;
    doc["started_at"] = started_at;
    doc["finished_at"] = finished_at;
    doc["config"] = config_json.empty() ? json::object() : json::parse(config_json);
    doc["provider_id"] = provider_id;
    doc["seed"] = seed;
    doc["input_digests"] = input_digests;
    doc["output_digests"] = output_digests;
    return doc.dump(2);
}

RunManifest parse_manifest(const std::string& json_text) {
    json doc = json::parse(json_text);
    RunManifest m;
    m.command = doc.value("command", "");
    m.started_at = doc.value("started_at", "");
    m.finished_at = doc.value("finished_at", "");
    m.config_json = doc.contains("config") ? doc["config"].dump() : "{}";
    m.provider_id = doc.value("provider_id", "");
    m.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("input_digests"))
        m.input_digests = doc["input_digests"].get<std::map<std::string, std::string>>();
    if (doc.contains("output_digests"))
        m.output_digests = doc["output_digests"].get<std::map<std::string, std::string>>();
    return m;
}

std::string text_digest(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file for digest: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return text_digest(ss.str());
}

std::string utc_now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void save_manifest(const std::string& path, const RunManifest& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write manifest: " + path);
    out << m.to_json() << "\n";
}

}  // namespace pii
