#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace pii {

// Reproducibility record written next to every CLI output artifact. Captures
// what ran, with which inputs and settings — never credentials.
struct RunManifest {
    std::string command;                       // e.g. "annotate"
    std::string started_at;                    // ISO-8601 UTC
    std::string finished_at;
    std::string config_json;                   // effective settings after precedence
    std::string provider_id;                   // provider kind + model, no secrets
    std::uint64_t seed = 0;
    std::map<std::string, std::string> input_digests;   // path -> fnv1a64 hex
    std::map<std::string, std::string> output_digests;

    std::string to_json() const;
};

RunManifest parse_manifest(const std::string& json_text);

// FNV-1a 64-bit digest of a file's bytes, rendered as 16 hex chars.
std::string file_digest(const std::string& path);
std::string text_digest(const std::string& text);

// Current UTC time as ISO-8601 (e.g. "2026-08-23T12:00:00Z").
std::string utc_now_iso8601();

void save_manifest(const std::string& path, const RunManifest& m);

}  // namespace pii
