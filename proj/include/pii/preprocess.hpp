#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pii {

enum class Transform { copy, url_decode, html_entity, base64 };

std::string to_string(Transform t);

// One piece of the piecewise mapping between the original body and its
// normalized form. Offsets are byte offsets.
struct SpanSegment {
    std::size_t orig_start = 0;
    std::size_t orig_end = 0;
    std::size_t norm_start = 0;
    std::size_t norm_end = 0;
    Transform transform = Transform::copy;

    bool operator==(const SpanSegment&) const = default;
};

struct NormalizedBody {
    std::string original;
    std::string normalized;
    std::vector<SpanSegment> span_map;
};

struct NormalizeOptions {
    // Minimum fraction of printable characters a Base64 decoding must have.
    double printable_threshold = 0.9;
    std::size_t base64_min_length = 16;
    // Plus-to-space only applies to form-like bodies; force with this flag
    // (e.g. when the content-type header declares form encoding).
    std::optional<bool> form_context;
};

// Decoding passes in fixed order: percent-decoding (with plus-to-space in
// form contexts), HTML character references, conservative Base64. Undecodable
// sequences are copied verbatim. Single pass, no recursive decoding.
NormalizedBody normalize_body(const std::string& raw, const NormalizeOptions& opts = {});

// Conservative Base64 probe: pattern + decode + printable-ratio gate.
std::optional<std::string> try_decode_base64(const std::string& candidate,
                                             const NormalizeOptions& opts = {});

// Minimal original range producing normalized[span]. Spans inside a decoded
// segment widen to the whole encoded region.
std::pair<std::size_t, std::size_t> map_to_original(const NormalizedBody& nb,
                                                    std::pair<std::size_t, std::size_t> span);

// Replays each segment's transform over original; equals `normalized` for any
// map produced by normalize_body on non-nested encodings. Used by tests.
std::string reconstruct_normalized(const NormalizedBody& nb);

bool looks_form_encoded(const std::string& body);

}  // namespace pii
