#include "pii/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>

#include "pii/errors.hpp"

namespace pii {

std::string to_string(Transform t) {
    switch (t) {
        case Transform::copy: return "copy";
        case Transform::url_decode: return "url_decode";
        case Transform::html_entity: return "html_entity";
        case Transform::base64: return "base64";
    }
    return "copy";
}

namespace {

// A single rewrite of [start,end) in the current text to `out`.
struct Op {
    std::size_t start;
    std::size_t end;
    std::string out;
    Transform transform;
};

int hex_val(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

// Length of the valid UTF-8 sequence starting at s[i], or 0.
std::size_t utf8_seq_len(const std::string& s, std::size_t i) {
    auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) return 1;
    std::size_t len;
    unsigned cp;
    if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
    else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
    else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
    else return 0;
    if (i + len > s.size()) return 0;
    for (std::size_t k = 1; k < len; ++k) {
        auto b = static_cast<unsigned char>(s[i + k]);
        if ((b & 0xC0) != 0x80) return 0;
        cp = (cp << 6) | (b & 0x3F);
    }
    if (len == 2 && cp < 0x80) return 0;
    if (len == 3 && (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF))) return 0;
    if (len == 4 && (cp < 0x10000 || cp > 0x10FFFF)) return 0;
    return len;
}

bool is_valid_utf8(const std::string& s) {
    std::size_t i = 0;
    while (i < s.size()) {
        auto len = utf8_seq_len(s, i);
        if (len == 0) return false;
        i += len;
    }
    return true;
}

std::string encode_utf8(unsigned cp) {
    std::string out;
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Pass 1: percent decoding

std::vector<Op> url_ops(const std::string& text, bool form_context) {
    std::vector<Op> ops;
    std::size_t i = 0;
    while (i < text.size()) {
        if (form_context && text[i] == '+') {
            ops.push_back({i, i + 1, " ", Transform::url_decode});
            ++i;
            continue;
        }
        if (text[i] != '%') {
            ++i;
            continue;
        }
        // Maximal run of %XX escapes, decoded together so multi-byte UTF-8
        // sequences split across escapes survive.
        std::size_t run_start = i;
        std::string bytes;
        std::size_t j = i;
        while (j + 3 <= text.size() && text[j] == '%' && hex_val(text[j + 1]) >= 0 &&
               hex_val(text[j + 2]) >= 0) {
            bytes.push_back(static_cast<char>(hex_val(text[j + 1]) * 16 + hex_val(text[j + 2])));
            j += 3;
        }
        if (bytes.empty()) {
            ++i;
            continue;
        }
        // Emit one op per decoded UTF-8 sequence; escapes that do not form a
        // valid sequence stay verbatim.
        std::size_t b = 0;
        while (b < bytes.size()) {
            auto len = utf8_seq_len(bytes, b);
            if (len == 0) {
                ++b;  // undecodable escape, leave as copy
                continue;
            }
            ops.push_back({run_start + b * 3, run_start + (b + len) * 3, bytes.substr(b, len),
                           Transform::url_decode});
            b += len;
        }
        i = j;
    }
    return ops;
}

// ---------------------------------------------------------------------------
// Pass 2: HTML character references

const std::unordered_map<std::string, unsigned>& named_entities() {
    static const std::unordered_map<std::string, unsigned> table = {
        {"amp", '&'},    {"lt", '<'},     {"gt", '>'},      {"quot", '"'},
        {"apos", '\''},  {"nbsp", 0xA0},  {"copy", 0xA9},   {"reg", 0xAE},
        {"trade", 0x2122}, {"hellip", 0x2026}, {"mdash", 0x2014}, {"ndash", 0x2013},
        {"lsquo", 0x2018}, {"rsquo", 0x2019}, {"ldquo", 0x201C}, {"rdquo", 0x201D},
        {"sect", 0xA7},  {"para", 0xB6},  {"middot", 0xB7}, {"laquo", 0xAB},
        {"raquo", 0xBB}, {"deg", 0xB0},   {"plusmn", 0xB1}, {"times", 0xD7},
        {"divide", 0xF7}, {"euro", 0x20AC}, {"pound", 0xA3}, {"yen", 0xA5},
        {"cent", 0xA2},  {"szlig", 0xDF}, {"agrave", 0xE0}, {"aacute", 0xE1},
        {"eacute", 0xE9}, {"egrave", 0xE8}, {"iacute", 0xED}, {"oacute", 0xF3},
        {"uacute", 0xFA}, {"uuml", 0xFC},  {"ouml", 0xF6},  {"auml", 0xE4},
        {"ntilde", 0xF1}, {"ccedil", 0xE7}, {"bull", 0x2022}, {"dagger", 0x2020},
    };
    return table;
}

std::vector<Op> html_ops(const std::string& text) {
    std::vector<Op> ops;
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] != '&') {
            ++i;
            continue;
        }
        std::size_t semi = text.find(';', i + 1);
        if (semi == std::string::npos || semi == i + 1 || semi - i > 32) {
            ++i;
            continue;
        }
        std::string name = text.substr(i + 1, semi - i - 1);
        unsigned cp = 0;
        bool ok = false;
        if (name.size() >= 2 && name[0] == '#') {
            std::size_t k = 1;
            unsigned base = 10;
            if (name[1] == 'x' || name[1] == 'X') {
                base = 16;
                k = 2;
            }
            if (k < name.size()) {
                ok = true;
                unsigned long v = 0;
                for (; k < name.size(); ++k) {
                    int d = base == 16 ? hex_val(name[k])
                                       : (std::isdigit(static_cast<unsigned char>(name[k]))
                                              ? name[k] - '0'
                                              : -1);
                    if (d < 0 || (base == 10 && d > 9)) {
                        ok = false;
                        break;
                    }
                    v = v * base + static_cast<unsigned>(d);
                    if (v > 0x10FFFF) {
                        ok = false;
                        break;
                    }
                }
                cp = static_cast<unsigned>(v);
                if (cp == 0 || (cp >= 0xD800 && cp <= 0xDFFF)) ok = false;
            }
        } else {
            auto it = named_entities().find(name);
            if (it != named_entities().end()) {
                cp = it->second;
                ok = true;
            }
        }
        if (!ok) {
            ++i;
            continue;
        }
        ops.push_back({i, semi + 1, encode_utf8(cp), Transform::html_entity});
        i = semi + 1;
    }
    return ops;
}

// ---------------------------------------------------------------------------
// Pass 3: conservative Base64

bool printable_ratio_ok(const std::string& decoded, double threshold) {
    std::size_t printable = 0, total = 0;
    std::size_t i = 0;
    while (i < decoded.size()) {
        auto len = utf8_seq_len(decoded, i);
        if (len == 0) return false;  // not valid UTF-8
        ++total;
        auto b0 = static_cast<unsigned char>(decoded[i]);
        bool p;
        if (len == 1)
            p = (b0 >= 0x20 && b0 <= 0x7E) || b0 == '\t' || b0 == '\n' || b0 == '\r';
        else
            p = true;  // any multi-byte codepoint counts as printable text
        if (p) ++printable;
        i += len;
    }
    if (total == 0) return false;
    return static_cast<double>(printable) / static_cast<double>(total) >= threshold;
}

int b64_val(char c) {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
}

std::optional<std::string> decode_base64_raw(const std::string& s) {
    std::string out;
    out.reserve(s.size() / 4 * 3);
    unsigned buf = 0;
    int bits = 0;
    std::size_t pad = 0;
    for (char c : s) {
        if (c == '=') {
            ++pad;
            continue;
        }
        if (pad > 0) return std::nullopt;  // '=' only at the end
        int v = b64_val(c);
        if (v < 0) return std::nullopt;
        buf = (buf << 6) | static_cast<unsigned>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<char>((buf >> bits) & 0xFF));
        }
    }
    if (pad > 2) return std::nullopt;
    return out;
}

bool all_of_class(const std::string& s, int (*pred)(int)) {
    return std::all_of(s.begin(), s.end(),
                       [&](char c) { return pred(static_cast<unsigned char>(c)) != 0; });
}

bool is_hex_only(const std::string& s) {
    return std::all_of(s.begin(), s.end(), [](char c) { return hex_val(c) >= 0; });
}

std::vector<Op> base64_ops(const std::string& text, const NormalizeOptions& opts) {
    std::vector<Op> ops;
    std::size_t i = 0;
    auto is_b64_alpha = [](char c) { return b64_val(c) >= 0; };
    while (i < text.size()) {
        if (!is_b64_alpha(text[i])) {
            ++i;
            continue;
        }
        // Alphabet run plus up to two trailing '=': a mid-text '=' (as in
        // form-encoded "key=...") terminates the candidate instead of
        // poisoning the run after it.
        std::size_t j = i;
        while (j < text.size() && is_b64_alpha(text[j])) ++j;
        std::size_t pad = 0;
        while (j < text.size() && text[j] == '=' && pad < 2) {
            ++j;
            ++pad;
        }
        std::string token = text.substr(i, j - i);
        if (auto decoded = try_decode_base64(token, opts))
            ops.push_back({i, j, *decoded, Transform::base64});
        i = j;
    }
    return ops;
}

// ---------------------------------------------------------------------------
// Pass composition over the running segment map

// `cur` maps current-text offsets (norm_*) to original offsets. Applies the
// ops, producing the new text and the map from new-text offsets to original.
std::vector<SpanSegment> apply_ops(std::vector<SpanSegment> cur, const std::string& prev,
                                   std::vector<Op> ops, std::string& out) {
    // Drop any op whose boundary would fall strictly inside a decoded segment;
    // decoded segments are atomic in the original.
    auto inside_decoded = [&](std::size_t pos) {
        for (const auto& s : cur)
            if (s.transform != Transform::copy && pos > s.norm_start && pos < s.norm_end)
                return true;
        return false;
    };
    std::erase_if(ops, [&](const Op& op) {
        return inside_decoded(op.start) || inside_decoded(op.end);
    });

    // Split copy segments at op boundaries so every op covers whole segments.
    std::vector<std::size_t> cuts;
    for (const auto& op : ops) {
        cuts.push_back(op.start);
        cuts.push_back(op.end);
    }
    std::sort(cuts.begin(), cuts.end());
    std::vector<SpanSegment> split;
    for (auto seg : cur) {
        for (std::size_t cut : cuts) {
            if (cut > seg.norm_start && cut < seg.norm_end && seg.transform == Transform::copy) {
                auto off = cut - seg.norm_start;
                split.push_back({seg.orig_start, seg.orig_start + off, seg.norm_start, cut,
                                 Transform::copy});
                seg.orig_start += off;
                seg.norm_start = cut;
            }
        }
        split.push_back(seg);
    }

    std::vector<SpanSegment> next;
    out.clear();
    auto op_it = ops.begin();
    std::size_t si = 0;
    while (si < split.size()) {
        const auto& seg = split[si];
        if (op_it != ops.end() && seg.norm_start >= op_it->start && seg.norm_end <= op_it->end) {
            // Consume all segments covered by this op.
            std::size_t orig_s = seg.orig_start;
            std::size_t orig_e = seg.orig_end;
            while (si < split.size() && split[si].norm_end <= op_it->end) {
                orig_e = split[si].orig_end;
                ++si;
            }
            next.push_back({orig_s, orig_e, out.size(), out.size() + op_it->out.size(),
                            op_it->transform});
            out += op_it->out;
            ++op_it;
        } else {
            next.push_back({seg.orig_start, seg.orig_end, out.size(),
                            out.size() + (seg.norm_end - seg.norm_start), seg.transform});
            out += prev.substr(seg.norm_start, seg.norm_end - seg.norm_start);
            ++si;
        }
    }

    // Merge adjacent copy segments that are contiguous on both sides.
    std::vector<SpanSegment> merged;
    for (const auto& s : next) {
        if (!merged.empty() && merged.back().transform == Transform::copy &&
            s.transform == Transform::copy && merged.back().orig_end == s.orig_start &&
            merged.back().norm_end == s.norm_start) {
            merged.back().orig_end = s.orig_end;
            merged.back().norm_end = s.norm_end;
        } else {
            merged.push_back(s);
        }
    }
    return merged;
}

}  // namespace

bool looks_form_encoded(const std::string& body) {
    std::size_t first = body.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return false;
    if (body[first] == '{' || body[first] == '[' || body[first] == '<') return false;
    return body.find('=') != std::string::npos;
}

std::optional<std::string> try_decode_base64(const std::string& candidate,
                                             const NormalizeOptions& opts) {
    if (candidate.size() < opts.base64_min_length) return std::nullopt;
    if (candidate.size() % 4 != 0) return std::nullopt;
    std::size_t pad = 0;
    while (pad < candidate.size() && candidate[candidate.size() - 1 - pad] == '=') ++pad;
    if (pad > 2) return std::nullopt;
    std::string payload = candidate.substr(0, candidate.size() - pad);
    if (payload.find('=') != std::string::npos) return std::nullopt;
    // Hex strings and bare digit runs satisfy the alphabet but are near-certain
    // identifiers, never Base64.
    if (is_hex_only(payload)) return std::nullopt;
    if (all_of_class(payload, std::isdigit)) return std::nullopt;
    auto decoded = decode_base64_raw(candidate);
    if (!decoded) return std::nullopt;
    if (!printable_ratio_ok(*decoded, opts.printable_threshold)) return std::nullopt;
    return decoded;
}

NormalizedBody normalize_body(const std::string& raw, const NormalizeOptions& opts) {
    NormalizedBody nb;
    nb.original = raw;

    std::vector<SpanSegment> map = {{0, raw.size(), 0, raw.size(), Transform::copy}};
    std::string text = raw;

    bool form = opts.form_context ? *opts.form_context : looks_form_encoded(raw);

    std::string next;
    map = apply_ops(std::move(map), text, url_ops(text, form), next);
    text = std::move(next);
    map = apply_ops(std::move(map), text, html_ops(text), next);
    text = std::move(next);
    map = apply_ops(std::move(map), text, base64_ops(text, opts), next);
    text = std::move(next);

    nb.normalized = std::move(text);
    nb.span_map = std::move(map);
    return nb;
}

std::pair<std::size_t, std::size_t> map_to_original(const NormalizedBody& nb,
                                                    std::pair<std::size_t, std::size_t> span) {
    auto [start, end] = span;
    if (end > nb.normalized.size() || start > end)
        throw Error("span out of normalized bounds");
    if (nb.span_map.empty()) return {0, 0};
    if (start == end) return {start, start};

    std::size_t orig_s = 0, orig_e = 0;
    bool found_s = false;
    for (const auto& seg : nb.span_map) {
        if (!found_s && start >= seg.norm_start && start < seg.norm_end) {
            orig_s = seg.transform == Transform::copy
                         ? seg.orig_start + (start - seg.norm_start)
                         : seg.orig_start;
            found_s = true;
        }
        if (end > seg.norm_start && end <= seg.norm_end) {
            orig_e = seg.transform == Transform::copy ? seg.orig_start + (end - seg.norm_start)
                                                      : seg.orig_end;
            break;
        }
    }
    return {orig_s, orig_e};
}

std::string reconstruct_normalized(const NormalizedBody& nb) {
    std::string out;
    for (const auto& seg : nb.span_map) {
        std::string piece = nb.original.substr(seg.orig_start, seg.orig_end - seg.orig_start);
        switch (seg.transform) {
            case Transform::copy:
                out += piece;
                break;
            case Transform::url_decode: {
                if (piece == "+") {
                    out += ' ';
                    break;
                }
                std::string bytes;
                for (std::size_t i = 0; i + 3 <= piece.size(); i += 3) {
                    if (piece[i] != '%') return out;  // mixed-provenance segment
                    bytes.push_back(
                        static_cast<char>(hex_val(piece[i + 1]) * 16 + hex_val(piece[i + 2])));
                }
                out += bytes;
                break;
            }
            case Transform::html_entity: {
                auto ops = html_ops(piece);
                if (ops.size() == 1 && ops[0].start == 0 && ops[0].end == piece.size())
                    out += ops[0].out;
                else
                    out += piece;
                break;
            }
            case Transform::base64: {
                auto decoded = decode_base64_raw(piece);
                out += decoded ? *decoded : piece;
                break;
            }
        }
    }
    return out;
}

}  // namespace pii
