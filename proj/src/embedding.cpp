#include "pii/embedding.hpp"

#include <cctype>
#include <cmath>
#include <cstdint>

#include "pii/errors.hpp"

namespace pii {

bool EmbeddingVector::is_zero() const {
    for (double v : values)
        if (v != 0.0) return false;
    return true;
}

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.dimension() != v.dimension())
        throw DimensionMismatch("cosine over vectors of dimension " +
                                std::to_string(u.dimension()) + " and " +
                                std::to_string(v.dimension()));
    if (u.is_zero() || v.is_zero()) throw ZeroVector("cosine over an all-zero vector");
    double dot = 0, nu = 0, nv = 0;
    for (std::size_t i = 0; i < u.values.size(); ++i) {
        dot += u.values[i] * v.values[i];
        nu += u.values[i] * u.values[i];
        nv += v.values[i] * v.values[i];
    }
    return dot / (std::sqrt(nu) * std::sqrt(nv));
}

namespace {

std::uint64_t fnv1a(const char* data, std::size_t n) {
    std::uint64_t h = 14695981039346656037ull;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 1099511628211ull;
    }
    return h;
}

// Case, punctuation, and whitespace drift are exactly the surface variations
// label correction needs to bridge, so folding happens before hashing.
std::string fold(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u)) out.push_back(static_cast<char>(std::tolower(u)));
        else if (u >= 0x80) out.push_back(c);  // keep non-ASCII bytes
    }
    return out;
}

}  // namespace

EmbeddingVector fallback_embedding(const std::string& text) {
    EmbeddingVector e;
    e.values.assign(kFallbackEmbeddingDim, 0.0);

    std::string folded = "^^" + fold(text) + "$$";
    for (std::size_t i = 0; i + 3 <= folded.size(); ++i)
        e.values[fnv1a(folded.data() + i, 3) % kFallbackEmbeddingDim] += 1.0;

    if (e.is_zero())  // degenerate input, e.g. punctuation-only
        e.values[fnv1a(text.data(), text.size()) % kFallbackEmbeddingDim] = 1.0;

    double norm = 0;
    for (double v : e.values) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : e.values) v /= norm;
    return e;
}

}  // namespace pii
