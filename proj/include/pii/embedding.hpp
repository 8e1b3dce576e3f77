#pragma once

#include <string>
#include <vector>

namespace pii {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const { return values.size(); }
    bool is_zero() const;
    bool operator==(const EmbeddingVector&) const = default;
};

// Standard cosine similarity in [-1, 1]. Throws DimensionMismatch/ZeroVector.
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

// Deterministic offline embedder: character trigrams of the folded input
// (lowercased, non-alphanumerics stripped) hashed into 256 dimensions,
// L2-normalized. Identical inputs always embed identically.
EmbeddingVector fallback_embedding(const std::string& text);

inline constexpr std::size_t kFallbackEmbeddingDim = 256;

}  // namespace pii
