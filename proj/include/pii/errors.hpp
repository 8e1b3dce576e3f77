#pragma once

#include <stdexcept>
#include <string>

namespace pii {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MalformedDocument : Error {
    using Error::Error;
};

struct DuplicateLabel : Error {
    explicit DuplicateLabel(const std::string& label)
        : Error("duplicate taxonomy label: \"" + label + "\""), label(label) {}
    std::string label;
};

struct EmptyTaxonomy : Error {
    using Error::Error;
};

struct PlacementUnavailable : Error {
    using Error::Error;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

struct ZeroVector : Error {
    using Error::Error;
};

struct ProviderUnavailable : Error {
    using Error::Error;
};

struct ResponseTruncated : Error {
    using Error::Error;
};

struct Unparseable : Error {
    using Error::Error;
};

struct SchemaViolation : Error {
    using Error::Error;
};

struct IdMismatch : Error {
    using Error::Error;
};

struct StageFailed : Error {
    using Error::Error;
};

struct MissingCheckpoint : Error {
    using Error::Error;
};

struct Infeasible : Error {
    using Error::Error;
};

struct GenerationBudgetExhausted : Error {
    using Error::Error;
};

}  // namespace pii
