#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pii/checkpoint.hpp"
#include "pii/http_model.hpp"

namespace pii {

struct ConfusionCounts {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t fn = 0;

    ConfusionCounts& operator+=(const ConfusionCounts& o) {
        tp += o.tp;
        fp += o.fp;
        fn += o.fn;
        return *this;
    }
    bool operator==(const ConfusionCounts&) const = default;
};

struct Prf {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

// Zero-denominator convention: the ratio is 0 when its denominator is 0.
Prf prf(const ConfusionCounts& c);

// Multi-label presence task over unique label sets; frequency-insensitive.
ConfusionCounts label_counts(const AnnotatedMessage& gold, const AnnotatedMessage& pred);

// One-to-one matching on identical (label, value) pairs with multiplicity.
ConfusionCounts exact_instance_counts(const AnnotatedMessage& gold, const AnnotatedMessage& pred);

// Ratcliff-Obershelp ratio 2M/(|a|+|b|), M from recursive longest-common-block
// decomposition. 1.0 iff equal, 0.0 when nothing matches.
double gestalt_similarity(const std::string& a, const std::string& b);

// Greedy one-to-one assignment: gold instances in order, candidates restricted
// to unmatched same-label predictions, accepted at similarity >= tau.
ConfusionCounts fuzzy_instance_counts(const AnnotatedMessage& gold, const AnnotatedMessage& pred,
                                      double tau);

struct StageMetrics {
    std::optional<Prf> label;
    std::optional<Prf> exact;
    std::optional<Prf> fuzzy;
    ConfusionCounts label_c, exact_c, fuzzy_c;
    std::size_t messages_scored = 0;
    std::size_t messages_missing = 0;
};

struct MetricsReport {
    double tau = 0.8;
    std::map<std::string, StageMetrics> stages;
    // Per-label diagnostic counts (label-level regime), keyed stage -> label.
    std::map<std::string, std::map<std::string, ConfusionCounts>> per_label;
};

// Scores every `<stage>.jsonl` in checkpoint_dir against the gold dataset.
// The classifier stage carries label-level metrics only.
MetricsReport evaluate_run(const std::string& checkpoint_dir, const std::string& gold_path,
                           double tau);
MetricsReport evaluate_checkpoints(
    const std::map<std::string, std::vector<CheckpointRecord>>& stage_records,
    const std::vector<AnnotatedMessage>& gold, double tau);

std::string serialize_report(const MetricsReport& r);

struct SplitResult {
    std::vector<AnnotatedMessage> evaluation_set;
    std::vector<AnnotatedMessage> example_set;
    // Largest absolute deviation of any label's evaluation-set share from the
    // requested ratio.
    double max_label_slack = 0;
};

// Stratified split with full label coverage in both partitions; deterministic
// for a given seed. Throws Infeasible naming labels with support < 2.
SplitResult stratified_split(const std::vector<AnnotatedMessage>& corpus, double ratio,
                             std::uint64_t seed);

}  // namespace pii
