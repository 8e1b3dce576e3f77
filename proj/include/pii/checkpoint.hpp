#pragma once

#include <string>
#include <vector>

#include "pii/http_model.hpp"

namespace pii {

// The five ablation checkpoints a pipeline run can produce.
inline const std::vector<std::string> kCheckpointStages = {
    "classifier", "annotator_single", "annotator_two", "reviewer_single", "reviewer_two"};

// One per-message record in a `<stage>.jsonl` checkpoint file. The classifier
// stage carries labels; annotation stages carry annotations.
struct CheckpointRecord {
    std::string id;
    std::string stage;
    std::vector<std::string> labels;
    std::vector<Annotation> annotations;
    bool failed = false;
    std::string failure_reason;
    std::string validation_json;  // validation report as emitted by the stage

    bool operator==(const CheckpointRecord&) const = default;
};

std::string serialize_checkpoint_record(const CheckpointRecord& r);
CheckpointRecord parse_checkpoint_record(const std::string& line);

std::vector<CheckpointRecord> load_checkpoint(const std::string& path);
void save_checkpoint(const std::string& path, const std::vector<CheckpointRecord>& records);

}  // namespace pii
