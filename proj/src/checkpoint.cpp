#include "pii/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "pii/errors.hpp"

namespace pii {

using nlohmann::json;

std::string serialize_checkpoint_record(const CheckpointRecord& r) {
    json rec;
    rec["id"] = r.id;
    rec["stage"] = r.stage;
    if (r.stage == "classifier") {
        rec["labels"] = r.labels;
    } else {
        rec["annotations"] = json::array();
        for (const auto& a : r.annotations)
            rec["annotations"].push_back({{"data_type", a.data_type},
                                          {"value", a.value},
                                          {"placement", to_string(a.placement)}});
    }
    if (r.failed) {
        rec["failed"] = true;
        rec["failure_reason"] = r.failure_reason;
    }
    if (!r.validation_json.empty()) rec["validation"] = json::parse(r.validation_json);
    return rec.dump();
}

CheckpointRecord parse_checkpoint_record(const std::string& line) {
    json rec;
    try {
        rec = json::parse(line);
    } catch (const json::exception& e) {
        throw MalformedDocument(std::string("checkpoint record is not valid JSON: ") + e.what());
    }
    CheckpointRecord r;
    r.id = rec.at("id").get<std::string>();
    r.stage = rec.at("stage").get<std::string>();
    if (rec.contains("labels"))
        for (const auto& l : rec["labels"]) r.labels.push_back(l.get<std::string>());
    if (rec.contains("annotations"))
        for (const auto& a : rec["annotations"])
            r.annotations.push_back({a.at("data_type").get<std::string>(),
                                     a.at("value").get<std::string>(),
                                     a.contains("placement")
                                         ? placement_from_string(a["placement"].get<std::string>())
                                         : Placement::body});
    if (rec.contains("failed")) r.failed = rec["failed"].get<bool>();
    if (rec.contains("failure_reason")) r.failure_reason = rec["failure_reason"].get<std::string>();
    if (rec.contains("validation")) r.validation_json = rec["validation"].dump();
    return r;
}

std::vector<CheckpointRecord> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingCheckpoint("cannot open checkpoint file: " + path);
    std::vector<CheckpointRecord> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(parse_checkpoint_record(line));
    return out;
}

void save_checkpoint(const std::string& path, const std::vector<CheckpointRecord>& records) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint file: " + path);
    for (const auto& r : records) out << serialize_checkpoint_record(r) << '\n';
}

}  // namespace pii
