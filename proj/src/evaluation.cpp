#include "pii/evaluation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <filesystem>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "pii/errors.hpp"

namespace pii {

using nlohmann::json;

Prf prf(const ConfusionCounts& c) {
    Prf out;
    if (c.tp + c.fp > 0) out.precision = static_cast<double>(c.tp) / (c.tp + c.fp);
    if (c.tp + c.fn > 0) out.recall = static_cast<double>(c.tp) / (c.tp + c.fn);
    if (out.precision + out.recall > 0)
        out.f1 = 2 * out.precision * out.recall / (out.precision + out.recall);
    return out;
}

namespace {

void require_same_id(const AnnotatedMessage& gold, const AnnotatedMessage& pred) {
    if (gold.id != pred.id)
        throw IdMismatch("scoring \"" + pred.id + "\" against gold \"" + gold.id + "\"");
}

std::set<std::string> unique_labels(const std::vector<Annotation>& anns) {
    std::set<std::string> out;
    for (const auto& a : anns) out.insert(a.data_type);
    return out;
}

ConfusionCounts label_set_counts(const std::set<std::string>& gold,
                                 const std::set<std::string>& pred) {
    ConfusionCounts c;
    for (const auto& l : pred) (gold.count(l) ? c.tp : c.fp)++;
    for (const auto& l : gold)
        if (!pred.count(l)) c.fn++;
    return c;
}

}  // namespace

ConfusionCounts label_counts(const AnnotatedMessage& gold, const AnnotatedMessage& pred) {
    require_same_id(gold, pred);
    return label_set_counts(unique_labels(gold.annotations), unique_labels(pred.annotations));
}

ConfusionCounts exact_instance_counts(const AnnotatedMessage& gold, const AnnotatedMessage& pred) {
    require_same_id(gold, pred);
    std::map<std::pair<std::string, std::string>, std::uint64_t> gold_bag;
    for (const auto& a : gold.annotations) gold_bag[{a.data_type, a.value}]++;

    ConfusionCounts c;
    for (const auto& a : pred.annotations) {
        auto it = gold_bag.find({a.data_type, a.value});
        if (it != gold_bag.end() && it->second > 0) {
            c.tp++;
            it->second--;
        } else {
            c.fp++;
        }
    }
    for (const auto& [k, n] : gold_bag) c.fn += n;
    return c;
}

// ---------------------------------------------------------------------------
// Ratcliff-Obershelp over Unicode codepoints

namespace {

std::u32string to_codepoints(const std::string& s) {
    std::u32string out;
    std::size_t i = 0;
    while (i < s.size()) {
        auto b0 = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        char32_t cp = b0;
        if ((b0 & 0xE0) == 0xC0) { len = 2; cp = b0 & 0x1F; }
        else if ((b0 & 0xF0) == 0xE0) { len = 3; cp = b0 & 0x0F; }
        else if ((b0 & 0xF8) == 0xF0) { len = 4; cp = b0 & 0x07; }
        if (len > 1) {
            if (i + len > s.size()) { out.push_back(0xFFFD); ++i; continue; }
            bool ok = true;
            char32_t acc = cp;
            for (std::size_t k = 1; k < len; ++k) {
                auto b = static_cast<unsigned char>(s[i + k]);
                if ((b & 0xC0) != 0x80) { ok = false; break; }
                acc = (acc << 6) | (b & 0x3F);
            }
            if (!ok) { out.push_back(0xFFFD); ++i; continue; }
            cp = acc;
        }
        out.push_back(cp);
        i += len;
    }
    return out;
}

struct Match {
    std::size_t a, b, size;
};

// Longest matching block of a[alo..ahi) vs b[blo..bhi); earliest in a, then in
// b, on ties.
Match longest_match(const std::u32string& a, const std::u32string& b,
                    const std::unordered_map<char32_t, std::vector<std::size_t>>& b2j,
                    std::size_t alo, std::size_t ahi, std::size_t blo, std::size_t bhi) {
    Match best{alo, blo, 0};
    std::unordered_map<std::size_t, std::size_t> j2len;
    for (std::size_t i = alo; i < ahi; ++i) {
        std::unordered_map<std::size_t, std::size_t> newj2len;
        auto it = b2j.find(a[i]);
        if (it != b2j.end()) {
            for (std::size_t j : it->second) {
                if (j < blo) continue;
                if (j >= bhi) break;
                std::size_t k = (j > 0 && j2len.count(j - 1) ? j2len[j - 1] : 0) + 1;
                newj2len[j] = k;
                if (k > best.size) best = {i - k + 1, j - k + 1, k};
            }
        }
        j2len = std::move(newj2len);
    }
    return best;
}

}  // namespace

double gestalt_similarity(const std::string& a_raw, const std::string& b_raw) {
    auto a = to_codepoints(a_raw);
    auto b = to_codepoints(b_raw);
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;

    std::unordered_map<char32_t, std::vector<std::size_t>> b2j;
    for (std::size_t j = 0; j < b.size(); ++j) b2j[b[j]].push_back(j);

    std::size_t matched = 0;
    std::deque<std::array<std::size_t, 4>> queue{{0, a.size(), 0, b.size()}};
    while (!queue.empty()) {
        auto [alo, ahi, blo, bhi] = queue.front();
        queue.pop_front();
        auto m = longest_match(a, b, b2j, alo, ahi, blo, bhi);
        if (m.size == 0) continue;
        matched += m.size;
        if (alo < m.a && blo < m.b) queue.push_back({alo, m.a, blo, m.b});
        if (m.a + m.size < ahi && m.b + m.size < bhi)
            queue.push_back({m.a + m.size, ahi, m.b + m.size, bhi});
    }
    return 2.0 * static_cast<double>(matched) / static_cast<double>(a.size() + b.size());
}

ConfusionCounts fuzzy_instance_counts(const AnnotatedMessage& gold, const AnnotatedMessage& pred,
                                      double tau) {
    require_same_id(gold, pred);
    if (tau <= 0.0 || tau > 1.0) throw Error("tau must lie in (0, 1]");

    std::vector<bool> used(pred.annotations.size(), false);
    ConfusionCounts c;
    for (const auto& g : gold.annotations) {
        double best = -1.0;
        std::size_t best_idx = 0;
        bool found = false;
        for (std::size_t i = 0; i < pred.annotations.size(); ++i) {
            if (used[i] || pred.annotations[i].data_type != g.data_type) continue;
            double sim = gestalt_similarity(g.value, pred.annotations[i].value);
            if (sim > best) {
                best = sim;
                best_idx = i;
                found = true;
            }
        }
        if (found && best >= tau) {
            used[best_idx] = true;
            c.tp++;
        } else {
            c.fn++;
        }
    }
    for (bool u : used)
        if (!u) c.fp++;
    return c;
}

// ---------------------------------------------------------------------------
// Run-level aggregation

MetricsReport evaluate_checkpoints(
    const std::map<std::string, std::vector<CheckpointRecord>>& stage_records,
    const std::vector<AnnotatedMessage>& gold, double tau) {
    MetricsReport report;
    report.tau = tau;

    for (const auto& [stage, records] : stage_records) {
        std::unordered_map<std::string, const CheckpointRecord*> by_id;
        for (const auto& r : records) by_id[r.id] = &r;

        StageMetrics sm;
        auto& per_label = report.per_label[stage];
        bool label_only = stage == "classifier";

        for (const auto& g : gold) {
            auto it = by_id.find(g.id);
            const CheckpointRecord* rec = it == by_id.end() ? nullptr : it->second;
            if (!rec || rec->failed) {
                sm.messages_missing++;
            } else {
                sm.messages_scored++;
            }

            std::set<std::string> gold_labels = unique_labels(g.annotations);
            std::set<std::string> pred_labels;
            AnnotatedMessage pred;
            pred.id = g.id;
            pred.provenance = Provenance::predicted;
            if (rec && !rec->failed) {
                if (label_only)
                    pred_labels.insert(rec->labels.begin(), rec->labels.end());
                else
                    pred.annotations = rec->annotations;
            }
            if (!label_only) pred_labels = unique_labels(pred.annotations);

            sm.label_c += label_set_counts(gold_labels, pred_labels);
            for (const auto& l : gold_labels)
                (pred_labels.count(l) ? per_label[l].tp : per_label[l].fn)++;
            for (const auto& l : pred_labels)
                if (!gold_labels.count(l)) per_label[l].fp++;

            if (!label_only) {
                sm.exact_c += exact_instance_counts(g, pred);
                sm.fuzzy_c += fuzzy_instance_counts(g, pred, tau);
            }
        }

        sm.label = prf(sm.label_c);
        if (!label_only) {
            sm.exact = prf(sm.exact_c);
            sm.fuzzy = prf(sm.fuzzy_c);
        }
        report.stages[stage] = std::move(sm);
    }
    return report;
}

MetricsReport evaluate_run(const std::string& checkpoint_dir, const std::string& gold_path,
                           double tau) {
    namespace fs = std::filesystem;
    auto gold = load_dataset(gold_path);

    std::map<std::string, std::vector<CheckpointRecord>> stage_records;
    for (const auto& stage : kCheckpointStages) {
        fs::path p = fs::path(checkpoint_dir) / (stage + ".jsonl");
        if (fs::exists(p)) stage_records[stage] = load_checkpoint(p.string());
    }
    if (stage_records.empty())
        throw MissingCheckpoint("no checkpoint files found in " + checkpoint_dir);
    return evaluate_checkpoints(stage_records, gold, tau);
}

std::string serialize_report(const MetricsReport& r) {
    json doc;
    doc["tau"] = r.tau;
    doc["stages"] = json::object();
    auto prf_json = [](const Prf& p, const ConfusionCounts& c) {
        return json{{"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1},
                    {"tp", c.tp},               {"fp", c.fp},         {"fn", c.fn}};
    };
    for (const auto& [stage, sm] : r.stages) {
        json s;
        if (sm.label) s["label"] = prf_json(*sm.label, sm.label_c);
        if (sm.exact) s["exact"] = prf_json(*sm.exact, sm.exact_c);
        if (sm.fuzzy) s["fuzzy"] = prf_json(*sm.fuzzy, sm.fuzzy_c);
        s["messages_scored"] = sm.messages_scored;
        s["messages_missing"] = sm.messages_missing;
        doc["stages"][stage] = std::move(s);
    }
    doc["per_label"] = json::object();
    for (const auto& [stage, labels] : r.per_label) {
        json s = json::object();
        for (const auto& [label, c] : labels)
            s[label] = {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
        doc["per_label"][stage] = std::move(s);
    }
    return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Stratified split

SplitResult stratified_split(const std::vector<AnnotatedMessage>& corpus, double ratio,
                             std::uint64_t seed) {
    if (ratio <= 0.0 || ratio >= 1.0) throw Error("split ratio must lie in (0, 1)");
    if (corpus.size() < 2) throw Infeasible("corpus must contain at least two messages");

    std::map<std::string, std::vector<std::size_t>> label_msgs;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        for (const auto& l : unique_labels(corpus[i].annotations)) label_msgs[l].push_back(i);

    std::string weak;
    for (const auto& [l, msgs] : label_msgs)
        if (msgs.size() < 2) weak += (weak.empty() ? "" : ", ") + l;
    if (!weak.empty())
        throw Infeasible("labels with fewer than two supporting messages: " + weak);

    const std::size_t n = corpus.size();
    const auto n_eval =
        static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));

    for (std::uint64_t attempt = 0; attempt < 64; ++attempt) {
        std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + attempt);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);

        std::vector<bool> in_eval(n, false);
        for (std::size_t i = 0; i < n_eval; ++i) in_eval[order[i]] = true;

        std::map<std::string, std::size_t> eval_count, ex_count;
        for (std::size_t i = 0; i < n; ++i)
            for (const auto& l : unique_labels(corpus[i].annotations))
                (in_eval[i] ? eval_count[l] : ex_count[l])++;

        auto removable = [&](std::size_t i) {
            for (const auto& l : unique_labels(corpus[i].annotations))
                if ((in_eval[i] ? eval_count[l] : ex_count[l]) < 2) return false;
            return true;
        };
        auto move_between = [&](std::size_t i) {
            bool was_eval = in_eval[i];
            for (const auto& l : unique_labels(corpus[i].annotations)) {
                (was_eval ? eval_count[l] : ex_count[l])--;
                (was_eval ? ex_count[l] : eval_count[l])++;
            }
            in_eval[i] = !was_eval;
        };

        // Repair swaps: restore coverage on whichever side lost a label.
        bool ok = true;
        for (int round = 0; round < 256 && ok; ++round) {
            std::string missing_label;
            bool missing_in_eval = false;
            for (const auto& [l, msgs] : label_msgs) {
                if (eval_count[l] == 0) { missing_label = l; missing_in_eval = true; break; }
                if (ex_count[l] == 0) { missing_label = l; missing_in_eval = false; break; }
            }
            if (missing_label.empty()) break;

            bool repaired = false;
            for (std::size_t donor : label_msgs[missing_label]) {
                if (in_eval[donor] == missing_in_eval || !removable(donor)) continue;
                // counterpart going the other way keeps sizes fixed
                for (std::size_t back : order) {
                    if (in_eval[back] != missing_in_eval || !removable(back)) continue;
                    move_between(donor);
                    move_between(back);
                    repaired = true;
                    break;
                }
                if (repaired) break;
            }
            if (!repaired) ok = false;
        }
        if (!ok) continue;

        bool covered = true;
        for (const auto& [l, msgs] : label_msgs)
            if (eval_count[l] == 0 || ex_count[l] == 0) covered = false;
        if (!covered) continue;

        SplitResult res;
        for (std::size_t i = 0; i < n; ++i)
            (in_eval[i] ? res.evaluation_set : res.example_set).push_back(corpus[i]);
        for (const auto& [l, msgs] : label_msgs) {
            double share = static_cast<double>(eval_count[l]) / static_cast<double>(msgs.size());
            res.max_label_slack = std::max(res.max_label_slack, std::abs(share - ratio));
        }
        return res;
    }
    throw Infeasible("could not satisfy coverage constraints within the repair budget");
}

}  // namespace pii
