#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pii/embedding.hpp"
#include "pii/errors.hpp"
#include "pii/evaluation.hpp"
#include "pii/generator.hpp"
#include "pii/http_model.hpp"
#include "pii/llm_gateway.hpp"
#include "pii/mock_provider.hpp"
#include "pii/preprocess.hpp"
#include "pii/taxonomy.hpp"

namespace py = pybind11;

namespace {

py::dict normalized_to_dict(const pii::NormalizedBody& nb) {
    py::dict d;
    d["original"] = nb.original;
    d["normalized"] = nb.normalized;
    py::list spans;
    for (const auto& s : nb.span_map) {
        py::dict sp;
        sp["orig_start"] = s.orig_start;
        sp["orig_end"] = s.orig_end;
        sp["norm_start"] = s.norm_start;
        sp["norm_end"] = s.norm_end;
        sp["transform"] = pii::to_string(s.transform);
        spans.append(sp);
    }
    d["span_map"] = spans;
    return d;
}

}  // namespace

PYBIND11_MODULE(_pii_kit, m) {
    m.doc() = "PII annotation toolkit for HTTP traffic (C++ core)";

    py::register_exception<pii::Error>(m, "PiiError");

    py::class_<pii::Taxonomy>(m, "Taxonomy")
        .def_property_readonly("name", &pii::Taxonomy::name)
        .def("__len__", &pii::Taxonomy::size)
        .def("__contains__", &pii::Taxonomy::contains)
        .def("labels", [](const pii::Taxonomy& t) {
            std::vector<std::string> out;
            for (const auto& e : t.entries()) out.push_back(e.label);
            return out;
        });

    m.def("load_taxonomy", &pii::load_taxonomy, py::arg("path"));
    m.def("parse_taxonomy", &pii::parse_taxonomy, py::arg("json_text"));

    m.def(
        "normalize_body",
        [](const std::string& raw) { return normalized_to_dict(pii::normalize_body(raw)); },
        py::arg("raw"), "Decode percent-escapes, HTML entities and Base64; returns the span map.");

    m.def("gestalt_similarity", &pii::gestalt_similarity, py::arg("a"), py::arg("b"),
          "Ratcliff-Obershelp similarity ratio in [0, 1].");

    m.def(
        "fallback_embedding",
        [](const std::string& text) { return pii::fallback_embedding(text).values; },
        py::arg("text"));
    m.def(
        "cosine",
        [](const std::vector<double>& a, const std::vector<double>& b) {
            return pii::cosine(pii::EmbeddingVector{a}, pii::EmbeddingVector{b});
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "stratified_split_files",
        [](const std::string& in, double ratio, std::uint64_t seed, const std::string& out_eval,
           const std::string& out_examples) {
            auto corpus = pii::load_dataset(in);
            auto r = pii::stratified_split(corpus, ratio, seed);
            pii::save_dataset(out_eval, r.evaluation_set);
            pii::save_dataset(out_examples, r.example_set);
            return r.max_label_slack;
        },
        py::arg("input_path"), py::arg("ratio"), py::arg("seed"), py::arg("out_eval"),
        py::arg("out_examples"),
        "Stratified split with full label coverage in both partitions; returns the slack.");

    m.def(
        "evaluate_run",
        [](const std::string& run_dir, const std::string& gold_path, double tau) {
            return pii::serialize_report(pii::evaluate_run(run_dir, gold_path, tau));
        },
        py::arg("run_dir"), py::arg("gold_path"), py::arg("tau") = 0.8,
        "Score checkpoint files against a gold dataset; returns the report as JSON.");

    m.def(
        "generate_mock_corpus",
        [](const std::string& taxonomy_path, std::size_t scenarios,
           std::size_t requests_per_scenario, std::uint64_t seed, const std::string& out_path) {
            auto taxonomy = pii::load_taxonomy(taxonomy_path);
            auto gateway = std::make_shared<pii::Gateway>(
                pii::make_mock_provider("mock:synth", nullptr, seed));
            pii::GeneratorConfig cfg;
            cfg.seed = seed;
            pii::SynthGenerator gen(taxonomy, gateway, cfg);
            auto scen = gen.generate_scenarios(scenarios);
            std::vector<pii::AnnotatedMessage> corpus;
            for (const auto& s : scen)
                for (auto& r : gen.generate_requests(s, requests_per_scenario))
                    corpus.push_back(std::move(r));
            pii::save_dataset(out_path, corpus);
            return corpus.size();
        },
        py::arg("taxonomy_path"), py::arg("scenarios"), py::arg("requests_per_scenario"),
        py::arg("seed"), py::arg("out_path"),
        "Deterministic synthetic corpus via the built-in mock provider.");
}
