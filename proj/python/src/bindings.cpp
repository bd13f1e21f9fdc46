// SPDX-License-Identifier: Apache-2.0
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "efpc/align.hpp"
#include "efpc/compressor.hpp"
#include "efpc/distill.hpp"
#include "efpc/errors.hpp"
#include "efpc/eval.hpp"
#include "efpc/model.hpp"
#include "efpc/text.hpp"

namespace py = pybind11;
using namespace efpc;

namespace {

MessageList to_messages(const std::vector<std::pair<std::string, std::string>>& pairs) {
    MessageList out;
    for (const auto& [role, content] : pairs) out.push_back({role, content});
    return out;
}

std::vector<std::pair<std::string, std::string>> from_messages(const MessageList& messages) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& m : messages) out.emplace_back(m.role, m.content);
    return out;
}

py::dict pair_dict(const DistilledPair& p) {
    py::dict d;
    d["doc_id"] = p.doc_id;
    d["chunk_idx"] = p.chunk_idx;
    d["instruction"] = p.instruction;
    d["original"] = p.original;
    d["compressed"] = p.compressed;
    d["ratio"] = p.ratio;
    return d;
}

py::dict result_dict(const CompressionResult& r) {
    py::dict d;
    d["kept_text"] = r.kept_text();
    d["kept_words"] = r.kept_words;
    d["kept_indices"] = r.kept_indices;
    d["probabilities"] = r.probabilities;
    d["n_original"] = r.n_original;
    d["n_kept"] = r.kept_words.size();
    d["achieved_inverse_ratio"] = r.achieved_inverse_ratio;
    return d;
}

py::tuple prf(const PrecisionRecallF1& s) { return py::make_tuple(s.precision, s.recall, s.f1); }

}  // namespace

PYBIND11_MODULE(_efpc, m) {
    m.attr("__version__") = "0.1.0";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    auto invalid = py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
    py::register_exception<InsufficientData>(m, "InsufficientData", invalid.ptr());
    py::register_exception<ValidationError>(m, "ValidationError", error.ptr());
    py::register_exception<TransportError>(m, "TransportError", error.ptr());
    py::register_exception<EmptyCompression>(m, "EmptyCompression", error.ptr());
    py::register_exception<DistillationFailed>(m, "DistillationFailed", error.ptr());
    py::register_exception<IoError>(m, "IoError", error.ptr());
    py::register_exception<FormatVersionMismatch>(m, "FormatVersionMismatch", error.ptr());
    py::register_exception<ChecksumMismatch>(m, "ChecksumMismatch", error.ptr());

    // Text
    m.def("split_words", [](std::string_view text) { return split_words(text).words; }, py::arg("text"));
    m.def("normalize_word", &normalize_word, py::arg("word"));
    m.def("lowercase", &lowercase, py::arg("text"));
    m.def("count_units", py::overload_cast<std::string_view>(&count_units), py::arg("text"));
    m.def(
        "chunk_document",
        [](std::string_view text, std::size_t max_units) {
            py::list out;
            for (const auto& c : chunk_document(text, max_units)) {
                py::dict d;
                d["text"] = c.text;
                d["unit_count"] = c.unit_count;
                d["ends_with_period"] = c.ends_with_period;
                d["force_split"] = c.force_split;
                out.append(d);
            }
            return out;
        },
        py::arg("text"), py::arg("max_units"));

    // Distillation
    py::class_<LlmProvider>(m, "LlmProvider")
        .def(
            "complete",
            [](LlmProvider& p, const std::vector<std::pair<std::string, std::string>>& messages) {
                return p.complete(to_messages(messages));
            },
            py::arg("messages"))
        .def_property_readonly("provider_id", &LlmProvider::provider_id);
    py::class_<StopwordMockProvider, LlmProvider>(m, "StopwordMockProvider").def(py::init<>());
    py::class_<InstructionAwareMockProvider, LlmProvider>(m, "InstructionAwareMockProvider").def(py::init<>());
    py::class_<ExtractiveQaMockProvider, LlmProvider>(m, "ExtractiveQaMockProvider").def(py::init<>());

    m.def(
        "build_compression_request",
        [](std::string_view instruction, const std::string& text) {
            Chunk chunk;
            chunk.text = text;
            chunk.unit_count = count_units(text);
            return from_messages(build_compression_request(instruction, chunk));
        },
        py::arg("instruction"), py::arg("text"));
    m.def("compression_ratio", &compression_ratio, py::arg("original"), py::arg("compressed"));
    m.def(
        "distill",
        [](LlmProvider& provider, const std::vector<std::map<std::string, std::string>>& docs, std::size_t max_units,
           bool task_agnostic, std::size_t concurrency, double failure_threshold) {
            std::vector<Document> documents;
            for (const auto& d : docs) {
                Document doc;
                doc.doc_id = d.at("doc_id");
                doc.text = d.at("text");
                if (auto it = d.find("instruction"); it != d.end()) doc.instruction = it->second;
                documents.push_back(std::move(doc));
            }
            DistillOptions options;
            options.max_units = max_units;
            options.task_agnostic = task_agnostic;
            options.concurrency = concurrency;
            options.failure_threshold = failure_threshold;
            DistilledDataset ds;
            {
                py::gil_scoped_release release;
                ds = distill_corpus(provider, documents, options);
            }
            py::list pairs;
            for (const auto& p : ds.pairs) pairs.append(pair_dict(p));
            return pairs;
        },
        py::arg("provider"), py::arg("docs"), py::arg("max_units") = 512, py::arg("task_agnostic") = false,
        py::arg("concurrency") = 1, py::arg("failure_threshold") = 0.10);
    m.def(
        "ratio_histogram",
        [](const std::vector<double>& ratios, double bin_width) {
            const auto h = ratio_histogram(ratios, bin_width);
            py::dict d;
            d["bin_edges"] = h.bin_edges;
            d["counts"] = h.counts;
            d["mean"] = h.mean;
            d["n"] = h.n;
            return d;
        },
        py::arg("ratios"), py::arg("bin_width") = 1.0);

    // Alignment
    py::class_<LabeledExample>(m, "LabeledExample")
        .def(py::init<>())
        .def_readwrite("instruction_words", &LabeledExample::instruction_words)
        .def_readwrite("original_words", &LabeledExample::original_words)
        .def_readwrite("labels", &LabeledExample::labels)
        .def_readwrite("boundary_m", &LabeledExample::boundary_m)
        .def("__eq__", [](const LabeledExample& a, const LabeledExample& b) { return a == b; });
    m.def(
        "label_pair",
        [](const std::vector<std::string>& original, const std::vector<std::string>& compressed) {
            const auto r = label_pair(original, compressed);
            py::dict d;
            d["labels"] = r.labels;
            d["matched"] = r.diagnostics.matched;
            d["unmatched_compressed"] = r.diagnostics.unmatched_compressed;
            d["match_rate"] = r.diagnostics.match_rate;
            return d;
        },
        py::arg("original_words"), py::arg("compressed_words"));
    m.def("build_example", &build_example, py::arg("instruction"), py::arg("original"), py::arg("labels"));
    m.def("validate_example", &validate_example, py::arg("example"));

    // Model
    py::enum_<LossVariant>(m, "LossVariant")
        .value("AGNOSTIC", LossVariant::Agnostic)
        .value("DROP", LossVariant::Drop)
        .value("MASK", LossVariant::Mask);

    py::class_<ModelConfig>(m, "ModelConfig")
        .def(py::init<>())
        .def_readwrite("vocab_size", &ModelConfig::vocab_size)
        .def_readwrite("embed_dim", &ModelConfig::embed_dim)
        .def_readwrite("num_layers", &ModelConfig::num_layers)
        .def_readwrite("num_heads", &ModelConfig::num_heads)
        .def_readwrite("ffn_dim", &ModelConfig::ffn_dim)
        .def_readwrite("max_seq_len", &ModelConfig::max_seq_len)
        .def_readwrite("seed", &ModelConfig::seed);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("loss_variant", &TrainConfig::loss_variant)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("include_degenerate", &TrainConfig::include_degenerate);

    py::class_<Model>(m, "Model")
        .def_property_readonly("config", [](const Model& model) { return model.params.config; })
        .def_property_readonly("vocab", [](const Model& model) { return model.vocab.words(); })
        .def_property_readonly("parameter_count", [](const Model& model) { return parameter_count(model.params); });

    m.def("make_model", &make_model, py::arg("dataset"), py::arg("config"));
    m.def(
        "train",
        [](Model& model, const std::vector<LabeledExample>& dataset, const TrainConfig& config) {
            TrainReport report;
            {
                py::gil_scoped_release release;
                report = train(model, dataset, config);
            }
            py::list epochs;
            for (const auto& e : report.epochs) {
                py::dict d;
                d["epoch"] = e.epoch;
                d["mean_loss"] = e.mean_loss;
                d["token_accuracy"] = e.token_accuracy;
                epochs.append(d);
            }
            return epochs;
        },
        py::arg("model"), py::arg("dataset"), py::arg("config"));
    m.def("token_accuracy", &token_accuracy, py::arg("model"), py::arg("dataset"), py::arg("with_instruction"));
    m.def("save_checkpoint", &save_checkpoint, py::arg("model"), py::arg("path"));
    m.def("load_checkpoint", &load_checkpoint, py::arg("path"));
    m.def("serialize_checkpoint", [](const Model& model) {
        const auto bytes = serialize_checkpoint(model);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    });
    m.def("deserialize_checkpoint", [](py::bytes data) {
        const std::string_view view = data;
        return deserialize_checkpoint(
            std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(view.data()), view.size()));
    });

    // Compression
    m.def("target_keep_count", &target_keep_count, py::arg("n"), py::arg("tau"));
    m.def(
        "compress",
        [](const Model& model, const std::string& original, const std::string& instruction,
           std::optional<double> ratio, std::optional<std::size_t> budget) {
            CompressionRequest req;
            req.original = original;
            req.instruction = instruction;
            req.keep_ratio = ratio;
            req.unit_budget = budget;
            return result_dict(compress(model, req));
        },
        py::arg("model"), py::arg("original"), py::arg("instruction") = "", py::arg("ratio") = py::none(),
        py::arg("budget") = py::none());

    // Metrics
    m.def("token_f1", &token_f1, py::arg("predicted"), py::arg("gold"));
    m.def("token_f1_max", &token_f1_max, py::arg("predicted"), py::arg("golds"));
    m.def(
        "rouge_n", [](std::string_view c, std::string_view r, std::size_t n) { return prf(rouge_n(c, r, n)); },
        py::arg("candidate"), py::arg("reference"), py::arg("n"));
    m.def(
        "rouge_l", [](std::string_view c, std::string_view r) { return prf(rouge_l(c, r)); }, py::arg("candidate"),
        py::arg("reference"));
    m.def("bleu", &bleu, py::arg("candidate"), py::arg("references"), py::arg("max_n") = 4);
    m.def(
        "evaluate_labeled",
        [](const Model& model, const std::vector<LabeledExample>& eval_set, bool with_instruction) {
            return evaluate_labeled(model, eval_set, with_instruction).means;
        },
        py::arg("model"), py::arg("eval_set"), py::arg("with_instruction"));
}
