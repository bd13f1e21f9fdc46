// SPDX-License-Identifier: Apache-2.0
#include "cli.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "digest.hpp"
#include "efpc/align.hpp"
#include "efpc/compressor.hpp"
#include "efpc/distill.hpp"
#include "efpc/errors.hpp"
#include "efpc/eval.hpp"
#include "efpc/jsonl.hpp"
#include "efpc/model.hpp"

#ifndef EFPC_VERSION
#define EFPC_VERSION "0.0.0"
#endif

namespace efpc::cli {

namespace {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

constexpr const char* kUsage =
    "usage: efpc <command> [options]\n"
    "\n"
    "commands:\n"
    "  distill   compress corpus chunks with an LLM provider into (original, compressed) pairs\n"
    "  label     turn pairs into word-level training examples\n"
    "  train     train a compressor checkpoint on labeled examples\n"
    "  compress  compress one document with a trained checkpoint\n"
    "  eval      score a checkpoint on QA records or labeled examples\n"
    "  sweep     data-efficiency sweep over fractions of extra training data\n"
    "  stats     compression-ratio histogram of a pairs file\n"
    "\n"
    "run 'efpc <command> --help' for the options of one command\n";

// Flag values that override the config file, applied only when given.
class Overrides {
public:
    template <typename T>
    void option(CLI::App* app, const std::string& flag, const std::string& help,
                std::function<void(RunConfig&, const T&)> apply) {
        auto slot = std::make_shared<T>();
        CLI::Option* opt = app->add_option(flag, *slot, help);
        appliers_.push_back([slot, opt, apply](RunConfig& c) {
            if (opt->count() > 0) apply(c, *slot);
        });
    }

    void flag(CLI::App* app, const std::string& flag, const std::string& help, std::function<void(RunConfig&)> apply) {
        CLI::Option* opt = app->add_flag(flag, help);
        appliers_.push_back([opt, apply](RunConfig& c) {
            if (opt->count() > 0) apply(c);
        });
    }

    void apply(RunConfig& c) const {
        for (const auto& f : appliers_) f(c);
    }

private:
    std::vector<std::function<void(RunConfig&)>> appliers_;
};

std::string fixed6(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

[[noreturn]] void missing(const std::string& what) { throw ValidationError("missing required option: " + what); }

const std::string& require_input(const std::string& path, const std::string& flag) {
    if (path.empty()) missing(flag);
    if (!fs::is_regular_file(path)) throw ValidationError(flag + " " + path + ": no such file");
    return path;
}

const std::string& require_output(const std::string& path, const std::string& flag) {
    if (path.empty()) missing(flag);
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent)) throw ValidationError(flag + " " + path + ": directory does not exist");
    return path;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    return in;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << text;
    if (!out) throw IoError("write failed for " + path);
}

std::string read_text(const std::string& path) {
    auto in = open_in(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string config_digest(const RunConfig& c) { return sha256_hex(config_to_json(c).dump()); }

// Everything a run consumed, in a form that does not depend on where the
// files live.
struct Provenance {
    std::string command;
    const RunConfig* config = nullptr;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    std::string run_id() const {
        std::string material = config_digest(*config);
        for (const auto& p : inputs) material += ":" + sha256_file(p);
        return command + "-" + sha256_hex(material).substr(0, 16);
    }
};

void write_manifest(const Provenance& prov, const std::string& path) {
    auto files = [](const std::vector<std::string>& paths) {
        ojson arr = ojson::array();
        for (const auto& p : paths) {
            if (fs::is_directory(p)) continue;
            arr.push_back({{"name", fs::path(p).filename().string()}, {"sha256", sha256_file(p)}});
        }
        return arr;
    };
    ojson m;
    m["command"] = prov.command;
    m["run_id"] = prov.run_id();
    m["versions"] = {{"efpc", EFPC_VERSION}, {"checkpoint_format", kCheckpointFormatVersion}};
    m["config_digest"] = config_digest(*prov.config);
    m["config"] = config_to_json(*prov.config);
    m["inputs"] = files(prov.inputs);
    m["outputs"] = files(prov.outputs);
    write_text(path, m.dump(2) + "\n");
}

void finish(const Provenance& prov, const std::string& primary_output) {
    const std::string& explicit_path = prov.config->paths.manifest;
    if (!explicit_path.empty())
        write_manifest(prov, explicit_path);
    else if (!primary_output.empty())
        write_manifest(prov, primary_output + ".manifest.json");
}

std::unique_ptr<LlmProvider> make_provider(const ProviderSettings& s) {
    if (s.kind == "mock") return std::make_unique<InstructionAwareMockProvider>();
    if (s.kind == "mock-stopword") return std::make_unique<StopwordMockProvider>();
    if (s.kind == "mock-qa") return std::make_unique<ExtractiveQaMockProvider>();
    HttpProviderConfig h;
    h.base_url = s.base_url;
    h.model = s.model_name;
    h.api_key_env = s.api_key_env;
    h.timeout = std::chrono::milliseconds(s.timeout_ms);
    return std::make_unique<HttpChatProvider>(h);
}

std::vector<LabeledExample> load_examples(const std::string& path) {
    auto in = open_in(path);
    return read_examples_jsonl(in);
}

std::vector<DistilledPair> load_pairs(const std::string& path) {
    auto in = open_in(path);
    return read_pairs_jsonl(in);
}

CompressionRequest request_for(const RunConfig& c, std::string instruction, std::string text) {
    CompressionRequest r{std::move(instruction), std::move(text), c.ratio, c.budget};
    r.validate();
    return r;
}

// ---------------------------------------------------------------------------

int cmd_distill(const RunConfig& c, std::ostream& out) {
    const auto& corpus_path = require_input(c.paths.corpus, "--corpus");
    const auto& out_path = require_output(c.paths.out, "--out");
    auto in = open_in(corpus_path);
    const auto docs = read_corpus_jsonl(in);

    DistillOptions opt;
    opt.max_units = c.max_units;
    opt.concurrency = c.concurrency;
    opt.failure_threshold = c.failure_threshold;
    opt.task_agnostic = c.task_agnostic;
    opt.retry.max_attempts = c.provider.max_attempts;
    auto provider = make_provider(c.provider);
    const auto ds = distill_corpus(*provider, docs, opt);

    std::ostringstream text;
    write_pairs_jsonl(text, ds.pairs);
    write_text(out_path, text.str());

    double mean = 0.0;
    if (!ds.pairs.empty()) mean = ratio_histogram(ds, 1.0).mean;
    out << "documents\t" << docs.size() << "\n"
        << "pairs\t" << ds.pairs.size() << "\n"
        << "failures\t" << ds.failures.size() << "\n"
        << "mean_ratio\t" << fixed6(mean) << "\n";
    finish({"distill", &c, {corpus_path}, {out_path}}, out_path);
    return kExitOk;
}

int cmd_label(const RunConfig& c, std::ostream& out) {
    const auto& pairs_path = require_input(c.paths.pairs, "--dataset");
    const auto& out_path = require_output(c.paths.out, "--out");
    std::vector<AlignmentDiagnostics> diag;
    const auto examples = label_dataset(load_pairs(pairs_path), &diag);

    std::ostringstream text;
    write_examples_jsonl(text, examples);
    write_text(out_path, text.str());

    std::size_t degenerate = 0, unmatched = 0;
    double match_sum = 0.0;
    for (const auto& ex : examples) degenerate += is_degenerate(ex) ? 1 : 0;
    for (const auto& d : diag) {
        unmatched += d.unmatched_compressed;
        match_sum += d.match_rate;
    }
    out << "examples\t" << examples.size() << "\n"
        << "degenerate\t" << degenerate << "\n"
        << "unmatched_words\t" << unmatched << "\n"
        << "mean_match_rate\t" << fixed6(diag.empty() ? 0.0 : match_sum / static_cast<double>(diag.size())) << "\n";
    finish({"label", &c, {pairs_path}, {out_path}}, out_path);
    return kExitOk;
}

int cmd_train(const RunConfig& c, std::ostream& out) {
    const auto& data_path = require_input(c.paths.examples, "--data");
    const auto& out_path = require_output(c.paths.out, "--out");
    const auto ds = load_examples(data_path);

    Model model;
    std::vector<std::string> inputs = {data_path};
    if (!c.paths.checkpoint.empty()) {
        model = load_checkpoint(require_input(c.paths.checkpoint, "--checkpoint"));
        inputs.push_back(c.paths.checkpoint);
    } else {
        model = make_model(ds, c.model);
    }
    const auto report = train(model, ds, c.train);
    save_checkpoint(model, out_path);

    out << "parameters\t" << parameter_count(model.params) << "\n"
        << "vocab\t" << model.vocab.size() << "\n";
    for (const auto& e : report.epochs)
        out << "epoch\t" << e.epoch << "\tloss\t" << fixed6(e.mean_loss) << "\taccuracy\t" << fixed6(e.token_accuracy)
            << "\n";
    finish({"train", &c, inputs, {out_path}}, out_path);
    return kExitOk;
}

int cmd_compress(const RunConfig& c, std::ostream& out) {
    const auto& ckpt = require_input(c.paths.checkpoint, "--checkpoint");
    const auto& input = require_input(c.paths.input, "--input");
    const auto request = request_for(c, c.instruction, read_text(input));
    const Model model = load_checkpoint(ckpt);
    const std::string record = to_json(compress(model, request)).dump() + "\n";
    if (c.paths.out.empty()) {
        out << record;
    } else {
        write_text(require_output(c.paths.out, "--out"), record);
    }
    finish({"compress", &c, {ckpt, input}, c.paths.out.empty() ? std::vector<std::string>{}
                                                                : std::vector<std::string>{c.paths.out}},
           c.paths.out);
    return kExitOk;
}

std::vector<DownstreamItem> load_qa(const std::string& path, const Model& model, const RunConfig& c) {
    auto in = open_in(path);
    std::vector<DownstreamItem> items;
    for_each_jsonl(in, [&](const nlohmann::json& j, std::size_t line) {
        DownstreamItem item;
        const auto context = require_field<std::string>(j, "context", line);
        item.record.question = require_field<std::string>(j, "question", line);
        item.record.gold_answers = require_field<std::vector<std::string>>(j, "answers", line);
        if (item.record.gold_answers.empty())
            throw ParseError("line " + std::to_string(line) + ": field 'answers' must not be empty");
        const std::string instruction = c.task_agnostic ? std::string() : item.record.question;
        item.compression = compress(model, request_for(c, instruction, context));
        items.push_back(std::move(item));
    });
    return items;
}

int cmd_eval(const RunConfig& c, std::ostream& out) {
    const auto& ckpt = require_input(c.paths.checkpoint, "--checkpoint");
    const auto& out_path = require_output(c.paths.out, "--out");
    if (c.paths.qa.empty() == c.paths.examples.empty()) throw ValidationError("eval needs exactly one of --qa or --data");
    const Model model = load_checkpoint(ckpt);

    MetricsReport report;
    std::vector<std::string> inputs = {ckpt};
    if (!c.paths.qa.empty()) {
        if (!c.ratio && !c.budget) missing("--ratio or --budget");
        inputs.push_back(require_input(c.paths.qa, "--qa"));
        auto items = load_qa(c.paths.qa, model, c);
        auto target = make_provider(c.target);
        report = evaluate_downstream(*target, items);
    } else {
        inputs.push_back(require_input(c.paths.examples, "--data"));
        report = evaluate_labeled(model, load_examples(c.paths.examples), !c.task_agnostic);
    }

    const Provenance prov{"eval", &c, inputs, {out_path}};
    write_text(out_path, report_to_json(report, prov.run_id(), config_digest(c)).dump(2) + "\n");
    out << "items\t" << report.n_items << "\n"
        << "scored\t" << report.n_scored() << "\n"
        << "failed\t" << report.n_failed << "\n";
    for (const auto& [k, v] : report.means) out << "metric\t" << k << "\t" << fixed6(v) << "\n";
    finish(prov, out_path);
    if (report.n_items > 0 && report.n_scored() == 0)
        throw TransportError("every target request failed; first error: " + report.errors.front());
    return kExitOk;
}

int cmd_sweep(const RunConfig& c, std::ostream& out) {
    const auto& ckpt = require_input(c.paths.checkpoint, "--checkpoint");
    const auto& extra_path = require_input(c.paths.extra, "--extra");
    const auto& eval_path = require_input(c.paths.eval_data, "--eval-data");
    if (c.paths.out_dir.empty()) missing("--out-dir");
    fs::create_directories(c.paths.out_dir);

    const Model base = load_checkpoint(ckpt);
    const auto sweep =
        data_efficiency_sweep(base, load_examples(extra_path), c.fractions, load_examples(eval_path), c.train);

    const std::vector<std::string> inputs = {ckpt, extra_path, eval_path};
    std::vector<std::string> outputs;
    const Provenance prov{"sweep", &c, inputs, {}};
    const std::string run_id = prov.run_id();
    const std::string digest = config_digest(c);
    for (std::size_t i = 0; i < sweep.cells.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "cell_%02zu.json", i);
        const auto path = (fs::path(c.paths.out_dir) / name).string();
        auto j = report_to_json(sweep.cells[i].report, run_id, digest);
        j["fraction"] = sweep.cells[i].fraction;
        j["n_extra"] = sweep.cells[i].n_extra;
        write_text(path, j.dump(2) + "\n");
        outputs.push_back(path);
    }
    const auto summary_path = (fs::path(c.paths.out_dir) / "summary.tsv").string();
    const std::string summary = sweep_summary_tsv(sweep);
    write_text(summary_path, summary);
    outputs.push_back(summary_path);
    out << summary;
    finish({"sweep", &c, inputs, outputs}, (fs::path(c.paths.out_dir) / "sweep").string());
    return kExitOk;
}

int cmd_stats(const RunConfig& c, std::ostream& out) {
    const auto& pairs_path = require_input(c.paths.pairs, "--dataset");
    DistilledDataset ds;
    ds.pairs = load_pairs(pairs_path);
    const auto h = ratio_histogram(ds, c.bin_width);
    out << "n\t" << h.n << "\n" << "mean_ratio\t" << fixed6(h.mean) << "\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        out << "bin\t" << fixed6(h.bin_edges[i]) << "\t" << fixed6(h.bin_edges[i + 1]) << "\t" << h.counts[i] << "\n";
    finish({"stats", &c, {pairs_path}, {}}, "");
    return kExitOk;
}

// ---------------------------------------------------------------------------

struct Command {
    CLI::App* app;
    std::function<int(const RunConfig&, std::ostream&)> run;
};

void common_options(CLI::App* app, Overrides& o, std::string& config_path) {
    app->add_option("--config", config_path, "YAML config file; flags override its values");
    o.option<std::uint64_t>(app, "--seed", "seed for every random choice", [](RunConfig& c, const auto& v) { c.seed = v; });
    o.option<std::string>(app, "--manifest", "run manifest path (default: <output>.manifest.json)",
                          [](RunConfig& c, const auto& v) { c.paths.manifest = v; });
}

void model_options(CLI::App* app, Overrides& o) {
    o.option<std::size_t>(app, "--embed-dim", "hidden size", [](RunConfig& c, const auto& v) { c.model.embed_dim = v; });
    o.option<std::size_t>(app, "--layers", "encoder layers", [](RunConfig& c, const auto& v) { c.model.num_layers = v; });
    o.option<std::size_t>(app, "--heads", "attention heads", [](RunConfig& c, const auto& v) { c.model.num_heads = v; });
    o.option<std::size_t>(app, "--ffn-dim", "feed-forward size", [](RunConfig& c, const auto& v) { c.model.ffn_dim = v; });
    o.option<std::size_t>(app, "--max-seq-len", "window length in tokens",
                          [](RunConfig& c, const auto& v) { c.model.max_seq_len = v; });
}

void train_options(CLI::App* app, Overrides& o) {
    o.option<std::string>(app, "--loss", "agnostic | drop | mask",
                          [](RunConfig& c, const auto& v) { c.train.loss_variant = parse_loss_variant(v); });
    o.option<std::size_t>(app, "--epochs", "training epochs", [](RunConfig& c, const auto& v) { c.train.epochs = v; });
    o.option<double>(app, "--lr", "Adam learning rate", [](RunConfig& c, const auto& v) { c.train.learning_rate = v; });
    o.option<std::size_t>(app, "--batch-size", "examples per step",
                          [](RunConfig& c, const auto& v) { c.train.batch_size = v; });
}

void target_options(CLI::App* app, Overrides& o) {
    o.option<double>(app, "--ratio", "keep ratio tau in (0, 1]", [](RunConfig& c, const auto& v) { c.ratio = v; });
    o.option<std::size_t>(app, "--budget", "word budget", [](RunConfig& c, const auto& v) { c.budget = v; });
}

int classify_error(const std::exception& e, std::ostream& err) {
    err << "efpc: " << e.what() << "\n";
    if (dynamic_cast<const InvalidArgument*>(&e) || dynamic_cast<const ParseError*>(&e) ||
        dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const IoError*>(&e) ||
        dynamic_cast<const FormatVersionMismatch*>(&e) || dynamic_cast<const ChecksumMismatch*>(&e))
        return kExitUserError;
    return kExitRuntimeFailure;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"efpc: instruction-aware extractive prompt compression", "efpc"};
    app.require_subcommand(1);
    app.set_version_flag("--version", EFPC_VERSION);

    Overrides o;
    std::string config_path;
    std::vector<Command> commands;

    auto* distill = app.add_subcommand("distill", "compress corpus chunks with an LLM provider");
    common_options(distill, o, config_path);
    o.option<std::string>(distill, "--corpus", "corpus JSONL {doc_id, text, instruction?}",
                          [](RunConfig& c, const auto& v) { c.paths.corpus = v; });
    o.option<std::string>(distill, "--out", "pairs JSONL to write", [](RunConfig& c, const auto& v) { c.paths.out = v; });
    o.option<std::string>(distill, "--provider", "mock | mock-stopword | http",
                          [](RunConfig& c, const auto& v) { c.provider.kind = v; });
    o.option<std::string>(distill, "--base-url", "chat-completion endpoint base",
                          [](RunConfig& c, const auto& v) { c.provider.base_url = v; });
    o.option<std::string>(distill, "--model-name", "remote model name",
                          [](RunConfig& c, const auto& v) { c.provider.model_name = v; });
    o.option<std::size_t>(distill, "--max-units", "words per chunk", [](RunConfig& c, const auto& v) { c.max_units = v; });
    o.option<std::size_t>(distill, "--concurrency", "parallel requests",
                          [](RunConfig& c, const auto& v) { c.concurrency = v; });
    o.option<double>(distill, "--failure-threshold", "tolerated failed-chunk fraction",
                     [](RunConfig& c, const auto& v) { c.failure_threshold = v; });
    o.flag(distill, "--task-agnostic", "ignore per-document instructions", [](RunConfig& c) { c.task_agnostic = true; });
    commands.push_back({distill, cmd_distill});

    auto* label = app.add_subcommand("label", "turn pairs into labeled examples");
    common_options(label, o, config_path);
    o.option<std::string>(label, "--dataset", "pairs JSONL", [](RunConfig& c, const auto& v) { c.paths.pairs = v; });
    o.option<std::string>(label, "--out", "examples JSONL to write", [](RunConfig& c, const auto& v) { c.paths.out = v; });
    commands.push_back({label, cmd_label});

    auto* train_cmd = app.add_subcommand("train", "train a compressor checkpoint");
    common_options(train_cmd, o, config_path);
    o.option<std::string>(train_cmd, "--data", "examples JSONL", [](RunConfig& c, const auto& v) { c.paths.examples = v; });
    o.option<std::string>(train_cmd, "--out", "checkpoint to write", [](RunConfig& c, const auto& v) { c.paths.out = v; });
    o.option<std::string>(train_cmd, "--checkpoint", "continue training from this checkpoint",
                          [](RunConfig& c, const auto& v) { c.paths.checkpoint = v; });
    o.flag(train_cmd, "--include-degenerate", "train on flagged examples too",
           [](RunConfig& c) { c.train.include_degenerate = true; });
    model_options(train_cmd, o);
    train_options(train_cmd, o);
    commands.push_back({train_cmd, cmd_train});

    auto* compress_cmd = app.add_subcommand("compress", "compress one document");
    common_options(compress_cmd, o, config_path);
    o.option<std::string>(compress_cmd, "--checkpoint", "trained checkpoint",
                          [](RunConfig& c, const auto& v) { c.paths.checkpoint = v; });
    o.option<std::string>(compress_cmd, "--input", "plain-text document", [](RunConfig& c, const auto& v) { c.paths.input = v; });
    o.option<std::string>(compress_cmd, "--instruction", "user instruction; empty for task-agnostic",
                          [](RunConfig& c, const auto& v) { c.instruction = v; });
    o.option<std::string>(compress_cmd, "--out", "write the record here instead of standard output",
                          [](RunConfig& c, const auto& v) { c.paths.out = v; });
    target_options(compress_cmd, o);
    commands.push_back({compress_cmd, cmd_compress});

    auto* eval_cmd = app.add_subcommand("eval", "score a checkpoint");
    common_options(eval_cmd, o, config_path);
    o.option<std::string>(eval_cmd, "--checkpoint", "trained checkpoint",
                          [](RunConfig& c, const auto& v) { c.paths.checkpoint = v; });
    o.option<std::string>(eval_cmd, "--qa", "QA JSONL {context, question, answers}",
                          [](RunConfig& c, const auto& v) { c.paths.qa = v; });
    o.option<std::string>(eval_cmd, "--data", "labeled examples JSONL",
                          [](RunConfig& c, const auto& v) { c.paths.examples = v; });
    o.option<std::string>(eval_cmd, "--out", "report JSON to write", [](RunConfig& c, const auto& v) { c.paths.out = v; });
    o.option<std::string>(eval_cmd, "--target", "mock-qa | http", [](RunConfig& c, const auto& v) { c.target.kind = v; });
    o.option<std::string>(eval_cmd, "--target-url", "target endpoint base",
                          [](RunConfig& c, const auto& v) { c.target.base_url = v; });
    o.option<std::string>(eval_cmd, "--target-model", "target model name",
                          [](RunConfig& c, const auto& v) { c.target.model_name = v; });
    o.flag(eval_cmd, "--task-agnostic", "compress without the question", [](RunConfig& c) { c.task_agnostic = true; });
    target_options(eval_cmd, o);
    commands.push_back({eval_cmd, cmd_eval});

    auto* sweep_cmd = app.add_subcommand("sweep", "data-efficiency sweep");
    common_options(sweep_cmd, o, config_path);
    o.option<std::string>(sweep_cmd, "--checkpoint", "base checkpoint",
                          [](RunConfig& c, const auto& v) { c.paths.checkpoint = v; });
    o.option<std::string>(sweep_cmd, "--extra", "extra examples JSONL", [](RunConfig& c, const auto& v) { c.paths.extra = v; });
    o.option<std::string>(sweep_cmd, "--eval-data", "evaluation examples JSONL",
                          [](RunConfig& c, const auto& v) { c.paths.eval_data = v; });
    o.option<std::string>(sweep_cmd, "--out-dir", "directory for cell reports and summary.tsv",
                          [](RunConfig& c, const auto& v) { c.paths.out_dir = v; });
    o.option<std::vector<double>>(sweep_cmd, "--fractions", "strictly increasing fractions in [0, 1]",
                                  [](RunConfig& c, const auto& v) { c.fractions = v; });
    train_options(sweep_cmd, o);
    sweep_cmd->get_option("--fractions")->delimiter(',');
    commands.push_back({sweep_cmd, cmd_sweep});

    auto* stats = app.add_subcommand("stats", "compression-ratio histogram");
    common_options(stats, o, config_path);
    o.option<std::string>(stats, "--dataset", "pairs JSONL", [](RunConfig& c, const auto& v) { c.paths.pairs = v; });
    o.option<double>(stats, "--bin-width", "histogram bin width", [](RunConfig& c, const auto& v) { c.bin_width = v; });
    commands.push_back({stats, cmd_stats});

    if (!args.empty() && !args[0].empty() && args[0][0] != '-' && !app.get_subcommand_no_throw(args[0])) {
        err << "efpc: unknown command '" << args[0] << "'\n\n" << kUsage;
        return kExitUserError;
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        const CLI::App* target = &app;
        for (const auto& cmd : commands)
            if (cmd.app->parsed()) target = cmd.app;
        out << (target == &app ? std::string(kUsage) : target->help());
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << EFPC_VERSION << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "efpc: " << e.what() << "\n\n" << kUsage;
        return kExitUserError;
    }

    try {
        RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
        o.apply(config);
        config.model.seed = config.seed;
        config.train.seed = config.seed;
        config.validate();
        for (const auto& cmd : commands)
            if (cmd.app->parsed()) return cmd.run(config, out);
    } catch (const std::exception& e) {
        return classify_error(e, err);
    }
    err << kUsage;
    return kExitUserError;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run_cli(args, std::cout, std::cerr);
}

}  // namespace efpc::cli
