// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "efpc/align.hpp"

namespace efpc {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

// Word-level vocabulary keyed on normalize_word (raw word when the
// normalized form is empty, so bare punctuation keeps its own id).
class Vocab {
public:
    static constexpr std::int32_t kPad = 0;
    static constexpr std::int32_t kUnk = 1;
    static constexpr std::int32_t kSep = 2;
    static constexpr std::size_t kReserved = 3;

    Vocab();
    // Words in id order, including the three reserved entries.
    explicit Vocab(std::vector<std::string> words);

    std::int32_t id_of(std::string_view word) const;
    const std::string& word_of(std::int32_t id) const { return words_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return words_.size(); }
    const std::vector<std::string>& words() const { return words_; }

    static std::string key(std::string_view word);

    bool operator==(const Vocab& other) const { return words_ == other.words_; }

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, std::int32_t> index_;
};

// Frequency-descending, then lexicographic. Counts instruction and original
// words. Throws EmptyDataset.
Vocab build_vocab(const std::vector<LabeledExample>& dataset);

// ---------------------------------------------------------------------------
// Configuration and parameters
// ---------------------------------------------------------------------------

struct ModelConfig {
    std::size_t vocab_size = 0;
    std::size_t embed_dim = 64;
    std::size_t num_layers = 2;
    std::size_t num_heads = 4;
    std::size_t ffn_dim = 128;
    std::size_t max_seq_len = 256;
    std::uint64_t seed = 0;

    // Throws InvalidArgument naming the violated invariant.
    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

struct LayerParams {
    Vector ln1_gamma, ln1_beta;
    Matrix wq, wk, wv, wo;  // d x d, applied as x * W
    Vector ln2_gamma, ln2_beta;
    Matrix w1;  // d x ffn
    Vector b1;
    Matrix w2;  // ffn x d
    Vector b2;
};

// All trainable parameters. Gradients use the same type.
struct ModelParams {
    ModelConfig config;
    Matrix token_embedding;     // vocab x d
    Matrix position_embedding;  // max_seq_len x d
    std::vector<LayerParams> layers;
    Vector final_ln_gamma, final_ln_beta;
    Matrix classifier_w;  // 2 x d; row 0 = preserve, row 1 = discard
    Vector classifier_b;  // 2

    // Zero-filled parameters of the right shapes.
    static ModelParams zeros(const ModelConfig& config);
};

struct TensorRef {
    std::string name;
    double* data;
    std::size_t rows;
    std::size_t cols;
    std::size_t size() const { return rows * cols; }
    std::span<double> values() const { return {data, size()}; }
};

// Every tensor in the fixed serialization order: token_embedding,
// position_embedding, then per layer ln1_gamma, ln1_beta, wq, wk, wv, wo,
// ln2_gamma, ln2_beta, w1, b1, w2, b2, then final_ln_gamma, final_ln_beta,
// classifier_w, classifier_b.
struct ConstTensorRef {
    std::string name;
    const double* data;
    std::size_t rows;
    std::size_t cols;
    std::size_t size() const { return rows * cols; }
    std::span<const double> values() const { return {data, size()}; }
};

std::vector<TensorRef> tensors(ModelParams& params);
std::vector<ConstTensorRef> tensors(const ModelParams& params);
std::size_t parameter_count(const ModelParams& params);

// Seeded initialization. All values are exactly representable as float.
ModelParams init_params(const ModelConfig& config);

// Rounds every parameter to the nearest float.
void round_to_float(ModelParams& params);

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

// Token ids for one window: [instruction, SEP, original] when an instruction
// is present, [original] otherwise. `boundary` is the index of the first
// original position; labels cover original positions only.
struct TokenizedExample {
    std::vector<std::int32_t> token_ids;
    std::vector<int> labels;
    std::size_t boundary = 0;

    std::size_t instruction_len() const { return boundary == 0 ? 0 : boundary - 1; }
    std::size_t original_len() const { return token_ids.size() - boundary; }
};

// Splits the original into windows of (max_seq_len - M - 1) words (or
// max_seq_len words without an instruction), re-prepending the instruction
// to each. Throws InstructionTooLong when M + 1 >= max_seq_len. Labels may
// be empty, in which case the windows carry no labels.
std::vector<TokenizedExample> tokenize_windows(const Vocab& vocab, const std::vector<std::string>& instruction,
                                               const std::vector<std::string>& original,
                                               const std::vector<int>& labels, std::size_t max_seq_len);

std::vector<TokenizedExample> tokenize_windows(const Vocab& vocab, const LabeledExample& example,
                                               bool with_instruction, std::size_t max_seq_len);

// h = f(x): one d-vector per position. Throws SequenceTooLong.
Matrix encode(const ModelParams& params, std::span<const std::int32_t> token_ids);
inline Matrix encode(const ModelParams& params, const TokenizedExample& example) {
    return encode(params, example.token_ids);
}

struct ProbPair {
    double preserve = 0.5;
    double discard = 0.5;
};

// softmax(W h_i + b) per position.
std::vector<ProbPair> classify(const ModelParams& params, const Matrix& hidden);

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

enum class LossVariant { Agnostic, Drop, Mask };

std::string_view to_string(LossVariant v);
LossVariant parse_loss_variant(std::string_view s);

inline constexpr double kProbClamp = 1e-12;

// Cross-entropy of one position; probability clamped to [1e-12, 1 - 1e-12].
double cross_entropy(const ProbPair& p, int label);

// Mean CE over all N positions (no instruction). Throws LengthMismatch.
double loss_agnostic(std::span<const ProbPair> probs, std::span<const int> labels);
// probs covers boundary prefix positions followed by labels.size() original
// positions. Prefix positions are scored against label 0.
double loss_drop(std::span<const ProbPair> probs, std::span<const int> labels, std::size_t boundary);
// Prefix positions are ignored.
double loss_mask(std::span<const ProbPair> probs, std::span<const int> labels, std::size_t boundary);

// Selected loss for one tokenized window. The SEP position is never scored:
// Drop averages over the M instruction words plus N original words.
// Agnostic requires an example without instruction.
double example_loss(const ModelParams& params, const TokenizedExample& example, LossVariant variant);

struct LossAndGrad {
    double loss = 0.0;
    ModelParams grad;
    std::vector<ProbPair> probs;  // every position, from the forward pass
};

// Exact analytic gradient of example_loss with respect to every parameter.
LossAndGrad backward(const ModelParams& params, const TokenizedExample& example, LossVariant variant);

// ---------------------------------------------------------------------------
// Optimization
// ---------------------------------------------------------------------------

struct TrainConfig {
    double learning_rate = 1e-5;
    std::size_t batch_size = 10;
    std::size_t epochs = 10;
    LossVariant loss_variant = LossVariant::Mask;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    // Degenerate examples (all-zero labels etc.) are skipped unless set.
    bool include_degenerate = false;

    void validate() const;
};

struct AdamState {
    ModelParams m;
    ModelParams v;
    std::uint64_t step = 0;

    static AdamState for_params(const ModelParams& params);
};

// Bias-corrected Adam update in place. Throws ShapeMismatch.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const TrainConfig& config);

struct EpochStats {
    std::size_t epoch = 0;
    double mean_loss = 0.0;
    double token_accuracy = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
};

// A trained compressor: parameters plus the vocabulary they were built for.
struct Model {
    ModelParams params;
    Vocab vocab;
};

// Mini-batch Adam over the dataset. Starting from an existing model gives
// incremental training; passing a mix_datasets output gives joint training.
// Instruction-blind for LossVariant::Agnostic. Throws EmptyDataset.
TrainReport train(Model& model, const std::vector<LabeledExample>& dataset, const TrainConfig& config);

// Fresh model sized for the dataset's vocabulary.
Model make_model(const std::vector<LabeledExample>& dataset, ModelConfig config);

// Accuracy of argmax predictions over original positions.
double token_accuracy(const Model& model, const std::vector<LabeledExample>& dataset, bool with_instruction);
double dataset_loss(const Model& model, const std::vector<LabeledExample>& dataset, LossVariant variant);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

// "EFPCKPT1", u64 header length, JSON header {format_version, model_config,
// vocab}, then per tensor (order of tensors()) a u64 element count and that
// many little-endian f32 values, then CRC32 of all preceding bytes.
std::vector<std::uint8_t> serialize_checkpoint(const Model& model);
Model deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace efpc
