// SPDX-License-Identifier: Apache-2.0
#include "efpc/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "efpc/errors.hpp"
#include "efpc/rng.hpp"
#include "efpc/text.hpp"

namespace efpc {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& toks, std::size_t n) {
    NgramCounts out;
    if (n == 0 || toks.size() < n) return out;
    for (std::size_t i = 0; i + n <= toks.size(); ++i) ++out[{toks.begin() + static_cast<std::ptrdiff_t>(i),
                                                              toks.begin() + static_cast<std::ptrdiff_t>(i + n)}];
    return out;
}

std::size_t overlap(const NgramCounts& a, const NgramCounts& b) {
    std::size_t total = 0;
    for (const auto& [g, n] : a) {
        const auto it = b.find(g);
        if (it != b.end()) total += std::min(n, it->second);
    }
    return total;
}

double harmonic(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

constexpr std::string_view kContextLabel = "Context:\n";
constexpr std::string_view kQuestionLabel = "\n\nQuestion: ";
constexpr std::string_view kAnswerLabel = "\n\nAnswer:";

}  // namespace

std::vector<std::string> metric_tokens(std::string_view text) {
    auto words = split_words(text).words;
    for (auto& w : words) w = lowercase(w);
    return words;
}

double token_f1(std::string_view predicted, std::string_view gold) {
    const auto p = metric_tokens(predicted);
    const auto g = metric_tokens(gold);
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;
    const std::size_t common = overlap(ngrams(p, 1), ngrams(g, 1));
    if (common == 0) return 0.0;
    const double precision = static_cast<double>(common) / static_cast<double>(p.size());
    const double recall = static_cast<double>(common) / static_cast<double>(g.size());
    return harmonic(precision, recall);
}

double token_f1_max(std::string_view predicted, const std::vector<std::string>& golds) {
    if (golds.empty()) throw InvalidArgument("token_f1_max: at least one gold answer is required");
    double best = 0.0;
    for (const auto& g : golds) best = std::max(best, token_f1(predicted, g));
    return best;
}

PrecisionRecallF1 rouge_n(std::string_view candidate, std::string_view reference, std::size_t n) {
    if (n == 0) throw InvalidArgument("rouge_n: n must be >= 1");
    const auto c = ngrams(metric_tokens(candidate), n);
    const auto r = ngrams(metric_tokens(reference), n);
    if (c.empty() || r.empty()) return {};
    std::size_t c_total = 0, r_total = 0;
    for (const auto& [g, k] : c) c_total += k;
    for (const auto& [g, k] : r) r_total += k;
    const auto hits = static_cast<double>(overlap(c, r));
    PrecisionRecallF1 out{hits / static_cast<double>(c_total), hits / static_cast<double>(r_total), 0.0};
    out.f1 = harmonic(out.precision, out.recall);
    return out;
}

PrecisionRecallF1 rouge_l(std::string_view candidate, std::string_view reference) {
    const auto c = metric_tokens(candidate);
    const auto r = metric_tokens(reference);
    if (c.empty() && r.empty()) return {1.0, 1.0, 1.0};
    if (c.empty() || r.empty()) return {};
    std::vector<std::size_t> prev(r.size() + 1, 0), cur(r.size() + 1, 0);
    for (std::size_t i = 1; i <= c.size(); ++i) {
        for (std::size_t j = 1; j <= r.size(); ++j)
            cur[j] = c[i - 1] == r[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
        std::swap(prev, cur);
    }
    const auto lcs = static_cast<double>(prev[r.size()]);
    PrecisionRecallF1 out{lcs / static_cast<double>(c.size()), lcs / static_cast<double>(r.size()), 0.0};
    out.f1 = harmonic(out.precision, out.recall);
    return out;
}

double bleu(std::string_view candidate, const std::vector<std::string>& references, std::size_t max_n) {
    if (max_n == 0) throw InvalidArgument("bleu: max_n must be >= 1");
    if (references.empty()) throw InvalidArgument("bleu: at least one reference is required");
    const auto cand = metric_tokens(candidate);
    if (cand.empty()) return 0.0;
    std::vector<std::vector<std::string>> refs;
    for (const auto& r : references) refs.push_back(metric_tokens(r));

    double log_sum = 0.0;
    for (std::size_t n = 1; n <= max_n; ++n) {
        const auto c = ngrams(cand, n);
        std::size_t total = 0;
        for (const auto& [g, k] : c) total += k;
        // Clip each candidate n-gram by its largest count in any reference.
        NgramCounts max_ref;
        for (const auto& r : refs)
            for (const auto& [g, k] : ngrams(r, n)) max_ref[g] = std::max(max_ref[g], k);
        const std::size_t matched = overlap(c, max_ref);

        double precision;
        if (matched > 0) {
            precision = static_cast<double>(matched) / static_cast<double>(total);
        } else if (n == 1) {
            return 0.0;
        } else {
            precision = 1.0 / static_cast<double>(total + 1);
        }
        log_sum += std::log(precision);
    }

    const auto c_len = static_cast<double>(cand.size());
    double r_len = static_cast<double>(refs.front().size());
    for (const auto& r : refs) {
        const auto len = static_cast<double>(r.size());
        const double d = std::abs(len - c_len), best = std::abs(r_len - c_len);
        if (d < best || (d == best && len < r_len)) r_len = len;
    }
    const double bp = c_len > r_len ? 1.0 : std::exp(1.0 - r_len / c_len);
    return bp * std::exp(log_sum / static_cast<double>(max_n));
}

double MetricsReport::mean(const std::string& metric) const {
    const auto it = means.find(metric);
    if (it == means.end()) throw InvalidArgument("metric '" + metric + "' not in report");
    return it->second;
}

void MetricsReport::finalize() {
    std::map<std::string, std::pair<double, std::size_t>> acc;
    for (const auto& row : per_example) {
        for (const auto& [k, v] : row) {
            acc[k].first += v;
            ++acc[k].second;
        }
    }
    means.clear();
    for (const auto& [k, sn] : acc) means[k] = sn.first / static_cast<double>(sn.second);
}

MessageList build_qa_request(std::string_view context, std::string_view question) {
    std::string content = "Answer the question using only the context. Reply with the answer only.\n\n";
    content += kContextLabel;
    content += context;
    content += kQuestionLabel;
    content += question;
    content += kAnswerLabel;
    return {ChatMessage{"user", std::move(content)}};
}

std::string ExtractiveQaMockProvider::complete(const MessageList& messages) {
    if (messages.empty()) return {};
    const std::string& c = messages.back().content;
    const auto ctx = c.find(kContextLabel);
    const auto q = c.rfind(kQuestionLabel);
    const auto a = c.rfind(kAnswerLabel);
    if (ctx == std::string::npos || q == std::string::npos || a == std::string::npos || q < ctx || a < q) return {};
    const auto context = split_words(std::string_view(c).substr(ctx + kContextLabel.size(),
                                                                 q - ctx - kContextLabel.size()));
    std::set<std::string> question;
    for (const auto& w : split_words(std::string_view(c).substr(q + kQuestionLabel.size(),
                                                               a - q - kQuestionLabel.size())).words) {
        auto norm = normalize_word(w);
        if (!norm.empty() && !is_stopword(norm)) question.insert(std::move(norm));
    }

    std::vector<std::vector<std::string>> sentences(1);
    for (std::size_t i = 0; i < context.size(); ++i) {
        sentences.back().push_back(context.words[i]);
        if (is_sentence_end(context.words[i]) && i + 1 < context.size()) sentences.emplace_back();
    }
    std::size_t best = 0, best_hits = 0;
    for (std::size_t s = 0; s < sentences.size(); ++s) {
        std::size_t hits = 0;
        for (const auto& w : sentences[s]) hits += question.contains(normalize_word(w)) ? 1 : 0;
        if (hits > best_hits) {
            best = s;
            best_hits = hits;
        }
    }
    std::vector<std::string> answer;
    for (const auto& w : sentences[best]) {
        const auto norm = normalize_word(w);
        if (norm.empty() || is_stopword(norm) || question.contains(norm)) continue;
        answer.push_back(norm);
    }
    return join_words(answer);
}

MetricsReport evaluate_downstream(LlmProvider& target, std::vector<DownstreamItem>& items) {
    MetricsReport report;
    report.n_items = items.size();
    for (std::size_t i = 0; i < items.size(); ++i) {
        auto& item = items[i];
        try {
            item.record.predicted =
                target.complete(build_qa_request(item.compression.kept_text(), item.record.question));
        } catch (const TransportError& e) {
            ++report.n_failed;
            report.errors.push_back("item " + std::to_string(i) + ": " + e.what());
            continue;
        }
        const auto n_kept = static_cast<double>(item.compression.kept_indices.size());
        report.per_example.push_back({
            {"qa_f1", token_f1_max(item.record.predicted, item.record.gold_answers)},
            {"original_units", static_cast<double>(item.compression.n_original)},
            {"kept_units", n_kept},
            {"inverse_ratio", item.compression.achieved_inverse_ratio},
        });
    }
    report.finalize();
    return report;
}

MetricsReport evaluate_labeled(const Model& model, const std::vector<LabeledExample>& eval_set,
                               bool with_instruction) {
    if (eval_set.empty()) throw EmptyDataset("evaluate_labeled: empty evaluation set");
    MetricsReport report;
    report.n_items = eval_set.size();
    for (const auto& ex : eval_set) {
        const WordSeq original = split_words(join_words(ex.original_words));
        const std::string instruction = with_instruction ? join_words(ex.instruction_words) : std::string();
        auto probs = score_words(model, instruction, original);

        std::size_t correct = 0, gold_kept = 0;
        std::vector<std::string> gold_words;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            correct += (probs[i] > 0.5 ? 1 : 0) == ex.labels[i] ? 1 : 0;
            if (ex.labels[i] == 1) {
                ++gold_kept;
                gold_words.push_back(ex.original_words[i]);
            }
        }
        const double tau = std::max<double>(1.0, static_cast<double>(gold_kept)) / static_cast<double>(probs.size());
        const auto result = compress_scored(original, std::move(probs), tau);
        report.per_example.push_back({
            {"token_accuracy", static_cast<double>(correct) / static_cast<double>(ex.labels.size())},
            {"kept_f1", token_f1(result.kept_text(), join_words(gold_words))},
            {"original_units", static_cast<double>(result.n_original)},
            {"kept_units", static_cast<double>(result.kept_indices.size())},
            {"inverse_ratio", result.achieved_inverse_ratio},
        });
    }
    report.finalize();
    return report;
}

SweepReport data_efficiency_sweep(const Model& base, const std::vector<LabeledExample>& extra,
                                  const std::vector<double>& fractions,
                                  const std::vector<LabeledExample>& eval_set, const TrainConfig& config) {
    if (fractions.empty()) throw InvalidArgument("data_efficiency_sweep: no fractions");
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        if (!(fractions[i] >= 0.0 && fractions[i] <= 1.0))
            throw InvalidArgument("data_efficiency_sweep: fractions must lie in [0, 1]");
        if (i > 0 && !(fractions[i] > fractions[i - 1]))
            throw InvalidArgument("data_efficiency_sweep: fractions must be strictly increasing");
    }

    std::vector<std::size_t> order(extra.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(config.seed, 0x5EEB));
    rng.shuffle(order);

    const bool with_instruction = config.loss_variant != LossVariant::Agnostic;
    SweepReport sweep;
    for (double f : fractions) {
        const auto k = static_cast<std::size_t>(std::floor(f * static_cast<double>(extra.size()) + 0.5));
        if (f > 0.0 && k == 0) throw InsufficientData("data_efficiency_sweep: fraction selects no extra examples");
        SweepCell cell{f, k, {}};
        if (k == 0) {
            cell.report = evaluate_labeled(base, eval_set, with_instruction);
        } else {
            std::vector<LabeledExample> subset;
            subset.reserve(k);
            for (std::size_t i = 0; i < k; ++i) subset.push_back(extra[order[i]]);
            Model model = base;
            train(model, subset, config);
            cell.report = evaluate_labeled(model, eval_set, with_instruction);
        }
        sweep.cells.push_back(std::move(cell));
    }
    return sweep;
}

nlohmann::ordered_json report_to_json(const MetricsReport& report, std::string_view run_id,
                                      std::string_view config_digest) {
    nlohmann::ordered_json j;
    j["run_id"] = run_id;
    j["config_digest"] = config_digest;
    nlohmann::ordered_json metrics;
    for (const auto& [k, v] : report.means) metrics[k] = v;
    metrics["n_items"] = report.n_items;
    metrics["n_scored"] = report.n_scored();
    metrics["n_failed"] = report.n_failed;
    j["metrics"] = std::move(metrics);
    j["per_example"] = nlohmann::ordered_json::array();
    for (const auto& row : report.per_example) {
        nlohmann::ordered_json r;
        for (const auto& [k, v] : row) r[k] = v;
        j["per_example"].push_back(std::move(r));
    }
    if (!report.errors.empty()) j["errors"] = report.errors;
    return j;
}

std::string sweep_summary_tsv(const SweepReport& sweep) {
    std::set<std::string> metrics;
    for (const auto& c : sweep.cells)
        for (const auto& [k, v] : c.report.means) metrics.insert(k);
    std::ostringstream out;
    out.precision(6);
    out << "fraction\tn_extra";
    for (const auto& m : metrics) out << '\t' << m;
    out << '\n';
    for (const auto& c : sweep.cells) {
        out << c.fraction << '\t' << c.n_extra;
        for (const auto& m : metrics) {
            const auto it = c.report.means.find(m);
            out << '\t';
            if (it != c.report.means.end()) out << std::fixed << it->second << std::defaultfloat;
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace efpc
