#pragma once

// Question synthesis from documents and sampled reasoning paths, the quality-control stages and
// the difficulty filter.

#include "hopwise/clients.hpp"
#include "hopwise/core.hpp"
#include "hopwise/kgraph.hpp"
#include "hopwise/prompts.hpp"
#include "hopwise/reward.hpp"
#include "hopwise/segmenter.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hopwise {

enum class QCStage { AnswerAlignment, KnowledgeGrounding, AnswerLength, ContextualRobustness, Difficulty };

std::string_view to_string(QCStage s);
QCStage qc_stage_from_string(std::string_view s);

struct QCVerdict {
    QCStage stage = QCStage::AnswerAlignment;
    bool passed = false;
    std::string detail;
};

/// Model name per role. Empty names let the endpoint pick its default.
struct RoleModels {
    std::string generator;
    std::string responder;
    std::string verifier;
    std::string judge;
    std::string embedder;
    std::string policy;

    const std::string& get(std::string_view role) const;
    void set(std::string_view role, std::string model);
};

/// The chat clients used for each role. Unset pointers fall back to `generator`.
struct SynthesisClients {
    ChatClient* generator = nullptr;
    ChatClient* responder = nullptr;
    ChatClient* verifier = nullptr;
    ChatClient* judge = nullptr;
    ChatClient* policy = nullptr;

    /// One client for every role.
    static SynthesisClients all(ChatClient& client);
    ChatClient& role(std::string_view name) const;
};

struct SynthesisConfig {
    std::size_t num_items = 10;
    std::uint64_t seed = 0;

    std::map<Paradigm, double> paradigm_weights{
        {Paradigm::MultiHop, 1.0}, {Paradigm::Temporal, 1.0}, {Paradigm::Causal, 1.0}, {Paradigm::Hypothetical, 1.0}};
    std::size_t min_hops = 2;
    std::size_t max_hops = 4;
    PathStrategy strategy = PathStrategy::RandomWalk;
    /// Defaults to default_min_docs(hops).
    std::optional<std::size_t> min_docs;
    std::size_t max_path_attempts = 10'000;

    double obfuscation_density = 0.3;
    std::map<std::string, ObfuscationCategory> entity_tags;

    std::size_t answer_word_cap = 20;
    std::size_t distractors = 3;
    std::size_t robustness_attempts = 4;

    bool difficulty_filter = false;
    std::size_t rollouts = 8;
    double band_lo = 0.25;
    double band_hi = 0.75;
    DecodeParams rollout_decode = kRolloutDecode;

    std::size_t min_context_tokens = 20'000;
    std::size_t max_context_tokens = 60'000;

    RoleModels models;
    MatchPolicy match_policy = MatchPolicy::Normalized;
    std::size_t item_concurrency = 4;

    void validate() const;
};

/// Parses the `[[Question]]: ... [[Answer]]: ... [[Explanation]]: ...` blocks. The explanation
/// is optional. Throws Error{GenerationUnparseable}.
QAItem parse_generation(std::string_view response);

/// Fills each target's rewrite using the generator.
void apply_obfuscations(ObfuscationPlan& plan, ChatClient& generator, const PromptSet& prompts,
                        const std::vector<Document>& docs, const std::string& model = {});

/// Throws Error{InvalidArgument} when the path cites documents not in `docs`,
/// Error{GenerationUnparseable}, ClientError.
QAItem generate_question(ChatClient& generator, const PromptSet& prompts, const std::vector<Document>& docs,
                         const ReasoningPath& path, Paradigm paradigm, const ObfuscationPlan& plan,
                         const std::string& model = {});

/// Asks `client` the question with the training prompt and returns the extracted answer
/// (empty when none could be found).
std::string answer_question(ChatClient& client, const PromptSet& prompts, std::string_view question,
                            const std::vector<Document>& docs, const std::string& model,
                            const DecodeParams& decode = kReferenceDecode);

QCVerdict qc_answer_alignment(const SynthesisClients& clients, const PromptSet& prompts, const QAItem& item,
                              const std::vector<Document>& docs, const RoleModels& models = {});

QCVerdict qc_knowledge_grounding(const SynthesisClients& clients, const PromptSet& prompts, const QAItem& item,
                                 const RoleModels& models = {}, MatchPolicy policy = MatchPolicy::Normalized);

QCVerdict qc_answer_length(const QAItem& item, std::size_t cap = 20);

/// Up to k attempts over docs plus distractors in shuffled order; stops at the first correct
/// answer. Throws Error{InvalidArgument} if k is 0 or a distractor is also a context document.
QCVerdict qc_contextual_robustness(const SynthesisClients& clients, const PromptSet& prompts, const QAItem& item,
                                   const std::vector<Document>& docs, const std::vector<Document>& distractors,
                                   std::size_t k, std::uint64_t seed, const RoleModels& models = {},
                                   MatchPolicy policy = MatchPolicy::Normalized);

struct RolloutSample {
    std::string text;
    std::string answer;
    int reward = 0;
};

struct DifficultyResult {
    QCVerdict verdict;
    std::size_t successes = 0;
    std::vector<RolloutSample> rollouts;
};

/// n sampled policy rollouts with the full context; passes when the success rate lies in
/// [band_lo, band_hi]. Throws Error{InvalidArgument} for n == 0 or a bad band.
DifficultyResult difficulty_filter(const SynthesisClients& clients, const PromptSet& prompts, const QAItem& item,
                                   const std::vector<Document>& docs, std::size_t n, double band_lo, double band_hi,
                                   const DecodeParams& decode = kRolloutDecode, const RoleModels& models = {},
                                   MatchPolicy policy = MatchPolicy::Normalized);

struct SynthesizedItem {
    QAItem item;
    std::vector<QCVerdict> qc;
};

struct PipelineStats {
    std::size_t requested = 0;
    std::size_t emitted = 0;
    std::size_t sampling_failures = 0;
    std::size_t context_failures = 0;
    std::size_t generation_failures = 0;
    std::size_t client_failures = 0;
    std::size_t other_failures = 0;
    std::map<QCStage, std::size_t> stage_passed;
    std::map<QCStage, std::size_t> stage_failed;

    std::size_t total_failures() const;
    /// requested == emitted + every failure category.
    bool conserved() const { return requested == emitted + total_failures(); }
};

struct PipelineResult {
    std::vector<SynthesizedItem> items;
    PipelineStats stats;
};

/// Context documents for a path: the cited documents, padded with other corpus documents
/// (in seeded random order) up to the minimum token count without exceeding the maximum.
/// Returns nullopt when the window cannot be met. Throws Error{DataError} for unknown doc ids.
std::optional<std::vector<Document>> assemble_context(const std::vector<Document>& corpus, const ReasoningPath& path,
                                                      std::size_t min_tokens, std::size_t max_tokens,
                                                      std::uint64_t seed);

/// Token count used for windowing: the recorded count, else the character estimate.
std::size_t document_tokens(const Document& doc);

/// Items are processed independently (up to item_concurrency at once) and results keep the
/// request order. Per-item failures are counted, never thrown.
PipelineResult run_pipeline(const SynthesisConfig& cfg, const std::vector<Document>& corpus,
                            const KnowledgeGraph& graph, const SynthesisClients& clients,
                            const PromptSet& prompts);

} // namespace hopwise
