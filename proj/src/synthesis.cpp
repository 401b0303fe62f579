#include "hopwise/synthesis.hpp"

#include "hopwise/error.hpp"
#include "hopwise/rng.hpp"
#include "hopwise/text.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <set>
#include <thread>

namespace hopwise {

std::string_view to_string(QCStage s) {
    switch (s) {
    case QCStage::AnswerAlignment: return "AnswerAlignment";
    case QCStage::KnowledgeGrounding: return "KnowledgeGrounding";
    case QCStage::AnswerLength: return "AnswerLength";
    case QCStage::ContextualRobustness: return "ContextualRobustness";
    case QCStage::Difficulty: return "Difficulty";
    }
    return "AnswerAlignment";
}

QCStage qc_stage_from_string(std::string_view s) {
    for (QCStage st : {QCStage::AnswerAlignment, QCStage::KnowledgeGrounding, QCStage::AnswerLength,
                       QCStage::ContextualRobustness, QCStage::Difficulty}) {
        if (text::casefold(to_string(st)) == text::casefold(s)) return st;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown QC stage: " + std::string(s));
}

const std::string& RoleModels::get(std::string_view role) const {
    if (role == "generator") return generator;
    if (role == "responder") return responder;
    if (role == "verifier") return verifier;
    if (role == "judge") return judge;
    if (role == "embedder") return embedder;
    if (role == "policy") return policy;
    throw Error(ErrorCode::InvalidArgument, "unknown role: " + std::string(role));
}

void RoleModels::set(std::string_view role, std::string model) {
    if (role == "generator") generator = std::move(model);
    else if (role == "responder") responder = std::move(model);
    else if (role == "verifier") verifier = std::move(model);
    else if (role == "judge") judge = std::move(model);
    else if (role == "embedder") embedder = std::move(model);
    else if (role == "policy") policy = std::move(model);
    else throw Error(ErrorCode::InvalidArgument, "unknown role: " + std::string(role));
}

SynthesisClients SynthesisClients::all(ChatClient& client) {
    return {&client, &client, &client, &client, &client};
}

ChatClient& SynthesisClients::role(std::string_view name) const {
    ChatClient* c = nullptr;
    if (name == "generator") c = generator;
    else if (name == "responder") c = responder;
    else if (name == "verifier") c = verifier;
    else if (name == "judge") c = judge;
    else if (name == "policy") c = policy;
    else throw Error(ErrorCode::InvalidArgument, "unknown role: " + std::string(name));
    if (!c) c = generator;
    if (!c) throw Error(ErrorCode::InvalidArgument, "no client configured for role " + std::string(name));
    return *c;
}

void SynthesisConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
    if (min_hops < 2 || max_hops > 30 || min_hops > max_hops) fail("hop range must lie within [2, 30]");
    if (!(band_lo >= 0.0 && band_lo <= band_hi && band_hi <= 1.0)) fail("difficulty band must satisfy 0 <= lo <= hi <= 1");
    if (rollouts == 0) fail("rollout count must be positive");
    if (robustness_attempts == 0) fail("robustness attempts must be positive");
    if (!(obfuscation_density >= 0.0 && obfuscation_density <= 1.0)) fail("obfuscation density must lie in [0, 1]");
    if (min_context_tokens > max_context_tokens) fail("context window is empty");
    if (item_concurrency == 0) fail("item concurrency must be positive");
    if (min_docs && *min_docs == 0) fail("min_docs must be positive");
    double total = 0.0;
    for (const auto& [p, w] : paradigm_weights) {
        if (!(w >= 0.0)) fail("paradigm weights must be non-negative");
        total += w;
    }
    if (!(total > 0.0)) fail("at least one paradigm needs positive weight");
}

QAItem parse_generation(std::string_view response) {
    struct Marker {
        std::string_view name;
        std::size_t pos;
    };
    std::vector<Marker> found;
    for (std::string_view name : {"[[Question]]", "[[Answer]]", "[[Explanation]]"}) {
        const std::size_t pos = text::ifind(response, name);
        if (pos != std::string_view::npos) found.push_back({name, pos});
    }
    std::sort(found.begin(), found.end(), [](const Marker& a, const Marker& b) { return a.pos < b.pos; });

    std::map<std::string_view, std::string> blocks;
    for (std::size_t i = 0; i < found.size(); ++i) {
        std::size_t begin = found[i].pos + found[i].name.size();
        if (begin < response.size() && response[begin] == ':') ++begin;
        const std::size_t end = i + 1 < found.size() ? found[i + 1].pos : response.size();
        blocks[found[i].name] = std::string(text::trim(response.substr(begin, end - begin)));
    }

    QAItem item;
    auto q = blocks.find("[[Question]]");
    auto a = blocks.find("[[Answer]]");
    if (q == blocks.end() || q->second.empty()) {
        throw Error(ErrorCode::GenerationUnparseable, "generation has no [[Question]] block");
    }
    if (a == blocks.end() || a->second.empty()) {
        throw Error(ErrorCode::GenerationUnparseable, "generation has no [[Answer]] block");
    }
    item.question = q->second;
    item.answer = a->second;
    if (auto e = blocks.find("[[Explanation]]"); e != blocks.end()) item.explanation = e->second;
    return item;
}

namespace {

ChatRequest single_turn(const std::string& prompt, const std::string& model, const DecodeParams& decode) {
    ChatRequest req;
    req.model = model;
    req.temperature = decode.temperature;
    req.top_p = decode.top_p;
    req.max_tokens = decode.max_tokens;
    req.messages = {{"user", prompt}};
    return req;
}

struct Response {
    std::string text;
    std::string answer;
};

Response respond(ChatClient& client, const PromptSet& prompts, std::string_view question,
                 const std::vector<Document>& docs, const std::string& model, const DecodeParams& decode) {
    ChatRequest req;
    req.model = model;
    req.temperature = decode.temperature;
    req.top_p = decode.top_p;
    req.max_tokens = decode.max_tokens;
    req.messages = prompts.training_messages(docs, question);
    Response r;
    r.text = client.chat(req);
    const Trajectory t = segment_trajectory(r.text, ModelKind::Instruct);
    r.answer = t.answer.value_or("");
    return r;
}

std::string entity_context(const std::vector<Document>& docs, const std::string& entity) {
    const std::string needle = text::normalize_name(entity);
    for (const auto& d : docs) {
        const std::string body = text::normalize_name(d.body);
        if (text::contains_word_bounded(body, needle)) return d.body.substr(0, 1500);
    }
    return {};
}

} // namespace

void apply_obfuscations(ObfuscationPlan& plan, ChatClient& generator, const PromptSet& prompts,
                        const std::vector<Document>& docs, const std::string& model) {
    for (auto& target : plan.targets) {
        const std::string prompt =
            prompts.obfuscation_rewrite(target.node, target.category, entity_context(docs, target.node));
        target.rewrite = std::string(text::trim(generator.chat(single_turn(prompt, model, kReferenceDecode))));
    }
}

QAItem generate_question(ChatClient& generator, const PromptSet& prompts, const std::vector<Document>& docs,
                         const ReasoningPath& path, Paradigm paradigm, const ObfuscationPlan& plan,
                         const std::string& model) {
    std::set<std::string> have;
    for (const auto& d : docs) have.insert(d.doc_id);
    for (const auto& id : path.doc_ids) {
        if (!have.count(id)) throw Error(ErrorCode::InvalidArgument, "path cites a document outside the context: " + id);
    }
    std::vector<std::pair<std::string, std::string>> rewrites;
    for (const auto& t : plan.targets) {
        if (!t.rewrite.empty()) rewrites.emplace_back(t.node, t.rewrite);
    }
    const std::string prompt = prompts.question_generation(docs, path, paradigm, rewrites);
    QAItem item = parse_generation(generator.chat(single_turn(prompt, model, kReferenceDecode)));
    item.paradigm = paradigm;
    item.gt_chain = path;
    item.hops = path.hops();
    for (const auto& d : docs) {
        item.doc_ids.push_back(d.doc_id);
        item.token_count += document_tokens(d);
    }
    return item;
}

std::string answer_question(ChatClient& client, const PromptSet& prompts, std::string_view question,
                            const std::vector<Document>& docs, const std::string& model, const DecodeParams& decode) {
    return respond(client, prompts, question, docs, model, decode).answer;
}

QCVerdict qc_answer_alignment(const SynthesisClients& clients, const PromptSet& prompts, const QAItem& item,
                              const std::vector<Document>& docs, const RoleModels& models) {
    QCVerdict v{QCStage::AnswerAlignment, false, {}};
    const Response r = respond(clients.role("responder"), prompts, item.question, docs, models.responder, kReferenceDecode);
    const std::string prompt = prompts.answer_judge(item.question, r.answer, item.answer);
    const std::string verdict = clients.role("verifier").chat(single_turn(prompt, models.verifier, kReferenceDecode));
    try {
        v.passed = parse_verdict(verdict) == Verdict::Yes;
        v.detail = v.passed ? "verifier accepted responder answer" : "verifier rejected responder answer: " + r.answer;
    } catch (const Error&) {
        v.detail = "verifier verdict unparseable";
    }
    return v;
}

QCVerdict qc_knowledge_grounding(const SynthesisClients& clients, const PromptSet& prompts, const QAItem& item,
                                 const RoleModels& models, MatchPolicy policy) {
    QCVerdict v{QCStage::KnowledgeGrounding, true, {}};
    const Response r = respond(clients.role("responder"), prompts, item.question, {}, models.responder, kReferenceDecode);
    if (text::trim(r.answer).empty()) {
        v.detail = "no answer without documents";
        return v;
    }
    JudgeOptions jo;
    jo.model = models.judge;
    const RewardRecord rec = hybrid_reward(r.answer, item.answer, item.question, clients.role("judge"), prompts, jo, policy);
    v.passed = rec.hybrid == 0;
    v.detail = v.passed ? "answer not recoverable without documents" : "answerable without documents: " + r.answer;
    return v;
}

QCVerdict qc_answer_length(const QAItem& item, std::size_t cap) {
    const std::size_t words = text::word_count(item.answer);
    QCVerdict v{QCStage::AnswerLength, words <= cap, {}};
    v.detail = std::to_string(words) + " words (cap " + std::to_string(cap) + ")";
    return v;
}

QCVerdict qc_contextual_robustness(const SynthesisClients& clients, const PromptSet& prompts, const QAItem& item,
                                   const std::vector<Document>& docs, const std::vector<Document>& distractors,
                                   std::size_t k, std::uint64_t seed, const RoleModels& models, MatchPolicy policy) {
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "robustness check needs at least one attempt");
    std::set<std::string> ids;
    for (const auto& d : docs) ids.insert(d.doc_id);
    for (const auto& d : distractors) {
        if (ids.count(d.doc_id)) throw Error(ErrorCode::InvalidArgument, "distractor overlaps context: " + d.doc_id);
    }
    std::vector<Document> mixed = docs;
    mixed.insert(mixed.end(), distractors.begin(), distractors.end());

    JudgeOptions jo;
    jo.model = models.judge;
    for (std::size_t attempt = 0; attempt < k; ++attempt) {
        Rng rng(derive_seed(seed, attempt));
        std::vector<Document> shuffled = mixed;
        rng.shuffle(shuffled);
        const Response r = respond(clients.role("responder"), prompts, item.question, shuffled, models.responder,
                                   kRolloutDecode);
        const RewardRecord rec = hybrid_reward(r.answer, item.answer, item.question, clients.role("judge"), prompts, jo, policy);
        if (rec.hybrid == 1) {
            return {QCStage::ContextualRobustness, true,
                    "correct on attempt " + std::to_string(attempt + 1) + " of " + std::to_string(k)};
        }
    }
    return {QCStage::ContextualRobustness, false, "no correct answer in " + std::to_string(k) + " attempts"};
}

DifficultyResult difficulty_filter(const SynthesisClients& clients, const PromptSet& prompts, const QAItem& item,
                                   const std::vector<Document>& docs, std::size_t n, double band_lo, double band_hi,
                                   const DecodeParams& decode, const RoleModels& models, MatchPolicy policy) {
    if (n == 0) throw Error(ErrorCode::InvalidArgument, "difficulty filter needs at least one rollout");
    if (!(band_lo >= 0.0 && band_lo <= band_hi && band_hi <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "difficulty band must satisfy 0 <= lo <= hi <= 1");
    }
    DifficultyResult out;
    JudgeOptions jo;
    jo.model = models.judge;
    for (std::size_t i = 0; i < n; ++i) {
        const Response r = respond(clients.role("policy"), prompts, item.question, docs, models.policy, decode);
        const RewardRecord rec = hybrid_reward(r.answer, item.answer, item.question, clients.role("judge"), prompts, jo, policy);
        out.successes += static_cast<std::size_t>(rec.hybrid);
        out.rollouts.push_back({r.text, r.answer, rec.hybrid});
    }
    const double rate = static_cast<double>(out.successes) / static_cast<double>(n);
    out.verdict.stage = QCStage::Difficulty;
    out.verdict.passed = rate >= band_lo && rate <= band_hi;
    char buf[96];
    std::snprintf(buf, sizeof buf, "success rate %zu/%zu", out.successes, n);
    out.verdict.detail = buf;
    return out;
}

std::size_t PipelineStats::total_failures() const {
    std::size_t total = sampling_failures + context_failures + generation_failures + client_failures + other_failures;
    for (const auto& [stage, count] : stage_failed) total += count;
    return total;
}

std::size_t document_tokens(const Document& doc) {
    if (doc.token_count > 0) return doc.token_count;
    return estimate_tokens(doc.body);
}

std::optional<std::vector<Document>> assemble_context(const std::vector<Document>& corpus, const ReasoningPath& path,
                                                      std::size_t min_tokens, std::size_t max_tokens,
                                                      std::uint64_t seed) {
    std::map<std::string, const Document*> by_id;
    for (const auto& d : corpus) by_id.emplace(d.doc_id, &d);

    std::vector<Document> context;
    std::set<std::string> used;
    std::size_t tokens = 0;
    for (const auto& id : path.doc_ids) {
        if (used.count(id)) continue;
        auto it = by_id.find(id);
        if (it == by_id.end()) throw Error(ErrorCode::DataError, "path cites unknown document: " + id);
        used.insert(id);
        context.push_back(*it->second);
        tokens += document_tokens(*it->second);
    }
    if (tokens > max_tokens) return std::nullopt;

    Rng rng(seed);
    if (tokens < min_tokens) {
        std::vector<const Document*> others;
        for (const auto& d : corpus) {
            if (!used.count(d.doc_id)) others.push_back(&d);
        }
        rng.shuffle(others);
        for (const Document* d : others) {
            if (tokens >= min_tokens) break;
            const std::size_t t = document_tokens(*d);
            if (tokens + t > max_tokens) continue;
            used.insert(d->doc_id);
            context.push_back(*d);
            tokens += t;
        }
    }
    if (tokens < min_tokens) return std::nullopt;
    rng.shuffle(context);
    return context;
}

namespace {

enum class Failure { None, Sampling, Context, Generation, Client, Other, Stage };

struct Outcome {
    Failure failure = Failure::None;
    std::optional<SynthesizedItem> item;
    std::vector<QCVerdict> verdicts;
    std::string error;
};

Paradigm pick_paradigm(const std::map<Paradigm, double>& weights, Rng& rng) {
    double total = 0.0;
    for (const auto& [p, w] : weights) total += w;
    double x = rng.unit() * total;
    Paradigm last = Paradigm::MultiHop;
    for (const auto& [p, w] : weights) {
        if (w <= 0.0) continue;
        last = p;
        if (x < w) return p;
        x -= w;
    }
    return last;
}

std::string item_id(std::uint64_t seed, std::size_t index) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "q%llu-%05zu", static_cast<unsigned long long>(seed), index);
    return buf;
}

Outcome run_item(std::size_t index, const SynthesisConfig& cfg, const std::vector<Document>& corpus,
                 const KnowledgeGraph& graph, const SynthesisClients& clients, const PromptSet& prompts) {
    Outcome out;
    Rng rng(derive_seed(cfg.seed, index));
    const std::size_t hops = cfg.min_hops + rng.index(cfg.max_hops - cfg.min_hops + 1);
    const Paradigm paradigm = pick_paradigm(cfg.paradigm_weights, rng);
    const std::uint64_t path_seed = rng.next();
    const std::uint64_t plan_seed = rng.next();
    const std::uint64_t context_seed = rng.next();
    const std::uint64_t distractor_seed = rng.next();
    const std::uint64_t robustness_seed = rng.next();

    ReasoningPath path;
    try {
        PathOptions po;
        po.strategy = cfg.strategy;
        po.hops = hops;
        po.min_docs = cfg.min_docs;
        po.seed = path_seed;
        po.max_attempts = cfg.max_path_attempts;
        path = sample_path(graph, po);
    } catch (const Error& e) {
        out.failure = e.code() == ErrorCode::NoPathFound ? Failure::Sampling : Failure::Other;
        out.error = e.what();
        return out;
    }

    std::optional<std::vector<Document>> docs;
    try {
        docs = assemble_context(corpus, path, cfg.min_context_tokens, cfg.max_context_tokens, context_seed);
    } catch (const Error& e) {
        out.failure = Failure::Context;
        out.error = e.what();
        return out;
    }
    if (!docs) {
        out.failure = Failure::Context;
        out.error = "context token window cannot be met";
        return out;
    }

    try {
        ObfuscationPlan plan = plan_obfuscations(path, cfg.entity_tags, cfg.obfuscation_density, plan_seed);
        apply_obfuscations(plan, clients.role("generator"), prompts, *docs, cfg.models.generator);
        QAItem item = generate_question(clients.role("generator"), prompts, *docs, path, paradigm, plan,
                                        cfg.models.generator);
        item.id = item_id(cfg.seed, index);

        std::set<std::string> ctx_ids(item.doc_ids.begin(), item.doc_ids.end());
        std::vector<Document> pool;
        for (const auto& d : corpus) {
            if (!ctx_ids.count(d.doc_id)) pool.push_back(d);
        }
        Rng drng(distractor_seed);
        drng.shuffle(pool);
        if (pool.size() > cfg.distractors) pool.resize(cfg.distractors);

        auto record = [&](QCVerdict v) {
            out.verdicts.push_back(v);
            return v.passed;
        };
        bool ok = record(qc_answer_alignment(clients, prompts, item, *docs, cfg.models)) &&
                  record(qc_knowledge_grounding(clients, prompts, item, cfg.models, cfg.match_policy)) &&
                  record(qc_answer_length(item, cfg.answer_word_cap)) &&
                  record(qc_contextual_robustness(clients, prompts, item, *docs, pool, cfg.robustness_attempts,
                                                  robustness_seed, cfg.models, cfg.match_policy));
        if (ok && cfg.difficulty_filter) {
            ok = record(difficulty_filter(clients, prompts, item, *docs, cfg.rollouts, cfg.band_lo, cfg.band_hi,
                                          cfg.rollout_decode, cfg.models, cfg.match_policy)
                            .verdict);
        }
        if (!ok) {
            out.failure = Failure::Stage;
            return out;
        }
        out.item = SynthesizedItem{std::move(item), out.verdicts};
    } catch (const ClientError& e) {
        out.failure = Failure::Client;
        out.error = e.what();
    } catch (const Error& e) {
        out.failure = e.code() == ErrorCode::GenerationUnparseable ? Failure::Generation : Failure::Other;
        out.error = e.what();
    } catch (const std::exception& e) {
        out.failure = Failure::Other;
        out.error = e.what();
    }
    return out;
}

} // namespace

PipelineResult run_pipeline(const SynthesisConfig& cfg, const std::vector<Document>& corpus,
                            const KnowledgeGraph& graph, const SynthesisClients& clients,
                            const PromptSet& prompts) {
    cfg.validate();
    std::vector<Outcome> outcomes(cfg.num_items);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cfg.num_items; i = next++) {
            outcomes[i] = run_item(i, cfg, corpus, graph, clients, prompts);
        }
    };
    const std::size_t width = std::min(cfg.item_concurrency, cfg.num_items);
    if (width <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < width; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    PipelineResult result;
    auto& st = result.stats;
    st.requested = cfg.num_items;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        auto& o = outcomes[i];
        for (const auto& v : o.verdicts) {
            if (v.passed) ++st.stage_passed[v.stage];
            else ++st.stage_failed[v.stage];
        }
        switch (o.failure) {
        case Failure::None:
            ++st.emitted;
            result.items.push_back(std::move(*o.item));
            break;
        case Failure::Sampling: ++st.sampling_failures; break;
        case Failure::Context: ++st.context_failures; break;
        case Failure::Generation: ++st.generation_failures; break;
        case Failure::Client: ++st.client_failures; break;
        case Failure::Other: ++st.other_failures; break;
        case Failure::Stage: break;
        }
        if (!o.error.empty()) spdlog::debug("item {} dropped: {}", i, o.error);
    }
    return result;
}

} // namespace hopwise
