#include "cli/commands.hpp"

#include "cli/io.hpp"
#include "hopwise/clients.hpp"
#include "hopwise/coverage.hpp"
#include "hopwise/error.hpp"
#include "hopwise/kgraph.hpp"
#include "hopwise/mock_clients.hpp"
#include "hopwise/offline_client.hpp"
#include "hopwise/prompts.hpp"
#include "hopwise/reward.hpp"
#include "hopwise/rng.hpp"
#include "hopwise/schema.hpp"
#include "hopwise/segmenter.hpp"
#include "hopwise/shaping.hpp"
#include "hopwise/synthesis.hpp"
#include "hopwise/text.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <memory>
#include <sstream>

namespace hopwise::cli {

namespace fs = std::filesystem;

namespace {

constexpr const char* kRoles[] = {"generator", "responder", "verifier", "judge", "embedder", "policy"};

struct GlobalOptions {
    bool mock = false;
    std::uint64_t seed = 0;
    std::string prompts_dir;
    bool verbose = false;
    long timeout_ms = 60'000;
    int max_retries = 3;
    int max_concurrency = 8;
    std::map<std::string, std::string> model_flags;
};

/// Clients and prompts shared by one invocation.
class Runtime {
public:
    explicit Runtime(const GlobalOptions& g) : g_(g) {
        prompts_ = g.prompts_dir.empty() ? PromptSet() : PromptSet::from_directory(g.prompts_dir);
        for (const char* role : kRoles) {
            std::string env_name = "HOPWISE_MODEL_" + text::casefold(role);
            for (char& c : env_name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            if (const char* v = std::getenv(env_name.c_str())) models_.set(role, v);
            auto it = g.model_flags.find(role);
            if (it != g.model_flags.end() && !it->second.empty()) models_.set(role, it->second);
        }
        if (g.mock) set_network_forbidden(true);
    }

    const PromptSet& prompts() const { return prompts_; }
    const RoleModels& models() const { return models_; }

    ChatClient& chat() {
        if (!chat_) {
            if (g_.mock) chat_ = std::make_unique<OfflineChatClient>(g_.seed);
            else chat_ = std::make_unique<HttpChatClient>(client_config());
        }
        return *chat_;
    }

    EmbedClient& embed() {
        if (!embed_) {
            if (g_.mock) {
                embed_ = std::make_unique<MockEmbedClient>();
            } else {
                ClientConfig cfg = client_config();
                if (!models_.embedder.empty()) cfg.embedding_model = models_.embedder;
                embed_ = std::make_unique<HttpEmbedClient>(cfg);
            }
        }
        return *embed_;
    }

private:
    ClientConfig client_config() const {
        ClientConfig cfg;
        if (const char* url = std::getenv("HOPWISE_BASE_URL")) cfg.base_url = url;
        if (const char* key = std::getenv("HOPWISE_API_KEY")) cfg.api_key = key;
        cfg.timeout = std::chrono::milliseconds(g_.timeout_ms);
        cfg.max_retries = g_.max_retries;
        cfg.max_concurrency = g_.max_concurrency;
        cfg.validate();
        return cfg;
    }

    const GlobalOptions& g_;
    PromptSet prompts_;
    RoleModels models_;
    std::unique_ptr<ChatClient> chat_;
    std::unique_ptr<EmbedClient> embed_;
};

void emit_error(const std::string& code, const std::string& message, std::optional<std::size_t> line = {},
                const std::string& file = {}) {
    json rec{{"error", code}, {"message", message}};
    if (line) rec["line"] = *line;
    if (!file.empty()) rec["file"] = file;
    std::cerr << rec.dump() << '\n';
}

int exit_code_for(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return kExitUsage;
    case ErrorCode::ClientError: return kExitClient;
    default: return kExitData;
    }
}

// ---------------------------------------------------------------------------------------------

struct BuildKgOptions {
    std::vector<std::string> triples;
    std::string aliases;
    std::string out = "kg.json";
};

int cmd_build_kg(const BuildKgOptions& o) {
    std::vector<Triple> triples;
    for (const auto& file : o.triples) {
        for (const auto& line : read_jsonl(file)) {
            try {
                triples.push_back(triple_from_json(line.value));
            } catch (const Error& e) {
                throw LineError(file, line.line, e.what());
            }
        }
    }
    AliasTable aliases;
    if (!o.aliases.empty()) {
        const json j = read_json(o.aliases);
        if (!j.is_object()) throw Error(ErrorCode::DataError, "alias file must hold a JSON object");
        for (const auto& [k, v] : j.items()) {
            if (!v.is_string()) throw Error(ErrorCode::DataError, "alias targets must be strings");
            aliases[k] = v.get<std::string>();
        }
    }
    const KnowledgeGraph g = build_graph(triples, aliases);
    write_atomic(o.out, kg_to_json(g).dump(2) + "\n");
    spdlog::info("knowledge graph: {} entities, {} edges, {} documents", g.entities().size(), g.edges().size(),
                 g.num_documents());
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------

struct SamplePathsOptions {
    std::string kg = "kg.json";
    std::string strategy = "random_walk";
    std::size_t hops = 3;
    std::size_t min_docs = 0;
    std::size_t count = 10;
    std::size_t max_attempts = 10'000;
    std::string out = "paths.jsonl";
};

int cmd_sample_paths(const GlobalOptions& g, const SamplePathsOptions& o) {
    const KnowledgeGraph kg = kg_from_json(read_json(o.kg));
    std::vector<json> records;
    PathOptions po;
    po.strategy = path_strategy_from_string(o.strategy);
    po.hops = o.hops;
    if (o.min_docs > 0) po.min_docs = o.min_docs;
    po.max_attempts = o.max_attempts;
    for (std::size_t i = 0; i < o.count; ++i) {
        po.seed = derive_seed(g.seed, i);
        records.push_back(path_to_json({sample_path(kg, po), po.seed, po.strategy}));
    }
    write_atomic(o.out, to_jsonl(records));
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------

struct SynthOptions {
    std::string corpus = "corpus";
    std::string kg = "kg.json";
    std::string out = "qa.jsonl";
    std::string stats;
    std::string tags;
    std::size_t count = 10;
    std::size_t min_hops = 2;
    std::size_t max_hops = 4;
    std::string strategy = "random_walk";
    std::size_t min_docs = 0;
    double obfuscation_density = 0.3;
    std::size_t distractors = 3;
    std::size_t robustness_k = 4;
    std::size_t word_cap = 20;
    std::size_t min_context_tokens = 20'000;
    std::size_t max_context_tokens = 60'000;
    bool difficulty = false;
    std::size_t rollouts = 8;
    double band_lo = 0.25;
    double band_hi = 0.75;
    std::size_t concurrency = 4;
};

int cmd_synth(const GlobalOptions& g, Runtime& rt, const SynthOptions& o) {
    const std::vector<Document> corpus = load_corpus(o.corpus);
    const KnowledgeGraph kg = kg_from_json(read_json(o.kg));

    SynthesisConfig cfg;
    cfg.num_items = o.count;
    cfg.seed = g.seed;
    cfg.min_hops = o.min_hops;
    cfg.max_hops = o.max_hops;
    cfg.strategy = path_strategy_from_string(o.strategy);
    if (o.min_docs > 0) cfg.min_docs = o.min_docs;
    cfg.obfuscation_density = o.obfuscation_density;
    cfg.distractors = o.distractors;
    cfg.robustness_attempts = o.robustness_k;
    cfg.answer_word_cap = o.word_cap;
    cfg.min_context_tokens = o.min_context_tokens;
    cfg.max_context_tokens = o.max_context_tokens;
    cfg.difficulty_filter = o.difficulty;
    cfg.rollouts = o.rollouts;
    cfg.band_lo = o.band_lo;
    cfg.band_hi = o.band_hi;
    cfg.item_concurrency = o.concurrency;
    cfg.models = rt.models();
    if (!o.tags.empty()) {
        const json j = read_json(o.tags);
        if (!j.is_object()) throw Error(ErrorCode::DataError, "tag file must hold a JSON object");
        for (const auto& [entity, cat] : j.items()) {
            if (!cat.is_string()) throw Error(ErrorCode::DataError, "tag categories must be strings");
            cfg.entity_tags[entity] = obfuscation_category_from_string(cat.get<std::string>());
        }
    }
    cfg.validate();

    const PipelineResult result = run_pipeline(cfg, corpus, kg, SynthesisClients::all(rt.chat()), rt.prompts());
    std::vector<json> records;
    for (const auto& item : result.items) records.push_back(qa_to_json(item));
    write_atomic(o.out, to_jsonl(records));

    fs::path stats_path = o.stats;
    if (stats_path.empty()) stats_path = fs::path(o.out).parent_path() / "stats.json";
    write_atomic(stats_path, stats_to_json(result.stats).dump(2) + "\n");
    spdlog::info("synthesised {} of {} requested items", result.stats.emitted, result.stats.requested);
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------

struct FilterOptions {
    std::string qa = "qa.jsonl";
    std::string corpus = "corpus";
    std::string out = "qa_filtered.jsonl";
    std::string rollouts_out;
    std::size_t n = 8;
    double band_lo = 0.25;
    double band_hi = 0.75;
    double temperature = kRolloutDecode.temperature;
    double top_p = kRolloutDecode.top_p;
    std::string model_kind = "instruct";
};

std::vector<Document> context_for(const QAItem& item, const std::map<std::string, const Document*>& by_id) {
    std::vector<Document> docs;
    for (const auto& id : item.doc_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw Error(ErrorCode::DataError, "item " + item.id + " cites unknown document " + id);
        docs.push_back(*it->second);
    }
    return docs;
}

int cmd_filter_difficulty(Runtime& rt, const FilterOptions& o) {
    const std::vector<Document> corpus = load_corpus(o.corpus);
    std::map<std::string, const Document*> by_id;
    for (const auto& d : corpus) by_id.emplace(d.doc_id, &d);
    const ModelKind kind = model_kind_from_string(o.model_kind);
    DecodeParams decode = kRolloutDecode;
    decode.temperature = o.temperature;
    decode.top_p = o.top_p;

    std::vector<json> kept;
    std::vector<json> groups;
    const SynthesisClients clients = SynthesisClients::all(rt.chat());
    for (const auto& line : read_jsonl(o.qa)) {
        SynthesizedItem item;
        try {
            item = qa_from_json(line.value);
        } catch (const Error& e) {
            throw LineError(o.qa, line.line, e.what());
        }
        const std::vector<Document> docs = context_for(item.item, by_id);
        DifficultyResult res = difficulty_filter(clients, rt.prompts(), item.item, docs, o.n, o.band_lo, o.band_hi,
                                                 decode, rt.models());
        item.qc.push_back(res.verdict);
        if (res.verdict.passed) kept.push_back(qa_to_json(item));

        if (!o.rollouts_out.empty()) {
            RolloutRecord rec;
            rec.group_id = item.item.id;
            rec.question_id = item.item.id;
            rec.question = item.item.question;
            rec.gold = item.item.answer;
            rec.gt_chain = render_gt_chain(item.item.gt_chain);
            rec.model_kind = kind;
            ReferenceOptions ro;
            ro.model = rt.models().policy;
            ro.model_kind = kind;
            rec.reference_text = collect_reference_trajectory(rt.chat(), rt.prompts(), item.item.question, docs,
                                                              item.item.gt_chain, ro)
                                     .raw_text;
            for (const auto& r : res.rollouts) {
                TrajectoryRecord t;
                t.text = r.text;
                t.reward = r.reward;
                rec.trajectories.push_back(std::move(t));
            }
            groups.push_back(rollout_to_json(rec));
        }
    }
    write_atomic(o.out, to_jsonl(kept));
    if (!o.rollouts_out.empty()) write_atomic(o.rollouts_out, to_jsonl(groups));
    spdlog::info("difficulty filter kept {} items", kept.size());
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------

struct ShapeOptions {
    std::string rollouts = "rollouts.jsonl";
    std::string out = "advantages.jsonl";
    double epsilon = 0.2;
    double beta = 0.0;
    std::string std_mode = "population";
    double std_floor = 1e-6;
    std::string granularity = "token";
    std::string sim_mode = "max_over_steps";
    std::string tokenize = "none";
    std::string model_kind = "instruct";
};

int reward_of(const TrajectoryRecord& t, const Trajectory& traj, const RolloutRecord& rec, Runtime& rt) {
    if (t.reward) return *t.reward;
    JudgeOptions jo;
    jo.model = rt.models().judge;
    return hybrid_reward(traj.answer.value_or(""), rec.gold, rec.question, rt.chat(), rt.prompts(), jo).hybrid;
}

Trajectory prepare_trajectory(const std::string& text, ModelKind kind,
                              const std::optional<std::vector<std::pair<std::size_t, std::size_t>>>& offsets,
                              bool whitespace_tokens) {
    Trajectory traj = segment_trajectory(text, kind);
    if (offsets) return assign_token_spans(std::move(traj), *offsets);
    if (whitespace_tokens) return assign_token_spans(std::move(traj), whitespace_token_offsets(text));
    return traj;
}

json shape_group(const RolloutRecord& rec, const ObjectiveConfig& cfg, SimMode sim_mode, bool whitespace_tokens,
                 ModelKind default_kind, Runtime& rt) {
    const ModelKind kind = rec.model_kind.value_or(default_kind);
    RolloutGroup g;
    g.question_id = rec.question_id;
    for (const auto& t : rec.trajectories) {
        Trajectory traj = prepare_trajectory(t.text, kind, t.token_offsets, whitespace_tokens);
        g.rewards.push_back(reward_of(t, traj, rec, rt));
        g.signals.push_back(t.signals);
        g.trajectories.push_back(std::move(traj));
    }

    bool need_signals = false;
    for (std::size_t i = 0; i < g.trajectories.size(); ++i) {
        if (g.rewards[i] == 0 && !g.signals[i] && !g.trajectories[i].steps.empty()) need_signals = true;
    }
    if (need_signals) {
        if (rec.reference_text) {
            g.reference = segment_trajectory(*rec.reference_text, kind);
        } else if (rec.gt_chain) {
            ReferenceOptions ro;
            ro.model = rt.models().policy;
            ro.model_kind = kind;
            g.reference = collect_reference_trajectory(rt.chat(), rt.prompts(), rec.question, {},
                                                       parse_gt_chain(*rec.gt_chain), ro);
        } else {
            throw Error(ErrorCode::MissingSignals,
                        "negative rollouts lack step signals and the group has no reference or gt_chain");
        }
        SignalOptions so;
        so.sim_mode = sim_mode;
        so.judge.model = rt.models().judge;
        compute_group_signals(g, rt.chat(), rt.embed(), rt.prompts(), so);
    }

    const ShapedAdvantages shaped = shaped_step_advantages(g, cfg);
    json per = json::array();
    for (std::size_t i = 0; i < g.trajectories.size(); ++i) {
        json p{{"step_advantages", shaped.step_advantages[i]}, {"coefficients", shaped.coefficients[i]}};
        if (shaped.token_advantages) p["token_advantages"] = (*shaped.token_advantages)[i];
        per.push_back(std::move(p));
    }
    json out{{"group_id", rec.group_id},
             {"rewards", g.rewards},
             {"group_advantages", shaped.group_advantages},
             {"per_trajectory", per}};

    const bool have_logp = std::all_of(rec.trajectories.begin(), rec.trajectories.end(),
                                       [](const TrajectoryRecord& t) { return t.logp_new.has_value(); });
    if (have_logp && shaped.token_advantages) {
        PolicyGroup pg;
        for (std::size_t i = 0; i < g.trajectories.size(); ++i) {
            const auto& t = rec.trajectories[i];
            if (t.logp_new->size() != (*shaped.token_advantages)[i].size()) {
                throw Error(ErrorCode::LengthMismatch, "log-probabilities do not match the token count");
            }
            pg.push_back({*t.logp_new, *t.logp_old,
                          advantage_units(g.trajectories[i], (*shaped.token_advantages)[i], cfg.granularity)});
        }
        out["objective"] = surrogate_objective({pg}, cfg).J;
    }
    return out;
}

int cmd_shape(Runtime& rt, const ShapeOptions& o) {
    ObjectiveConfig cfg;
    cfg.epsilon = o.epsilon;
    cfg.beta = o.beta;
    cfg.std_mode = std_mode_from_string(o.std_mode);
    cfg.std_floor = o.std_floor;
    cfg.granularity = granularity_from_string(o.granularity);
    cfg.validate();
    const SimMode sim_mode = sim_mode_from_string(o.sim_mode);
    if (o.tokenize != "none" && o.tokenize != "whitespace") {
        throw Error(ErrorCode::InvalidArgument, "--tokenize must be 'none' or 'whitespace'");
    }
    const ModelKind kind = model_kind_from_string(o.model_kind);

    std::vector<json> records;
    std::size_t failed = 0;
    for (const auto& line : read_jsonl(o.rollouts)) {
        RolloutRecord rec;
        try {
            rec = rollout_from_json(line.value);
        } catch (const Error& e) {
            throw LineError(o.rollouts, line.line, e.what());
        }
        try {
            records.push_back(shape_group(rec, cfg, sim_mode, o.tokenize == "whitespace", kind, rt));
        } catch (const ClientError&) {
            throw;
        } catch (const Error& e) {
            ++failed;
            records.push_back({{"group_id", rec.group_id}, {"error", std::string(to_string(e.code()))},
                               {"message", e.what()}});
            emit_error(std::string(to_string(e.code())), e.what(), line.line, o.rollouts);
        }
    }
    write_atomic(o.out, to_jsonl(records));
    return failed == 0 ? kExitOk : kExitData;
}

// ---------------------------------------------------------------------------------------------

struct ScoreOptions {
    std::string predictions = "predictions.jsonl";
    std::string out = "rewards.jsonl";
    std::string match = "normalized";
};

int cmd_score(Runtime& rt, const ScoreOptions& o) {
    MatchPolicy policy = MatchPolicy::Normalized;
    if (o.match == "exact") policy = MatchPolicy::Exact;
    else if (o.match != "normalized") throw Error(ErrorCode::InvalidArgument, "--match must be 'normalized' or 'exact'");
    JudgeOptions jo;
    jo.model = rt.models().judge;

    std::vector<json> records;
    std::size_t failed = 0;
    for (const auto& line : read_jsonl(o.predictions)) {
        const auto problems = validate_record(RecordKind::Predictions, line.value);
        json out = json::object();
        if (line.value.is_object() && line.value.contains("id")) out["id"] = line.value["id"];
        if (!problems.empty()) {
            ++failed;
            out["line"] = line.line;
            out["error"] = problems.front();
            emit_error("DataError", problems.front(), line.line, o.predictions);
            records.push_back(std::move(out));
            continue;
        }
        const RewardRecord r = hybrid_reward(line.value["prediction"].get<std::string>(),
                                             line.value["gold"].get<std::string>(),
                                             line.value["question"].get<std::string>(), rt.chat(), rt.prompts(), jo,
                                             policy);
        out["rule"] = r.rule;
        if (r.judge) out["judge"] = *r.judge;
        out["hybrid"] = r.hybrid;
        records.push_back(std::move(out));
    }
    write_atomic(o.out, to_jsonl(records));
    return failed == 0 ? kExitOk : kExitData;
}

// ---------------------------------------------------------------------------------------------

struct DiagnoseOptions {
    std::string rollouts = "rollouts.jsonl";
    std::string paths;
    std::string aliases;
    std::string out = "coverage_report.csv";
    double bin_width = 0.125;
    std::string model_kind = "instruct";
};

int cmd_diagnose(Runtime& rt, const DiagnoseOptions& o) {
    std::vector<ReasoningPath> paths;
    if (!o.paths.empty()) {
        for (const auto& line : read_jsonl(o.paths)) {
            try {
                paths.push_back(path_from_json(line.value).path);
            } catch (const Error& e) {
                throw LineError(o.paths, line.line, e.what());
            }
        }
    }
    AliasMap aliases;
    if (!o.aliases.empty()) {
        const json j = read_json(o.aliases);
        for (const auto& [k, v] : j.items()) aliases[k] = v.get<std::vector<std::string>>();
    }
    const ModelKind kind = model_kind_from_string(o.model_kind);
    TripletOptions to;
    to.model = rt.models().judge;

    std::vector<GroupCoverage> groups;
    std::size_t index = 0;
    for (const auto& line : read_jsonl(o.rollouts)) {
        RolloutRecord rec;
        ReasoningPath path;
        try {
            rec = rollout_from_json(line.value);
            if (rec.gt_chain) path = parse_gt_chain(*rec.gt_chain);
            else if (index < paths.size()) path = paths[index];
            else throw Error(ErrorCode::DataError, "group has no gt_chain and no matching path record");
        } catch (const Error& e) {
            throw LineError(o.rollouts, line.line, e.what());
        }
        ++index;
        GroupCoverage gc;
        for (const auto& t : rec.trajectories) {
            const Trajectory traj = segment_trajectory(t.text, rec.model_kind.value_or(kind));
            const int reward = reward_of(t, traj, rec, rt);
            gc.rewards.push_back(reward);
            if (reward == 1) continue;
            CoverageRecord cr;
            const EntityMatch em = match_entities(t.text, path, aliases);
            cr.entity_coverage = em.coverage;
            cr.matched_entities = em.matched;
            const TripletJudgement tj = judge_triplets(traj, path, rt.chat(), rt.prompts(), to);
            cr.triplet_coverage = tj.coverage;
            cr.judged_steps = tj.verdicts;
            gc.negative_records.push_back(std::move(cr));
        }
        groups.push_back(std::move(gc));
    }
    write_atomic(o.out, coverage_report_csv(bucket_by_positive_ratio(groups, o.bin_width)));
    return kExitOk;
}

// ---------------------------------------------------------------------------------------------

struct ValidateOptions {
    std::vector<std::string> files;
    std::string kind;
};

std::optional<RecordKind> infer_kind(const fs::path& file) {
    const std::string name = file.filename().string();
    const std::pair<const char*, RecordKind> table[] = {
        {"triples", RecordKind::Triples},        {"paths", RecordKind::Paths},
        {"rollouts", RecordKind::Rollouts},      {"advantages", RecordKind::Advantages}, {"adv", RecordKind::Advantages},
        {"predictions", RecordKind::Predictions}, {"rewards", RecordKind::Rewards},
        {"stats", RecordKind::Stats},            {"kg", RecordKind::KGSnapshot},
        {"qa", RecordKind::QA}};
    for (const auto& [stem, kind] : table) {
        if (name.find(stem) != std::string::npos) return kind;
    }
    return std::nullopt;
}

std::vector<std::string> validate_coverage_csv(const std::string& content) {
    std::istringstream in(content);
    std::string line;
    if (!std::getline(in, line) || line.rfind("ratio_bucket,mean_entity_cov,mean_triplet_cov,count", 0) != 0) {
        return {"coverage report header is missing"};
    }
    std::vector<std::string> problems;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        std::istringstream row(line);
        std::string cell;
        std::size_t cells = 0;
        while (std::getline(row, cell, ',')) {
            ++cells;
            char* end = nullptr;
            std::strtod(cell.c_str(), &end);
            if (cell.empty() || *end != '\0') problems.push_back("line " + std::to_string(n) + ": non-numeric cell");
        }
        if (cells != 6) problems.push_back("line " + std::to_string(n) + ": expected 6 columns");
    }
    return problems;
}

int cmd_validate(const ValidateOptions& o) {
    std::size_t invalid = 0;
    for (const auto& file : o.files) {
        if (fs::path(file).extension() == ".csv") {
            const auto problems = validate_coverage_csv(read_file(file));
            for (const auto& p : problems) emit_error("DataError", p, std::nullopt, file);
            invalid += problems.size();
            std::cout << file << ": " << (problems.empty() ? "ok" : "invalid") << '\n';
            continue;
        }
        std::optional<RecordKind> kind;
        if (!o.kind.empty()) kind = record_kind_from_string(o.kind);
        else kind = infer_kind(file);
        if (!kind) throw Error(ErrorCode::InvalidArgument, "cannot infer the record kind of " + file + "; pass --kind");

        std::size_t records = 0;
        std::size_t bad = 0;
        if (*kind == RecordKind::KGSnapshot || *kind == RecordKind::Stats) {
            records = 1;
            for (const auto& p : validate_record(*kind, read_json(file))) {
                ++bad;
                emit_error("DataError", p, std::nullopt, file);
            }
        } else {
            for (const auto& line : read_jsonl(file)) {
                ++records;
                const auto problems = validate_record(*kind, line.value);
                if (!problems.empty()) {
                    ++bad;
                    emit_error("DataError", problems.front(), line.line, file);
                }
            }
        }
        invalid += bad;
        std::cout << file << ": " << records << " " << to_string(*kind) << " records, " << bad << " invalid\n";
    }
    return invalid == 0 ? kExitOk : kExitData;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Knowledge-guided multi-hop question synthesis and step-wise advantage shaping"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML config file; [<subcommand>] sections hold per-command keys");

    GlobalOptions g;
    app.add_flag("--mock", g.mock, "Use deterministic offline clients; network access becomes an error");
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--prompts", g.prompts_dir, "Directory of prompt template overrides");
    app.add_flag("-v,--verbose", g.verbose, "Debug logging");
    app.add_option("--timeout-ms", g.timeout_ms, "HTTP request timeout");
    app.add_option("--max-retries", g.max_retries, "HTTP retries on transport errors, 429 and 5xx");
    app.add_option("--max-concurrency", g.max_concurrency, "Maximum in-flight HTTP requests");
    for (const char* role : kRoles) {
        app.add_option(std::string("--model-") + role, g.model_flags[role],
                       std::string("Model name for the ") + role + " role");
    }

    BuildKgOptions bk;
    auto* build = app.add_subcommand("build-kg", "Build a knowledge-graph snapshot from triples");
    build->add_option("--triples", bk.triples, "triples.jsonl files")->required();
    build->add_option("--aliases", bk.aliases, "JSON object mapping alias -> canonical name");
    build->add_option("--out", bk.out, "Output snapshot");

    SamplePathsOptions sp;
    auto* sample = app.add_subcommand("sample-paths", "Sample reasoning paths from a snapshot");
    sample->add_option("--kg", sp.kg, "Knowledge-graph snapshot");
    sample->add_option("--strategy", sp.strategy, "random_walk or bfs");
    sample->add_option("--hops", sp.hops, "Hops per path");
    sample->add_option("--min-docs", sp.min_docs, "Minimum distinct documents (0 = default rule)");
    sample->add_option("--count", sp.count, "Number of paths");
    sample->add_option("--max-attempts", sp.max_attempts, "Sampling attempts per path");
    sample->add_option("--out", sp.out, "Output paths.jsonl");

    SynthOptions sy;
    auto* synth = app.add_subcommand("synth", "Synthesise QA items with quality control");
    synth->add_option("--corpus", sy.corpus, "Corpus directory or documents .jsonl");
    synth->add_option("--kg", sy.kg, "Knowledge-graph snapshot");
    synth->add_option("--out", sy.out, "Output qa.jsonl");
    synth->add_option("--stats", sy.stats, "Output stats.json (default: next to --out)");
    synth->add_option("--tags", sy.tags, "JSON object mapping entity -> obfuscation category");
    synth->add_option("--count", sy.count, "Items to request");
    synth->add_option("--min-hops", sy.min_hops);
    synth->add_option("--max-hops", sy.max_hops);
    synth->add_option("--strategy", sy.strategy, "random_walk or bfs");
    synth->add_option("--min-docs", sy.min_docs, "Minimum distinct documents (0 = default rule)");
    synth->add_option("--obfuscation-density", sy.obfuscation_density);
    synth->add_option("--distractors", sy.distractors);
    synth->add_option("--robustness-k", sy.robustness_k);
    synth->add_option("--word-cap", sy.word_cap);
    synth->add_option("--min-context-tokens", sy.min_context_tokens);
    synth->add_option("--max-context-tokens", sy.max_context_tokens);
    synth->add_flag("--difficulty", sy.difficulty, "Also run the difficulty filter");
    synth->add_option("--rollouts", sy.rollouts);
    synth->add_option("--band-lo", sy.band_lo);
    synth->add_option("--band-hi", sy.band_hi);
    synth->add_option("--concurrency", sy.concurrency, "Items processed at once");

    FilterOptions fd;
    auto* filter = app.add_subcommand("filter-difficulty", "Keep items whose policy success rate is in the band");
    filter->add_option("--qa", fd.qa, "Input qa.jsonl");
    filter->add_option("--corpus", fd.corpus, "Corpus directory or documents .jsonl");
    filter->add_option("--out", fd.out, "Output qa.jsonl");
    filter->add_option("--rollouts-out", fd.rollouts_out, "Also write the sampled rollouts as rollouts.jsonl");
    filter->add_option("--n", fd.n, "Rollouts per item");
    filter->add_option("--band-lo", fd.band_lo);
    filter->add_option("--band-hi", fd.band_hi);
    filter->add_option("--temperature", fd.temperature);
    filter->add_option("--top-p", fd.top_p);
    filter->add_option("--model-kind", fd.model_kind, "instruct or thinking");

    ShapeOptions sh;
    auto* shape = app.add_subcommand("shape", "Compute step-wise shaped advantages for rollout groups");
    shape->add_option("--rollouts", sh.rollouts, "Input rollouts.jsonl");
    shape->add_option("--out", sh.out, "Output advantages.jsonl");
    shape->add_option("--epsilon", sh.epsilon);
    shape->add_option("--beta", sh.beta);
    shape->add_option("--std-mode", sh.std_mode, "population or sample");
    shape->add_option("--std-floor", sh.std_floor);
    shape->add_option("--granularity", sh.granularity, "token or step");
    shape->add_option("--sim-mode", sh.sim_mode, "max_over_steps or whole_reference");
    shape->add_option("--tokenize", sh.tokenize, "none or whitespace (used when token_offsets are absent)");
    shape->add_option("--model-kind", sh.model_kind, "instruct or thinking");

    ScoreOptions sc;
    auto* score = app.add_subcommand("score", "Hybrid rule/judge rewards for predictions");
    score->add_option("--predictions", sc.predictions, "Input predictions.jsonl");
    score->add_option("--out", sc.out, "Output rewards.jsonl");
    score->add_option("--match", sc.match, "normalized or exact");

    DiagnoseOptions dg;
    auto* diagnose = app.add_subcommand("diagnose", "Entity/triplet coverage report bucketed by group positive ratio");
    diagnose->add_option("--rollouts", dg.rollouts, "Input rollouts.jsonl");
    diagnose->add_option("--paths", dg.paths, "paths.jsonl used for groups without gt_chain (matched by order)");
    diagnose->add_option("--aliases", dg.aliases, "JSON object mapping entity -> list of aliases");
    diagnose->add_option("--out", dg.out, "Output CSV");
    diagnose->add_option("--bin-width", dg.bin_width);
    diagnose->add_option("--model-kind", dg.model_kind, "instruct or thinking");

    ValidateOptions va;
    auto* validate = app.add_subcommand("validate", "Check files against the record schemas");
    validate->add_option("files", va.files, "Files to check")->required();
    validate->add_option("--kind", va.kind, "Record kind (default: inferred from the file name)");

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error("Usage", e.what());
        return kExitUsage;
    }

    spdlog::set_level(g.verbose ? spdlog::level::debug : spdlog::level::warn);
    try {
        Runtime rt(g);
        if (build->parsed()) return cmd_build_kg(bk);
        if (sample->parsed()) return cmd_sample_paths(g, sp);
        if (synth->parsed()) return cmd_synth(g, rt, sy);
        if (filter->parsed()) return cmd_filter_difficulty(rt, fd);
        if (shape->parsed()) return cmd_shape(rt, sh);
        if (score->parsed()) return cmd_score(rt, sc);
        if (diagnose->parsed()) return cmd_diagnose(rt, dg);
        if (validate->parsed()) return cmd_validate(va);
    } catch (const LineError& e) {
        emit_error(std::string(to_string(e.code())), e.what(), e.line(), e.file());
        return kExitData;
    } catch (const ClientError& e) {
        emit_error(std::string(to_string(e.kind())), e.what());
        return kExitClient;
    } catch (const Error& e) {
        emit_error(std::string(to_string(e.code())), e.what());
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        emit_error("DataError", e.what());
        return kExitData;
    } catch (const json::exception& e) {
        emit_error("DataError", e.what());
        return kExitData;
    }
    return kExitUsage;
}

} // namespace hopwise::cli
