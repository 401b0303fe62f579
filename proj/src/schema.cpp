#include "hopwise/schema.hpp"

#include "hopwise/error.hpp"
#include "hopwise/text.hpp"

#include <set>

namespace hopwise {

namespace {

[[noreturn]] void bad(const std::string& msg) {
    throw Error(ErrorCode::DataError, msg);
}

const json& field(const json& j, const char* name) {
    if (!j.is_object()) bad("record is not a JSON object");
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) bad(std::string("missing field '") + name + "'");
    return *it;
}

std::string get_string(const json& j, const char* name) {
    const json& v = field(j, name);
    if (!v.is_string()) bad(std::string("field '") + name + "' must be a string");
    return v.get<std::string>();
}

std::optional<std::string> opt_string(const json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) bad(std::string("field '") + name + "' must be a string");
    return it->get<std::string>();
}

std::vector<std::string> get_strings(const json& j, const char* name) {
    const json& v = field(j, name);
    if (!v.is_array()) bad(std::string("field '") + name + "' must be an array");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) bad(std::string("field '") + name + "' must hold strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

std::vector<double> get_numbers(const json& v, const char* name) {
    if (!v.is_array()) bad(std::string("field '") + name + "' must be an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number()) bad(std::string("field '") + name + "' must hold numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::uint64_t get_uint(const json& j, const char* name) {
    const json& v = field(j, name);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        bad(std::string("field '") + name + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

template <typename F>
auto wrap(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::DataError) throw;
        bad(e.what());
    }
}

} // namespace

json triple_to_json(const Triple& t) {
    return {{"subject", t.subject}, {"relation", t.relation}, {"object", t.object}, {"doc_id", t.doc_id}};
}

Triple triple_from_json(const json& j) {
    Triple t{get_string(j, "subject"), get_string(j, "relation"), get_string(j, "object"), get_string(j, "doc_id")};
    if (!t.well_formed()) bad("triple has an empty subject, relation or object");
    return t;
}

json document_to_json(const Document& d) {
    json j{{"doc_id", d.doc_id}, {"title", d.title}, {"body", d.body}};
    if (d.token_count > 0) j["token_count"] = d.token_count;
    return j;
}

Document document_from_json(const json& j) {
    Document d;
    d.doc_id = get_string(j, "doc_id");
    d.title = opt_string(j, "title").value_or(d.doc_id);
    d.body = get_string(j, "body");
    if (j.contains("token_count") && !j["token_count"].is_null()) d.token_count = get_uint(j, "token_count");
    return d;
}

json path_to_json(const PathRecord& r) {
    json j{{"nodes", r.path.nodes},
           {"relations", r.path.relations},
           {"doc_ids", r.path.doc_ids},
           {"hops", r.path.hops()},
           {"seed", r.seed},
           {"strategy", std::string(to_string(r.strategy))}};
    if (!r.path.reversed.empty()) j["reversed"] = r.path.reversed;
    return j;
}

PathRecord path_from_json(const json& j) {
    PathRecord r;
    r.path.nodes = get_strings(j, "nodes");
    r.path.relations = get_strings(j, "relations");
    r.path.doc_ids = get_strings(j, "doc_ids");
    if (j.contains("reversed")) {
        const json& rev = j["reversed"];
        if (!rev.is_array()) bad("field 'reversed' must be an array");
        for (const auto& b : rev) {
            if (!b.is_boolean()) bad("field 'reversed' must hold booleans");
            r.path.reversed.push_back(b.get<bool>());
        }
    }
    if (get_uint(j, "hops") != r.path.hops()) bad("'hops' disagrees with the relation count");
    if (!r.path.well_formed()) bad("path arrays have inconsistent lengths");
    r.seed = get_uint(j, "seed");
    r.strategy = wrap([&] { return path_strategy_from_string(get_string(j, "strategy")); });
    return r;
}

json qc_verdict_to_json(const QCVerdict& v) {
    return {{"stage", std::string(to_string(v.stage))}, {"passed", v.passed}, {"detail", v.detail}};
}

QCVerdict qc_verdict_from_json(const json& j) {
    QCVerdict v;
    v.stage = wrap([&] { return qc_stage_from_string(get_string(j, "stage")); });
    const json& p = field(j, "passed");
    if (!p.is_boolean()) bad("field 'passed' must be a boolean");
    v.passed = p.get<bool>();
    v.detail = opt_string(j, "detail").value_or("");
    return v;
}

json qa_to_json(const SynthesizedItem& s) {
    const QAItem& q = s.item;
    json qc = json::array();
    for (const auto& v : s.qc) qc.push_back(qc_verdict_to_json(v));
    json j{{"id", q.id},
           {"question", q.question},
           {"answer", q.answer},
           {"paradigm", std::string(to_string(q.paradigm))},
           {"hops", q.hops},
           {"doc_ids", q.doc_ids},
           {"gt_chain", render_gt_chain(q.gt_chain)},
           {"token_count", q.token_count},
           {"qc", qc}};
    if (!q.explanation.empty()) j["explanation"] = q.explanation;
    return j;
}

SynthesizedItem qa_from_json(const json& j) {
    SynthesizedItem s;
    QAItem& q = s.item;
    q.id = get_string(j, "id");
    q.question = get_string(j, "question");
    q.answer = get_string(j, "answer");
    q.explanation = opt_string(j, "explanation").value_or("");
    q.paradigm = wrap([&] { return paradigm_from_string(get_string(j, "paradigm")); });
    q.hops = get_uint(j, "hops");
    q.doc_ids = get_strings(j, "doc_ids");
    q.gt_chain = wrap([&] { return parse_gt_chain(get_string(j, "gt_chain")); });
    if (q.gt_chain.hops() != q.hops) bad("'hops' disagrees with gt_chain");
    q.token_count = get_uint(j, "token_count");
    if (j.contains("qc")) {
        if (!j["qc"].is_array()) bad("field 'qc' must be an array");
        for (const auto& v : j["qc"]) s.qc.push_back(qc_verdict_from_json(v));
    }
    return s;
}

json kg_to_json(const KnowledgeGraph& g) {
    json edges = json::array();
    for (const auto& e : g.edges()) edges.push_back(triple_to_json(e));
    return {{"entities", std::vector<std::string>(g.entities().begin(), g.entities().end())}, {"edges", edges}};
}

KnowledgeGraph kg_from_json(const json& j) {
    const auto entities = get_strings(j, "entities");
    const json& e = field(j, "edges");
    if (!e.is_array()) bad("field 'edges' must be an array");
    std::vector<Triple> edges;
    std::set<std::string> known(entities.begin(), entities.end());
    for (const auto& t : e) {
        edges.push_back(triple_from_json(t));
        if (!known.count(edges.back().subject) || !known.count(edges.back().object)) {
            bad("edge endpoint missing from entities: " + edges.back().subject + " / " + edges.back().object);
        }
    }
    return KnowledgeGraph::from_canonical(std::move(edges), entities);
}

json stats_to_json(const PipelineStats& s) {
    json stages = json::object();
    for (QCStage st : {QCStage::AnswerAlignment, QCStage::KnowledgeGrounding, QCStage::AnswerLength,
                       QCStage::ContextualRobustness, QCStage::Difficulty}) {
        auto p = s.stage_passed.find(st);
        auto f = s.stage_failed.find(st);
        stages[std::string(to_string(st))] = {{"passed", p == s.stage_passed.end() ? 0 : p->second},
                                              {"failed", f == s.stage_failed.end() ? 0 : f->second}};
    }
    return {{"requested", s.requested},
            {"emitted", s.emitted},
            {"failures",
             {{"sampling", s.sampling_failures},
              {"context", s.context_failures},
              {"generation", s.generation_failures},
              {"client", s.client_failures},
              {"other", s.other_failures}}},
            {"stages", stages},
            {"conserved", s.conserved()}};
}

json rollout_to_json(const RolloutRecord& r) {
    json trajs = json::array();
    for (const auto& t : r.trajectories) {
        json tj{{"text", t.text}};
        if (t.reward) tj["reward"] = *t.reward;
        if (t.logp_new) tj["logp_new"] = *t.logp_new;
        if (t.logp_old) tj["logp_old"] = *t.logp_old;
        if (t.token_offsets) {
            json offs = json::array();
            for (const auto& [b, e] : *t.token_offsets) offs.push_back({b, e});
            tj["token_offsets"] = offs;
        }
        if (t.signals) {
            json sig = json::array();
            for (const auto& s : *t.signals) sig.push_back({{"valid", s.valid()}, {"sim", s.sim()}});
            tj["signals"] = sig;
        }
        trajs.push_back(std::move(tj));
    }
    json j{{"group_id", r.group_id}, {"question_id", r.question_id}, {"question", r.question}, {"gold", r.gold}};
    if (r.reference_text) j["reference_text"] = *r.reference_text;
    if (r.gt_chain) j["gt_chain"] = *r.gt_chain;
    if (r.model_kind) j["model_kind"] = std::string(to_string(*r.model_kind));
    j["trajectories"] = trajs;
    return j;
}

RolloutRecord rollout_from_json(const json& j) {
    RolloutRecord r;
    r.group_id = get_string(j, "group_id");
    r.question_id = opt_string(j, "question_id").value_or(r.group_id);
    r.question = get_string(j, "question");
    r.gold = get_string(j, "gold");
    r.reference_text = opt_string(j, "reference_text");
    r.gt_chain = opt_string(j, "gt_chain");
    if (auto mk = opt_string(j, "model_kind")) r.model_kind = wrap([&] { return model_kind_from_string(*mk); });
    const json& trajs = field(j, "trajectories");
    if (!trajs.is_array()) bad("field 'trajectories' must be an array");
    for (const auto& tj : trajs) {
        TrajectoryRecord t;
        t.text = get_string(tj, "text");
        if (tj.contains("reward") && !tj["reward"].is_null()) {
            const json& rv = tj["reward"];
            if (!rv.is_number_integer() || (rv.get<long long>() != 0 && rv.get<long long>() != 1)) {
                bad("field 'reward' must be 0 or 1");
            }
            t.reward = rv.get<int>();
        }
        if (tj.contains("logp_new")) t.logp_new = get_numbers(tj["logp_new"], "logp_new");
        if (tj.contains("logp_old")) t.logp_old = get_numbers(tj["logp_old"], "logp_old");
        if (tj.contains("token_offsets")) {
            const json& offs = tj["token_offsets"];
            if (!offs.is_array()) bad("field 'token_offsets' must be an array");
            std::vector<std::pair<std::size_t, std::size_t>> v;
            for (const auto& o : offs) {
                if (!o.is_array() || o.size() != 2 || !o[0].is_number_unsigned() || !o[1].is_number_unsigned()) {
                    bad("token offsets must be [begin, end] pairs of non-negative integers");
                }
                v.emplace_back(o[0].get<std::size_t>(), o[1].get<std::size_t>());
            }
            t.token_offsets = std::move(v);
        }
        if (tj.contains("signals") && !tj["signals"].is_null()) {
            const json& sig = tj["signals"];
            if (!sig.is_array()) bad("field 'signals' must be an array");
            std::vector<StepSignal> v;
            for (const auto& s : sig) {
                const json& valid = field(s, "valid");
                const json& sim = field(s, "sim");
                if (!valid.is_boolean() || !sim.is_number()) bad("signals need boolean 'valid' and numeric 'sim'");
                v.push_back(wrap([&] { return StepSignal(valid.get<bool>(), sim.get<double>()); }));
            }
            t.signals = std::move(v);
        }
        if (t.logp_new.has_value() != t.logp_old.has_value()) bad("logp_new and logp_old must be given together");
        if (t.logp_new && t.logp_new->size() != t.logp_old->size()) bad("logp_new and logp_old differ in length");
        r.trajectories.push_back(std::move(t));
    }
    if (r.trajectories.empty()) bad("group has no trajectories");
    return r;
}

std::string_view to_string(RecordKind k) {
    switch (k) {
    case RecordKind::Triples: return "triples";
    case RecordKind::Paths: return "paths";
    case RecordKind::QA: return "qa";
    case RecordKind::Rollouts: return "rollouts";
    case RecordKind::Advantages: return "advantages";
    case RecordKind::Predictions: return "predictions";
    case RecordKind::Rewards: return "rewards";
    case RecordKind::KGSnapshot: return "kg";
    case RecordKind::Stats: return "stats";
    }
    return "triples";
}

RecordKind record_kind_from_string(std::string_view s) {
    const std::string n = text::casefold(s);
    for (RecordKind k : {RecordKind::Triples, RecordKind::Paths, RecordKind::QA, RecordKind::Rollouts,
                         RecordKind::Advantages, RecordKind::Predictions, RecordKind::Rewards, RecordKind::KGSnapshot,
                         RecordKind::Stats}) {
        if (n == to_string(k)) return k;
    }
    throw Error(ErrorCode::InvalidArgument, "unknown record kind: " + std::string(s));
}

namespace {

void check_advantages(const json& j) {
    get_string(j, "group_id");
    if (j.contains("error")) {
        get_string(j, "error");
        return;
    }
    const auto adv = get_numbers(field(j, "group_advantages"), "group_advantages");
    const json& per = field(j, "per_trajectory");
    if (!per.is_array()) bad("field 'per_trajectory' must be an array");
    if (per.size() != adv.size()) bad("one per_trajectory entry per group advantage is required");
    for (const auto& p : per) {
        const auto steps = get_numbers(field(p, "step_advantages"), "step_advantages");
        const auto coef = get_numbers(field(p, "coefficients"), "coefficients");
        if (steps.size() != coef.size()) bad("step_advantages and coefficients differ in length");
        if (p.contains("token_advantages")) get_numbers(p["token_advantages"], "token_advantages");
    }
    if (j.contains("objective") && !j["objective"].is_number()) bad("field 'objective' must be a number");
}

void check_prediction(const json& j) {
    get_string(j, "question");
    get_string(j, "prediction");
    get_string(j, "gold");
}

void check_reward(const json& j) {
    if (j.contains("error")) {
        get_string(j, "error");
        return;
    }
    for (const char* name : {"rule", "hybrid"}) {
        const json& v = field(j, name);
        if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
            bad(std::string("field '") + name + "' must be 0 or 1");
        }
    }
}

void check_stats(const json& j) {
    const auto requested = get_uint(j, "requested");
    const auto emitted = get_uint(j, "emitted");
    std::uint64_t failures = 0;
    const json& f = field(j, "failures");
    if (!f.is_object()) bad("field 'failures' must be an object");
    for (const auto& [k, v] : f.items()) {
        if (!v.is_number_unsigned()) bad("failure counts must be non-negative integers");
        failures += v.get<std::uint64_t>();
    }
    const json& stages = field(j, "stages");
    if (!stages.is_object()) bad("field 'stages' must be an object");
    for (const auto& [k, v] : stages.items()) failures += get_uint(v, "failed");
    if (requested != emitted + failures) bad("stats do not conserve the requested count");
}

} // namespace

std::vector<std::string> validate_record(RecordKind kind, const json& j) {
    try {
        switch (kind) {
        case RecordKind::Triples: triple_from_json(j); break;
        case RecordKind::Paths: path_from_json(j); break;
        case RecordKind::QA: qa_from_json(j); break;
        case RecordKind::Rollouts: rollout_from_json(j); break;
        case RecordKind::Advantages: check_advantages(j); break;
        case RecordKind::Predictions: check_prediction(j); break;
        case RecordKind::Rewards: check_reward(j); break;
        case RecordKind::KGSnapshot: kg_from_json(j); break;
        case RecordKind::Stats: check_stats(j); break;
        }
    } catch (const Error& e) {
        return {e.what()};
    } catch (const json::exception& e) {
        return {e.what()};
    }
    return {};
}

} // namespace hopwise
