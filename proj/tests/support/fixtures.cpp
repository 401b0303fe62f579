#include "fixtures.hpp"

#include "hopwise/error.hpp"
#include "hopwise/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <unistd.h>

namespace hopwise::testing {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kVocab = {
    "river", "archive", "council", "harbor", "treaty",  "signal", "lantern", "orchard", "quarry", "ledger",
    "beacon", "meadow", "furnace", "canal",  "charter", "vessel", "granary", "tower",   "summit", "bridge"};

std::string words(Rng& rng, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) out += ' ';
        out += kVocab[rng.index(kVocab.size())];
    }
    return out;
}

} // namespace

std::string trajectory_text(Rng& rng, const TrajectoryShape& shape) {
    std::string out;
    if (shape.preamble) out += "Let me work through this. ";
    if (shape.think) out += "<think>\n" + words(rng, 3 + rng.index(6)) + "\n" + words(rng, 2 + rng.index(4)) + "\n</think>\n";
    out += "<begin_of_thought>\n";
    if (rng.bernoulli(0.3)) out += words(rng, 1 + rng.index(3)) + "\n";
    for (std::size_t i = 0; i < shape.thought_steps; ++i) {
        out += "Step " + std::to_string(i + 1) + ": " + words(rng, 1 + rng.index(7)) + "\n\n";
    }
    out += "<end_of_thought>\n<begin_of_solution>\n";
    for (std::size_t i = 0; i < shape.solution_steps; ++i) {
        out += "Step " + std::to_string(i + 1) + ": " + words(rng, 1 + rng.index(5)) + "\n";
    }
    out += "Therefore, the answer is " + shape.answer + ".\n<end_of_solution>";
    return out;
}

Trajectory tokenized(const std::string& text, ModelKind kind) {
    return assign_token_spans(segment_trajectory(text, kind), whitespace_token_offsets(text));
}

Trajectory bare_trajectory(std::size_t steps) {
    Trajectory t;
    for (std::size_t j = 0; j < steps; ++j) {
        Step s;
        s.index = j + 1;
        s.declared_number = static_cast<long>(j + 1);
        t.steps.push_back(s);
    }
    return t;
}

std::vector<StepSignal> random_signals(Rng& rng, std::size_t n) {
    std::vector<StepSignal> out;
    for (std::size_t j = 0; j < n; ++j) out.emplace_back(rng.bernoulli(0.5), rng.unit());
    return out;
}

// ---------------------------------------------------------------------------------------------

std::vector<double> oracle_group_advantages(const std::vector<int>& rewards, bool sample_std, double floor) {
    const double n = static_cast<double>(rewards.size());
    double sum = 0.0;
    for (int r : rewards) sum += r;
    const double mean = sum / n;
    double ss = 0.0;
    for (int r : rewards) ss += (r - mean) * (r - mean);
    std::vector<double> out(rewards.size(), 0.0);
    if (ss == 0.0) return out;
    const double sd = std::sqrt(ss / (sample_std ? n - 1.0 : n));
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / std::max(sd, floor);
    return out;
}

std::vector<std::vector<double>> oracle_step_advantages(const std::vector<int>& rewards,
                                                        const std::vector<std::vector<StepSignal>>& signals) {
    const std::vector<double> adv = oracle_group_advantages(rewards);
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        std::vector<double> row;
        for (const auto& s : signals[i]) {
            const double penalty = (rewards[i] == 0 && s.valid()) ? s.sim() : 0.0;
            row.push_back(adv[i] * (1.0 - penalty));
        }
        out.push_back(std::move(row));
    }
    return out;
}

double oracle_objective(const std::vector<std::vector<OracleTrajectory>>& groups, RatioGranularity granularity,
                        double epsilon, double beta) {
    auto f = [&](double ratio, double a) {
        const double clipped = std::min(std::max(ratio, 1.0 - epsilon), 1.0 + epsilon);
        return std::min(ratio * a, clipped * a);
    };
    double total = 0.0;
    for (const auto& group : groups) {
        double score = 0.0;
        double kl = 0.0;
        for (const auto& t : group) {
            const std::size_t n = t.offsets.size();
            // Unit key of each token from the character position where it starts.
            std::vector<std::pair<long, long>> key(n);
            for (std::size_t k = 0; k < n; ++k) {
                const std::size_t c = t.offsets[k].first;
                long seg = -1;
                long step = -1;
                for (std::size_t s = 0; s < t.trajectory.segments.size(); ++s) {
                    if (t.trajectory.segments[s].char_span.contains(c)) seg = static_cast<long>(s);
                }
                for (std::size_t s = 0; s < t.trajectory.steps.size(); ++s) {
                    if (t.trajectory.steps[s].char_span.contains(c)) step = static_cast<long>(s);
                }
                key[k] = granularity == RatioGranularity::Token ? std::pair<long, long>{static_cast<long>(k), 0}
                                                                : std::pair<long, long>{seg, step};
            }
            double traj_score = 0.0;
            std::size_t units = 0;
            std::size_t k = 0;
            while (k < n) {
                std::size_t e = k;
                double log_ratio = 0.0;
                while (e < n && key[e] == key[k]) {
                    log_ratio += t.logp_new[e] - t.logp_old[e];
                    ++e;
                }
                traj_score += f(std::exp(log_ratio), t.token_advantages[k]);
                ++units;
                k = e;
            }
            score += traj_score / static_cast<double>(units);
            double traj_kl = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double d = t.logp_old[j] - t.logp_new[j];
                traj_kl += std::exp(d) - d - 1.0;
            }
            kl += traj_kl / static_cast<double>(n);
        }
        score /= static_cast<double>(group.size());
        kl /= static_cast<double>(group.size());
        total += score - beta * kl;
    }
    return total / static_cast<double>(groups.size());
}

namespace {

struct Chunk {
    std::string word;
    bool punctuated = false;
};

std::vector<Chunk> chunks_of(const std::string& s) {
    std::vector<Chunk> out;
    for (auto piece : text::split_whitespace(s)) {
        Chunk c;
        std::string w(piece);
        while (!w.empty() && (w.back() == '.' || w.back() == ',' || w.back() == ';')) {
            w.pop_back();
            c.punctuated = true;
        }
        c.word = text::casefold(w);
        out.push_back(std::move(c));
    }
    return out;
}

bool occurs(const std::vector<Chunk>& hay, const std::vector<Chunk>& needle) {
    if (needle.empty() || needle.size() > hay.size()) return false;
    for (std::size_t p = 0; p + needle.size() <= hay.size(); ++p) {
        bool ok = true;
        for (std::size_t q = 0; q < needle.size() && ok; ++q) {
            ok = hay[p + q].word == needle[q].word && (q + 1 == needle.size() || !hay[p + q].punctuated);
        }
        if (ok) return true;
    }
    return false;
}

} // namespace

double oracle_entity_coverage(const std::string& text_in, const std::vector<std::string>& nodes,
                              const AliasMap& aliases) {
    const auto hay = chunks_of(text_in);
    std::set<std::string> distinct;
    std::set<std::string> hit;
    for (const auto& node : nodes) {
        const std::string key = text::normalize_name(node);
        distinct.insert(key);
        std::vector<std::string> forms = {node};
        auto it = aliases.find(node);
        if (it != aliases.end()) forms.insert(forms.end(), it->second.begin(), it->second.end());
        for (const auto& form : forms) {
            if (occurs(hay, chunks_of(form))) hit.insert(key);
        }
    }
    return static_cast<double>(hit.size()) / static_cast<double>(distinct.size());
}

// ---------------------------------------------------------------------------------------------

KnowledgeGraph ring_lattice(std::size_t n, std::size_t k, std::size_t documents) {
    std::vector<Triple> edges;
    char name_a[32];
    char name_b[32];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t d = 1; d <= k; ++d) {
            std::snprintf(name_a, sizeof name_a, "node%03zu", i);
            std::snprintf(name_b, sizeof name_b, "node%03zu", (i + d) % n);
            edges.push_back({name_a, "link" + std::to_string(d), name_b,
                             "doc" + std::to_string((i * k + d - 1) % documents)});
        }
    }
    return build_graph(edges);
}

SyntheticCorpus synthetic_corpus(std::size_t documents, std::uint64_t seed) {
    static const std::vector<std::string> first = {"Ar", "Bel", "Cor", "Dun", "El", "Fen", "Gal", "Hal", "Ist", "Jor"};
    static const std::vector<std::string> second = {"mont", "wick", "dale", "ford", "moor", "holm", "ton", "bury"};
    static const std::vector<std::string> relations = {"founded", "is located in", "was governed by",
                                                       "traded with", "is the birthplace of", "borders"};
    Rng rng(seed);
    std::vector<std::string> entities;
    std::set<std::string> seen;
    while (entities.size() < documents * 3) {
        std::string name = first[rng.index(first.size())] + second[rng.index(second.size())];
        if (rng.bernoulli(0.3)) name += " " + first[rng.index(first.size())] + "ia";
        if (seen.insert(name).second) entities.push_back(name);
    }
    SyntheticCorpus out;
    for (std::size_t d = 0; d < documents; ++d) {
        char id[32];
        std::snprintf(id, sizeof id, "doc%02zu", d);
        Document doc;
        doc.doc_id = id;
        doc.title = "Record " + std::to_string(d);
        for (std::size_t f = 0; f < 5; ++f) {
            // Facts chain through the document's own entities so paths span documents.
            const std::string& subject = entities[(d * 3 + f) % entities.size()];
            const std::string& object = entities[(d * 3 + f + 1 + rng.index(5)) % entities.size()];
            if (subject == object) continue;
            const std::string& relation = relations[rng.index(relations.size())];
            out.triples.push_back({subject, relation, object, doc.doc_id});
            doc.body += subject + " " + relation + " " + object + ". ";
            doc.body += "Local accounts of the " + kVocab[rng.index(kVocab.size())] + " mention " + subject +
                        " more than once. ";
        }
        out.documents.push_back(std::move(doc));
    }
    return out;
}

void write_corpus(const fs::path& dir, const SyntheticCorpus& corpus) {
    fs::create_directories(dir / "corpus");
    for (const auto& d : corpus.documents) {
        std::ofstream(dir / "corpus" / (d.doc_id + ".txt"), std::ios::binary) << d.body;
    }
    std::ofstream out(dir / "triples.jsonl", std::ios::binary);
    for (const auto& t : corpus.triples) {
        out << "{\"subject\":\"" << t.subject << "\",\"relation\":\"" << t.relation << "\",\"object\":\""
            << t.object << "\",\"doc_id\":\"" << t.doc_id << "\"}\n";
    }
}

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("hopwise-" + name + "-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// ---------------------------------------------------------------------------------------------

const std::string kFixtureAgeCorrect = R"(<think>
The question is about the man the freighter was named after. I need his birth and death years.
The naming section says the insurer's chairman gave the ship its name.
</think>
<begin_of_thought>
Step 1: The naming section says the ship was named for the insurer's chairman, Edmund Fitzgerald.

Step 2: The ship sank in 1975, so I need his birth and death years to tell whether he was alive then.

Step 3: The list of related people gives the namesake's lifespan as 1895 to 1986.

Step 4: He died in 1986, after the 1975 sinking, so he was alive. Using years only, 1975 - 1895 = 80.

Step 5: Nothing else in the text contradicts these years, so his age at the sinking was 80.

<end_of_thought>
<begin_of_solution>
Therefore, the answer is 80.
<end_of_solution>)";

const std::string kFixtureAgeWrong = R"(<think>
I should find out when the namesake of the freighter died and compare it with the sinking.
</think>
<begin_of_thought>
Step 1: I need to identify the namesake of the ship and decide whether he was alive when it sank in 1975.

Step 2: The text says the ship was named after the insurer's chairman, Edmund Fitzgerald.

Step 3: A related entry lists the namesake's lifespan as 1895 to 1986.

Step 4: The ship sank in 1975 and the namesake died in 1986, so he had been dead for 1986 - 1975 = 11 years.

Step 5: Nothing in the text says he was alive at the time of the sinking.

Step 6: The question asks how long he had been dead, which is 11 years.

Step 7: Years alone are enough, so 11 years stands.

<end_of_thought>
<begin_of_solution>
Therefore, the answer is 11 years.
<end_of_solution>)";

const std::string kFixtureChainGt =
    "(Emily Oliver)-[dismisses]-(N\xc3\xa1" "dja)-[is a close friend of]-(John Price)-[is the protagonist of]-(Prague)"
    "-[deals with the history of]-(Horv\xc3\xa1th Kiad\xc3\xb3)-[is the head of]-(Imre Horv\xc3\xa1th)"
    "-[was exiled in]-(Vienna)";

const std::string kFixtureChain = "<begin_of_thought>\n"
                                  "Step 1: Emily Oliver dismisses N\xc3\xa1" "dja in the novel.\n\n"
                                  "Step 2: N\xc3\xa1" "dja is a close friend of John Price.\n\n"
                                  "Step 3: John Price is the protagonist of Prague.\n\n"
                                  "Step 4: Prague deals with the history of Horv\xc3\xa1th Kiad\xc3\xb3.\n\n"
                                  "Step 5: Imre Horv\xc3\xa1th is the head of Horv\xc3\xa1th Kiad\xc3\xb3.\n\n"
                                  "Step 6: Imre Horv\xc3\xa1th was exiled in Vienna.\n\n"
                                  "Step 7: So the city of exile is Vienna.\n\n"
                                  "<end_of_thought>\n<begin_of_solution>\n"
                                  "Therefore, the answer is Vienna.\n<end_of_solution>";

// ---------------------------------------------------------------------------------------------

GauntletPlan default_gauntlet_plan() {
    return {{"pass-2", "align", "ground", "length", "robust", "pass-1", "align", "pass-3", "ground", "length",
             "pass-4", "robust", "align", "pass-6", "ground", "length", "pass-7", "robust", "align", "pass-8"}};
}

namespace {

std::string field_after(const std::string& content, const std::string& key, char terminator) {
    const std::size_t p = content.rfind(key);
    if (p == std::string::npos) return {};
    const std::size_t b = p + key.size();
    const std::size_t e = content.find(terminator, b);
    return content.substr(b, e == std::string::npos ? std::string::npos : e - b);
}

std::string scripted_output(const std::string& answer) {
    return "<begin_of_thought>\nStep 1: Scripted reasoning.\n<end_of_thought>\n<begin_of_solution>\n"
           "Therefore, the answer is " +
           answer + ".\n<end_of_solution>";
}

} // namespace

GauntletRun run_gauntlet(const GauntletPlan& plan) {
    const SyntheticCorpus corpus = synthetic_corpus(10, 99);
    const KnowledgeGraph graph = build_graph(corpus.triples);

    GauntletRun run;
    std::mutex mu;
    std::size_t generated = 0;
    bool boundary_used = false;
    std::map<std::string, std::size_t> robust_attempts;
    std::map<std::string, std::size_t> policy_attempts;

    MockChatClient generator;
    generator.on_request([&](const ChatRequest& req) -> std::optional<std::string> {
        std::lock_guard lock(mu);
        const std::size_t idx = generated++;
        const std::string fate = plan.fates.at(idx);
        std::string answer = "Answer" + std::to_string(idx);
        if (fate == "length") {
            answer = "one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen "
                     "sixteen seventeen eighteen nineteen twenty twentyone";
        } else if (fate.rfind("pass", 0) == 0 && !boundary_used) {
            // Exactly at the word cap.
            boundary_used = true;
            answer = "one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen "
                     "sixteen seventeen eighteen nineteen twenty";
        }
        (void)req;
        return "[[Question]]: Item " + std::to_string(idx) + " fate=" + fate + " gold=[" + answer +
               "] what is it?\n[[Answer]]: " + answer + "\n[[Explanation]]: scripted";
    });

    MockChatClient responder;
    responder.on_request([&](const ChatRequest& req) -> std::optional<std::string> {
        const std::string content = req.joined_content();
        const std::string fate = field_after(content, "fate=", ' ');
        const std::string gold = field_after(content, "gold=[", ']');
        const bool with_docs = content.find("Documents:") != std::string::npos;
        std::lock_guard lock(mu);
        if (!with_docs) {
            ++run.grounding_calls;
            ++run.per_fate_phase[fate + "/ground"];
            return scripted_output(fate == "ground" ? gold : "nothing relevant");
        }
        if (req.temperature == 0.0) {
            ++run.alignment_calls;
            ++run.per_fate_phase[fate + "/align"];
            return scripted_output(fate == "align" ? "a different thing" : gold);
        }
        ++run.robustness_calls;
        ++run.per_fate_phase[fate + "/robust"];
        const std::size_t attempt = robust_attempts[gold]++;
        return scripted_output(fate != "robust" && attempt >= 1 ? gold : "a distractor entity");
    });

    MockChatClient verifier;
    verifier.on_request([&](const ChatRequest& req) -> std::optional<std::string> {
        std::lock_guard lock(mu);
        ++run.verifier_calls;
        return req.joined_content().find("fate=align") != std::string::npos ? "Different. [[NO]]" : "Same. [[YES]]";
    });

    MockChatClient judge;
    judge.fallback("They differ. [[NO]]");

    MockChatClient policy;
    policy.on_request([&](const ChatRequest& req) -> std::optional<std::string> {
        const std::string content = req.joined_content();
        const std::string fate = field_after(content, "fate=", ' ');
        const std::string gold = field_after(content, "gold=[", ']');
        std::lock_guard lock(mu);
        ++run.policy_calls;
        const std::size_t m = fate.rfind("pass-", 0) == 0 ? std::stoul(fate.substr(5)) : 0;
        const std::size_t attempt = policy_attempts[gold]++;
        return scripted_output(attempt < m ? gold : "a wrong guess");
    });

    SynthesisClients clients;
    clients.generator = &generator;
    clients.responder = &responder;
    clients.verifier = &verifier;
    clients.judge = &judge;
    clients.policy = &policy;

    SynthesisConfig cfg;
    cfg.num_items = plan.fates.size();
    cfg.seed = 5;
    cfg.min_hops = 2;
    cfg.max_hops = 2;
    cfg.obfuscation_density = 0.0;
    cfg.min_context_tokens = 1;
    cfg.max_context_tokens = 1'000'000;
    cfg.distractors = 2;
    cfg.robustness_attempts = 4;
    cfg.difficulty_filter = true;
    cfg.rollouts = 8;
    cfg.item_concurrency = 1;
    run.result = run_pipeline(cfg, corpus.documents, graph, clients, PromptSet());
    return run;
}

} // namespace hopwise::testing
