#include "hopwise/offline_client.hpp"

#include "hopwise/core.hpp"
#include "hopwise/error.hpp"
#include "hopwise/prompts.hpp"
#include "hopwise/reward.hpp"
#include "hopwise/rng.hpp"
#include "hopwise/text.hpp"

#include <cctype>
#include <map>
#include <set>

namespace hopwise {

namespace {

// Rest of the line following the last occurrence of `marker`.
std::string line_after(const std::string& content, std::string_view marker, bool first = false) {
    const std::size_t pos = first ? content.find(marker) : content.rfind(marker);
    if (pos == std::string::npos) return {};
    const std::size_t begin = pos + marker.size();
    const std::size_t end = content.find('\n', begin);
    return std::string(text::trim(std::string_view(content).substr(begin, end == std::string::npos ? std::string::npos : end - begin)));
}

std::set<std::string> content_words(std::string_view s) {
    std::set<std::string> out;
    std::string cur;
    auto flush = [&] {
        if (cur.size() >= 4) out.insert(cur);
        cur.clear();
    };
    for (char c : s) {
        if (text::is_word_byte(c)) cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        else flush();
    }
    flush();
    return out;
}

std::string target_of(const std::string& question) {
    const std::string key = "(target: ";
    const std::size_t pos = question.rfind(key);
    if (pos == std::string::npos) return {};
    const std::size_t end = question.find(')', pos + key.size());
    if (end == std::string::npos) return {};
    return question.substr(pos + key.size(), end - pos - key.size());
}

std::string trajectory(const std::vector<std::string>& thought, const std::vector<std::string>& solution,
                       const std::string& answer) {
    std::string out = "<begin_of_thought>\n";
    for (std::size_t i = 0; i < thought.size(); ++i) {
        out += "Step " + std::to_string(i + 1) + ": " + thought[i] + "\n\n";
    }
    out += "<end_of_thought>\n<begin_of_solution>\n";
    for (std::size_t i = 0; i < solution.size(); ++i) {
        out += "Step " + std::to_string(i + 1) + ": " + solution[i] + "\n";
    }
    out += "Therefore, the answer is " + answer + ".\n<end_of_solution>";
    return out;
}

} // namespace

std::size_t OfflineChatClient::call_count() const {
    std::lock_guard lock(mu_);
    return calls_;
}

std::string OfflineChatClient::chat(const ChatRequest& request) {
    {
        std::lock_guard lock(mu_);
        ++calls_;
    }
    const std::string content = request.joined_content();
    if (content.find(prompt_markers::kAnswerJudge) != std::string::npos) return answer_judge(content);
    if (content.find(prompt_markers::kSubstepJudge) != std::string::npos) return substep_judge(content);
    if (content.find(prompt_markers::kObfuscation) != std::string::npos) return obfuscate(content);
    if (content.find(prompt_markers::kGeneration) != std::string::npos) return generate(content);
    if (content.find(prompt_markers::kQuestion) != std::string::npos) return respond(content);
    return "I cannot help with that request.";
}

std::string OfflineChatClient::answer_judge(const std::string& content) const {
    const std::string pred = line_after(content, "Answer 1:");
    const std::string gold = line_after(content, "Answer 2:");
    const bool same = !pred.empty() && normalize_answer(pred, MatchPolicy::Normalized) ==
                                           normalize_answer(gold, MatchPolicy::Normalized);
    return same ? "Both answers name the same thing. [[YES]]" : "The answers differ. [[NO]]";
}

std::string OfflineChatClient::substep_judge(const std::string& content) const {
    const std::string marker_gt = "Ground Truth Reasoning Solution:";
    const std::size_t gt_pos = content.rfind(marker_gt);
    const std::size_t step_pos = content.rfind(prompt_markers::kSubstepJudge);
    if (gt_pos == std::string::npos || step_pos == std::string::npos || step_pos < gt_pos) {
        return "Cannot compare. [[NO]]";
    }
    const auto gt = content_words(std::string_view(content).substr(gt_pos + marker_gt.size(), step_pos - gt_pos));
    const auto step = content_words(std::string_view(content).substr(step_pos + prompt_markers::kSubstepJudge.size()));
    std::size_t shared = 0;
    for (const auto& w : step) shared += gt.count(w);
    return shared >= 2 ? "The substep appears in the reference. [[YES]]" : "Not covered. [[NO]]";
}

std::string OfflineChatClient::obfuscate(const std::string& content) const {
    const std::string entity = line_after(content, "Entity:", true);
    std::string category = "generic";
    const std::string cat_line = line_after(content, "Category:", true);
    if (!cat_line.empty()) {
        const std::size_t end = cat_line.find_first_of(". ");
        category = text::casefold(cat_line.substr(0, end));
    }
    return "[" + category + " descriptor of " + entity + "]";
}

std::string OfflineChatClient::generate(const std::string& content) const {
    const std::string chain_text = line_after(content, "Multi-hop Reasoning Path:\n");
    ReasoningPath path;
    try {
        path = parse_gt_chain(chain_text);
    } catch (const Error&) {
        return "No question could be produced for this path.";
    }

    std::map<std::string, std::string> descriptors;
    std::size_t pos = 0;
    while ((pos = content.find("\n- ", pos)) != std::string::npos) {
        const std::size_t end = content.find('\n', pos + 1);
        const std::string line = content.substr(pos + 3, end == std::string::npos ? std::string::npos : end - pos - 3);
        const std::size_t arrow = line.find(" => ");
        if (arrow != std::string::npos) descriptors[line.substr(0, arrow)] = line.substr(arrow + 4);
        pos = pos + 1;
    }

    const std::string& start = path.nodes.front();
    const std::string answer = path.nodes.back();
    std::string question = "Starting from ";
    question += descriptors.count(start) ? descriptors.at(start) : start;
    question += ", follow ";
    for (std::size_t i = 0; i < path.relations.size(); ++i) {
        if (i > 0) question += ", then ";
        question += "'" + path.relations[i] + "'";
    }
    question += ". Which entity do you reach? (target: " + answer + ")";
    return "[[Question]]: " + question + "\n\n[[Answer]]: " + answer + "\n\n[[Explanation]]: Follow the chain " +
           render_gt_chain(path) + ".";
}

std::string OfflineChatClient::respond(const std::string& content) {
    std::size_t qpos = content.rfind(prompt_markers::kQuestion);
    std::string question = content.substr(qpos + prompt_markers::kQuestion.size());
    const std::size_t ref = question.find(prompt_markers::kReference);
    if (ref != std::string::npos) question = question.substr(0, ref);
    question = std::string(text::trim(question));

    if (ref != std::string::npos) {
        const std::string chain_text = line_after(content, std::string(prompt_markers::kReference) + "\n");
        try {
            const ReasoningPath path = parse_gt_chain(chain_text);
            std::vector<std::string> thought;
            for (std::size_t i = 0; i < path.relations.size(); ++i) {
                thought.push_back("The link " + path.nodes[i] + " " + path.relations[i] + " leads to " +
                                  path.nodes[i + 1] + ".");
            }
            return trajectory(thought, {"Chaining every link ends at " + path.nodes.back() + "."}, path.nodes.back());
        } catch (const Error&) {
            // Fall through to an ordinary answer.
        }
    }

    const std::string target = target_of(question);
    const std::uint64_t h = text::fnv1a(question, splitmix64(seed_));
    const bool has_docs = content.find(prompt_markers::kDocuments) != std::string::npos;

    std::string answer;
    if (has_docs) {
        std::size_t k = 0;
        {
            std::lock_guard lock(mu_);
            k = repeats_[text::fnv1a(content, seed_)]++;
        }
        const std::uint64_t level = splitmix64(h) % 5;
        const std::uint64_t slot = (h + k) % 4;
        answer = (slot < level && !target.empty()) ? target : "candidate-" + std::to_string(slot);
    } else {
        answer = (h % 10 == 0 && !target.empty()) ? target : "unknown";
    }

    std::vector<std::string> thought = {
        "The question is: " + question,
        has_docs ? "Scan the documents for each relation named in the question." : "No documents are available, so rely on memory.",
        "Combine the retrieved facts to reach " + answer + ".",
    };
    return trajectory(thought, {"The chain of facts points to " + answer + "."}, answer);
}

} // namespace hopwise
