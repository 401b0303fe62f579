#include "hopwise/prompts.hpp"

#include "hopwise/error.hpp"
#include "hopwise/text.hpp"

#include <fstream>
#include <sstream>

namespace hopwise {

namespace detail {
const std::map<std::string, std::string>& builtin_prompts();
}

std::string_view to_string(ObfuscationCategory c) {
    switch (c) {
    case ObfuscationCategory::Temporal: return "Temporal";
    case ObfuscationCategory::Location: return "Location";
    case ObfuscationCategory::Institutional: return "Institutional";
    case ObfuscationCategory::Generic: return "Generic";
    }
    return "Generic";
}

ObfuscationCategory obfuscation_category_from_string(std::string_view s) {
    const std::string n = text::casefold(s);
    if (n == "temporal") return ObfuscationCategory::Temporal;
    if (n == "location") return ObfuscationCategory::Location;
    if (n == "institutional") return ObfuscationCategory::Institutional;
    if (n == "generic") return ObfuscationCategory::Generic;
    throw Error(ErrorCode::InvalidArgument, "unknown obfuscation category: " + std::string(s));
}

std::string_view paradigm_display_name(Paradigm p) {
    switch (p) {
    case Paradigm::MultiHop: return "Multihop Reasoning";
    case Paradigm::Temporal: return "Temporal Reasoning";
    case Paradigm::Causal: return "Causal Analysis";
    case Paradigm::Hypothetical: return "Hypothetical Scenario";
    }
    return "Multihop Reasoning";
}

namespace {

std::string strip_final_newline(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

std::string_view paradigm_template(Paradigm p) {
    switch (p) {
    case Paradigm::MultiHop: return "paradigm_multihop";
    case Paradigm::Temporal: return "paradigm_temporal";
    case Paradigm::Causal: return "paradigm_causal";
    case Paradigm::Hypothetical: return "paradigm_hypothetical";
    }
    return "paradigm_multihop";
}

std::string_view category_instruction(ObfuscationCategory c) {
    switch (c) {
    case ObfuscationCategory::Temporal:
        return "Category: temporal. Describe the date or period indirectly, for example through its "
               "decade, century, or a property of its digits.";
    case ObfuscationCategory::Location:
        return "Category: location. Describe the place through properties such as its region, "
               "population, or a landmark.";
    case ObfuscationCategory::Institutional:
        return "Category: institutional. Describe the organisation through its type, field, "
               "founding, or location.";
    case ObfuscationCategory::Generic:
        return "Category: generic. Describe the entity through a distinctive property stated in the "
               "context.";
    }
    return "";
}

} // namespace

PromptSet::PromptSet() {
    for (const auto& [name, body] : detail::builtin_prompts()) {
        templates_[name] = strip_final_newline(body);
    }
}

PromptSet PromptSet::from_directory(const std::filesystem::path& dir) {
    PromptSet set;
    if (!std::filesystem::is_directory(dir)) {
        throw Error(ErrorCode::InvalidArgument, "prompt directory not found: " + dir.string());
    }
    for (auto& [name, body] : set.templates_) {
        const auto file = dir / (name + ".txt");
        if (!std::filesystem::exists(file)) continue;
        std::ifstream in(file);
        std::stringstream ss;
        ss << in.rdbuf();
        body = strip_final_newline(ss.str());
    }
    return set;
}

const std::string& PromptSet::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw Error(ErrorCode::InvalidArgument, "unknown prompt: " + name);
    return it->second;
}

void PromptSet::set(const std::string& name, std::string body) {
    templates_[name] = std::move(body);
}

std::string PromptSet::answer_judge(std::string_view question, std::string_view predicted,
                                    std::string_view golden) const {
    return text::fill_template(get("answer_judge"), {{"question", std::string(question)},
                                                     {"predicted_answer", std::string(predicted)},
                                                     {"golden_answer", std::string(golden)}});
}

std::string PromptSet::substep_judge(std::string_view ground_truth, std::string_view substep) const {
    return text::fill_template(get("substep_judge"), {{"ground_truth", std::string(ground_truth)},
                                                      {"substep", std::string(substep)}});
}

std::string render_documents(const std::vector<Document>& docs) {
    std::string out(prompt_markers::kDocuments);
    out += '\n';
    for (std::size_t i = 0; i < docs.size(); ++i) {
        out += "[Document " + std::to_string(i + 1) + "] " + docs[i].title + "\n";
        out += docs[i].body;
        out += "\n\n";
    }
    return out;
}

std::vector<Message> PromptSet::training_messages(const std::vector<Document>& docs,
                                                  std::string_view question,
                                                  const std::optional<std::string>& guidance_chain) const {
    std::string user;
    if (!docs.empty()) user += render_documents(docs);
    user += std::string(prompt_markers::kQuestion) + std::string(question);
    if (guidance_chain) {
        user += "\n\n";
        user += text::fill_template(get("reference_guidance"), {{"chain", *guidance_chain}});
    }
    return {{"system", get("training_system")}, {"user", std::move(user)}};
}

std::string PromptSet::question_generation(
    const std::vector<Document>& docs, const ReasoningPath& path, Paradigm paradigm,
    const std::vector<std::pair<std::string, std::string>>& rewrites) const {
    std::string articles;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        articles += "Article " + std::to_string(i + 1) + ": " + docs[i].title + "\n" + docs[i].body +
                    "\n\n";
    }
    std::string hints;
    if (!rewrites.empty()) {
        hints = "Entity Obfuscation: never name the following entities in the question; refer to "
                "each one only through its description.\n";
        for (const auto& [entity, description] : rewrites) {
            hints += "- " + entity + " => " + description + "\n";
        }
    }
    return text::fill_template(
        get("question_generation"),
        {{"k_context", std::to_string(docs.size())},
         {"paradigm_name", std::string(paradigm_display_name(paradigm))},
         {"paradigm_requirements", get(std::string(paradigm_template(paradigm)))},
         {"obfuscation_hints", hints},
         {"documents", articles},
         {"reasoning_path", render_gt_chain(path)}});
}

std::string PromptSet::obfuscation_rewrite(std::string_view entity, ObfuscationCategory category,
                                           std::string_view context) const {
    return text::fill_template(get("obfuscation_rewrite"),
                               {{"category_instruction", std::string(category_instruction(category))},
                                {"entity", std::string(entity)},
                                {"context", std::string(context)}});
}

} // namespace hopwise
