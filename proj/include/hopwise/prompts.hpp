#pragma once

// Prompt templates. Built-in defaults are compiled from assets/prompts/*.txt; a directory of
// same-named files can override any subset of them.

#include "hopwise/clients.hpp"
#include "hopwise/core.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hopwise {

enum class ObfuscationCategory { Temporal, Location, Institutional, Generic };

std::string_view to_string(ObfuscationCategory c);
ObfuscationCategory obfuscation_category_from_string(std::string_view s);

/// Marker phrases that identify each prompt kind inside a request.
namespace prompt_markers {
inline constexpr std::string_view kAnswerJudge = "You are an expert in verifying if two answers are the same.";
inline constexpr std::string_view kSubstepJudge = "Reasoning Substep to Check:";
inline constexpr std::string_view kGeneration = "As a specialist in complex problem design";
inline constexpr std::string_view kObfuscation = "Rewrite the entity below as an indirect description";
inline constexpr std::string_view kTraining = "Please structure your response into two main sections: Thought and Solution.";
inline constexpr std::string_view kReference = "Reference reasoning chain (entities linked by relations, in order):";
inline constexpr std::string_view kQuestion = "Question: ";
inline constexpr std::string_view kDocuments = "Documents:";
} // namespace prompt_markers

class PromptSet {
public:
    /// Built-in templates.
    PromptSet();
    /// Built-ins overridden by any `<name>.txt` present in `dir`.
    static PromptSet from_directory(const std::filesystem::path& dir);

    const std::string& get(const std::string& name) const;
    void set(const std::string& name, std::string text);

    std::string answer_judge(std::string_view question, std::string_view predicted,
                             std::string_view golden) const;
    std::string substep_judge(std::string_view ground_truth, std::string_view substep) const;

    /// System + user messages of the policy prompt. `guidance_chain` adds GT-chain guidance.
    std::vector<Message> training_messages(const std::vector<Document>& docs,
                                           std::string_view question,
                                           const std::optional<std::string>& guidance_chain = std::nullopt) const;

    std::string question_generation(const std::vector<Document>& docs, const ReasoningPath& path,
                                    Paradigm paradigm,
                                    const std::vector<std::pair<std::string, std::string>>& rewrites) const;

    std::string obfuscation_rewrite(std::string_view entity, ObfuscationCategory category,
                                    std::string_view context) const;

private:
    std::map<std::string, std::string> templates_;
};

/// Display name used for a paradigm inside generation prompts.
std::string_view paradigm_display_name(Paradigm p);

/// "Documents:" block listing each document with its title.
std::string render_documents(const std::vector<Document>& docs);

} // namespace hopwise
