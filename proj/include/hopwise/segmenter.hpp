#pragma once

// Splits raw model output into tagged segments and numbered reasoning steps.
//
// Recognised regions:
//   <think> ... </think>                         (native deliberation)
//   <begin_of_thought> ... <end_of_thought>
//   <begin_of_solution> ... <end_of_solution>
// Anything outside a tagged region becomes an Other segment. Segment spans include their tags,
// so concatenating segment texts reproduces the raw text byte for byte.
//
// Steps start at `Step <digits>:` when that marker begins the segment content or follows
// whitespace, and are only extracted from Thought and Solution segments.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hopwise {

struct CharSpan {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool contains(std::size_t pos) const { return pos >= begin && pos < end; }
    bool operator==(const CharSpan&) const = default;
};

/// Half-open token index range.
using TokenSpan = CharSpan;

enum class SegmentKind { Think, Thought, Solution, Other };
enum class ModelKind { Instruct, Thinking };

std::string_view to_string(SegmentKind k);
std::string_view to_string(ModelKind k);
ModelKind model_kind_from_string(std::string_view s);

struct Segment {
    SegmentKind kind = SegmentKind::Other;
    std::string text;
    CharSpan char_span;
    /// Span of the text between the open and close tags (equals char_span for Other).
    CharSpan content_span;
    std::optional<TokenSpan> token_span;
};

struct Step {
    /// 1-based position in textual order.
    std::size_t index = 0;
    /// The number written after "Step"; may repeat or skip.
    long declared_number = 0;
    std::string text;
    CharSpan char_span;
    std::optional<TokenSpan> token_span;
    /// Index into Trajectory::segments of the segment that holds this step.
    std::size_t segment = 0;
};

struct Trajectory {
    std::string raw_text;
    std::vector<Segment> segments;
    std::vector<Step> steps;
    std::optional<std::string> answer;
    ModelKind model_kind = ModelKind::Instruct;
    /// Set by assign_token_spans.
    std::optional<std::size_t> num_tokens;

    bool has_think() const;
};

Trajectory segment_trajectory(std::string_view raw_text, ModelKind model_kind);

std::optional<std::string> extract_answer(const Trajectory& trajectory);

/// Attaches token spans; each token is attributed to the segment (and step) containing its
/// first character. Throws Error{OffsetsMismatch} unless offsets tile raw_text exactly.
Trajectory assign_token_spans(Trajectory trajectory,
                              const std::vector<std::pair<std::size_t, std::size_t>>& token_offsets);

/// Whitespace-delimited pseudo-tokenisation that tiles the text (each token owns its trailing
/// whitespace). Used when the caller has no tokenizer offsets.
std::vector<std::pair<std::size_t, std::size_t>> whitespace_token_offsets(std::string_view text);

} // namespace hopwise
