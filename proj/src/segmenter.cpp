#include "hopwise/segmenter.hpp"

#include "hopwise/error.hpp"
#include "hopwise/text.hpp"

#include <algorithm>
#include <array>

namespace hopwise {

std::string_view to_string(SegmentKind k) {
    switch (k) {
    case SegmentKind::Think: return "Think";
    case SegmentKind::Thought: return "Thought";
    case SegmentKind::Solution: return "Solution";
    case SegmentKind::Other: return "Other";
    }
    return "Other";
}

std::string_view to_string(ModelKind k) {
    return k == ModelKind::Thinking ? "Thinking" : "Instruct";
}

ModelKind model_kind_from_string(std::string_view s) {
    const std::string n = text::casefold(s);
    if (n == "thinking") return ModelKind::Thinking;
    if (n == "instruct") return ModelKind::Instruct;
    throw Error(ErrorCode::InvalidArgument, "unknown model kind: " + std::string(s));
}

bool Trajectory::has_think() const {
    return std::any_of(segments.begin(), segments.end(),
                       [](const Segment& s) { return s.kind == SegmentKind::Think; });
}

namespace {

struct TagPair {
    SegmentKind kind;
    std::string_view open;
    std::string_view close;
};

constexpr std::array<TagPair, 3> kTags{{
    {SegmentKind::Think, "<think>", "</think>"},
    {SegmentKind::Thought, "<begin_of_thought>", "<end_of_thought>"},
    {SegmentKind::Solution, "<begin_of_solution>", "<end_of_solution>"},
}};

constexpr std::string_view kAnswerPhrase = "Therefore, the answer is";

struct OpenHit {
    std::size_t pos = std::string_view::npos;
    const TagPair* tag = nullptr;
};

OpenHit next_open(std::string_view s, std::size_t from) {
    OpenHit best;
    for (const auto& t : kTags) {
        const std::size_t p = s.find(t.open, from);
        if (p < best.pos) best = {p, &t};
    }
    return best;
}

Segment make_segment(std::string_view raw, SegmentKind kind, CharSpan span, CharSpan content) {
    Segment seg;
    seg.kind = kind;
    seg.char_span = span;
    seg.content_span = content;
    seg.text = std::string(raw.substr(span.begin, span.size()));
    return seg;
}

// Parses `Step <digits>:` at `pos`; returns the declared number on success.
std::optional<long> step_marker_at(std::string_view s, std::size_t pos, std::size_t limit) {
    constexpr std::string_view kStep = "Step";
    if (pos + kStep.size() > limit || s.substr(pos, kStep.size()) != kStep) return std::nullopt;
    std::size_t i = pos + kStep.size();
    while (i < limit && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t digits_begin = i;
    long number = 0;
    while (i < limit && s[i] >= '0' && s[i] <= '9') {
        if (number < 1'000'000'000) number = number * 10 + (s[i] - '0');
        ++i;
    }
    if (i == digits_begin) return std::nullopt;
    while (i < limit && (s[i] == ' ' || s[i] == '\t')) ++i;
    if (i >= limit || s[i] != ':') return std::nullopt;
    return number;
}

bool marker_boundary(std::string_view s, std::size_t pos, std::size_t content_begin) {
    if (pos == content_begin) return true;
    const char prev = s[pos - 1];
    return text::is_space(prev) || prev == '*' || prev == '#';
}

void extract_steps(Trajectory& t, std::size_t segment_index) {
    const Segment& seg = t.segments[segment_index];
    const std::string_view raw = t.raw_text;
    const std::size_t begin = seg.content_span.begin;
    const std::size_t end = seg.content_span.end;

    std::vector<std::pair<std::size_t, long>> markers;
    for (std::size_t i = begin; i < end; ++i) {
        if (raw[i] != 'S' || !marker_boundary(raw, i, begin)) continue;
        if (auto n = step_marker_at(raw, i, end)) markers.emplace_back(i, *n);
    }
    for (std::size_t m = 0; m < markers.size(); ++m) {
        Step step;
        step.index = t.steps.size() + 1;
        step.declared_number = markers[m].second;
        step.char_span = {markers[m].first, m + 1 < markers.size() ? markers[m + 1].first : end};
        step.text = std::string(text::trim(raw.substr(step.char_span.begin, step.char_span.size())));
        step.segment = segment_index;
        t.steps.push_back(std::move(step));
    }
}

std::string clean_answer(std::string_view tail) {
    // Stop at the end of the line or at the first closing tag.
    std::size_t cut = tail.find('\n');
    for (const auto& t : kTags) cut = std::min(cut, tail.find(t.close));
    cut = std::min(cut, tail.find("</"));
    std::string_view ans = text::trim(tail.substr(0, cut));
    while (!ans.empty() && (ans.front() == ':' || text::is_space(ans.front()))) ans.remove_prefix(1);

    auto strip_trailing = [&] {
        while (!ans.empty()) {
            const char c = ans.back();
            if (c == '.' || c == '!' || c == '?' || c == ',' || c == ';' || c == ':' ||
                text::is_space(c)) {
                ans.remove_suffix(1);
            } else {
                break;
            }
        }
    };
    strip_trailing();
    if (ans.size() >= 2 && ans.front() == '{' && ans.back() == '}') {
        ans = text::trim(ans.substr(1, ans.size() - 2));
        strip_trailing();
    }
    if (ans.size() >= 4 && ans.substr(0, 2) == "**" && ans.substr(ans.size() - 2) == "**") {
        ans = text::trim(ans.substr(2, ans.size() - 4));
        strip_trailing();
    }
    return std::string(ans);
}

} // namespace

Trajectory segment_trajectory(std::string_view raw_text, ModelKind model_kind) {
    Trajectory t;
    t.raw_text = std::string(raw_text);
    t.model_kind = model_kind;
    const std::string_view raw = t.raw_text;
    const std::size_t n = raw.size();
    std::size_t pos = 0;

    // Thinking models often emit the deliberation without the opening tag.
    if (model_kind == ModelKind::Thinking) {
        const std::size_t close = raw.find("</think>");
        const std::size_t open = raw.find("<think>");
        if (close != std::string_view::npos && (open == std::string_view::npos || open > close)) {
            const std::size_t end = close + std::string_view("</think>").size();
            t.segments.push_back(make_segment(raw, SegmentKind::Think, {0, end}, {0, close}));
            pos = end;
        }
    }

    while (pos < n) {
        const OpenHit hit = next_open(raw, pos);
        if (hit.tag == nullptr) {
            t.segments.push_back(make_segment(raw, SegmentKind::Other, {pos, n}, {pos, n}));
            break;
        }
        if (hit.pos > pos) {
            t.segments.push_back(
                make_segment(raw, SegmentKind::Other, {pos, hit.pos}, {pos, hit.pos}));
        }
        const std::size_t content_begin = hit.pos + hit.tag->open.size();
        const std::size_t close = raw.find(hit.tag->close, content_begin);
        std::size_t content_end = n;
        std::size_t seg_end = n;
        if (hit.tag->kind == SegmentKind::Think && close != std::string_view::npos) {
            content_end = close;
            seg_end = close + hit.tag->close.size();
        } else {
            // An unclosed region ends where the next region opens, else at end of text.
            const OpenHit following = next_open(raw, content_begin);
            if (close != std::string_view::npos && close < following.pos) {
                content_end = close;
                seg_end = close + hit.tag->close.size();
            } else if (following.tag != nullptr) {
                content_end = seg_end = following.pos;
            }
        }
        t.segments.push_back(make_segment(raw, hit.tag->kind, {hit.pos, seg_end},
                                          {content_begin, content_end}));
        pos = seg_end;
    }

    for (std::size_t i = 0; i < t.segments.size(); ++i) {
        const SegmentKind k = t.segments[i].kind;
        if (k == SegmentKind::Thought || k == SegmentKind::Solution) extract_steps(t, i);
    }
    t.answer = extract_answer(t);
    return t;
}

std::optional<std::string> extract_answer(const Trajectory& trajectory) {
    const std::string_view raw = trajectory.raw_text;
    std::optional<std::size_t> best;
    std::size_t region_end = raw.size();
    bool any_solution = false;
    for (const auto& seg : trajectory.segments) {
        if (seg.kind != SegmentKind::Solution) continue;
        any_solution = true;
        const std::string_view content = raw.substr(seg.content_span.begin, seg.content_span.size());
        const std::size_t p = text::irfind(content, kAnswerPhrase);
        if (p != std::string_view::npos) {
            best = seg.content_span.begin + p;
            region_end = seg.content_span.end;
        }
    }
    if (!any_solution) {
        const std::size_t p = text::irfind(raw, kAnswerPhrase);
        if (p != std::string_view::npos) best = p;
    }
    if (!best) return std::nullopt;
    const std::size_t tail_begin = *best + kAnswerPhrase.size();
    std::string ans = clean_answer(raw.substr(tail_begin, region_end - tail_begin));
    if (text::trim(ans).empty()) return std::nullopt;
    return ans;
}

Trajectory assign_token_spans(Trajectory t,
                              const std::vector<std::pair<std::size_t, std::size_t>>& offsets) {
    const std::size_t n = t.raw_text.size();
    std::size_t expected = 0;
    for (std::size_t i = 0; i < offsets.size(); ++i) {
        const auto [b, e] = offsets[i];
        if (b != expected || e < b) {
            throw Error(ErrorCode::OffsetsMismatch,
                        "token " + std::to_string(i) + " does not continue the tiling at char " +
                            std::to_string(expected));
        }
        expected = e;
    }
    if (expected != n) {
        throw Error(ErrorCode::OffsetsMismatch, "token offsets cover " + std::to_string(expected) +
                                                    " of " + std::to_string(n) + " chars");
    }

    std::vector<std::size_t> starts;
    starts.reserve(offsets.size());
    for (const auto& o : offsets) starts.push_back(o.first);
    const std::size_t num_tokens = starts.size();
    auto first_at_or_after = [&](std::size_t ch) -> std::size_t {
        return static_cast<std::size_t>(std::lower_bound(starts.begin(), starts.end(), ch) -
                                        starts.begin());
    };

    for (std::size_t i = 0; i < t.segments.size(); ++i) {
        auto& seg = t.segments[i];
        const std::size_t b = first_at_or_after(seg.char_span.begin);
        const std::size_t e =
            i + 1 == t.segments.size() ? num_tokens : first_at_or_after(seg.char_span.end);
        seg.token_span = TokenSpan{b, std::max(b, e)};
    }
    for (auto& step : t.steps) {
        const std::size_t b = first_at_or_after(step.char_span.begin);
        const std::size_t e = first_at_or_after(step.char_span.end);
        step.token_span = TokenSpan{b, std::max(b, e)};
    }
    t.num_tokens = num_tokens;
    return t;
}

std::vector<std::pair<std::size_t, std::size_t>> whitespace_token_offsets(std::string_view s) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t i = 0;
    // Leading whitespace forms its own token so the tiling starts at 0.
    while (i < s.size() && text::is_space(s[i])) ++i;
    if (i > 0) out.emplace_back(0, i);
    while (i < s.size()) {
        const std::size_t b = i;
        while (i < s.size() && !text::is_space(s[i])) ++i;
        while (i < s.size() && text::is_space(s[i])) ++i;
        out.emplace_back(b, i);
    }
    return out;
}

} // namespace hopwise
