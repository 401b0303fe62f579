#include "fixtures.hpp"

#include "hopwise/error.hpp"
#include "hopwise/segmenter.hpp"

#include <gtest/gtest.h>

namespace hopwise {
namespace {

std::string concat(const Trajectory& t) {
    std::string out;
    for (const auto& s : t.segments) out += s.text;
    return out;
}

TEST(Segmenter, SplitsThoughtAndSolution) {
    const std::string raw =
        "<begin_of_thought>\nStep 1: a\n\nStep 2: b\n<end_of_thought>\n<begin_of_solution>\nStep 1: c\n"
        "Therefore, the answer is Paris.\n<end_of_solution>";
    const Trajectory t = segment_trajectory(raw, ModelKind::Instruct);
    EXPECT_EQ(concat(t), raw);
    ASSERT_EQ(t.steps.size(), 3u);
    EXPECT_EQ(t.steps[0].text, "Step 1: a");
    EXPECT_EQ(t.steps[2].declared_number, 1);
    EXPECT_EQ(t.steps[2].index, 3u);
    EXPECT_EQ(t.segments[t.steps[2].segment].kind, SegmentKind::Solution);
    EXPECT_EQ(t.answer, std::optional<std::string>("Paris"));
}

TEST(Segmenter, StepRunsToNextMarkerOrSegmentEnd) {
    const std::string raw = "<begin_of_thought>Step 1: x y\nStep 2: z<end_of_thought>";
    const Trajectory t = segment_trajectory(raw, ModelKind::Instruct);
    ASSERT_EQ(t.steps.size(), 2u);
    EXPECT_EQ(t.steps[0].text, "Step 1: x y");
    EXPECT_EQ(t.steps[1].text, "Step 2: z");
}

TEST(Segmenter, StepMarkerMustFollowWhitespace) {
    const Trajectory t = segment_trajectory("<begin_of_thought>noStep 1: x<end_of_thought>", ModelKind::Instruct);
    EXPECT_TRUE(t.steps.empty());
}

TEST(Segmenter, ThinkSegmentHasNoSteps) {
    const Trajectory t =
        segment_trajectory("<think>Step 1: hidden</think><begin_of_thought>Step 1: shown<end_of_thought>",
                           ModelKind::Thinking);
    ASSERT_EQ(t.steps.size(), 1u);
    EXPECT_EQ(t.steps[0].text, "Step 1: shown");
    EXPECT_TRUE(t.has_think());
}

TEST(Segmenter, TextOutsideTagsIsOther) {
    const Trajectory t = segment_trajectory("intro <begin_of_solution>x<end_of_solution> outro", ModelKind::Instruct);
    ASSERT_EQ(t.segments.size(), 3u);
    EXPECT_EQ(t.segments[0].kind, SegmentKind::Other);
    EXPECT_EQ(t.segments[1].kind, SegmentKind::Solution);
    EXPECT_EQ(t.segments[2].kind, SegmentKind::Other);
}

TEST(Segmenter, UnclosedSegmentEndsAtNextOpenTag) {
    const std::string raw = "<begin_of_thought>Step 1: a <begin_of_solution>Therefore, the answer is 3.";
    const Trajectory t = segment_trajectory(raw, ModelKind::Instruct);
    EXPECT_EQ(concat(t), raw);
    ASSERT_EQ(t.segments.size(), 2u);
    EXPECT_EQ(t.segments[0].kind, SegmentKind::Thought);
    EXPECT_EQ(t.segments[1].kind, SegmentKind::Solution);
    EXPECT_EQ(t.answer, std::optional<std::string>("3"));
}

TEST(Segmenter, AnswerFallsBackToWholeTextWithoutSolution) {
    const Trajectory t = segment_trajectory("Thinking... Therefore, the answer is 12 apples.", ModelKind::Instruct);
    EXPECT_EQ(t.answer, std::optional<std::string>("12 apples"));
    EXPECT_FALSE(segment_trajectory("no answer here", ModelKind::Instruct).answer.has_value());
}

TEST(Segmenter, LastAnswerPhraseWins) {
    const Trajectory t = segment_trajectory(
        "<begin_of_solution>Therefore, the answer is A. Actually, therefore, the answer is B.<end_of_solution>",
        ModelKind::Instruct);
    EXPECT_EQ(t.answer, std::optional<std::string>("B"));
}

TEST(Segmenter, FixtureTrajectories) {
    const Trajectory ok = segment_trajectory(testing::kFixtureAgeCorrect, ModelKind::Thinking);
    EXPECT_EQ(ok.steps.size(), 5u);
    EXPECT_EQ(ok.answer, std::optional<std::string>("80"));
    const Trajectory bad = segment_trajectory(testing::kFixtureAgeWrong, ModelKind::Thinking);
    EXPECT_EQ(bad.steps.size(), 7u);
    EXPECT_EQ(bad.answer, std::optional<std::string>("11 years"));
    const Trajectory chain = segment_trajectory(testing::kFixtureChain, ModelKind::Instruct);
    EXPECT_EQ(chain.answer, std::optional<std::string>("Vienna"));
}

TEST(TokenSpans, WhitespaceOffsetsTileText) {
    const std::string s = "  a bb\n c ";
    const auto offs = whitespace_token_offsets(s);
    ASSERT_FALSE(offs.empty());
    EXPECT_EQ(offs.front().first, 0u);
    EXPECT_EQ(offs.back().second, s.size());
    for (std::size_t i = 1; i < offs.size(); ++i) EXPECT_EQ(offs[i].first, offs[i - 1].second);
}

TEST(TokenSpans, TokensAttributedByStartCharacter) {
    const std::string raw = "<begin_of_thought>Step 1: a\nStep 2: b<end_of_thought>";
    const Trajectory t = testing::tokenized(raw, ModelKind::Instruct);
    ASSERT_TRUE(t.num_tokens.has_value());
    const auto offs = whitespace_token_offsets(raw);
    for (const auto& step : t.steps) {
        for (std::size_t k = step.token_span->begin; k < step.token_span->end; ++k) {
            EXPECT_TRUE(step.char_span.contains(offs[k].first));
        }
    }
    std::size_t covered = 0;
    for (const auto& seg : t.segments) covered += seg.token_span->size();
    EXPECT_EQ(covered, *t.num_tokens);
}

TEST(TokenSpans, RejectsOffsetsThatDoNotTile) {
    const Trajectory t = segment_trajectory("abc def", ModelKind::Instruct);
    for (const auto& offs : std::vector<std::vector<std::pair<std::size_t, std::size_t>>>{
             {{0, 3}}, {{0, 3}, {4, 7}}, {{0, 4}, {3, 7}}, {{0, 8}}}) {
        try {
            assign_token_spans(t, offs);
            ADD_FAILURE() << "accepted bad offsets";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::OffsetsMismatch);
        }
    }
}

TEST(Segmenter, FuzzedLayoutsReconstruct) {
    Rng rng(9);
    const std::vector<std::string> pieces = {"<think>", "</think>", "<begin_of_thought>", "<end_of_thought>",
                                             "<begin_of_solution>", "<end_of_solution>", "Step 4:", " Step 1: ",
                                             "\n", "text ", "Therefore, the answer is x."};
    for (int k = 0; k < 300; ++k) {
        std::string raw;
        for (std::size_t i = rng.index(20); i > 0; --i) raw += pieces[rng.index(pieces.size())];
        const Trajectory t = segment_trajectory(raw, ModelKind::Thinking);
        EXPECT_EQ(concat(t), raw);
        const Trajectory tok = testing::tokenized(raw, ModelKind::Thinking);
        EXPECT_EQ(tok.num_tokens.value_or(0), whitespace_token_offsets(raw).size());
    }
}

} // namespace
} // namespace hopwise
