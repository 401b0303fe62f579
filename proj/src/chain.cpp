#include "hopwise/core.hpp"
#include "hopwise/error.hpp"
#include "hopwise/text.hpp"

#include <unordered_set>

namespace hopwise {

std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedChain: return "MalformedChain";
    case ErrorCode::OffsetsMismatch: return "OffsetsMismatch";
    case ErrorCode::JudgeUnparseable: return "JudgeUnparseable";
    case ErrorCode::GenerationUnparseable: return "GenerationUnparseable";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::EmptyChain: return "EmptyChain";
    case ErrorCode::EmptyPath: return "EmptyPath";
    case ErrorCode::MissingSignals: return "MissingSignals";
    case ErrorCode::NoTokenSpans: return "NoTokenSpans";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::AliasCycle: return "AliasCycle";
    case ErrorCode::UnknownSeed: return "UnknownSeed";
    case ErrorCode::NoPathFound: return "NoPathFound";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnscriptedRequest: return "UnscriptedRequest";
    case ErrorCode::ClientError: return "ClientError";
    case ErrorCode::DataError: return "DataError";
    }
    return "Unknown";
}

std::string_view to_string(ClientErrorKind kind) {
    switch (kind) {
    case ClientErrorKind::Transport: return "Transport";
    case ClientErrorKind::HttpStatus: return "HttpStatus";
    case ClientErrorKind::Timeout: return "Timeout";
    case ClientErrorKind::ExhaustedRetries: return "ExhaustedRetries";
    case ClientErrorKind::MalformedResponse: return "MalformedResponse";
    case ClientErrorKind::NetworkForbidden: return "NetworkForbidden";
    }
    return "Unknown";
}

bool Triple::well_formed() const {
    return !text::trim(subject).empty() && !text::trim(relation).empty() &&
           !text::trim(object).empty();
}

std::size_t estimate_tokens(std::string_view text) {
    return (text.size() + 3) / 4;
}

bool ReasoningPath::well_formed() const {
    if (relations.empty() || nodes.size() != relations.size() + 1) return false;
    if (!doc_ids.empty() && doc_ids.size() != relations.size()) return false;
    if (!reversed.empty() && reversed.size() != relations.size()) return false;
    for (const auto& n : nodes)
        if (text::trim(n).empty()) return false;
    for (const auto& r : relations)
        if (text::trim(r).empty()) return false;
    return true;
}

bool ReasoningPath::is_simple() const {
    std::unordered_set<std::string> seen;
    for (const auto& n : nodes)
        if (!seen.insert(n).second) return false;
    return true;
}

std::string_view to_string(Paradigm p) {
    switch (p) {
    case Paradigm::MultiHop: return "MultiHop";
    case Paradigm::Temporal: return "Temporal";
    case Paradigm::Causal: return "Causal";
    case Paradigm::Hypothetical: return "Hypothetical";
    }
    return "MultiHop";
}

Paradigm paradigm_from_string(std::string_view s) {
    const std::string n = text::casefold(s);
    if (n == "multihop" || n == "multi-hop") return Paradigm::MultiHop;
    if (n == "temporal") return Paradigm::Temporal;
    if (n == "causal") return Paradigm::Causal;
    if (n == "hypothetical") return Paradigm::Hypothetical;
    throw Error(ErrorCode::InvalidArgument, "unknown paradigm: " + std::string(s));
}

namespace {

class ChainParser {
public:
    explicit ChainParser(std::string_view text) : s_(text) {}

    ReasoningPath parse() {
        ReasoningPath path;
        skip_ws();
        path.nodes.push_back(bracketed('(', ')', "entity"));
        while (true) {
            skip_ws();
            if (pos_ == s_.size()) break;
            expect('-');
            skip_ws();
            path.relations.push_back(bracketed('[', ']', "relation"));
            skip_ws();
            expect('-');
            if (pos_ < s_.size() && s_[pos_] == '>') ++pos_;
            skip_ws();
            if (pos_ == s_.size()) fail("dangling arrow without target entity");
            path.nodes.push_back(bracketed('(', ')', "entity"));
        }
        if (path.relations.empty()) fail("chain needs at least one relation");
        return path;
    }

private:
    [[noreturn]] void fail(const std::string& why) const {
        throw Error(ErrorCode::MalformedChain,
                    "malformed chain at offset " + std::to_string(pos_) + ": " + why);
    }

    void skip_ws() {
        while (pos_ < s_.size() && text::is_space(s_[pos_])) ++pos_;
    }

    void expect(char c) {
        if (pos_ >= s_.size() || s_[pos_] != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    // Reads an open..close group, allowing nested balanced pairs of the same kind inside.
    std::string bracketed(char open, char close, const char* what) {
        expect(open);
        const std::size_t start = pos_;
        int depth = 1;
        while (pos_ < s_.size()) {
            const char c = s_[pos_];
            if (c == open) {
                ++depth;
            } else if (c == close) {
                if (--depth == 0) break;
            }
            ++pos_;
        }
        if (depth != 0) fail(std::string("unbalanced ") + what + " brackets");
        const std::string_view inner = text::trim(s_.substr(start, pos_ - start));
        ++pos_;
        if (inner.empty()) fail(std::string("empty ") + what);
        return std::string(inner);
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

} // namespace

ReasoningPath parse_gt_chain(std::string_view text) {
    return ChainParser(text).parse();
}

std::string render_gt_chain(const ReasoningPath& path) {
    std::string out;
    if (path.nodes.empty()) return out;
    out += '(' + path.nodes[0] + ')';
    for (std::size_t i = 0; i < path.relations.size() && i + 1 < path.nodes.size(); ++i) {
        out += "-[" + path.relations[i] + "]->(" + path.nodes[i + 1] + ')';
    }
    return out;
}

} // namespace hopwise
