#include "hopwise/clients.hpp"

#include "hopwise/error.hpp"
#include "hopwise/text.hpp"

#include <atomic>
#include <cmath>
#include <optional>

namespace hopwise {

namespace {
std::atomic<bool> g_network_forbidden{false};
}

void set_network_forbidden(bool forbidden) {
    g_network_forbidden.store(forbidden);
}

bool network_forbidden() {
    return g_network_forbidden.load();
}

std::string ChatRequest::joined_content() const {
    std::string out;
    for (const auto& m : messages) {
        if (!out.empty()) out.push_back('\n');
        out += m.content;
    }
    return out;
}

Verdict parse_verdict(std::string_view s) {
    std::optional<Verdict> last;
    std::size_t pos = s.find("[[");
    while (pos != std::string_view::npos) {
        const std::size_t close = s.find("]]", pos + 2);
        if (close == std::string_view::npos) break;
        const std::string word = text::casefold(text::trim(s.substr(pos + 2, close - pos - 2)));
        if (word == "yes") {
            last = Verdict::Yes;
        } else if (word == "no") {
            last = Verdict::No;
        }
        pos = s.find("[[", pos + 2);
    }
    if (!last) throw Error(ErrorCode::JudgeUnparseable, "no [[YES]]/[[NO]] verdict marker");
    return *last;
}

std::vector<double> l2_normalize(std::vector<double> v) {
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
        for (double& x : v) x /= norm;
    }
    return v;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch, "cosine of vectors with dims " +
                                                      std::to_string(a.size()) + " and " +
                                                      std::to_string(b.size()));
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

void ClientConfig::validate() const {
    if (max_retries < 0) throw Error(ErrorCode::InvalidArgument, "max_retries must be >= 0");
    if (max_concurrency < 1) throw Error(ErrorCode::InvalidArgument, "max_concurrency must be >= 1");
    if (base_url.empty()) throw Error(ErrorCode::InvalidArgument, "base_url is empty");
}

} // namespace hopwise
