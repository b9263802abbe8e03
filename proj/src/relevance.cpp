#include "softfreeze/relevance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "softfreeze/errors.hpp"

namespace softfreeze {

ProtectedSet::ProtectedSet(std::int64_t total, std::int64_t window, std::int64_t pinned)
    : total_(total),
      window_begin_(std::max<std::int64_t>(total - window, 0)),
      pinned_(std::min(pinned, total)) {}

bool ProtectedSet::contains(Position position) const {
    return position < pinned_ || (position >= window_begin_ && position < total_);
}

std::vector<Position> ProtectedSet::positions() const {
    std::vector<Position> out;
    for (Position p = 0; p < std::min(pinned_, window_begin_); ++p) out.push_back(p);
    for (Position p = window_begin_; p < total_; ++p) out.push_back(p);
    return out;
}

std::vector<RelevanceScore> score_tokens(std::span<const double> query, const KvShape& shape,
                                         std::span<const ActiveEntry> active, ScaleMode mode) {
    if (shape.heads == 0 || shape.layers == 0 || shape.head_dim == 0) {
        throw InputError("score_tokens: empty KV shape");
    }
    if (query.size() != shape.per_token()) {
        throw InputError("score_tokens: query has " + std::to_string(query.size()) +
                         " components, expected " + std::to_string(shape.per_token()));
    }
    const double scale = mode == ScaleMode::Scaled
                             ? 1.0 / std::sqrt(static_cast<double>(shape.head_dim))
                             : 1.0;
    const double per_term = scale / static_cast<double>(shape.heads * shape.layers);

    std::vector<RelevanceScore> scores;
    scores.reserve(active.size());
    for (const auto& entry : active) {
        if (entry.keys.size() != shape.per_token()) {
            throw InputError("score_tokens: key of position " + std::to_string(entry.position) +
                             " has wrong dimension");
        }
        double sum = 0.0;
        for (std::size_t l = 0; l < shape.layers; ++l) {
            for (std::size_t h = 0; h < shape.heads; ++h) {
                const std::size_t off = shape.offset(l, h);
                double dot = 0.0;
                for (std::size_t i = 0; i < shape.head_dim; ++i) {
                    dot += query[off + i] * entry.keys[off + i];
                }
                sum += std::abs(dot);
            }
        }
        scores.push_back({entry.position, sum * per_term});
    }
    return scores;
}

std::vector<Position> flag_low_importance(std::span<const RelevanceScore> scores, double tau,
                                          const ProtectedSet& protected_positions) {
    std::vector<Position> flagged;
    for (const auto& s : scores) {
        if (s.score < tau && !protected_positions.contains(s.position)) {
            flagged.push_back(s.position);
        }
    }
    std::sort(flagged.begin(), flagged.end());
    return flagged;
}

}  // namespace softfreeze
