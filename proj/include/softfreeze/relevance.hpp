#pragma once

#include <span>
#include <vector>

#include "softfreeze/cache_ledger.hpp"

namespace softfreeze {

enum class ScaleMode {
    Scaled,  // |q . k| / sqrt(head_dim)
    Raw,     // |q . k|
};

struct RelevanceScore {
    Position position;
    double score;
};

// Positions that may not be flagged: the first `pinned` positions and the
// `window` most recent ones.
class ProtectedSet {
public:
    ProtectedSet() = default;
    ProtectedSet(std::int64_t total, std::int64_t window, std::int64_t pinned);

    bool contains(Position position) const;
    std::vector<Position> positions() const;

private:
    std::int64_t total_ = 0;
    std::int64_t window_begin_ = 0;
    std::int64_t pinned_ = 0;
};

// Head-averaged absolute query-key interaction for every entry of `active`.
// `query` holds one head_dim vector per (layer, head) in KvShape order; with
// several layers the per-layer scores are averaged.
std::vector<RelevanceScore> score_tokens(std::span<const double> query, const KvShape& shape,
                                         std::span<const ActiveEntry> active,
                                         ScaleMode mode = ScaleMode::Scaled);

// Positions with score strictly below tau that are not protected, ascending.
std::vector<Position> flag_low_importance(std::span<const RelevanceScore> scores, double tau,
                                          const ProtectedSet& protected_positions);

}  // namespace softfreeze
