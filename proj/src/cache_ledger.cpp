#include "softfreeze/cache_ledger.hpp"

#include <algorithm>
#include <string>

#include "softfreeze/errors.hpp"
#include "softfreeze/spill_file.hpp"

namespace softfreeze {

CacheLedger::CacheLedger(KvShape shape) : shape_(shape) {}
CacheLedger::~CacheLedger() = default;
CacheLedger::CacheLedger(CacheLedger&&) noexcept = default;
CacheLedger& CacheLedger::operator=(CacheLedger&&) noexcept = default;

void CacheLedger::enable_spill(const std::filesystem::path& path) {
    if (frozen_count_ != 0) {
        throw PolicyError("spill must be enabled before any token is frozen");
    }
    spill_ = std::make_unique<SpillFile>(path, shape_);
    spill_offsets_.assign(tokens_.size(), -1);
}

void CacheLedger::set_protection(std::int64_t window, std::int64_t pinned) {
    window_ = std::max<std::int64_t>(window, 0);
    pinned_ = std::max<std::int64_t>(pinned, 0);
}

bool CacheLedger::is_protected(Position position) const {
    const auto total = static_cast<std::int64_t>(tokens_.size());
    return position < pinned_ || position >= total - window_;
}

TokenRecord& CacheLedger::at(Position position) {
    if (position < 0 || position >= static_cast<Position>(tokens_.size())) {
        throw PolicyError("position " + std::to_string(position) + " is not in the ledger");
    }
    return tokens_[static_cast<std::size_t>(position)];
}

const TokenRecord& CacheLedger::token(Position position) const {
    return const_cast<CacheLedger*>(this)->at(position);
}

Position CacheLedger::insert_token(TokenRecord record) {
    if (record.residency != Residency::Active || record.freeze_timer != 0) {
        throw PolicyError("inserted token must be active with a zero timer");
    }
    if (record.keys.size() != shape_.per_token() || record.values.size() != shape_.per_token()) {
        throw ConfigError("inserted token payload has " + std::to_string(record.keys.size()) +
                          " keys, expected " + std::to_string(shape_.per_token()));
    }
    record.position = static_cast<Position>(tokens_.size());
    record.frozen_at = -1;
    record.detection_log.clear();
    tokens_.push_back(std::move(record));
    if (spill_) {
        spill_offsets_.push_back(-1);
    }
    return tokens_.back().position;
}

void CacheLedger::freeze(Position position, int duration) {
    TokenRecord& record = at(position);
    if (duration < 1) {
        throw PolicyError("freeze duration must be >= 1, got " + std::to_string(duration));
    }
    if (record.residency == Residency::Frozen) {
        throw PolicyError("position " + std::to_string(position) + " is already frozen");
    }
    if (is_protected(position)) {
        throw PolicyError("position " + std::to_string(position) + " is protected");
    }
    if (spill_) {
        auto& offset = spill_offsets_[static_cast<std::size_t>(position)];
        // Payload is immutable, so one record per position is enough.
        if (offset < 0) {
            offset = spill_->write(position, record.keys, record.values);
            bytes_spilled_ += spill_->record_bytes();
        }
        std::vector<double>().swap(record.keys);
        std::vector<double>().swap(record.values);
    }
    record.residency = Residency::Frozen;
    record.freeze_timer = duration;
    record.frozen_at = step_;
    ++frozen_count_;
}

void CacheLedger::restore_unchecked(TokenRecord& record) {
    if (spill_) {
        TokenKv kv = spill_->read(spill_offsets_[static_cast<std::size_t>(record.position)],
                                  record.position);
        record.keys = std::move(kv.keys);
        record.values = std::move(kv.values);
        bytes_loaded_ += spill_->record_bytes();
    }
    record.residency = Residency::Active;
    record.freeze_timer = 0;
    --frozen_count_;
}

std::vector<Position> CacheLedger::tick_and_restore() {
    std::vector<Position> restored;
    if (frozen_count_ == 0) {
        return restored;
    }
    for (auto& record : tokens_) {
        if (record.residency != Residency::Frozen) continue;
        if (--record.freeze_timer <= 0) {
            restore_unchecked(record);
            restored.push_back(record.position);
        }
    }
    return restored;
}

void CacheLedger::restore(Position position) {
    TokenRecord& record = at(position);
    if (record.residency != Residency::Frozen) {
        throw PolicyError("position " + std::to_string(position) + " is not frozen");
    }
    restore_unchecked(record);
}

void CacheLedger::append_detection(Position position, Step step) {
    TokenRecord& record = at(position);
    if (!record.detection_log.empty() && record.detection_log.back() >= step) {
        throw PolicyError("detection log for position " + std::to_string(position) +
                          " must be strictly increasing");
    }
    record.detection_log.push_back(step);
}

void CacheLedger::prune_detections(Position position, Step min_step) {
    auto& log = at(position).detection_log;
    log.erase(log.begin(), std::lower_bound(log.begin(), log.end(), min_step));
}

void CacheLedger::clear_detections() {
    for (auto& record : tokens_) {
        record.detection_log.clear();
    }
}

void CacheLedger::truncate(std::size_t new_size) {
    if (new_size >= tokens_.size()) {
        return;
    }
    for (std::size_t p = new_size; p < tokens_.size(); ++p) {
        if (tokens_[p].residency != Residency::Active) {
            throw PolicyError("truncate would drop frozen position " + std::to_string(p));
        }
    }
    tokens_.resize(new_size);
    if (spill_) {
        spill_offsets_.resize(new_size);
    }
}

std::vector<ActiveEntry> CacheLedger::active_view() const {
    std::vector<ActiveEntry> view;
    view.reserve(active_count());
    for (const auto& record : tokens_) {
        if (record.residency == Residency::Active) {
            view.push_back({record.position, record.keys, record.values});
        }
    }
    return view;
}

std::vector<Position> CacheLedger::active_positions() const {
    std::vector<Position> out;
    out.reserve(active_count());
    for (const auto& record : tokens_) {
        if (record.residency == Residency::Active) out.push_back(record.position);
    }
    return out;
}

std::vector<Position> CacheLedger::frozen_positions() const {
    std::vector<Position> out;
    out.reserve(frozen_count_);
    for (const auto& record : tokens_) {
        if (record.residency == Residency::Frozen) out.push_back(record.position);
    }
    return out;
}

TokenKv CacheLedger::kv(Position position) const {
    const TokenRecord& record = token(position);
    if (spill_ && record.residency == Residency::Frozen) {
        return spill_->read(spill_offsets_[static_cast<std::size_t>(position)], position);
    }
    return {record.keys, record.values};
}

void CacheLedger::check_invariants() const {
    std::size_t frozen = 0;
    for (std::size_t p = 0; p < tokens_.size(); ++p) {
        const auto& record = tokens_[p];
        const std::string where = "position " + std::to_string(p);
        if (record.position != static_cast<Position>(p)) {
            throw InvariantError(where + ": stored position " + std::to_string(record.position));
        }
        if (record.residency == Residency::Frozen) {
            ++frozen;
            if (record.freeze_timer < 1) {
                throw InvariantError(where + ": frozen with timer " +
                                     std::to_string(record.freeze_timer));
            }
        } else {
            if (record.freeze_timer != 0) {
                throw InvariantError(where + ": active with nonzero timer");
            }
            if (record.keys.size() != shape_.per_token() ||
                record.values.size() != shape_.per_token()) {
                throw InvariantError(where + ": active token is missing its payload");
            }
        }
        if (!std::is_sorted(record.detection_log.begin(), record.detection_log.end()) ||
            std::adjacent_find(record.detection_log.begin(), record.detection_log.end()) !=
                record.detection_log.end()) {
            throw InvariantError(where + ": detection log not strictly increasing");
        }
    }
    if (frozen != frozen_count_) {
        throw InvariantError("frozen count " + std::to_string(frozen_count_) + " but " +
                             std::to_string(frozen) + " tokens are frozen");
    }
}

}  // namespace softfreeze
