#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace softfreeze {

class SpillFile;

using Position = std::int64_t;
using Step = std::int64_t;

enum class Residency : std::uint8_t { Active, Frozen };

// Layout of one token's KV payload: layer-major, then head, then head_dim.
struct KvShape {
    std::size_t layers = 0;
    std::size_t heads = 0;
    std::size_t head_dim = 0;

    std::size_t per_token() const { return layers * heads * head_dim; }
    std::size_t offset(std::size_t layer, std::size_t head) const {
        return (layer * heads + head) * head_dim;
    }
    bool operator==(const KvShape&) const = default;
};

struct TokenRecord {
    Position position = 0;
    std::vector<double> keys;
    std::vector<double> values;
    Residency residency = Residency::Active;
    int freeze_timer = 0;
    // Step at which the most recent freeze episode began; -1 if never frozen.
    Step frozen_at = -1;
    // Strictly increasing steps at which the token was flagged low-importance.
    std::vector<Step> detection_log;
};

struct ActiveEntry {
    Position position;
    std::span<const double> keys;
    std::span<const double> values;
};

struct TokenKv {
    std::vector<double> keys;
    std::vector<double> values;
    bool operator==(const TokenKv&) const = default;
};

// Two-tier residency ledger over every token of a session. Tokens move between
// the active tier (visible to attention) and the frozen tier; nothing is ever
// destroyed except by an explicit truncate() during rewind.
class CacheLedger {
public:
    explicit CacheLedger(KvShape shape = {});
    ~CacheLedger();
    CacheLedger(CacheLedger&&) noexcept;
    CacheLedger& operator=(CacheLedger&&) noexcept;
    CacheLedger(const CacheLedger&) = delete;
    CacheLedger& operator=(const CacheLedger&) = delete;

    // Frozen payloads are written to `path` and released from memory until
    // restore. Must be called before any token is frozen.
    void enable_spill(const std::filesystem::path& path);
    bool spilling() const { return spill_ != nullptr; }

    // The sliding window of `window` most recent positions plus the first
    // `pinned` positions may never be frozen.
    void set_protection(std::int64_t window, std::int64_t pinned);
    bool is_protected(Position position) const;

    Position insert_token(TokenRecord record);
    void freeze(Position position, int duration);
    // Decrements every frozen timer; tokens reaching zero become active again.
    // Returned positions are ascending.
    std::vector<Position> tick_and_restore();
    // Immediate restore regardless of timer (used by recovery).
    void restore(Position position);

    void append_detection(Position position, Step step);
    // Drops log entries with step < min_step.
    void prune_detections(Position position, Step min_step);
    void clear_detections();

    // Removes every token at position >= new_size. All of them must be active.
    void truncate(std::size_t new_size);

    std::vector<ActiveEntry> active_view() const;
    std::vector<Position> active_positions() const;
    std::vector<Position> frozen_positions() const;

    const TokenRecord& token(Position position) const;
    // Full KV payload, read back from the spill file if necessary.
    TokenKv kv(Position position) const;

    const KvShape& shape() const { return shape_; }
    std::size_t size() const { return tokens_.size(); }
    std::size_t active_count() const { return tokens_.size() - frozen_count_; }
    std::size_t frozen_count() const { return frozen_count_; }
    Step step() const { return step_; }
    void advance_step() { ++step_; }

    std::uint64_t bytes_spilled() const { return bytes_spilled_; }
    std::uint64_t bytes_loaded() const { return bytes_loaded_; }

    // Throws InvariantError if conservation or record invariants are broken.
    void check_invariants() const;

private:
    TokenRecord& at(Position position);
    void restore_unchecked(TokenRecord& record);

    KvShape shape_;
    std::vector<TokenRecord> tokens_;
    std::size_t frozen_count_ = 0;
    Step step_ = 0;
    std::int64_t window_ = 0;
    std::int64_t pinned_ = 0;
    std::unique_ptr<SpillFile> spill_;
    // Spill-file offset for each position, or -1 if not yet written.
    std::vector<std::int64_t> spill_offsets_;
    std::uint64_t bytes_spilled_ = 0;
    std::uint64_t bytes_loaded_ = 0;
};

}  // namespace softfreeze
