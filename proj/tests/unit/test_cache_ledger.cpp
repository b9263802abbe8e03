#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "softfreeze/cache_ledger.hpp"
#include "softfreeze/errors.hpp"
#include "softfreeze/spill_file.hpp"

using namespace softfreeze;
namespace fs = std::filesystem;

namespace {

const KvShape kShape{2, 2, 3};

TokenRecord make_record(double seed) {
    TokenRecord r;
    for (std::size_t i = 0; i < kShape.per_token(); ++i) {
        r.keys.push_back(seed + 0.1 * static_cast<double>(i));
        r.values.push_back(-seed - 0.01 * static_cast<double>(i));
    }
    return r;
}

CacheLedger filled(std::size_t n) {
    CacheLedger ledger(kShape);
    ledger.set_protection(0, 0);
    for (std::size_t i = 0; i < n; ++i) ledger.insert_token(make_record(static_cast<double>(i)));
    return ledger;
}

}  // namespace

TEST(CacheLedger, InsertAssignsPositions) {
    CacheLedger ledger = filled(3);
    EXPECT_EQ(ledger.size(), 3U);
    EXPECT_EQ(ledger.active_count(), 3U);
    EXPECT_EQ(ledger.token(2).position, 2);
    EXPECT_THROW(ledger.token(3), std::exception);
}

TEST(CacheLedger, InsertRejectsBadRecords) {
    CacheLedger ledger(kShape);
    TokenRecord wrong;
    wrong.keys.resize(5);
    wrong.values.resize(5);
    EXPECT_THROW(ledger.insert_token(wrong), ConfigError);
    TokenRecord frozen = make_record(1);
    frozen.residency = Residency::Frozen;
    EXPECT_THROW(ledger.insert_token(frozen), PolicyError);
}

TEST(CacheLedger, FreezeTickRestore) {
    CacheLedger ledger = filled(4);
    ledger.freeze(1, 2);
    ledger.freeze(3, 1);
    EXPECT_EQ(ledger.frozen_count(), 2U);
    EXPECT_EQ(ledger.active_positions(), (std::vector<Position>{0, 2}));
    EXPECT_EQ(ledger.tick_and_restore(), (std::vector<Position>{3}));
    EXPECT_EQ(ledger.token(1).freeze_timer, 1);
    EXPECT_EQ(ledger.tick_and_restore(), (std::vector<Position>{1}));
    EXPECT_EQ(ledger.frozen_count(), 0U);
    EXPECT_TRUE(ledger.tick_and_restore().empty());
    ledger.check_invariants();
}

TEST(CacheLedger, FreezeErrors) {
    CacheLedger ledger = filled(4);
    EXPECT_THROW(ledger.freeze(0, 0), PolicyError);
    ledger.freeze(0, 3);
    EXPECT_THROW(ledger.freeze(0, 1), PolicyError);
    ledger.set_protection(2, 1);
    EXPECT_TRUE(ledger.is_protected(3));
    EXPECT_TRUE(ledger.is_protected(0));
    EXPECT_FALSE(ledger.is_protected(1));
    EXPECT_THROW(ledger.freeze(3, 1), PolicyError);
}

TEST(CacheLedger, ActiveViewSkipsFrozenAndKeepsOrder) {
    CacheLedger ledger = filled(5);
    ledger.freeze(1, 1);
    ledger.freeze(3, 1);
    const auto view = ledger.active_view();
    ASSERT_EQ(view.size(), 3U);
    EXPECT_EQ(view[0].position, 0);
    EXPECT_EQ(view[1].position, 2);
    EXPECT_EQ(view[2].position, 4);
    EXPECT_DOUBLE_EQ(view[1].keys[0], 2.0);
}

TEST(CacheLedger, FreezeRestoreKeepsPayload) {
    CacheLedger ledger = filled(3);
    const TokenKv before = ledger.kv(1);
    ledger.freeze(1, 1);
    EXPECT_EQ(ledger.kv(1), before);
    ledger.tick_and_restore();
    EXPECT_EQ(ledger.kv(1), before);
}

TEST(CacheLedger, DetectionLogMustIncrease) {
    CacheLedger ledger = filled(1);
    ledger.append_detection(0, 3);
    EXPECT_THROW(ledger.append_detection(0, 3), PolicyError);
    ledger.append_detection(0, 7);
    ledger.prune_detections(0, 4);
    EXPECT_EQ(ledger.token(0).detection_log, (std::vector<Step>{7}));
    ledger.clear_detections();
    EXPECT_TRUE(ledger.token(0).detection_log.empty());
}

TEST(CacheLedger, TruncateOnlyActiveSuffix) {
    CacheLedger ledger = filled(5);
    ledger.freeze(1, 2);
    ledger.truncate(3);
    EXPECT_EQ(ledger.size(), 3U);
    EXPECT_EQ(ledger.frozen_count(), 1U);
    ledger.freeze(2, 1);
    EXPECT_THROW(ledger.truncate(2), PolicyError);
}

TEST(CacheLedger, SpillRoundTripIsByteExact) {
    const fs::path path = fs::temp_directory_path() / "softfreeze_ledger_spill.bin";
    CacheLedger ledger = filled(4);
    ledger.enable_spill(path);
    const TokenKv before = ledger.kv(2);
    ledger.freeze(2, 1);
    EXPECT_TRUE(ledger.token(2).keys.empty());
    EXPECT_EQ(ledger.kv(2), before);
    ledger.tick_and_restore();
    EXPECT_EQ(ledger.token(2).keys, before.keys);
    EXPECT_EQ(ledger.token(2).values, before.values);
    // A second freeze reuses the record already on disk.
    const std::uint64_t written = ledger.bytes_spilled();
    ledger.freeze(2, 1);
    EXPECT_EQ(ledger.bytes_spilled(), written);
    ledger.tick_and_restore();
    EXPECT_EQ(ledger.kv(2), before);
    EXPECT_EQ(SpillFile::read_header(path), kShape);
    const auto record = sizeof(std::uint64_t) + 2 * kShape.per_token() * sizeof(double);
    EXPECT_EQ(fs::file_size(path), SpillFile::kHeaderBytes + record);
    fs::remove(path);
}

TEST(SpillFile, HeaderIsLittleEndian) {
    const fs::path path = fs::temp_directory_path() / "softfreeze_spill_header.bin";
    {
        SpillFile file(path, kShape);
        const TokenRecord r = make_record(1.5);
        EXPECT_EQ(file.write(7, r.keys, r.values), static_cast<std::int64_t>(SpillFile::kHeaderBytes));
        EXPECT_THROW(file.read(static_cast<std::int64_t>(SpillFile::kHeaderBytes), 8), InvariantError);
    }
    std::ifstream in(path, std::ios::binary);
    unsigned char header[20];
    in.read(reinterpret_cast<char*>(header), 20);
    EXPECT_EQ(std::string(reinterpret_cast<char*>(header), 4), "SFKV");
    EXPECT_EQ(header[4], 1);
    EXPECT_EQ(header[8], 3);   // head_dim
    EXPECT_EQ(header[12], 2);  // layers
    EXPECT_EQ(header[16], 2);  // heads
    fs::remove(path);
}
