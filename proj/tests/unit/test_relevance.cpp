#include <gtest/gtest.h>

#include <cmath>

#include "softfreeze/errors.hpp"
#include "softfreeze/relevance.hpp"

using namespace softfreeze;

TEST(ScoreTokens, HandComputedTwoHeads) {
    const KvShape shape{1, 2, 2};
    const std::vector<double> q = {1.0, 2.0, -1.0, 0.5};
    const std::vector<double> k0 = {1.0, 1.0, 2.0, 2.0};   // head dots: 3, -1
    const std::vector<double> k1 = {-2.0, 0.0, 0.0, 4.0};  // head dots: -2, 2
    const std::vector<double> v(4, 0.0);
    const std::vector<ActiveEntry> active = {{0, k0, v}, {5, k1, v}};

    const auto raw = score_tokens(q, shape, active, ScaleMode::Raw);
    ASSERT_EQ(raw.size(), 2U);
    EXPECT_EQ(raw[0].position, 0);
    EXPECT_EQ(raw[1].position, 5);
    EXPECT_DOUBLE_EQ(raw[0].score, (3.0 + 1.0) / 2.0);
    EXPECT_DOUBLE_EQ(raw[1].score, (2.0 + 2.0) / 2.0);

    const auto scaled = score_tokens(q, shape, active);
    EXPECT_NEAR(scaled[0].score, 2.0 / std::sqrt(2.0), 1e-15);
}

TEST(ScoreTokens, AveragesOverLayers) {
    const KvShape shape{2, 1, 1};
    const std::vector<double> q = {2.0, 3.0};
    const std::vector<double> k = {1.0, -1.0};
    const std::vector<double> v(2, 0.0);
    const std::vector<ActiveEntry> active = {{0, k, v}};
    EXPECT_DOUBLE_EQ(score_tokens(q, shape, active, ScaleMode::Raw)[0].score, 2.5);
}

TEST(ScoreTokens, RejectsShapeMismatch) {
    const KvShape shape{1, 2, 2};
    const std::vector<double> q = {1.0, 2.0};
    const std::vector<double> k(4, 1.0);
    const std::vector<ActiveEntry> active = {{0, k, k}};
    EXPECT_THROW(score_tokens(q, shape, active), InputError);
}

TEST(ProtectedSet, WindowAndPinnedPrefix) {
    const ProtectedSet p(10, 3, 2);
    EXPECT_EQ(p.positions(), (std::vector<Position>{0, 1, 7, 8, 9}));
    EXPECT_FALSE(p.contains(6));
    EXPECT_TRUE(ProtectedSet(4, 32, 0).contains(0));
    EXPECT_TRUE(ProtectedSet(4, 0, 0).positions().empty());
}

TEST(FlagLowImportance, StrictThresholdAndProtection) {
    const std::vector<RelevanceScore> scores = {{0, 0.1}, {1, 0.5}, {2, 0.49}, {3, 0.0}, {4, 0.0}};
    const ProtectedSet guard(5, 1, 0);
    EXPECT_EQ(flag_low_importance(scores, 0.5, guard), (std::vector<Position>{0, 2, 3}));
    EXPECT_TRUE(flag_low_importance(scores, 0.0, guard).empty());
    EXPECT_TRUE(flag_low_importance(scores, -1.0, guard).empty());
    EXPECT_EQ(flag_low_importance(scores, std::numeric_limits<double>::infinity(), guard).size(), 4U);
}
