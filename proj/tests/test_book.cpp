#include <gtest/gtest.h>

#include <cmath>

#include "lobsim/book.hpp"

using namespace lobsim;

namespace {

lob_snapshot make_snap(tick_t best_bid, std::vector<volume_t> bids, std::vector<volume_t> asks) {
    lob_snapshot s(static_cast<int>(bids.size()), dividing_price{best_bid});
    for (int i = 0; i < s.levels(); ++i) {
        s.set_bid(i, bids[static_cast<std::size_t>(i)]);
        s.set_ask(i, asks[static_cast<std::size_t>(i)]);
    }
    return s;
}

}  // namespace

TEST(Book, TickLayout) {
    // bid index 0 is the deepest level, ask index 0 the best ask
    lob_snapshot s(5, dividing_price{100});
    EXPECT_EQ(s.bid_tick(4), 100);
    EXPECT_EQ(s.bid_tick(0), 96);
    EXPECT_EQ(s.ask_tick(0), 101);
    EXPECT_EQ(s.ask_tick(4), 105);
    EXPECT_TRUE(s.contains_tick(96));
    EXPECT_TRUE(s.contains_tick(105));
    EXPECT_FALSE(s.contains_tick(95));
    EXPECT_FALSE(s.contains_tick(106));
}

TEST(Book, MidPriceBothBestOccupied) {
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {30, 0, 0, 0, 0});
    EXPECT_DOUBLE_EQ(mid_price(s), 100.5);
}

TEST(Book, MidPriceSkipsEmptyLevels) {
    // best bid level empty, next one occupied: k_b=2, k_a=1
    auto s = make_snap(100, {0, 0, 0, 5, 0}, {7, 0, 0, 0, 0});
    EXPECT_DOUBLE_EQ(mid_price(s), 100.0);
}

TEST(Book, MidPriceEmptySideThrows) {
    auto s = make_snap(100, {0, 0, 0, 0, 0}, {7, 0, 0, 0, 0});
    EXPECT_THROW(mid_price(s), sim_error);
}

TEST(Book, WeightedMidPrice) {
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {30, 0, 0, 0, 0});
    EXPECT_DOUBLE_EQ(weighted_mid_price(s), 100.75);
}

TEST(Book, WeightedMidMovesTowardHeavyAsk) {
    auto a = make_snap(100, {0, 0, 0, 0, 10}, {30, 0, 0, 0, 0});
    auto b = make_snap(100, {0, 0, 0, 0, 10}, {300, 0, 0, 0, 0});
    EXPECT_GT(weighted_mid_price(b), weighted_mid_price(a));
    EXPECT_LE(weighted_mid_price(b), 101.0);
    EXPECT_GE(weighted_mid_price(a), 100.0);
}

TEST(Book, WeightedMidEqualVolumesIsMid) {
    auto s = make_snap(100, {0, 0, 0, 0, 25}, {25, 0, 0, 0, 0});
    EXPECT_DOUBLE_EQ(weighted_mid_price(s), mid_price(s));
}

TEST(Book, Obi) {
    auto s = make_snap(100, {0, 0, 0, 0, 30}, {10, 0, 0, 0, 0});
    EXPECT_DOUBLE_EQ(order_book_imbalance(s), 0.5);
}

TEST(Book, ObiUsesLevelOneOnly) {
    // level-1 ticks are empty: OBI is 0 even though deeper levels hold volume
    auto s = make_snap(100, {0, 0, 0, 9, 0}, {0, 4, 0, 0, 0});
    EXPECT_DOUBLE_EQ(order_book_imbalance(s), 0.0);
}

TEST(Book, ObiBounds) {
    auto s = make_snap(100, {0, 0, 0, 0, 7}, {0, 3, 0, 0, 0});
    EXPECT_DOUBLE_EQ(order_book_imbalance(s), 1.0);
    auto t = make_snap(100, {0, 0, 0, 2, 0}, {11, 0, 0, 0, 0});
    EXPECT_DOUBLE_EQ(order_book_imbalance(t), -1.0);
}

TEST(Book, LogReturn) {
    EXPECT_NEAR(log_return(101.0, 100.0), 0.009950330853167877, 1e-12);
    EXPECT_DOUBLE_EQ(log_return(100.0, 100.0), 0.0);
    EXPECT_THROW(log_return(0.0, 100.0), sim_error);
    EXPECT_THROW(log_return(100.0, -1.0), sim_error);
}

TEST(Book, SignedVolumesSameAnchor) {
    auto after = make_snap(100, {1, 2, 3, 4, 5}, {6, 7, 8, 9, 10});
    auto sv = signed_volumes_after(dividing_price{100}, after);
    ASSERT_EQ(sv.values.size(), 10u);
    EXPECT_FALSE(sv.truncated);
    EXPECT_EQ(sv.values[0], -1);
    EXPECT_EQ(sv.values[4], -5);
    EXPECT_EQ(sv.values[5], 6);
    EXPECT_EQ(sv.values[9], 10);
}

TEST(Book, SignedVolumesAfterUpMove) {
    // price moved up one tick: the old best ask tick 101 is now the best bid
    // of the after book and must come out negative at the old anchor
    auto after = make_snap(101, {1, 2, 3, 4, 5}, {6, 7, 8, 9, 10});
    auto sv = signed_volumes_after(dividing_price{100}, after);
    ASSERT_EQ(sv.values.size(), 10u);
    // anchored window is 96..105; tick 101 sits at index 5
    EXPECT_EQ(sv.values[5], -5);
    EXPECT_EQ(sv.values[6], 6);
    // tick 96 fell out of the after window (which is 97..106)
    EXPECT_TRUE(sv.truncated);
    EXPECT_EQ(sv.values[0], 0);
}

TEST(Book, SignedVolumesNoMoveNotTruncated) {
    auto after = make_snap(100, {0, 0, 0, 0, 1}, {1, 0, 0, 0, 0});
    EXPECT_FALSE(signed_volumes_after(dividing_price{100}, after).truncated);
}

TEST(Book, NormalizeVolume) {
    EXPECT_DOUBLE_EQ(normalize_volume(10000.0), 1.0);
    EXPECT_DOUBLE_EQ(normalize_volume(-2500.0), -0.5);
    EXPECT_DOUBLE_EQ(normalize_volume(0.0), 0.0);
    EXPECT_DOUBLE_EQ(normalize_volume(volume_t{1}), 0.01);
}

TEST(Book, VolumeAtAndTotals) {
    auto s = make_snap(100, {1, 2, 3, 4, 5}, {6, 7, 8, 9, 10});
    EXPECT_EQ(s.volume_at(100), 5);
    EXPECT_EQ(s.volume_at(96), 1);
    EXPECT_EQ(s.volume_at(101), 6);
    EXPECT_EQ(s.volume_at(105), 10);
    EXPECT_EQ(s.volume_at(95), 0);
    EXPECT_EQ(s.total_bid_volume(), 15);
    EXPECT_EQ(s.total_ask_volume(), 40);
    EXPECT_EQ(s.total_volume(), 55);
}
