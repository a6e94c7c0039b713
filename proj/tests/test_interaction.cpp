#include <gtest/gtest.h>

#include <functional>

#include "lobsim/interaction.hpp"

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

errc thrown_code(const std::function<void()>& f) {
    try {
        f();
    } catch (const sim_error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected a sim_error";
    return errc::bad_config;
}

}  // namespace

TEST(MarketOrder, BuyRevenueSpansLevels) {
    // buy 10 against asks 7@101, 3@102: revenue is minus the cash paid
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {7, 3, 0, 0, 0});
    auto r = apply_market_order(s, market_order{0, 10, aggressor_side::buy});
    EXPECT_EQ(r.revenue, -1013);
    EXPECT_EQ(r.snap.volume_at(101), 0);
    EXPECT_EQ(r.snap.volume_at(102), 0);
    ASSERT_EQ(r.consumed.size(), 2u);
    EXPECT_EQ(r.consumed[0].tick, 101);
    EXPECT_EQ(r.consumed[0].qty, 7);
    EXPECT_EQ(r.consumed[1].tick, 102);
    EXPECT_EQ(r.consumed[1].qty, 3);
}

TEST(MarketOrder, SellWalksBidsDownward) {
    auto s = make_snap(100, {0, 0, 5, 0, 4}, {7, 0, 0, 0, 0});
    auto r = apply_market_order(s, market_order{0, 6, aggressor_side::sell});
    // sells 4 @ 100 then 2 @ 98
    EXPECT_EQ(r.revenue, 100 * 4 + 98 * 2);
    EXPECT_EQ(r.snap.volume_at(100), 0);
    EXPECT_EQ(r.snap.volume_at(98), 3);
}

TEST(MarketOrder, InsufficientDepthThrows) {
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {7, 3, 0, 0, 0});
    EXPECT_EQ(thrown_code([&] { apply_market_order(s, market_order{0, 11, aggressor_side::buy}); }),
              errc::insufficient_depth);
}

TEST(MarketOrder, ZeroQtyIsNoop) {
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {7, 3, 0, 0, 0});
    auto r = apply_market_order(s, market_order{0, 0, aggressor_side::buy});
    EXPECT_TRUE(r.snap == s);
    EXPECT_EQ(r.revenue, 0);
    EXPECT_EQ(thrown_code([&] { apply_market_order(s, market_order{0, -1, aggressor_side::buy}); }),
              errc::non_positive_qty);
}

TEST(LimitOrder, AddsAgentVolume) {
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {7, 3, 0, 0, 0});
    agent_book book;
    auto r = apply_limit_order(s, limit_order{0, 100, 5, order_side::bid}, book);
    EXPECT_EQ(r.volume_at(100), 15);
    ASSERT_EQ(book.orders().size(), 1u);
    EXPECT_EQ(book.orders()[0].remaining, 5);
    EXPECT_EQ(book.orders()[0].price_tick, 100);
    EXPECT_EQ(book.orders()[0].level_volume_at_placement, 10);
    EXPECT_FALSE(book.orders()[0].first_at_level);
}

TEST(LimitOrder, FirstAtLevelWhenImprovingBest) {
    // ask side best occupied tick is 102; posting at empty 101 improves the touch
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {0, 3, 0, 0, 0});
    agent_book book;
    apply_limit_order(s, limit_order{0, 101, 2, order_side::ask}, book);
    EXPECT_TRUE(book.orders()[0].first_at_level);
}

TEST(LimitOrder, NotFirstWhenBehindOccupiedLevel) {
    // an empty level behind an occupied better level does not improve the touch
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {3, 0, 0, 0, 0});
    agent_book book;
    apply_limit_order(s, limit_order{0, 102, 2, order_side::ask}, book);
    EXPECT_FALSE(book.orders()[0].first_at_level);
}

TEST(LimitOrder, AgentRestingBlocksFirstAtLevel) {
    // an earlier agent order at a better tick occupies the touch already
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {0, 0, 3, 0, 0});
    agent_book book;
    apply_limit_order(s, limit_order{0, 101, 2, order_side::ask}, book);
    apply_limit_order(s, limit_order{0, 102, 2, order_side::ask}, book);
    EXPECT_TRUE(book.orders()[0].first_at_level);
    EXPECT_FALSE(book.orders()[1].first_at_level);
}

TEST(LimitOrder, BidSideFirstAtLevel) {
    auto s = make_snap(100, {0, 0, 9, 0, 0}, {7, 0, 0, 0, 0});
    agent_book book;
    // bids occupied at 98 only; posting at 99 or 100 improves, at 97 does not
    apply_limit_order(s, limit_order{0, 100, 1, order_side::bid}, book);
    EXPECT_TRUE(book.orders()[0].first_at_level);
    agent_book book2;
    apply_limit_order(s, limit_order{0, 97, 1, order_side::bid}, book2);
    EXPECT_FALSE(book2.orders()[0].first_at_level);
}

TEST(LimitOrder, CrossingRejected) {
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {7, 3, 0, 0, 0});
    agent_book book;
    EXPECT_EQ(thrown_code([&] { apply_limit_order(s, limit_order{0, 101, 5, order_side::bid}, book); }),
              errc::crossing_order);
    EXPECT_EQ(thrown_code([&] { apply_limit_order(s, limit_order{0, 100, 5, order_side::ask}, book); }),
              errc::crossing_order);
    EXPECT_TRUE(book.orders().empty());
}

TEST(LimitOrder, OutOfWindowRejected) {
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {7, 3, 0, 0, 0});
    agent_book book;
    EXPECT_EQ(thrown_code([&] { apply_limit_order(s, limit_order{0, 95, 5, order_side::bid}, book); }),
              errc::out_of_window);
    EXPECT_EQ(thrown_code([&] { apply_limit_order(s, limit_order{0, 106, 5, order_side::ask}, book); }),
              errc::out_of_window);
}

TEST(Cancellation, PartialThenFull) {
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {7, 3, 0, 0, 0});
    agent_book book;
    auto r = apply_limit_order(s, limit_order{0, 100, 5, order_side::bid}, book);
    auto id = book.orders()[0].id;
    r = apply_cancellation(r, cancellation{id, 2}, book);
    EXPECT_EQ(r.volume_at(100), 13);
    EXPECT_EQ(book.orders()[0].remaining, 3);
    r = apply_cancellation(r, cancellation{id, 3}, book);
    EXPECT_EQ(r.volume_at(100), 10);
    EXPECT_TRUE(book.orders().empty());
}

TEST(Cancellation, OvercancelAndUnknown) {
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {7, 3, 0, 0, 0});
    agent_book book;
    auto r = apply_limit_order(s, limit_order{0, 100, 5, order_side::bid}, book);
    auto id = book.orders()[0].id;
    EXPECT_EQ(thrown_code([&] { apply_cancellation(r, cancellation{id, 6}, book); }), errc::overcancel);
    EXPECT_EQ(thrown_code([&] { apply_cancellation(r, cancellation{id + 7, 1}, book); }),
              errc::unknown_order);
}

TEST(Action, OrderingCancelMarketLimit) {
    // cancel frees the agent's 4 lots at 101, the market order then consumes
    // the remaining 7@101 + 3@102, and the limit lands on the emptied touch
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {7, 3, 0, 0, 0});
    agent_book book;
    auto snap = apply_limit_order(s, limit_order{0, 101, 4, order_side::ask}, book);
    ASSERT_EQ(snap.volume_at(101), 11);

    agent_action act;
    act.cancellations.push_back(cancellation{book.orders()[0].id, 4});
    act.market = market_order{0, 10, aggressor_side::buy};
    act.limits.push_back(limit_order{0, 101, 2, order_side::ask});

    auto res = apply_action(snap, act, book);
    EXPECT_EQ(res.market_executed, 10);
    EXPECT_EQ(res.revenue, -1013);
    EXPECT_EQ(res.snap.volume_at(101), 2);
    ASSERT_EQ(book.orders().size(), 1u);
    EXPECT_TRUE(book.orders()[0].first_at_level);
}

TEST(Action, AtomicOnFailure) {
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {7, 3, 0, 0, 0});
    agent_book book;
    auto snap = apply_limit_order(s, limit_order{0, 99, 4, order_side::bid}, book);

    agent_action act;
    act.cancellations.push_back(cancellation{book.orders()[0].id, 4});
    act.market = market_order{0, 99, aggressor_side::buy};  // deeper than the book
    EXPECT_THROW(apply_action(snap, act, book), sim_error);
    // the already-applied cancellation must have been rolled back
    ASSERT_EQ(book.orders().size(), 1u);
    EXPECT_EQ(book.orders()[0].remaining, 4);
}

TEST(Action, EmptyActionIsNoop) {
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {7, 3, 0, 0, 0});
    agent_book book;
    agent_action act;
    EXPECT_TRUE(act.empty());
    auto res = apply_action(s, act, book);
    EXPECT_EQ(res.market_executed, 0);
    EXPECT_EQ(res.revenue, 0);
    EXPECT_TRUE(res.snap == s);
}

TEST(AgentBook, RestingTotals) {
    auto s = make_snap(100, {0, 0, 0, 0, 10}, {0, 3, 0, 0, 0});
    agent_book book;
    apply_limit_order(s, limit_order{0, 100, 5, order_side::bid}, book);
    apply_limit_order(s, limit_order{0, 100, 2, order_side::bid}, book);
    apply_limit_order(s, limit_order{0, 101, 1, order_side::ask}, book);
    EXPECT_EQ(book.resting_at(100, order_side::bid), 7);
    EXPECT_EQ(book.resting_at(101, order_side::ask), 1);
    EXPECT_EQ(book.total_resting(), 8);
}
