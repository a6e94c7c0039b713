#include <gtest/gtest.h>

#include <cstdio>
#include <string>
#include <vector>

#include "lobsim/dataset.hpp"
#include "lobsim/events.hpp"

using namespace lobsim;

namespace {

lob_event ev(std::uint64_t seq, event_kind k, int side, tick_t tick, volume_t qty,
             volume_t lvl = 0, volume_t prio = 0) {
    lob_event e;
    e.seq = seq;
    e.kind = k;
    e.side = static_cast<std::uint8_t>(side);
    e.price_tick = tick;
    e.qty = qty;
    e.level_volume_at_exec = lvl;
    e.aggressor_priority_qty = prio;
    return e;
}

build_options two_level_options() {
    build_options opt;
    opt.levels = 2;
    opt.interval = 2;
    opt.initial_book = {{order_side::bid, 99, 30},
                        {order_side::bid, 100, 50},
                        {order_side::ask, 101, 40},
                        {order_side::ask, 102, 20}};
    return opt;
}

// 10 events, interval 2: transitions 0 and 1 are clean, the endpoint after
// event 6 has an empty ask side so transitions 2 and 3 are dropped, and the
// final pair yields sample 2 on a shifted boundary.
std::vector<lob_event> scripted_events() {
    return {
        ev(1, event_kind::limit_add, 0, 100, 10),
        ev(2, event_kind::trade, 1, 100, 5, 60),
        ev(3, event_kind::cancel, 1, 101, 40),
        ev(4, event_kind::limit_add, 1, 101, 25),
        ev(5, event_kind::trade, 0, 101, 25, 25),
        ev(6, event_kind::cancel, 1, 102, 20),
        ev(7, event_kind::limit_add, 1, 103, 15),
        ev(8, event_kind::limit_add, 0, 101, 10),
        ev(9, event_kind::trade, 1, 101, 1, 10),
        ev(10, event_kind::limit_add, 0, 100, 5),
    };
}

std::string temp_path(const char* name) {
    return std::string(::testing::TempDir()) + name;
}

}  // namespace

TEST(BookBuilder, BoundaryUsesRecency) {
    book_builder b;
    b.seed(order_side::bid, 100, 50);
    b.seed(order_side::ask, 103, 40);
    // never-active gap ticks fall to the ask side
    EXPECT_EQ(b.boundary().best_bid, 100);

    b.apply(ev(1, event_kind::limit_add, 0, 101, 10));
    b.apply(ev(2, event_kind::cancel, 0, 101, 10));
    // 101 last held bid volume, so the empty tick stays on the bid side
    EXPECT_EQ(b.boundary().best_bid, 101);

    b.apply(ev(3, event_kind::limit_add, 1, 101, 5));
    b.apply(ev(4, event_kind::cancel, 1, 101, 5));
    EXPECT_EQ(b.boundary().best_bid, 100);
}

TEST(BookBuilder, MalformedStreams) {
    book_builder b;
    b.seed(order_side::bid, 100, 50);
    b.seed(order_side::ask, 101, 40);
    EXPECT_THROW(b.apply(ev(1, event_kind::cancel, 0, 100, 60)), sim_error);

    book_builder c;
    c.seed(order_side::bid, 100, 50);
    c.seed(order_side::ask, 102, 40);
    EXPECT_THROW(c.apply(ev(1, event_kind::limit_add, 0, 102, 5)), sim_error);
}

TEST(DatasetBuild, ScriptedTransitions) {
    const auto opt = two_level_options();
    const std::vector<contract_stream> streams = {{"SYN1", scripted_events()}};
    const dataset ds = dataset::build(streams, opt);

    ASSERT_EQ(ds.size(), 3u);
    EXPECT_EQ(ds.levels(), 2);
    EXPECT_EQ(ds.contracts(), std::vector<std::string>{"SYN1"});

    // sample 0: seeded book -> after two events
    EXPECT_EQ(ds.rec(0).boundary_before, 100);
    EXPECT_EQ(ds.rec(0).boundary_after, 100);
    const lob_snapshot b0 = ds.snapshot_before(0);
    EXPECT_EQ(b0.bid(0), 30);  // tick 99
    EXPECT_EQ(b0.bid(1), 50);  // tick 100
    EXPECT_EQ(b0.ask(0), 40);  // tick 101
    EXPECT_EQ(b0.ask(1), 20);  // tick 102
    const lob_snapshot a0 = ds.snapshot_after(0);
    EXPECT_EQ(a0.bid(1), 55);
    EXPECT_EQ(a0.ask(0), 40);

    // sample 1 continues sample 0 (chained), then the chain breaks on the
    // one-sided endpoint
    EXPECT_TRUE(ds.chained(0));
    EXPECT_FALSE(ds.chained(1));
    EXPECT_FALSE(ds.chained(2));
    EXPECT_EQ(ds.snapshot_before(1), ds.snapshot_after(0));

    // sample 2 sits on the recovered book with the boundary at 101
    EXPECT_EQ(ds.rec(2).boundary_before, 101);
    EXPECT_EQ(ds.rec(2).boundary_after, 101);
    const lob_snapshot b2 = ds.snapshot_before(2);
    EXPECT_EQ(b2.bid(0), 55);  // tick 100
    EXPECT_EQ(b2.bid(1), 10);  // tick 101
    EXPECT_EQ(b2.ask(0), 0);   // tick 102
    EXPECT_EQ(b2.ask(1), 15);  // tick 103
    EXPECT_EQ(ds.increment(2), 0);

    // trades land on the sample whose interval executed them
    const auto t0 = ds.trades(0);
    ASSERT_EQ(t0.size(), 1u);
    EXPECT_EQ(t0[0].qty, 5);
    EXPECT_EQ(t0[0].price_tick, 100);
    EXPECT_EQ(t0[0].level_volume, 60);
    EXPECT_TRUE(t0[0].aggressor == aggressor_side::sell);
    EXPECT_TRUE(ds.trades(1).empty());  // the qty-25 trade sits in the dropped interval
    const auto t2 = ds.trades(2);
    ASSERT_EQ(t2.size(), 1u);
    EXPECT_EQ(t2[0].qty, 1);
}

TEST(DatasetBuild, NonMonotoneSeqRejected) {
    auto events = scripted_events();
    events[3].seq = 2;
    const std::vector<contract_stream> streams = {{"SYN1", events}};
    EXPECT_THROW(dataset::build(streams, two_level_options()), sim_error);
}

TEST(DatasetBuild, StreamSourcesMatchVectorBuild) {
    const auto opt = two_level_options();
    const auto events = scripted_events();
    const dataset a = dataset::build({{"SYN1", events}}, opt);

    std::size_t pos = 0;
    std::vector<stream_source> sources;
    sources.push_back({"SYN1", [&](lob_event& e) {
                           if (pos >= events.size()) return false;
                           e = events[pos++];
                           return true;
                       }});
    const dataset b = dataset::build_sources(sources, opt);

    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a.rec(i).boundary_before, b.rec(i).boundary_before);
        EXPECT_EQ(a.rec(i).boundary_after, b.rec(i).boundary_after);
        EXPECT_EQ(a.snapshot_after(i), b.snapshot_after(i));
        EXPECT_EQ(a.trades(i).size(), b.trades(i).size());
    }
}

TEST(DatasetBuild, SecondStreamNeverChainsIntoFirst) {
    const auto opt = two_level_options();
    const auto events = scripted_events();
    const dataset ds = dataset::build({{"SYN1", events}, {"SYN2", events}}, opt);
    ASSERT_EQ(ds.size(), 6u);
    EXPECT_EQ(ds.contracts().size(), 2u);
    EXPECT_FALSE(ds.chained(2));  // last sample of stream 0
    EXPECT_TRUE(ds.chained(3));
    EXPECT_EQ(ds.rec(3).stream_id, 1u);
}

TEST(DatasetBuild, SaveLoadRoundTrip) {
    const auto opt = two_level_options();
    const dataset ds = dataset::build({{"SYN1", scripted_events()}}, opt);
    const std::string path = temp_path("roundtrip.lobd");
    ds.save(path);
    const dataset back = dataset::load(path);

    ASSERT_EQ(back.size(), ds.size());
    EXPECT_EQ(back.levels(), ds.levels());
    EXPECT_EQ(back.interval(), ds.interval());
    EXPECT_EQ(back.contracts(), ds.contracts());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        EXPECT_EQ(back.rec(i).boundary_before, ds.rec(i).boundary_before);
        EXPECT_EQ(back.rec(i).chained, ds.rec(i).chained);
        EXPECT_EQ(back.snapshot_before(i), ds.snapshot_before(i));
        EXPECT_EQ(back.snapshot_after(i), ds.snapshot_after(i));
        ASSERT_EQ(back.trades(i).size(), ds.trades(i).size());
        for (std::size_t t = 0; t < ds.trades(i).size(); ++t)
            EXPECT_EQ(back.trades(i)[t].qty, ds.trades(i)[t].qty);
    }
    std::remove(path.c_str());
}

TEST(DatasetBuild, SplitIndexFloors) {
    EXPECT_EQ(split_index(10, 0.8), 8u);
    EXPECT_EQ(split_index(7, 0.5), 3u);
    EXPECT_EQ(split_index(0, 0.8), 0u);
    EXPECT_THROW(split_index(10, 1.5), sim_error);
}

TEST(EventsCsv, RoundTrip) {
    const auto events = scripted_events();
    const std::string path = temp_path("events.csv");
    write_events_csv(path, events);
    const auto back = read_events_csv(path);
    ASSERT_EQ(back.size(), events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        EXPECT_EQ(back[i].seq, events[i].seq);
        EXPECT_EQ(back[i].kind, events[i].kind);
        EXPECT_EQ(back[i].side, events[i].side);
        EXPECT_EQ(back[i].price_tick, events[i].price_tick);
        EXPECT_EQ(back[i].qty, events[i].qty);
        EXPECT_EQ(back[i].level_volume_at_exec, events[i].level_volume_at_exec);
    }
    std::remove(path.c_str());
}
