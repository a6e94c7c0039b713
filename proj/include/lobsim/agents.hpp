#pragma once

#include <cmath>
#include <cstdint>
#include <memory>

#include "book.hpp"
#include "interaction.hpp"

namespace lobsim {

// What a strategy sees besides the snapshot. The book pointer exposes the
// agent's own resting orders so strategies can cancel them by id.
struct agent_state {
    std::int64_t inventory = 0;
    std::int64_t cash = 0;  // tick·qty units
    int step = 0;
    const agent_book* book = nullptr;
};

inline volume_t round_half_away(double x) {
    return static_cast<volume_t>(x < 0.0 ? -std::floor(-x + 0.5) : std::floor(x + 0.5));
}

/**
 * Trading strategy u(Z_s, s). One instance per path; instances may be
 * stateful but are never shared across paths.
 *
 * next_action runs on steps 0..T_n−2, final_action on the last step (it
 * defaults to next_action). A market order returned from final_action is
 * clamped by the engine to the visible opposing depth instead of aborting
 * the path; the unexecuted remainder is recorded as shortfall.
 */
class strategy {
  public:
    virtual ~strategy() = default;

    virtual std::int64_t initial_inventory() const { return 0; }

    virtual agent_action next_action(const lob_snapshot& snap, const agent_state& st) = 0;

    virtual agent_action final_action(const lob_snapshot& snap, const agent_state& st) {
        return next_action(snap, st);
    }
};

class noop_strategy : public strategy {
  public:
    agent_action next_action(const lob_snapshot&, const agent_state&) override { return {}; }
};

namespace detail {

// child size under the earliest-steps remainder rule: steps 0..r−1 get one
// extra unit, so the total over child_steps steps is exactly the parent size
inline volume_t child_slice(volume_t parent, int child_steps, int s) {
    const volume_t base = parent / child_steps;
    const volume_t rem = parent % child_steps;
    return base + (s < static_cast<int>(rem) ? 1 : 0);
}

}  // namespace detail

// Splits a parent market order into equal child orders on engine steps
// 0..child_steps−1, i.e. the orders execute during transitions 1..child_steps.
class twap_market_liquidation : public strategy {
  public:
    twap_market_liquidation(volume_t parent, int child_steps = 30,
                            aggressor_side side = aggressor_side::sell)
        : parent_(parent), steps_(child_steps), side_(side) {
        if (parent < 0 || child_steps <= 0) raise(errc::bad_config, "twap parent/steps");
    }

    std::int64_t initial_inventory() const override {
        return side_ == aggressor_side::sell ? parent_ : -parent_;
    }

    agent_action next_action(const lob_snapshot&, const agent_state& st) override {
        agent_action a;
        if (parent_ == 0 || st.step >= steps_) return a;
        a.market.time_step = st.step;
        a.market.side = side_;
        a.market.qty = detail::child_slice(parent_, steps_, st.step);
        return a;
    }

  private:
    volume_t parent_;
    int steps_;
    aggressor_side side_;
};

// Keeps qty Q resting on the level-1 bid tick: on a price move it pulls the
// old-level volume and re-places at the new best bid, after fills it tops the
// order back up to Q.
class constant_best_bid_quote : public strategy {
  public:
    explicit constant_best_bid_quote(volume_t q) : q_(q) {
        if (q <= 0) raise(errc::bad_config, "quote size must be positive");
    }

    agent_action next_action(const lob_snapshot& snap, const agent_state& st) override {
        agent_action a;
        const tick_t target = snap.dividing().floor_tick();
        volume_t at_target = 0;
        for (const auto& o : st.book->orders()) {
            if (o.side == order_side::bid && o.price_tick == target) {
                at_target += o.remaining;
            } else {
                a.cancellations.push_back({o.id, o.remaining});
            }
        }
        if (at_target < q_)
            a.limits.push_back({st.step, target, q_ - at_target, order_side::bid});
        return a;
    }

  private:
    volume_t q_;
};

// Liquidation by quoting k·I_s on the level-1 ask (bid when the inventory is
// short); the last step cancels everything and unwinds with a market order.
class inventory_multiple_liquidation : public strategy {
  public:
    inventory_multiple_liquidation(double multiple, std::int64_t initial_inventory = 40)
        : k_(multiple), init_(initial_inventory) {
        if (multiple <= 0.0) raise(errc::bad_config, "order multiple must be positive");
    }

    std::int64_t initial_inventory() const override { return init_; }

    agent_action next_action(const lob_snapshot& snap, const agent_state& st) override {
        agent_action a;
        const order_side side = st.inventory >= 0 ? order_side::ask : order_side::bid;
        const volume_t want = round_half_away(k_ * std::abs(static_cast<double>(st.inventory)));
        const tick_t target = side == order_side::ask ? snap.dividing().ceil_tick()
                                                      : snap.dividing().floor_tick();
        // leave a quote alone when it already matches; otherwise start over
        const auto& orders = st.book->orders();
        if (orders.size() == 1 && orders[0].side == side && orders[0].price_tick == target &&
            orders[0].remaining == want) {
            return a;
        }
        for (const auto& o : orders) a.cancellations.push_back({o.id, o.remaining});
        if (want > 0) a.limits.push_back({st.step, target, want, side});
        return a;
    }

    agent_action final_action(const lob_snapshot&, const agent_state& st) override {
        agent_action a;
        for (const auto& o : st.book->orders()) a.cancellations.push_back({o.id, o.remaining});
        if (st.inventory != 0) {
            a.market.time_step = st.step;
            a.market.side = st.inventory > 0 ? aggressor_side::sell : aggressor_side::buy;
            a.market.qty = std::abs(st.inventory);
        }
        return a;
    }

  private:
    double k_;
    std::int64_t init_;
};

// Posts child limit orders at a fixed centered-book level: offset 0 is the
// level-1 tick of the chosen side, offset 1 one tick further out, and so on.
class constant_level_quote : public strategy {
  public:
    constant_level_quote(int level_offset, volume_t parent, int child_steps = 30,
                         order_side side = order_side::ask, int levels = 5)
        : offset_(level_offset), parent_(parent), steps_(child_steps), side_(side) {
        if (level_offset < 0 || level_offset >= levels)
            raise(errc::bad_config, "level offset outside the stored window");
        if (parent < 0 || child_steps <= 0) raise(errc::bad_config, "quote parent/steps");
    }

    agent_action next_action(const lob_snapshot& snap, const agent_state& st) override {
        agent_action a;
        if (parent_ == 0 || st.step >= steps_) return a;
        const volume_t q = detail::child_slice(parent_, steps_, st.step);
        if (q == 0) return a;
        const tick_t tick = side_ == order_side::ask ? snap.dividing().ceil_tick() + offset_
                                                     : snap.dividing().floor_tick() - offset_;
        a.limits.push_back({st.step, tick, q, side_});
        return a;
    }

  private:
    int offset_;
    volume_t parent_;
    int steps_;
    order_side side_;
};

}  // namespace lobsim
