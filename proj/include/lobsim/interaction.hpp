#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "book.hpp"
#include "errors.hpp"

namespace lobsim {

enum class order_side : std::uint8_t { bid, ask };
enum class aggressor_side : std::uint8_t { buy, sell };

// side of the book an aggressor consumes
inline order_side opposing(aggressor_side a) {
    return a == aggressor_side::buy ? order_side::ask : order_side::bid;
}

struct limit_order {
    int time_step = 0;
    tick_t price_tick = 0;
    volume_t qty = 0;
    order_side side = order_side::bid;
};

struct market_order {
    int time_step = 0;
    volume_t qty = 0;  // 0 means no market order this step
    aggressor_side side = aggressor_side::buy;
};

struct cancellation {
    std::uint64_t order_ref = 0;
    volume_t qty = 0;
};

struct agent_action {
    std::vector<cancellation> cancellations;
    market_order market{};
    std::vector<limit_order> limits;

    bool empty() const { return cancellations.empty() && market.qty == 0 && limits.empty(); }
};

// One live agent limit order. `level_volume_at_placement` and the
// first-at-level flag feed the Allocation priority rule.
struct agent_order {
    std::uint64_t id = 0;
    order_side side = order_side::bid;
    tick_t price_tick = 0;
    volume_t remaining = 0;
    volume_t level_volume_at_placement = 0;
    bool first_at_level = false;
};

// Per-path registry of the agent's resting orders. Never shared across paths.
class agent_book {
  public:
    const std::vector<agent_order>& orders() const { return orders_; }
    bool empty() const { return orders_.empty(); }

    agent_order* find(std::uint64_t id) {
        for (auto& o : orders_) {
            if (o.id == id) return &o;
        }
        return nullptr;
    }

    std::uint64_t add(order_side side, tick_t tick, volume_t qty, volume_t level_volume,
                      bool first_at_level) {
        agent_order o;
        o.id = next_id_++;
        o.side = side;
        o.price_tick = tick;
        o.remaining = qty;
        o.level_volume_at_placement = level_volume;
        o.first_at_level = first_at_level;
        orders_.push_back(o);
        return o.id;
    }

    void remove(std::uint64_t id) {
        for (std::size_t i = 0; i < orders_.size(); ++i) {
            if (orders_[i].id == id) {
                orders_.erase(orders_.begin() + static_cast<std::ptrdiff_t>(i));
                return;
            }
        }
    }

    volume_t resting_at(tick_t tick, order_side side) const {
        volume_t s = 0;
        for (const auto& o : orders_) {
            if (o.price_tick == tick && o.side == side) s += o.remaining;
        }
        return s;
    }

    volume_t total_resting() const {
        volume_t s = 0;
        for (const auto& o : orders_) s += o.remaining;
        return s;
    }

    std::vector<agent_order>& mutable_orders() { return orders_; }

  private:
    std::vector<agent_order> orders_;
    std::uint64_t next_id_ = 1;
};

// g_C: remove cancelled volume from the book and the agent order.
inline lob_snapshot apply_cancellation(const lob_snapshot& snap, const cancellation& c,
                                       agent_book& book) {
    if (c.qty <= 0) raise(errc::non_positive_qty, "cancellation qty must be positive");
    agent_order* o = book.find(c.order_ref);
    if (o == nullptr) raise(errc::unknown_order, "cancellation references no active order");
    if (c.qty > o->remaining) raise(errc::overcancel, "cancellation exceeds remaining volume");
    if (!snap.contains_tick(o->price_tick))
        raise(errc::out_of_window, "cancelled order rests outside the snapshot window");

    lob_snapshot out = snap;
    out.add_at(o->price_tick, -c.qty);
    o->remaining -= c.qty;
    if (o->remaining == 0) book.remove(o->id);
    return out;
}

struct depth_fill {
    tick_t tick = 0;
    volume_t qty = 0;
};

struct market_result {
    lob_snapshot snap;
    std::int64_t revenue = 0;  // tick·qty units, ≤ 0 for buys, ≥ 0 for sells
    std::vector<depth_fill> consumed;
};

// g_M: walk the opposing side best-first. Buy revenue is minus the cash paid
// for the consumed volume; sells mirror the sign.
inline market_result apply_market_order(const lob_snapshot& snap, const market_order& y) {
    market_result res{snap, 0, {}};
    if (y.qty == 0) return res;
    if (y.qty < 0) raise(errc::non_positive_qty, "market order qty must be non-negative");

    const int l = snap.levels();
    volume_t left = y.qty;
    if (y.side == aggressor_side::buy) {
        for (int i = 0; i < l && left > 0; ++i) {
            const volume_t take = std::min(left, res.snap.ask(i));
            if (take > 0) {
                res.snap.set_ask(i, res.snap.ask(i) - take);
                res.revenue -= res.snap.ask_tick(i) * take;
                res.consumed.push_back({res.snap.ask_tick(i), take});
                left -= take;
            }
        }
    } else {
        for (int i = l - 1; i >= 0 && left > 0; --i) {
            const volume_t take = std::min(left, res.snap.bid(i));
            if (take > 0) {
                res.snap.set_bid(i, res.snap.bid(i) - take);
                res.revenue += res.snap.bid_tick(i) * take;
                res.consumed.push_back({res.snap.bid_tick(i), take});
                left -= take;
            }
        }
    }
    if (left > 0) raise(errc::insufficient_depth, "market order exceeds visible opposing volume");
    return res;
}

// g_L: add resting volume and register the order in the agent book. An order
// placed on an empty tick that improves the side's best occupied tick is the
// aggressing order at a newly established level.
inline lob_snapshot apply_limit_order(const lob_snapshot& snap, const limit_order& x,
                                      agent_book& book) {
    if (x.qty <= 0) raise(errc::non_positive_qty, "limit order qty must be positive");
    if (x.side == order_side::bid && x.price_tick > snap.dividing().floor_tick())
        raise(errc::crossing_order, "bid above dividing price");
    if (x.side == order_side::ask && x.price_tick < snap.dividing().ceil_tick())
        raise(errc::crossing_order, "ask below dividing price");
    if (!snap.contains_tick(x.price_tick))
        raise(errc::out_of_window, "limit order outside the stored levels");

    const volume_t level_volume = snap.volume_at(x.price_tick);
    bool improves = false;
    if (level_volume == 0) {
        if (x.side == order_side::bid) {
            improves = true;
            for (tick_t t = x.price_tick + 1; t <= snap.dividing().floor_tick(); ++t) {
                if (snap.volume_at(t) > 0 || book.resting_at(t, order_side::bid) > 0) improves = false;
            }
        } else {
            improves = true;
            for (tick_t t = snap.dividing().ceil_tick(); t < x.price_tick; ++t) {
                if (snap.volume_at(t) > 0 || book.resting_at(t, order_side::ask) > 0) improves = false;
            }
        }
    }

    lob_snapshot out = snap;
    out.add_at(x.price_tick, x.qty);
    book.add(x.side, x.price_tick, x.qty, level_volume, improves);
    return out;
}

struct action_result {
    lob_snapshot snap;
    std::int64_t revenue = 0;
    volume_t market_executed = 0;
    std::vector<depth_fill> consumed;
};

// Fixed hierarchy g_L ∘ g_M ∘ g_C. Atomic: on any component error the inputs
// are left untouched (the book is restored from a copy).
inline action_result apply_action(const lob_snapshot& snap, const agent_action& a,
                                  agent_book& book) {
    agent_book backup = book;
    try {
        lob_snapshot cur = snap;
        for (const auto& c : a.cancellations) cur = apply_cancellation(cur, c, book);
        std::int64_t revenue = 0;
        volume_t executed = 0;
        std::vector<depth_fill> consumed;
        if (a.market.qty > 0) {
            market_result m = apply_market_order(cur, a.market);
            cur = std::move(m.snap);
            revenue = m.revenue;
            executed = a.market.qty;
            consumed = std::move(m.consumed);
        }
        for (const auto& x : a.limits) cur = apply_limit_order(cur, x, book);
        return {std::move(cur), revenue, executed, std::move(consumed)};
    } catch (...) {
        book = std::move(backup);
        throw;
    }
}

}  // namespace lobsim
