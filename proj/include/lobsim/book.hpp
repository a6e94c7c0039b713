#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "errors.hpp"

namespace lobsim {

// Prices are integer tick counts everywhere inside the library; the tick size
// only matters when importing or exporting decimal prices.
using tick_t = std::int64_t;
using volume_t = std::int64_t;

struct tick_size {
    std::int64_t num = 5;
    std::int64_t den = 1000;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
};

// Dividing price of a book. Every tick at or below `best_bid` belongs to the
// bid side, everything above to the ask side, so the pair (⌊p*⌋, ⌈p*⌉) is
// (best_bid, best_bid + 1).
struct dividing_price {
    tick_t best_bid = 0;

    tick_t floor_tick() const { return best_bid; }
    tick_t ceil_tick() const { return best_bid + 1; }

    friend bool operator==(const dividing_price& a, const dividing_price& b) {
        return a.best_bid == b.best_bid;
    }
};

/**
 * Centered order book snapshot with l levels per side.
 *
 * bid volume index 0 holds the deepest bid tick ⌊p*⌋−(l−1) and index l−1 the
 * tick ⌊p*⌋ itself; ask volume index 0 holds ⌈p*⌉ and index l−1 the deepest
 * ask tick ⌈p*⌉+(l−1). Volumes are non-negative resting quantities.
 */
class lob_snapshot {
  public:
    lob_snapshot() = default;

    lob_snapshot(int levels, dividing_price dividing)
        : levels_(levels), dividing_(dividing), bids_(levels, 0), asks_(levels, 0) {}

    int levels() const { return levels_; }
    dividing_price dividing() const { return dividing_; }
    void set_dividing(dividing_price d) { dividing_ = d; }

    volume_t bid(int i) const { return bids_[static_cast<std::size_t>(i)]; }
    volume_t ask(int i) const { return asks_[static_cast<std::size_t>(i)]; }
    void set_bid(int i, volume_t v) { bids_[static_cast<std::size_t>(i)] = v; }
    void set_ask(int i, volume_t v) { asks_[static_cast<std::size_t>(i)] = v; }

    const std::vector<volume_t>& bid_volumes() const { return bids_; }
    const std::vector<volume_t>& ask_volumes() const { return asks_; }

    // tick of a bid level index (0 = deepest) and of an ask level index (0 = best)
    tick_t bid_tick(int i) const { return dividing_.floor_tick() - (levels_ - 1 - i); }
    tick_t ask_tick(int i) const { return dividing_.ceil_tick() + i; }

    bool contains_tick(tick_t t) const {
        return t >= dividing_.floor_tick() - (levels_ - 1) && t <= dividing_.ceil_tick() + (levels_ - 1);
    }

    bool is_bid_tick(tick_t t) const { return t <= dividing_.floor_tick(); }

    // signed volume lookup by absolute tick; 0 when outside the window
    volume_t volume_at(tick_t t) const {
        if (!contains_tick(t)) return 0;
        if (is_bid_tick(t)) return bids_[static_cast<std::size_t>(t - bid_tick(0))];
        return asks_[static_cast<std::size_t>(t - ask_tick(0))];
    }

    void add_at(tick_t t, volume_t delta) {
        if (is_bid_tick(t)) {
            bids_[static_cast<std::size_t>(t - bid_tick(0))] += delta;
        } else {
            asks_[static_cast<std::size_t>(t - ask_tick(0))] += delta;
        }
    }

    volume_t total_bid_volume() const {
        volume_t s = 0;
        for (volume_t v : bids_) s += v;
        return s;
    }

    volume_t total_ask_volume() const {
        volume_t s = 0;
        for (volume_t v : asks_) s += v;
        return s;
    }

    volume_t total_volume() const { return total_bid_volume() + total_ask_volume(); }

    friend bool operator==(const lob_snapshot& a, const lob_snapshot& b) {
        return a.levels_ == b.levels_ && a.dividing_ == b.dividing_ && a.bids_ == b.bids_ &&
               a.asks_ == b.asks_;
    }

  private:
    int levels_ = 0;
    dividing_price dividing_{};
    std::vector<volume_t> bids_;
    std::vector<volume_t> asks_;
};

namespace detail {

// 1-based index of the first nonempty level counting away from the boundary;
// 0 when the whole side is empty.
inline int first_nonempty_bid(const lob_snapshot& s) {
    for (int k = 1; k <= s.levels(); ++k) {
        if (s.bid(s.levels() - k) > 0) return k;
    }
    return 0;
}

inline int first_nonempty_ask(const lob_snapshot& s) {
    for (int k = 1; k <= s.levels(); ++k) {
        if (s.ask(k - 1) > 0) return k;
    }
    return 0;
}

}  // namespace detail

// Mid price in tick units: average of the best nonempty bid and ask ticks.
inline double mid_price(const lob_snapshot& s) {
    const int kb = detail::first_nonempty_bid(s);
    const int ka = detail::first_nonempty_ask(s);
    if (kb == 0 || ka == 0) raise(errc::empty_side, "mid_price needs volume on both sides");
    const double bid = static_cast<double>(s.dividing().floor_tick() - (kb - 1));
    const double ask = static_cast<double>(s.dividing().ceil_tick() + (ka - 1));
    return 0.5 * (bid + ask);
}

// Volume-weighted mid price over the best nonempty level of each side. Grows
// toward the ask tick as ask volume grows and stays inside [best bid, best ask].
inline double weighted_mid_price(const lob_snapshot& s) {
    const int kb = detail::first_nonempty_bid(s);
    const int ka = detail::first_nonempty_ask(s);
    if (kb == 0 || ka == 0) raise(errc::empty_side, "weighted_mid_price needs volume on both sides");
    const double bid = static_cast<double>(s.dividing().floor_tick() - (kb - 1));
    const double ask = static_cast<double>(s.dividing().ceil_tick() + (ka - 1));
    const double vb = static_cast<double>(s.bid(s.levels() - kb));
    const double va = static_cast<double>(s.ask(ka - 1));
    return (bid * vb + ask * va) / (vb + va);
}

// Imbalance of the two level-1 volumes (at ⌊p*⌋ and ⌈p*⌉, occupied or not).
// Zero when both are empty.
inline double order_book_imbalance(const lob_snapshot& s) {
    const double vb = static_cast<double>(s.bid(s.levels() - 1));
    const double va = static_cast<double>(s.ask(0));
    const double denom = vb + va;
    if (denom == 0.0) return 0.0;
    return (vb - va) / denom;
}

inline double log_return(double p_now, double p_then) {
    if (p_now <= 0.0 || p_then <= 0.0) raise(errc::non_positive_price, "log_return");
    return std::log(p_now) - std::log(p_then);
}

// Signed volume vector of a snapshot re-centered on a fixed anchor boundary:
// bid-side volumes are negative, ask-side positive, and ticks that fell out
// of the anchored window are reported as zero with `truncated` set.
struct signed_volumes {
    dividing_price anchor{};
    std::vector<volume_t> values;  // index 0 = anchor floor tick − (l−1)
    bool truncated = false;

    tick_t tick_of(int i, int levels) const { return anchor.floor_tick() - (levels - 1) + i; }
};

inline signed_volumes signed_volumes_after(dividing_price anchor, const lob_snapshot& after) {
    const int l = after.levels();
    signed_volumes out;
    out.anchor = anchor;
    out.values.assign(static_cast<std::size_t>(2 * l), 0);
    for (int i = 0; i < 2 * l; ++i) {
        const tick_t t = anchor.floor_tick() - (l - 1) + i;
        if (!after.contains_tick(t)) {
            // dividing price moved by more than the window overlap allows
            out.truncated = true;
            continue;
        }
        const volume_t v = after.volume_at(t);
        out.values[static_cast<std::size_t>(i)] = after.is_bid_tick(t) ? -v : v;
    }
    return out;
}

// Square-root volume normalization used throughout the statistics battery.
inline double normalize_volume(double v) {
    const double s = v < 0.0 ? -1.0 : 1.0;
    return s * std::sqrt(std::abs(v)) / 100.0;
}

inline double normalize_volume(volume_t v) { return normalize_volume(static_cast<double>(v)); }

}  // namespace lobsim
