#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "book.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "events.hpp"
#include "rng.hpp"

namespace lobsim {

/**
 * Block-structured synthetic order flow with controllable conditional
 * structure. Each block holds exactly block_events events, so building a
 * dataset with interval == block_events yields one transition per block and
 * the knobs below translate directly into properties of those transitions:
 *
 *  - pf:     probability the boundary moves this block (one tick).
 *  - theta:  couples the move direction to the level-1 imbalance of the
 *            block's opening book.
 *  - kappa, gamma0: couple the direction to the previous block's sweep,
 *            with strength kappa·(dent/side volume)^gamma0. gamma0 is the
 *            impact exponent a simulator run on this data should recover.
 *  - sweep_prob: one-sided partial take-out of the touch, applied after the
 *            refill so it always dents a freshly restored touch. Nothing
 *            repairs it within the block, so the dent (and hence the sweep
 *            size) is readable off the next opening book.
 *  - pf_ramp, target_ramp: linear drifts of pf and of all level targets
 *            across the stream, giving late states a different look (and
 *            different dynamics) than early ones.
 *
 * Right after the possible flip, level volumes are pulled back to their
 * targets, the touch with a fresh ±level1_noise draw, deeper levels within
 * ±refill_noise. Leftover budget is burned as add/cancel churn at the
 * deepest bid so block boundaries stay aligned.
 */
struct synth_params {
    int levels = 5;
    std::uint32_t block_events = 50;
    std::vector<volume_t> level_targets{300, 250, 200, 150, 100};  // touch outward
    volume_t level1_noise = 0;
    volume_t refill_noise = 4;
    volume_t min_level = 20;
    double pf = 0.8;
    double pf_ramp = 0.0;
    double theta = 0.0;
    double kappa = 0.0;
    double gamma0 = 0.5;
    double sweep_prob = 0.0;
    volume_t sweep_min = 10;
    volume_t sweep_max = 130;
    double target_ramp = 0.0;
    tick_t start_tick = 1000;
    std::uint64_t seed = 1;
};

// Lazy generator: events come out one block at a time through next(), so
// streams of tens of millions of events never sit in memory.
class synth_stream {
  public:
    synth_stream(const synth_params& par, std::size_t n_events) : par_(par), rng_(par.seed, 0) {
        const int l = par_.levels;
        if (l < 1 || par_.level_targets.size() != static_cast<std::size_t>(l))
            raise(errc::bad_config, "level_targets must have one entry per level");
        if (par_.block_events < static_cast<std::uint32_t>(2 * l + 4))
            raise(errc::bad_config, "block_events cannot hold a flip plus a refill");
        if (l < 2 && par_.pf > 0.0)
            raise(errc::bad_config, "flips need at least two levels per side");
        if (par_.min_level < par_.sweep_min + 1)
            raise(errc::bad_config, "min_level too small for sweeps");
        n_blocks_ = n_events / par_.block_events;

        for (int i = 0; i < l; ++i) {
            initial_book_.emplace_back(order_side::bid, par_.start_tick - i,
                                       par_.level_targets[static_cast<std::size_t>(i)]);
            initial_book_.emplace_back(order_side::ask, par_.start_tick + 1 + i,
                                       par_.level_targets[static_cast<std::size_t>(i)]);
        }
        for (const auto& [sd, t, v] : initial_book_) bk_.seed(sd, t, v);
        buf_.reserve(par_.block_events);
    }

    // seed book for build_options.initial_book, so the first block is a
    // regular transition instead of being dropped
    const std::vector<std::tuple<order_side, tick_t, volume_t>>& initial_book() const {
        return initial_book_;
    }

    std::size_t total_events() const { return n_blocks_ * par_.block_events; }

    bool next(lob_event& e) {
        if (pos_ >= buf_.size()) {
            if (block_ >= n_blocks_) return false;
            make_block();
        }
        e = buf_[pos_++];
        return true;
    }

  private:
    void emit(event_kind k, std::uint8_t side, tick_t tick, volume_t qty, volume_t lvl) {
        lob_event e;
        e.seq = ++seq_;
        e.kind = k;
        e.side = side;
        e.price_tick = tick;
        e.qty = qty;
        e.level_volume_at_exec = lvl;
        e.aggressor_priority_qty = 0;
        bk_.apply(e);
        buf_.push_back(e);
    }

    void make_block() {
        buf_.clear();
        pos_ = 0;
        const int l = par_.levels;
        const std::size_t b = block_++;
        const double progress =
            n_blocks_ > 1 ? static_cast<double>(b) / static_cast<double>(n_blocks_ - 1) : 0.0;
        const double pf_eff = std::clamp(par_.pf + par_.pf_ramp * progress, 0.0, 0.98);
        auto target = [&](int i) {
            const double t = static_cast<double>(par_.level_targets[static_cast<std::size_t>(i)]) *
                             (1.0 + par_.target_ramp * progress);
            return std::max<volume_t>(par_.min_level, std::llround(t));
        };
        const std::uint64_t block_end = (b + 1) * par_.block_events;

        // direction bias from the opening imbalance and last block's sweep
        {
            const dividing_price dv = bk_.boundary();
            const volume_t vb = bk_.volume_on(order_side::bid, dv.floor_tick());
            const volume_t va = bk_.volume_on(order_side::ask, dv.ceil_tick());
            const double rho =
                vb + va > 0 ? static_cast<double>(vb - va) / static_cast<double>(vb + va) : 0.0;
            double d = par_.theta * rho;
            if (pending_u_ != 0.0)
                d += par_.kappa * (pending_u_ > 0 ? 1.0 : -1.0) *
                     std::pow(std::abs(pending_u_), par_.gamma0);
            d = std::clamp(d, -0.95, 0.95);
            pending_u_ = 0.0;

            const double r = rng_.next_double();
            if (r < pf_eff * (1.0 + d) / 2.0) {
                // up: take out the ask touch and re-seed it as the new best bid
                const volume_t v = bk_.volume_on(order_side::ask, dv.ceil_tick());
                if (v > 0) emit(event_kind::trade, 0, dv.ceil_tick(), v, v);
                emit(event_kind::limit_add, 0, dv.ceil_tick(), std::max<volume_t>(1, target(0) / 2), 0);
            } else if (r < pf_eff) {
                const volume_t v = bk_.volume_on(order_side::bid, dv.floor_tick());
                if (v > 0) emit(event_kind::trade, 1, dv.floor_tick(), v, v);
                emit(event_kind::limit_add, 1, dv.floor_tick(), std::max<volume_t>(1, target(0) / 2), 0);
            }
        }

        // pull the window back to targets, erasing last block's dent
        {
            const dividing_price dv = bk_.boundary();
            for (int side = 0; side < 2; ++side) {
                const order_side sd = side == 0 ? order_side::bid : order_side::ask;
                for (int i = 0; i < l; ++i) {
                    const volume_t noise = i == 0 ? par_.level1_noise : par_.refill_noise;
                    const volume_t draw = noise > 0 ? rng_.next_range(-noise, noise) : 0;
                    const tick_t t = side == 0 ? dv.floor_tick() - i : dv.ceil_tick() + i;
                    const volume_t want = std::max<volume_t>(par_.min_level, target(i) + draw);
                    const volume_t have = bk_.volume_on(sd, t);
                    if (want > have)
                        emit(event_kind::limit_add, static_cast<std::uint8_t>(side), t, want - have, 0);
                    else if (want < have)
                        emit(event_kind::cancel, static_cast<std::uint8_t>(side), t, have - want, 0);
                }
            }
        }

        // sweep the refilled touch; left unrepaired until the next block's
        // refill, so the closing snapshot shows exactly this dent
        if (par_.sweep_prob > 0.0 && rng_.next_double() < par_.sweep_prob) {
            const dividing_price dv = bk_.boundary();
            const bool buy = rng_.next_bernoulli(0.5);
            const order_side sd = buy ? order_side::ask : order_side::bid;
            const tick_t t = buy ? dv.ceil_tick() : dv.floor_tick();
            const volume_t touch = bk_.volume_on(sd, t);
            const volume_t hi = std::min<volume_t>(par_.sweep_max, touch - 10);
            if (hi >= par_.sweep_min) {
                // dent is normalized by the visible side volume, not the
                // builder's full map (stale out-of-window levels linger there)
                volume_t total = 0;
                for (int i = 0; i < l; ++i)
                    total += bk_.volume_on(sd, buy ? dv.ceil_tick() + i : dv.floor_tick() - i);
                const volume_t q = rng_.next_range(par_.sweep_min, hi);
                emit(event_kind::trade, buy ? 0 : 1, t, q, touch);
                pending_u_ = (buy ? 1.0 : -1.0) * static_cast<double>(q) / static_cast<double>(total);
            }
        }

        // churn at the deepest bid until the block is exactly full
        {
            const dividing_price dv = bk_.boundary();
            const tick_t t = dv.floor_tick() - (l - 1);
            while (seq_ + 2 <= block_end) {
                emit(event_kind::limit_add, 0, t, 1, 0);
                emit(event_kind::cancel, 0, t, 1, 0);
            }
            if (seq_ < block_end) emit(event_kind::limit_add, 0, t, 1, 0);
        }
    }

    synth_params par_;
    counter_rng rng_;
    book_builder bk_;
    std::vector<std::tuple<order_side, tick_t, volume_t>> initial_book_;
    std::vector<lob_event> buf_;
    std::size_t pos_ = 0;
    std::size_t n_blocks_ = 0;
    std::size_t block_ = 0;
    std::uint64_t seq_ = 0;
    double pending_u_ = 0.0;
};

struct synth_output {
    std::vector<std::tuple<order_side, tick_t, volume_t>> initial_book;
    contract_stream stream;
};

// Materialized form for small streams and CSV export.
inline synth_output generate_events(const synth_params& par, std::size_t n_events) {
    synth_stream gen(par, n_events);
    synth_output out;
    out.initial_book = gen.initial_book();
    out.stream.contract = "SYN";
    out.stream.events.reserve(gen.total_events());
    lob_event e;
    while (gen.next(e)) out.stream.events.push_back(e);
    return out;
}

// Dataset straight from a generated stream, one transition per block, with
// the events never materialized in full.
inline dataset build_synth_dataset(const synth_params& par, std::size_t n_events,
                                   bool extended_features = false) {
    synth_stream gen(par, n_events);
    build_options opt;
    opt.levels = par.levels;
    opt.interval = par.block_events;
    opt.extended_features = extended_features;
    opt.initial_book = gen.initial_book();
    std::vector<stream_source> sources;
    sources.push_back({"SYN", [&gen](lob_event& e) { return gen.next(e); }});
    return dataset::build_sources(sources, opt);
}

}  // namespace lobsim
