#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <memory>
#include <thread>
#include <utility>
#include <vector>

#include "agents.hpp"
#include "dataset.hpp"
#include "features.hpp"
#include "interaction.hpp"
#include "knn.hpp"
#include "matching.hpp"
#include "paths.hpp"
#include "rng.hpp"

namespace lobsim {

struct sim_config {
    std::uint32_t k = 20;
    int horizon = 60;
    std::size_t n_paths = 1;
    fill_mechanism mechanism = fill_mechanism::allocation;
    std::uint64_t seed = 0;
    int threads = 0;         // 0 picks hardware concurrency
    bool paired_init = false;  // path p starts from init_pool[p % pool] instead of a draw
};

// Search structures prepared once per dataset split and reused across runs.
// init_pool is deliberately mutable state: callers narrow it (e.g. to starts
// with a chained historical continuation) before simulating paired paths.
struct engine_data {
    const dataset* ds = nullptr;
    std::size_t train_end = 0;
    feature_pipeline pipeline;
    knn_index index;
    std::vector<std::uint32_t> rows;       // index row → train sample
    std::vector<std::uint32_t> init_pool;  // test-split start candidates
};

inline engine_data build_engine_data(const dataset& ds, feature_mode mode,
                                     double train_fraction = 0.8, int n_components = 8) {
    engine_data ed;
    ed.ds = &ds;
    ed.train_end = split_index(ds.size(), train_fraction);
    if (ed.train_end == 0) raise(errc::empty_train_set, "train split is empty");
    ed.pipeline = feature_pipeline::fit(ds, ed.train_end, mode, n_components);

    const int dim = ed.pipeline.dim();
    std::vector<double> pts;
    for (std::size_t i = 0; i < ed.train_end; ++i) {
        if (mode == feature_mode::pca && !ds.feature_valid(i)) continue;
        ed.rows.push_back(static_cast<std::uint32_t>(i));
        pts.resize(pts.size() + static_cast<std::size_t>(dim));
        ed.pipeline.featurize_before(ds, i, pts.data() + pts.size() - static_cast<std::size_t>(dim));
    }
    if (ed.rows.empty()) raise(errc::empty_train_set, "no usable train samples");
    ed.index.build(pts.data(), ed.rows.size(), dim);

    for (std::size_t i = ed.train_end; i < ds.size(); ++i) {
        if (mode == feature_mode::pca && !ds.feature_valid(i)) continue;
        ed.init_pool.push_back(static_cast<std::uint32_t>(i));
    }
    if (ed.init_pool.empty()) raise(errc::empty_sample, "test split has no usable start states");
    return ed;
}

using strategy_factory = std::function<std::unique_ptr<strategy>()>;

namespace detail {

// Generates one path. RNG draw order is part of the output contract:
// optionally one init draw, then exactly one rank draw per step, taken
// before the neighbor query.
inline void run_path(const engine_data& data, const sim_config& cfg,
                     const strategy_factory& make_strategy, std::size_t p, sim_path& out) {
    const dataset& ds = *data.ds;
    const int l = ds.levels();
    counter_rng rng(cfg.seed, p);

    const std::size_t pick =
        cfg.paired_init ? p % data.init_pool.size() : rng.next_below(data.init_pool.size());
    const std::uint32_t i0 = data.init_pool[pick];
    out.init_index = i0;

    auto strat = make_strategy();
    std::int64_t inventory = strat->initial_inventory();
    std::int64_t cash = 0;
    lob_snapshot snap = ds.snapshot_before(i0);
    dividing_price price = ds.price_before(i0);
    agent_book book;

    std::vector<double> carried;
    const bool pca = data.pipeline.mode() == feature_mode::pca;
    if (pca) {
        const double* f = ds.feature_before(i0);
        carried.assign(f, f + dataset::feature_dim);
    }

    const std::size_t n_states = static_cast<std::size_t>(cfg.horizon) + 1;
    out.boundaries.reserve(n_states);
    out.volumes.reserve(n_states * static_cast<std::size_t>(2 * l));
    out.inventory.reserve(n_states);
    out.cash.reserve(n_states);
    out.steps.reserve(static_cast<std::size_t>(cfg.horizon));
    out.push_state(snap, inventory, cash);

    std::vector<double> q(static_cast<std::size_t>(data.pipeline.dim()));
    std::vector<knn_index::hit> hits;

    for (int s = 0; s < cfg.horizon; ++s) {
        const bool last = s == cfg.horizon - 1;
        agent_action act;
        try {
            // strategies read the book, so a one-sided snapshot surfaces here
            agent_state st{inventory, cash, s, &book};
            act = last ? strat->final_action(snap, st) : strat->next_action(snap, st);
        } catch (const sim_error& e) {
            out.valid = 0;
            out.fail_reason = e.what();
            return;
        }
        path_step step;

        if (last && act.market.qty > 0) {
            // clamp the terminal market order to the depth left after this
            // step's cancellations; anything beyond is recorded unexecuted
            volume_t depth = 0;
            try {
                lob_snapshot trial = snap;
                agent_book trial_book = book;
                for (const auto& c : act.cancellations) trial = apply_cancellation(trial, c, trial_book);
                depth = act.market.side == aggressor_side::buy ? trial.total_ask_volume()
                                                               : trial.total_bid_volume();
            } catch (const sim_error&) {
                depth = act.market.qty;  // bad cancellation: let apply_action report it
            }
            if (act.market.qty > depth) {
                step.shortfall = act.market.qty - depth;
                act.market.qty = depth;
            }
        }

        action_result ar;
        try {
            ar = apply_action(snap, act, book);
        } catch (const sim_error& e) {
            out.valid = 0;
            out.fail_reason = e.what();
            return;
        }
        snap = std::move(ar.snap);
        cash += ar.revenue;
        inventory += act.market.side == aggressor_side::buy ? ar.market_executed : -ar.market_executed;
        step.market_qty = ar.market_executed;
        step.market_revenue = ar.revenue;
        for (const auto& x : act.limits) step.posted += x.qty;

        // rank draw precedes the query so the stream is identical whether or
        // not the caller inspects the hit list
        data.pipeline.featurize_state(snap, carried.data(), q.data());
        const std::size_t rank = rng.next_below(cfg.k);
        data.index.query(q.data(), static_cast<int>(cfg.k), hits);
        const knn_index::hit h = hits[rank];
        const std::uint32_t j = data.rows[h.index];
        step.match = j;
        step.distance = std::sqrt(h.dist2);

        // replay the matched transition's trades, shifted onto the path's
        // price frame, against whatever the agent has resting
        std::vector<trade_record> trades = ds.trades(j);
        const tick_t shift = price.best_bid - ds.rec(j).boundary_before;
        for (auto& t : trades) t.price_tick += shift;
        fill_report rep;
        try {
            rep = replay_fills(trades, book, cfg.mechanism);
        } catch (const sim_error& e) {
            out.valid = 0;
            out.fail_reason = e.what();
            return;
        }
        cash += rep.cash_delta;
        inventory += rep.inventory_delta;
        step.fill_cash = rep.cash_delta;
        for (const auto& f : rep.fills) step.filled += f.qty;

        // next state: the matched successor volumes re-anchored at the
        // path's updated boundary
        price.best_bid += ds.increment(j);
        lob_snapshot next(l, price);
        const lob_snapshot succ = ds.snapshot_after(j);
        for (int i = 0; i < l; ++i) {
            next.set_bid(i, succ.bid(i));
            next.set_ask(i, succ.ask(i));
        }
        // surviving agent orders keep their absolute tick; orders whose tick
        // left the window or crossed the boundary are dropped
        auto& orders = book.mutable_orders();
        for (auto it = orders.begin(); it != orders.end();) {
            const bool bid_side = it->side == order_side::bid;
            const bool fits = next.contains_tick(it->price_tick) &&
                              (bid_side == next.is_bid_tick(it->price_tick));
            if (fits) {
                ++it;
            } else {
                step.auto_cancelled += it->remaining;
                it = orders.erase(it);
            }
        }
        snap = std::move(next);
        if (pca) {
            const double* f = ds.feature_after(j);
            carried.assign(f, f + dataset::feature_dim);
        }

        out.steps.push_back(step);
        out.push_state(snap, inventory, cash);
    }
}

// Static partition by atomic counter; results land in preassigned slots so
// archives are byte-identical for any thread count.
template <class Fn>
void parallel_paths(std::size_t n, int threads_requested, Fn&& body) {
    int threads = threads_requested > 0 ? threads_requested
                                        : static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), n));
    if (threads <= 1) {
        for (std::size_t p = 0; p < n; ++p) body(p);
        return;
    }
    std::atomic<std::size_t> cursor{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(threads));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (;;) {
                    const std::size_t p = cursor.fetch_add(1);
                    if (p >= n) return;
                    body(p);
                }
            } catch (...) {
                errors[static_cast<std::size_t>(t)] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace detail

inline path_set resample_paths(const engine_data& data, const strategy_factory& make_strategy,
                               const sim_config& cfg) {
    if (cfg.k < 1 || static_cast<std::size_t>(cfg.k) > data.rows.size())
        raise(errc::bad_config, "k must be in [1, train pool size]");
    if (cfg.horizon < 1) raise(errc::bad_config, "horizon must be positive");
    if (cfg.n_paths == 0) raise(errc::bad_config, "need at least one path");
    if (data.init_pool.empty()) raise(errc::empty_sample, "empty start pool");

    path_set ps;
    ps.levels = data.ds->levels();
    ps.horizon = cfg.horizon;
    ps.k = cfg.k;
    ps.mechanism = static_cast<std::uint8_t>(cfg.mechanism);
    ps.mode = static_cast<std::uint8_t>(data.pipeline.mode());
    ps.seed = cfg.seed;
    ps.paths.resize(cfg.n_paths);

    detail::parallel_paths(cfg.n_paths, cfg.threads, [&](std::size_t p) {
        detail::run_path(data, cfg, make_strategy, p, ps.paths[p]);
    });
    return ps;
}

}  // namespace lobsim
