#pragma once

#include <cstdint>
#include <vector>

#include "dataset.hpp"
#include "engine.hpp"
#include "paths.hpp"
#include "rng.hpp"

namespace lobsim {

/**
 * State-independent benchmark: each step applies a transition drawn
 * uniformly from the train split, ignoring the current book entirely. Same
 * re-anchoring as the conditional engine, no agent, so differences against
 * it isolate what neighbor matching buys.
 */
inline path_set naive_resample(const dataset& ds, std::size_t train_end,
                               const std::vector<std::uint32_t>& init_pool, int horizon,
                               std::size_t n_paths, std::uint64_t seed, int threads = 0,
                               bool paired_init = false) {
    if (train_end == 0 || train_end > ds.size()) raise(errc::bad_config, "bad train split");
    if (horizon < 1) raise(errc::bad_config, "horizon must be positive");
    if (n_paths == 0) raise(errc::bad_config, "need at least one path");
    if (init_pool.empty()) raise(errc::empty_sample, "empty start pool");

    const int l = ds.levels();
    path_set ps;
    ps.levels = l;
    ps.horizon = horizon;
    ps.k = 0;  // marks the unconditional sampler
    ps.seed = seed;
    ps.paths.resize(n_paths);

    detail::parallel_paths(n_paths, threads, [&](std::size_t p) {
        counter_rng rng(seed, p);
        sim_path& out = ps.paths[p];
        const std::size_t pick = paired_init ? p % init_pool.size() : rng.next_below(init_pool.size());
        const std::uint32_t i0 = init_pool[pick];
        out.init_index = i0;

        dividing_price price = ds.price_before(i0);
        lob_snapshot snap = ds.snapshot_before(i0);
        out.push_state(snap, 0, 0);
        for (int s = 0; s < horizon; ++s) {
            const std::uint32_t j = static_cast<std::uint32_t>(rng.next_below(train_end));
            path_step step;
            step.match = j;
            price.best_bid += ds.increment(j);
            lob_snapshot next(l, price);
            const lob_snapshot succ = ds.snapshot_after(j);
            for (int i = 0; i < l; ++i) {
                next.set_bid(i, succ.bid(i));
                next.set_ask(i, succ.ask(i));
            }
            snap = std::move(next);
            out.steps.push_back(step);
            out.push_state(snap, 0, 0);
        }
    });
    return ps;
}

}  // namespace lobsim
