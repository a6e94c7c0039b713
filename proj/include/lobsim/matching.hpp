#pragma once

#include <cstdint>
#include <vector>

#include "errors.hpp"
#include "interaction.hpp"

namespace lobsim {

// One historical execution inside a transition interval. `level_volume` is
// the resting volume at the trade's tick right before it executed, and
// `aggressor_priority_qty` the remaining size of the order that newly
// established that level (0 when the level was not newly aggressed).
struct trade_record {
    std::uint32_t seq = 0;
    aggressor_side aggressor = aggressor_side::buy;
    volume_t qty = 0;
    tick_t price_tick = 0;
    volume_t level_volume = 0;
    volume_t aggressor_priority_qty = 0;
};

enum class fill_mechanism : std::uint8_t { pro_rata, allocation };

// ⌊q_M·q_L/V_p⌋, the pure pro-rata share. Caller handles q_M ≥ V_p (sweep).
inline volume_t pro_rata_fill(volume_t q_m, volume_t q_l, volume_t v_p) {
    if (v_p <= 0) raise(errc::zero_level_volume, "pro_rata_fill");
    return (q_m * q_l) / v_p;
}

// Allocation share of a non-aggressing order: the aggressor takes q_A off the
// top, the rest is pro-rata over the residual pool.
inline volume_t allocation_fill(volume_t q_m, volume_t q_a, volume_t q_l, volume_t v_p) {
    if (q_a == 0) return pro_rata_fill(q_m, q_l, v_p);
    if (v_p - q_a <= 0) {
        if (q_l > 0) raise(errc::zero_residual_volume, "allocation_fill");
        return 0;
    }
    if (q_m <= q_a) return 0;
    return ((q_m - q_a) * q_l) / (v_p - q_a);
}

struct order_fill {
    std::uint64_t order_ref = 0;
    volume_t qty = 0;
    tick_t price_tick = 0;
};

struct fill_report {
    std::vector<order_fill> fills;
    std::int64_t cash_delta = 0;       // + when the agent sells
    std::int64_t inventory_delta = 0;  // + when the agent buys
};

/**
 * Replay an interval's trades against the agent's resting orders.
 *
 * Each trade executes on the opposing side at its tick. The agent's volume is
 * added to the recorded historical level volume (the agent dilutes the pool),
 * the historical qty q_M stays as recorded, and rounding residue is dropped.
 * A market qty at or above the diluted level volume sweeps the level, filling
 * every resting order fully.
 */
inline fill_report replay_fills(const std::vector<trade_record>& trades, agent_book& book,
                                fill_mechanism mechanism) {
    fill_report report;
    if (book.empty()) return report;

    for (const auto& tr : trades) {
        const order_side resting = opposing(tr.aggressor);
        volume_t agent_rest = book.resting_at(tr.price_tick, resting);
        if (agent_rest == 0) continue;

        for (auto& o : book.mutable_orders()) {
            if (o.side != resting || o.price_tick != tr.price_tick || o.remaining == 0) continue;

            const volume_t v_diluted = tr.level_volume + agent_rest;
            volume_t fill = 0;
            if (mechanism == fill_mechanism::allocation && o.first_at_level) {
                // the agent was the aggressing order at this level
                fill = std::min(tr.qty, o.remaining);
            } else if (tr.qty >= v_diluted) {
                fill = o.remaining;  // sweep
            } else if (mechanism == fill_mechanism::pro_rata) {
                fill = pro_rata_fill(tr.qty, o.remaining, v_diluted);
            } else {
                const volume_t q_a = std::min(tr.aggressor_priority_qty, v_diluted);
                fill = allocation_fill(tr.qty, q_a, o.remaining, v_diluted);
            }

            fill = std::min(fill, o.remaining);
            if (fill == 0) continue;

            o.remaining -= fill;
            report.fills.push_back({o.id, fill, tr.price_tick});
            if (resting == order_side::ask) {
                report.cash_delta += tr.price_tick * fill;
                report.inventory_delta -= fill;
            } else {
                report.cash_delta -= tr.price_tick * fill;
                report.inventory_delta += fill;
            }
        }

        // drop fully consumed orders
        auto& orders = book.mutable_orders();
        for (std::size_t i = orders.size(); i > 0; --i) {
            if (orders[i - 1].remaining == 0) {
                orders.erase(orders.begin() + static_cast<std::ptrdiff_t>(i - 1));
            }
        }
    }
    return report;
}

}  // namespace lobsim
