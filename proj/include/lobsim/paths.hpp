#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "book.hpp"
#include "dataset.hpp"
#include "errors.hpp"

namespace lobsim {

// Per-transition trace entry. Cash movements are split into their two
// sources so the accounting identity can be checked after the fact.
struct path_step {
    double distance = 0.0;            // Euclidean distance to the matched state
    std::uint32_t match = 0;          // matched train sample index
    std::int64_t posted = 0;          // limit volume posted this step
    std::int64_t filled = 0;          // limit volume filled during the transition
    std::int64_t fill_cash = 0;       // cash delta from limit fills
    std::int64_t market_qty = 0;      // market volume executed
    std::int64_t market_revenue = 0;  // cash delta from the market order
    std::int64_t shortfall = 0;       // terminal market volume beyond visible depth
    std::int64_t auto_cancelled = 0;  // resting volume dropped at re-anchoring
};

/**
 * One simulated (or historical) path: T_n+1 states and T_n step traces.
 * States hold the centered volume vectors plus the running boundary;
 * inventory and cash are state-indexed (entry s is the value after the s-th
 * transition settled).
 */
struct sim_path {
    std::uint32_t init_index = 0;  // dataset sample the initial state came from
    std::uint8_t valid = 1;
    std::string fail_reason;

    std::vector<tick_t> boundaries;      // n_states
    std::vector<std::int32_t> volumes;   // n_states × 2l, bids then asks per state
    std::vector<std::int64_t> inventory; // n_states
    std::vector<std::int64_t> cash;      // n_states
    std::vector<path_step> steps;        // n_states − 1

    std::size_t n_states() const { return boundaries.size(); }

    lob_snapshot snapshot(std::size_t s, int levels) const {
        lob_snapshot snap(levels, dividing_price{boundaries[s]});
        const std::int32_t* v = volumes.data() + s * static_cast<std::size_t>(2 * levels);
        for (int i = 0; i < levels; ++i) {
            snap.set_bid(i, v[i]);
            snap.set_ask(i, v[levels + i]);
        }
        return snap;
    }

    void push_state(const lob_snapshot& snap, std::int64_t inv, std::int64_t csh) {
        boundaries.push_back(snap.dividing().best_bid);
        for (int i = 0; i < snap.levels(); ++i) volumes.push_back(static_cast<std::int32_t>(snap.bid(i)));
        for (int i = 0; i < snap.levels(); ++i) volumes.push_back(static_cast<std::int32_t>(snap.ask(i)));
        inventory.push_back(inv);
        cash.push_back(csh);
    }
};

struct path_set {
    int levels = 5;
    int horizon = 60;  // T_n
    std::uint32_t k = 0;
    std::uint8_t mechanism = 0;
    std::uint8_t mode = 0;
    std::uint64_t seed = 0;
    std::vector<sim_path> paths;

    std::size_t valid_count() const {
        std::size_t n = 0;
        for (const auto& p : paths) n += p.valid ? 1 : 0;
        return n;
    }

    void save(const std::string& path) const;
    static path_set load(const std::string& path);
    void export_csv(const std::string& path) const;
};

// ---------------------------------------------------------------------------
// archive format: little-endian, fixed header + per-path variable blocks

namespace detail {

constexpr std::uint32_t path_magic = 0x4c4f4250;  // "LOBP"
constexpr std::uint32_t path_version = 1;

template <class T>
void put(std::ofstream& o, T v) {
    o.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::ifstream& i) {
    T v{};
    i.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}

template <class T>
void put_vec(std::ofstream& o, const std::vector<T>& v) {
    put<std::uint64_t>(o, v.size());
    o.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T>
void get_vec(std::ifstream& i, std::vector<T>& v) {
    const std::uint64_t n = get<std::uint64_t>(i);
    v.resize(n);
    i.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(T)));
}

}  // namespace detail

inline void path_set::save(const std::string& file) const {
    std::ofstream out(file, std::ios::binary);
    if (!out) raise(errc::io_error, "cannot open " + file + " for writing");
    detail::put(out, detail::path_magic);
    detail::put(out, detail::path_version);
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(levels));
    detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(horizon));
    detail::put(out, k);
    detail::put(out, mechanism);
    detail::put(out, mode);
    detail::put(out, seed);
    detail::put<std::uint64_t>(out, paths.size());
    for (const auto& p : paths) {
        detail::put(out, p.init_index);
        detail::put(out, p.valid);
        detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(p.fail_reason.size()));
        out.write(p.fail_reason.data(), static_cast<std::streamsize>(p.fail_reason.size()));
        detail::put_vec(out, p.boundaries);
        detail::put_vec(out, p.volumes);
        detail::put_vec(out, p.inventory);
        detail::put_vec(out, p.cash);
        detail::put_vec(out, p.steps);
    }
    if (!out) raise(errc::io_error, "write failed: " + file);
}

inline path_set path_set::load(const std::string& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) raise(errc::io_error, "cannot open " + file);
    if (detail::get<std::uint32_t>(in) != detail::path_magic)
        raise(errc::bad_format, "not a path archive: " + file);
    if (detail::get<std::uint32_t>(in) != detail::path_version)
        raise(errc::bad_format, "unsupported path archive version");
    path_set ps;
    ps.levels = static_cast<int>(detail::get<std::uint32_t>(in));
    ps.horizon = static_cast<int>(detail::get<std::uint32_t>(in));
    ps.k = detail::get<std::uint32_t>(in);
    ps.mechanism = detail::get<std::uint8_t>(in);
    ps.mode = detail::get<std::uint8_t>(in);
    ps.seed = detail::get<std::uint64_t>(in);
    const std::uint64_t n = detail::get<std::uint64_t>(in);
    ps.paths.resize(n);
    for (auto& p : ps.paths) {
        p.init_index = detail::get<std::uint32_t>(in);
        p.valid = detail::get<std::uint8_t>(in);
        const std::uint32_t len = detail::get<std::uint32_t>(in);
        p.fail_reason.resize(len);
        in.read(p.fail_reason.data(), len);
        detail::get_vec(in, p.boundaries);
        detail::get_vec(in, p.volumes);
        detail::get_vec(in, p.inventory);
        detail::get_vec(in, p.cash);
        detail::get_vec(in, p.steps);
    }
    if (!in) raise(errc::bad_format, "truncated path archive: " + file);
    return ps;
}

inline void path_set::export_csv(const std::string& file) const {
    std::ofstream out(file);
    if (!out) raise(errc::io_error, "cannot open " + file + " for writing");
    out << "path,step,valid,boundary,mid,weighted_mid,obi,inventory,cash,distance\n";
    for (std::size_t pi = 0; pi < paths.size(); ++pi) {
        const auto& p = paths[pi];
        for (std::size_t s = 0; s < p.n_states(); ++s) {
            const lob_snapshot snap = p.snapshot(s, levels);
            out << pi << ',' << s << ',' << int(p.valid) << ',' << p.boundaries[s] << ',';
            // degenerate books print empty price fields
            const bool both = detail::first_nonempty_bid(snap) != 0 && detail::first_nonempty_ask(snap) != 0;
            if (both) {
                out << mid_price(snap) << ',' << weighted_mid_price(snap);
            } else {
                out << ',';
            }
            out << ',' << order_book_imbalance(snap) << ',' << p.inventory[s] << ',' << p.cash[s]
                << ',';
            if (s < p.steps.size()) out << p.steps[s].distance;
            out << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// historical rollouts

// Start indices from which T_n consecutive chained transitions exist, at or
// after `from` (pass the train/test split point for held-out ground truth).
inline std::vector<std::uint32_t> eligible_starts(const dataset& ds, std::size_t from, int horizon) {
    std::vector<std::uint32_t> out;
    if (horizon < 1 || ds.size() < static_cast<std::size_t>(horizon)) return out;
    for (std::size_t i = from; i + static_cast<std::size_t>(horizon) <= ds.size(); ++i) {
        bool ok = true;
        for (std::size_t j = i; j + 1 < i + static_cast<std::size_t>(horizon); ++j) {
            if (!ds.chained(j)) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(static_cast<std::uint32_t>(i));
    }
    return out;
}

// Market replay: the historical continuation over `horizon` chained
// transitions from each start, packaged as paths so the statistics battery
// can consume real and simulated data identically.
inline path_set real_rollouts(const dataset& ds, const std::vector<std::uint32_t>& starts,
                              int horizon) {
    path_set ps;
    ps.levels = ds.levels();
    ps.horizon = horizon;
    ps.paths.reserve(starts.size());
    for (const auto start : starts) {
        sim_path p;
        p.init_index = start;
        p.push_state(ds.snapshot_before(start), 0, 0);
        for (int s = 0; s < horizon; ++s) {
            const std::size_t j = start + static_cast<std::size_t>(s);
            if (j >= ds.size() || (s > 0 && !ds.chained(j - 1)))
                raise(errc::unpaired_paths, "rollout start lacks a chained continuation");
            path_step st;
            st.match = static_cast<std::uint32_t>(j);
            p.steps.push_back(st);
            p.push_state(ds.snapshot_after(j), 0, 0);
        }
        ps.paths.push_back(std::move(p));
    }
    return ps;
}

}  // namespace lobsim
