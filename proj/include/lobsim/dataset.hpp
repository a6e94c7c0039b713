#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "book.hpp"
#include "errors.hpp"
#include "events.hpp"
#include "matching.hpp"

namespace lobsim {

// Replays an event stream into a two-sided book and derives the dividing
// price. Empty ticks inside a spread gap go to the side they last held
// volume on (recency); never-active ticks fall to the ask side of the
// boundary (position fallback).
class book_builder {
  public:
    void seed(order_side side, tick_t tick, volume_t qty) {
        auto& m = side == order_side::bid ? bids_ : asks_;
        m[tick] += qty;
        last_side_[tick] = side == order_side::bid ? 0 : 1;
        check_uncrossed();
    }

    void apply(const lob_event& e) {
        switch (e.kind) {
            case event_kind::limit_add: {
                if (e.qty <= 0) raise(errc::malformed_stream, "limit_add with non-positive qty");
                auto& m = e.side == 0 ? bids_ : asks_;
                m[e.price_tick] += e.qty;
                last_side_[e.price_tick] = e.side;
                check_uncrossed();
                break;
            }
            case event_kind::cancel: {
                if (e.qty <= 0) raise(errc::malformed_stream, "cancel with non-positive qty");
                auto& m = e.side == 0 ? bids_ : asks_;
                reduce(m, e.price_tick, e.qty, "cancel");
                last_side_[e.price_tick] = e.side;
                break;
            }
            case event_kind::trade: {
                if (e.qty <= 0) raise(errc::malformed_stream, "trade with non-positive qty");
                // aggressor consumes the opposing resting side
                const bool buy = e.side == 0;
                auto& m = buy ? asks_ : bids_;
                reduce(m, e.price_tick, e.qty, "trade");
                last_side_[e.price_tick] = buy ? 1 : 0;
                break;
            }
        }
    }

    bool both_sides_occupied() const { return !bids_.empty() && !asks_.empty(); }

    dividing_price boundary() const {
        if (!both_sides_occupied()) raise(errc::empty_side, "book has an empty side");
        const tick_t best_bid = bids_.rbegin()->first;
        const tick_t best_ask = asks_.begin()->first;
        tick_t b = best_bid;
        for (tick_t t = best_bid + 1; t < best_ask; ++t) {
            auto it = last_side_.find(t);
            if (it == last_side_.end() || it->second != 0) break;
            b = t;
        }
        return dividing_price{b};
    }

    lob_snapshot snapshot(int levels) const {
        const dividing_price d = boundary();
        lob_snapshot s(levels, d);
        for (int i = 0; i < levels; ++i) {
            auto bit = bids_.find(s.bid_tick(i));
            if (bit != bids_.end()) s.set_bid(i, bit->second);
            auto ait = asks_.find(s.ask_tick(i));
            if (ait != asks_.end()) s.set_ask(i, ait->second);
        }
        return s;
    }

    volume_t volume_on(order_side side, tick_t tick) const {
        const auto& m = side == order_side::bid ? bids_ : asks_;
        auto it = m.find(tick);
        return it == m.end() ? 0 : it->second;
    }

    volume_t side_total(order_side side) const {
        const auto& m = side == order_side::bid ? bids_ : asks_;
        volume_t s = 0;
        for (const auto& [t, v] : m) s += v;
        return s;
    }

    const std::map<tick_t, volume_t>& bids() const { return bids_; }
    const std::map<tick_t, volume_t>& asks() const { return asks_; }

  private:
    void reduce(std::map<tick_t, volume_t>& m, tick_t tick, volume_t qty, const char* what) {
        auto it = m.find(tick);
        if (it == m.end() || it->second < qty)
            raise(errc::malformed_stream, std::string(what) + " implies negative book volume");
        it->second -= qty;
        if (it->second == 0) m.erase(it);
    }

    void check_uncrossed() const {
        if (bids_.empty() || asks_.empty()) return;
        if (bids_.rbegin()->first >= asks_.begin()->first)
            raise(errc::malformed_stream, "crossed book");
    }

    std::map<tick_t, volume_t> bids_;
    std::map<tick_t, volume_t> asks_;
    std::unordered_map<tick_t, std::uint8_t> last_side_;
};

struct build_options {
    int levels = 5;
    std::uint32_t interval = 250;
    tick_size tick{};
    bool extended_features = false;
    std::vector<std::uint32_t> return_windows{250, 1250, 5000};
    std::vector<std::uint32_t> imbalance_windows{250, 2500, 12500};
    // optional pre-seeded initial book (side, tick, qty); snapshot 0 is the
    // book before the first event, so real streams usually leave this empty
    // and lose the first interval to the degenerate empty book
    std::vector<std::tuple<order_side, tick_t, volume_t>> initial_book;
};

// A named event stream delivered lazily: next() fills the event and returns
// false once the stream is exhausted.
struct stream_source {
    std::string contract;
    std::function<bool(lob_event&)> next;
};

// Transition dataset. Volumes live in one flat array (4l per sample: bid
// before, ask before, bid after, ask after), trades in one flat array with
// per-sample offsets; optional 16-dim raw feature payloads for the extended
// state. Samples are ordered chronologically within each contract and
// concatenated in contract order.
class dataset {
  public:
    struct sample_rec {
        std::uint32_t contract_id = 0;
        std::uint32_t stream_id = 0;
        std::uint64_t session_time = 0;
        tick_t boundary_before = 0;
        tick_t boundary_after = 0;
        std::uint64_t trade_offset = 0;
        std::uint32_t trade_count = 0;
        std::uint8_t chained = 0;  // 1 when the next sample continues this one
    };

    static constexpr int feature_dim = 16;

    int levels() const { return levels_; }
    std::uint32_t interval() const { return interval_; }
    tick_size tick() const { return tick_; }
    bool has_features() const { return has_features_; }
    std::size_t size() const { return recs_.size(); }
    const std::vector<std::string>& contracts() const { return contracts_; }

    const sample_rec& rec(std::size_t i) const { return recs_[i]; }

    dividing_price price_before(std::size_t i) const { return {recs_[i].boundary_before}; }
    dividing_price price_after(std::size_t i) const { return {recs_[i].boundary_after}; }

    tick_t increment(std::size_t i) const {
        return recs_[i].boundary_after - recs_[i].boundary_before;
    }

    lob_snapshot snapshot_before(std::size_t i) const {
        return make_snap(i, 0, recs_[i].boundary_before);
    }

    lob_snapshot snapshot_after(std::size_t i) const {
        return make_snap(i, 2 * levels_, recs_[i].boundary_after);
    }

    // raw volume block of a sample: 4l values, before then after
    const std::int32_t* volumes(std::size_t i) const {
        return vols_.data() + i * static_cast<std::size_t>(4 * levels_);
    }

    std::vector<trade_record> trades(std::size_t i) const {
        const auto& r = recs_[i];
        return {trades_.begin() + static_cast<std::ptrdiff_t>(r.trade_offset),
                trades_.begin() + static_cast<std::ptrdiff_t>(r.trade_offset + r.trade_count)};
    }

    bool chained(std::size_t i) const { return recs_[i].chained != 0; }

    // raw (pre-normalization) extended features of the before/after books
    const double* feature_before(std::size_t i) const { return feat_before_.data() + i * feature_dim; }
    const double* feature_after(std::size_t i) const { return feat_after_.data() + i * feature_dim; }
    bool feature_valid(std::size_t i) const { return feat_valid_[i] != 0; }

    static dataset build(const std::vector<contract_stream>& streams, const build_options& opt);
    static dataset build_sources(std::vector<stream_source>& sources, const build_options& opt);

    void save(const std::string& path) const;
    static dataset load(const std::string& path);
    void export_csv(const std::string& path) const;

  private:
    lob_snapshot make_snap(std::size_t i, int offset, tick_t boundary) const {
        lob_snapshot s(levels_, dividing_price{boundary});
        const std::int32_t* v = volumes(i) + offset;
        for (int k = 0; k < levels_; ++k) {
            s.set_bid(k, v[k]);
            s.set_ask(k, v[levels_ + k]);
        }
        return s;
    }

    int levels_ = 5;
    std::uint32_t interval_ = 250;
    tick_size tick_{};
    bool has_features_ = false;
    std::vector<sample_rec> recs_;
    std::vector<std::int32_t> vols_;
    std::vector<trade_record> trades_;
    std::vector<double> feat_before_;
    std::vector<double> feat_after_;
    std::vector<std::uint8_t> feat_valid_;
    std::vector<std::string> contracts_;

    friend class dataset_io;
};

namespace detail {

// rolling event history for the extended feature block
class feature_tracker {
  public:
    feature_tracker(const std::vector<std::uint32_t>& ret_windows,
                    const std::vector<std::uint32_t>& imb_windows)
        : ret_windows_(ret_windows), imb_windows_(imb_windows) {
        std::uint32_t m = 1;
        for (auto w : ret_windows_) m = std::max(m, w);
        for (auto w : imb_windows_) m = std::max(m, w);
        cap_ = m + 1;
        mids_.assign(cap_, 0.0);
        buy_.assign(cap_, 0.0);
        sell_.assign(cap_, 0.0);
    }

    // called once per event, after the book update
    void on_event(double mid_or_nan, double buy_vol, double sell_vol) {
        if (!std::isnan(mid_or_nan)) last_mid_ = mid_or_nan;
        const std::size_t slot = static_cast<std::size_t>(count_ % cap_);
        mids_[slot] = last_mid_;
        buy_[slot] = buy_vol;
        sell_[slot] = sell_vol;
        ++count_;
    }

    bool ready() const { return count_ >= cap_ && last_mid_ > 0.0; }

    double return_over(std::uint32_t window) const {
        const double now = mid_at_age(0), then = mid_at_age(window);
        if (now <= 0.0 || then <= 0.0) return 0.0;
        return std::log(now) - std::log(then);
    }

    double imbalance_over(std::uint32_t window) const {
        double b = 0.0, t = 0.0;
        for (std::uint32_t a = 0; a < window; ++a) {
            const std::size_t slot = slot_at_age(a);
            b += buy_[slot];
            t += buy_[slot] + sell_[slot];
        }
        if (t == 0.0) return 0.5;  // no trades in the window: neutral
        return b / t;
    }

    const std::vector<std::uint32_t>& return_windows() const { return ret_windows_; }
    const std::vector<std::uint32_t>& imbalance_windows() const { return imb_windows_; }

  private:
    double mid_at_age(std::uint32_t age) const { return mids_[slot_at_age(age)]; }

    std::size_t slot_at_age(std::uint32_t age) const {
        // age 0 = most recent event
        const std::uint64_t idx = count_ - 1 - age;
        return static_cast<std::size_t>(idx % cap_);
    }

    std::vector<std::uint32_t> ret_windows_;
    std::vector<std::uint32_t> imb_windows_;
    std::size_t cap_ = 0;
    std::vector<double> mids_;
    std::vector<double> buy_;
    std::vector<double> sell_;
    double last_mid_ = 0.0;
    std::uint64_t count_ = 0;
};

inline void fill_raw_feature(const lob_snapshot& snap, const feature_tracker* hist, bool hist_ok,
                             double* out) {
    const int l = snap.levels();
    for (int i = 0; i < l; ++i) out[i] = std::sqrt(static_cast<double>(snap.bid(i)));
    for (int i = 0; i < l; ++i) out[l + i] = std::sqrt(static_cast<double>(snap.ask(i)));
    int d = 2 * l;
    if (hist != nullptr) {
        for (auto w : hist->return_windows()) out[d++] = hist_ok ? hist->return_over(w) : 0.0;
        for (auto w : hist->imbalance_windows()) out[d++] = hist_ok ? hist->imbalance_over(w) : 0.5;
    }
}

}  // namespace detail

inline dataset dataset::build(const std::vector<contract_stream>& streams,
                              const build_options& opt) {
    std::vector<stream_source> sources;
    sources.reserve(streams.size());
    for (const auto& s : streams) {
        sources.push_back({s.contract, [sp = &s, pos = std::size_t{0}](lob_event& e) mutable {
                               if (pos >= sp->events.size()) return false;
                               e = sp->events[pos++];
                               return true;
                           }});
    }
    return build_sources(sources, opt);
}

// Same construction, but events are pulled one at a time so very long
// streams never have to sit in memory.
inline dataset dataset::build_sources(std::vector<stream_source>& sources,
                                      const build_options& opt) {
    dataset ds;
    ds.levels_ = opt.levels;
    ds.interval_ = opt.interval;
    ds.tick_ = opt.tick;
    ds.has_features_ = opt.extended_features;

    // contract ids follow first appearance order; callers pass streams
    // already sorted by contract
    std::unordered_map<std::string, std::uint32_t> contract_ids;

    const int l = opt.levels;
    std::uint32_t stream_id = 0;
    for (auto& stream : sources) {
        auto cit = contract_ids.find(stream.contract);
        std::uint32_t cid;
        if (cit == contract_ids.end()) {
            cid = static_cast<std::uint32_t>(ds.contracts_.size());
            contract_ids.emplace(stream.contract, cid);
            ds.contracts_.push_back(stream.contract);
        } else {
            cid = cit->second;
        }

        book_builder book;
        for (const auto& [side, tick, qty] : opt.initial_book) book.seed(side, tick, qty);

        std::optional<detail::feature_tracker> hist;
        if (opt.extended_features)
            hist.emplace(opt.return_windows, opt.imbalance_windows);

        bool prev_valid = book.both_sides_occupied();
        lob_snapshot prev_snap;
        std::uint64_t prev_time = 0;
        bool prev_feat_ok = false;
        std::array<double, feature_dim> prev_feat{};
        if (prev_valid) prev_snap = book.snapshot(l);
        if (prev_valid && hist) {
            detail::fill_raw_feature(prev_snap, &*hist, false, prev_feat.data());
        }

        std::uint64_t prev_seq = 0;
        bool saw_any = false;
        std::vector<trade_record> interval_trades;
        std::uint32_t in_interval = 0;
        bool first_boundary_of_stream = true;

        lob_event e;
        while (stream.next(e)) {
            if (saw_any && e.seq <= prev_seq) raise(errc::malformed_stream, "non-monotone seq");
            prev_seq = e.seq;
            saw_any = true;

            if (e.kind == event_kind::trade) {
                trade_record tr;
                tr.seq = static_cast<std::uint32_t>(interval_trades.size());
                tr.aggressor = e.side == 0 ? aggressor_side::buy : aggressor_side::sell;
                tr.qty = e.qty;
                tr.price_tick = e.price_tick;
                tr.level_volume = e.level_volume_at_exec;
                tr.aggressor_priority_qty = e.aggressor_priority_qty;
                interval_trades.push_back(tr);
            }
            book.apply(e);

            if (hist) {
                double mid = std::numeric_limits<double>::quiet_NaN();
                if (book.both_sides_occupied()) {
                    mid = 0.5 * static_cast<double>(book.bids().rbegin()->first +
                                                    book.asks().begin()->first);
                }
                hist->on_event(mid, e.kind == event_kind::trade && e.side == 0 ? double(e.qty) : 0.0,
                               e.kind == event_kind::trade && e.side == 1 ? double(e.qty) : 0.0);
            }

            if (++in_interval == opt.interval) {
                in_interval = 0;
                const bool cur_valid = book.both_sides_occupied();
                lob_snapshot cur_snap;
                if (cur_valid) cur_snap = book.snapshot(l);
                std::array<double, feature_dim> cur_feat{};
                bool cur_feat_ok = false;
                if (cur_valid && hist) {
                    cur_feat_ok = hist->ready();
                    detail::fill_raw_feature(cur_snap, &*hist, cur_feat_ok, cur_feat.data());
                }

                if (prev_valid && cur_valid) {
                    sample_rec r;
                    r.contract_id = cid;
                    r.stream_id = stream_id;
                    r.session_time = prev_time;
                    r.boundary_before = prev_snap.dividing().best_bid;
                    r.boundary_after = cur_snap.dividing().best_bid;
                    r.trade_offset = ds.trades_.size();
                    r.trade_count = static_cast<std::uint32_t>(interval_trades.size());
                    // contiguity: the previous emitted sample of this stream
                    // continues into this one iff no boundary was skipped
                    if (!ds.recs_.empty() && !first_boundary_of_stream &&
                        ds.recs_.back().stream_id == stream_id) {
                        ds.recs_.back().chained = 1;
                    }
                    ds.recs_.push_back(r);
                    for (int i = 0; i < l; ++i) ds.vols_.push_back(static_cast<std::int32_t>(prev_snap.bid(i)));
                    for (int i = 0; i < l; ++i) ds.vols_.push_back(static_cast<std::int32_t>(prev_snap.ask(i)));
                    for (int i = 0; i < l; ++i) ds.vols_.push_back(static_cast<std::int32_t>(cur_snap.bid(i)));
                    for (int i = 0; i < l; ++i) ds.vols_.push_back(static_cast<std::int32_t>(cur_snap.ask(i)));
                    ds.trades_.insert(ds.trades_.end(), interval_trades.begin(), interval_trades.end());
                    if (hist) {
                        ds.feat_before_.insert(ds.feat_before_.end(), prev_feat.begin(), prev_feat.end());
                        ds.feat_after_.insert(ds.feat_after_.end(), cur_feat.begin(), cur_feat.end());
                        ds.feat_valid_.push_back(prev_feat_ok && cur_feat_ok ? 1 : 0);
                    }
                    first_boundary_of_stream = false;
                } else {
                    // degenerate endpoint: this transition is dropped and the
                    // chain is broken
                    first_boundary_of_stream = true;
                }

                prev_valid = cur_valid;
                prev_snap = cur_snap;
                prev_feat = cur_feat;
                prev_feat_ok = cur_feat_ok;
                prev_time = e.seq;
                interval_trades.clear();
            }
        }
        ++stream_id;
    }
    return ds;
}

inline std::size_t split_index(std::size_t n, double train_fraction) {
    if (train_fraction < 0.0 || train_fraction > 1.0) raise(errc::bad_config, "train fraction");
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_fraction));
}

// ---------------------------------------------------------------------------
// binary persistence

class dataset_io {
  public:
    static constexpr std::uint32_t magic = 0x4c4f4244;  // "LOBD"
    static constexpr std::uint32_t version = 1;

    static void save(const dataset& ds, const std::string& path) {
        std::ofstream out(path, std::ios::binary);
        if (!out) raise(errc::io_error, "cannot open " + path + " for writing");
        write_u32(out, magic);
        write_u32(out, version);
        write_u32(out, static_cast<std::uint32_t>(ds.levels_));
        write_u32(out, ds.interval_);
        write_i64(out, ds.tick_.num);
        write_i64(out, ds.tick_.den);
        write_u32(out, ds.has_features_ ? 1u : 0u);
        write_u64(out, ds.recs_.size());
        write_u64(out, ds.trades_.size());
        write_u32(out, static_cast<std::uint32_t>(ds.contracts_.size()));
        for (const auto& c : ds.contracts_) {
            write_u32(out, static_cast<std::uint32_t>(c.size()));
            out.write(c.data(), static_cast<std::streamsize>(c.size()));
        }
        write_blob(out, ds.recs_);
        write_blob(out, ds.vols_);
        write_blob(out, ds.trades_);
        if (ds.has_features_) {
            write_blob(out, ds.feat_before_);
            write_blob(out, ds.feat_after_);
            write_blob(out, ds.feat_valid_);
        }
        if (!out) raise(errc::io_error, "write failed: " + path);
    }

    static dataset load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) raise(errc::io_error, "cannot open " + path);
        if (read_u32(in) != magic) raise(errc::bad_format, "not a dataset file: " + path);
        if (read_u32(in) != version) raise(errc::bad_format, "unsupported dataset version");
        dataset ds;
        ds.levels_ = static_cast<int>(read_u32(in));
        ds.interval_ = read_u32(in);
        ds.tick_.num = read_i64(in);
        ds.tick_.den = read_i64(in);
        ds.has_features_ = read_u32(in) != 0;
        const std::uint64_t n = read_u64(in);
        const std::uint64_t nt = read_u64(in);
        const std::uint32_t nc = read_u32(in);
        for (std::uint32_t i = 0; i < nc; ++i) {
            const std::uint32_t len = read_u32(in);
            std::string s(len, '\0');
            in.read(s.data(), static_cast<std::streamsize>(len));
            ds.contracts_.push_back(std::move(s));
        }
        read_blob(in, ds.recs_, n);
        read_blob(in, ds.vols_, n * static_cast<std::uint64_t>(4 * ds.levels_));
        read_blob(in, ds.trades_, nt);
        if (ds.has_features_) {
            read_blob(in, ds.feat_before_, n * dataset::feature_dim);
            read_blob(in, ds.feat_after_, n * dataset::feature_dim);
            read_blob(in, ds.feat_valid_, n);
        }
        if (!in) raise(errc::bad_format, "truncated dataset file: " + path);
        return ds;
    }

  private:
    static void write_u32(std::ofstream& o, std::uint32_t v) {
        o.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    static void write_u64(std::ofstream& o, std::uint64_t v) {
        o.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    static void write_i64(std::ofstream& o, std::int64_t v) {
        o.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
    static std::uint32_t read_u32(std::ifstream& i) {
        std::uint32_t v = 0;
        i.read(reinterpret_cast<char*>(&v), sizeof v);
        return v;
    }
    static std::uint64_t read_u64(std::ifstream& i) {
        std::uint64_t v = 0;
        i.read(reinterpret_cast<char*>(&v), sizeof v);
        return v;
    }
    static std::int64_t read_i64(std::ifstream& i) {
        std::int64_t v = 0;
        i.read(reinterpret_cast<char*>(&v), sizeof v);
        return v;
    }
    template <class T>
    static void write_blob(std::ofstream& o, const std::vector<T>& v) {
        o.write(reinterpret_cast<const char*>(v.data()),
                static_cast<std::streamsize>(v.size() * sizeof(T)));
    }
    template <class T>
    static void read_blob(std::ifstream& i, std::vector<T>& v, std::uint64_t count) {
        v.resize(count);
        i.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(count * sizeof(T)));
    }
};

inline void dataset::save(const std::string& path) const { dataset_io::save(*this, path); }
inline dataset dataset::load(const std::string& path) { return dataset_io::load(path); }

inline void dataset::export_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) raise(errc::io_error, "cannot open " + path + " for writing");
    out << "index,contract,session_time,boundary_before,boundary_after,trades";
    for (int i = 0; i < levels_; ++i) out << ",bid_before_" << i;
    for (int i = 0; i < levels_; ++i) out << ",ask_before_" << i;
    for (int i = 0; i < levels_; ++i) out << ",bid_after_" << i;
    for (int i = 0; i < levels_; ++i) out << ",ask_after_" << i;
    out << '\n';
    for (std::size_t i = 0; i < recs_.size(); ++i) {
        const auto& r = recs_[i];
        out << i << ',' << contracts_[r.contract_id] << ',' << r.session_time << ','
            << r.boundary_before << ',' << r.boundary_after << ',' << r.trade_count;
        const std::int32_t* v = volumes(i);
        for (int k = 0; k < 4 * levels_; ++k) out << ',' << v[k];
        out << '\n';
    }
}

}  // namespace lobsim
