#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "book.hpp"
#include "errors.hpp"

namespace lobsim {

enum class event_kind : std::uint8_t { limit_add, cancel, trade };

// Generic order book event. For trades, `side` is the aggressor side and the
// two trailing fields carry what Allocation replay needs; they are unused
// otherwise.
struct lob_event {
    std::uint64_t seq = 0;
    event_kind kind = event_kind::limit_add;
    std::uint8_t side = 0;  // limit_add/cancel: 0=bid 1=ask; trade: 0=buy 1=sell
    tick_t price_tick = 0;
    volume_t qty = 0;
    volume_t level_volume_at_exec = 0;
    volume_t aggressor_priority_qty = 0;
};

inline const char* event_kind_name(event_kind k) {
    switch (k) {
        case event_kind::limit_add: return "limit_add";
        case event_kind::cancel: return "cancel";
        case event_kind::trade: return "trade";
    }
    return "?";
}

inline const char* event_side_name(const lob_event& e) {
    if (e.kind == event_kind::trade) return e.side == 0 ? "buy" : "sell";
    return e.side == 0 ? "bid" : "ask";
}

// One contract session worth of events.
struct contract_stream {
    std::string contract;
    std::vector<lob_event> events;
};

inline void write_events_csv(const std::string& path, const std::vector<lob_event>& events) {
    std::ofstream out(path);
    if (!out) raise(errc::io_error, "cannot open " + path + " for writing");
    out << "seq,kind,side,price_tick,qty,level_volume_at_exec,aggressor_priority_qty\n";
    for (const auto& e : events) {
        out << e.seq << ',' << event_kind_name(e.kind) << ',' << event_side_name(e) << ','
            << e.price_tick << ',' << e.qty << ',';
        if (e.kind == event_kind::trade) {
            out << e.level_volume_at_exec << ',' << e.aggressor_priority_qty;
        } else {
            out << ',';
        }
        out << '\n';
    }
}

namespace detail {

inline std::int64_t parse_int(const std::string& s, std::uint64_t line_no, const char* what) {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        raise(errc::malformed_stream,
              "line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
}

}  // namespace detail

// Pull-based CSV reader so long files never have to sit in memory whole.
class event_csv_reader {
  public:
    explicit event_csv_reader(const std::string& path) : in_(path) {
        if (!in_) raise(errc::io_error, "cannot open " + path);
    }

    bool next(lob_event& e) {
        std::string line;
        while (std::getline(in_, line)) {
            ++line_no_;
            if (line.empty()) continue;
            if (line_no_ == 1 && line.rfind("seq,", 0) == 0) continue;  // header
            parse_line(line, e);
            if (saw_any_ && e.seq <= prev_seq_)
                raise(errc::malformed_stream,
                      "line " + std::to_string(line_no_) + ": non-monotone seq");
            prev_seq_ = e.seq;
            saw_any_ = true;
            return true;
        }
        return false;
    }

  private:
    void parse_line(const std::string& line, lob_event& e) const {
        std::vector<std::string> cols;
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) cols.push_back(col);
        while (cols.size() < 7) cols.emplace_back();
        if (cols.size() != 7)
            raise(errc::malformed_stream, "line " + std::to_string(line_no_) + ": expected 7 columns");

        e = lob_event{};
        e.seq = static_cast<std::uint64_t>(detail::parse_int(cols[0], line_no_, "seq"));
        if (cols[1] == "limit_add") {
            e.kind = event_kind::limit_add;
        } else if (cols[1] == "cancel") {
            e.kind = event_kind::cancel;
        } else if (cols[1] == "trade") {
            e.kind = event_kind::trade;
        } else {
            raise(errc::malformed_stream,
                  "line " + std::to_string(line_no_) + ": bad kind '" + cols[1] + "'");
        }
        if (e.kind == event_kind::trade) {
            if (cols[2] == "buy") {
                e.side = 0;
            } else if (cols[2] == "sell") {
                e.side = 1;
            } else {
                raise(errc::malformed_stream,
                      "line " + std::to_string(line_no_) + ": bad trade side '" + cols[2] + "'");
            }
        } else {
            if (cols[2] == "bid") {
                e.side = 0;
            } else if (cols[2] == "ask") {
                e.side = 1;
            } else {
                raise(errc::malformed_stream,
                      "line " + std::to_string(line_no_) + ": bad side '" + cols[2] + "'");
            }
        }
        e.price_tick = detail::parse_int(cols[3], line_no_, "price_tick");
        e.qty = detail::parse_int(cols[4], line_no_, "qty");
        if (e.kind == event_kind::trade) {
            e.level_volume_at_exec = detail::parse_int(cols[5], line_no_, "level_volume_at_exec");
            e.aggressor_priority_qty = detail::parse_int(cols[6], line_no_, "aggressor_priority_qty");
        }
    }

    std::ifstream in_;
    std::uint64_t line_no_ = 0;
    std::uint64_t prev_seq_ = 0;
    bool saw_any_ = false;
};

inline std::vector<lob_event> read_events_csv(const std::string& path) {
    event_csv_reader reader(path);
    std::vector<lob_event> events;
    lob_event e;
    while (reader.next(e)) events.push_back(e);
    return events;
}

}  // namespace lobsim
