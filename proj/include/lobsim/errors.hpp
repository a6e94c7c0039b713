#pragma once

#include <stdexcept>
#include <string>

namespace lobsim {

// Error kinds, grouped roughly by the layer that raises them. The CLI maps
// these onto process exit codes (usage=2, data=3, simulation=4).
enum class errc {
    // book / price queries
    empty_side,
    non_positive_price,
    // interaction
    unknown_order,
    overcancel,
    insufficient_depth,
    crossing_order,
    out_of_window,
    non_positive_qty,
    // matching
    zero_level_volume,
    zero_residual_volume,
    // dataset / streams
    malformed_stream,
    insufficient_history,
    bad_format,
    io_error,
    // features
    empty_train_set,
    dimension_mismatch,
    rank_deficient,
    // engine / stats
    empty_sample,
    insufficient_samples,
    unpaired_paths,
    empty_band,
    degenerate_grid,
    bad_config,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::empty_side: return "empty_side";
        case errc::non_positive_price: return "non_positive_price";
        case errc::unknown_order: return "unknown_order";
        case errc::overcancel: return "overcancel";
        case errc::insufficient_depth: return "insufficient_depth";
        case errc::crossing_order: return "crossing_order";
        case errc::out_of_window: return "out_of_window";
        case errc::non_positive_qty: return "non_positive_qty";
        case errc::zero_level_volume: return "zero_level_volume";
        case errc::zero_residual_volume: return "zero_residual_volume";
        case errc::malformed_stream: return "malformed_stream";
        case errc::insufficient_history: return "insufficient_history";
        case errc::bad_format: return "bad_format";
        case errc::io_error: return "io_error";
        case errc::empty_train_set: return "empty_train_set";
        case errc::dimension_mismatch: return "dimension_mismatch";
        case errc::rank_deficient: return "rank_deficient";
        case errc::empty_sample: return "empty_sample";
        case errc::insufficient_samples: return "insufficient_samples";
        case errc::unpaired_paths: return "unpaired_paths";
        case errc::empty_band: return "empty_band";
        case errc::degenerate_grid: return "degenerate_grid";
        case errc::bad_config: return "bad_config";
    }
    return "unknown";
}

class sim_error : public std::runtime_error {
  public:
    sim_error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const { return code_; }

  private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) {
    throw sim_error(code, what);
}

}  // namespace lobsim
