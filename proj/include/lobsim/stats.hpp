#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "book.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "paths.hpp"
#include "rng.hpp"

namespace lobsim {

inline double stats_nan() { return std::numeric_limits<double>::quiet_NaN(); }

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov

// Exact sup-distance of the two empirical CDFs.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) raise(errc::empty_sample, "ks_statistic");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    auto step_at = [&](double x) {
        const double f1 = static_cast<double>(std::upper_bound(a.begin(), a.end(), x) - a.begin()) / na;
        const double f2 = static_cast<double>(std::upper_bound(b.begin(), b.end(), x) - b.begin()) / nb;
        d = std::max(d, std::abs(f1 - f2));
    };
    for (double x : a) step_at(x);
    for (double x : b) step_at(x);
    return d;
}

struct ks_cell {
    double mean = 0.0;
    double stddev = 0.0;  // sample std over the repeats
    int repeats = 0;
};

// Reporting protocol: the KS statistic of `batch`-sized subsamples drawn
// from each side, repeated and averaged.
inline ks_cell ks_benchmark(const std::vector<double>& a, const std::vector<double>& b,
                            std::size_t batch, int repeats, std::uint64_t seed) {
    if (batch == 0 || repeats < 1) raise(errc::bad_config, "ks_benchmark parameters");
    if (a.size() < batch || b.size() < batch)
        raise(errc::insufficient_samples, "ks_benchmark needs at least one batch per side");
    counter_rng rng(seed, 0);
    std::vector<double> wa(a), wb(b), ks(static_cast<std::size_t>(repeats));
    auto draw = [&](std::vector<double>& w) {
        // partial Fisher-Yates: the first `batch` entries become the draw
        for (std::size_t i = 0; i < batch; ++i) {
            const std::size_t j = i + rng.next_below(w.size() - i);
            std::swap(w[i], w[j]);
        }
        return std::vector<double>(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(batch));
    };
    for (int r = 0; r < repeats; ++r) ks[static_cast<std::size_t>(r)] = ks_statistic(draw(wa), draw(wb));
    ks_cell cell;
    cell.repeats = repeats;
    for (double v : ks) cell.mean += v;
    cell.mean /= static_cast<double>(repeats);
    if (repeats > 1) {
        double ss = 0.0;
        for (double v : ks) ss += (v - cell.mean) * (v - cell.mean);
        cell.stddev = std::sqrt(ss / static_cast<double>(repeats - 1));
    }
    return cell;
}

// ---------------------------------------------------------------------------
// quantiles, correlation

// Linear interpolation between order statistics (the common type-7 rule).
inline double quantile_type7(std::vector<double> v, double q) {
    if (v.empty()) raise(errc::empty_sample, "quantile of empty sample");
    if (q < 0.0 || q > 1.0) raise(errc::bad_config, "quantile level outside [0,1]");
    std::sort(v.begin(), v.end());
    const double h = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= v.size()) return v.back();
    const double w = h - static_cast<double>(lo);
    return v[lo] * (1.0 - w) + v[lo + 1] * w;
}

// NaN when either input is (numerically) constant: degenerate dimensions are
// undefined, not zero.
inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) raise(errc::dimension_mismatch, "pearson");
    const std::size_t n = x.size();
    if (n < 2) raise(errc::insufficient_samples, "pearson needs two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) return stats_nan();
    return sxy / std::sqrt(sxx * syy);
}

// dim×dim row-major Pearson matrix over n row-vectors.
inline std::vector<double> pearson_matrix(const double* rows, std::size_t n, int dim) {
    if (n < 2) raise(errc::insufficient_samples, "pearson_matrix needs two rows");
    const std::size_t d = static_cast<std::size_t>(dim);
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t j = 0; j < d; ++j) mean[j] += rows[r * d + j];
    for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
    std::vector<double> cov(d * d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < d; ++j) {
            const double dj = rows[r * d + j] - mean[j];
            var[j] += dj * dj;
            for (std::size_t k = j; k < d; ++k) cov[j * d + k] += dj * (rows[r * d + k] - mean[k]);
        }
    }
    std::vector<double> out(d * d, stats_nan());
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t k = j; k < d; ++k) {
            double c = stats_nan();
            if (var[j] > 0.0 && var[k] > 0.0) c = cov[j * d + k] / std::sqrt(var[j] * var[k]);
            out[j * d + k] = c;
            out[k * d + j] = c;
        }
    }
    return out;
}

// Fisher z-transform test of a correlation against zero.
struct corr_test {
    double corr = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;
    double p = 1.0;  // two-sided
    std::size_t n = 0;
};

inline corr_test fisher_corr_test(double r, std::size_t n, double crit = 1.959963984540054) {
    corr_test t;
    t.corr = r;
    t.n = n;
    if (n < 4 || !(r == r)) {
        t.ci_lo = t.ci_hi = stats_nan();
        t.p = stats_nan();
        return t;
    }
    const double rc = std::clamp(r, -0.999999999, 0.999999999);
    const double z = std::atanh(rc);
    const double se = 1.0 / std::sqrt(static_cast<double>(n - 3));
    t.ci_lo = std::tanh(z - crit * se);
    t.ci_hi = std::tanh(z + crit * se);
    t.p = std::erfc(std::abs(z) / se / std::sqrt(2.0));
    return t;
}

// ---------------------------------------------------------------------------
// path feature extraction

enum class price_kind : std::uint8_t { mid, weighted };

// NaN when the state has an empty side.
inline double path_price(const sim_path& p, int levels, std::size_t s, price_kind kind) {
    const lob_snapshot snap = p.snapshot(s, levels);
    if (detail::first_nonempty_bid(snap) == 0 || detail::first_nonempty_ask(snap) == 0)
        return stats_nan();
    return kind == price_kind::mid ? mid_price(snap) : weighted_mid_price(snap);
}

// log price(s) − log price(0) of each valid path; NaN states are skipped
inline std::vector<double> return_samples(const path_set& ps, int step, price_kind kind) {
    std::vector<double> out;
    out.reserve(ps.paths.size());
    for (const auto& p : ps.paths) {
        if (!p.valid || p.n_states() <= static_cast<std::size_t>(step)) continue;
        const double p0 = path_price(p, ps.levels, 0, kind);
        const double p1 = path_price(p, ps.levels, static_cast<std::size_t>(step), kind);
        if (p0 == p0 && p1 == p1 && p0 > 0.0 && p1 > 0.0) out.push_back(log_return(p1, p0));
    }
    return out;
}

inline std::vector<double> obi_samples(const path_set& ps, int step) {
    std::vector<double> out;
    out.reserve(ps.paths.size());
    for (const auto& p : ps.paths) {
        if (!p.valid || p.n_states() <= static_cast<std::size_t>(step)) continue;
        out.push_back(order_book_imbalance(p.snapshot(static_cast<std::size_t>(step), ps.levels)));
    }
    return out;
}

// normalized signed volume at window index `index` (0 = deepest anchored
// bid, 2l−1 = deepest anchored ask) after `step` transitions, anchored at
// each path's initial boundary
inline std::vector<double> signed_volume_samples(const path_set& ps, int step, int index) {
    if (index < 0 || index >= 2 * ps.levels) raise(errc::bad_config, "window index out of range");
    std::vector<double> out;
    out.reserve(ps.paths.size());
    for (const auto& p : ps.paths) {
        if (!p.valid || p.n_states() <= static_cast<std::size_t>(step)) continue;
        const signed_volumes sv = signed_volumes_after(
            dividing_price{p.boundaries[0]}, p.snapshot(static_cast<std::size_t>(step), ps.levels));
        out.push_back(normalize_volume(sv.values[static_cast<std::size_t>(index)]));
    }
    return out;
}

// per-index mean of the normalized signed volumes: the average book shape
inline std::vector<double> mean_signed_shape(const path_set& ps, int step) {
    std::vector<double> acc(static_cast<std::size_t>(2 * ps.levels), 0.0);
    std::size_t n = 0;
    for (const auto& p : ps.paths) {
        if (!p.valid || p.n_states() <= static_cast<std::size_t>(step)) continue;
        const signed_volumes sv = signed_volumes_after(
            dividing_price{p.boundaries[0]}, p.snapshot(static_cast<std::size_t>(step), ps.levels));
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += normalize_volume(sv.values[i]);
        ++n;
    }
    for (auto& v : acc) v = n > 0 ? v / static_cast<double>(n) : stats_nan();
    return acc;
}

// single-transition equivalents straight from dataset samples
inline std::vector<double> signed_volume_samples(const dataset& ds,
                                                 const std::vector<std::uint32_t>& ids, int index) {
    if (index < 0 || index >= 2 * ds.levels()) raise(errc::bad_config, "window index out of range");
    std::vector<double> out;
    out.reserve(ids.size());
    for (const auto i : ids) {
        const signed_volumes sv = signed_volumes_after(ds.price_before(i), ds.snapshot_after(i));
        out.push_back(normalize_volume(sv.values[static_cast<std::size_t>(index)]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// KS table

struct named_samples {
    std::string name;
    std::vector<double> values;
};

// The benchmark feature set: level-1/2 sizes after one transition, OBI and
// returns at the requested horizons.
inline std::vector<named_samples> ks_feature_samples(const path_set& ps,
                                                     const std::vector<int>& horizons) {
    const int l = ps.levels;
    std::vector<named_samples> out;
    out.push_back({"bid_size_2", signed_volume_samples(ps, 1, l - 2)});
    out.push_back({"bid_size_1", signed_volume_samples(ps, 1, l - 1)});
    out.push_back({"ask_size_1", signed_volume_samples(ps, 1, l)});
    out.push_back({"ask_size_2", signed_volume_samples(ps, 1, l + 1)});
    for (int h : horizons) {
        if (h > ps.horizon) continue;
        out.push_back({"obi_s" + std::to_string(h), obi_samples(ps, h)});
        out.push_back({"mid_return_s" + std::to_string(h), return_samples(ps, h, price_kind::mid)});
        out.push_back(
            {"weighted_return_s" + std::to_string(h), return_samples(ps, h, price_kind::weighted)});
    }
    return out;
}

// ---------------------------------------------------------------------------
// per-step return dynamics

struct quantile_path_table {
    std::vector<double> levels;                  // quantile levels
    std::vector<std::size_t> count;              // paths per step
    std::vector<double> mean;                    // per step
    std::vector<std::vector<double>> quantiles;  // [level][step]
};

inline quantile_path_table return_quantile_paths(
    const path_set& ps, price_kind kind, const std::vector<double>& qlevels,
    const std::function<bool(const sim_path&)>& filter = {}) {
    const std::size_t n_steps = static_cast<std::size_t>(ps.horizon) + 1;
    quantile_path_table t;
    t.levels = qlevels;
    t.count.assign(n_steps, 0);
    t.mean.assign(n_steps, stats_nan());
    t.quantiles.assign(qlevels.size(), std::vector<double>(n_steps, stats_nan()));

    std::vector<std::vector<double>> per_step(n_steps);
    for (const auto& p : ps.paths) {
        if (!p.valid) continue;
        if (filter && !filter(p)) continue;
        const double p0 = path_price(p, ps.levels, 0, kind);
        if (!(p0 > 0.0)) continue;
        for (std::size_t s = 0; s < std::min(n_steps, p.n_states()); ++s) {
            const double pv = path_price(p, ps.levels, s, kind);
            if (pv > 0.0) per_step[s].push_back(log_return(pv, p0));
        }
    }
    for (std::size_t s = 0; s < n_steps; ++s) {
        auto& xs = per_step[s];
        t.count[s] = xs.size();
        if (xs.empty()) continue;
        double m = 0.0;
        for (double v : xs) m += v;
        t.mean[s] = m / static_cast<double>(xs.size());
        for (std::size_t q = 0; q < qlevels.size(); ++q)
            t.quantiles[q][s] = quantile_type7(xs, qlevels[q]);
    }
    return t;
}

// ---------------------------------------------------------------------------
// real-vs-simulated return correlation, paired by initial state

struct corr_over_time {
    std::vector<double> corr;        // index = step; step 0 entry is NaN
    std::vector<double> ci_lo, ci_hi, p_value;
    std::vector<std::size_t> pairs;
};

inline corr_over_time return_correlation_over_time(const path_set& real, const path_set& sim,
                                                   price_kind kind) {
    // one real continuation per initial state; sim paths attach to it
    std::map<std::uint32_t, std::size_t> real_by_init;
    for (std::size_t i = 0; i < real.paths.size(); ++i) {
        if (!real.paths[i].valid) continue;
        real_by_init.emplace(real.paths[i].init_index, i);
    }
    const int horizon = std::min(real.horizon, sim.horizon);
    corr_over_time out;
    const std::size_t n_steps = static_cast<std::size_t>(horizon) + 1;
    out.corr.assign(n_steps, stats_nan());
    out.ci_lo.assign(n_steps, stats_nan());
    out.ci_hi.assign(n_steps, stats_nan());
    out.p_value.assign(n_steps, stats_nan());
    out.pairs.assign(n_steps, 0);

    bool any = false;
    for (std::size_t s = 1; s < n_steps; ++s) {
        std::vector<double> xr, xs;
        for (const auto& p : sim.paths) {
            if (!p.valid || p.n_states() <= s) continue;
            const auto it = real_by_init.find(p.init_index);
            if (it == real_by_init.end()) continue;
            const sim_path& rp = real.paths[it->second];
            if (rp.n_states() <= s) continue;
            const double r0 = path_price(rp, real.levels, 0, kind);
            const double r1 = path_price(rp, real.levels, s, kind);
            const double s0 = path_price(p, sim.levels, 0, kind);
            const double s1 = path_price(p, sim.levels, s, kind);
            if (!(r0 > 0.0 && r1 > 0.0 && s0 > 0.0 && s1 > 0.0)) continue;
            xr.push_back(log_return(r1, r0));
            xs.push_back(log_return(s1, s0));
        }
        out.pairs[s] = xr.size();
        if (xr.size() < 4) continue;
        any = true;
        const corr_test t = fisher_corr_test(pearson(xr, xs), xr.size());
        out.corr[s] = t.corr;
        out.ci_lo[s] = t.ci_lo;
        out.ci_hi[s] = t.ci_hi;
        out.p_value[s] = t.p;
    }
    if (!any) raise(errc::unpaired_paths, "no (real, sim) pairs share an initial state");
    return out;
}

// ---------------------------------------------------------------------------
// OBI-conditioned return dynamics

struct obi_band_tables {
    double low_cut = 0.0, high_cut = 0.0;  // OBI values at the pool quantiles
    quantile_path_table low, high;
};

// Bands are cut at quantiles of `obi_pool` (initial OBIs of the reference
// data) so real and simulated sets are conditioned identically.
inline obi_band_tables obi_conditioned_returns(const path_set& ps,
                                               const std::vector<double>& obi_pool, price_kind kind,
                                               const std::vector<double>& qlevels,
                                               double low_q = 0.05, double high_q = 0.95) {
    if (obi_pool.empty()) raise(errc::empty_sample, "empty OBI pool");
    obi_band_tables out;
    out.low_cut = quantile_type7(obi_pool, low_q);
    out.high_cut = quantile_type7(obi_pool, high_q);

    auto initial_obi = [&](const sim_path& p) {
        return order_book_imbalance(p.snapshot(0, ps.levels));
    };
    std::size_t n_low = 0, n_high = 0;
    for (const auto& p : ps.paths) {
        if (!p.valid) continue;
        const double o = initial_obi(p);
        if (o <= out.low_cut) ++n_low;
        if (o >= out.high_cut) ++n_high;
    }
    if (n_low == 0 || n_high == 0) raise(errc::empty_band, "an OBI band matched no paths");
    out.low = return_quantile_paths(ps, kind, qlevels,
                                    [&](const sim_path& p) { return initial_obi(p) <= out.low_cut; });
    out.high = return_quantile_paths(
        ps, kind, qlevels, [&](const sim_path& p) { return initial_obi(p) >= out.high_cut; });
    return out;
}

// ---------------------------------------------------------------------------
// market impact

struct impact_curve {
    std::vector<double> gamma;
    std::vector<double> corr;                  // signed correlation per gamma
    std::vector<double> ci_lo, ci_hi;          // 99% Fisher bands
    double gamma_star = 0.0;                   // grid argmin of the signed correlation
    double sqrt_slope = 0.0, sqrt_intercept = 0.0;
    double sqrt_slope_ci95 = 0.0;              // half-width
    std::size_t n_used = 0;                    // points after trimming
};

// Correlation of terminal returns with (P/V̄)^γ over a γ grid, after
// central-quartile trimming of returns within each parent-size bucket, plus
// an OLS fit of the γ=0.5 law.
inline impact_curve impact_gamma_sweep(const std::vector<double>& parent,
                                       const std::vector<double>& vbar,
                                       const std::vector<double>& terminal_return,
                                       const std::vector<double>& gamma_grid) {
    if (gamma_grid.empty()) raise(errc::degenerate_grid, "empty gamma grid");
    if (parent.size() != vbar.size() || parent.size() != terminal_return.size())
        raise(errc::dimension_mismatch, "impact input lengths differ");
    if (parent.empty()) raise(errc::empty_sample, "no impact observations");

    // central quartiles per parent size, applied uniformly across buckets
    std::map<double, std::vector<std::size_t>> buckets;
    for (std::size_t i = 0; i < parent.size(); ++i) buckets[parent[i]].push_back(i);
    std::vector<std::size_t> keep;
    for (const auto& [p, ids] : buckets) {
        std::vector<double> rets;
        rets.reserve(ids.size());
        for (auto i : ids) rets.push_back(terminal_return[i]);
        const double q1 = quantile_type7(rets, 0.25);
        const double q3 = quantile_type7(rets, 0.75);
        for (auto i : ids)
            if (terminal_return[i] >= q1 && terminal_return[i] <= q3) keep.push_back(i);
    }
    if (keep.size() < 4) raise(errc::insufficient_samples, "too few points after trimming");

    std::vector<double> ratio(keep.size()), y(keep.size());
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const std::size_t i = keep[k];
        if (!(vbar[i] > 0.0) || !(parent[i] > 0.0))
            raise(errc::bad_config, "parent sizes and book volumes must be positive");
        ratio[k] = parent[i] / vbar[i];
        y[k] = terminal_return[i];
    }

    impact_curve out;
    out.n_used = keep.size();
    out.gamma = gamma_grid;
    out.corr.resize(gamma_grid.size());
    out.ci_lo.resize(gamma_grid.size());
    out.ci_hi.resize(gamma_grid.size());
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> x(keep.size());
    for (std::size_t g = 0; g < gamma_grid.size(); ++g) {
        for (std::size_t k = 0; k < keep.size(); ++k) x[k] = std::pow(ratio[k], gamma_grid[g]);
        const double r = pearson(x, y);
        const corr_test t = fisher_corr_test(r, keep.size(), 2.5758293035489004);  // 99%
        out.corr[g] = r;
        out.ci_lo[g] = t.ci_lo;
        out.ci_hi[g] = t.ci_hi;
        if (r == r && r < best) {
            best = r;
            out.gamma_star = gamma_grid[g];
        }
    }
    if (!(best < std::numeric_limits<double>::infinity()))
        raise(errc::degenerate_grid, "correlation undefined on the whole grid");

    // straight OLS of return on the square-root law
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < keep.size(); ++k) {
        x[k] = std::sqrt(ratio[k]);
        mx += x[k];
        my += y[k];
    }
    mx /= static_cast<double>(keep.size());
    my /= static_cast<double>(keep.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < keep.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
    }
    if (sxx <= 0.0) raise(errc::degenerate_grid, "constant regressor in sqrt fit");
    out.sqrt_slope = sxy / sxx;
    out.sqrt_intercept = my - out.sqrt_slope * mx;
    double sse = 0.0;
    for (std::size_t k = 0; k < keep.size(); ++k) {
        const double e = y[k] - out.sqrt_intercept - out.sqrt_slope * x[k];
        sse += e * e;
    }
    const double sigma2 = sse / static_cast<double>(keep.size() - 2);
    out.sqrt_slope_ci95 = 1.959963984540054 * std::sqrt(sigma2 / sxx);
    return out;
}

// ---------------------------------------------------------------------------
// execution summaries

struct box_stats {
    double q025 = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, q975 = 0.0, mean = 0.0;
    std::size_t n = 0;
};

inline box_stats make_box(const std::vector<double>& xs) {
    box_stats b;
    b.n = xs.size();
    if (xs.empty()) {
        b.q025 = b.q25 = b.q50 = b.q75 = b.q975 = b.mean = stats_nan();
        return b;
    }
    b.q025 = quantile_type7(xs, 0.025);
    b.q25 = quantile_type7(xs, 0.25);
    b.q50 = quantile_type7(xs, 0.5);
    b.q75 = quantile_type7(xs, 0.75);
    b.q975 = quantile_type7(xs, 0.975);
    for (double v : xs) b.mean += v;
    b.mean /= static_cast<double>(xs.size());
    return b;
}

struct execution_summary {
    box_stats executed_per_step;         // limit volume filled per transition, path-averaged
    box_stats fill_ratio;                // filled / posted per path (paths that posted)
    box_stats final_inventory;           // inventory at the terminal state
    box_stats pre_terminal_inventory;    // inventory before the last transition
    box_stats relative_cash;             // cash / I0 − initial mid, per path (I0 ≠ 0)
    std::size_t valid_paths = 0, invalid_paths = 0;
};

inline execution_summary execution_summaries(const path_set& ps) {
    execution_summary out;
    std::vector<double> executed, ratio, fin, pre, cash;
    for (const auto& p : ps.paths) {
        if (!p.valid) {
            ++out.invalid_paths;
            continue;
        }
        ++out.valid_paths;
        std::int64_t filled = 0, posted = 0;
        for (const auto& st : p.steps) {
            filled += st.filled;
            posted += st.posted;
        }
        if (!p.steps.empty())
            executed.push_back(static_cast<double>(filled) / static_cast<double>(p.steps.size()));
        if (posted > 0) ratio.push_back(static_cast<double>(filled) / static_cast<double>(posted));
        fin.push_back(static_cast<double>(p.inventory.back()));
        if (p.n_states() >= 2)
            pre.push_back(static_cast<double>(p.inventory[p.n_states() - 2]));
        const std::int64_t i0 = p.inventory.front();
        if (i0 != 0) {
            const double mid0 = path_price(p, ps.levels, 0, price_kind::mid);
            if (mid0 == mid0)
                cash.push_back(static_cast<double>(p.cash.back()) / static_cast<double>(i0) - mid0);
        }
    }
    out.executed_per_step = make_box(executed);
    out.fill_ratio = make_box(ratio);
    out.final_inventory = make_box(fin);
    out.pre_terminal_inventory = make_box(pre);
    out.relative_cash = make_box(cash);
    return out;
}

// ---------------------------------------------------------------------------
// level correlation matrices

struct level_correlations {
    int dim = 0;
    std::vector<double> static_corr;  // dim×dim over states
    std::vector<double> diff_corr;    // dim×dim over per-step volume changes
};

// Observations start at state `from_state` (default 1: for resampled paths
// that restricts to the generated states, leaving out the initial draws).
inline level_correlations volume_change_correlations(const path_set& ps, std::size_t from_state = 1) {
    const std::size_t d = static_cast<std::size_t>(2 * ps.levels);
    std::vector<double> statics, diffs;
    for (const auto& p : ps.paths) {
        if (!p.valid) continue;
        for (std::size_t s = from_state; s < p.n_states(); ++s) {
            const std::int32_t* v = p.volumes.data() + s * d;
            for (std::size_t j = 0; j < d; ++j) statics.push_back(static_cast<double>(v[j]));
            if (s + 1 < p.n_states()) {
                const std::int32_t* w = p.volumes.data() + (s + 1) * d;
                for (std::size_t j = 0; j < d; ++j)
                    diffs.push_back(static_cast<double>(w[j]) - static_cast<double>(v[j]));
            }
        }
    }
    level_correlations out;
    out.dim = 2 * ps.levels;
    out.static_corr = pearson_matrix(statics.data(), statics.size() / d, out.dim);
    out.diff_corr = pearson_matrix(diffs.data(), diffs.size() / d, out.dim);
    return out;
}

// Same matrices over single dataset transitions (before → after).
inline level_correlations volume_change_correlations(const dataset& ds, std::size_t from,
                                                     std::size_t to) {
    if (from >= to || to > ds.size()) raise(errc::bad_config, "bad sample range");
    const std::size_t d = static_cast<std::size_t>(2 * ds.levels());
    std::vector<double> statics, diffs;
    statics.reserve((to - from) * d);
    diffs.reserve((to - from) * d);
    for (std::size_t i = from; i < to; ++i) {
        const std::int32_t* v = ds.volumes(i);
        for (std::size_t j = 0; j < d; ++j) {
            statics.push_back(static_cast<double>(v[j]));
            diffs.push_back(static_cast<double>(v[d + j]) - static_cast<double>(v[j]));
        }
    }
    level_correlations out;
    out.dim = 2 * ds.levels();
    out.static_corr = pearson_matrix(statics.data(), to - from, out.dim);
    out.diff_corr = pearson_matrix(diffs.data(), to - from, out.dim);
    return out;
}

// ---------------------------------------------------------------------------
// histograms, distances

struct histogram {
    double lo = 0.0, hi = 0.0;
    std::vector<std::uint64_t> counts;
    std::size_t n = 0;  // total, including values clamped into the edge bins
};

inline histogram make_histogram(const std::vector<double>& xs, double lo, double hi, int bins) {
    if (bins < 1 || !(hi > lo)) raise(errc::bad_config, "bad histogram layout");
    histogram h;
    h.lo = lo;
    h.hi = hi;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (double v : xs) {
        if (v != v) continue;
        int b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
        b = std::clamp(b, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(b)];
        ++h.n;
    }
    return h;
}

struct distance_stats {
    std::vector<double> mean, q95;
    std::vector<std::size_t> count;
};

// Per-step match distance summary over valid paths.
inline distance_stats neighbor_distance_stats(const path_set& ps) {
    const std::size_t n_steps = static_cast<std::size_t>(ps.horizon);
    std::vector<std::vector<double>> per_step(n_steps);
    for (const auto& p : ps.paths) {
        if (!p.valid) continue;
        for (std::size_t s = 0; s < std::min(n_steps, p.steps.size()); ++s)
            per_step[s].push_back(p.steps[s].distance);
    }
    distance_stats out;
    out.mean.assign(n_steps, stats_nan());
    out.q95.assign(n_steps, stats_nan());
    out.count.assign(n_steps, 0);
    for (std::size_t s = 0; s < n_steps; ++s) {
        out.count[s] = per_step[s].size();
        if (per_step[s].empty()) continue;
        double m = 0.0;
        for (double v : per_step[s]) m += v;
        out.mean[s] = m / static_cast<double>(per_step[s].size());
        out.q95[s] = quantile_type7(per_step[s], 0.95);
    }
    return out;
}

}  // namespace lobsim
