// lobsim: ingestion, simulation, benchmarks and statistics around the
// k-nearest-neighbor LOB path resampler. Every subcommand is reproducible
// from its flags, seed and input files alone.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "lobsim/agents.hpp"
#include "lobsim/dataset.hpp"
#include "lobsim/engine.hpp"
#include "lobsim/errors.hpp"
#include "lobsim/events.hpp"
#include "lobsim/naive.hpp"
#include "lobsim/paths.hpp"
#include "lobsim/stats.hpp"
#include "lobsim/synth.hpp"

namespace fs = std::filesystem;
using namespace lobsim;

namespace {

// 0 ok, 2 usage, 3 data error, 4 simulation error
int exit_code_for(errc c) {
    switch (c) {
        case errc::bad_config:
            return 2;
        case errc::empty_side:
        case errc::non_positive_price:
        case errc::unknown_order:
        case errc::overcancel:
        case errc::insufficient_depth:
        case errc::crossing_order:
        case errc::out_of_window:
        case errc::non_positive_qty:
        case errc::zero_level_volume:
        case errc::zero_residual_volume:
            return 4;
        default:
            return 3;
    }
}

std::string fmt_d(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

constexpr std::uint32_t dataset_magic = 0x4c4f4244;  // "LOBD"
constexpr std::uint32_t paths_magic = 0x4c4f4250;    // "LOBP"

std::uint32_t sniff_magic(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(errc::io_error, "cannot open " + path);
    std::uint32_t m = 0;
    in.read(reinterpret_cast<char*>(&m), sizeof m);
    if (!in) raise(errc::bad_format, "file too short to identify: " + path);
    return m;
}

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(errc::io_error, "cannot open " + path + " for writing");
    return out;
}

fill_mechanism parse_mechanism(const std::string& s) {
    if (s == "allocation") return fill_mechanism::allocation;
    if (s == "pro-rata" || s == "pro_rata") return fill_mechanism::pro_rata;
    raise(errc::bad_config, "unknown fill mechanism '" + s + "'");
}

feature_mode parse_feature_mode(const std::string& s) {
    if (s == "raw") return feature_mode::raw;
    if (s == "pca") return feature_mode::pca;
    raise(errc::bad_config, "unknown feature mode '" + s + "'");
}

price_kind parse_price_kind(const std::string& s) {
    if (s == "mid") return price_kind::mid;
    if (s == "weighted") return price_kind::weighted;
    raise(errc::bad_config, "unknown price kind '" + s + "'");
}

double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        raise(errc::bad_config, std::string("bad ") + what + " '" + s + "'");
    }
}

// grid tokens: plain numbers or lo:hi:step ranges (inclusive endpoints)
std::vector<double> parse_grid(const std::vector<std::string>& tokens, const char* what) {
    std::vector<double> out;
    for (const auto& tok : tokens) {
        const auto c1 = tok.find(':');
        if (c1 == std::string::npos) {
            out.push_back(parse_double(tok, what));
            continue;
        }
        const auto c2 = tok.find(':', c1 + 1);
        if (c2 == std::string::npos) raise(errc::bad_config, std::string(what) + " range needs lo:hi:step");
        const double lo = parse_double(tok.substr(0, c1), what);
        const double hi = parse_double(tok.substr(c1 + 1, c2 - c1 - 1), what);
        const double step = parse_double(tok.substr(c2 + 1), what);
        if (step <= 0.0 || hi < lo) raise(errc::bad_config, std::string(what) + " range is empty");
        for (double v = lo; v <= hi + 1e-12; v += step) out.push_back(v);
    }
    if (out.empty()) raise(errc::bad_config, std::string(what) + " resolved to an empty grid");
    return out;
}

// ---------------------------------------------------------------------------
// strategy specs: name[:key=value,key=value...]

struct strategy_spec {
    std::string name;
    std::map<std::string, std::string> kv;
};

strategy_spec parse_strategy_spec(const std::string& s) {
    strategy_spec spec;
    const auto colon = s.find(':');
    spec.name = s.substr(0, colon);
    if (colon != std::string::npos) {
        std::stringstream ss(s.substr(colon + 1));
        std::string item;
        while (std::getline(ss, item, ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos || eq == 0)
                raise(errc::bad_config, "strategy parameter '" + item + "' is not key=value");
            spec.kv[item.substr(0, eq)] = item.substr(eq + 1);
        }
    }
    return spec;
}

std::int64_t spec_int(const strategy_spec& s, const std::string& key, std::int64_t def,
                      bool required = false) {
    const auto it = s.kv.find(key);
    if (it == s.kv.end()) {
        if (required) raise(errc::bad_config, "strategy '" + s.name + "' needs " + key + "=<int>");
        return def;
    }
    return static_cast<std::int64_t>(parse_double(it->second, key.c_str()));
}

double spec_double(const strategy_spec& s, const std::string& key, double def,
                   bool required = false) {
    const auto it = s.kv.find(key);
    if (it == s.kv.end()) {
        if (required) raise(errc::bad_config, "strategy '" + s.name + "' needs " + key + "=<num>");
        return def;
    }
    return parse_double(it->second, key.c_str());
}

strategy_factory make_strategy_factory(const std::string& text, int levels) {
    const strategy_spec s = parse_strategy_spec(text);
    const std::set<std::string> known_keys = {"parent", "child-steps", "side",  "qty",
                                              "multiple", "inventory",  "offset"};
    for (const auto& [k, v] : s.kv)
        if (!known_keys.count(k)) raise(errc::bad_config, "unknown strategy parameter '" + k + "'");

    auto side_of = [&](const char* def) {
        const auto it = s.kv.find("side");
        const std::string v = it == s.kv.end() ? def : it->second;
        if (v == "sell" || v == "ask") return 1;
        if (v == "buy" || v == "bid") return 0;
        raise(errc::bad_config, "bad side '" + v + "'");
    };

    if (s.name == "noop") {
        return [] { return std::make_unique<noop_strategy>(); };
    }
    if (s.name == "twap") {
        const volume_t parent = spec_int(s, "parent", 0, true);
        const int child = static_cast<int>(spec_int(s, "child-steps", 30));
        const aggressor_side side = side_of("sell") ? aggressor_side::sell : aggressor_side::buy;
        return [=] { return std::make_unique<twap_market_liquidation>(parent, child, side); };
    }
    if (s.name == "best-bid") {
        const volume_t qty = spec_int(s, "qty", 0, true);
        return [=] { return std::make_unique<constant_best_bid_quote>(qty); };
    }
    if (s.name == "inventory-multiple") {
        const double mult = spec_double(s, "multiple", 0.0, true);
        const std::int64_t inv = spec_int(s, "inventory", 40);
        return [=] { return std::make_unique<inventory_multiple_liquidation>(mult, inv); };
    }
    if (s.name == "level-quote") {
        const int offset = static_cast<int>(spec_int(s, "offset", 0, true));
        const volume_t parent = spec_int(s, "parent", 0, true);
        const int child = static_cast<int>(spec_int(s, "child-steps", 30));
        const order_side side = side_of("ask") ? order_side::ask : order_side::bid;
        return [=] { return std::make_unique<constant_level_quote>(offset, parent, child, side, levels); };
    }
    raise(errc::bad_config, "unknown strategy '" + s.name + "'");
}

// ---------------------------------------------------------------------------
// shared option bags

struct sim_opts {
    std::string dataset_file, out, export_csv, strategy = "noop";
    std::uint32_t k = 20;
    int steps = 60;
    std::size_t paths = 10000;
    std::string mechanism = "allocation";
    std::string mode = "raw";
    double train_fraction = 0.8;
    int components = 8;
    std::uint64_t seed = 1;
    int threads = 0;
    bool paired = false;
};

void add_sim_options(CLI::App* sub, sim_opts& o, bool with_strategy) {
    sub->add_option("--dataset", o.dataset_file, "dataset archive")->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "output path archive")->required();
    sub->add_option("--steps", o.steps, "transitions per path")->capture_default_str();
    sub->add_option("--paths", o.paths, "number of paths")->capture_default_str();
    sub->add_option("--seed", o.seed, "rng seed")->capture_default_str();
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores)")
        ->capture_default_str();
    sub->add_option("--train-fraction", o.train_fraction, "chronological train split")
        ->capture_default_str();
    if (with_strategy) {
        sub->add_option("--k", o.k, "neighbors per query")->capture_default_str();
        sub->add_option("--strategy", o.strategy,
                        "noop | twap:parent=N[,child-steps=30][,side=sell] | best-bid:qty=N | "
                        "inventory-multiple:multiple=X[,inventory=40] | "
                        "level-quote:offset=L,parent=N[,child-steps=30][,side=ask]")
            ->capture_default_str();
        sub->add_option("--mechanism", o.mechanism, "fill attribution")
            ->check(CLI::IsMember({"allocation", "pro-rata"}))->capture_default_str();
        sub->add_option("--mode", o.mode, "query feature space")
            ->check(CLI::IsMember({"raw", "pca"}))->capture_default_str();
        sub->add_option("--components", o.components, "PCA components in pca mode")
            ->capture_default_str();
        sub->add_option("--export-csv", o.export_csv, "also dump the paths as CSV");
        sub->add_flag("--paired-init", o.paired, "walk the init pool in order instead of sampling");
    }
}

// ---------------------------------------------------------------------------
// real side of stats: a path archive as-is, or rollouts cut from a dataset

struct real_side {
    bool from_dataset = false;
    dataset ds;          // filled when from_dataset
    path_set paths;      // always usable after coerce()
};

real_side load_real(const std::string& file) {
    real_side r;
    const std::uint32_t m = sniff_magic(file);
    if (m == paths_magic) {
        r.paths = path_set::load(file);
    } else if (m == dataset_magic) {
        r.from_dataset = true;
        r.ds = dataset::load(file);
    } else {
        raise(errc::bad_format, "neither a dataset nor a path archive: " + file);
    }
    return r;
}

// historical continuations of the given horizon from every eligible start
void coerce_rollouts(real_side& r, int horizon) {
    if (!r.from_dataset || !r.paths.paths.empty()) return;
    const auto starts = eligible_starts(r.ds, 0, horizon);
    if (starts.empty())
        raise(errc::insufficient_history, "no chained runs of " + std::to_string(horizon) +
                                              " transitions in the dataset");
    r.paths = real_rollouts(r.ds, starts, horizon);
}

// rollouts paired to the simulated paths' initial states
path_set rollouts_at_sim_inits(const dataset& ds, const path_set& sim) {
    std::set<std::uint32_t> ids;
    for (const auto& p : sim.paths)
        if (p.valid) ids.insert(p.init_index);
    std::vector<std::uint32_t> starts;
    for (const std::uint32_t i : ids) {
        if (i + static_cast<std::size_t>(sim.horizon) > ds.size()) continue;
        bool ok = true;
        for (int s = 0; ok && s + 1 < sim.horizon; ++s)
            ok = ds.chained(i + static_cast<std::uint32_t>(s));
        if (ok) starts.push_back(i);
    }
    if (starts.empty())
        raise(errc::unpaired_paths, "no simulated initial state has a full historical continuation");
    return real_rollouts(ds, starts, sim.horizon);
}

void write_quantile_table(std::ofstream& out, const char* source, const quantile_path_table& t) {
    for (std::size_t s = 0; s < t.mean.size(); ++s) {
        out << source << ',' << s << ',' << t.count[s] << ',' << fmt_d(t.mean[s]);
        for (std::size_t q = 0; q < t.levels.size(); ++q) out << ',' << fmt_d(t.quantiles[q][s]);
        out << '\n';
    }
}

std::string quantile_header(const std::vector<double>& qs) {
    std::string h = "source,step,count,mean";
    for (double q : qs) {
        std::string label = std::to_string(q);
        label.erase(label.find_last_not_of('0') + 1);
        if (!label.empty() && label.back() == '.') label.pop_back();
        h += ",q" + label;
    }
    return h;
}

// ---------------------------------------------------------------------------
// subcommand bodies

struct ingest_opts {
    std::string events_dir, out;
    int levels = 5;
    std::uint32_t interval = 250;
    bool extended = false;
    std::int64_t tick_num = 5, tick_den = 1000;
};

void run_ingest(const ingest_opts& o) {
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(o.events_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path().string());
    }
    if (files.empty()) raise(errc::io_error, "no .csv event files under " + o.events_dir);
    std::sort(files.begin(), files.end());

    // one source per file; the contract is the filename stem up to the first
    // underscore, so SFRH4_day1.csv and SFRH4_day2.csv land in one contract
    std::vector<stream_source> sources;
    for (const auto& f : files) {
        std::string stem = fs::path(f).stem().string();
        const auto us = stem.find('_');
        if (us != std::string::npos) stem = stem.substr(0, us);
        auto reader = std::make_shared<event_csv_reader>(f);
        sources.push_back({stem, [reader](lob_event& e) { return reader->next(e); }});
    }

    build_options opt;
    opt.levels = o.levels;
    opt.interval = o.interval;
    opt.extended_features = o.extended;
    opt.tick = tick_size{o.tick_num, o.tick_den};
    const dataset ds = dataset::build_sources(sources, opt);
    if (ds.size() == 0) raise(errc::insufficient_history, "ingestion produced no transitions");
    ds.save(o.out);
    std::cout << "dataset: " << ds.size() << " transitions, " << ds.contracts().size()
              << " contracts -> " << o.out << "\n";
}

struct synth_opts {
    std::string out_dir, contract = "SYN", params_file;
    std::size_t events = 100000;
    int streams = 1;
    synth_params par;
    std::vector<std::string> targets;
};

// flat key=value file applied wherever the command line stayed silent
void apply_params_file(CLI::App* sub, const std::string& file) {
    std::ifstream in(file);
    if (!in) raise(errc::io_error, "cannot open params file " + file);
    const CLI::ConfigTOML reader;
    std::vector<CLI::ConfigItem> items;
    try {
        items = reader.from_config(in);
    } catch (const CLI::Error& e) {
        raise(errc::bad_config, std::string("params file: ") + e.what());
    }
    for (const auto& item : items) {
        if (!item.parents.empty() && item.parents != std::vector<std::string>{sub->get_name()})
            raise(errc::bad_config, "unknown section [" + item.fullname() + "] in " + file);
        CLI::Option* opt = sub->get_option_no_throw("--" + item.name);
        if (opt == nullptr) raise(errc::bad_config, "unknown parameter '" + item.name + "' in " + file);
        if (opt->count() > 0) continue;  // explicit flags win
        try {
            for (const auto& v : item.inputs) opt->add_result(v);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            raise(errc::bad_config, "bad value for '" + item.name + "': " + e.what());
        }
    }
}

void run_synth(const synth_opts& o) {
    if (o.streams < 1) raise(errc::bad_config, "need at least one stream");
    synth_params par = o.par;
    if (!o.targets.empty()) {
        par.level_targets.clear();
        for (const auto& t : o.targets)
            par.level_targets.push_back(static_cast<volume_t>(parse_double(t, "level target")));
    }
    fs::create_directories(o.out_dir);
    for (int s = 0; s < o.streams; ++s) {
        synth_params sp = par;
        sp.seed = par.seed + static_cast<std::uint64_t>(s);
        std::string name = o.contract;
        if (o.streams > 1) {
            char suffix[16];
            std::snprintf(suffix, sizeof suffix, "_%03d", s);
            name += suffix;
        }
        const std::string file = (fs::path(o.out_dir) / (name + ".csv")).string();

        // seed book as a limit_add prologue, then the generated stream with
        // shifted seqs; ingest replays the prologue into the same opening book
        synth_stream gen(sp, o.events);
        std::ofstream out(file);
        if (!out) raise(errc::io_error, "cannot open " + file + " for writing");
        out << "seq,kind,side,price_tick,qty,level_volume_at_exec,aggressor_priority_qty\n";
        std::uint64_t seq = 0;
        for (const auto& [side, tick, qty] : gen.initial_book()) {
            out << ++seq << ",limit_add," << (side == order_side::bid ? "bid" : "ask") << ','
                << tick << ',' << qty << ",,\n";
        }
        const std::uint64_t offset = seq;
        lob_event e;
        while (gen.next(e)) {
            e.seq += offset;
            out << e.seq << ',' << event_kind_name(e.kind) << ',' << event_side_name(e) << ','
                << e.price_tick << ',' << e.qty << ',';
            if (e.kind == event_kind::trade)
                out << e.level_volume_at_exec << ',' << e.aggressor_priority_qty;
            else
                out << ',';
            out << '\n';
        }
        std::cout << "synth: " << (offset + gen.total_events()) << " events -> " << file << "\n";
    }
}

void run_simulate(const sim_opts& o) {
    const dataset ds = dataset::load(o.dataset_file);
    const engine_data eng = build_engine_data(ds, parse_feature_mode(o.mode), o.train_fraction,
                                              o.components);
    sim_config cfg;
    cfg.k = o.k;
    cfg.horizon = o.steps;
    cfg.n_paths = o.paths;
    cfg.mechanism = parse_mechanism(o.mechanism);
    cfg.seed = o.seed;
    cfg.threads = o.threads;
    cfg.paired_init = o.paired;

    const strategy_factory factory = make_strategy_factory(o.strategy, ds.levels());
    const path_set ps = resample_paths(eng, factory, cfg);
    ps.save(o.out);
    if (!o.export_csv.empty()) ps.export_csv(o.export_csv);
    std::cout << "simulate: " << ps.valid_count() << "/" << ps.paths.size() << " valid paths -> "
              << o.out << "\n";
}

void run_naive(const sim_opts& o) {
    const dataset ds = dataset::load(o.dataset_file);
    const std::size_t train_end = split_index(ds.size(), o.train_fraction);
    std::vector<std::uint32_t> pool;
    for (std::size_t i = train_end; i < ds.size(); ++i)
        pool.push_back(static_cast<std::uint32_t>(i));
    if (pool.empty()) raise(errc::insufficient_history, "empty test split for initial states");
    const path_set ps = naive_resample(ds, train_end, pool, o.steps, o.paths, o.seed, o.threads,
                                       o.paired);
    ps.save(o.out);
    std::cout << "naive: " << ps.paths.size() << " paths -> " << o.out << "\n";
}

struct stats_opts {
    std::string subreport, real_file, sim_file, out, price = "mid";
    int step = 1;
    int bins = 60;
    std::vector<int> horizons = {1, 10, 30, 60};
    std::size_t batch = 1000;
    int repeats = 10;
    std::uint64_t seed = 1234;
    double low_q = 0.05, high_q = 0.95;
    std::vector<double> quantiles = {0.025, 0.25, 0.5, 0.75, 0.975};
};

void stats_marginals(const stats_opts& o) {
    const path_set sim = path_set::load(o.sim_file);
    real_side real = load_real(o.real_file);

    std::vector<std::uint32_t> all_ids;
    if (real.from_dataset) {
        if (real.ds.levels() != sim.levels) raise(errc::dimension_mismatch, "levels differ");
        all_ids.resize(real.ds.size());
        for (std::size_t i = 0; i < real.ds.size(); ++i)
            all_ids[i] = static_cast<std::uint32_t>(i);
        if (o.step != 1)
            coerce_rollouts(real, o.step);  // multi-step marginals need rollouts
    } else if (real.paths.levels != sim.levels) {
        raise(errc::dimension_mismatch, "levels differ");
    }

    auto real_samples = [&](int index) {
        if (real.from_dataset && o.step == 1) return signed_volume_samples(real.ds, all_ids, index);
        return signed_volume_samples(real.paths, o.step, index);
    };

    std::ofstream out = open_csv(o.out);
    out << "kind,source,index,a,b,c\n";
    const int d = 2 * sim.levels;
    for (int i = 0; i < d; ++i) {
        const auto rs = real_samples(i);
        const auto ss = signed_volume_samples(sim, o.step, i);
        if (rs.empty() || ss.empty()) raise(errc::empty_sample, "no marginal samples");
        double lo = rs[0], hi = rs[0];
        for (double v : rs) { lo = std::min(lo, v); hi = std::max(hi, v); }
        for (double v : ss) { lo = std::min(lo, v); hi = std::max(hi, v); }
        if (hi <= lo) hi = lo + 1e-9;
        const histogram hr = make_histogram(rs, lo, hi, o.bins);
        const histogram hs = make_histogram(ss, lo, hi, o.bins);
        const double w = (hi - lo) / o.bins;
        for (int b = 0; b < o.bins; ++b) {
            const double center = lo + (b + 0.5) * w;
            out << "hist,real," << i << ',' << fmt_d(center) << ','
                << fmt_d(static_cast<double>(hr.counts[static_cast<std::size_t>(b)]) /
                         (static_cast<double>(hr.n) * w)) << ",\n";
            out << "hist,sim," << i << ',' << fmt_d(center) << ','
                << fmt_d(static_cast<double>(hs.counts[static_cast<std::size_t>(b)]) /
                         (static_cast<double>(hs.n) * w)) << ",\n";
        }
        double rmean = 0.0, smean = 0.0;
        for (double v : rs) rmean += v;
        for (double v : ss) smean += v;
        out << "shape,real," << i << ',' << fmt_d(rmean / static_cast<double>(rs.size())) << ','
            << rs.size() << ",\n";
        out << "shape,sim," << i << ',' << fmt_d(smean / static_cast<double>(ss.size())) << ','
            << ss.size() << ",\n";
    }
}

void stats_correlations(const stats_opts& o) {
    const path_set sim = path_set::load(o.sim_file);
    real_side real = load_real(o.real_file);

    const level_correlations lr = real.from_dataset
                                      ? volume_change_correlations(real.ds, 0, real.ds.size())
                                      : volume_change_correlations(real.paths);
    const level_correlations ls = volume_change_correlations(sim);
    if (lr.dim != ls.dim) raise(errc::dimension_mismatch, "levels differ");

    std::ofstream out = open_csv(o.out);
    out << "kind,source,row,col,value\n";
    auto dump = [&](const char* kind, const char* source, const std::vector<double>& m, int d) {
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                out << kind << ',' << source << ',' << i << ',' << j << ','
                    << fmt_d(m[static_cast<std::size_t>(i * d + j)]) << '\n';
    };
    dump("static", "real", lr.static_corr, lr.dim);
    dump("diff", "real", lr.diff_corr, lr.dim);
    dump("static", "sim", ls.static_corr, ls.dim);
    dump("diff", "sim", ls.diff_corr, ls.dim);
}

void stats_returns(const stats_opts& o) {
    const path_set sim = path_set::load(o.sim_file);
    real_side real = load_real(o.real_file);
    coerce_rollouts(real, sim.horizon);
    const price_kind kind = parse_price_kind(o.price);

    std::ofstream out = open_csv(o.out);
    out << quantile_header(o.quantiles) << '\n';
    write_quantile_table(out, "real", return_quantile_paths(real.paths, kind, o.quantiles));
    write_quantile_table(out, "sim", return_quantile_paths(sim, kind, o.quantiles));
}

void stats_return_corr(const stats_opts& o) {
    const path_set sim = path_set::load(o.sim_file);
    real_side real = load_real(o.real_file);
    if (real.from_dataset) real.paths = rollouts_at_sim_inits(real.ds, sim);
    const corr_over_time c =
        return_correlation_over_time(real.paths, sim, parse_price_kind(o.price));

    std::ofstream out = open_csv(o.out);
    out << "step,pairs,corr,ci_lo,ci_hi,p_value\n";
    for (std::size_t s = 1; s < c.corr.size(); ++s)
        out << s << ',' << c.pairs[s] << ',' << fmt_d(c.corr[s]) << ',' << fmt_d(c.ci_lo[s]) << ','
            << fmt_d(c.ci_hi[s]) << ',' << fmt_d(c.p_value[s]) << '\n';
}

void stats_obi_conditioned(const stats_opts& o) {
    const path_set sim = path_set::load(o.sim_file);
    real_side real = load_real(o.real_file);
    coerce_rollouts(real, sim.horizon);
    const price_kind kind = parse_price_kind(o.price);

    // band cuts come from the real initial states and condition both sets
    std::vector<double> pool;
    for (const auto& p : real.paths.paths)
        if (p.valid) pool.push_back(order_book_imbalance(p.snapshot(0, real.paths.levels)));
    const obi_band_tables br =
        obi_conditioned_returns(real.paths, pool, kind, o.quantiles, o.low_q, o.high_q);
    const obi_band_tables bs =
        obi_conditioned_returns(sim, pool, kind, o.quantiles, o.low_q, o.high_q);

    std::ofstream out = open_csv(o.out);
    out << "# low_cut=" << fmt_d(br.low_cut) << " high_cut=" << fmt_d(br.high_cut) << '\n';
    out << "band," << quantile_header(o.quantiles) << '\n';
    auto dump = [&](const char* band, const char* source, const quantile_path_table& t) {
        for (std::size_t s = 0; s < t.mean.size(); ++s) {
            out << band << ',' << source << ',' << s << ',' << t.count[s] << ','
                << fmt_d(t.mean[s]);
            for (std::size_t q = 0; q < t.levels.size(); ++q)
                out << ',' << fmt_d(t.quantiles[q][s]);
            out << '\n';
        }
    };
    dump("low", "real", br.low);
    dump("high", "real", br.high);
    dump("low", "sim", bs.low);
    dump("high", "sim", bs.high);
}

void stats_ks_table(const stats_opts& o) {
    const path_set sim = path_set::load(o.sim_file);
    real_side real = load_real(o.real_file);
    int horizon = 1;
    for (int h : o.horizons)
        if (h <= sim.horizon) horizon = std::max(horizon, h);
    coerce_rollouts(real, horizon);

    const auto rf = ks_feature_samples(real.paths, o.horizons);
    const auto sf = ks_feature_samples(sim, o.horizons);

    std::ofstream out = open_csv(o.out);
    out << "# batch=" << o.batch << " repeats=" << o.repeats << " seed=" << o.seed << '\n';
    out << "feature,real_n,sim_n,ks_mean,ks_std\n";
    for (const auto& r : rf) {
        const auto it = std::find_if(sf.begin(), sf.end(),
                                     [&](const named_samples& s) { return s.name == r.name; });
        if (it == sf.end()) continue;
        const ks_cell cell = ks_benchmark(r.values, it->values, o.batch, o.repeats, o.seed);
        out << r.name << ',' << r.values.size() << ',' << it->values.size() << ','
            << fmt_d(cell.mean) << ',' << fmt_d(cell.stddev) << '\n';
    }
}

void stats_distances(const stats_opts& o) {
    const path_set sim = path_set::load(o.sim_file);
    const distance_stats d = neighbor_distance_stats(sim);
    std::ofstream out = open_csv(o.out);
    out << "step,count,mean,q95\n";
    for (std::size_t s = 0; s < d.mean.size(); ++s)
        out << s << ',' << d.count[s] << ',' << fmt_d(d.mean[s]) << ',' << fmt_d(d.q95[s]) << '\n';
}

void run_stats(const stats_opts& o) {
    if (o.subreport == "marginals") return stats_marginals(o);
    if (o.subreport == "correlations") return stats_correlations(o);
    if (o.subreport == "returns") return stats_returns(o);
    if (o.subreport == "return-corr") return stats_return_corr(o);
    if (o.subreport == "obi-conditioned") return stats_obi_conditioned(o);
    if (o.subreport == "ks-table") return stats_ks_table(o);
    if (o.subreport == "distances") return stats_distances(o);
    raise(errc::bad_config, "unknown subreport '" + o.subreport + "'");
}

struct impact_opts {
    sim_opts sim;
    std::vector<std::string> sizes;
    std::vector<std::string> gamma_grid = {"0.05:2.0:0.05"};
    int child_steps = 30;
};

void run_impact(const impact_opts& o) {
    const dataset ds = dataset::load(o.sim.dataset_file);
    const engine_data eng = build_engine_data(ds, parse_feature_mode(o.sim.mode),
                                              o.sim.train_fraction, o.sim.components);
    const std::vector<double> grid = parse_grid(o.gamma_grid, "gamma");
    std::vector<double> sizes = parse_grid(o.sizes, "size");
    std::sort(sizes.begin(), sizes.end());

    std::vector<double> parent, vbar, ret;
    std::vector<std::pair<double, box_stats>> per_size;
    for (const double p : sizes) {
        sim_config cfg;
        cfg.k = o.sim.k;
        cfg.horizon = o.sim.steps;
        cfg.n_paths = o.sim.paths;
        cfg.mechanism = parse_mechanism(o.sim.mechanism);
        cfg.seed = o.sim.seed;  // same seed per size: initial states are paired
        cfg.threads = o.sim.threads;
        const volume_t pv = static_cast<volume_t>(p);
        const path_set ps = resample_paths(
            eng,
            [&] { return std::make_unique<twap_market_liquidation>(pv, o.child_steps); }, cfg);

        std::vector<double> rets;
        for (const auto& path : ps.paths) {
            if (!path.valid) continue;
            const double m0 = path_price(path, ps.levels, 0, price_kind::mid);
            const double mT = path_price(path, ps.levels, path.n_states() - 1, price_kind::mid);
            if (!(m0 > 0.0 && mT > 0.0)) continue;
            const double v = static_cast<double>(path.snapshot(0, ps.levels).total_volume());
            if (!(v > 0.0)) continue;
            parent.push_back(p);
            vbar.push_back(v);
            ret.push_back(log_return(mT, m0));
            rets.push_back(log_return(mT, m0));
        }
        per_size.emplace_back(p, make_box(rets));
    }

    const impact_curve c = impact_gamma_sweep(parent, vbar, ret, grid);
    std::ofstream out = open_csv(o.sim.out);
    out << "kind,x,v1,v2,v3\n";
    for (std::size_t g = 0; g < c.gamma.size(); ++g)
        out << "gamma," << fmt_d(c.gamma[g]) << ',' << fmt_d(c.corr[g]) << ','
            << fmt_d(c.ci_lo[g]) << ',' << fmt_d(c.ci_hi[g]) << '\n';
    out << "gamma_star," << fmt_d(c.gamma_star) << ",,,\n";
    out << "sqrt_fit," << fmt_d(c.sqrt_slope) << ',' << fmt_d(c.sqrt_intercept) << ','
        << fmt_d(c.sqrt_slope_ci95) << ',' << c.n_used << '\n';
    for (const auto& [p, bs] : per_size)
        out << "size_mean," << fmt_d(p) << ',' << fmt_d(bs.mean) << ',' << fmt_d(bs.q50) << ','
            << bs.n << '\n';
    std::cout << "impact: gamma_star=" << fmt_d(c.gamma_star) << " over " << c.n_used
              << " trimmed paths -> " << o.sim.out << "\n";
}

struct calibrate_opts {
    sim_opts sim;
    std::vector<std::string> multipliers = {"0.5", "1.0", "1.25", "2.5"};
    std::int64_t inventory = 40;
};

void run_calibrate(const calibrate_opts& o) {
    const dataset ds = dataset::load(o.sim.dataset_file);
    const engine_data eng = build_engine_data(ds, parse_feature_mode(o.sim.mode),
                                              o.sim.train_fraction, o.sim.components);
    const std::vector<double> mults = parse_grid(o.multipliers, "multiplier");

    std::ofstream out = open_csv(o.sim.out);
    out << "multiplier,metric,n,mean,q025,q25,q50,q75,q975\n";
    for (const double m : mults) {
        sim_config cfg;
        cfg.k = o.sim.k;
        cfg.horizon = o.sim.steps;
        cfg.n_paths = o.sim.paths;
        cfg.mechanism = parse_mechanism(o.sim.mechanism);
        cfg.seed = o.sim.seed;
        cfg.threads = o.sim.threads;
        const path_set ps = resample_paths(
            eng,
            [&] { return std::make_unique<inventory_multiple_liquidation>(m, o.inventory); },
            cfg);
        const execution_summary es = execution_summaries(ps);
        auto row = [&](const char* metric, const box_stats& b) {
            out << fmt_d(m) << ',' << metric << ',' << b.n << ',' << fmt_d(b.mean) << ','
                << fmt_d(b.q025) << ',' << fmt_d(b.q25) << ',' << fmt_d(b.q50) << ','
                << fmt_d(b.q75) << ',' << fmt_d(b.q975) << '\n';
        };
        row("executed_per_step", es.executed_per_step);
        row("fill_ratio", es.fill_ratio);
        row("final_inventory", es.final_inventory);
        row("pre_terminal_inventory", es.pre_terminal_inventory);
        row("relative_cash", es.relative_cash);
        out << fmt_d(m) << ",invalid_paths," << es.invalid_paths << ",,,,,,\n";
    }
    std::cout << "calibrate: " << mults.size() << " multipliers -> " << o.sim.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"limit order book path resampling toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a config file (flags override)");

    ingest_opts ing;
    auto* ingest = app.add_subcommand("ingest", "build a transition dataset from event CSVs");
    ingest->add_option("--events", ing.events_dir, "directory of event CSV files")->required()
        ->check(CLI::ExistingDirectory);
    ingest->add_option("--out", ing.out, "dataset archive to write")->required();
    ingest->add_option("--levels", ing.levels, "book levels per side")->capture_default_str();
    ingest->add_option("--interval", ing.interval, "events per transition")->capture_default_str();
    ingest->add_flag("--extended", ing.extended, "compute 16-dim extended feature payloads");
    ingest->add_option("--tick-num", ing.tick_num, "tick size numerator")->capture_default_str();
    ingest->add_option("--tick-den", ing.tick_den, "tick size denominator")->capture_default_str();

    synth_opts syn;
    auto* synth = app.add_subcommand("synth", "generate synthetic event streams");
    synth->add_option("--params", syn.params_file,
                      "key=value file of generator parameters (flags override)")
        ->check(CLI::ExistingFile);
    synth->add_option("--out", syn.out_dir, "output directory");
    synth->add_option("--events", syn.events, "events per stream")->capture_default_str();
    synth->add_option("--streams", syn.streams, "independent streams")->capture_default_str();
    synth->add_option("--contract", syn.contract, "contract name prefix")->capture_default_str();
    synth->add_option("--levels", syn.par.levels)->capture_default_str();
    synth->add_option("--block-events", syn.par.block_events)->capture_default_str();
    synth->add_option("--level-targets", syn.targets, "per-level resting volume targets")
        ->delimiter(',');
    synth->add_option("--level1-noise", syn.par.level1_noise)->capture_default_str();
    synth->add_option("--refill-noise", syn.par.refill_noise)->capture_default_str();
    synth->add_option("--min-level", syn.par.min_level)->capture_default_str();
    synth->add_option("--pf", syn.par.pf, "price flip probability")->capture_default_str();
    synth->add_option("--pf-ramp", syn.par.pf_ramp)->capture_default_str();
    synth->add_option("--theta", syn.par.theta, "imbalance drift coefficient")
        ->capture_default_str();
    synth->add_option("--kappa", syn.par.kappa, "trade impact coefficient")->capture_default_str();
    synth->add_option("--gamma0", syn.par.gamma0, "impact exponent")->capture_default_str();
    synth->add_option("--sweep-prob", syn.par.sweep_prob)->capture_default_str();
    synth->add_option("--sweep-min", syn.par.sweep_min)->capture_default_str();
    synth->add_option("--sweep-max", syn.par.sweep_max)->capture_default_str();
    synth->add_option("--target-ramp", syn.par.target_ramp)->capture_default_str();
    synth->add_option("--start-tick", syn.par.start_tick)->capture_default_str();
    synth->add_option("--seed", syn.par.seed)->capture_default_str();

    sim_opts sim;
    auto* simulate = app.add_subcommand("simulate", "run the k-NN resampler with a trading agent");
    add_sim_options(simulate, sim, true);

    sim_opts nai;
    auto* naive = app.add_subcommand("naive", "run the unconditional resampling benchmark");
    add_sim_options(naive, nai, false);
    naive->add_flag("--paired-init", nai.paired, "walk the init pool in order instead of sampling");

    stats_opts st;
    auto* stats = app.add_subcommand("stats", "fidelity and strategy statistics, plot-ready CSV");
    stats->add_option("subreport", st.subreport, "marginals | correlations | returns | "
                                                 "return-corr | obi-conditioned | ks-table | "
                                                 "distances")
        ->required();
    stats->add_option("--real", st.real_file, "real side: path archive or dataset")
        ->check(CLI::ExistingFile);
    stats->add_option("--sim", st.sim_file, "simulated path archive")->required()
        ->check(CLI::ExistingFile);
    stats->add_option("--out", st.out, "output CSV")->required();
    stats->add_option("--price", st.price, "mid | weighted")->capture_default_str();
    stats->add_option("--step", st.step, "transition count for marginals")->capture_default_str();
    stats->add_option("--bins", st.bins, "histogram bins")->capture_default_str();
    stats->add_option("--horizons", st.horizons, "ks-table horizons")->delimiter(',');
    stats->add_option("--batch", st.batch, "ks subsample size")->capture_default_str();
    stats->add_option("--repeats", st.repeats, "ks subsample repeats")->capture_default_str();
    stats->add_option("--seed", st.seed, "ks subsample seed")->capture_default_str();
    stats->add_option("--low-q", st.low_q, "low OBI band quantile")->capture_default_str();
    stats->add_option("--high-q", st.high_q, "high OBI band quantile")->capture_default_str();
    stats->add_option("--quantiles", st.quantiles, "report quantile levels")->delimiter(',');

    impact_opts imp;
    auto* impact = app.add_subcommand("impact", "parent-size impact sweep over TWAP liquidations");
    add_sim_options(impact, imp.sim, true);
    impact->get_option("--strategy")->group("");  // fixed to twap here
    impact->get_option("--out")->description("output summary CSV");
    impact->add_option("--sizes", imp.sizes, "parent sizes (numbers or lo:hi:step)")
        ->required()->delimiter(',');
    impact->add_option("--gamma-grid", imp.gamma_grid, "gamma grid (numbers or lo:hi:step)")
        ->delimiter(',');
    impact->add_option("--child-steps", imp.child_steps, "TWAP child order count")
        ->capture_default_str();

    calibrate_opts cal;
    auto* calibrate = app.add_subcommand("calibrate", "order-multiplier liquidation study");
    add_sim_options(calibrate, cal.sim, true);
    calibrate->get_option("--strategy")->group("");  // fixed to inventory-multiple here
    calibrate->get_option("--out")->description("output summary CSV");
    calibrate->add_option("--multipliers", cal.multipliers, "order multiples of inventory")
        ->delimiter(',');
    calibrate->add_option("--inventory", cal.inventory, "initial inventory")
        ->capture_default_str();

    ingest->callback([&] { run_ingest(ing); });
    synth->callback([&] {
        if (!syn.params_file.empty()) apply_params_file(synth, syn.params_file);
        if (syn.out_dir.empty()) raise(errc::bad_config, "synth needs --out");
        run_synth(syn);
    });
    simulate->callback([&] { run_simulate(sim); });
    naive->callback([&] { run_naive(nai); });
    stats->callback([&] { run_stats(st); });
    impact->callback([&] { run_impact(imp); });
    calibrate->callback([&] { run_calibrate(cal); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const sim_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
