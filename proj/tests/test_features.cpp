#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "lobsim/features.hpp"
#include "lobsim/rng.hpp"
#include "lobsim/synth.hpp"

using namespace lobsim;

namespace {

// n rows of correlated 3-d data with a known linear structure
std::vector<double> correlated_rows(std::size_t n, bool planar) {
    counter_rng rng(42, 0);
    std::vector<double> rows;
    rows.reserve(n * 3);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.next_double() - 0.5;
        const double v = rng.next_double() - 0.5;
        const double w = planar ? 2.0 * u - v : rng.next_double() - 0.5;
        rows.push_back(3.0 * u + 0.5 * v);
        rows.push_back(v);
        rows.push_back(w);
    }
    return rows;
}

}  // namespace

TEST(Standardizer, KnownMoments) {
    const std::vector<double> rows = {1, 10, 2, 10, 3, 10, 4, 10};
    standardizer z;
    z.fit(rows.data(), 4, 2);
    EXPECT_DOUBLE_EQ(z.mean[0], 2.5);
    EXPECT_DOUBLE_EQ(z.mean[1], 10.0);
    EXPECT_DOUBLE_EQ(z.scale[0], std::sqrt(1.25));  // population std
    EXPECT_DOUBLE_EQ(z.scale[1], 1.0);              // constant dim keeps scale 1

    const std::vector<double> x = {4, 10};
    std::vector<double> out(2);
    z.apply(x.data(), out.data(), 2);
    EXPECT_NEAR(out[0], 1.5 / std::sqrt(1.25), 1e-12);
    EXPECT_DOUBLE_EQ(out[1], 0.0);
}

TEST(Pca, ComponentsAreOrthonormal) {
    const auto rows = correlated_rows(500, false);
    const pca_model m = fit_pca(rows.data(), 500, 3, 3);
    ASSERT_EQ(m.out_dim, 3);
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            double dot = 0.0;
            for (int j = 0; j < 3; ++j)
                dot += m.components[static_cast<std::size_t>(a * 3 + j)] *
                       m.components[static_cast<std::size_t>(b * 3 + j)];
            EXPECT_NEAR(dot, a == b ? 1.0 : 0.0, 1e-9);
        }
    }
    // full-dimensional fit explains everything, in decreasing order
    double total = 0.0;
    for (double r : m.explained_ratio) total += r;
    EXPECT_NEAR(total, 1.0, 1e-9);
    EXPECT_GE(m.explained_ratio[0], m.explained_ratio[1]);
    EXPECT_GE(m.explained_ratio[1], m.explained_ratio[2]);
}

TEST(Pca, MeanProjectsToZero) {
    const auto rows = correlated_rows(200, false);
    const pca_model m = fit_pca(rows.data(), 200, 3, 2);
    std::vector<double> out(2);
    m.project(m.mean.data(), out.data());
    EXPECT_NEAR(out[0], 0.0, 1e-12);
    EXPECT_NEAR(out[1], 0.0, 1e-12);
}

TEST(Pca, PlanarDataHasRankTwo) {
    const auto rows = correlated_rows(300, true);
    EXPECT_THROW(fit_pca(rows.data(), 300, 3, 3), sim_error);
    const pca_model m = fit_pca(rows.data(), 300, 3, 2);
    EXPECT_NEAR(m.explained_ratio[0] + m.explained_ratio[1], 1.0, 1e-9);
}

TEST(FeaturePipeline, RawModeIsPlainVolumes) {
    synth_params par;
    par.level1_noise = 30;
    const dataset ds = build_synth_dataset(par, 20000);
    ASSERT_GT(ds.size(), 100u);
    const std::size_t train_end = split_index(ds.size(), 0.8);

    const feature_pipeline pipe = feature_pipeline::fit(ds, train_end, feature_mode::raw);
    ASSERT_EQ(pipe.dim(), 2 * ds.levels());

    std::vector<double> q(static_cast<std::size_t>(pipe.dim()));
    pipe.featurize_before(ds, 3, q.data());
    const lob_snapshot snap = ds.snapshot_before(3);
    for (int i = 0; i < ds.levels(); ++i) {
        EXPECT_DOUBLE_EQ(q[static_cast<std::size_t>(i)], static_cast<double>(snap.bid(i)));
        EXPECT_DOUBLE_EQ(q[static_cast<std::size_t>(ds.levels() + i)],
                         static_cast<double>(snap.ask(i)));
    }
}

TEST(FeaturePipeline, PcaModeMatchesStateRecomputation) {
    synth_params par;
    par.level1_noise = 30;
    par.refill_noise = 6;
    const dataset ds = build_synth_dataset(par, 60000, true);
    ASSERT_TRUE(ds.has_features());
    const std::size_t train_end = split_index(ds.size(), 0.8);

    const feature_pipeline pipe = feature_pipeline::fit(ds, train_end, feature_mode::pca, 8);
    ASSERT_EQ(pipe.dim(), 8);

    // featurize_state over the stored before-snapshot and raw payload must
    // reproduce featurize_before exactly
    std::size_t checked = 0;
    for (std::size_t i = train_end; i < ds.size() && checked < 50; ++i) {
        if (!ds.feature_valid(i)) continue;
        std::vector<double> a(8), b(8);
        pipe.featurize_before(ds, i, a.data());
        pipe.featurize_state(ds.snapshot_before(i), ds.feature_before(i), b.data());
        for (int j = 0; j < 8; ++j) EXPECT_DOUBLE_EQ(a[static_cast<std::size_t>(j)],
                                                     b[static_cast<std::size_t>(j)]);
        ++checked;
    }
    EXPECT_EQ(checked, 50u);
}
