#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "book.hpp"
#include "dataset.hpp"
#include "errors.hpp"

namespace lobsim {

// Per-dimension z-score transform. Statistics always come from the train
// split; near-constant dimensions keep scale 1 so they contribute a constant
// shift instead of blowing up.
struct standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    void fit(const double* rows, std::size_t n, int dim) {
        if (n == 0) raise(errc::empty_train_set, "standardizer fit");
        mean.assign(static_cast<std::size_t>(dim), 0.0);
        scale.assign(static_cast<std::size_t>(dim), 1.0);
        for (std::size_t r = 0; r < n; ++r) {
            for (int d = 0; d < dim; ++d) mean[static_cast<std::size_t>(d)] += rows[r * dim + d];
        }
        for (int d = 0; d < dim; ++d) mean[static_cast<std::size_t>(d)] /= static_cast<double>(n);
        std::vector<double> var(static_cast<std::size_t>(dim), 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            for (int d = 0; d < dim; ++d) {
                const double dv = rows[r * dim + d] - mean[static_cast<std::size_t>(d)];
                var[static_cast<std::size_t>(d)] += dv * dv;
            }
        }
        for (int d = 0; d < dim; ++d) {
            const double s = std::sqrt(var[static_cast<std::size_t>(d)] / static_cast<double>(n));
            scale[static_cast<std::size_t>(d)] = s > 1e-12 ? s : 1.0;
        }
    }

    void apply(const double* in, double* out, int dim) const {
        for (int d = 0; d < dim; ++d)
            out[d] = (in[d] - mean[static_cast<std::size_t>(d)]) / scale[static_cast<std::size_t>(d)];
    }
};

struct pca_model {
    std::vector<double> mean;        // d
    std::vector<double> components;  // p × d, row-major, orthonormal rows
    std::vector<double> explained_ratio;
    int in_dim = 0;
    int out_dim = 0;

    void project(const double* in, double* out) const {
        for (int p = 0; p < out_dim; ++p) {
            double acc = 0.0;
            const double* row = components.data() + static_cast<std::size_t>(p) * in_dim;
            for (int d = 0; d < in_dim; ++d) acc += (in[d] - mean[static_cast<std::size_t>(d)]) * row[d];
            out[p] = acc;
        }
    }
};

// PCA via eigendecomposition of the train covariance; components ordered by
// decreasing eigenvalue.
inline pca_model fit_pca(const double* rows, std::size_t n, int dim, int n_components) {
    if (n == 0) raise(errc::empty_train_set, "fit_pca");
    if (n_components < 1 || n_components > dim) raise(errc::bad_config, "pca component count");

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (std::size_t r = 0; r < n; ++r)
        mean += Eigen::Map<const Eigen::VectorXd>(rows + r * dim, dim);
    mean /= static_cast<double>(n);

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t r = 0; r < n; ++r) {
        const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(rows + r * dim, dim) - mean;
        cov.noalias() += x * x.transpose();
    }
    cov /= static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) raise(errc::rank_deficient, "eigendecomposition failed");
    const Eigen::VectorXd evals = eig.eigenvalues();  // ascending
    const double total = std::max(evals.sum(), 0.0);
    // need n_components directions with genuinely positive variance
    int positive = 0;
    for (int i = 0; i < dim; ++i)
        if (evals(i) > 1e-12 * std::max(1.0, total)) ++positive;
    if (positive < n_components) raise(errc::rank_deficient, "train covariance rank too low");

    pca_model m;
    m.in_dim = dim;
    m.out_dim = n_components;
    m.mean.assign(mean.data(), mean.data() + dim);
    m.components.resize(static_cast<std::size_t>(n_components) * dim);
    m.explained_ratio.resize(static_cast<std::size_t>(n_components));
    for (int p = 0; p < n_components; ++p) {
        const int src = dim - 1 - p;  // largest eigenvalue first
        const Eigen::VectorXd v = eig.eigenvectors().col(src);
        for (int d = 0; d < dim; ++d) m.components[static_cast<std::size_t>(p) * dim + d] = v(d);
        m.explained_ratio[static_cast<std::size_t>(p)] = total > 0.0 ? evals(src) / total : 0.0;
    }
    return m;
}

enum class feature_mode : std::uint8_t { raw, pca };

/**
 * Maps book states to the vectors the neighbor index searches over.
 *
 * raw mode: the 2l snapshot volumes, untransformed (the base algorithm's
 * Euclidean state). pca mode: the 16-dim extended feature (sqrt volumes +
 * mid-price returns + trade imbalances), z-scored with train statistics and
 * projected onto the leading principal components.
 */
class feature_pipeline {
  public:
    feature_mode mode() const { return mode_; }
    int levels() const { return levels_; }
    int dim() const { return mode_ == feature_mode::raw ? 2 * levels_ : pca_.out_dim; }
    const pca_model& pca() const { return pca_; }

    static feature_pipeline fit(const dataset& ds, std::size_t train_end, feature_mode mode,
                                int n_components = 8) {
        feature_pipeline fp;
        fp.mode_ = mode;
        fp.levels_ = ds.levels();
        if (mode == feature_mode::raw) return fp;

        if (!ds.has_features()) raise(errc::bad_config, "dataset built without extended features");
        std::vector<double> rows;
        rows.reserve(train_end * dataset::feature_dim);
        for (std::size_t i = 0; i < train_end; ++i) {
            if (!ds.feature_valid(i)) continue;
            const double* f = ds.feature_before(i);
            rows.insert(rows.end(), f, f + dataset::feature_dim);
        }
        const std::size_t n = rows.size() / dataset::feature_dim;
        if (n == 0) raise(errc::empty_train_set, "no feature-valid train samples");
        fp.std_.fit(rows.data(), n, dataset::feature_dim);
        std::vector<double> zs(rows.size());
        for (std::size_t r = 0; r < n; ++r)
            fp.std_.apply(rows.data() + r * dataset::feature_dim, zs.data() + r * dataset::feature_dim,
                          dataset::feature_dim);
        fp.pca_ = fit_pca(zs.data(), n, dataset::feature_dim, n_components);
        return fp;
    }

    // featurize a stored sample's before-state
    void featurize_before(const dataset& ds, std::size_t i, double* out) const {
        if (mode_ == feature_mode::raw) {
            fill_raw(ds.snapshot_before(i), out);
        } else {
            transform_ext(ds.feature_before(i), out);
        }
    }

    // featurize a live path state: the current snapshot plus (in pca mode)
    // the carried raw extended feature whose volume block is re-derived from
    // the snapshot
    void featurize_state(const lob_snapshot& snap, const double* raw_ext, double* out) const {
        if (mode_ == feature_mode::raw) {
            fill_raw(snap, out);
            return;
        }
        double ext[dataset::feature_dim];
        for (int d = 0; d < dataset::feature_dim; ++d) ext[d] = raw_ext[d];
        const int l = levels_;
        for (int i = 0; i < l; ++i) ext[i] = std::sqrt(static_cast<double>(snap.bid(i)));
        for (int i = 0; i < l; ++i) ext[l + i] = std::sqrt(static_cast<double>(snap.ask(i)));
        transform_ext(ext, out);
    }

  private:
    void fill_raw(const lob_snapshot& snap, double* out) const {
        for (int i = 0; i < levels_; ++i) out[i] = static_cast<double>(snap.bid(i));
        for (int i = 0; i < levels_; ++i) out[levels_ + i] = static_cast<double>(snap.ask(i));
    }

    void transform_ext(const double* raw, double* out) const {
        double z[dataset::feature_dim];
        std_.apply(raw, z, dataset::feature_dim);
        pca_.project(z, out);
    }

    feature_mode mode_ = feature_mode::raw;
    int levels_ = 5;
    standardizer std_;
    pca_model pca_;
};

}  // namespace lobsim
