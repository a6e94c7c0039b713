#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "errors.hpp"

namespace lobsim {

/**
 * Exact Euclidean k-nearest-neighbor index (kd-tree with bucket leaves).
 *
 * Results are identical to a brute-force scan, including tie order: hits are
 * ranked by (squared distance, original row index) ascending. Queries are
 * const and safe to run from many threads at once.
 */
class knn_index {
  public:
    struct hit {
        double dist2 = 0.0;
        std::uint32_t index = 0;  // row index in the order passed to build()
    };

    knn_index() = default;

    knn_index(const double* pts, std::size_t n, int dim) { build(pts, n, dim); }

    void build(const double* pts, std::size_t n, int dim) {
        if (n == 0) raise(errc::empty_train_set, "knn_index needs at least one point");
        if (dim <= 0) raise(errc::dimension_mismatch, "knn_index dimension must be positive");
        n_ = n;
        dim_ = dim;
        ids_.resize(n);
        std::iota(ids_.begin(), ids_.end(), 0u);
        nodes_.clear();
        nodes_.reserve(2 * n / leaf_size + 2);

        // scratch copy in build order, re-laid-out leaf-contiguously below
        src_ = pts;
        build_node(0, n);
        pts_.resize(n * static_cast<std::size_t>(dim));
        for (std::size_t i = 0; i < n; ++i) {
            const double* row = pts + static_cast<std::size_t>(ids_[i]) * dim;
            std::copy(row, row + dim, pts_.begin() + static_cast<std::ptrdiff_t>(i * dim));
        }
        src_ = nullptr;
    }

    std::size_t size() const { return n_; }
    int dim() const { return dim_; }

    // k nearest neighbors of q, sorted ascending by (dist2, index)
    void query(const double* q, int k, std::vector<hit>& out) const {
        out.clear();
        if (k <= 0) return;
        const std::size_t want = std::min<std::size_t>(static_cast<std::size_t>(k), n_);
        search_ctx ctx{q, want, out};
        search(0, ctx, 0.0);
        std::sort(out.begin(), out.end(), hit_less);
    }

  private:
    static constexpr std::size_t leaf_size = 24;

    struct node {
        double split = 0.0;
        std::uint32_t axis = 0;
        std::uint32_t right = 0;  // child index; 0 marks a leaf (root is never a child)
        std::uint32_t begin = 0;
        std::uint32_t end = 0;
    };

    struct search_ctx {
        const double* q;
        std::size_t want;
        std::vector<hit>& heap;  // max-heap on (dist2, index)
    };

    static bool hit_less(const hit& a, const hit& b) {
        if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
        return a.index < b.index;
    }

    std::uint32_t build_node(std::size_t begin, std::size_t end) {
        const std::uint32_t me = static_cast<std::uint32_t>(nodes_.size());
        nodes_.push_back({});
        if (end - begin <= leaf_size) {
            nodes_[me].begin = static_cast<std::uint32_t>(begin);
            nodes_[me].end = static_cast<std::uint32_t>(end);
            return me;
        }
        // split on the widest axis at the median
        int axis = 0;
        double best_spread = -1.0;
        for (int d = 0; d < dim_; ++d) {
            double lo = src_[static_cast<std::size_t>(ids_[begin]) * dim_ + d];
            double hi = lo;
            for (std::size_t i = begin + 1; i < end; ++i) {
                const double v = src_[static_cast<std::size_t>(ids_[i]) * dim_ + d];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                axis = d;
            }
        }
        if (best_spread <= 0.0) {
            // all points identical: keep as one leaf regardless of size
            nodes_[me].begin = static_cast<std::uint32_t>(begin);
            nodes_[me].end = static_cast<std::uint32_t>(end);
            return me;
        }
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(ids_.begin() + static_cast<std::ptrdiff_t>(begin),
                         ids_.begin() + static_cast<std::ptrdiff_t>(mid),
                         ids_.begin() + static_cast<std::ptrdiff_t>(end),
                         [&](std::uint32_t a, std::uint32_t b) {
                             return src_[static_cast<std::size_t>(a) * dim_ + axis] <
                                    src_[static_cast<std::size_t>(b) * dim_ + axis];
                         });
        nodes_[me].axis = static_cast<std::uint32_t>(axis);
        nodes_[me].split = src_[static_cast<std::size_t>(ids_[mid]) * dim_ + axis];
        nodes_[me].begin = nodes_[me].end = 0;
        build_node(begin, mid);  // left child is me+1
        const std::uint32_t r = build_node(mid, end);
        nodes_[me].right = r;
        return me;
    }

    bool is_leaf(const node& nd) const { return nd.right == 0; }

    // squared distance accumulated with early exit once past the bound
    double dist2_bounded(const double* a, const double* b, double bound) const {
        double acc = 0.0;
        for (int d = 0; d < dim_; ++d) {
            const double diff = a[d] - b[d];
            acc += diff * diff;
            if (acc > bound) return acc;
        }
        return acc;
    }

    void consider(search_ctx& ctx, double d2, std::uint32_t id) const {
        auto& heap = ctx.heap;
        if (heap.size() < ctx.want) {
            heap.push_back({d2, id});
            std::push_heap(heap.begin(), heap.end(), hit_less);
            return;
        }
        const hit& worst = heap.front();
        if (d2 < worst.dist2 || (d2 == worst.dist2 && id < worst.index)) {
            std::pop_heap(heap.begin(), heap.end(), hit_less);
            heap.back() = {d2, id};
            std::push_heap(heap.begin(), heap.end(), hit_less);
        }
    }

    double current_bound(const search_ctx& ctx) const {
        if (ctx.heap.size() < ctx.want) return std::numeric_limits<double>::infinity();
        return ctx.heap.front().dist2;
    }

    void search(std::uint32_t ni, search_ctx& ctx, double min_d2) const {
        // min_d2 is a lower bound on distances inside this subtree; with the
        // heap full, equality must still be visited so smaller ids can win ties
        if (min_d2 > current_bound(ctx)) return;
        const node& nd = nodes_[ni];
        if (is_leaf(nd)) {
            const double* base = pts_.data();
            for (std::uint32_t i = nd.begin; i < nd.end; ++i) {
                const double bound = current_bound(ctx);
                const double d2 =
                    dist2_bounded(ctx.q, base + static_cast<std::size_t>(i) * dim_, bound);
                // early exit only fires strictly past the bound, so an exact
                // tie still reaches consider(), which settles it by index
                if (d2 <= bound) consider(ctx, d2, ids_[i]);
            }
            return;
        }
        const double delta = ctx.q[nd.axis] - nd.split;
        const std::uint32_t near = delta < 0.0 ? ni + 1 : nd.right;
        const std::uint32_t far = delta < 0.0 ? nd.right : ni + 1;
        search(near, ctx, min_d2);
        search(far, ctx, delta * delta);
    }

    std::size_t n_ = 0;
    int dim_ = 0;
    std::vector<double> pts_;          // leaf-contiguous layout
    std::vector<std::uint32_t> ids_;   // original row index per position
    std::vector<node> nodes_;
    const double* src_ = nullptr;      // only valid during build
};

}  // namespace lobsim
