#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace ucq {

// Static K-D tree over a fixed point set that supports removing points.
// Each tree node holds one point; subtree live counts let queries skip
// fully removed branches.
class KdTree {
 public:
  // `coords` is row-major, `dim` values per point.
  KdTree(std::span<const double> coords, std::size_t dim) : coords_(coords.begin(), coords.end()), dim_(dim) {
    const std::size_t n = dim == 0 ? 0 : coords_.size() / dim;
    nodes_.resize(n);
    node_of_.resize(n);
    std::vector<std::size_t> ids(n);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    root_ = build(ids, 0, n, kNone);
  }

  std::size_t live() const { return root_ == kNone ? 0 : nodes_[root_].live; }

  void remove(std::size_t point) {
    std::size_t node = node_of_[point];
    if (!nodes_[node].alive) return;
    nodes_[node].alive = false;
    for (; node != kNone; node = nodes_[node].parent) --nodes_[node].live;
  }

  // Nearest live point to `query`; ties resolve to the smaller point index.
  std::optional<std::size_t> nearest(std::span<const double> query) const {
    best_ = kNone;
    best_dist_ = std::numeric_limits<double>::infinity();
    search(root_, query);
    if (best_ == kNone) return std::nullopt;
    return nodes_[best_].point;
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  struct Node {
    std::size_t point = 0;
    std::size_t axis = 0;
    std::size_t left = kNone;
    std::size_t right = kNone;
    std::size_t parent = kNone;
    std::size_t live = 0;
    bool alive = true;
  };

  double coord(std::size_t p, std::size_t axis) const { return coords_[p * dim_ + axis]; }

  // Splits on the axis of largest spread; nodes are laid out in preorder.
  std::size_t build(std::vector<std::size_t>& ids, std::size_t lo, std::size_t hi, std::size_t parent) {
    if (lo >= hi) return kNone;
    std::size_t axis = 0;
    double widest = -1.0;
    for (std::size_t a = 0; a < dim_; ++a) {
      double mn = std::numeric_limits<double>::infinity(), mx = -mn;
      for (std::size_t k = lo; k < hi; ++k) {
        mn = std::min(mn, coord(ids[k], a));
        mx = std::max(mx, coord(ids[k], a));
      }
      if (mx - mn > widest) {
        widest = mx - mn;
        axis = a;
      }
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    std::nth_element(ids.begin() + static_cast<std::ptrdiff_t>(lo), ids.begin() + static_cast<std::ptrdiff_t>(mid),
                     ids.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::size_t a, std::size_t b) {
                       const double ca = coord(a, axis), cb = coord(b, axis);
                       return ca < cb || (ca == cb && a < b);
                     });
    const std::size_t self = next_++;
    Node& nd = nodes_[self];
    nd.point = ids[mid];
    nd.axis = axis;
    nd.parent = parent;
    nd.live = hi - lo;
    node_of_[ids[mid]] = self;
    const std::size_t left = build(ids, lo, mid, self);
    const std::size_t right = build(ids, mid + 1, hi, self);
    nodes_[self].left = left;
    nodes_[self].right = right;
    return self;
  }

  void search(std::size_t node, std::span<const double> q) const {
    if (node == kNone || nodes_[node].live == 0) return;
    const Node& nd = nodes_[node];
    if (nd.alive) {
      double d2 = 0.0;
      for (std::size_t a = 0; a < dim_; ++a) {
        const double diff = coord(nd.point, a) - q[a];
        d2 += diff * diff;
      }
      if (d2 < best_dist_ || (d2 == best_dist_ && nd.point < nodes_[best_].point)) {
        best_dist_ = d2;
        best_ = node;
      }
    }
    const double split = q[nd.axis] - coord(nd.point, nd.axis);
    const std::size_t near = split < 0.0 ? nd.left : nd.right;
    const std::size_t far = split < 0.0 ? nd.right : nd.left;
    search(near, q);
    if (split * split <= best_dist_) search(far, q);
  }

  std::vector<double> coords_;
  std::size_t dim_;
  std::vector<Node> nodes_;
  std::vector<std::size_t> node_of_;
  std::size_t root_ = kNone;
  std::size_t next_ = 0;
  mutable std::size_t best_ = kNone;
  mutable double best_dist_ = 0.0;
};

}  // namespace ucq
