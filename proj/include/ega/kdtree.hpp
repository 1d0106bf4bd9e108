#pragma once

// Kd-tree over 3-D points with exact radius and k-nearest queries. Results
// match a brute-force scan as sets; ties in kNN break toward the lower
// original point index so queries are fully deterministic.

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "ega/common.hpp"
#include "ega/errors.hpp"

namespace ega {

class KdTree {
 public:
  explicit KdTree(const std::vector<Vec3>& points) {
    if (points.empty()) throw EmptyCloud("cannot index an empty cloud");
    const int n = static_cast<int>(points.size());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    nodes_.reserve(2 * (n / kLeafSize + 1));
    build(points, order, 0, n);
    pts_.resize(n);
    ids_ = std::move(order);
    for (int i = 0; i < n; ++i) pts_[i] = points[ids_[i]];
  }

  int size() const { return static_cast<int>(pts_.size()); }

  // All indices with ||p - center|| <= radius, ascending by index.
  std::vector<int> radius_search(const Vec3& center, double radius) const {
    std::vector<int> out;
    const double r2 = radius * radius;
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& nd = nodes_[stack[--top]];
      if (box_dist2(nd, center) > r2) continue;
      if (nd.left < 0) {
        for (int i = nd.begin; i < nd.end; ++i) {
          if ((pts_[i] - center).squaredNorm() <= r2) out.push_back(ids_[i]);
        }
      } else {
        stack[top++] = nd.left;
        stack[top++] = nd.right;
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // k nearest indices, ascending by (distance, index).
  std::vector<int> knn(const Vec3& center, int k) const {
    k = std::min(k, size());
    if (k <= 0) return {};
    // max-heap: worst candidate on top, "worse" = larger (dist2, id).
    std::priority_queue<std::pair<double, int>> heap;
    knn_visit(0, center, k, heap);
    std::vector<std::pair<double, int>> cand;
    cand.reserve(heap.size());
    while (!heap.empty()) {
      cand.push_back(heap.top());
      heap.pop();
    }
    std::sort(cand.begin(), cand.end());
    std::vector<int> out;
    out.reserve(cand.size());
    for (const auto& [d2, id] : cand) out.push_back(id);
    return out;
  }

 private:
  struct Node {
    Vec3 lo, hi;
    int begin = 0, end = 0;
    int left = -1, right = -1;
  };
  static constexpr int kLeafSize = 16;

  std::vector<Vec3> pts_;   // reordered for locality
  std::vector<int> ids_;    // reordered position -> original index
  std::vector<Node> nodes_;

  int build(const std::vector<Vec3>& points, std::vector<int>& order, int begin,
            int end) {
    const int me = static_cast<int>(nodes_.size());
    nodes_.emplace_back();
    Vec3 lo = points[order[begin]], hi = lo;
    for (int i = begin + 1; i < end; ++i) {
      lo = lo.cwiseMin(points[order[i]]);
      hi = hi.cwiseMax(points[order[i]]);
    }
    nodes_[me].lo = lo;
    nodes_[me].hi = hi;
    nodes_[me].begin = begin;
    nodes_[me].end = end;
    if (end - begin > kLeafSize) {
      int axis = 0;
      (hi - lo).maxCoeff(&axis);
      const int mid = (begin + end) / 2;
      std::nth_element(order.begin() + begin, order.begin() + mid,
                       order.begin() + end, [&](int a, int b) {
                         const double ca = points[a][axis], cb = points[b][axis];
                         return ca < cb || (ca == cb && a < b);
                       });
      const int l = build(points, order, begin, mid);
      const int r = build(points, order, mid, end);
      nodes_[me].left = l;
      nodes_[me].right = r;
    }
    return me;
  }

  double box_dist2(const Node& nd, const Vec3& p) const {
    double d2 = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double d = std::max({nd.lo[a] - p[a], 0.0, p[a] - nd.hi[a]});
      d2 += d * d;
    }
    return d2;
  }

  void knn_visit(int idx, const Vec3& center, int k,
                 std::priority_queue<std::pair<double, int>>& heap) const {
    const Node& nd = nodes_[idx];
    if (static_cast<int>(heap.size()) == k &&
        box_dist2(nd, center) > heap.top().first) {
      return;
    }
    if (nd.left < 0) {
      for (int i = nd.begin; i < nd.end; ++i) {
        const double d2 = (pts_[i] - center).squaredNorm();
        const std::pair<double, int> c{d2, ids_[i]};
        if (static_cast<int>(heap.size()) < k) {
          heap.push(c);
        } else if (c < heap.top()) {
          heap.pop();
          heap.push(c);
        }
      }
      return;
    }
    // nearer child first
    const double dl = box_dist2(nodes_[nd.left], center);
    const double dr = box_dist2(nodes_[nd.right], center);
    if (dl <= dr) {
      knn_visit(nd.left, center, k, heap);
      knn_visit(nd.right, center, k, heap);
    } else {
      knn_visit(nd.right, center, k, heap);
      knn_visit(nd.left, center, k, heap);
    }
  }
};

}  // namespace ega
