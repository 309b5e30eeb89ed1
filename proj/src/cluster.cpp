#include "cmla/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cmla/error.hpp"
#include "cmla/parallel.hpp"
#include "cmla/stats.hpp"

namespace cmla {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error(Stage::cluster_engine, message); }

constexpr std::size_t kLeafSize = 16;

}  // namespace

KdTree::KdTree(const EncodedMatrix& points) : points_(&points) {
  if (points.space.metric != Metric::euclidean) fail("k-d tree requires the Euclidean metric");
  order_.resize(points.rows);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  if (points.rows > 0) build(0, points.rows, 0);
}

int KdTree::build(std::size_t begin, std::size_t end, int depth) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize || depth > 64) return id;

  const std::size_t dims = points_->dims;
  std::size_t axis = 0;
  double widest = -1;
  for (std::size_t d = 0; d < dims; ++d) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
      const double v = points_->values[order_[i] * dims + d];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    if (hi - lo > widest) {
      widest = hi - lo;
      axis = d;
    }
  }
  if (widest <= 0) return id;  // all points coincide

  const std::size_t mid = begin + (end - begin) / 2;
  auto coord = [&](std::size_t row) { return points_->values[row * dims + axis]; };
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](std::size_t a, std::size_t b) {
                     return coord(a) < coord(b) || (coord(a) == coord(b) && a < b);
                   });
  nodes_[static_cast<std::size_t>(id)].axis = axis;
  nodes_[static_cast<std::size_t>(id)].split = coord(order_[mid]);
  const int left = build(begin, mid, depth + 1);
  const int right = build(mid, end, depth + 1);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

// Left subtrees hold coordinates <= split, right subtrees >= split. A side is
// skipped only when the single-axis gap already exceeds the bound; the full
// floating-point distance can never be smaller than that gap.
void KdTree::radius_walk(int node, std::span<const double> q, double r,
                         std::vector<std::size_t>& out) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.left < 0) {
    for (std::size_t i = n.begin; i < n.end; ++i)
      if (points_->distance_to(order_[i], q) <= r) out.push_back(order_[i]);
    return;
  }
  const double diff = q[n.axis] - n.split;
  const double gap = std::sqrt(diff * diff);
  if (diff <= 0 || gap <= r) radius_walk(n.left, q, r, out);
  if (diff >= 0 || gap <= r) radius_walk(n.right, q, r, out);
}

void KdTree::nearest_walk(int node, std::span<const double> q, std::size_t& best,
                          double& best_dist) const {
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  if (n.left < 0) {
    for (std::size_t i = n.begin; i < n.end; ++i) {
      const std::size_t row = order_[i];
      const double d = points_->distance_to(row, q);
      if (d < best_dist || (d == best_dist && row < best)) {
        best_dist = d;
        best = row;
      }
    }
    return;
  }
  const double diff = q[n.axis] - n.split;
  const double gap = std::sqrt(diff * diff);
  const int near = diff <= 0 ? n.left : n.right;
  const int far = diff <= 0 ? n.right : n.left;
  nearest_walk(near, q, best, best_dist);
  if (gap <= best_dist) nearest_walk(far, q, best, best_dist);
}

std::vector<std::size_t> KdTree::radius(std::span<const double> query, double r) const {
  std::vector<std::size_t> out;
  if (!nodes_.empty()) radius_walk(0, query, r, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::pair<std::size_t, double> KdTree::nearest(std::span<const double> query) const {
  if (nodes_.empty()) fail("nearest-neighbor query on an empty index");
  std::size_t best = std::numeric_limits<std::size_t>::max();
  double best_dist = std::numeric_limits<double>::infinity();
  nearest_walk(0, query, best, best_dist);
  return {best, best_dist};
}

void DbscanParams::validate() const {
  if (min_samples < 2) fail("min_samples must be at least 2");
  if (eps_mode == EpsMode::fixed && !(eps > 0 && std::isfinite(eps)))
    fail("fixed eps must be a positive finite number");
}

std::vector<std::size_t> ClusterLabeling::cluster_sizes() const {
  std::vector<std::size_t> sizes(clusters, 0);
  for (int l : labels)
    if (l >= 0) ++sizes[static_cast<std::size_t>(l)];
  return sizes;
}

std::size_t ClusterLabeling::noise_count() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), -1));
}

std::vector<std::size_t> brute_neighbors(const EncodedMatrix& matrix, std::size_t i, double eps) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < matrix.rows; ++j)
    if (matrix.distance(i, j) <= eps) out.push_back(j);
  return out;
}

ClusterLabeling dbscan(const EncodedMatrix& matrix, DbscanParams params,
                       const NeighborOptions& options) {
  params.validate();
  if (params.eps_mode == EpsMode::automatic) params.eps = auto_eps(matrix, params.min_samples, options);
  if (!(params.eps > 0)) fail("resolved eps must be positive");

  const std::size_t n = matrix.rows;
  std::optional<KdTree> tree;
  if (matrix.space.metric == Metric::euclidean && n >= options.index_threshold) tree.emplace(matrix);
  auto neighbors = [&](std::size_t i) {
    return tree ? tree->radius(matrix.row(i), params.eps) : brute_neighbors(matrix, i, params.eps);
  };

  std::vector<char> core(n, 0);
  parallel_for(n, [&](std::size_t i) { core[i] = neighbors(i).size() >= params.min_samples; });

  // Core neighbors of every row, ascending.
  std::vector<std::vector<std::size_t>> core_adj(n);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j : neighbors(i))
      if (core[j] && j != i) core_adj[i].push_back(j);
  });

  ClusterLabeling out;
  out.params = params;
  out.labels.assign(n, -1);
  out.core.assign(core.begin(), core.end());

  // Components of the core graph, numbered in order of their lowest row.
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!core[seed] || out.labels[seed] >= 0) continue;
    const int id = static_cast<int>(out.clusters++);
    out.labels[seed] = id;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t p = stack.back();
      stack.pop_back();
      for (std::size_t q : core_adj[p]) {
        if (out.labels[q] < 0) {
          out.labels[q] = id;
          stack.push_back(q);
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (!core[i] && !core_adj[i].empty()) out.labels[i] = out.labels[core_adj[i].front()];
  return out;
}

double auto_eps(const EncodedMatrix& matrix, std::size_t min_samples, const NeighborOptions&) {
  const std::size_t n = matrix.rows;
  if (min_samples < 1 || n <= min_samples)
    fail("auto eps needs more than min_samples (" + std::to_string(min_samples) + ") rows, got " +
         std::to_string(n));
  std::vector<double> kdist(n);
  parallel_for(n, [&](std::size_t i) {
    std::vector<double> d;
    d.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) d.push_back(matrix.distance(i, j));
    const auto kth = d.begin() + static_cast<std::ptrdiff_t>(min_samples - 1);
    std::nth_element(d.begin(), kth, d.end());
    kdist[i] = *kth;
  });
  const double eps = percentile(kdist, 50.0);
  if (!(eps > 0)) fail("degenerate geometry, supply eps");
  return eps;
}

MedoidSet extract_medoids(const EncodedMatrix& matrix, const ClusterLabeling& labeling,
                          const DataTable& raw) {
  if (labeling.labels.size() != matrix.rows)
    fail("labeling has " + std::to_string(labeling.labels.size()) + " rows, matrix has " +
         std::to_string(matrix.rows));
  if (raw.rows() != matrix.rows) fail("raw table is not aligned with the encoded matrix");

  std::vector<std::vector<std::size_t>> members(labeling.clusters);
  for (std::size_t i = 0; i < matrix.rows; ++i)
    if (labeling.labels[i] >= 0) members[static_cast<std::size_t>(labeling.labels[i])].push_back(i);

  MedoidSet out;
  out.model_hash = matrix.model_hash;
  out.space = matrix.space;
  out.medoids.resize(labeling.clusters);
  parallel_for(labeling.clusters, [&](std::size_t c) {
    const auto& m = members[c];
    if (m.empty()) fail("cluster " + std::to_string(c) + " is empty");
    std::size_t best = m.front();
    double best_sum = std::numeric_limits<double>::infinity();
    for (std::size_t a : m) {
      double sum = 0;
      for (std::size_t b : m) sum += matrix.distance(a, b);
      if (sum < best_sum) {  // members ascend, so ties keep the lowest row
        best_sum = sum;
        best = a;
      }
    }
    Medoid& med = out.medoids[c];
    med.cluster = c;
    med.row_id = matrix.row_ids[best];
    med.cluster_size = m.size();
    med.distance_sum = best_sum;
    const auto v = matrix.row(best);
    med.encoded.assign(v.begin(), v.end());
    med.raw = raw.row(best);
  });
  return out;
}

}  // namespace cmla
