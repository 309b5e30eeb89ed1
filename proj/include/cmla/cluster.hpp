#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "cmla/dataset.hpp"
#include "cmla/encoder.hpp"

namespace cmla {

/// Exact k-d tree over the rows of an encoded Euclidean matrix. Queries
/// return exactly what a brute-force scan with DistanceSpace would.
class KdTree {
 public:
  explicit KdTree(const EncodedMatrix& points);

  /// Ascending indices of rows within `radius` (inclusive) of `query`.
  std::vector<std::size_t> radius(std::span<const double> query, double radius) const;

  /// Nearest row (lowest index on ties) and its distance.
  std::pair<std::size_t, double> nearest(std::span<const double> query) const;

 private:
  struct Node {
    std::size_t begin = 0, end = 0;  // range into order_
    std::size_t axis = 0;
    double split = 0;
    int left = -1, right = -1;
  };

  int build(std::size_t begin, std::size_t end, int depth);
  void radius_walk(int node, std::span<const double> q, double r,
                   std::vector<std::size_t>& out) const;
  void nearest_walk(int node, std::span<const double> q, std::size_t& best,
                    double& best_dist) const;

  const EncodedMatrix* points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

enum class EpsMode { fixed, automatic };

struct DbscanParams {
  double eps = 0;
  std::size_t min_samples = 5;
  EpsMode eps_mode = EpsMode::automatic;

  /// Throws on min_samples < 2 or a non-positive fixed eps.
  void validate() const;
};

struct ClusterLabeling {
  /// -1 for noise, otherwise 0..K-1.
  std::vector<int> labels;
  std::size_t clusters = 0;
  /// Core-point flags in row order.
  std::vector<bool> core;
  DbscanParams params;  // eps resolved

  std::vector<std::size_t> cluster_sizes() const;
  std::size_t noise_count() const;
};

struct Medoid {
  std::size_t cluster = 0;
  std::size_t row_id = 0;
  std::size_t cluster_size = 0;
  double distance_sum = 0;
  std::vector<double> encoded;
  std::vector<double> raw;
};

struct MedoidSet {
  std::vector<Medoid> medoids;
  std::string model_hash;
  DistanceSpace space;

  std::size_t size() const noexcept { return medoids.size(); }
};

struct NeighborOptions {
  /// Row count from which neighborhood queries go through the k-d tree.
  std::size_t index_threshold = 50000;
};

/// Density clustering. Core iff at least min_samples rows (itself included)
/// lie within eps. Clusters are connected components of core rows, numbered
/// by their lowest row index; a border row joins the cluster of its
/// lowest-index core neighbor.
ClusterLabeling dbscan(const EncodedMatrix& matrix, DbscanParams params,
                       const NeighborOptions& options = {});

/// Median over rows of the distance to the min_samples-th nearest other row.
double auto_eps(const EncodedMatrix& matrix, std::size_t min_samples,
                const NeighborOptions& options = {});

/// One medoid per cluster: the member minimizing its summed distance to all
/// other members, lowest row id on ties. Ordered by cluster id.
MedoidSet extract_medoids(const EncodedMatrix& matrix, const ClusterLabeling& labeling,
                          const DataTable& raw);

/// Ascending indices of rows within eps of row i, by brute force.
std::vector<std::size_t> brute_neighbors(const EncodedMatrix& matrix, std::size_t i, double eps);

}  // namespace cmla
