#pragma once

// Reference implementations used only by tests. They deliberately avoid the
// library's index structures and sweep routines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <random>
#include <vector>

#include "cmla/encoder.hpp"

namespace oracle {

using Points = std::vector<std::vector<double>>;

inline double l2(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

inline cmla::EncodedMatrix to_matrix(const Points& pts, const std::string& hash = "test") {
  cmla::EncodedMatrix m;
  m.rows = pts.size();
  m.dims = pts.empty() ? 0 : pts.front().size();
  for (const auto& p : pts) m.values.insert(m.values.end(), p.begin(), p.end());
  for (std::size_t i = 0; i < m.rows; ++i) m.row_ids.push_back(i);
  m.model_hash = hash;
  return m;
}

struct DensityPartition {
  std::vector<bool> core;
  /// Component id per core point (numbered by lowest member), -1 otherwise.
  std::vector<int> core_component;
  std::size_t components = 0;
};

/// Explicit eps-graph, core flags and BFS components over core points.
inline DensityPartition density_partition(const Points& pts, double eps, std::size_t min_samples) {
  const std::size_t n = pts.size();
  std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) adj[i][j] = l2(pts[i], pts[j]) <= eps;
  DensityPartition out;
  out.core.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t count = 0;
    for (std::size_t j = 0; j < n; ++j) count += adj[i][j];
    out.core[i] = count >= min_samples;
  }
  out.core_component.assign(n, -1);
  for (std::size_t s = 0; s < n; ++s) {
    if (!out.core[s] || out.core_component[s] >= 0) continue;
    const int id = static_cast<int>(out.components++);
    std::queue<std::size_t> q;
    q.push(s);
    out.core_component[s] = id;
    while (!q.empty()) {
      const std::size_t p = q.front();
      q.pop();
      for (std::size_t j = 0; j < n; ++j)
        if (adj[p][j] && out.core[j] && out.core_component[j] < 0) {
          out.core_component[j] = id;
          q.push(j);
        }
    }
  }
  return out;
}

/// Cyclic Jacobi rotations on a symmetric matrix; returns eigenvalues in
/// descending order and matching unit eigenvectors (as rows).
inline std::pair<std::vector<double>, Points> jacobi_eigen(Points a) {
  const std::size_t n = a.size();
  Points v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k][p], vkq = v[k][q];
          v[k][p] = c * vkp - s * vkq;
          v[k][q] = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a[x][x] > a[y][y]; });
  std::vector<double> values;
  Points vectors;
  for (auto i : order) {
    values.push_back(a[i][i]);
    std::vector<double> col(n);
    for (std::size_t k = 0; k < n; ++k) col[k] = v[k][i];
    vectors.push_back(col);
  }
  return {values, vectors};
}

inline Points sample_covariance(const Points& x) {
  const std::size_t n = x.size(), d = x.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& r : x)
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j] / static_cast<double>(n);
  Points cov(d, std::vector<double>(d, 0.0));
  for (const auto& r : x)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b)
        cov[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]) / static_cast<double>(n - 1);
  return cov;
}

struct Nearest {
  std::size_t index = 0;
  double distance = 0;
};

/// Double loop: nearest point (lowest index on ties).
inline Nearest nearest(const std::vector<double>& q, const Points& pts) {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = l2(q, pts[i]);
    if (d < best.distance) best = {i, d};
  }
  return best;
}

/// ASR by direct count for one tau.
inline double asr(const std::vector<double>& dmin, double tau) {
  std::size_t hits = 0;
  for (double d : dmin)
    if (d < tau) ++hits;
  return static_cast<double>(hits) / static_cast<double>(dmin.size());
}

/// Coverage by direct double loop for one tau.
inline double coverage(const Points& medoids, const Points& real, double tau) {
  std::size_t hits = 0;
  for (const auto& x : real) {
    bool covered = false;
    for (const auto& m : medoids)
      if (l2(x, m) < tau) covered = true;
    hits += covered;
  }
  return static_cast<double>(hits) / static_cast<double>(real.size());
}

/// Index of the member with the smallest distance sum, found exhaustively;
/// returns every member whose sum is strictly below the given candidate's.
inline std::vector<std::size_t> strictly_better(const Points& members, std::size_t candidate) {
  auto sum_for = [&](std::size_t i) {
    double s = 0;
    for (const auto& m : members) s += l2(members[i], m);
    return s;
  };
  const double c = sum_for(candidate);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < members.size(); ++i)
    if (sum_for(i) < c) out.push_back(i);
  return out;
}

/// Clustered random points: a few Gaussian blobs plus uniform background.
inline Points random_blobs(std::mt19937_64& rng, std::size_t n, std::size_t dims) {
  std::uniform_int_distribution<int> blobs_d(1, 4);
  std::uniform_real_distribution<double> center_d(-5, 5), unit(0, 1);
  std::normal_distribution<double> normal(0, 1);
  const int blobs = blobs_d(rng);
  Points centers(static_cast<std::size_t>(blobs), std::vector<double>(dims));
  for (auto& c : centers)
    for (auto& v : c) v = center_d(rng);
  Points pts(n, std::vector<double>(dims));
  for (auto& p : pts) {
    if (unit(rng) < 0.2) {
      for (auto& v : p) v = center_d(rng);
    } else {
      const auto& c = centers[static_cast<std::size_t>(rng() % centers.size())];
      const double spread = 0.3 + unit(rng) * 0.5;
      for (std::size_t d = 0; d < dims; ++d) p[d] = c[d] + spread * normal(rng);
    }
  }
  return pts;
}

}  // namespace oracle
