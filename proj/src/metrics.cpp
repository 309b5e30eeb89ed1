#include "cmla/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "cmla/error.hpp"
#include "cmla/parallel.hpp"
#include "cmla/stats.hpp"

namespace cmla {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error(Stage::leakage_metrics, message); }

double round12(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12f", x);
  return std::strtod(buf, nullptr);
}

void check_lineage(const MedoidSet& medoids, const EncodedMatrix& real) {
  if (real.rows == 0) fail("real table is empty");
  if (medoids.size() == 0) fail("medoid set is empty");
  if (medoids.model_hash != real.model_hash)
    fail("encoding-model mismatch: medoids use " + medoids.model_hash + ", real rows use " +
         real.model_hash);
  if (!(medoids.space == real.space) || medoids.medoids.front().encoded.size() != real.dims)
    fail("encoding-model mismatch: distance spaces differ");
}

}  // namespace

ThresholdGrid::ThresholdGrid(std::vector<double> taus, const std::vector<double>& marks)
    : taus_(std::move(taus)) {
  for (double m : marks) {
    if (!(m >= 0) || !std::isfinite(m)) fail("reference threshold must be finite and >= 0");
    if (!index_of(m)) taus_.insert(std::upper_bound(taus_.begin(), taus_.end(), m), m);
  }
  if (taus_.empty()) fail("threshold grid is empty");
  for (std::size_t i = 0; i < taus_.size(); ++i) {
    if (!(taus_[i] >= 0) || !std::isfinite(taus_[i])) fail("thresholds must be finite and >= 0");
    if (i > 0 && !(taus_[i] > taus_[i - 1])) fail("thresholds must be strictly increasing");
  }
  for (double m : marks) marks_.push_back(taus_[*index_of(m)]);
  std::sort(marks_.begin(), marks_.end());
  marks_.erase(std::unique(marks_.begin(), marks_.end()), marks_.end());
}

ThresholdGrid ThresholdGrid::uniform(double start, double stop, double step,
                                     const std::vector<double>& marks) {
  if (!(step > 0) || !(stop >= start) || !(start >= 0))
    fail("grid needs 0 <= start <= stop and step > 0");
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  if (count > 10'000'000) fail("grid has too many points");
  std::vector<double> taus(count);
  for (std::size_t i = 0; i < count; ++i) taus[i] = round12(start + static_cast<double>(i) * step);
  return ThresholdGrid(std::move(taus), marks);
}

ThresholdGrid ThresholdGrid::parse(const std::string& spec, const std::vector<double>& marks) {
  const auto a = spec.find(':');
  const auto b = a == std::string::npos ? a : spec.find(':', a + 1);
  if (b == std::string::npos) fail("grid must look like start:stop:step, got '" + spec + "'");
  auto num = [&](const std::string& s) {
    auto v = parse_finite(s);
    if (!v) fail("grid component '" + s + "' is not a number");
    return *v;
  };
  return uniform(num(spec.substr(0, a)), num(spec.substr(a + 1, b - a - 1)),
                 num(spec.substr(b + 1)), marks);
}

ThresholdGrid ThresholdGrid::standard() { return uniform(0.0, 2.5, 0.01, {0.1, 0.5}); }

std::optional<std::size_t> ThresholdGrid::index_of(double tau) const {
  auto it = std::lower_bound(taus_.begin(), taus_.end(), tau - 1e-12);
  if (it != taus_.end() && std::abs(*it - tau) <= 1e-12)
    return static_cast<std::size_t>(it - taus_.begin());
  return std::nullopt;
}

std::vector<DistanceRecord> nearest_real_distances(const MedoidSet& medoids,
                                                   const EncodedMatrix& real_encoded,
                                                   const NearestOptions& options) {
  check_lineage(medoids, real_encoded);
  std::optional<KdTree> tree;
  if (real_encoded.space.metric == Metric::euclidean && real_encoded.rows >= options.index_threshold)
    tree.emplace(real_encoded);

  std::vector<DistanceRecord> out(medoids.size());
  parallel_for(medoids.size(), [&](std::size_t i) {
    const Medoid& m = medoids.medoids[i];
    std::size_t best = 0;
    double best_dist = std::numeric_limits<double>::infinity();
    if (tree) {
      std::tie(best, best_dist) = tree->nearest(m.encoded);
    } else {
      for (std::size_t r = 0; r < real_encoded.rows; ++r) {
        const double d = real_encoded.distance_to(r, m.encoded);
        if (d < best_dist) {
          best_dist = d;
          best = r;
        }
      }
    }
    out[i] = {m.cluster, m.row_id, best_dist, real_encoded.row_ids[best]};
  });
  return out;
}

std::vector<double> fraction_below(std::vector<double> values, const std::vector<double>& taus) {
  if (values.empty()) fail("cannot form a rate over zero items");
  std::sort(values.begin(), values.end());
  std::vector<double> out(taus.size());
  const double n = static_cast<double>(values.size());
  std::size_t below = 0;
  for (std::size_t t = 0; t < taus.size(); ++t) {
    while (below < values.size() && values[below] < taus[t]) ++below;
    out[t] = static_cast<double>(below) / n;
  }
  return out;
}

std::vector<double> asr_curve(const std::vector<DistanceRecord>& records, const ThresholdGrid& grid) {
  if (records.empty()) fail("ASR needs at least one medoid");
  std::vector<double> d;
  d.reserve(records.size());
  for (const auto& r : records) d.push_back(r.d_min);
  return fraction_below(std::move(d), grid.taus());
}

std::vector<double> real_to_medoid_minima(const MedoidSet& medoids,
                                          const EncodedMatrix& real_encoded) {
  check_lineage(medoids, real_encoded);
  std::vector<double> minima(real_encoded.rows);
  parallel_for(real_encoded.rows, [&](std::size_t r) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& m : medoids.medoids) best = std::min(best, real_encoded.distance_to(r, m.encoded));
    minima[r] = best;
  });
  return minima;
}

std::vector<double> coverage_curve(const MedoidSet& medoids, const EncodedMatrix& real_encoded,
                                   const ThresholdGrid& grid) {
  return fraction_below(real_to_medoid_minima(medoids, real_encoded), grid.taus());
}

MetricCurves compute_curves(const std::vector<DistanceRecord>& records, const MedoidSet& medoids,
                            const EncodedMatrix& real_encoded, const ThresholdGrid& grid) {
  MetricCurves out;
  out.taus = grid.taus();
  out.asr = asr_curve(records, grid);
  out.coverage = coverage_curve(medoids, real_encoded, grid);
  out.medoid_count = medoids.size();
  out.real_count = real_encoded.rows;
  return out;
}

DminSummary summarize_dmin(const std::vector<DistanceRecord>& records) {
  if (records.empty()) fail("cannot summarize an empty d_min sample");
  std::vector<double> d;
  d.reserve(records.size());
  for (const auto& r : records) d.push_back(r.d_min);
  DminSummary s;
  s.count = d.size();
  s.min = *std::min_element(d.begin(), d.end());
  s.max = *std::max_element(d.begin(), d.end());
  double sum = 0;
  for (double v : d) sum += v;
  s.mean = std::clamp(sum / static_cast<double>(d.size()), s.min, s.max);
  s.median = percentile(d, 50);
  s.p10 = percentile(d, 10);
  s.p90 = percentile(d, 90);
  return s;
}

}  // namespace cmla
