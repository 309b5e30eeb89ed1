#include <cmath>
#include <random>

#include "doctest.h"

#include "cmla/encoder.hpp"
#include "cmla/error.hpp"
#include "support/oracles.hpp"

using namespace cmla;

namespace {

DataTable table(const std::string& text, Origin origin = Origin::synthetic,
                const std::optional<TableSchema>& hint = std::nullopt) {
  return table_from_records(parse_csv(text), hint, origin, "inline");
}

std::vector<double> row_of(const EncodedMatrix& m, std::size_t i) {
  auto r = m.row(i);
  return {r.begin(), r.end()};
}

}  // namespace

TEST_CASE("minmax scaling") {
  const auto t = table("age\n0\n10\n");
  const auto model = fit_encoding(t);
  CHECK(model.numerics[0].lo == 0);
  CHECK(model.numerics[0].hi == 10);
  CHECK(model.numerics[0].apply(5) == 0.5);
}

TEST_CASE("constant column encodes to zero") {
  const auto t = table("c\n7\n7\n7\n");
  for (auto mode : {ScaleMode::minmax, ScaleMode::zscore}) {
    const auto model = fit_encoding(t, mode);
    CHECK(model.numerics[0].divisor == 1);
    const auto e = encode(model, t);
    for (double v : e.values) CHECK(v == 0);
  }
}

TEST_CASE("zscore uses population stddev") {
  const auto t = table("v\n1\n3\n");
  const auto model = fit_encoding(t, ScaleMode::zscore);
  CHECK(model.numerics[0].mean == 2);
  CHECK(model.numerics[0].stddev == 1);
  CHECK(model.numerics[0].apply(3) == 1.0);
}

TEST_CASE("numerics first then one-hot; unknown category is all zero") {
  const auto synth = table("age,job\n0,A\n10,B\n");
  const auto model = fit_encoding(synth);
  REQUIRE(model.raw_dims() == 3);
  const auto real = table("age,job\n5,A\n5,C\n", Origin::real, synth.schema());
  const auto e = encode(model, real);
  CHECK(row_of(e, 0) == std::vector<double>{0.5, 1, 0});
  CHECK(row_of(e, 1) == std::vector<double>{0.5, 0, 0});
}

TEST_CASE("one-hot rows differing in k categoricals are sqrt(2k) apart") {
  const auto synth = table("x,a,b,c\n1,p,p,p\n2,q,q,q\n");
  const auto model = fit_encoding(synth);
  const auto probe = table("x,a,b,c\n1.5,p,p,p\n1.5,q,p,p\n1.5,q,q,p\n1.5,q,q,q\n", Origin::real,
                           synth.schema());
  const auto e = encode(model, probe);
  for (std::size_t k = 1; k <= 3; ++k)
    CHECK(std::abs(e.distance(0, k) - std::sqrt(2.0 * static_cast<double>(k))) <= 1e-12);
}

TEST_CASE("euclidean distance examples") {
  const std::vector<double> a{0, 0}, b{1, 1};
  CHECK(distance(a, a) == 0);
  CHECK(distance(a, b) == std::sqrt(2.0));
  const std::vector<double> u{0.5, 1, 0}, v{0.5, 0, 1};
  CHECK(std::abs(distance(u, v) - 1.4142) < 5e-5);
  CHECK_THROWS_AS(distance(a, u), Error);
}

TEST_CASE("gower examples") {
  TableSchema four({{"n", ColumnKind::numeric, {}},
                    {"c1", ColumnKind::categorical, {"a", "b"}},
                    {"c2", ColumnKind::categorical, {"a", "b"}},
                    {"c3", ColumnKind::categorical, {"a", "b"}}});
  std::vector<std::pair<double, double>> ranges{{0, 10}, {0, 0}, {0, 0}, {0, 0}};
  const std::vector<double> r1{3, 0, 1, 0}, r2{3, 0, 1, 1};
  CHECK(gower_distance(r1, r1, four, ranges) == 0);
  CHECK(gower_distance(r1, r2, four, ranges) == 0.25);

  TableSchema one({{"n", ColumnKind::numeric, {}}});
  std::vector<std::pair<double, double>> r{{0, 10}};
  const std::vector<double> a{2}, b{7}, far{40};
  CHECK(gower_distance(a, b, one, r) == 0.5);
  CHECK(gower_distance(a, far, one, r) == 1.0);
  std::vector<std::pair<double, double>> flat{{3, 3}};
  CHECK(gower_distance(a, b, one, flat) == 0.0);
}

TEST_CASE("gower on encoded matrices agrees with the raw-row function") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-3, 3);
  std::string text = "x,y,c\n";
  const char* cats[] = {"r", "g", "b"};
  for (int i = 0; i < 40; ++i)
    text += format_double(u(rng)) + "," + format_double(u(rng)) + "," + cats[rng() % 3] + "\n";
  const auto synth = table(text);
  const auto model = fit_encoding(synth);
  const auto e = encode(model, synth, Metric::gower);
  const auto ranges = gower_ranges(model);
  for (std::size_t i = 0; i < synth.rows(); ++i)
    for (std::size_t j = 0; j < synth.rows(); ++j) {
      const auto a = synth.row(i), b = synth.row(j);
      CHECK(e.distance(i, j) == doctest::Approx(gower_distance(a, b, synth.schema(), ranges)).epsilon(1e-15));
    }
}

TEST_CASE("metric axioms on random rows") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-5, 5);
  std::string text = "x,y,z,c,d\n";
  const char* cats[] = {"a", "b", "c", "d"};
  for (int i = 0; i < 30; ++i)
    text += format_double(u(rng)) + "," + format_double(u(rng)) + "," + format_double(u(rng)) + "," +
            cats[rng() % 4] + "," + cats[rng() % 2] + "\n";
  const auto synth = table(text);
  const auto model = fit_encoding(synth);
  for (auto metric : {Metric::euclidean, Metric::gower}) {
    const auto e = encode(model, synth, metric);
    for (std::size_t i = 0; i < e.rows; ++i) {
      CHECK(e.distance(i, i) == 0);
      for (std::size_t j = 0; j < e.rows; ++j) {
        CHECK(e.distance(i, j) >= 0);
        CHECK(e.distance(i, j) == e.distance(j, i));
        for (std::size_t k = 0; k < e.rows; k += 7)
          CHECK(e.distance(i, k) <= e.distance(i, j) + e.distance(j, k) + 1e-12);
      }
    }
  }
}

TEST_CASE("encoding ignores real data") {
  const auto synth = table("x,c\n1,a\n4,b\n2,a\n");
  const auto m1 = fit_encoding(synth);
  const auto real1 = table("x,c\n100,z\n", Origin::real, synth.schema());
  const auto real2 = table("x,c\n-7,a\n3,q\n", Origin::real, synth.schema());
  (void)encode(m1, real1);
  (void)encode(m1, real2);
  const auto m2 = fit_encoding(synth);
  CHECK(m1 == m2);
  CHECK(encode(m1, synth).values == encode(m2, synth).values);
}

TEST_CASE("model JSON round-trip and hash") {
  const auto synth = table("x,y,c\n1,2,a\n4,0,b\n2,9,a\n3,3,c\n");
  auto model = fit_encoding(synth, ScaleMode::zscore);
  attach_pca(model, encode(model, synth), 2);
  const auto back = EncodingModel::from_json(model.to_json());
  CHECK(back == model);
  CHECK(back.hash() == model.hash());
  CHECK(model.hash().size() == 16);
  const auto other = fit_encoding(synth);
  CHECK(other.hash() != model.hash());
}

TEST_CASE("pca on the line y = x") {
  oracle::Points pts;
  for (int i = 0; i < 20; ++i) pts.push_back({i * 0.1, i * 0.1});
  const auto p = fit_pca(oracle::to_matrix(pts), 1);
  CHECK(p.component(0)[0] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(p.component(0)[1] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(p.explained_variance_ratio[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("pca on isotropic data matches a Jacobi eigen-solve") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0, 1);
  oracle::Points pts(10000, std::vector<double>(2));
  for (auto& p : pts)
    for (auto& v : p) v = n(rng);
  const auto p = fit_pca(oracle::to_matrix(pts), 2);
  const auto [values, vectors] = oracle::jacobi_eigen(oracle::sample_covariance(pts));
  const double total = values[0] + values[1];
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(p.eigenvalues[k] == doctest::Approx(values[k]).epsilon(1e-9));
    CHECK(p.explained_variance_ratio[k] == doctest::Approx(values[k] / total).epsilon(1e-9));
    CHECK(std::abs(p.explained_variance_ratio[k] - 0.5) < 0.02);
    double dot = 0;
    for (std::size_t d = 0; d < 2; ++d) dot += p.component(k)[d] * vectors[k][d];
    CHECK(std::abs(std::abs(dot) - 1) < 1e-6);
  }
}

TEST_CASE("pca invariants") {
  std::mt19937_64 rng(5);
  auto pts = oracle::random_blobs(rng, 120, 5);
  const auto m = oracle::to_matrix(pts);
  const auto p = fit_pca(m, 5);
  // orthonormal axes
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = 0; b < 5; ++b) {
      double dot = 0;
      for (std::size_t d = 0; d < 5; ++d) dot += p.component(a)[d] * p.component(b)[d];
      CHECK(dot == doctest::Approx(a == b ? 1.0 : 0.0).epsilon(1e-10).scale(1));
    }
  // non-increasing ratios and total variance
  double ratio_sum = 0;
  for (std::size_t k = 0; k < 5; ++k) {
    if (k) CHECK(p.explained_variance_ratio[k] <= p.explained_variance_ratio[k - 1]);
    ratio_sum += p.explained_variance_ratio[k];
  }
  CHECK(ratio_sum == doctest::Approx(1.0).epsilon(1e-12));
  const auto cov = oracle::sample_covariance(pts);
  double trace = 0, eig = 0;
  for (std::size_t d = 0; d < 5; ++d) trace += cov[d][d];
  for (double v : p.eigenvalues) eig += v;
  CHECK(eig == doctest::Approx(trace).epsilon(1e-10));
  // full rank projection keeps distances, reconstruction is exact
  for (std::size_t i = 0; i < pts.size(); i += 3) {
    const auto zi = p.project(pts[i]);
    const auto back = p.reconstruct(zi);
    for (std::size_t d = 0; d < 5; ++d) CHECK(std::abs(back[d] - pts[i][d]) < 1e-8);
    for (std::size_t j = 0; j < pts.size(); j += 5) {
      const auto zj = p.project(pts[j]);
      CHECK(std::abs(oracle::l2(zi, zj) - oracle::l2(pts[i], pts[j])) < 1e-8);
    }
  }
  // sign rule: largest-magnitude coordinate is non-negative
  for (std::size_t k = 0; k < 5; ++k) {
    std::size_t arg = 0;
    for (std::size_t d = 1; d < 5; ++d)
      if (std::abs(p.component(k)[d]) > std::abs(p.component(k)[arg])) arg = d;
    CHECK(p.component(k)[arg] >= 0);
  }
}

TEST_CASE("pca argument checks") {
  oracle::Points pts{{1, 2}, {3, 4}, {5, 7}};
  const auto m = oracle::to_matrix(pts);
  CHECK_THROWS_AS(fit_pca(m, 0), Error);
  CHECK_THROWS_AS(fit_pca(m, 3), Error);
  CHECK_THROWS_AS(fit_pca(oracle::to_matrix({{1, 2}}), 1), Error);
}

TEST_CASE("pca is applied by encode and rejected with gower") {
  const auto synth = table("x,y\n0,0\n1,1\n2,2.5\n3,2.9\n");
  auto model = fit_encoding(synth);
  attach_pca(model, encode(model, synth), 1);
  const auto e = encode(model, synth);
  CHECK(e.dims == 1);
  CHECK(e.model_hash == model.hash());
  CHECK_THROWS_AS(encode(model, synth, Metric::gower), Error);
}
