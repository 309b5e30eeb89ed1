#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cmla/dataset.hpp"
#include "cmla/encoder.hpp"

namespace cmla {

/// SplitMix64 (Steele, Lea, Flood 2014): 64-bit state, increment by the
/// golden-ratio constant, then a fixed xor-shift-multiply finalizer. All
/// harness randomness derives from it so tables are identical across
/// platforms and standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal by the Box-Muller cosine branch (two uniforms per draw).
  double normal();
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n);
  /// Index drawn with probability proportional to weights.
  std::size_t pick(const std::vector<double>& weights);

 private:
  std::uint64_t state_;
};

/// Isotropic Gaussian mixture: component k has mean means[k] and standard
/// deviation `scale` on every axis.
struct MixtureSpec {
  std::vector<double> weights;
  std::vector<std::vector<double>> means;
  double scale = 1;

  std::size_t components() const noexcept { return weights.size(); }
  std::size_t dims() const noexcept { return means.empty() ? 0 : means.front().size(); }
  /// Weights non-negative summing to 1 within 1e-9; means rectangular; scale >= 0.
  void validate() const;
};

/// One categorical column of a harness table. `probabilities` holds either a
/// single distribution shared by all mixture components or one per component.
struct CategoricalSpec {
  std::string name;
  std::vector<std::string> categories;
  std::vector<std::vector<double>> probabilities;
};

struct RealRecipe {
  std::size_t n_rows = 0;
  std::vector<std::string> numeric_names;
  MixtureSpec mixture;
  std::vector<CategoricalSpec> categorical;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class GeneratorKind { memorizer, noised, independent, gaussian_mixture };

const char* generator_kind_name(GeneratorKind kind) noexcept;

struct GeneratorSpec {
  std::string label;
  GeneratorKind kind = GeneratorKind::memorizer;
  double sigma = 0;                    // noised
  std::optional<MixtureSpec> mixture;  // gaussian_mixture
  std::uint64_t seed = 0;
  std::size_t n_samples = 1;

  void validate() const;
};

/// ASR(tau)[higher] >= ASR(tau)[lower] + margin.
struct OrderingExpectation {
  std::string higher;
  std::string lower;
  double margin = 0;
  double tau = 0.1;
};

struct HarnessScenario {
  std::string dataset_label = "harness";
  /// Default seed: the real table uses it, generator i uses seed + 1 + i,
  /// unless they set their own.
  std::uint64_t seed = 0;
  RealRecipe real;
  std::vector<GeneratorSpec> generators;
  std::vector<OrderingExpectation> expected_ordering;
  /// Audit settings in config-file form (see AuditConfig).
  Json audit = Json::object();

  static HarnessScenario from_json(const Json& doc);
  Json to_json() const;
};

MixtureSpec mixture_from_json(const Json& doc);
Json mixture_to_json(const MixtureSpec& mixture);
GeneratorSpec generator_from_json(const Json& doc);
Json generator_to_json(const GeneratorSpec& spec);

/// Draws the real table: numeric columns from the mixture, then categorical
/// columns conditioned on each row's mixture component.
DataTable make_real(const RealRecipe& recipe);
DataTable make_real(const HarnessScenario& scenario);

/// Toy black-box generator.
///  memorizer: rows of `real` drawn uniformly with replacement.
///  noised(sigma): memorizer rows, each numeric cell plus sigma * column
///    stddev (population, real table) * N(0,1), each categorical cell resampled from the column
///    marginal with probability min(1, sigma).
///  independent: every cell drawn from its column's empirical marginal.
///  gaussian_mixture: numerics from the given mixture, categoricals from
///    the real marginals.
DataTable sample_synthetic(const DataTable& real, const GeneratorSpec& spec);

}  // namespace cmla
