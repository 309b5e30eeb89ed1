#include "cmla/harness.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "cmla/error.hpp"

namespace cmla {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error(Stage::synth_harness, message); }

constexpr std::uint64_t kNoiseStream = 0x9E3779B97F4A7C15ULL;

void check_distribution(const std::vector<double>& p, std::size_t size, const std::string& what) {
  if (p.size() != size)
    fail(what + " has " + std::to_string(p.size()) + " entries, expected " + std::to_string(size));
  double sum = 0;
  for (double v : p) {
    if (!(v >= 0) || !std::isfinite(v)) fail(what + " has a negative or non-finite entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(what + " sums to " + format_double(sum) + ", not 1");
}

}  // namespace

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double SplitMix64::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t SplitMix64::index(std::size_t n) {
  const auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
  return i < n ? i : n - 1;
}

std::size_t SplitMix64::pick(const std::vector<double>& weights) {
  const double u = uniform();
  double acc = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return i;
  }
  // Rounding left u above the cumulative sum: take the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;)
    if (weights[i] > 0) return i;
  return 0;
}

void MixtureSpec::validate() const {
  if (weights.empty()) fail("mixture needs at least one component");
  check_distribution(weights, weights.size(), "mixture weights");
  if (means.size() != weights.size())
    fail("mixture has " + std::to_string(weights.size()) + " weights but " +
         std::to_string(means.size()) + " means");
  for (const auto& m : means) {
    if (m.size() != dims()) fail("mixture means have inconsistent dimensionality");
    for (double v : m)
      if (!std::isfinite(v)) fail("mixture mean is not finite");
  }
  if (!(scale >= 0) || !std::isfinite(scale)) fail("mixture scale must be finite and >= 0");
}

void RealRecipe::validate() const {
  if (n_rows == 0) fail("real recipe needs n_rows >= 1");
  mixture.validate();
  if (numeric_names.size() != mixture.dims())
    fail("real recipe names " + std::to_string(numeric_names.size()) +
         " numeric columns but the mixture has " + std::to_string(mixture.dims()) + " dimensions");
  if (numeric_names.empty() && categorical.empty()) fail("real recipe has no columns");
  for (const auto& c : categorical) {
    if (c.categories.empty()) fail("categorical column '" + c.name + "' has no categories");
    if (c.probabilities.size() != 1 && c.probabilities.size() != mixture.components())
      fail("categorical column '" + c.name +
           "' needs one shared distribution or one per mixture component");
    for (const auto& p : c.probabilities)
      check_distribution(p, c.categories.size(), "probabilities of '" + c.name + "'");
  }
}

const char* generator_kind_name(GeneratorKind kind) noexcept {
  switch (kind) {
    case GeneratorKind::memorizer: return "memorizer";
    case GeneratorKind::noised: return "noised";
    case GeneratorKind::independent: return "independent";
    case GeneratorKind::gaussian_mixture: return "gaussian_mixture";
  }
  return "unknown";
}

void GeneratorSpec::validate() const {
  if (n_samples < 1) fail("generator '" + label + "' needs n_samples >= 1");
  if (!(sigma >= 0) || !std::isfinite(sigma)) fail("generator '" + label + "' needs sigma >= 0");
  if (kind == GeneratorKind::gaussian_mixture) {
    if (!mixture) fail("gaussian_mixture generator '" + label + "' lacks a mixture");
    mixture->validate();
  }
}

MixtureSpec mixture_from_json(const Json& doc) {
  MixtureSpec m;
  m.weights = doc.at("weights").get<std::vector<double>>();
  m.means = doc.at("means").get<std::vector<std::vector<double>>>();
  m.scale = doc.value("scale", 1.0);
  return m;
}

Json mixture_to_json(const MixtureSpec& mixture) {
  Json doc;
  doc["weights"] = mixture.weights;
  doc["means"] = mixture.means;
  doc["scale"] = mixture.scale;
  return doc;
}

GeneratorSpec generator_from_json(const Json& doc) {
  GeneratorSpec g;
  const auto kind = doc.at("kind").get<std::string>();
  if (kind == "memorizer") g.kind = GeneratorKind::memorizer;
  else if (kind == "noised") g.kind = GeneratorKind::noised;
  else if (kind == "independent") g.kind = GeneratorKind::independent;
  else if (kind == "gaussian_mixture") g.kind = GeneratorKind::gaussian_mixture;
  else fail("unknown generator kind '" + kind + "'");
  g.label = doc.value("label", kind);
  g.sigma = doc.value("sigma", 0.0);
  g.seed = doc.value("seed", std::uint64_t{0});
  g.n_samples = doc.value("n_samples", std::size_t{1});
  if (doc.contains("mixture")) g.mixture = mixture_from_json(doc.at("mixture"));
  g.validate();
  return g;
}

Json generator_to_json(const GeneratorSpec& spec) {
  Json doc;
  doc["label"] = spec.label;
  doc["kind"] = generator_kind_name(spec.kind);
  if (spec.kind == GeneratorKind::noised) doc["sigma"] = spec.sigma;
  if (spec.mixture) doc["mixture"] = mixture_to_json(*spec.mixture);
  doc["seed"] = spec.seed;
  doc["n_samples"] = spec.n_samples;
  return doc;
}

HarnessScenario HarnessScenario::from_json(const Json& doc) {
  try {
    HarnessScenario s;
    s.dataset_label = doc.value("dataset", std::string("harness"));
    s.seed = doc.value("seed", std::uint64_t{0});
    const auto& real = doc.at("real");
    s.real.n_rows = real.at("n_rows").get<std::size_t>();
    s.real.seed = real.value("seed", s.seed);
    s.real.numeric_names = real.value("numeric", std::vector<std::string>{});
    s.real.mixture = mixture_from_json(real.at("mixture"));
    for (const auto& c : real.value("categorical", Json::array())) {
      CategoricalSpec cs;
      cs.name = c.at("name").get<std::string>();
      cs.categories = c.at("categories").get<std::vector<std::string>>();
      cs.probabilities = c.at("probabilities").get<std::vector<std::vector<double>>>();
      s.real.categorical.push_back(std::move(cs));
    }
    s.real.validate();
    for (const auto& g : doc.at("generators")) {
      Json entry = g;
      if (!entry.contains("seed")) entry["seed"] = s.seed + 1 + s.generators.size();
      if (!entry.contains("n_samples")) entry["n_samples"] = s.real.n_rows;
      s.generators.push_back(generator_from_json(entry));
    }
    if (s.generators.empty()) fail("scenario lists no generators");
    for (const auto& e : doc.value("expected_ordering", Json::array())) {
      OrderingExpectation o;
      o.higher = e.at("higher").get<std::string>();
      o.lower = e.at("lower").get<std::string>();
      o.margin = e.value("margin", 0.0);
      o.tau = e.value("tau", 0.1);
      s.expected_ordering.push_back(std::move(o));
    }
    s.audit = doc.value("audit", Json::object());
    return s;
  } catch (const Json::exception& e) {
    fail(std::string("invalid scenario: ") + e.what());
  }
}

Json HarnessScenario::to_json() const {
  Json doc;
  doc["dataset"] = dataset_label;
  doc["seed"] = seed;
  Json real_doc;
  real_doc["n_rows"] = real.n_rows;
  real_doc["seed"] = real.seed;
  real_doc["numeric"] = real.numeric_names;
  real_doc["mixture"] = mixture_to_json(real.mixture);
  Json cats = Json::array();
  for (const auto& c : real.categorical)
    cats.push_back({{"name", c.name}, {"categories", c.categories}, {"probabilities", c.probabilities}});
  real_doc["categorical"] = std::move(cats);
  doc["real"] = std::move(real_doc);
  Json gens = Json::array();
  for (const auto& g : generators) gens.push_back(generator_to_json(g));
  doc["generators"] = std::move(gens);
  Json ord = Json::array();
  for (const auto& o : expected_ordering)
    ord.push_back({{"higher", o.higher}, {"lower", o.lower}, {"margin", o.margin}, {"tau", o.tau}});
  doc["expected_ordering"] = std::move(ord);
  doc["audit"] = audit;
  return doc;
}

DataTable make_real(const RealRecipe& recipe) {
  recipe.validate();
  std::vector<Column> cols;
  for (const auto& name : recipe.numeric_names) cols.push_back({name, ColumnKind::numeric, {}});
  for (const auto& c : recipe.categorical) cols.push_back({c.name, ColumnKind::categorical, c.categories});

  SplitMix64 rng(recipe.seed);
  const auto& mix = recipe.mixture;
  std::vector<double> cells;
  cells.reserve(recipe.n_rows * cols.size());
  for (std::size_t r = 0; r < recipe.n_rows; ++r) {
    const std::size_t k = rng.pick(mix.weights);
    for (std::size_t d = 0; d < mix.dims(); ++d)
      cells.push_back(mix.means[k][d] + mix.scale * rng.normal());
    for (const auto& c : recipe.categorical) {
      const auto& p = c.probabilities.size() == 1 ? c.probabilities[0] : c.probabilities[k];
      cells.push_back(static_cast<double>(rng.pick(p)));
    }
  }
  try {
    return DataTable(TableSchema(std::move(cols)), std::move(cells), Origin::harness);
  } catch (const Error& e) {
    fail(std::string("invalid real recipe: ") + e.what());
  }
}

DataTable make_real(const HarnessScenario& scenario) { return make_real(scenario.real); }

DataTable sample_synthetic(const DataTable& real, const GeneratorSpec& spec) {
  spec.validate();
  const auto& schema = real.schema();
  const std::size_t ncols = schema.size();
  const std::size_t n = spec.n_samples;
  std::vector<double> cells(n * ncols);
  SplitMix64 rng(spec.seed);

  switch (spec.kind) {
    case GeneratorKind::memorizer:
    case GeneratorKind::noised: {
      for (std::size_t i = 0; i < n; ++i) {
        const auto src = real.row(rng.index(real.rows()));
        std::copy(src.begin(), src.end(), cells.begin() + static_cast<std::ptrdiff_t>(i * ncols));
      }
      if (spec.kind == GeneratorKind::memorizer) break;

      // Noise is isotropic in standardized units of the real table.
      std::vector<double> spread(ncols, 1.0);
      for (std::size_t j = 0; j < ncols; ++j) {
        if (schema[j].kind != ColumnKind::numeric) continue;
        double mean = 0;
        for (std::size_t r = 0; r < real.rows(); ++r) mean += real.numeric(r, j);
        mean /= static_cast<double>(real.rows());
        double ss = 0;
        for (std::size_t r = 0; r < real.rows(); ++r)
          ss += (real.numeric(r, j) - mean) * (real.numeric(r, j) - mean);
        const double sd = std::sqrt(ss / static_cast<double>(real.rows()));
        spread[j] = sd > 0 ? sd : 1.0;
      }
      const double resample = std::min(1.0, spec.sigma);
      SplitMix64 noise(spec.seed ^ kNoiseStream);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < ncols; ++j) {
          double& cell = cells[i * ncols + j];
          if (schema[j].kind == ColumnKind::numeric) {
            cell += spec.sigma * spread[j] * noise.normal();
          } else if (noise.uniform() < resample) {
            cell = static_cast<double>(real.category(noise.index(real.rows()), j));
          }
        }
      }
      break;
    }
    case GeneratorKind::independent:
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < ncols; ++j)
          cells[i * ncols + j] = real.cells()[rng.index(real.rows()) * ncols + j];
      break;
    case GeneratorKind::gaussian_mixture: {
      const auto& mix = *spec.mixture;
      if (mix.dims() != schema.numeric_count())
        fail("mixture has " + std::to_string(mix.dims()) + " dimensions but the table has " +
             std::to_string(schema.numeric_count()) + " numeric columns");
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = rng.pick(mix.weights);
        std::size_t d = 0;
        for (std::size_t j = 0; j < ncols; ++j) {
          if (schema[j].kind == ColumnKind::numeric)
            cells[i * ncols + j] = mix.means[k][d++] + mix.scale * rng.normal();
          else
            cells[i * ncols + j] = static_cast<double>(real.category(rng.index(real.rows()), j));
        }
      }
      break;
    }
  }
  return DataTable(schema, std::move(cells), Origin::synthetic);
}

}  // namespace cmla
