#include "cmla/audit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "cmla/error.hpp"

namespace cmla {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error(Stage::audit_cli, message); }

std::string read_file(const fs::path& path, Stage stage) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(stage, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string relative_to(const fs::path& target, const fs::path& base) {
  const fs::path rel = fs::absolute(target).lexically_normal().lexically_relative(
      fs::absolute(base).lexically_normal());
  return rel.empty() ? fs::absolute(target).lexically_normal().generic_string()
                     : rel.generic_string();
}

fs::path resolve_from(const std::string& stored, const fs::path& base) {
  const fs::path p(stored);
  return p.is_absolute() ? p : (base / p).lexically_normal();
}

std::size_t resolve_pca(const std::string& pca, std::size_t dims, std::size_t rows) {
  if (pca == "off" || pca == "0") return 0;
  if (pca == "auto") return std::min({dims, rows, std::size_t{50}});
  const auto v = parse_finite(pca);
  if (!v || *v < 1 || *v != std::floor(*v)) fail("--pca expects off, auto or a positive integer");
  return static_cast<std::size_t>(*v);
}

bool label_ok(const std::string& s) {
  return !s.empty() && s != "." && s != ".." &&
         std::all_of(s.begin(), s.end(), [](char c) {
           return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
         });
}

}  // namespace

void AuditConfig::validate() const {
  if (synthetic.empty()) fail("a synthetic CSV path is required");
  dbscan.validate();
  if (metric == Metric::gower && pca != "off" && pca != "0")
    fail("PCA applies to the Euclidean encoding only; drop --pca or use --metric euclidean");
  for (double m : marks)
    if (!(m >= 0) || !std::isfinite(m)) fail("reference thresholds must be finite and >= 0");
}

Json AuditConfig::settings_json() const {
  Json doc;
  doc["scale"] = scale_mode_name(scale);
  doc["pca"] = pca;
  doc["eps"] = dbscan.eps_mode == EpsMode::automatic ? Json("auto") : Json(dbscan.eps);
  doc["min_samples"] = dbscan.min_samples;
  doc["grid"] = grid;
  doc["marks"] = marks;
  doc["metric"] = metric_name(metric);
  doc["seed"] = seed;
  doc["records"] = records;
  doc["dataset"] = dataset_label;
  doc["generator"] = generator_label;
  doc["cluster_index_threshold"] = cluster_index_threshold;
  doc["nearest_index_threshold"] = nearest_index_threshold;
  return doc;
}

void AuditConfig::apply_json(const Json& doc) {
  try {
    if (doc.contains("synthetic")) synthetic = doc["synthetic"].get<std::string>();
    if (doc.contains("real")) {
      if (doc["real"].is_null()) real.reset();
      else real = fs::path(doc["real"].get<std::string>());
    }
    if (doc.contains("out")) out_dir = doc["out"].get<std::string>();
    if (doc.contains("scale")) scale = parse_scale_mode(doc["scale"].get<std::string>());
    if (doc.contains("pca")) {
      const auto& p = doc["pca"];
      pca = p.is_number() ? std::to_string(p.get<std::size_t>()) : p.get<std::string>();
    }
    if (doc.contains("eps")) {
      const auto& e = doc["eps"];
      if (e.is_string() && e.get<std::string>() == "auto") {
        dbscan.eps_mode = EpsMode::automatic;
        dbscan.eps = 0;
      } else {
        dbscan.eps_mode = EpsMode::fixed;
        dbscan.eps = e.get<double>();
      }
    }
    if (doc.contains("min_samples")) dbscan.min_samples = doc["min_samples"].get<std::size_t>();
    if (doc.contains("grid")) grid = doc["grid"].get<std::string>();
    if (doc.contains("marks")) marks = doc["marks"].get<std::vector<double>>();
    if (doc.contains("metric")) metric = parse_metric(doc["metric"].get<std::string>());
    if (doc.contains("seed")) seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("records")) records = doc["records"].get<bool>();
    if (doc.contains("verify")) verify = doc["verify"].get<bool>();
    if (doc.contains("dataset")) dataset_label = doc["dataset"].get<std::string>();
    if (doc.contains("generator")) generator_label = doc["generator"].get<std::string>();
    if (doc.contains("cluster_index_threshold"))
      cluster_index_threshold = doc["cluster_index_threshold"].get<std::size_t>();
    if (doc.contains("nearest_index_threshold"))
      nearest_index_threshold = doc["nearest_index_threshold"].get<std::size_t>();
  } catch (const Json::exception& e) {
    fail(std::string("invalid config: ") + e.what());
  }
}

AuditResult compute_audit(const AuditConfig& config, const fs::path& report_dir) {
  config.validate();
  const ThresholdGrid grid = ThresholdGrid::parse(config.grid, config.marks);
  AuditResult result;
  auto& trace = result.trace;

  // Attack phase: synthetic samples only.
  trace.push_back("load_synthetic");
  const DataTable synthetic = load_csv(config.synthetic, std::nullopt, Origin::synthetic);

  trace.push_back("fit_encoding");
  EncodingModel model = fit_encoding(synthetic, config.scale);

  trace.push_back("encode_synthetic");
  EncodedMatrix synth_encoded = encode(model, synthetic, config.metric);
  std::size_t pca_dims = 0;
  if (config.metric == Metric::euclidean) {
    pca_dims = resolve_pca(config.pca, model.raw_dims(), synthetic.rows());
    if (pca_dims > 0) {
      trace.push_back("fit_pca");
      attach_pca(model, synth_encoded, pca_dims);
      synth_encoded = encode(model, synthetic, config.metric);
    }
  }

  trace.push_back("cluster");
  const ClusterLabeling labeling =
      dbscan(synth_encoded, config.dbscan, NeighborOptions{config.cluster_index_threshold});

  trace.push_back("medoids");
  const MedoidSet medoids = extract_medoids(synth_encoded, labeling, synthetic);

  // Evaluation phase: real rows are read only from here on.
  std::optional<EvaluationInputs> evaluation;
  std::optional<EncodedMatrix> real_encoded;
  if (config.real) {
    trace.push_back("load_real");
    const DataTable real = load_csv(*config.real, synthetic.schema(), Origin::real);
    trace.push_back("unify_schema");
    unify_schema(synthetic, &real);
    trace.push_back("encode_real");
    real_encoded = encode(model, real, config.metric);
    if (medoids.size() == 0) {
      trace.push_back("evaluation_skipped");
    } else {
      trace.push_back("nearest_real");
      EvaluationInputs in;
      in.real_encoded = &*real_encoded;
      in.records = nearest_real_distances(medoids, *real_encoded,
                                          NearestOptions{config.nearest_index_threshold});
      trace.push_back("curves");
      in.curves = compute_curves(in.records, medoids, *real_encoded, grid);
      in.grid = grid;
      evaluation = std::move(in);
    }
  }

  trace.push_back("report");
  RunMetadata run;
  run.dataset_label = config.dataset_label;
  run.generator_label = config.generator_label;
  run.scale = config.scale;
  run.metric = config.metric;
  run.pca_dims = pca_dims;
  run.seed = config.seed;
  run.synthetic_path = relative_to(config.synthetic, report_dir);
  if (config.real) run.real_path = relative_to(*config.real, report_dir);
  result.report = build_report(std::move(run), config.settings_json(), model, synth_encoded,
                               labeling, medoids, evaluation, config.records);

  auto& files = result.files;
  files["report.json"] = result.report.render();
  files["encoding_model.json"] = model.to_json().dump(2) + "\n";
  files["labels.csv"] = labels_csv(labeling, synth_encoded);
  files["medoids.csv"] = medoids_csv(medoids, synthetic.schema());
  files["medoids.json"] = medoids_sidecar(medoids, labeling).dump(2) + "\n";
  if (result.report.evaluation) {
    const auto& e = *result.report.evaluation;
    files["curves.csv"] = curves_csv(result.report);
    files["dmin_records.csv"] = records_csv(e.records);
    files["dmin_summary.csv"] = summary_csv(e.summary);
  }
  return result;
}

AuditResult run_audit(const AuditConfig& config) {
  AuditResult result = compute_audit(config, config.out_dir);
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw Error(Stage::audit_report, "cannot create '" + config.out_dir.string() + "': " + ec.message());
  for (const auto& [name, body] : result.files) write_text(config.out_dir / name, body);
  return result;
}

namespace {

bool close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

void diff_json(const std::string& where, const Json& expected, const Json& actual, double tol,
               VerifyResult& out) {
  if (expected.is_number() && actual.is_number()) {
    ++out.values_checked;
    if (!close(expected.get<double>(), actual.get<double>(), tol))
      out.mismatches.push_back(where + ": expected " + expected.dump() + ", found " + actual.dump());
    return;
  }
  if (expected.type() != actual.type()) {
    out.mismatches.push_back(where + ": type differs");
    return;
  }
  if (expected.is_object()) {
    for (auto it = expected.begin(); it != expected.end(); ++it) {
      if (!actual.contains(it.key())) {
        out.mismatches.push_back(where + "." + it.key() + ": missing");
        continue;
      }
      diff_json(where + "." + it.key(), it.value(), actual.at(it.key()), tol, out);
    }
    for (auto it = actual.begin(); it != actual.end(); ++it)
      if (!expected.contains(it.key())) out.mismatches.push_back(where + "." + it.key() + ": unexpected");
  } else if (expected.is_array()) {
    if (expected.size() != actual.size()) {
      out.mismatches.push_back(where + ": length " + std::to_string(actual.size()) + ", expected " +
                               std::to_string(expected.size()));
      return;
    }
    for (std::size_t i = 0; i < expected.size(); ++i)
      diff_json(where + "[" + std::to_string(i) + "]", expected[i], actual[i], tol, out);
  } else if (expected != actual) {
    out.mismatches.push_back(where + ": expected " + expected.dump() + ", found " + actual.dump());
  }
}

}  // namespace

void diff_text(const std::string& name, const std::string& expected, const std::string& actual,
               double tol, VerifyResult& out) {
  ++out.files_checked;
  if (name.ends_with(".json")) {
    Json e, a;
    try {
      e = Json::parse(expected);
      a = Json::parse(actual);
    } catch (const Json::exception& ex) {
      out.mismatches.push_back(name + ": not valid JSON (" + ex.what() + ")");
      return;
    }
    diff_json(name, e, a, tol, out);
    return;
  }
  std::vector<std::vector<std::string>> e, a;
  try {
    e = parse_csv(expected);
    a = parse_csv(actual);
  } catch (const Error& ex) {
    out.mismatches.push_back(name + ": unreadable CSV (" + ex.what() + ")");
    return;
  }
  if (e.size() != a.size()) {
    out.mismatches.push_back(name + ": " + std::to_string(a.size()) + " lines, expected " +
                             std::to_string(e.size()));
    return;
  }
  for (std::size_t r = 0; r < e.size(); ++r) {
    if (e[r].size() != a[r].size()) {
      out.mismatches.push_back(name + " line " + std::to_string(r + 1) + ": field count differs");
      continue;
    }
    for (std::size_t c = 0; c < e[r].size(); ++c) {
      const auto x = parse_finite(e[r][c]);
      const auto y = parse_finite(a[r][c]);
      if (x && y) {
        ++out.values_checked;
        if (!close(*x, *y, tol))
          out.mismatches.push_back(name + " line " + std::to_string(r + 1) + " field " +
                                   std::to_string(c + 1) + ": expected " + e[r][c] + ", found " +
                                   a[r][c]);
      } else if (e[r][c] != a[r][c]) {
        out.mismatches.push_back(name + " line " + std::to_string(r + 1) + " field " +
                                 std::to_string(c + 1) + ": expected '" + e[r][c] + "', found '" +
                                 a[r][c] + "'");
      }
    }
  }
}

VerifyResult verify_report(const fs::path& report_path, double tol) {
  const fs::path dir = report_path.has_parent_path() ? report_path.parent_path() : fs::path(".");
  Json doc;
  try {
    doc = Json::parse(read_file(report_path, Stage::audit_report));
  } catch (const Json::exception& e) {
    throw Error(Stage::audit_report, "cannot parse '" + report_path.string() + "': " + e.what());
  }
  const LeakageReport stored = LeakageReport::from_json(doc);

  AuditConfig config;
  config.apply_json(stored.config);
  config.synthetic = resolve_from(stored.run.synthetic_path, dir);
  if (!stored.run.real_path.empty()) config.real = resolve_from(stored.run.real_path, dir);
  config.out_dir = dir;

  const AuditResult fresh = compute_audit(config, dir);
  VerifyResult out;
  for (const auto& [name, body] : fresh.files) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) {
      out.mismatches.push_back(name + ": missing from " + dir.string());
      continue;
    }
    diff_text(name, body, read_file(p, Stage::audit_report), tol, out);
  }
  return out;
}

bool ScenarioResult::ordering_ok() const {
  return std::all_of(ordering.begin(), ordering.end(), [](const auto& c) { return c.passed; });
}

ScenarioResult run_scenario(const HarnessScenario& scenario, const fs::path& out_dir,
                            const Json& overrides) {
  for (std::size_t i = 0; i < scenario.generators.size(); ++i) {
    const auto& label = scenario.generators[i].label;
    if (!label_ok(label))
      throw Error(Stage::synth_harness, "generator label '" + label +
                                            "' must be non-empty and use only [A-Za-z0-9_.-]");
    for (std::size_t j = 0; j < i; ++j)
      if (scenario.generators[j].label == label)
        throw Error(Stage::synth_harness, "duplicate generator label '" + label + "'");
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(Stage::audit_report, "cannot create '" + out_dir.string() + "': " + ec.message());

  const DataTable real = make_real(scenario);
  write_csv(real, out_dir / "real.csv");
  write_text(out_dir / "scenario.json", scenario.to_json().dump(2) + "\n");

  ScenarioResult result;
  AuditConfig base;
  base.seed = scenario.seed;
  base.apply_json(scenario.audit);
  base.apply_json(overrides);
  base.dataset_label = scenario.dataset_label;

  for (const auto& gen : scenario.generators) {
    const fs::path synth_path = out_dir / ("synthetic_" + gen.label + ".csv");
    write_csv(sample_synthetic(real, gen), synth_path);
    AuditConfig cfg = base;
    cfg.synthetic = synth_path;
    cfg.real = out_dir / "real.csv";
    cfg.out_dir = out_dir / gen.label;
    cfg.generator_label = gen.label;
    cfg.seed = gen.seed;
    result.reports.push_back(run_audit(cfg).report);
  }

  std::vector<LeakageReport> evaluated;
  for (const auto& r : result.reports)
    if (r.evaluation) evaluated.push_back(r);
  const ThresholdGrid grid = ThresholdGrid::parse(base.grid, base.marks);
  if (!evaluated.empty()) {
    for (double tau : grid.marks()) {
      const std::string name = heatmap_filename(tau);
      emit_heatmap_cell(evaluated, tau, out_dir / name);
      result.heatmap_files.push_back(name);
    }
  }
  write_text(out_dir / "table_dmin.csv", summary_table_csv(result.reports));

  auto asr_at = [&](const std::string& label, double tau) -> std::optional<double> {
    for (const auto& r : result.reports) {
      if (r.run.generator_label != label || !r.evaluation) continue;
      const auto& c = r.evaluation->curves;
      for (std::size_t i = 0; i < c.taus.size(); ++i)
        if (std::abs(c.taus[i] - tau) <= 1e-12) return c.asr[i];
    }
    return std::nullopt;
  };
  Json checks = Json::array();
  for (const auto& e : scenario.expected_ordering) {
    OrderingCheck check{e};
    const auto hi = asr_at(e.higher, e.tau);
    const auto lo = asr_at(e.lower, e.tau);
    if (hi && lo) {
      check.higher_asr = *hi;
      check.lower_asr = *lo;
      check.passed = *hi >= *lo + e.margin;
    }
    checks.push_back({{"higher", e.higher},
                      {"lower", e.lower},
                      {"tau", e.tau},
                      {"margin", e.margin},
                      {"higher_asr", hi ? Json(*hi) : Json(nullptr)},
                      {"lower_asr", lo ? Json(*lo) : Json(nullptr)},
                      {"passed", check.passed}});
    result.ordering.push_back(check);
  }
  write_text(out_dir / "ordering.json", checks.dump(2) + "\n");
  return result;
}

ScenarioResult run_scenario(const fs::path& scenario_path, const fs::path& out_dir,
                            const Json& overrides) {
  Json doc;
  try {
    doc = Json::parse(read_file(scenario_path, Stage::synth_harness));
  } catch (const Json::exception& e) {
    throw Error(Stage::synth_harness,
                "invalid scenario file '" + scenario_path.string() + "': " + e.what());
  }
  return run_scenario(HarnessScenario::from_json(doc), out_dir, overrides);
}

}  // namespace cmla
