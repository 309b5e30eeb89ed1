// cmla: cluster-medoid leakage audit for synthetic tabular data.
//
// Exit codes: 0 success, 2 pipeline error (stderr names the stage),
// 3 scenario ordering violated, 4 verify found mismatches. Usage errors
// keep CLI11's own exit codes.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cmla/audit.hpp"
#include "cmla/error.hpp"

namespace {

using cmla::Json;

constexpr int kExitPipeline = 2;
constexpr int kExitOrdering = 3;
constexpr int kExitVerify = 4;

// Flags shared by `audit` and `scenario`; only flags given on the command
// line end up in the override document.
struct AuditFlags {
  std::string config, synthetic, real, out, eps, scale, pca, grid, marks, metric, dataset, generator;
  std::size_t min_samples = 0;
  std::uint64_t seed = 0;
  bool records = false;
  bool verify = false;

  CLI::Option* min_samples_opt = nullptr;
  CLI::Option* seed_opt = nullptr;

  void attach(CLI::App& app, bool with_paths) {
    app.add_option("--config", config, "JSON config file (flags override it)");
    if (with_paths) {
      app.add_option("--synthetic", synthetic, "synthetic samples CSV");
      app.add_option("--real", real, "real records CSV (enables ASR/coverage)");
      app.add_option("--dataset", dataset, "dataset label for reports");
      app.add_option("--generator", generator, "generator label for reports");
    }
    app.add_option("--out", out, "output directory");
    app.add_option("--eps", eps, "DBSCAN radius or 'auto'");
    min_samples_opt = app.add_option("--min-samples", min_samples, "DBSCAN min_samples (>= 2)");
    app.add_option("--scale", scale, "numeric scaling: minmax | zscore");
    app.add_option("--pca", pca, "PCA dimensions: off | auto | <d>");
    app.add_option("--grid", grid, "threshold grid start:stop:step");
    app.add_option("--mark", marks, "reference thresholds, comma separated");
    app.add_option("--metric", metric, "euclidean | gower");
    seed_opt = app.add_option("--seed", seed, "run seed recorded in the report");
    app.add_flag("--records", records, "embed per-medoid d_min records in report.json");
    app.add_flag("--verify", verify, "recompute and diff every emitted file");
  }

  Json overrides() const {
    Json doc = Json::object();
    if (!synthetic.empty()) doc["synthetic"] = synthetic;
    if (!real.empty()) doc["real"] = real;
    if (!out.empty()) doc["out"] = out;
    if (!eps.empty()) {
      if (eps == "auto") {
        doc["eps"] = "auto";
      } else if (auto v = cmla::parse_finite(eps)) {
        doc["eps"] = *v;
      } else {
        throw cmla::Error(cmla::Stage::audit_cli, "--eps expects a number or 'auto'");
      }
    }
    if (min_samples_opt->count()) doc["min_samples"] = min_samples;
    if (!scale.empty()) doc["scale"] = scale;
    if (!pca.empty()) doc["pca"] = pca;
    if (!grid.empty()) doc["grid"] = grid;
    if (!marks.empty()) {
      std::vector<double> values;
      for (const auto& field : cmla::parse_csv(marks).front()) {
        auto v = cmla::parse_finite(field);
        if (!v) throw cmla::Error(cmla::Stage::audit_cli, "--mark value '" + field + "' is not a number");
        values.push_back(*v);
      }
      doc["marks"] = values;
    }
    if (!metric.empty()) doc["metric"] = metric;
    if (seed_opt->count()) doc["seed"] = seed;
    if (records) doc["records"] = true;
    if (verify) doc["verify"] = true;
    if (!dataset.empty()) doc["dataset"] = dataset;
    if (!generator.empty()) doc["generator"] = generator;
    return doc;
  }

  Json config_file() const {
    if (config.empty()) return Json::object();
    std::ifstream in(config);
    if (!in) throw cmla::Error(cmla::Stage::audit_cli, "cannot open config '" + config + "'");
    try {
      return Json::parse(in);
    } catch (const Json::exception& e) {
      throw cmla::Error(cmla::Stage::audit_cli, "invalid config '" + config + "': " + e.what());
    }
  }
};

std::string fmt4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

void print_report(const cmla::LeakageReport& r) {
  std::cout << r.run.dataset_label << "/" << r.run.generator_label << ": " << r.synthetic_rows
            << " synthetic rows, K=" << r.clusters() << " clusters, " << r.noise_rows
            << " noise, eps=" << r.run.dbscan.eps << "\n";
  if (!r.evaluation) {
    if (!r.run.real_path.empty()) std::cout << "  no clusters found; ASR and coverage not computed\n";
    return;
  }
  std::cout << "  d_min: " << cmla::render_summary_row(r.evaluation->summary) << "\n";
  for (const auto& x : r.evaluation->reference)
    std::cout << "  tau=" << cmla::format_double(x.tau) << "  ASR=" << fmt4(x.asr)
              << "  Cov=" << fmt4(x.coverage) << "\n";
}

int report_verify(const cmla::VerifyResult& v, const std::string& what) {
  if (v.ok()) {
    std::cout << "verify " << what << ": OK (" << v.files_checked << " files, " << v.values_checked
              << " values)\n";
    return 0;
  }
  std::cerr << "verify " << what << ": " << v.mismatches.size() << " mismatches\n";
  for (std::size_t i = 0; i < v.mismatches.size() && i < 20; ++i)
    std::cerr << "  " << v.mismatches[i] << "\n";
  return kExitVerify;
}

int run_audit_cmd(const AuditFlags& flags) {
  cmla::AuditConfig config;
  config.apply_json(flags.config_file());
  config.apply_json(flags.overrides());
  const auto result = cmla::run_audit(config);
  print_report(result.report);
  std::cout << "wrote " << result.files.size() << " files to " << config.out_dir.string() << "\n";
  if (config.verify) return report_verify(cmla::verify_report(config.out_dir / "report.json"), "audit");
  return 0;
}

int run_scenario_cmd(const std::string& path, const AuditFlags& flags) {
  Json overrides = flags.config_file();
  overrides.update(flags.overrides());
  const std::string out = overrides.value("out", std::string("cmla_scenario"));
  overrides.erase("out");
  const bool verify = overrides.value("verify", false);
  const auto result = cmla::run_scenario(path, out, overrides);
  for (const auto& r : result.reports) print_report(r);
  for (const auto& f : result.heatmap_files) std::cout << "wrote " << out << "/" << f << "\n";
  int code = 0;
  if (verify) {
    for (const auto& r : result.reports) {
      const auto p = std::filesystem::path(out) / r.run.generator_label / "report.json";
      if (int c = report_verify(cmla::verify_report(p), r.run.generator_label)) code = c;
    }
  }
  for (const auto& c : result.ordering) {
    std::cout << (c.passed ? "ordering ok:   " : "ordering FAIL: ") << c.expectation.higher
              << " ASR(" << cmla::format_double(c.expectation.tau) << ")=" << fmt4(c.higher_asr)
              << " >= " << c.expectation.lower << " " << fmt4(c.lower_asr) << " + "
              << cmla::format_double(c.expectation.margin) << "\n";
  }
  if (!result.ordering_ok()) return kExitOrdering;
  return code;
}

int run_encode_cmd(const std::string& synthetic, const std::string& table, const std::string& scale,
                   const std::string& pca, const std::string& metric, const std::string& out,
                   const std::string& model_out) {
  const auto synth = cmla::load_csv(synthetic);
  auto model = cmla::fit_encoding(synth, cmla::parse_scale_mode(scale));
  const auto m = cmla::parse_metric(metric);
  if (pca != "off") {
    if (m != cmla::Metric::euclidean)
      throw cmla::Error(cmla::Stage::encoder, "PCA applies to the Euclidean encoding only");
    const std::size_t d = pca == "auto"
                              ? std::min({model.raw_dims(), synth.rows(), std::size_t{50}})
                              : static_cast<std::size_t>(std::stoul(pca));
    cmla::attach_pca(model, cmla::encode(model, synth), d);
  }
  const auto target = table.empty() ? synth : cmla::load_csv(table, synth.schema(), cmla::Origin::real);
  const auto enc = cmla::encode(model, target, m);

  std::string text = "row_id";
  for (std::size_t d = 0; d < enc.dims; ++d) text += ",e" + std::to_string(d);
  text += "\n";
  for (std::size_t r = 0; r < enc.rows; ++r) {
    text += std::to_string(enc.row_ids[r]);
    for (double v : enc.row(r)) text += "," + cmla::format_double(v);
    text += "\n";
  }
  if (out.empty() || out == "-") std::cout << text;
  else cmla::write_text(out, text);
  if (!model_out.empty()) cmla::write_text(model_out, model.to_json().dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cluster-medoid leakage audit for synthetic tabular data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cmla::kToolVersion);

  AuditFlags audit_flags;
  auto* audit = app.add_subcommand("audit", "cluster synthetic samples, extract medoids, score leakage");
  audit_flags.attach(*audit, true);

  AuditFlags scenario_flags;
  std::string scenario_path;
  auto* scenario = app.add_subcommand("scenario", "run a harness scenario end to end");
  scenario->add_option("scenario", scenario_path, "scenario JSON")->required();
  scenario_flags.attach(*scenario, false);

  std::string report_path;
  double tolerance = 1e-9;
  auto* verify = app.add_subcommand("verify", "recompute an audit and diff its emitted files");
  verify->add_option("report", report_path, "report.json of a finished audit")->required();
  verify->add_option("--tol", tolerance, "relative tolerance");

  std::string enc_synth, enc_table, enc_scale = "minmax", enc_pca = "off", enc_metric = "euclidean",
                         enc_out, enc_model;
  auto* encode = app.add_subcommand("encode", "dump the fitted encoding of a table");
  encode->add_option("--synthetic", enc_synth, "synthetic CSV the encoding is fitted on")->required();
  encode->add_option("--table", enc_table, "table to encode (default: the synthetic table)");
  encode->add_option("--scale", enc_scale, "minmax | zscore");
  encode->add_option("--pca", enc_pca, "off | auto | <d>");
  encode->add_option("--metric", enc_metric, "euclidean | gower");
  encode->add_option("--out", enc_out, "output CSV (default stdout)");
  encode->add_option("--model", enc_model, "also write the encoding model JSON here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*audit) return run_audit_cmd(audit_flags);
    if (*scenario) return run_scenario_cmd(scenario_path, scenario_flags);
    if (*verify) return report_verify(cmla::verify_report(report_path, tolerance), report_path);
    if (*encode)
      return run_encode_cmd(enc_synth, enc_table, enc_scale, enc_pca, enc_metric, enc_out, enc_model);
  } catch (const cmla::Error& e) {
    std::cerr << "cmla: error [" << cmla::stage_name(e.stage()) << "]: " << e.what() << "\n";
    return kExitPipeline;
  } catch (const std::exception& e) {
    std::cerr << "cmla: error: " << e.what() << "\n";
    return kExitPipeline;
  }
  return 0;
}
