#include "cmla/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cmla/error.hpp"

namespace cmla {

namespace {

[[noreturn]] void fail(const std::string& message) { throw Error(Stage::audit_report, message); }

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v == 0 ? 0.0 : v);
  return buf;
}

Json summary_json(const DminSummary& s) {
  Json doc;
  doc["M"] = s.count;
  doc["min"] = s.min;
  doc["mean"] = s.mean;
  doc["median"] = s.median;
  doc["max"] = s.max;
  doc["p10"] = s.p10;
  doc["p90"] = s.p90;
  return doc;
}

DminSummary summary_from_json(const Json& doc) {
  DminSummary s;
  s.count = doc.at("M").get<std::size_t>();
  s.min = doc.at("min").get<double>();
  s.mean = doc.at("mean").get<double>();
  s.median = doc.at("median").get<double>();
  s.max = doc.at("max").get<double>();
  s.p10 = doc.at("p10").get<double>();
  s.p90 = doc.at("p90").get<double>();
  return s;
}

}  // namespace

Json LeakageReport::to_json() const {
  Json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["tool"] = {{"name", "cmla"}, {"version", run.tool_version}};

  Json r;
  r["dataset"] = run.dataset_label;
  r["generator"] = run.generator_label;
  r["synthetic"] = run.synthetic_path;
  r["real"] = run.real_path.empty() ? Json(nullptr) : Json(run.real_path);
  r["scale"] = scale_mode_name(run.scale);
  r["metric"] = metric_name(run.metric);
  r["pca"] = run.pca_dims;
  r["dbscan"] = {{"eps", run.dbscan.eps},
                 {"eps_mode", run.dbscan.eps_mode == EpsMode::fixed ? "fixed" : "auto"},
                 {"min_samples", run.dbscan.min_samples}};
  r["seed"] = run.seed;
  r["model_hash"] = run.model_hash;
  doc["run"] = std::move(r);
  doc["config"] = config;

  Json c;
  c["synthetic_rows"] = synthetic_rows;
  c["clusters"] = clusters();
  c["noise_rows"] = noise_rows;
  Json meds = Json::array();
  for (const auto& m : medoids)
    meds.push_back({{"cluster", m.cluster}, {"row_id", m.row_id}, {"size", m.size}});
  c["medoids"] = std::move(meds);
  doc["clustering"] = std::move(c);

  if (!evaluation) {
    doc["evaluation"] = nullptr;
    return doc;
  }
  const Evaluation& e = *evaluation;
  Json ev;
  ev["real_rows"] = e.real_rows;
  ev["dmin_summary"] = summary_json(e.summary);
  Json ref = Json::array();
  for (const auto& x : e.reference)
    ref.push_back({{"tau", x.tau}, {"asr", x.asr}, {"coverage", x.coverage}});
  ev["reference"] = std::move(ref);
  ev["curves"] = {{"tau", e.curves.taus}, {"asr", e.curves.asr}, {"coverage", e.curves.coverage}};
  if (embed_records) {
    Json recs = Json::array();
    for (const auto& x : e.records)
      recs.push_back({{"cluster_id", x.cluster},
                      {"medoid_row", x.medoid_row},
                      {"d_min", x.d_min},
                      {"nearest_real_row", x.nearest_real_row}});
    ev["records"] = std::move(recs);
  }
  doc["evaluation"] = std::move(ev);
  return doc;
}

LeakageReport LeakageReport::from_json(const Json& doc) {
  try {
    if (doc.at("schema_version").get<int>() != kReportSchemaVersion)
      fail("unsupported report schema_version " + doc.at("schema_version").dump());
    LeakageReport rep;
    const auto& r = doc.at("run");
    rep.run.tool_version = doc.at("tool").at("version").get<std::string>();
    rep.run.dataset_label = r.at("dataset").get<std::string>();
    rep.run.generator_label = r.at("generator").get<std::string>();
    rep.run.synthetic_path = r.at("synthetic").get<std::string>();
    rep.run.real_path = r.at("real").is_null() ? "" : r.at("real").get<std::string>();
    rep.run.scale = parse_scale_mode(r.at("scale").get<std::string>());
    rep.run.metric = parse_metric(r.at("metric").get<std::string>());
    rep.run.pca_dims = r.at("pca").get<std::size_t>();
    const auto& db = r.at("dbscan");
    rep.run.dbscan.eps = db.at("eps").get<double>();
    rep.run.dbscan.eps_mode = db.at("eps_mode").get<std::string>() == "fixed" ? EpsMode::fixed
                                                                              : EpsMode::automatic;
    rep.run.dbscan.min_samples = db.at("min_samples").get<std::size_t>();
    rep.run.seed = r.at("seed").get<std::uint64_t>();
    rep.run.model_hash = r.at("model_hash").get<std::string>();
    rep.config = doc.at("config");

    const auto& c = doc.at("clustering");
    rep.synthetic_rows = c.at("synthetic_rows").get<std::size_t>();
    rep.noise_rows = c.at("noise_rows").get<std::size_t>();
    for (const auto& m : c.at("medoids"))
      rep.medoids.push_back({m.at("cluster").get<std::size_t>(), m.at("row_id").get<std::size_t>(),
                             m.at("size").get<std::size_t>()});
    if (c.at("clusters").get<std::size_t>() != rep.medoids.size())
      fail("cluster count disagrees with the medoid list");

    const auto& ev = doc.at("evaluation");
    if (!ev.is_null()) {
      Evaluation e;
      e.real_rows = ev.at("real_rows").get<std::size_t>();
      e.summary = summary_from_json(ev.at("dmin_summary"));
      for (const auto& x : ev.at("reference"))
        e.reference.push_back(
            {x.at("tau").get<double>(), x.at("asr").get<double>(), x.at("coverage").get<double>()});
      const auto& cv = ev.at("curves");
      e.curves.taus = cv.at("tau").get<std::vector<double>>();
      e.curves.asr = cv.at("asr").get<std::vector<double>>();
      e.curves.coverage = cv.at("coverage").get<std::vector<double>>();
      e.curves.medoid_count = rep.medoids.size();
      e.curves.real_count = e.real_rows;
      if (e.curves.asr.size() != e.curves.taus.size() ||
          e.curves.coverage.size() != e.curves.taus.size())
        fail("curve arrays have different lengths");
      if (ev.contains("records")) {
        rep.embed_records = true;
        for (const auto& x : ev.at("records"))
          e.records.push_back({x.at("cluster_id").get<std::size_t>(),
                               x.at("medoid_row").get<std::size_t>(), x.at("d_min").get<double>(),
                               x.at("nearest_real_row").get<std::size_t>()});
      }
      rep.evaluation = std::move(e);
    }
    return rep;
  } catch (const Json::exception& e) {
    fail(std::string("malformed report: ") + e.what());
  }
}

std::string LeakageReport::render() const { return to_json().dump(2) + "\n"; }

LeakageReport build_report(RunMetadata run, Json config, const EncodingModel& model,
                           const EncodedMatrix& synthetic_encoded, const ClusterLabeling& labeling,
                           const MedoidSet& medoids, const std::optional<EvaluationInputs>& evaluation,
                           bool embed_records) {
  const std::string hash = model.hash();
  if (synthetic_encoded.model_hash != hash || medoids.model_hash != hash)
    fail("inconsistent artifact lineage: synthetic encoding or medoids were not produced by model " +
         hash);
  if (labeling.labels.size() != synthetic_encoded.rows || labeling.clusters != medoids.size())
    fail("inconsistent artifact lineage: labeling does not match the synthetic matrix or medoids");

  LeakageReport rep;
  run.model_hash = hash;
  run.dbscan = labeling.params;
  rep.run = std::move(run);
  rep.config = std::move(config);
  rep.synthetic_rows = synthetic_encoded.rows;
  rep.noise_rows = labeling.noise_count();
  rep.embed_records = embed_records;
  for (const auto& m : medoids.medoids) rep.medoids.push_back({m.cluster, m.row_id, m.cluster_size});

  if (evaluation) {
    const auto& in = *evaluation;
    if (!in.real_encoded || in.real_encoded->model_hash != hash)
      fail("inconsistent artifact lineage: real rows were not encoded with model " + hash);
    if (in.records.size() != medoids.size() || in.curves.taus != in.grid.taus())
      fail("inconsistent artifact lineage: records or curves do not match the run");
    Evaluation e;
    e.real_rows = in.real_encoded->rows;
    e.summary = summarize_dmin(in.records);
    e.curves = in.curves;
    e.records = in.records;
    for (double tau : in.grid.marks()) {
      const std::size_t i = *in.grid.index_of(tau);
      e.reference.push_back({in.curves.taus[i], in.curves.asr[i], in.curves.coverage[i]});
    }
    rep.evaluation = std::move(e);
  }
  return rep;
}

std::vector<std::string> summary_cells(const DminSummary& s) {
  return {std::to_string(s.count), fixed4(s.min), fixed4(s.mean), fixed4(s.median),
          fixed4(s.max),           fixed4(s.p10), fixed4(s.p90)};
}

std::string render_summary_row(const DminSummary& s) {
  const auto cells = summary_cells(s);
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ", ";
    out += kSummaryColumns[i] + "=" + cells[i];
  }
  return out;
}

namespace {

std::string join_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out.push_back(',');
    out += csv_escape(cells[i]);
  }
  out.push_back('\n');
  return out;
}

}  // namespace

std::string summary_csv(const DminSummary& summary) {
  return join_row(kSummaryColumns) + join_row(summary_cells(summary));
}

std::string summary_table_csv(const std::vector<LeakageReport>& reports) {
  std::vector<std::string> header = {"dataset", "generator"};
  header.insert(header.end(), kSummaryColumns.begin(), kSummaryColumns.end());
  std::string out = join_row(header);
  for (const auto& rep : reports) {
    if (!rep.evaluation) continue;
    std::vector<std::string> row = {rep.run.dataset_label, rep.run.generator_label};
    const auto cells = summary_cells(rep.evaluation->summary);
    row.insert(row.end(), cells.begin(), cells.end());
    out += join_row(row);
  }
  return out;
}

std::string curves_csv(const LeakageReport& report) {
  if (!report.evaluation) fail("report has no evaluation section; curves need real data");
  const auto& c = report.evaluation->curves;
  std::string out = "tau,asr,coverage\n";
  for (std::size_t i = 0; i < c.taus.size(); ++i) {
    if (i > 0) {
      if (!(c.taus[i] > c.taus[i - 1])) fail("tau column is not strictly increasing");
      if (c.asr[i] < c.asr[i - 1]) fail("asr column decreases at tau=" + format_double(c.taus[i]));
      if (c.coverage[i] < c.coverage[i - 1])
        fail("coverage column decreases at tau=" + format_double(c.taus[i]));
    }
    out += format_double(c.taus[i]) + "," + format_double(c.asr[i]) + "," +
           format_double(c.coverage[i]) + "\n";
  }
  return out;
}

std::string records_csv(const std::vector<DistanceRecord>& records) {
  std::string out = "cluster_id,medoid_row,d_min,nearest_real_row\n";
  for (const auto& r : records)
    out += std::to_string(r.cluster) + "," + std::to_string(r.medoid_row) + "," +
           format_double(r.d_min) + "," + std::to_string(r.nearest_real_row) + "\n";
  return out;
}

std::string labels_csv(const ClusterLabeling& labeling, const EncodedMatrix& matrix) {
  std::string out = "row_id,label\n";
  for (std::size_t i = 0; i < labeling.labels.size(); ++i)
    out += std::to_string(matrix.row_ids[i]) + "," + std::to_string(labeling.labels[i]) + "\n";
  return out;
}

std::string medoids_csv(const MedoidSet& medoids, const TableSchema& schema) {
  std::vector<std::string> header;
  for (const auto& c : schema.columns()) header.push_back(c.name);
  std::string out = join_row(header);
  for (const auto& m : medoids.medoids) {
    std::vector<std::string> row;
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (schema[j].kind == ColumnKind::numeric)
        row.push_back(format_double(m.raw[j]));
      else
        row.push_back(schema[j].vocabulary[static_cast<std::size_t>(m.raw[j])]);
    }
    out += join_row(row);
  }
  return out;
}

Json medoids_sidecar(const MedoidSet& medoids, const ClusterLabeling& labeling) {
  Json doc;
  doc["model_hash"] = medoids.model_hash;
  doc["params"] = {{"eps", labeling.params.eps},
                   {"eps_mode", labeling.params.eps_mode == EpsMode::fixed ? "fixed" : "auto"},
                   {"min_samples", labeling.params.min_samples}};
  doc["noise_rows"] = labeling.noise_count();
  Json list = Json::array();
  for (const auto& m : medoids.medoids)
    list.push_back({{"cluster", m.cluster},
                    {"row_id", m.row_id},
                    {"size", m.cluster_size},
                    {"distance_sum", m.distance_sum}});
  doc["clusters"] = std::move(list);
  return doc;
}

std::string heatmap_filename(double tau) { return "heatmap_tau" + format_double(tau) + ".csv"; }

std::string heatmap_csv(const std::vector<LeakageReport>& reports, double tau) {
  std::vector<std::string> generators, datasets;
  auto add = [](std::vector<std::string>& v, const std::string& s) {
    if (std::find(v.begin(), v.end(), s) == v.end()) v.push_back(s);
  };
  std::map<std::pair<std::string, std::string>, double> cells;
  for (const auto& rep : reports) {
    if (!rep.evaluation)
      fail("report for " + rep.run.generator_label + "/" + rep.run.dataset_label +
           " has no coverage curve");
    const auto& c = rep.evaluation->curves;
    std::optional<std::size_t> hit;
    for (std::size_t i = 0; i < c.taus.size() && !hit; ++i)
      if (std::abs(c.taus[i] - tau) <= 1e-12) hit = i;
    if (!hit)
      fail("tau " + format_double(tau) + " is not on the grid of " + rep.run.generator_label + "/" +
           rep.run.dataset_label);
    add(generators, rep.run.generator_label);
    add(datasets, rep.run.dataset_label);
    cells[{rep.run.generator_label, rep.run.dataset_label}] = c.coverage[*hit];
  }
  std::vector<std::string> header = {"generator"};
  header.insert(header.end(), datasets.begin(), datasets.end());
  std::string out = join_row(header);
  for (const auto& g : generators) {
    std::vector<std::string> row = {g};
    for (const auto& d : datasets) {
      auto it = cells.find({g, d});
      row.push_back(it == cells.end() ? "" : format_double(it->second));
    }
    out += join_row(row);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail("write failed for '" + path.string() + "'");
}

void emit_curves_csv(const LeakageReport& report, const std::filesystem::path& path) {
  write_text(path, curves_csv(report));
}

void emit_heatmap_cell(const std::vector<LeakageReport>& reports, double tau,
                       const std::filesystem::path& path) {
  write_text(path, heatmap_csv(reports, tau));
}

}  // namespace cmla
