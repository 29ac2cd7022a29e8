#include "lossval/report_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lossval/errors.hpp"
#include "lossval/format.hpp"

namespace lossval::report {
namespace {

using nlohmann::json;
using namespace lossval::bench;

json stat_json(const Stat& s) { return json{{"mean", s.mean}, {"se", s.se}}; }
Stat stat_from(const json& j) { return {j.at("mean").get<double>(), j.at("se").get<double>()}; }

json suite_json(const SuiteConfig& s) {
  std::vector<std::string> kinds;
  for (auto k : s.kinds) kinds.emplace_back(to_string(k));
  // jobs is a scheduling knob and stays out of the report.
  return json{{"datasets", s.datasets},
              {"methods", s.methods},
              {"kinds", kinds},
              {"rates", s.rates},
              {"repetitions", s.repetitions},
              {"seed", s.seed},
              {"epochs", s.epochs},
              {"curves", s.curves},
              {"curve_rate", s.curve_rate},
              {"knn_k", s.knn_k},
              {"n_train", s.n_train},
              {"n_val", s.n_val},
              {"n_test", s.n_test},
              {"blobs_dim", s.blobs_dim},
              {"blobs_classes", s.blobs_classes},
              {"blobs_separation", s.blobs_separation},
              {"friedman_noise", s.friedman_noise},
              {"csv_label", s.csv_label}};
}

SuiteConfig suite_from(const json& j) {
  SuiteConfig s;
  s.datasets = j.at("datasets").get<std::vector<std::string>>();
  s.methods = j.at("methods").get<std::vector<std::string>>();
  s.kinds.clear();
  for (const auto& k : j.at("kinds")) s.kinds.push_back(parse_noise_kind(k.get<std::string>()));
  s.rates = j.at("rates").get<std::vector<double>>();
  s.repetitions = j.at("repetitions").get<std::size_t>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.epochs = j.at("epochs").get<std::size_t>();
  s.curves = j.at("curves").get<bool>();
  s.curve_rate = j.at("curve_rate").get<double>();
  s.knn_k = j.at("knn_k").get<std::size_t>();
  s.n_train = j.at("n_train").get<std::size_t>();
  s.n_val = j.at("n_val").get<std::size_t>();
  s.n_test = j.at("n_test").get<std::size_t>();
  s.blobs_dim = j.at("blobs_dim").get<std::size_t>();
  s.blobs_classes = j.at("blobs_classes").get<std::size_t>();
  s.blobs_separation = j.at("blobs_separation").get<double>();
  s.friedman_noise = j.at("friedman_noise").get<double>();
  s.csv_label = j.at("csv_label").get<std::string>();
  return s;
}

json key_json(const CellKey& k) {
  return json{{"dataset", k.dataset},
              {"method", k.method},
              {"kind", to_string(k.kind)},
              {"rate", k.rate},
              {"repetition", k.repetition}};
}

CellKey key_from(const json& j) {
  return {j.at("dataset").get<std::string>(), j.at("method").get<std::string>(),
          parse_noise_kind(j.at("kind").get<std::string>()), j.at("rate").get<double>(),
          j.at("repetition").get<std::size_t>()};
}

std::string csv_row(std::initializer_list<std::string> cells) {
  std::string out;
  bool first = true;
  for (const auto& c : cells) {
    if (!first) out += ',';
    out += c;
    first = false;
  }
  return out + '\n';
}

std::string rate_label(double rate) { return format_double(rate * 100.0); }

std::string plot_csv(const ExperimentReport& r, bool removal) {
  const auto grid = removal ? removal_grid() : addition_grid();
  std::string out = "dataset,method,kind,rate,x,y,y_normalized\n";
  for (const auto& row : r.aggregates) {
    const auto& y = removal ? row.removal_curve : row.addition_curve;
    const auto& yn = removal ? row.removal_curve_normalized : row.addition_curve_normalized;
    for (std::size_t i = 0; i < y.size(); ++i) {
      out += csv_row({row.dataset, row.method, std::string(to_string(row.kind)),
                      format_double(row.rate), format_double(grid[i]), format_double(y[i]),
                      row.normalized ? format_double(yn[i]) : std::string()});
    }
  }
  return out;
}

}  // namespace

std::string to_json(const ExperimentReport& r) {
  json cells = json::array();
  for (const auto& c : r.cells) {
    cells.push_back(json{{"key", key_json(c.key)},
                         {"ok", c.ok},
                         {"error", c.error},
                         {"f1", c.f1},
                         {"detection_mean", c.detection_mean},
                         {"detection_curve", c.detection_curve},
                         {"removal", c.removal},
                         {"addition", c.addition}});
  }
  json aggs = json::array();
  for (const auto& a : r.aggregates) {
    aggs.push_back(json{{"dataset", a.dataset},
                        {"method", a.method},
                        {"kind", to_string(a.kind)},
                        {"rate", a.rate},
                        {"n", a.n},
                        {"failed", a.failed},
                        {"f1", stat_json(a.f1)},
                        {"detection_mean", stat_json(a.detection_mean)},
                        {"removal_mean", stat_json(a.removal_mean)},
                        {"addition_mean", stat_json(a.addition_mean)},
                        {"detection_curve", a.detection_curve},
                        {"removal_curve", a.removal_curve},
                        {"addition_curve", a.addition_curve},
                        {"normalized", a.normalized},
                        {"removal_curve_normalized", a.removal_curve_normalized},
                        {"addition_curve_normalized", a.addition_curve_normalized}});
  }
  json overall = json::array();
  for (const auto& o : r.overall) {
    overall.push_back(json{{"method", o.method},
                           {"kind", to_string(o.kind)},
                           {"n", o.n},
                           {"f1", stat_json(o.f1)},
                           {"detection_mean", stat_json(o.detection_mean)}});
  }
  json doc{{"version", r.version},
           {"suite", suite_json(r.suite)},
           {"cells", cells},
           {"aggregates", aggs},
           {"overall", overall}};
  return doc.dump(1) + '\n';
}

ExperimentReport from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("report is not valid JSON: ") + e.what());
  }
  try {
    ExperimentReport r;
    r.version = doc.at("version").get<int>();
    if (r.version != kReportVersion) {
      throw ParseError("unsupported report version " + std::to_string(r.version));
    }
    r.suite = suite_from(doc.at("suite"));
    for (const auto& c : doc.at("cells")) {
      CellRecord rec;
      rec.key = key_from(c.at("key"));
      rec.ok = c.at("ok").get<bool>();
      rec.error = c.at("error").get<std::string>();
      rec.f1 = c.at("f1").get<double>();
      rec.detection_mean = c.at("detection_mean").get<double>();
      rec.detection_curve = c.at("detection_curve").get<std::vector<double>>();
      rec.removal = c.at("removal").get<std::vector<double>>();
      rec.addition = c.at("addition").get<std::vector<double>>();
      r.cells.push_back(std::move(rec));
    }
    for (const auto& a : doc.at("aggregates")) {
      AggregateRow row;
      row.dataset = a.at("dataset").get<std::string>();
      row.method = a.at("method").get<std::string>();
      row.kind = parse_noise_kind(a.at("kind").get<std::string>());
      row.rate = a.at("rate").get<double>();
      row.n = a.at("n").get<std::size_t>();
      row.failed = a.at("failed").get<std::size_t>();
      row.f1 = stat_from(a.at("f1"));
      row.detection_mean = stat_from(a.at("detection_mean"));
      row.removal_mean = stat_from(a.at("removal_mean"));
      row.addition_mean = stat_from(a.at("addition_mean"));
      row.detection_curve = a.at("detection_curve").get<std::vector<double>>();
      row.removal_curve = a.at("removal_curve").get<std::vector<double>>();
      row.addition_curve = a.at("addition_curve").get<std::vector<double>>();
      row.normalized = a.at("normalized").get<bool>();
      row.removal_curve_normalized = a.at("removal_curve_normalized").get<std::vector<double>>();
      row.addition_curve_normalized = a.at("addition_curve_normalized").get<std::vector<double>>();
      r.aggregates.push_back(std::move(row));
    }
    for (const auto& o : doc.at("overall")) {
      OverallRow row;
      row.method = o.at("method").get<std::string>();
      row.kind = parse_noise_kind(o.at("kind").get<std::string>());
      row.n = o.at("n").get<std::size_t>();
      row.f1 = stat_from(o.at("f1"));
      row.detection_mean = stat_from(o.at("detection_mean"));
      r.overall.push_back(std::move(row));
    }
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void save_report(const ExperimentReport& report, const std::filesystem::path& path) {
  write_text(path, to_json(report));
}

ExperimentReport load_report(const std::filesystem::path& path) {
  return from_json(read_text(path));
}

std::string f1_table_csv(const ExperimentReport& r) {
  std::string out = "dataset,method,kind";
  for (double rate : r.suite.rates) {
    out += ",f1_" + rate_label(rate) + ",se_" + rate_label(rate);
  }
  out += ",f1_avg,se_avg\n";
  // Aggregates are grouped with rates innermost.
  const std::size_t nr = r.suite.rates.size();
  for (std::size_t i = 0; i + nr <= r.aggregates.size(); i += nr) {
    const auto& head = r.aggregates[i];
    out += head.dataset + ',' + head.method + ',' + std::string(to_string(head.kind));
    std::vector<double> cell_f1;
    for (std::size_t j = 0; j < nr; ++j) {
      const auto& a = r.aggregates[i + j];
      out += ',' + format_double(a.f1.mean) + ',' + format_double(a.f1.se);
    }
    for (const auto& c : r.cells) {
      if (c.ok && c.key.dataset == head.dataset && c.key.method == head.method &&
          c.key.kind == head.kind) {
        cell_f1.push_back(c.f1);
      }
    }
    const Stat avg = summarize(cell_f1);
    out += ',' + format_double(avg.mean) + ',' + format_double(avg.se) + '\n';
  }
  return out;
}

std::string overall_table_csv(const ExperimentReport& r) {
  std::string out = "method,kind,n,f1_mean,f1_se,detection_mean,detection_se\n";
  for (const auto& o : r.overall) {
    out += csv_row({o.method, std::string(to_string(o.kind)), std::to_string(o.n),
                    format_double(o.f1.mean), format_double(o.f1.se),
                    format_double(o.detection_mean.mean), format_double(o.detection_mean.se)});
  }
  return out;
}

std::string curve_table_csv(const ExperimentReport& r) {
  std::string out = "dataset,method,kind,rate,removal_mean,removal_se,addition_mean,addition_se\n";
  for (const auto& a : r.aggregates) {
    if (a.removal_curve.empty()) continue;
    out += csv_row({a.dataset, a.method, std::string(to_string(a.kind)), format_double(a.rate),
                    format_double(a.removal_mean.mean), format_double(a.removal_mean.se),
                    format_double(a.addition_mean.mean), format_double(a.addition_mean.se)});
  }
  return out;
}

std::string detection_plot_csv(const ExperimentReport& r) {
  std::string out = "dataset,method,kind,rate,x,y\n";
  for (const auto& a : r.aggregates) {
    for (std::size_t i = 0; i < a.detection_curve.size(); ++i) {
      out += csv_row({a.dataset, a.method, std::string(to_string(a.kind)), format_double(a.rate),
                      format_double(static_cast<double>(i) / 100.0),
                      format_double(a.detection_curve[i])});
    }
  }
  return out;
}

std::string removal_plot_csv(const ExperimentReport& r) { return plot_csv(r, true); }
std::string addition_plot_csv(const ExperimentReport& r) { return plot_csv(r, false); }

void write_outputs(const ExperimentReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_report(report, dir / "report.json");
  write_text(dir / "f1_table.csv", f1_table_csv(report));
  write_text(dir / "overall.csv", overall_table_csv(report));
  write_text(dir / "curves.csv", curve_table_csv(report));
  write_text(dir / "detection_plot.csv", detection_plot_csv(report));
  write_text(dir / "removal_plot.csv", removal_plot_csv(report));
  write_text(dir / "addition_plot.csv", addition_plot_csv(report));
}

}  // namespace lossval::report
