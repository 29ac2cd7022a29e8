#include "lossval/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "lossval/bench.hpp"
#include "lossval/errors.hpp"
#include "lossval/format.hpp"
#include "lossval/parallel.hpp"
#include "lossval/report_io.hpp"
#include "lossval/version.hpp"

namespace lossval {
namespace {

using bench::NoiseKind;
using bench::SuiteConfig;

struct DataOpts {
  std::string dataset = "blobs";
  std::string task = "classification";
  std::string label_column = "label";
  std::size_t n_train = 1000;
  std::size_t n_val = 100;
  std::size_t n_test = 3000;
  std::size_t blobs_dim = 8;
  std::size_t blobs_classes = 3;
  double blobs_sep = 3.0;
  double friedman_noise = 1.0;
};

struct RunOpts {
  std::uint64_t seed = 0;
  std::size_t epochs = 30;
  std::size_t knn_k = 100;
  std::size_t jobs = 0;
};

void add_data_opts(CLI::App* cmd, DataOpts& d, bool single) {
  if (single) {
    cmd->add_option("--dataset", d.dataset, "blobs, friedman1 or a CSV path")->capture_default_str();
  }
  cmd->add_option("--task", d.task, "task of CSV datasets")
      ->check(CLI::IsMember({"classification", "regression"}))
      ->capture_default_str();
  cmd->add_option("--label-column", d.label_column, "label column of CSV datasets")
      ->capture_default_str();
  cmd->add_option("--n-train", d.n_train)->capture_default_str();
  cmd->add_option("--n-val", d.n_val)->capture_default_str();
  cmd->add_option("--n-test", d.n_test)->capture_default_str();
  cmd->add_option("--blobs-dim", d.blobs_dim)->capture_default_str();
  cmd->add_option("--blobs-classes", d.blobs_classes)->capture_default_str();
  cmd->add_option("--blobs-sep", d.blobs_sep)->capture_default_str();
  cmd->add_option("--friedman-noise", d.friedman_noise)->capture_default_str();
}

void add_run_opts(CLI::App* cmd, RunOpts& r) {
  cmd->add_option("--seed", r.seed)->capture_default_str();
  cmd->add_option("--epochs", r.epochs, "LossVal training epochs")->capture_default_str();
  cmd->add_option("--k", r.knn_k, "neighbours for knn_shapley")->capture_default_str();
}

void add_jobs_opt(CLI::App* cmd, RunOpts& r) {
  cmd->add_option("--jobs", r.jobs, "worker threads (default: LOSSVAL_JOBS or all cores)");
}

// CSV datasets are encoded as "<path>" or "reg:<path>" in suite configs.
std::string dataset_id(const std::string& name, const DataOpts& d) {
  if (name == "blobs" || name == "friedman1") return name;
  return d.task == "regression" ? "reg:" + name : name;
}

SuiteConfig base_suite(const DataOpts& d, const RunOpts& r) {
  SuiteConfig s;
  s.seed = r.seed;
  s.epochs = r.epochs;
  s.knn_k = r.knn_k;
  s.jobs = r.jobs == 0 ? default_jobs() : r.jobs;
  s.n_train = d.n_train;
  s.n_val = d.n_val;
  s.n_test = d.n_test;
  s.blobs_dim = d.blobs_dim;
  s.blobs_classes = d.blobs_classes;
  s.blobs_separation = d.blobs_sep;
  s.friedman_noise = d.friedman_noise;
  s.csv_label = d.label_column;
  return s;
}

std::vector<double> percent_to_rates(const std::vector<double>& percent) {
  std::vector<double> out;
  for (double p : percent) {
    if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("rate must be a percentage in [0, 100]");
    out.push_back(p / 100.0);
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (double x : v) out += (out.empty() ? "" : ",") + format_double(x);
  return out;
}

std::vector<std::pair<std::string, std::string>> suite_lines(const SuiteConfig& s) {
  std::vector<std::string> kinds;
  for (auto k : s.kinds) kinds.emplace_back(bench::to_string(k));
  return {{"datasets", join(s.datasets)},
          {"methods", join(s.methods)},
          {"kinds", join(kinds)},
          {"rates", join(s.rates)},
          {"repetitions", std::to_string(s.repetitions)},
          {"seed", std::to_string(s.seed)},
          {"epochs", std::to_string(s.epochs)},
          {"curves", s.curves ? "true" : "false"},
          {"curve_rate", format_double(s.curve_rate)},
          {"knn_k", std::to_string(s.knn_k)},
          {"split", std::to_string(s.n_train) + "/" + std::to_string(s.n_val) + "/" +
                        std::to_string(s.n_test)},
          {"blobs", std::to_string(s.blobs_dim) + "d/" + std::to_string(s.blobs_classes) +
                        "k/sep" + format_double(s.blobs_separation)},
          {"friedman_noise", format_double(s.friedman_noise)},
          {"csv_label", s.csv_label}};
}

void log_run(std::ostream& err, const std::string& command, const SuiteConfig& s) {
  err << "lossval " << kVersion << " " << command << " seed=" << s.seed << " jobs=" << s.jobs
      << "\n";
  for (const auto& [k, v] : suite_lines(s)) err << "  " << k << "=" << v << "\n";
}

int run_value(const DataOpts& d, const RunOpts& r, const std::string& method,
              const std::string& noise, double rate_percent, const std::string& out_path,
              std::ostream& out, std::ostream& err) {
  SuiteConfig s = base_suite(d, r);
  s.datasets = {dataset_id(d.dataset, d)};
  s.methods = {method};
  const bool noisy = noise != "none";
  s.kinds = {noisy ? bench::parse_noise_kind(noise) : NoiseKind::label};
  s.rates = {noisy ? percent_to_rates({rate_percent}).front() : 0.0};
  s.repetitions = 1;
  s.curves = false;
  s.validate();
  log_run(err, "value", s);

  const bench::CellKey key{s.datasets[0], method, s.kinds[0], s.rates[0], 0};
  const auto data = bench::make_cell_data(s, key);
  for (const auto& w : data.train.warnings) err << "warning: " << w << "\n";
  const auto val = bench::run_method(s, key, data);
  for (const auto& n : val.notes) err << "note: " << n << "\n";
  if (!val.flagged.empty()) err << "flagged instances: " << val.flagged.size() << "\n";
  if (noisy) {
    const auto det = bench::detection_curve(val.scores, data.train.corrupted);
    err << "detection f1=" << format_double(det.f1)
        << " curve_mean=" << format_double(det.curve_mean) << "\n";
  }

  std::vector<std::pair<std::string, std::string>> lines{{"dataset", s.datasets[0]},
                                                         {"noise", noise},
                                                         {"rate", format_double(s.rates[0])}};
  for (const auto& kv : suite_lines(s)) {
    if (kv.first != "datasets" && kv.first != "methods" && kv.first != "kinds" &&
        kv.first != "rates" && kv.first != "repetitions" && kv.first != "curves" &&
        kv.first != "curve_rate") {
      lines.push_back(kv);
    }
  }
  for (const auto& [k, v] : val.config) lines.emplace_back("method." + k, v);
  std::string body;
  for (const auto& [k, v] : lines) body += "# " + k + "=" + v + "\n";
  std::string text = "# method=" + method + " seed=" + std::to_string(s.seed) +
                     " config_hash=" + fnv1a_hex(body) + "\n" + body + "index,score\n";
  for (std::size_t i = 0; i < val.scores.size(); ++i) {
    text += std::to_string(i) + "," + format_double(val.scores[i]) + "\n";
  }
  if (out_path == "-") {
    out << text;
  } else {
    report::write_text(out_path, text);
    err << "wrote " << out_path << "\n";
  }
  return 0;
}

int run_suite(const std::string& command, const SuiteConfig& s, const std::string& out_dir,
              std::ostream& out, std::ostream& err) {
  s.validate();
  log_run(err, command, s);
  const auto report = bench::run_benchmark(s);
  std::size_t failed = 0;
  for (const auto& c : report.cells) {
    if (!c.ok) {
      ++failed;
      err << "cell failed: " << c.key.dataset << "/" << c.key.method << "/"
          << bench::to_string(c.key.kind) << "/" << format_double(c.key.rate) << "/rep"
          << c.key.repetition << ": " << c.error << "\n";
    }
  }
  report::write_outputs(report, out_dir);
  if (command == "ablate") {
    std::string table = "method,n,f1_mean,f1_se\n";
    for (const auto& r : bench::ablation_rows(report)) {
      table += r.method + "," + std::to_string(r.n) + "," + format_double(r.f1.mean) + "," +
               format_double(r.f1.se) + "\n";
    }
    report::write_text(std::filesystem::path(out_dir) / "ablation.csv", table);
    std::string pairs = "multiplicative,additive,mult_mean,add_mean,diff,se,verdict\n";
    const auto ps = bench::ablation_pairs(report);
    for (const auto& p : ps) {
      pairs += p.multiplicative + "," + p.additive + "," + format_double(p.mult.mean) + "," +
               format_double(p.add.mean) + "," + format_double(p.diff) + "," +
               format_double(p.se) + "," + p.verdict + "\n";
    }
    report::write_text(std::filesystem::path(out_dir) / "ablation_pairs.csv", pairs);
    out << table << "\n" << pairs;
    out << "ordering " << (bench::ablation_passes(ps) ? "holds" : "violated") << "\n";
  } else {
    out << report::overall_table_csv(report);
  }
  err << "wrote " << out_dir << " (" << report.cells.size() << " cells, " << failed
      << " failed)\n";
  return 0;
}

int run_parity(const DataOpts& d, const RunOpts& r, std::size_t reps, const std::string& out_path,
               std::ostream& out, std::ostream& err) {
  SuiteConfig s = base_suite(d, r);
  s.datasets = {dataset_id(d.dataset, d)};
  s.methods = {"lossval"};
  s.rates = {0.0};
  s.repetitions = reps;
  s.curves = false;
  s.validate();
  log_run(err, "parity", s);
  std::vector<bench::ParityRecord> recs(reps);
  parallel_for(reps, s.jobs,
               [&](std::size_t i) { recs[i] = bench::parity_cell(s, s.datasets[0], i); });
  std::string text = "repetition,plain,lossval,delta\n";
  std::vector<double> deltas;
  for (const auto& p : recs) {
    deltas.push_back(p.lossval - p.plain);
    text += std::to_string(p.repetition) + "," + format_double(p.plain) + "," +
            format_double(p.lossval) + "," + format_double(deltas.back()) + "\n";
  }
  const auto st = bench::summarize(deltas);
  if (!out_path.empty()) report::write_text(out_path, text);
  out << text << "mean_delta=" << format_double(st.mean) << " se=" << format_double(st.se)
      << "\n";
  return 0;
}

int run_report(const std::string& in, const std::string& out_dir, std::ostream& out,
               std::ostream& err) {
  const auto report = report::load_report(in);
  err << "lossval " << kVersion << " report version=" << report.version
      << " seed=" << report.suite.seed << "\n";
  report::write_outputs(report, out_dir);
  out << report::f1_table_csv(report);
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Data valuation with instance-weighted loss and optimal transport", "lossval"};
  app.set_version_flag("--version", kVersion);
  app.set_config("--config", "", "key=value config file; [subcommand] sections, flags override");
  app.config_formatter(std::make_shared<CLI::ConfigINI>());
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  DataOpts data;
  RunOpts run;
  std::string method, noise = "none", out_path, in_path;
  double rate = 20.0;
  std::vector<std::string> datasets{"blobs"}, methods{"lossval"}, kinds{"label"};
  std::vector<double> rates{5, 10, 15, 20};
  std::size_t reps = 15;
  bool no_curves = false;
  double curve_rate = 20.0;

  auto* value = app.add_subcommand("value", "score the training split with one method");
  value->add_option("--method", method, "variant name, loo, knn_shapley, random or oracle")
      ->required();
  value->add_option("--noise", noise)
      ->check(CLI::IsMember({"none", "label", "feature", "mixed"}))
      ->capture_default_str();
  value->add_option("--rate", rate, "noise rate in percent")->capture_default_str();
  value->add_option("--out", out_path, "score file, - for stdout")->required();
  add_data_opts(value, data, true);
  add_run_opts(value, run);

  auto* benchmark = app.add_subcommand("benchmark", "run the noisy-detection suite");
  benchmark->add_option("--datasets", datasets)->delimiter(',')->capture_default_str();
  benchmark->add_option("--methods", methods)->delimiter(',')->capture_default_str();
  benchmark->add_option("--kinds", kinds)
      ->delimiter(',')
      ->check(CLI::IsMember({"label", "feature", "mixed"}))
      ->capture_default_str();

  auto* ablate = app.add_subcommand("ablate", "compare the seven objective variants");
  for (auto* cmd : {benchmark, ablate}) {
    cmd->add_option("--rates", rates, "noise rates in percent")->delimiter(',')->capture_default_str();
    cmd->add_option("--reps", reps)->capture_default_str();
    cmd->add_option("--out", out_path, "output directory")->required();
    cmd->add_flag("--no-curves", no_curves, "skip point removal/addition");
    cmd->add_option("--curve-rate", curve_rate, "rate (percent) for removal/addition curves")
        ->capture_default_str();
    add_data_opts(cmd, data, false);
    add_run_opts(cmd, run);
    add_jobs_opt(cmd, run);
  }
  ablate->add_option("--dataset", data.dataset)->capture_default_str();

  auto* parity = app.add_subcommand("parity", "plain vs LossVal test performance");
  parity->add_option("--reps", reps)->capture_default_str();
  parity->add_option("--out", out_path, "per-repetition CSV");
  add_data_opts(parity, data, true);
  add_run_opts(parity, run);
  add_jobs_opt(parity, run);

  auto* rep = app.add_subcommand("report", "render tables and plot data from a report");
  rep->add_option("--in", in_path, "report.json")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", out_path, "output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    // Help and version requests exit 0; everything else is a usage error.
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  try {
    if (value->parsed()) return run_value(data, run, method, noise, rate, out_path, out, err);
    if (benchmark->parsed() || ablate->parsed()) {
      SuiteConfig s = base_suite(data, run);
      s.rates = percent_to_rates(rates);
      s.repetitions = reps;
      s.curves = !no_curves;
      s.curve_rate = percent_to_rates({curve_rate}).front();
      if (benchmark->parsed()) {
        s.datasets.clear();
        for (const auto& ds : datasets) s.datasets.push_back(dataset_id(ds, data));
        s.methods = methods;
        s.kinds.clear();
        for (const auto& k : kinds) s.kinds.push_back(bench::parse_noise_kind(k));
        return run_suite("benchmark", s, out_path, out, err);
      }
      s.datasets = {dataset_id(data.dataset, data)};
      s.methods.clear();
      for (Variant v : all_variants()) s.methods.emplace_back(to_string(v));
      s.kinds = {NoiseKind::label};
      return run_suite("ablate", s, out_path, out, err);
    }
    if (parity->parsed()) return run_parity(data, run, reps, out_path, out, err);
    return run_report(in_path, out_path, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lossval
