#include "lossval/data_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "lossval/errors.hpp"
#include "lossval/format.hpp"

namespace lossval::data {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, std::string_view label_column, TaskKind task) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": missing header row");
  const auto header = split_fields(line);
  const auto it = std::find(header.begin(), header.end(), label_column);
  if (it == header.end()) {
    throw ConfigError(path.string() + ": no column named '" + std::string(label_column) + "'");
  }
  const std::size_t label_idx = static_cast<std::size_t>(it - header.begin());
  const std::size_t width = header.size();

  std::vector<double> features;
  std::vector<double> raw_labels;
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != width) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + " has " +
                       std::to_string(fields.size()) + " fields, header has " +
                       std::to_string(width));
    }
    for (std::size_t c = 0; c < width; ++c) {
      const auto cell = fields[c];
      const std::string where = path.string() + ": line " + std::to_string(line_no) +
                                ", column " + std::to_string(c + 1) + " ('" +
                                std::string(header[c]) + "')";
      if (cell.empty()) throw ParseError(where + ": missing value");
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ParseError(where + ": non-numeric value '" + std::string(cell) + "'");
      }
      if (c == label_idx) {
        raw_labels.push_back(v);
      } else {
        features.push_back(v);
      }
    }
    ++row;
  }

  Dataset ds;
  ds.name = path.stem().string();
  ds.X = Matrix(row, width - 1, std::move(features));
  if (task == TaskKind::classification) {
    std::map<double, int> classes;
    for (std::size_t i = 0; i < raw_labels.size(); ++i) {
      if (raw_labels[i] != std::floor(raw_labels[i])) {
        throw ParseError(path.string() + ": row " + std::to_string(i + 1) +
                         ": classification label is not an integer");
      }
      classes.emplace(raw_labels[i], 0);
    }
    int next = 0;
    for (auto& [value, index] : classes) index = next++;
    ds.y.reserve(raw_labels.size());
    for (double v : raw_labels) ds.y.push_back(classes.at(v));
    ds.task = Task::classification(classes.size());
  } else {
    ds.y = std::move(raw_labels);
    ds.task = Task::regression();
  }
  ds.validate();
  return ds;
}

void save_csv(const Dataset& dataset, const std::filesystem::path& path,
              std::string_view label_column) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  for (std::size_t c = 0; c < dataset.dim(); ++c) out << 'x' << c << ',';
  out << label_column << '\n';
  for (std::size_t r = 0; r < dataset.size(); ++r) {
    for (double v : dataset.X.row(r)) out << format_double(v) << ',';
    out << format_double(dataset.y[r]) << '\n';
  }
}

Dataset synth_blobs(std::size_t n, std::size_t dim, std::size_t classes, double separation,
                    std::uint64_t seed) {
  if (classes < 2) throw ConfigError("synth_blobs: need at least two classes");
  if (classes > n) throw ConfigError("synth_blobs: more classes than samples");
  if (dim == 0) throw ConfigError("synth_blobs: zero dimension");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Matrix centers(classes, dim);
  if (classes <= dim) {
    for (std::size_t k = 0; k < classes; ++k) centers(k, k) = separation / std::sqrt(2.0);
  } else if (dim == 1) {
    for (std::size_t k = 0; k < classes; ++k) centers(k, 0) = separation * static_cast<double>(k);
  } else {
    // Regular polygon in the first two coordinates, adjacent vertices
    // `separation` apart.
    const double radius = separation / (2.0 * std::sin(M_PI / static_cast<double>(classes)));
    for (std::size_t k = 0; k < classes; ++k) {
      const double angle = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(classes);
      centers(k, 0) = radius * std::cos(angle);
      centers(k, 1) = radius * std::sin(angle);
    }
  }

  Dataset ds;
  ds.name = "blobs";
  ds.task = Task::classification(classes);
  ds.X = Matrix(n, dim);
  ds.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % classes;
    ds.y[i] = static_cast<double>(k);
    for (std::size_t c = 0; c < dim; ++c) ds.X(i, c) = centers(k, c) + normal(rng);
  }
  return ds;
}

double friedman1_target(std::span<const double> x) {
  return 10.0 * std::sin(M_PI * x[0] * x[1]) + 20.0 * (x[2] - 0.5) * (x[2] - 0.5) + 10.0 * x[3] +
         5.0 * x[4];
}

Dataset synth_friedman1(std::size_t n, double noise, std::uint64_t seed, std::size_t dim) {
  if (dim < 5) throw ConfigError("synth_friedman1: needs at least five features");
  if (n == 0) throw ConfigError("synth_friedman1: zero samples");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset ds;
  ds.name = "friedman1";
  ds.task = Task::regression();
  ds.X = Matrix(n, dim);
  ds.y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (double& v : ds.X.row(i)) v = unif(rng);
    ds.y[i] = friedman1_target(ds.X.row(i)) + noise * normal(rng);
  }
  return ds;
}

Splits split_standardize(const Dataset& dataset, const SplitSpec& spec) {
  const std::size_t need = spec.train + spec.val + spec.test;
  if (spec.train == 0 || spec.val == 0 || need > dataset.size()) {
    throw ConfigError("split " + std::to_string(spec.train) + "/" + std::to_string(spec.val) +
                      "/" + std::to_string(spec.test) + " infeasible for " +
                      std::to_string(dataset.size()) + " samples");
  }
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);

  const auto first = order.begin();
  const std::vector<std::size_t> train_idx(first, first + spec.train);
  const std::vector<std::size_t> val_idx(first + spec.train, first + spec.train + spec.val);
  const std::vector<std::size_t> test_idx(first + spec.train + spec.val, first + need);

  Splits s{dataset.subset(train_idx), dataset.subset(val_idx), dataset.subset(test_idx)};

  Standardization st;
  const std::size_t d = dataset.dim();
  const double n = static_cast<double>(spec.train);
  st.mean.assign(d, 0.0);
  st.stddev.assign(d, 0.0);
  for (std::size_t r = 0; r < spec.train; ++r) {
    for (std::size_t c = 0; c < d; ++c) st.mean[c] += s.train.X(r, c);
  }
  for (double& m : st.mean) m /= n;
  for (std::size_t r = 0; r < spec.train; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = s.train.X(r, c) - st.mean[c];
      st.stddev[c] += diff * diff;
    }
  }
  for (double& v : st.stddev) {
    v = std::sqrt(v / n);
    if (!(v > 0.0)) v = 1.0;
  }
  if (!dataset.task.is_classification()) {
    double m = 0.0;
    for (double v : s.train.y) m += v;
    m /= n;
    double var = 0.0;
    for (double v : s.train.y) var += (v - m) * (v - m);
    const double sd = std::sqrt(var / n);
    st.target_mean = m;
    st.target_std = sd > 0.0 ? sd : 1.0;
  }

  for (Dataset* part : {&s.train, &s.val, &s.test}) {
    for (std::size_t r = 0; r < part->size(); ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        part->X(r, c) = (part->X(r, c) - st.mean[c]) / st.stddev[c];
      }
    }
    if (!dataset.task.is_classification()) {
      for (double& v : part->y) v = (v - st.target_mean) / st.target_std;
    }
    part->standardization = st;
  }
  return s;
}

}  // namespace lossval::data
