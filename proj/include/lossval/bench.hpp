#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lossval/baselines.hpp"
#include "lossval/dataset.hpp"
#include "lossval/lossval.hpp"

namespace lossval::bench {

enum class NoiseKind { label, feature, mixed };

std::string_view to_string(NoiseKind k);
NoiseKind parse_noise_kind(std::string_view name);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::label;
  double rate = 0.2;
  std::uint64_t seed = 0;
};

struct NoisyDataset {
  Dataset data;
  std::vector<std::size_t> corrupted;  // ascending
  std::vector<std::size_t> label_rows;
  std::vector<std::size_t> feature_rows;
  std::vector<std::string> warnings;
};

/// Corrupts round(rate * N) rows. Label noise moves a class label to a
/// uniformly drawn different class, or swaps regression targets between
/// selected pairs. Feature noise adds N(0, 1) to every feature of a row.
/// Mixed noise splits the selection in half, disjointly.
NoisyDataset inject_noise(const Dataset& dataset, const NoiseSpec& spec);

/// Indices by ascending score, ties broken by index.
std::vector<std::size_t> ascending_order(std::span<const double> scores);

struct DetectionReport {
  std::vector<double> fraction_inspected;  // 0, 1/N, ..., 1
  std::vector<double> fraction_found;
  double f1 = 0.0;          // bottom-|corrupted| set vs corrupted set
  double curve_mean = 0.0;  // mean of fraction_found
};

DetectionReport detection_curve(std::span<const double> scores,
                                std::span<const std::size_t> corrupted);

struct CurveReport {
  std::vector<double> x;  // fraction removed / added
  std::vector<double> y;  // accuracy or negative MSE on the test split
  double mean = 0.0;
  bool normalized = false;
  std::vector<std::size_t> flagged_steps;  // degenerate reduced training sets
};

/// Retrain after removing the top-valued 0%, 5%, ..., 50% of points.
CurveReport point_removal(const Dataset& train, const Dataset& test, std::span<const double> scores,
                          const baselines::EvaluatorSpec& evaluator);

/// Retrain on the lowest-valued 5%, 10%, ..., 50% of points.
CurveReport point_addition(const Dataset& train, const Dataset& test,
                           std::span<const double> scores,
                           const baselines::EvaluatorSpec& evaluator);

struct SuiteConfig {
  std::vector<std::string> datasets{"blobs"};
  /// Variant names, "loo", "knn_shapley", "random" or "oracle"; an optional
  /// ":<epochs>" suffix sets the LossVal epoch budget for that entry.
  std::vector<std::string> methods{"lossval"};
  std::vector<NoiseKind> kinds{NoiseKind::label};
  std::vector<double> rates{0.05, 0.10, 0.15, 0.20};
  std::size_t repetitions = 15;
  std::uint64_t seed = 0;
  std::size_t epochs = 30;
  bool curves = true;
  double curve_rate = 0.20;
  std::size_t knn_k = 100;
  std::size_t jobs = 1;  // not part of the report identity

  std::size_t n_train = 1000;
  std::size_t n_val = 100;
  std::size_t n_test = 3000;
  std::size_t blobs_dim = 8;
  std::size_t blobs_classes = 3;
  double blobs_separation = 3.0;
  double friedman_noise = 1.0;
  std::string csv_label = "label";

  void validate() const;
  friend bool operator==(const SuiteConfig&, const SuiteConfig&) = default;
};

struct CellKey {
  std::string dataset;
  std::string method;
  NoiseKind kind = NoiseKind::label;
  double rate = 0.0;
  std::size_t repetition = 0;
  friend bool operator==(const CellKey&, const CellKey&) = default;
};

struct CellRecord {
  CellKey key;
  bool ok = true;
  std::string error;
  double f1 = 0.0;
  double detection_mean = 0.0;
  std::vector<double> detection_curve;  // fraction found after inspecting 0%, 1%, ..., 100%
  std::vector<double> removal;          // empty unless curves were run for this cell
  std::vector<double> addition;
  friend bool operator==(const CellRecord&, const CellRecord&) = default;
};

struct Stat {
  double mean = 0.0;
  double se = 0.0;
  friend bool operator==(const Stat&, const Stat&) = default;
};

/// Mean and standard error (sample SD / sqrt(n); zero for n < 2).
Stat summarize(std::span<const double> values);

struct AggregateRow {
  std::string dataset;
  std::string method;
  NoiseKind kind = NoiseKind::label;
  double rate = 0.0;
  std::size_t n = 0;       // successful cells
  std::size_t failed = 0;  // failed cells
  Stat f1;
  Stat detection_mean;
  Stat removal_mean;
  Stat addition_mean;
  std::vector<double> detection_curve;
  std::vector<double> removal_curve;
  std::vector<double> addition_curve;
  /// Regression curves rescaled to [0, 1] over all rows of the dataset.
  bool normalized = false;
  std::vector<double> removal_curve_normalized;
  std::vector<double> addition_curve_normalized;
  friend bool operator==(const AggregateRow&, const AggregateRow&) = default;
};

/// Averages over every rate and dataset, per method and noise kind.
struct OverallRow {
  std::string method;
  NoiseKind kind = NoiseKind::label;
  std::size_t n = 0;
  Stat f1;
  Stat detection_mean;
  friend bool operator==(const OverallRow&, const OverallRow&) = default;
};

inline constexpr int kReportVersion = 1;

struct ExperimentReport {
  int version = kReportVersion;
  SuiteConfig suite;
  std::vector<CellRecord> cells;
  std::vector<AggregateRow> aggregates;
  std::vector<OverallRow> overall;
  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

/// Grid fractions used by the removal/addition curves.
std::vector<double> removal_grid();
std::vector<double> addition_grid();

/// Canonical order: dataset, method, noise kind, rate, repetition.
std::vector<CellKey> enumerate_cells(const SuiteConfig& suite);

struct CellData {
  NoisyDataset train;
  Dataset val;
  Dataset test;
};

/// Data for one cell; independent of the method so methods are paired.
CellData make_cell_data(const SuiteConfig& suite, const CellKey& key);

/// Scores the (noisy) training split with one method.
ValuationResult run_method(const SuiteConfig& suite, const CellKey& key, const CellData& data);

/// Never throws; failures are recorded in the cell.
CellRecord run_cell(const SuiteConfig& suite, const CellKey& key);

ExperimentReport aggregate(const SuiteConfig& suite, std::vector<CellRecord> cells);

/// Runs every cell (on suite.jobs threads) and aggregates. `schedule`, if
/// given, is a permutation of the cell indices fixing execution order.
ExperimentReport run_benchmark(const SuiteConfig& suite,
                               std::span<const std::size_t> schedule = {});

struct ParityRecord {
  std::size_t repetition = 0;
  double plain = 0.0;
  double lossval = 0.0;
};

/// Plain vs LossVal training on clean data for one repetition; test
/// accuracy or R^2.
ParityRecord parity_cell(const SuiteConfig& suite, const std::string& dataset,
                         std::size_t repetition);

struct AblationRow {
  std::string method;
  std::size_t n = 0;
  Stat f1;
};

/// F1 per method, pooled over datasets, kinds and rates, in suite order.
std::vector<AblationRow> ablation_rows(const ExperimentReport& report);

struct AblationPair {
  std::string multiplicative;
  std::string additive;
  Stat mult;
  Stat add;
  double diff = 0.0;  // mult - add
  double se = 0.0;    // sqrt(se_mult^2 + se_add^2)
  /// "ok" (diff >= 0), "tie" (within one SE), "reversal" (beyond one SE).
  std::string verdict;
};

/// L*OT vs L+OT and L*OT^2 vs L+OT^2; methods missing from the report are skipped.
std::vector<AblationPair> ablation_pairs(const ExperimentReport& report);

/// No reversal, and at most one tie.
bool ablation_passes(std::span<const AblationPair> pairs);

}  // namespace lossval::bench
