#pragma once

#include <filesystem>
#include <string>

#include "lossval/bench.hpp"

namespace lossval::report {

std::string to_json(const bench::ExperimentReport& report);
bench::ExperimentReport from_json(const std::string& text);

void save_report(const bench::ExperimentReport& report, const std::filesystem::path& path);
bench::ExperimentReport load_report(const std::filesystem::path& path);

/// dataset,method,kind, then one mean and one SE column per rate, then the
/// average over rates.
std::string f1_table_csv(const bench::ExperimentReport& report);
/// One row per (method, kind), averaged over rates and datasets.
std::string overall_table_csv(const bench::ExperimentReport& report);
/// Removal/addition curve means per (dataset, method, kind, rate).
std::string curve_table_csv(const bench::ExperimentReport& report);

/// Long-format plot data: dataset,method,kind,rate,x,y.
std::string detection_plot_csv(const bench::ExperimentReport& report);
/// Adds y_normalized (empty when the dataset is not normalized).
std::string removal_plot_csv(const bench::ExperimentReport& report);
std::string addition_plot_csv(const bench::ExperimentReport& report);

/// Writes report.json and every table and plot CSV into `dir`.
void write_outputs(const bench::ExperimentReport& report, const std::filesystem::path& dir);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace lossval::report
