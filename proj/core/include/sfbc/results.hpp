#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace sfbc {

/// One CSV line: task,basis,variant,n,seed,window,mapping,metric,mean,p05,p95,runtime_s
struct ResultRow {
    std::string task;
    std::string basis;
    std::string variant;
    int n = 0;
    std::uint64_t seed = 0;
    std::string window = "none";
    std::string mapping = "identity";
    std::string metric = "l2";
    double mean = 0.0;
    double p05 = 0.0;
    double p95 = 0.0;
    double runtime_s = 0.0;

    bool operator==(const ResultRow&) const = default;
};

struct ResultTable {
    std::vector<ResultRow> rows;
};

std::string results_header();
std::string format_result_row(const ResultRow& row);
void write_results_csv(const std::filesystem::path& path, const ResultTable& table);
ResultTable read_results_csv(const std::filesystem::path& path);

/// Linear interpolation between order statistics, q in [0, 1].
double percentile(std::vector<double> values, double q);

/// Log-scale chart of mean with p05-p95 bands against n, one series per (basis, variant) and metric.
void plot_results(const std::filesystem::path& path, const ResultTable& table, const std::string& title = "");

}  // namespace sfbc
