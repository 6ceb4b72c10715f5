#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "salience/dataset.hpp"
#include "salience/models.hpp"
#include "salience/salience_map.hpp"

namespace salience {

struct RunResult {
    int seed = 0;
    std::vector<std::string> sample_ids;
    std::vector<double> scores; // class-1 probability
    std::vector<int> labels;
    std::vector<std::string> subsets;
};

struct AggregateCell {
    double mean = 0.0;
    double std = 0.0; // population standard deviation
    int n_seeds = 0;
};

// Mann-Whitney AUROC, ties counted one half. Requires both classes present.
double auroc(std::span<const double> scores, std::span<const int> labels);

RunResult evaluate_checkpoint(const Model& model, const std::vector<LabeledSample>& dataset);
RunResult evaluate_checkpoint(const std::filesystem::path& checkpoint_path,
                              const std::vector<LabeledSample>& dataset);

AggregateCell aggregate(std::span<const double> per_seed_values);
// Table-cell rendering, e.g. "0.866±0.005".
std::string format_cell(const AggregateCell& cell);

struct SubsetRow {
    std::string subset; // "overall" pools every sample
    AggregateCell cell;
};
// Per-subset AUROC aggregated over seeds, plus a pooled overall row (last).
std::vector<SubsetRow> subset_report(std::span<const RunResult> results);
// Same, restricted to the named subsets; unknown names are an error.
std::vector<SubsetRow> subset_report(std::span<const RunResult> results,
                                     std::span<const std::string> subset_filter);

// Pearson correlation over cells; 0 when either map is constant.
double cam_alignment(const SalienceMap& cam, const SalienceMap& reference);

void write_scores_csv(const std::filesystem::path& path, const RunResult& result);
RunResult read_scores_csv(const std::filesystem::path& path, int seed);

} // namespace salience
