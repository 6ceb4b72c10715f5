#include "salience/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "salience/checkpoint.hpp"
#include "salience/train.hpp"

namespace salience {

double auroc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw ValidationError("auroc: score/label length mismatch");
    const size_t n = scores.size();
    size_t n_pos = 0;
    for (int l : labels) {
        if (l != 0 && l != 1) throw ValidationError("auroc: labels must be 0 or 1");
        n_pos += static_cast<size_t>(l);
    }
    const size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw ValidationError("auroc: both classes must be present");

    // Rank-sum with midranks for ties.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (size_t k = i; k <= j; ++k)
            if (labels[order[k]] == 1) rank_sum_pos += midrank;
        i = j + 1;
    }
    const double u = rank_sum_pos - 0.5 * static_cast<double>(n_pos) * (n_pos + 1);
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

RunResult evaluate_checkpoint(const Model& model, const std::vector<LabeledSample>& dataset) {
    RunResult r;
    for (const auto& s : dataset) {
        ModelOutput out = run_model(model, prepare_input(model, s.image));
        r.sample_ids.push_back(s.sample_id);
        r.scores.push_back(out.probabilities[1]);
        r.labels.push_back(s.label);
        r.subsets.push_back(s.subset);
    }
    return r;
}

RunResult evaluate_checkpoint(const std::filesystem::path& checkpoint_path,
                              const std::vector<LabeledSample>& dataset) {
    nlohmann::json manifest;
    auto model = load_checkpoint(checkpoint_path, &manifest);
    if (!dataset.empty() && model->input_channels() != dataset.front().image.dim(0) &&
        !(model->input_channels() == 3 && dataset.front().image.dim(0) == 1))
        throw ValidationError("evaluate_checkpoint: checkpoint arch does not accept this data");
    RunResult r = evaluate_checkpoint(*model, dataset);
    r.seed = manifest.value("seed", 0);
    return r;
}

AggregateCell aggregate(std::span<const double> per_seed_values) {
    if (per_seed_values.empty()) throw ValidationError("aggregate: empty value list");
    AggregateCell c;
    c.n_seeds = static_cast<int>(per_seed_values.size());
    for (double v : per_seed_values) c.mean += v;
    c.mean /= c.n_seeds;
    double ss = 0.0;
    for (double v : per_seed_values) ss += (v - c.mean) * (v - c.mean);
    c.std = std::sqrt(ss / c.n_seeds);
    return c;
}

std::string format_cell(const AggregateCell& cell) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f±%.3f", cell.mean, cell.std);
    return buf;
}

namespace {
std::vector<SubsetRow> subset_report_impl(std::span<const RunResult> results,
                                          const std::vector<std::string>* filter) {
    if (results.empty()) throw ValidationError("subset_report: no results");
    std::vector<std::string> subsets;
    for (const auto& r : results)
        for (const auto& s : r.subsets)
            if (std::find(subsets.begin(), subsets.end(), s) == subsets.end())
                subsets.push_back(s);
    std::sort(subsets.begin(), subsets.end());
    if (filter) {
        for (const auto& f : *filter)
            if (std::find(subsets.begin(), subsets.end(), f) == subsets.end())
                throw ValidationError("subset_report: unknown subset tag '" + f + "'");
        subsets = *filter;
    }

    std::vector<SubsetRow> rows;
    for (const auto& subset : subsets) {
        std::vector<double> per_seed;
        for (const auto& r : results) {
            std::vector<double> sc;
            std::vector<int> lb;
            for (size_t i = 0; i < r.scores.size(); ++i)
                if (r.subsets[i] == subset) {
                    sc.push_back(r.scores[i]);
                    lb.push_back(r.labels[i]);
                }
            per_seed.push_back(auroc(sc, lb));
        }
        rows.push_back({subset, aggregate(per_seed)});
    }
    // Pooled overall row: all samples per seed, not a mean of subset cells.
    std::vector<double> per_seed;
    for (const auto& r : results) per_seed.push_back(auroc(r.scores, r.labels));
    rows.push_back({"overall", aggregate(per_seed)});
    return rows;
}
} // namespace

std::vector<SubsetRow> subset_report(std::span<const RunResult> results) {
    return subset_report_impl(results, nullptr);
}

std::vector<SubsetRow> subset_report(std::span<const RunResult> results,
                                     std::span<const std::string> subset_filter) {
    std::vector<std::string> f(subset_filter.begin(), subset_filter.end());
    return subset_report_impl(results, &f);
}

double cam_alignment(const SalienceMap& cam, const SalienceMap& reference) {
    if (!cam.same_shape(reference)) throw ValidationError("cam_alignment: dimension mismatch");
    const size_t n = cam.values.size();
    double ma = 0.0, mb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        ma += cam.values[i];
        mb += reference.values[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double da = cam.values[i] - ma;
        const double db = reference.values[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) return 0.0;
    return sab / std::sqrt(saa * sbb);
}

void write_scores_csv(const std::filesystem::path& path, const RunResult& result) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "sample_id,score,label,subset\n";
    out.precision(17);
    for (size_t i = 0; i < result.scores.size(); ++i)
        out << result.sample_ids[i] << ',' << result.scores[i] << ',' << result.labels[i] << ','
            << result.subsets[i] << '\n';
}

RunResult read_scores_csv(const std::filesystem::path& path, int seed) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    RunResult r;
    r.seed = seed;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string id, score, label, subset;
        std::getline(row, id, ',');
        std::getline(row, score, ',');
        std::getline(row, label, ',');
        std::getline(row, subset, ',');
        r.sample_ids.push_back(id);
        r.scores.push_back(std::stod(score));
        r.labels.push_back(std::stoi(label));
        r.subsets.push_back(subset);
    }
    return r;
}

} // namespace salience
