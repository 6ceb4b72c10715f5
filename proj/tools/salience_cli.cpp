// Command-line frontend: dataset synthesis, training sweeps, passive-fooling
// runs, evaluation reports and CAM-grid rendering.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "salience/checkpoint.hpp"
#include "salience/config.hpp"
#include "salience/dataset.hpp"
#include "salience/eval.hpp"
#include "salience/render.hpp"
#include "salience/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace salience;

namespace {

json section(const json& config, const std::string& name) {
    if (!config.contains(name))
        throw UsageError("config is missing the '" + name + "' section");
    return config.at(name);
}

SyntheticSpec synth_spec_from_json(const json& j) {
    SyntheticSpec spec;
    spec.image_size = j.value("image_size", spec.image_size);
    spec.patch_size = j.value("patch_size", spec.patch_size);
    spec.texture_period = j.value("texture_period", spec.texture_period);
    spec.texture_amplitude = j.value("texture_amplitude", spec.texture_amplitude);
    spec.noise_std = j.value("noise_std", spec.noise_std);
    spec.distractor_count = j.value("distractor_count", spec.distractor_count);
    spec.shift_mode = shift_mode_from_string(j.value("shift_mode", "none"));
    return spec;
}

int cmd_synth(const json& config, const std::string& out_dir) {
    json s = section(config, "synth");
    const std::string root = out_dir.empty() ? s.value("root", "") : out_dir;
    if (root.empty()) throw UsageError("synth-data needs --out or synth.root");
    SyntheticSpec spec = synth_spec_from_json(s);
    const int count = s.value("count_per_class", 32);
    const uint64_t seed = s.value("seed", 1);
    auto samples = generate_synthetic(spec, count, seed, root);
    std::cout << "wrote " << samples.size() << " samples to " << root << "\n";
    return 0;
}

int cmd_train(const json& config, const std::string& out_dir, bool force_fooling) {
    TrainConfig tc = TrainConfig::from_json(section(config, "train"));
    if (force_fooling) tc.fooling = true;
    if (!out_dir.empty()) tc.output_dir = out_dir;
    if (tc.dataset_root.empty()) throw UsageError("train.dataset_root is required");
    if (tc.output_dir.empty()) throw UsageError("train needs --out or train.output_dir");
    tc.validate();

    auto dataset = load_dataset(tc.dataset_root);
    auto artifacts = train_sweep(tc, dataset);

    fs::create_directories(tc.output_dir);
    json run = {{"config", tc.to_json()},
                {"fingerprint", tc.fingerprint()},
                {"variant", to_string(tc.weights.variant)},
                {"seeds", tc.seeds}};
    std::ofstream(fs::path(tc.output_dir) / "run.json") << run.dump(2) << '\n';
    for (const auto& a : artifacts)
        std::cout << "seed " << a.seed << ": final epoch loss "
                  << a.per_epoch_train_loss.back() << " -> " << a.final_checkpoint.string()
                  << "\n";
    return 0;
}

int cmd_eval(const json& config, const std::string& out_dir) {
    json e = section(config, "eval");
    const std::string runs_dir = e.value("runs_dir", "");
    const std::string dataset_root = e.value("dataset_root", "");
    if (runs_dir.empty() || dataset_root.empty())
        throw UsageError("eval.runs_dir and eval.dataset_root are required");
    const fs::path out = out_dir.empty() ? fs::path(runs_dir) : fs::path(out_dir);
    fs::create_directories(out);

    auto dataset = load_dataset(dataset_root);
    std::vector<RunResult> results;
    std::vector<fs::path> seed_dirs;
    for (const auto& entry : fs::directory_iterator(runs_dir))
        if (entry.is_directory() && entry.path().filename().string().starts_with("seed_"))
            seed_dirs.push_back(entry.path());
    std::sort(seed_dirs.begin(), seed_dirs.end());
    if (seed_dirs.empty()) throw ValidationError("eval: no seed_* directories in " + runs_dir);

    json summary = json::array();
    std::vector<double> per_seed_auroc;
    for (const auto& dir : seed_dirs) {
        RunResult r = evaluate_checkpoint(dir / "checkpoint.bin", dataset);
        write_scores_csv(out / (dir.filename().string() + "_scores.csv"), r);
        const double a = auroc(r.scores, r.labels);
        per_seed_auroc.push_back(a);
        summary.push_back({{"seed", r.seed}, {"auroc", a}});
        results.push_back(std::move(r));
    }
    const AggregateCell cell = aggregate(per_seed_auroc);
    json out_json = {{"per_seed", summary},
                     {"overall", {{"mean", cell.mean}, {"std", cell.std}, {"n_seeds", cell.n_seeds},
                                  {"cell", format_cell(cell)}}}};
    std::ofstream(out / "eval_summary.json") << out_json.dump(2) << '\n';
    std::cout << "overall AUROC " << format_cell(cell) << " over " << cell.n_seeds << " seeds\n";
    return 0;
}

int cmd_report(const json& config, const std::string& out_dir) {
    json r = section(config, "report");
    if (!r.contains("methods") || !r.at("methods").is_array() || r.at("methods").empty())
        throw UsageError("report.methods must be a nonempty array of {name, eval_dir}");
    const fs::path out = out_dir.empty() ? fs::path(r.value("out", ".")) : fs::path(out_dir);
    fs::create_directories(out);

    std::ostringstream csv, txt;
    csv << "subset,method,auroc_mean,auroc_std,n_seeds,cell\n";
    txt << "Subset          Method               AUROC\n";
    txt << "------          ------               -----\n";
    for (const auto& m : r.at("methods")) {
        const std::string name = m.at("name").get<std::string>();
        const fs::path eval_dir = m.at("eval_dir").get<std::string>();
        std::vector<RunResult> results;
        std::vector<fs::path> score_files;
        for (const auto& entry : fs::directory_iterator(eval_dir))
            if (entry.path().filename().string().ends_with("_scores.csv"))
                score_files.push_back(entry.path());
        std::sort(score_files.begin(), score_files.end());
        if (score_files.empty())
            throw ValidationError("report: no *_scores.csv under " + eval_dir.string());
        for (size_t i = 0; i < score_files.size(); ++i)
            results.push_back(read_scores_csv(score_files[i], static_cast<int>(i)));
        for (const auto& row : subset_report(results)) {
            csv << row.subset << ',' << name << ',' << row.cell.mean << ',' << row.cell.std << ','
                << row.cell.n_seeds << ',' << format_cell(row.cell) << '\n';
            char line[160];
            std::snprintf(line, sizeof(line), "%-15s %-20s %s\n", row.subset.c_str(),
                          name.c_str(), format_cell(row.cell).c_str());
            txt << line;
        }
    }
    std::ofstream(out / "report.csv") << csv.str();
    std::ofstream(out / "report.txt") << txt.str();
    std::cout << txt.str();
    return 0;
}

int cmd_render(const json& config, const std::string& out_dir) {
    json r = section(config, "render");
    const std::string ckpt = r.value("checkpoint", "");
    const std::string dataset_root = r.value("dataset_root", "");
    if (ckpt.empty() || dataset_root.empty())
        throw UsageError("render.checkpoint and render.dataset_root are required");
    std::string out_path = r.value("out_path", "cam_grid.png");
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        out_path = (fs::path(out_dir) / fs::path(out_path).filename()).string();
    }

    auto model = load_checkpoint(ckpt);
    auto dataset = load_dataset(dataset_root);
    std::vector<LabeledSample> picked;
    if (r.contains("sample_ids")) {
        for (const auto& idj : r.at("sample_ids")) {
            const std::string id = idj.get<std::string>();
            auto it = std::find_if(dataset.begin(), dataset.end(),
                                   [&](const LabeledSample& s) { return s.sample_id == id; });
            if (it == dataset.end())
                throw ValidationError("render: unknown sample_id '" + id + "'");
            picked.push_back(*it);
        }
    } else {
        const int count = r.value("count", 4);
        for (int i = 0; i < count && i < static_cast<int>(dataset.size()); ++i)
            picked.push_back(dataset[static_cast<size_t>(i)]);
    }
    render_cam_grid_to_file(*model, picked, out_path);
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Contrastive saliency-guided training for binary image classifiers"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "JSON config file")->required();
    app.add_option("--set", overrides, "override config keys, key.path=value");
    app.add_option("--out", out_dir, "output directory");

    app.fallthrough();
    auto* synth = app.add_subcommand("synth-data", "generate a synthetic dataset");
    auto* train = app.add_subcommand("train", "run a multi-seed training sweep");
    auto* fool = app.add_subcommand("fool", "training sweep with passive fooling forced on");
    auto* eval_cmd = app.add_subcommand("eval", "score checkpoints on a test set");
    auto* report = app.add_subcommand("report", "aggregate evaluations into a table");
    auto* render = app.add_subcommand("render", "render a CAM grid image");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        json config = load_config_file(config_path);
        // Fill sections with schema defaults so --set can target any known
        // key, not just the ones the file happens to spell out.
        if (config.contains("train"))
            config["train"] = TrainConfig::from_json(config["train"]).to_json();
        if (config.contains("synth")) {
            json defaults = {{"root", ""}, {"count_per_class", 32}, {"seed", 1}};
            SyntheticSpec spec = synth_spec_from_json(config["synth"]);
            defaults["image_size"] = spec.image_size;
            defaults["patch_size"] = spec.patch_size;
            defaults["texture_period"] = spec.texture_period;
            defaults["texture_amplitude"] = spec.texture_amplitude;
            defaults["noise_std"] = spec.noise_std;
            defaults["distractor_count"] = spec.distractor_count;
            defaults["shift_mode"] = to_string(spec.shift_mode);
            defaults.update(config["synth"]);
            config["synth"] = defaults;
        }
        apply_overrides(config, overrides);
        if (synth->parsed()) return cmd_synth(config, out_dir);
        if (train->parsed()) return cmd_train(config, out_dir, false);
        if (fool->parsed()) return cmd_train(config, out_dir, true);
        if (eval_cmd->parsed()) return cmd_eval(config, out_dir);
        if (report->parsed()) return cmd_report(config, out_dir);
        if (render->parsed()) return cmd_render(config, out_dir);
        throw UsageError("no command given");
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
