#include "salience/train.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "salience/checkpoint.hpp"
#include "salience/rng.hpp"

namespace salience {

namespace fs = std::filesystem;
using nlohmann::json;

void TrainConfig::validate() const {
    weights.validate();
    if (epochs < 1) throw ValidationError("train config: epochs must be >= 1");
    if (!(learning_rate > 0)) throw ValidationError("train config: learning rate must be > 0");
    if (optimizer != "sgd") throw ValidationError("train config: only 'sgd' is supported");
    if (batch_size < 1) throw ValidationError("train config: batch_size must be >= 1");
    if (seeds.empty()) throw ValidationError("train config: seeds must be nonempty");
    if (std::set<int>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw ValidationError("train config: seeds must be distinct");
    if (model_arch != "tiny_cam_net" && model_arch != "densenet121_pretrained")
        throw ValidationError("train config: unknown model_arch '" + model_arch + "'");
    if (fooling && (!has_salience_term(weights.variant) || weights.beta <= 0))
        throw ValidationError("train config: fooling requires a variant with a salience term");
    if (fooling && !(fooling_band_fraction > 0 && fooling_band_fraction < 0.5))
        throw ValidationError("train config: fooling_band_fraction must be in (0, 0.5)");
}

json TrainConfig::to_json() const {
    return json{{"variant", to_string(weights.variant)},
                {"weights", {{"alpha", weights.alpha}, {"beta", weights.beta}, {"gamma", weights.gamma}}},
                {"epochs", epochs},
                {"learning_rate", learning_rate},
                {"optimizer", optimizer},
                {"batch_size", batch_size},
                {"seeds", seeds},
                {"model_arch", model_arch},
                {"fooling", fooling},
                {"fooling_band_fraction", fooling_band_fraction},
                {"dataset_root", dataset_root},
                {"output_dir", output_dir},
                {"pretrained_checkpoint", pretrained_checkpoint}};
}

TrainConfig TrainConfig::from_json(const json& j) {
    TrainConfig c;
    const std::string variant = j.value("variant", "baseline");
    c.weights = LossWeights::defaults_for(loss_variant_from_string(variant));
    if (j.contains("weights")) {
        const auto& w = j.at("weights");
        c.weights.alpha = w.value("alpha", c.weights.alpha);
        c.weights.beta = w.value("beta", c.weights.beta);
        c.weights.gamma = w.value("gamma", c.weights.gamma);
    }
    c.epochs = j.value("epochs", c.epochs);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.optimizer = j.value("optimizer", c.optimizer);
    c.batch_size = j.value("batch_size", c.batch_size);
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<int>>();
    c.model_arch = j.value("model_arch", c.model_arch);
    c.fooling = j.value("fooling", c.fooling);
    c.fooling_band_fraction = j.value("fooling_band_fraction", c.fooling_band_fraction);
    c.dataset_root = j.value("dataset_root", c.dataset_root);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.pretrained_checkpoint = j.value("pretrained_checkpoint", c.pretrained_checkpoint);
    return c;
}

std::string TrainConfig::fingerprint() const {
    const std::string canon = to_json().dump();
    const uint64_t h = fnv1a64(canon.data(), canon.size());
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::unique_ptr<Model> make_model_arch(const std::string& arch, uint64_t seed, int in_channels) {
    if (arch == "tiny_cam_net") return std::make_unique<TinyCamNet>(in_channels, seed);
    if (arch == "densenet121_pretrained") return std::make_unique<DenseNet121>();
    throw ValidationError("unknown model arch '" + arch + "'");
}

std::unique_ptr<Model> build_model(const std::string& arch, uint64_t seed, int in_channels,
                                   const std::string& pretrained_checkpoint) {
    auto model = make_model_arch(arch, seed, in_channels);
    if (arch == "densenet121_pretrained") {
        std::string path = pretrained_checkpoint;
        if (path.empty()) {
            const char* env = std::getenv("SALIENCE_DENSENET121_CHECKPOINT");
            if (env) path = env;
        }
        if (path.empty() || !fs::exists(path))
            throw ValidationError(
                "densenet121_pretrained needs an ImageNet checkpoint. Export one with "
                "tools/export_densenet121.py (requires torchvision and network access), then "
                "set pretrained_checkpoint in the config or SALIENCE_DENSENET121_CHECKPOINT." +
                (path.empty() ? std::string() : " Not found: " + path));
        load_checkpoint_into(path, *model);
        // 2-class head replaces whatever the checkpoint carried.
        Rng rng(seed * 0x9e3779b97f4a7c15ull + 3);
        Tensor* hw = model->find_param("classifier.weight");
        const double std = std::sqrt(1.0 / hw->dim(1));
        for (auto& v : hw->data) v = std * rng.normal();
        std::fill(model->find_param("classifier.bias")->data.begin(),
                  model->find_param("classifier.bias")->data.end(), 0.0);
    }
    return model;
}

Tensor prepare_input(const Model& model, const Tensor& image) {
    if (image.rank() != 3) throw ValidationError("prepare_input: image must be C x H x W");
    Tensor img = image;
    const int want_c = model.input_channels();
    if (img.dim(0) != want_c) {
        if (img.dim(0) == 1 && want_c == 3) {
            Tensor rep({3, img.dim(1), img.dim(2)});
            for (int c = 0; c < 3; ++c)
                std::copy(img.data.begin(), img.data.end(),
                          rep.data.begin() + static_cast<size_t>(c) * img.size());
            img = std::move(rep);
        } else if (img.dim(0) == 3 && want_c == 1) {
            Tensor gray({1, img.dim(1), img.dim(2)});
            for (int64_t i = 0; i < gray.size(); ++i)
                gray.data[i] =
                    (img.data[i] + img.data[i + gray.size()] + img.data[i + 2 * gray.size()]) / 3.0;
            img = std::move(gray);
        } else {
            throw ValidationError("prepare_input: cannot adapt channel count");
        }
    }
    int want = model.expected_input_size();
    if (want == 0) {
        // tiny_cam_net pools twice; snap odd sizes to the nearest multiple of 4
        auto snap = [](int v) { return std::max(4, (v + 2) / 4 * 4); };
        const int wh = snap(img.dim(1)), ww = snap(img.dim(2));
        if (wh == img.dim(1) && ww == img.dim(2)) return img;
        Tensor out({img.dim(0), wh, ww});
        for (int c = 0; c < img.dim(0); ++c) {
            SalienceMap ch(img.dim(1), img.dim(2));
            std::copy_n(img.data.begin() + static_cast<size_t>(c) * img.dim(1) * img.dim(2),
                        ch.values.size(), ch.values.begin());
            SalienceMap r = resize_to_grid(ch, wh, ww);
            std::copy(r.values.begin(), r.values.end(),
                      out.data.begin() + static_cast<size_t>(c) * wh * ww);
        }
        return out;
    }
    if (img.dim(1) == want && img.dim(2) == want) return img;
    Tensor out({img.dim(0), want, want});
    for (int c = 0; c < img.dim(0); ++c) {
        SalienceMap ch(img.dim(1), img.dim(2));
        std::copy_n(img.data.begin() + static_cast<size_t>(c) * img.dim(1) * img.dim(2),
                    ch.values.size(), ch.values.begin());
        SalienceMap r = resize_to_grid(ch, want, want);
        std::copy(r.values.begin(), r.values.end(),
                  out.data.begin() + static_cast<size_t>(c) * want * want);
    }
    return out;
}

RunArtifacts train_one(const TrainConfig& config, int seed,
                       const std::vector<LabeledSample>& dataset, const TrainObserver& observer) {
    config.validate();
    if (dataset.empty()) throw ValidationError("train_one: empty dataset");
    const LossWeights& w = config.weights;
    const bool needs_h =
        has_salience_term(w.variant) && (w.beta > 0 || w.gamma > 0);

    auto model = build_model(config.model_arch, static_cast<uint64_t>(seed),
                             dataset.front().image.dim(0), config.pretrained_checkpoint);

    const size_t n = dataset.size();
    std::vector<Tensor> inputs;
    inputs.reserve(n);
    for (const auto& s : dataset) inputs.push_back(prepare_input(*model, s.image));

    // CAM grid size, from one throwaway forward.
    int cam_h, cam_w;
    {
        Tape probe;
        auto fwd = model->forward(probe, inputs.front(), false);
        cam_h = probe.value(fwd.features).dim(1);
        cam_w = probe.value(fwd.features).dim(2);
    }

    std::vector<SalienceMap> h_maps; // aligned with dataset when needs_h
    if (needs_h) {
        h_maps.reserve(n);
        for (size_t i = 0; i < n; ++i) {
            if (config.fooling) {
                SalienceMap edge = make_edge_map(dataset[i].image.dim(1), dataset[i].image.dim(2),
                                                 config.fooling_band_fraction);
                h_maps.push_back(resize_to_grid(edge, cam_h, cam_w));
            } else {
                if (!dataset[i].human_map)
                    throw ValidationError("train_one: variant '" + to_string(w.variant) +
                                          "' needs a salience map but sample " +
                                          dataset[i].sample_id + " has none");
                h_maps.push_back(resize_to_grid(*dataset[i].human_map, cam_h, cam_w));
            }
        }
    }

    RunArtifacts art;
    art.seed = seed;
    art.config_fingerprint = config.fingerprint();

    std::vector<Tensor> grad_acc;
    for (const auto& p : model->params()) grad_acc.emplace_back(p.value.shape);

    Rng order_rng(static_cast<uint64_t>(seed) * 0x7f4a7c159e3779b9ull + 101);
    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        order_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (size_t start = 0; start < n; start += static_cast<size_t>(config.batch_size)) {
            const size_t stop = std::min(n, start + static_cast<size_t>(config.batch_size));
            for (auto& g : grad_acc) std::fill(g.data.begin(), g.data.end(), 0.0);
            double step_loss = 0.0;
            for (size_t k = start; k < stop; ++k) {
                const size_t i = order[k];
                Tape tape;
                auto fwd = model->forward(tape, inputs[i], true);
                const SalienceMap* h = needs_h ? &h_maps[i] : nullptr;
                Tape::NodeId loss = build_sample_loss(tape, fwd, dataset[i].label, h, w);
                tape.backward(loss);
                step_loss += tape.scalar(loss);
                for (size_t j = 0; j < grad_acc.size(); ++j) {
                    const Tensor& g = tape.grad(fwd.param_nodes[j]);
                    for (int64_t e = 0; e < g.size(); ++e) grad_acc[j].data[e] += g.data[e];
                }
                if (observer) observer(epoch, dataset[i].sample_id, h);
            }
            const double inv_b = 1.0 / static_cast<double>(stop - start);
            auto& params = model->params();
            for (size_t j = 0; j < params.size(); ++j)
                for (int64_t e = 0; e < params[j].value.size(); ++e)
                    params[j].value.data[e] -= config.learning_rate * grad_acc[j].data[e] * inv_b;
            art.per_step_loss.push_back(step_loss * inv_b);
            epoch_loss += step_loss;
        }
        art.per_epoch_train_loss.push_back(epoch_loss / static_cast<double>(n));
    }

    if (!config.output_dir.empty()) {
        const fs::path dir = fs::path(config.output_dir) / ("seed_" + std::to_string(seed));
        fs::create_directories(dir);
        const fs::path ckpt = dir / "checkpoint.bin";
        json manifest = {{"arch", config.model_arch},
                         {"seed", seed},
                         {"variant", to_string(w.variant)},
                         {"fingerprint", art.config_fingerprint},
                         {"in_channels", dataset.front().image.dim(0)},
                         {"epochs", config.epochs}};
        save_checkpoint(ckpt, *model, manifest);
        art.final_checkpoint = ckpt;

        std::ofstream curve(dir / "loss_curve.csv");
        curve << "epoch,mean_loss\n";
        curve.precision(17);
        for (size_t e = 0; e < art.per_epoch_train_loss.size(); ++e)
            curve << e + 1 << ',' << art.per_epoch_train_loss[e] << '\n';
        std::ofstream steps(dir / "step_losses.csv");
        steps << "step,loss\n";
        steps.precision(17);
        for (size_t s = 0; s < art.per_step_loss.size(); ++s)
            steps << s + 1 << ',' << art.per_step_loss[s] << '\n';
    }
    return art;
}

std::vector<RunArtifacts> train_sweep(const TrainConfig& config,
                                      const std::vector<LabeledSample>& dataset) {
    config.validate();
    const size_t n_seeds = config.seeds.size();
    size_t workers = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SALIENCE_NUM_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) workers = static_cast<size_t>(v);
    }
    workers = std::min(workers, n_seeds);

    std::vector<RunArtifacts> results(n_seeds);
    std::vector<char> done(n_seeds, 0);
    std::vector<std::string> errors(n_seeds);
    std::atomic<size_t> next{0};

    auto work = [&] {
        for (;;) {
            const size_t i = next.fetch_add(1);
            if (i >= n_seeds) return;
            try {
                results[i] = train_one(config, config.seeds[i], dataset);
                done[i] = 1;
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();

    std::string failure;
    std::string completed;
    for (size_t i = 0; i < n_seeds; ++i) {
        if (done[i]) completed += (completed.empty() ? "" : ", ") + std::to_string(config.seeds[i]);
        else if (failure.empty() && !errors[i].empty())
            failure = "seed " + std::to_string(config.seeds[i]) + ": " + errors[i];
    }
    if (!failure.empty())
        throw std::runtime_error("train_sweep aborted (" + failure + "); completed seeds: " +
                                 (completed.empty() ? "none" : completed));
    return results;
}

} // namespace salience
