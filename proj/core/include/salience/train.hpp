#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "salience/dataset.hpp"
#include "salience/losses.hpp"
#include "salience/models.hpp"
#include "salience/saliency_io.hpp"

namespace salience {

struct TrainConfig {
    LossWeights weights{};
    int epochs = 50;
    double learning_rate = 0.002;
    std::string optimizer = "sgd"; // plain SGD, no momentum or weight decay
    int batch_size = 32;
    std::vector<int> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    std::string model_arch = "tiny_cam_net";
    bool fooling = false;
    double fooling_band_fraction = kDefaultFoolingBandFraction;
    std::string dataset_root;
    std::string output_dir;
    // Only consulted for densenet121_pretrained.
    std::string pretrained_checkpoint;

    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
    // Stable FNV-1a hash of the canonical JSON form.
    std::string fingerprint() const;
};

struct RunArtifacts {
    std::filesystem::path final_checkpoint; // empty when output_dir was empty
    std::vector<double> per_epoch_train_loss;
    std::vector<double> per_step_loss; // one entry per SGD step
    int seed = 0;
    std::string config_fingerprint;
};

// Bare architecture factory; densenet starts zeroed (callers load weights).
std::unique_ptr<Model> make_model_arch(const std::string& arch, uint64_t seed, int in_channels);

// Spec-facing factory: densenet121_pretrained requires a readable checkpoint
// (explicit path or SALIENCE_DENSENET121_CHECKPOINT) and fails with fetch
// instructions otherwise.
std::unique_ptr<Model> build_model(const std::string& arch, uint64_t seed, int in_channels = 1,
                                   const std::string& pretrained_checkpoint = "");

// Called once per training sample with the salience map actually fed to the
// loss (null for cross-entropy-only); lets tests pin the fooling substitution.
using TrainObserver =
    std::function<void(int epoch, const std::string& sample_id, const SalienceMap* h_used)>;

RunArtifacts train_one(const TrainConfig& config, int seed,
                       const std::vector<LabeledSample>& dataset,
                       const TrainObserver& observer = nullptr);

// One run per seed; parallel workers capped by SALIENCE_NUM_WORKERS. A seed
// failure aborts with a report naming the seeds that completed.
std::vector<RunArtifacts> train_sweep(const TrainConfig& config,
                                      const std::vector<LabeledSample>& dataset);

// Resizes (bilinear) and channel-adapts an image to what the model expects.
Tensor prepare_input(const Model& model, const Tensor& image);

} // namespace salience
