#include "salience/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nlohmann/json.hpp"
#include "salience/image_io.hpp"
#include "salience/rng.hpp"
#include "salience/saliency_io.hpp"

namespace salience {

namespace fs = std::filesystem;
using nlohmann::json;

ShiftMode shift_mode_from_string(const std::string& s) {
    if (s == "none") return ShiftMode::None;
    if (s == "relocate_patch") return ShiftMode::RelocatePatch;
    if (s == "new_texture") return ShiftMode::NewTexture;
    throw ValidationError("unknown shift mode: " + s);
}

std::string to_string(ShiftMode m) {
    switch (m) {
    case ShiftMode::None: return "none";
    case ShiftMode::RelocatePatch: return "relocate_patch";
    case ShiftMode::NewTexture: return "new_texture";
    }
    throw ValidationError("bad shift mode value");
}

void SyntheticSpec::validate() const {
    if (image_size <= 0 || patch_size <= 0) throw ValidationError("synthetic spec: bad sizes");
    if (patch_size + 4 > image_size)
        throw ValidationError("synthetic spec: patch exceeds image bounds");
    if (noise_std < 0) throw ValidationError("synthetic spec: negative noise std");
    if (texture_period < 1) throw ValidationError("synthetic spec: texture period must be >= 1");
    if (distractor_count < 0) throw ValidationError("synthetic spec: negative distractor count");
}

int SyntheticSpec::effective_period() const {
    return shift_mode == ShiftMode::NewTexture ? texture_period + 2 : texture_period;
}

namespace {

std::string mode_tag(ShiftMode m) {
    switch (m) {
    case ShiftMode::None: return "none";
    case ShiftMode::RelocatePatch: return "reloc";
    case ShiftMode::NewTexture: return "newtex";
    }
    return "?";
}

std::string subset_tag(ShiftMode m) {
    return m == ShiftMode::None ? "base" : to_string(m);
}

} // namespace

std::vector<LabeledSample> generate_synthetic(const SyntheticSpec& spec, int count_per_class,
                                              uint64_t seed, const fs::path& root) {
    spec.validate();
    if (count_per_class < 1) throw ValidationError("generate_synthetic: count must be >= 1");

    const int S = spec.image_size;
    const int P = spec.patch_size;
    const int period = spec.effective_period();
    // Patch top-left draws from the lower or upper coordinate half depending
    // on the shift mode, so relocate_patch provably moves the distribution.
    const int lo = 1, mid = (S - P) / 2, hi = S - P - 1;
    const bool relocate = spec.shift_mode == ShiftMode::RelocatePatch;
    const int pos_lo = relocate ? mid + 1 : lo;
    const int pos_hi = relocate ? hi : mid;
    if (pos_hi < pos_lo) throw ValidationError("generate_synthetic: image too small for shift");

    Rng rng(seed * 0x2545f4914f6cdd1dull + 17);
    std::vector<LabeledSample> out;
    json meta_samples = json::array();

    if (!root.empty()) {
        fs::create_directories(root / "images");
        fs::create_directories(root / "heatmaps");
    }

    std::ostringstream manifest;
    manifest << "sample_id,label,subset\n";

    for (int label = 0; label <= 1; ++label) {
        for (int idx = 0; idx < count_per_class; ++idx) {
            char id[64];
            std::snprintf(id, sizeof(id), "%s_s%llu_c%d_%04d", mode_tag(spec.shift_mode).c_str(),
                          static_cast<unsigned long long>(seed), label, idx);

            std::vector<double> img(static_cast<size_t>(S) * S);
            std::vector<double> noise(img.size());
            for (auto& n : noise) n = spec.noise_std * rng.normal();
            for (size_t i = 0; i < img.size(); ++i) img[i] = 0.35 + noise[i];

            for (int d = 0; d < spec.distractor_count; ++d) {
                const double cy = rng.uniform(0.0, S - 1.0);
                const double cx = rng.uniform(0.0, S - 1.0);
                const double sigma = rng.uniform(1.5, 2.5);
                const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
                for (int y = 0; y < S; ++y)
                    for (int x = 0; x < S; ++x) {
                        const double dy = y - cy, dx = x - cx;
                        img[static_cast<size_t>(y) * S + x] +=
                            0.25 * std::exp(-(dy * dy + dx * dx) * inv2s2);
                    }
            }

            const int py = pos_lo + rng.uniform_int(pos_hi - pos_lo + 1);
            const int px = pos_lo + rng.uniform_int(pos_hi - pos_lo + 1);
            if (label == 1) {
                for (int y = 0; y < P; ++y)
                    for (int x = 0; x < P; ++x) {
                        const bool on = ((y / period) + (x / period)) % 2 == 0;
                        img[static_cast<size_t>(py + y) * S + (px + x)] =
                            0.5 + (on ? spec.texture_amplitude : -spec.texture_amplitude) +
                            noise[static_cast<size_t>(py + y) * S + (px + x)];
                    }
            }

            // Quantize exactly as the PNG writer would, so memory == disk.
            ImageU8 u8;
            u8.height = u8.width = S;
            u8.channels = 1;
            u8.pixels.resize(img.size());
            for (size_t i = 0; i < img.size(); ++i)
                u8.pixels[i] =
                    static_cast<uint8_t>(std::lround(255.0 * std::clamp(img[i], 0.0, 1.0)));

            SalienceMap mask(S, S, 0.0, true);
            for (int y = 0; y < P; ++y)
                for (int x = 0; x < P; ++x) mask.at(py + y, px + x) = 1.0;

            LabeledSample sample;
            sample.sample_id = id;
            sample.image = image_to_tensor(u8);
            sample.label = label;
            sample.human_map = mask;
            sample.subset = subset_tag(spec.shift_mode);
            out.push_back(std::move(sample));

            manifest << id << ',' << label << ',' << subset_tag(spec.shift_mode) << '\n';
            meta_samples.push_back({{"sample_id", id},
                                    {"label", label},
                                    {"patch_y", py},
                                    {"patch_x", px},
                                    {"texture_period", period}});

            if (!root.empty()) {
                write_png(root / "images" / (std::string(id) + ".png"), u8);
                save_heatmap(root / "heatmaps" / (std::string(id) + ".png"), mask);
            }
        }
    }

    if (!root.empty()) {
        std::ofstream(root / "labels.csv") << manifest.str();
        json meta = {{"image_size", spec.image_size},
                     {"patch_size", spec.patch_size},
                     {"texture_period", spec.texture_period},
                     {"effective_period", period},
                     {"texture_amplitude", spec.texture_amplitude},
                     {"noise_std", spec.noise_std},
                     {"distractor_count", spec.distractor_count},
                     {"shift_mode", to_string(spec.shift_mode)},
                     {"seed", seed},
                     {"samples", meta_samples}};
        std::ofstream(root / "metadata.json") << meta.dump(2) << '\n';
    }

    std::sort(out.begin(), out.end(),
              [](const LabeledSample& a, const LabeledSample& b) { return a.sample_id < b.sample_id; });
    return out;
}

std::vector<LabeledSample> load_dataset(const fs::path& root) {
    const fs::path manifest_path = root / "labels.csv";
    std::ifstream in(manifest_path);
    if (!in) throw ValidationError("load_dataset: missing manifest " + manifest_path.string());
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("load_dataset: empty manifest file");
    // Tolerate trailing CR from foreign tools.
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (line != "sample_id,label,subset")
        throw ValidationError("load_dataset: bad manifest header '" + line + "'");

    std::vector<LabeledSample> out;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string id, label_str, subset;
        if (!std::getline(row, id, ',') || !std::getline(row, label_str, ','))
            throw ValidationError("load_dataset: malformed row '" + line + "'");
        std::getline(row, subset, ',');
        if (label_str != "0" && label_str != "1")
            throw ValidationError("load_dataset: label outside {0,1} for sample " + id);

        LabeledSample s;
        s.sample_id = id;
        s.label = label_str == "1" ? 1 : 0;
        s.subset = subset;
        const fs::path img_path = root / "images" / (id + ".png");
        if (!fs::exists(img_path))
            throw ValidationError("load_dataset: missing image for sample " + id);
        s.image = image_to_tensor(read_png(img_path));

        const fs::path hm_png = root / "heatmaps" / (id + ".png");
        const fs::path hm_npy = root / "heatmaps" / (id + ".npy");
        if (fs::exists(hm_png)) s.human_map = load_heatmap(hm_png);
        else if (fs::exists(hm_npy)) s.human_map = load_heatmap(hm_npy);
        if (s.human_map) {
            const auto& m = *s.human_map;
            if (static_cast<int64_t>(m.height) * s.image.dim(2) !=
                static_cast<int64_t>(m.width) * s.image.dim(1))
                throw ValidationError("load_dataset: image/heatmap aspect mismatch for sample " +
                                      id);
        }
        out.push_back(std::move(s));
    }
    std::sort(out.begin(), out.end(),
              [](const LabeledSample& a, const LabeledSample& b) { return a.sample_id < b.sample_id; });
    for (size_t i = 1; i < out.size(); ++i)
        if (out[i].sample_id == out[i - 1].sample_id)
            throw ValidationError("load_dataset: duplicate sample_id " + out[i].sample_id);
    return out;
}

} // namespace salience
