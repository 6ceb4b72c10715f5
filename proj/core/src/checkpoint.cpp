#include "salience/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "salience/train.hpp"

namespace salience {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {
constexpr char kMagic[8] = {'S', 'A', 'L', 'C', 'K', 'P', 'T', '1'};

fs::path manifest_path_for(const fs::path& ckpt) {
    fs::path p = ckpt;
    p.replace_extension(".manifest.json");
    return p;
}

void write_entry(std::ofstream& out, const NamedTensor& t) {
    const uint32_t name_len = static_cast<uint32_t>(t.name.size());
    out.write(reinterpret_cast<const char*>(&name_len), 4);
    out.write(t.name.data(), name_len);
    const uint32_t rank = static_cast<uint32_t>(t.value.rank());
    out.write(reinterpret_cast<const char*>(&rank), 4);
    for (int d : t.value.shape) {
        const int32_t dd = d;
        out.write(reinterpret_cast<const char*>(&dd), 4);
    }
    out.write(reinterpret_cast<const char*>(t.value.data.data()),
              static_cast<std::streamsize>(t.value.data.size() * 8));
}
} // namespace

void save_checkpoint(const fs::path& path, const Model& model, const json& manifest) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(kMagic, 8);
    const uint32_t count =
        static_cast<uint32_t>(model.params().size() + model.buffers().size());
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& p : model.params()) write_entry(out, p);
    for (const auto& b : model.buffers()) write_entry(out, b);
    if (!out) throw IoError("checkpoint write failed: " + path.string());

    std::ofstream mout(manifest_path_for(path));
    mout << manifest.dump(2) << '\n';
    if (!mout) throw IoError("manifest write failed for " + path.string());
}

json read_checkpoint_manifest(const fs::path& checkpoint_path) {
    const fs::path mp = manifest_path_for(checkpoint_path);
    std::ifstream in(mp);
    if (!in) throw IoError("missing checkpoint manifest " + mp.string());
    json j;
    in >> j;
    return j;
}

void load_checkpoint_into(const fs::path& path, Model& model) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw IoError("not a checkpoint file: " + path.string());
    uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t name_len = 0;
        in.read(reinterpret_cast<char*>(&name_len), 4);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        uint32_t rank = 0;
        in.read(reinterpret_cast<char*>(&rank), 4);
        std::vector<int> shape(rank);
        for (uint32_t d = 0; d < rank; ++d) {
            int32_t dd = 0;
            in.read(reinterpret_cast<char*>(&dd), 4);
            shape[d] = dd;
        }
        if (!in) throw IoError("truncated checkpoint: " + path.string());
        Tensor* dst = model.find_param(name);
        if (!dst) {
            for (auto& b : model.buffers())
                if (b.name == name) dst = &b.value;
        }
        if (!dst) throw ValidationError("checkpoint entry has no home in model: " + name);
        if (dst->shape != shape)
            throw ValidationError("checkpoint shape mismatch for " + name);
        in.read(reinterpret_cast<char*>(dst->data.data()),
                static_cast<std::streamsize>(dst->data.size() * 8));
        if (!in) throw IoError("truncated checkpoint data: " + path.string());
    }
}

std::unique_ptr<Model> load_checkpoint(const fs::path& path, json* manifest_out) {
    json manifest = read_checkpoint_manifest(path);
    const std::string arch = manifest.at("arch").get<std::string>();
    const uint64_t seed = manifest.value("seed", 0);
    const int in_channels = manifest.value("in_channels", 1);
    std::unique_ptr<Model> model = make_model_arch(arch, seed, in_channels);
    load_checkpoint_into(path, *model);
    if (manifest_out) *manifest_out = std::move(manifest);
    return model;
}

} // namespace salience
