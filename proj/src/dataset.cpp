#include "sif/dataset.hpp"

#include <filesystem>
#include <stdexcept>

#include <json.hpp>

#include "sif/io.hpp"

namespace sif {

void TransitionDataset::save(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const std::int64_t n = size();
    std::vector<double> packed(static_cast<std::size_t>(n) * 2 * dim);
    for (std::int64_t k = 0; k < n; ++k) {
        std::copy_n(x0.begin() + k * dim, dim, packed.begin() + k * 2 * dim);
        std::copy_n(x1.begin() + k * dim, dim, packed.begin() + k * 2 * dim + dim);
    }
    const std::int64_t shape[3] = {n, 2, dim};
    io::write_array((fs::path(dir) / "pairs.bin").string(), packed, shape);

    nlohmann::json j;
    j["format"] = "sif-transition-dataset";
    j["format_version"] = 1;
    j["count"] = n;
    j["dim"] = dim;
    j["lag"] = lag;
    j["normalization_scale"] = normalization_scale;
    j["task"] = task;
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    if (!extra_json.empty()) j["extra"] = nlohmann::json::parse(extra_json);
    io::write_text_file((fs::path(dir) / "manifest.json").string(), j.dump(2) + "\n");
}

TransitionDataset TransitionDataset::load(const std::string& dir) {
    namespace fs = std::filesystem;
    const auto manifest =
        nlohmann::json::parse(io::read_text_file((fs::path(dir) / "manifest.json").string()));
    if (manifest.at("format").get<std::string>() != "sif-transition-dataset")
        throw std::invalid_argument("TransitionDataset::load: not a dataset manifest");
    TransitionDataset ds;
    ds.dim = manifest.at("dim").get<int>();
    ds.lag = manifest.at("lag").get<double>();
    ds.normalization_scale = manifest.at("normalization_scale").get<double>();
    ds.task = manifest.at("task").get<std::string>();
    ds.seed = manifest.at("seed").get<std::uint64_t>();
    ds.config_hash = manifest.at("config_hash").get<std::uint64_t>();
    if (manifest.contains("extra")) ds.extra_json = manifest["extra"].dump();

    const auto arr = io::read_array((fs::path(dir) / "pairs.bin").string());
    if (arr.shape.size() != 3 || arr.shape[1] != 2 || arr.shape[2] != ds.dim)
        throw std::invalid_argument("TransitionDataset::load: unexpected pairs.bin shape");
    const std::int64_t n = arr.shape[0];
    if (n != manifest.at("count").get<std::int64_t>())
        throw std::invalid_argument("TransitionDataset::load: manifest/array count mismatch");
    ds.x0.resize(static_cast<std::size_t>(n) * ds.dim);
    ds.x1.resize(static_cast<std::size_t>(n) * ds.dim);
    for (std::int64_t k = 0; k < n; ++k) {
        std::copy_n(arr.data.begin() + k * 2 * ds.dim, ds.dim, ds.x0.begin() + k * ds.dim);
        std::copy_n(arr.data.begin() + k * 2 * ds.dim + ds.dim, ds.dim,
                    ds.x1.begin() + k * ds.dim);
    }
    return ds;
}

}  // namespace sif
