#include "gridguard/dataset.hpp"

#include "gridguard/error.hpp"

#include "json.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gridguard {

using nlohmann::json;

std::vector<int> Dataset::labels() const {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.label);
    return out;
}

std::array<std::size_t, 2> Dataset::class_counts() const {
    std::array<std::size_t, 2> counts{0, 0};
    for (const auto& s : samples) ++counts[s.label == 0 ? 0 : 1];
    return counts;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.meta = meta;
    out.samples.reserve(indices.size());
    for (auto i : indices) out.samples.push_back(samples.at(i));
    out.meta.number_of_samples = out.samples.size();
    return out;
}

namespace {

std::uint64_t to_little_endian(std::uint64_t bits) {
    if constexpr (std::endian::native == std::endian::little) return bits;
    std::uint64_t out = 0;
    for (int b = 0; b < 8; ++b) out |= ((bits >> (8 * b)) & 0xFFu) << (8 * (7 - b));
    return out;
}

}  // namespace

void write_f64_block(const std::string& path, std::span<const double> values) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write " + path);
    constexpr std::size_t chunk = 8192;
    std::vector<std::uint64_t> buffer(chunk);
    for (std::size_t at = 0; at < values.size(); at += chunk) {
        const auto n = std::min(chunk, values.size() - at);
        for (std::size_t k = 0; k < n; ++k)
            buffer[k] = to_little_endian(std::bit_cast<std::uint64_t>(values[at + k]));
        out.write(reinterpret_cast<const char*>(buffer.data()),
                  static_cast<std::streamsize>(n * sizeof(std::uint64_t)));
    }
    if (!out) throw RuntimeFailure("write failed for " + path);
}

std::vector<double> read_f64_block(const std::string& path, std::size_t expected) {
    std::error_code ec;
    const auto bytes = std::filesystem::file_size(path, ec);
    if (ec) throw ValidationError("cannot stat value block " + path);
    if (bytes != expected * sizeof(double))
        throw ValidationError("value block " + path + " holds " + std::to_string(bytes) +
                              " bytes, manifest implies " + std::to_string(expected * sizeof(double)));
    std::ifstream in(path, std::ios::binary);
    std::vector<std::uint64_t> raw(expected);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
    if (!in && expected > 0) throw RuntimeFailure("read failed for " + path);
    std::vector<double> values(expected);
    for (std::size_t k = 0; k < expected; ++k)
        values[k] = std::bit_cast<double>(to_little_endian(raw[k]));
    return values;
}

void save_dataset(const Dataset& dataset, const std::string& prefix) {
    const auto& meta = dataset.meta;
    const auto length = meta.sample_length;
    std::vector<double> block;
    block.reserve(dataset.size() * length);
    json labels = json::array();
    json provenance = json::array();
    for (const auto& s : dataset.samples) {
        if (s.values.size() != length)
            throw ValidationError("sample length " + std::to_string(s.values.size()) +
                                  " differs from dataset sample_length " + std::to_string(length));
        block.insert(block.end(), s.values.begin(), s.values.end());
        labels.push_back(s.label);
        provenance.push_back({s.provenance.scenario, s.provenance.grid, s.provenance.device,
                              s.provenance.window_start});
    }

    const std::filesystem::path base(prefix);
    json manifest;
    manifest["format"] = "gridguard-dataset";
    manifest["version"] = kContainerVersion;
    manifest["name"] = meta.name;
    manifest["sample_length"] = length;
    manifest["number_of_samples"] = dataset.size();
    manifest["number_of_grids"] = meta.number_of_grids;
    manifest["device_kind"] = meta.device_kind;
    manifest["channel"] = meta.channel;
    manifest["malfunction_choice"] = meta.malfunction_choice;
    manifest["scaling"] = meta.scaling
                              ? json{{"mean", meta.scaling->mean}, {"std", meta.scaling->std}}
                              : json(nullptr);
    manifest["labels"] = std::move(labels);
    manifest["provenance"] = std::move(provenance);
    manifest["block"] = {{"file", base.filename().string() + ".f64"},
                         {"dtype", "f64le"},
                         {"layout", "row-major"},
                         {"rows", dataset.size()},
                         {"cols", length}};

    if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
    std::ofstream out(prefix + ".manifest.json", std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write " + prefix + ".manifest.json");
    out << manifest.dump(1) << "\n";
    write_f64_block(prefix + ".f64", block);
}

Dataset load_dataset(const std::string& prefix) {
    const auto manifest_path = prefix + ".manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw ValidationError("dataset manifest not found: " + manifest_path);
    json manifest;
    try {
        manifest = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(manifest_path + ": " + e.what());
    }
    if (manifest.value("format", "") != "gridguard-dataset")
        throw ValidationError(manifest_path + " is not a dataset manifest");
    if (manifest.value("version", -1) != kContainerVersion)
        throw ValidationError(manifest_path + ": unsupported container version " +
                              manifest.value("version", json(-1)).dump());

    Dataset ds;
    try {
        auto& meta = ds.meta;
        meta.name = manifest.at("name").get<std::string>();
        meta.sample_length = manifest.at("sample_length").get<std::size_t>();
        meta.number_of_samples = manifest.at("number_of_samples").get<std::size_t>();
        meta.number_of_grids = manifest.at("number_of_grids").get<std::size_t>();
        meta.device_kind = manifest.at("device_kind").get<std::string>();
        meta.channel = manifest.at("channel").get<std::string>();
        meta.malfunction_choice = manifest.at("malfunction_choice").get<int>();
        if (!manifest.at("scaling").is_null())
            meta.scaling = ScalingStats{manifest["scaling"].at("mean").get<std::vector<double>>(),
                                        manifest["scaling"].at("std").get<std::vector<double>>()};

        const auto& labels = manifest.at("labels");
        const auto& provenance = manifest.at("provenance");
        const auto rows = manifest.at("block").at("rows").get<std::size_t>();
        const auto cols = manifest.at("block").at("cols").get<std::size_t>();
        if (rows != meta.number_of_samples || cols != meta.sample_length ||
            labels.size() != rows || provenance.size() != rows)
            throw ValidationError(manifest_path + ": manifest counts are inconsistent");

        const auto block_file = std::filesystem::path(prefix).parent_path() /
                                manifest.at("block").at("file").get<std::string>();
        const auto values = read_f64_block(block_file.string(), rows * cols);
        ds.samples.resize(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            auto& s = ds.samples[r];
            s.values.assign(values.begin() + static_cast<std::ptrdiff_t>(r * cols),
                            values.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
            s.label = labels[r].get<int>();
            if (s.label != 0 && s.label != 1)
                throw ValidationError(manifest_path + ": label outside {0, 1}");
            const auto& p = provenance[r];
            s.provenance = {p.at(0).get<std::string>(), p.at(1).get<std::string>(),
                            p.at(2).get<std::string>(), p.at(3).get<std::size_t>()};
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(manifest_path + ": " + e.what());
    }
    return ds;
}

}  // namespace gridguard
