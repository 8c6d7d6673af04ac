#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gridguard {

struct Provenance {
    std::string scenario;
    std::string grid;
    std::string device;
    std::size_t window_start = 0;  ///< step index of the first value

    bool operator==(const Provenance&) const = default;
};

/// One fixed-length measurement window. label 0 = correct, 1 = malfunction.
struct Sample {
    std::vector<double> values;
    int label = 0;
    Provenance provenance;

    bool operator==(const Sample&) const = default;
};

/// Per-position z-score statistics fitted on training samples.
struct ScalingStats {
    std::vector<double> mean;
    std::vector<double> std;

    bool operator==(const ScalingStats&) const = default;
};

struct DatasetMetadata {
    std::string name;
    std::size_t sample_length = 0;
    std::size_t number_of_samples = 0;
    std::size_t number_of_grids = 0;
    std::string device_kind;
    std::string channel = "P";
    int malfunction_choice = 2;
    std::optional<ScalingStats> scaling;

    bool operator==(const DatasetMetadata&) const = default;
};

struct Dataset {
    std::vector<Sample> samples;
    DatasetMetadata meta;

    std::size_t size() const { return samples.size(); }
    std::vector<int> labels() const;
    /// Count of samples per label {0, 1}.
    std::array<std::size_t, 2> class_counts() const;
    Dataset subset(std::span<const std::size_t> indices) const;
    bool operator==(const Dataset&) const = default;
};

/// Container format version written into every manifest.
inline constexpr int kContainerVersion = 1;

/// Writes values as little-endian IEEE-754 doubles.
void write_f64_block(const std::string& path, std::span<const double> values);
/// Reads a block and checks it holds exactly `expected` doubles.
std::vector<double> read_f64_block(const std::string& path, std::size_t expected);

/// `<prefix>.manifest.json` + `<prefix>.f64`.
void save_dataset(const Dataset& dataset, const std::string& prefix);
Dataset load_dataset(const std::string& prefix);

}  // namespace gridguard
