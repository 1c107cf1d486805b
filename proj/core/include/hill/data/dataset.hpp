#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "hill/diffcore/tensor.hpp"

namespace hill::data {

enum class Split { train, val, test };

std::string to_string(Split split);

// Immutable once built. Samples are stored row-major, one flattened row each.
struct Dataset {
    std::string name;
    ad::Shape input_shape;  // per-sample shape, e.g. {16} or {1, 64}
    std::vector<float> inputs;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t num_classes() const noexcept { return class_names.size(); }
    std::size_t feature_count() const noexcept { return ad::numel(input_shape); }
    std::span<const float> row(std::size_t i) const {
        return std::span<const float>(inputs).subspan(i * feature_count(), feature_count());
    }
    const std::vector<std::size_t>& indices(Split split) const;

    // Checks labels, shapes and split disjointness; throws invalid_argument.
    void validate() const;
};

// Gaussian clusters, exactly `per_class` samples per class. Centers are drawn
// N(0, center_spread^2) per coordinate; samples add N(0, noise_sigma^2).
Dataset gen_blobs(std::size_t num_classes, std::size_t per_class, std::size_t dim, double center_spread,
                  double noise_sigma, std::uint64_t seed);

// Concentric 2D rings of radius 1..C. Point j of a class sits at angle
// 2*pi*j/per_class before isotropic noise.
Dataset gen_rings(std::size_t num_classes, std::size_t per_class, double noise_sigma, std::uint64_t seed);

enum class TableFormat { csv, idx };

// CSV: label first, numeric features after; an optional first line whose
// first cell is "label" is treated as a header. IDX: `path` holds the inputs
// (any IDX element type) and `labels_path` the 1-D label array.
Dataset load_table(const std::filesystem::path& path, TableFormat format,
                   const std::filesystem::path& labels_path = {});

struct IdxArray {
    std::vector<std::size_t> dims;
    std::vector<double> values;
};
IdxArray read_idx(const std::filesystem::path& path);
void write_idx_f32(const std::filesystem::path& path, const std::vector<std::size_t>& dims, std::span<const float> values);
void write_idx_u8(const std::filesystem::path& path, const std::vector<std::size_t>& dims, std::span<const std::uint8_t> values);

// Stratified split. fractions = (train[, val[, test]]), each positive, sum <= 1.
// Per class the boundaries are round(cumulative_fraction * class_count).
Dataset split(Dataset dataset, std::span<const double> fractions, std::uint64_t seed);

// The overlapping 5-class, 16-dim benchmark set with its train/val split.
struct BlobsHardParams {
    std::size_t num_classes = 5;
    std::size_t dim = 16;
    std::size_t per_class = 600;
    double center_spread = 0.6;
    double noise_sigma = 1.0;
    double train_fraction = 0.5;
    double val_fraction = 0.5;
};
Dataset blobs_hard(std::uint64_t seed, const BlobsHardParams& params = {});

}  // namespace hill::data
