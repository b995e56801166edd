#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "steinprune/tensor.hpp"

namespace steinprune {

// Per-feature affine normalization, recorded alongside checkpoints so that
// evaluation matches training.
struct Normalization {
    std::vector<double> shift;  // subtracted
    std::vector<double> scale;  // divided by (never 0)

    bool empty() const { return shift.empty(); }
    void apply(Tensor& inputs) const;
};

// IDX pair loader (big-endian dims, magics 0x803 images / 0x801 labels).
// Pixels are scaled to [0,1]. Malformed input raises FormatError naming the
// byte offset.
DatasetBatch load_idx(const std::string& images_path, const std::string& labels_path);

struct CsvOptions {
    bool has_header = false;
};
// Comma-separated, first column is the integer label.
DatasetBatch load_csv(const std::string& path, const CsvOptions& options = {});

// Gaussian clusters (unit std) at the vertices of a regular simplex scaled to
// the requested pairwise separation. Requires dim >= classes - 1.
DatasetBatch generate_blobs(std::size_t classes, std::size_t per_class, std::size_t dim,
                            double separation, std::uint64_t seed);

// Linear-Gaussian regression data: y = x . w* + noise, w* ~ N(0, I).
DatasetBatch generate_linear(std::size_t samples, std::size_t dim, double noise_std,
                             std::uint64_t seed);

// inputs + iid N(0, std^2); labels unchanged.
DatasetBatch corrupt_gaussian(const DatasetBatch& batch, double std_dev, std::uint64_t seed);

// Per-feature standardization applied in place; constant features get scale 1.
Normalization standardize(DatasetBatch& batch);

// Deterministic shuffle-split; returns {train, holdout}.
std::pair<DatasetBatch, DatasetBatch> split_holdout(const DatasetBatch& batch, double fraction,
                                                    std::uint64_t seed);

// Atomic file write: temp file + fsync + rename.
void atomic_write_file(const std::string& path, const std::string& bytes);

}  // namespace steinprune
