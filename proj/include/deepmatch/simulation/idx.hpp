#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "deepmatch/numerics/rng.hpp"

namespace deepmatch {

/// Grayscale images with digit labels; pixels in [0,1], row-major.
class ImageStore {
public:
    ImageStore() = default;
    /// Throws PreconditionError on out-of-range pixels or labels and
    /// DimensionError on size mismatches.
    ImageStore(std::size_t rows, std::size_t cols, std::vector<double> pixels,
               std::vector<std::uint8_t> labels);

    std::size_t size() const { return labels_.size(); }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::span<const double> image(std::size_t i) const {
        return {pixels_.data() + i * rows_ * cols_, rows_ * cols_};
    }
    std::uint8_t label(std::size_t i) const { return labels_[i]; }
    /// Mean pixel value.
    double brightness(std::size_t i) const;
    /// Indices of every image with the given label, ascending.
    const std::vector<std::size_t>& with_label(std::uint8_t digit) const { return by_label_[digit]; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> pixels_;
    std::vector<std::uint8_t> labels_;
    std::vector<std::vector<std::size_t>> by_label_ = std::vector<std::vector<std::size_t>>(10);
};

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Either file may be gzip-compressed (detected by the 1f 8b prefix).
/// Throws FormatError on bad magic, truncation or count mismatch.
ImageStore load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Raw file bytes, inflated when gzip-wrapped.
std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path);

/// Block-mean pooling by `factor` (must divide both sides).
std::vector<double> downscale(std::span<const double> image, std::size_t rows, std::size_t cols,
                              std::size_t factor);

/// Procedurally drawn 28x28 seven-segment digit glyphs with random stroke
/// width, offset, slant and ink level; `per_digit` images of each label.
/// A stand-in corpus for runs where no IDX files are available.
ImageStore synthetic_digits(std::size_t per_digit, RngStream& rng);

}  // namespace deepmatch
