#include "deepmatch/simulation/idx.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

#include "deepmatch/error.hpp"

namespace deepmatch {
namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t off, const std::string& what) {
    if (off + 4 > b.size()) throw FormatError(what + ": truncated header");
    return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
           (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
}

std::vector<std::uint8_t> inflate_gzip(const std::vector<std::uint8_t>& in, const std::string& what) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 16) != Z_OK) throw FormatError(what + ": zlib init failed");
    zs.next_in = const_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(in.size());
    std::vector<std::uint8_t> out;
    std::array<std::uint8_t, 1 << 16> chunk{};
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
        zs.next_out = chunk.data();
        zs.avail_out = static_cast<uInt>(chunk.size());
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw FormatError(what + ": corrupt gzip stream");
        }
        out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
        if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw FormatError(what + ": truncated gzip stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

}  // namespace

ImageStore::ImageStore(std::size_t rows, std::size_t cols, std::vector<double> pixels,
                       std::vector<std::uint8_t> labels)
    : rows_(rows), cols_(cols), pixels_(std::move(pixels)), labels_(std::move(labels)) {
    if (pixels_.size() != rows_ * cols_ * labels_.size())
        throw DimensionError("image store: pixel count does not match rows x cols x images");
    for (double p : pixels_)
        if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("image store: pixel outside [0,1]");
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] > 9) throw PreconditionError("image store: label outside 0..9");
        by_label_[labels_[i]].push_back(i);
    }
}

double ImageStore::brightness(std::size_t i) const {
    const auto img = image(i);
    double s = 0.0;
    for (double p : img) s += p;
    return s / static_cast<double>(img.size());
}

std::vector<std::uint8_t> read_maybe_gzip(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b)
        return inflate_gzip(bytes, path.string());
    return bytes;
}

ImageStore load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
    const std::string iname = images.string(), lname = labels.string();
    const auto ib = read_maybe_gzip(images);
    const auto lb = read_maybe_gzip(labels);
    if (be32(ib, 0, iname) != kImageMagic)
        throw FormatError(iname + ": not an IDX image file (magic 0x00000803 expected)");
    if (be32(lb, 0, lname) != kLabelMagic)
        throw FormatError(lname + ": not an IDX label file (magic 0x00000801 expected)");
    const std::size_t count = be32(ib, 4, iname);
    const std::size_t rows = be32(ib, 8, iname);
    const std::size_t cols = be32(ib, 12, iname);
    const std::size_t lcount = be32(lb, 4, lname);
    if (count != lcount)
        throw FormatError("image file has " + std::to_string(count) + " entries, label file " +
                          std::to_string(lcount));
    const std::size_t need = count * rows * cols;
    if (ib.size() < 16 + need) throw FormatError(iname + ": truncated pixel payload");
    if (lb.size() < 8 + count) throw FormatError(lname + ": truncated label payload");
    std::vector<double> px(need);
    for (std::size_t k = 0; k < need; ++k) px[k] = static_cast<double>(ib[16 + k]) / 255.0;
    std::vector<std::uint8_t> lab(lb.begin() + 8, lb.begin() + 8 + static_cast<std::ptrdiff_t>(count));
    for (std::uint8_t l : lab)
        if (l > 9) throw FormatError(lname + ": label outside 0..9");
    return ImageStore(rows, cols, std::move(px), std::move(lab));
}

std::vector<double> downscale(std::span<const double> image, std::size_t rows, std::size_t cols,
                              std::size_t factor) {
    if (factor == 0 || rows % factor != 0 || cols % factor != 0)
        throw PreconditionError("downscale factor must divide both image sides");
    if (image.size() != rows * cols) throw DimensionError("downscale: image size mismatch");
    const std::size_t r2 = rows / factor, c2 = cols / factor;
    std::vector<double> out(r2 * c2, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[(r / factor) * c2 + c / factor] += image[r * cols + c];
    const double inv = 1.0 / static_cast<double>(factor * factor);
    for (double& v : out) v *= inv;
    return out;
}

ImageStore synthetic_digits(std::size_t per_digit, RngStream& rng) {
    // Segments a..g of a seven-segment display: top, top-right, bottom-right,
    // bottom, bottom-left, top-left, middle.
    static constexpr std::array<std::uint8_t, 10> kMasks = {0x3f, 0x06, 0x5b, 0x4f, 0x66,
                                                            0x6d, 0x7d, 0x07, 0x7f, 0x6f};
    constexpr std::size_t side = 28;
    std::vector<double> px;
    std::vector<std::uint8_t> labels;
    px.reserve(10 * per_digit * side * side);
    for (std::size_t k = 0; k < per_digit; ++k) {
        for (std::uint8_t digit = 0; digit < 10; ++digit) {
            const double half_w = rng.uniform(0.8, 2.2);
            const double ink = rng.uniform(0.55, 1.0);
            const double slant = rng.uniform(-0.15, 0.15);
            const double ox = rng.uniform(-2.0, 2.0), oy = rng.uniform(-2.0, 2.0);
            const double left = 8.0 + ox, right = 19.0 + ox;
            const double top = 5.0 + oy, mid = 13.5 + oy, bottom = 22.0 + oy;
            struct Seg { double x0, y0, x1, y1; };
            const std::array<Seg, 7> segs = {{{left, top, right, top},
                                              {right, top, right, mid},
                                              {right, mid, right, bottom},
                                              {left, bottom, right, bottom},
                                              {left, mid, left, bottom},
                                              {left, top, left, mid},
                                              {left, mid, right, mid}}};
            for (std::size_t r = 0; r < side; ++r) {
                for (std::size_t c = 0; c < side; ++c) {
                    const double y = static_cast<double>(r) + 0.5;
                    const double x = static_cast<double>(c) + 0.5 + slant * (y - 14.0);
                    double v = 0.0;
                    for (int s = 0; s < 7; ++s) {
                        if (!((kMasks[digit] >> s) & 1)) continue;
                        const Seg& g = segs[static_cast<std::size_t>(s)];
                        const double dx = g.x1 - g.x0, dy = g.y1 - g.y0;
                        const double len2 = dx * dx + dy * dy;
                        const double u = std::clamp(((x - g.x0) * dx + (y - g.y0) * dy) / len2, 0.0, 1.0);
                        const double ex = x - (g.x0 + u * dx), ey = y - (g.y0 + u * dy);
                        const double dist = std::sqrt(ex * ex + ey * ey);
                        v = std::max(v, std::clamp(half_w + 0.5 - dist, 0.0, 1.0));
                    }
                    // Quantize like an 8-bit scan.
                    px.push_back(std::round(255.0 * ink * v) / 255.0);
                }
            }
            labels.push_back(digit);
        }
    }
    return ImageStore(side, side, std::move(px), std::move(labels));
}

}  // namespace deepmatch
