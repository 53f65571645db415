#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bdiff/grid.hpp"

namespace bdiff {

/// RGB image with entries in [0, 1], row-major, channel-last:
/// data[(y * width + x) * 3 + c].
class ImageTensor {
public:
    static constexpr std::size_t kChannels = 3;

    ImageTensor() = default;
    ImageTensor(std::size_t height, std::size_t width);
    ImageTensor(std::size_t height, std::size_t width, std::vector<double> data);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& at(std::size_t y, std::size_t x, std::size_t c) noexcept
    {
        return data_[(y * width_ + x) * kChannels + c];
    }
    double at(std::size_t y, std::size_t x, std::size_t c) const noexcept
    {
        return data_[(y * width_ + x) * kChannels + c];
    }
    double& operator[](std::size_t k) noexcept { return data_[k]; }
    double operator[](std::size_t k) const noexcept { return data_[k]; }
    const std::vector<double>& data() const noexcept { return data_; }
    std::vector<double>& data() noexcept { return data_; }

    /// Channel c as a periodic grid with unit spacing (i = column, j = row).
    Grid2D channel(std::size_t c) const;
    void set_channel(std::size_t c, const Grid2D& g);

    bool same_shape(const ImageTensor& other) const noexcept
    {
        return height_ == other.height_ && width_ == other.width_;
    }
    friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> data_;
};

/// Throws DomainError if any entry lies outside [0, 1] or is NaN.
void require_unit_range(const ImageTensor& img, const char* where);

/// 8-bit PNG in, values / 255. Grayscale is replicated to three channels and
/// an alpha channel is dropped.
ImageTensor read_png(const std::string& path);
/// Values * 255 rounded half-to-even, written as 8-bit RGB.
void write_png(const std::string& path, const ImageTensor& img);

}  // namespace bdiff
