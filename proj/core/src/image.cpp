#include "bdiff/image.hpp"

#include <png.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include "bdiff/errors.hpp"

namespace bdiff {

ImageTensor::ImageTensor(std::size_t height, std::size_t width)
    : ImageTensor(height, width, std::vector<double>(height * width * kChannels, 0.0))
{
}

ImageTensor::ImageTensor(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data))
{
    if (height == 0 || width == 0) {
        throw ShapeError("image dimensions must be positive");
    }
    if (data_.size() != height * width * kChannels) {
        std::ostringstream os;
        os << "image buffer holds " << data_.size() << " values, expected " << height << " x "
           << width << " x 3";
        throw ShapeError(os.str());
    }
}

Grid2D ImageTensor::channel(std::size_t c) const
{
    if (c >= kChannels) {
        throw ValidationError("channel index out of range");
    }
    Grid2D g(width_, height_, 1.0, Boundary::Periodic);
    for (std::size_t k = 0; k < height_ * width_; ++k) {
        g[k] = data_[k * kChannels + c];
    }
    return g;
}

void ImageTensor::set_channel(std::size_t c, const Grid2D& g)
{
    if (c >= kChannels) {
        throw ValidationError("channel index out of range");
    }
    if (g.nx() != width_ || g.ny() != height_) {
        throw ShapeError("channel grid does not match the image shape");
    }
    for (std::size_t k = 0; k < height_ * width_; ++k) {
        data_[k * kChannels + c] = g[k];
    }
}

void require_unit_range(const ImageTensor& img, const char* where)
{
    for (double v : img.data()) {
        if (!(v >= 0.0 && v <= 1.0)) {
            std::ostringstream os;
            os << where << ": pixel value " << v << " outside [0, 1]";
            throw DomainError(os.str());
        }
    }
}

ImageTensor read_png(const std::string& path)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
        throw ValidationError("cannot read PNG '" + path + "': " + image.message);
    }
    image.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
    if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw ValidationError("cannot decode PNG '" + path + "': " + msg);
    }
    std::vector<double> data(buffer.size());
    for (std::size_t k = 0; k < buffer.size(); ++k) {
        data[k] = buffer[k] / 255.0;
    }
    return ImageTensor(image.height, image.width, std::move(data));
}

void write_png(const std::string& path, const ImageTensor& img)
{
    require_unit_range(img, "write_png");
    std::vector<png_byte> buffer(img.size());
    for (std::size_t k = 0; k < img.size(); ++k) {
        // nearbyint under the default rounding mode is round-half-to-even.
        buffer[k] = static_cast<png_byte>(std::nearbyint(img[k] * 255.0));
    }
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = PNG_FORMAT_RGB;
    if (png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr) == 0) {
        throw ValidationError("cannot write PNG '" + path + "': " + image.message);
    }
}

}  // namespace bdiff
