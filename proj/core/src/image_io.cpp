#include "salience/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace salience {

namespace {
struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;
} // namespace

ImageU8 read_png(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());
    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        throw IoError("not a PNG file: " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw IoError("libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("PNG decode failed: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_packing(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (png_get_color_type(png, info) == PNG_COLOR_TYPE_GRAY &&
        png_get_bit_depth(png, info) < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    png_read_update_info(png, info);

    ImageU8 img;
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.channels = static_cast<int>(png_get_channels(png, info));
    if (img.channels != 1 && img.channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported channel count in " + path.string());
    }
    img.pixels.resize(static_cast<size_t>(img.height) * img.width * img.channels);
    std::vector<png_bytep> rows(static_cast<size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[y] = img.pixels.data() + static_cast<size_t>(y) * img.width * img.channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

void write_png(const std::filesystem::path& path, const ImageU8& img) {
    if (img.channels != 1 && img.channels != 3)
        throw ValidationError("write_png: channels must be 1 or 3");
    if (img.pixels.size() != static_cast<size_t>(img.height) * img.width * img.channels)
        throw ValidationError("write_png: pixel buffer size mismatch");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot open " + path.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png_create_info_struct(png);
    if (!png || !info) throw IoError("libpng init failed");
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encode failed: " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(static_cast<size_t>(img.height));
    for (int y = 0; y < img.height; ++y)
        rows[y] = const_cast<png_bytep>(img.pixels.data() +
                                        static_cast<size_t>(y) * img.width * img.channels);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Tensor image_to_tensor(const ImageU8& img) {
    Tensor t({img.channels, img.height, img.width});
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x)
                t.at3(c, y, x) = img.at(y, x, c) / 255.0;
    return t;
}

ImageU8 tensor_to_image(const Tensor& t) {
    if (t.rank() != 3 || (t.dim(0) != 1 && t.dim(0) != 3))
        throw ValidationError("tensor_to_image: expected 1 or 3 x H x W");
    ImageU8 img;
    img.channels = t.dim(0);
    img.height = t.dim(1);
    img.width = t.dim(2);
    img.pixels.resize(static_cast<size_t>(img.height) * img.width * img.channels);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double v = std::clamp(t.at3(c, y, x), 0.0, 1.0);
                img.at(y, x, c) = static_cast<uint8_t>(std::lround(v * 255.0));
            }
    return img;
}

// ---------------------------------------------------------------------------
// npy

SalienceMap read_npy_map(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[6];
    in.read(magic, 6);
    if (!in || std::memcmp(magic, "\x93NUMPY", 6) != 0)
        throw IoError("not an npy file: " + path.string());
    unsigned char ver[2];
    in.read(reinterpret_cast<char*>(ver), 2);
    uint32_t header_len = 0;
    if (ver[0] == 1) {
        unsigned char b[2];
        in.read(reinterpret_cast<char*>(b), 2);
        header_len = b[0] | (b[1] << 8);
    } else {
        unsigned char b[4];
        in.read(reinterpret_cast<char*>(b), 4);
        header_len = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<uint32_t>(b[3]) << 24);
    }
    std::string header(header_len, '\0');
    in.read(header.data(), header_len);
    if (!in) throw IoError("truncated npy header: " + path.string());

    const bool f8 = header.find("'<f8'") != std::string::npos;
    const bool f4 = header.find("'<f4'") != std::string::npos;
    if (!f8 && !f4) throw IoError("npy: unsupported dtype (need <f4 or <f8): " + path.string());
    if (header.find("'fortran_order': True") != std::string::npos)
        throw IoError("npy: fortran order not supported: " + path.string());
    auto sp = header.find("'shape':");
    auto lp = header.find('(', sp);
    auto rp = header.find(')', lp);
    if (sp == std::string::npos || lp == std::string::npos || rp == std::string::npos)
        throw IoError("npy: malformed header: " + path.string());
    std::string shape_str = header.substr(lp + 1, rp - lp - 1);
    std::vector<long> dims;
    long cur = -1;
    for (char c : shape_str) {
        if (c >= '0' && c <= '9') cur = (cur < 0 ? 0 : cur) * 10 + (c - '0');
        else if (cur >= 0) {
            dims.push_back(cur);
            cur = -1;
        }
    }
    if (cur >= 0) dims.push_back(cur);
    if (dims.size() != 2 || dims[0] <= 0 || dims[1] <= 0)
        throw ValidationError("npy: expected a 2D array in " + path.string());

    const size_t n = static_cast<size_t>(dims[0]) * dims[1];
    SalienceMap m(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
    if (f8) {
        in.read(reinterpret_cast<char*>(m.values.data()), static_cast<std::streamsize>(n * 8));
    } else {
        std::vector<float> buf(n);
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * 4));
        for (size_t i = 0; i < n; ++i) m.values[i] = buf[i];
    }
    if (!in) throw IoError("npy: truncated data: " + path.string());
    return m;
}

void write_npy_map(const std::filesystem::path& path, const SalienceMap& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    std::string header = "{'descr': '<f8', 'fortran_order': False, 'shape': (" +
                         std::to_string(m.height) + ", " + std::to_string(m.width) + "), }";
    size_t total = 10 + header.size() + 1;
    size_t pad = (64 - total % 64) % 64;
    header.append(pad, ' ');
    header.push_back('\n');
    out.write("\x93NUMPY\x01\x00", 8);
    const uint16_t hl = static_cast<uint16_t>(header.size());
    out.put(static_cast<char>(hl & 0xff));
    out.put(static_cast<char>(hl >> 8));
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(m.values.data()),
              static_cast<std::streamsize>(m.values.size() * 8));
    if (!out) throw IoError("npy: write failed: " + path.string());
}

} // namespace salience
