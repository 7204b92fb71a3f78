#include "vlseg/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>

namespace vlseg {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

struct PngRead {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngRead() { png_destroy_read_struct(&png, &info, nullptr); }
};

struct PngWrite {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWrite() { png_destroy_write_struct(&png, &info); }
};

// Reads any PNG into 8-bit rows with the requested channel count (1 or 3).
std::vector<std::vector<png_byte>> read_rows(const std::string& path, int want_channels, int& h, int& w) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw Error("cannot open PNG: " + path);

    PngRead ctx;
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw Error("png_create_read_struct failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw Error("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw Error("failed to decode PNG: " + path);

    png_init_io(ctx.png, f.get());
    png_read_info(ctx.png, ctx.info);

    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, color_type = 0;
    png_get_IHDR(ctx.png, ctx.info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);

    if (bit_depth == 16) png_set_strip_16(ctx.png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(ctx.png);
    if (png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(ctx.png);
    png_set_strip_alpha(ctx.png);
    if (want_channels == 3) {
        if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
            png_set_gray_to_rgb(ctx.png);
    } else {
        if (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_RGB_ALPHA ||
            color_type == PNG_COLOR_TYPE_PALETTE)
            png_set_rgb_to_gray_fixed(ctx.png, 1, -1, -1);
    }
    png_read_update_info(ctx.png, ctx.info);

    h = static_cast<int>(height);
    w = static_cast<int>(width);
    const size_t rowbytes = png_get_rowbytes(ctx.png, ctx.info);
    std::vector<std::vector<png_byte>> rows(height, std::vector<png_byte>(rowbytes));
    std::vector<png_bytep> ptrs(height);
    for (png_uint_32 y = 0; y < height; ++y) ptrs[y] = rows[y].data();
    png_read_image(ctx.png, ptrs.data());
    png_read_end(ctx.png, nullptr);
    return rows;
}

void write_rows(const std::string& path, int h, int w, int channels, const std::vector<png_byte>& data) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw Error("cannot open PNG for writing: " + path);

    PngWrite ctx;
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw Error("png_create_write_struct failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw Error("png_create_info_struct failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw Error("failed to encode PNG: " + path);

    png_init_io(ctx.png, f.get());
    const int color = channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY;
    png_set_IHDR(ctx.png, ctx.info, w, h, 8, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    std::vector<png_bytep> ptrs(h);
    for (int y = 0; y < h; ++y)
        ptrs[y] = const_cast<png_bytep>(data.data() + static_cast<size_t>(y) * w * channels);
    png_write_image(ctx.png, ptrs.data());
    png_write_end(ctx.png, nullptr);
}

}  // namespace

Image read_image_png(const std::string& path) {
    int h = 0, w = 0;
    auto rows = read_rows(path, 3, h, w);
    Image img(h, w, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) = rows[y][x * 3 + ch] / 255.f;
    return img;
}

LabelMask read_label_png(const std::string& path) {
    int h = 0, w = 0;
    auto rows = read_rows(path, 1, h, w);
    LabelMask m(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.at(y, x) = rows[y][x];
    return m;
}

void write_image_png(const std::string& path, const Image& img) {
    if (img.c != 3) throw Error("write_image_png expects 3 channels");
    std::vector<png_byte> data(static_cast<size_t>(img.h) * img.w * 3);
    for (size_t i = 0; i < data.size(); ++i) {
        float v = img.data[i];
        v = v < 0.f ? 0.f : (v > 1.f ? 1.f : v);
        data[i] = static_cast<png_byte>(v * 255.f + 0.5f);
    }
    write_rows(path, img.h, img.w, 3, data);
}

void write_label_png(const std::string& path, const LabelMask& mask) {
    std::vector<png_byte> data(mask.v.begin(), mask.v.end());
    write_rows(path, mask.h, mask.w, 1, data);
}

void write_mask_png(const std::string& path, const Mask& mask) {
    std::vector<png_byte> data(mask.v.begin(), mask.v.end());
    write_rows(path, mask.h, mask.w, 1, data);
}

}  // namespace vlseg
