#include "morphforge/image_io.hpp"

#include <png.h>

#include <csetjmp>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

namespace morphforge::imagekit {

namespace {



bool has_suffix(const std::string& s, const std::string& suf) {
    if (s.size() < suf.size()) return false;
    std::string tail = s.substr(s.size() - suf.size());
    for (auto& c : tail) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return tail == suf;
}

// ---------------------------------------------------------------- PNM ----

// Skips whitespace and '#' comments between PNM header tokens.
int pnm_token(std::istream& in) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF) throw DecodeError("PNM: truncated header");
    int value = 0;
    bool any = false;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        any = true;
        c = in.get();
    }
    if (!any) throw DecodeError("PNM: malformed header token");
    return value;
}

Image load_pnm(std::istream& in, int channels) {
    int w = pnm_token(in);
    int h = pnm_token(in);
    int maxval = pnm_token(in);
    if (w < 1 || h < 1) throw DecodeError("PNM: bad dimensions");
    if (maxval != 255) throw DecodeError("PNM: only 8-bit (maxval 255) supported");
    // The single whitespace byte after maxval was consumed by pnm_token.
    std::vector<unsigned char> row(static_cast<std::size_t>(w) * channels);
    Image img(w, h, channels);
    for (int y = 0; y < h; ++y) {
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
        if (in.gcount() != static_cast<std::streamsize>(row.size()))
            throw DecodeError("PNM: truncated pixel data");
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(x, y, c) = row[static_cast<std::size_t>(x) * channels + c] / 255.0;
    }
    return img;
}

void save_pnm(const Image& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << (img.channels == 1 ? "P5" : "P6") << "\n"
        << img.width << " " << img.height << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                row[static_cast<std::size_t>(x) * img.channels + c] = quantize8(img.at(x, y, c));
        out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }
    if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------- PNG ----

struct FileHandle {
    std::FILE* f = nullptr;
    FileHandle(const std::string& path, const char* mode) : f(std::fopen(path.c_str(), mode)) {}
    ~FileHandle() {
        if (f) std::fclose(f);
    }
};

// libpng reports errors through a callback that must not return; we stash
// the message and longjmp back to the setjmp point armed below. No C++
// object is constructed between the jump source and target.
void png_error_stash(png_structp png, png_const_charp msg) {
    auto* out = static_cast<std::string*>(png_get_error_ptr(png));
    if (out) *out = msg;
    png_longjmp(png, 1);
}
void png_warning_sink(png_structp, png_const_charp) {}

struct PngRead {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngRead() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngWrite {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWrite() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

Image load_png(const std::string& path, std::FILE* f) {
    std::string errmsg;
    Image img;
    std::vector<unsigned char> row;
    PngRead r;

    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &errmsg, png_error_stash, png_warning_sink);
    if (!r.png) throw DecodeError("PNG: cannot create read struct");
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw DecodeError("PNG: cannot create info struct");

    if (setjmp(png_jmpbuf(r.png)))
        throw DecodeError("PNG: " + errmsg + ": " + path);

    png_init_io(r.png, f);
    png_read_info(r.png, r.info);

    const png_uint_32 w = png_get_image_width(r.png, r.info);
    const png_uint_32 h = png_get_image_height(r.png, r.info);
    const int depth = png_get_bit_depth(r.png, r.info);
    const int color = png_get_color_type(r.png, r.info);

    if (depth != 8)
        throw DecodeError("PNG: unsupported bit depth " + std::to_string(depth) + " in " + path);
    if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB)
        throw DecodeError("PNG: unsupported color type " + std::to_string(color) + " in " + path);
    if (png_get_interlace_type(r.png, r.info) != PNG_INTERLACE_NONE)
        throw DecodeError("PNG: interlaced images unsupported: " + path);

    const int channels = (color == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
    img = Image(static_cast<int>(w), static_cast<int>(h), channels);
    row.resize(static_cast<std::size_t>(w) * channels);
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(r.png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(static_cast<int>(x), static_cast<int>(y), c) =
                    row[static_cast<std::size_t>(x) * channels + c] / 255.0;
    }
    png_read_end(r.png, nullptr);
    return img;
}

void save_png(const Image& img, const std::string& path) {
    FileHandle fh(path, "wb");
    if (!fh.f) throw IoError("cannot open for writing: " + path);

    std::string errmsg;
    std::vector<unsigned char> row;
    PngWrite w;

    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &errmsg, png_error_stash, png_warning_sink);
    if (!w.png) throw IoError("PNG: cannot create write struct");
    w.info = png_create_info_struct(w.png);
    if (!w.info) throw IoError("PNG: cannot create info struct");

    if (setjmp(png_jmpbuf(w.png)))
        throw IoError("PNG: " + errmsg + ": " + path);

    png_init_io(w.png, fh.f);
    png_set_IHDR(w.png, w.info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);

    row.resize(static_cast<std::size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                row[static_cast<std::size_t>(x) * img.channels + c] = quantize8(img.at(x, y, c));
        png_write_row(w.png, row.data());
    }
    png_write_end(w.png, nullptr);
}

}  // namespace

Image load_image(const std::string& path) {
    FileHandle fh(path, "rb");
    if (!fh.f) throw IoError("cannot open: " + path);
    unsigned char magic[2] = {0, 0};
    if (std::fread(magic, 1, 2, fh.f) != 2) throw DecodeError("file too short: " + path);

    if (magic[0] == 'P' && (magic[1] == '5' || magic[1] == '6')) {
        std::ifstream in(path, std::ios::binary);
        in.ignore(2);
        return load_pnm(in, magic[1] == '5' ? 1 : 3);
    }
    if (magic[0] == 0x89 && magic[1] == 'P') {
        std::rewind(fh.f);
        return load_png(path, fh.f);
    }
    throw DecodeError("unsupported image format: " + path);
}

void save_image(const Image& img, const std::string& path) {
    if (img.width < 1 || img.height < 1 || (img.channels != 1 && img.channels != 3))
        throw InvalidArgument("save_image: invalid image");
    if (has_suffix(path, ".png")) {
        save_png(img, path);
    } else if (has_suffix(path, ".ppm")) {
        if (img.channels != 3) throw InvalidArgument("PPM requires 3 channels: " + path);
        save_pnm(img, path);
    } else if (has_suffix(path, ".pgm")) {
        if (img.channels != 1) throw InvalidArgument("PGM requires 1 channel: " + path);
        save_pnm(img, path);
    } else {
        throw InvalidArgument("unknown image extension: " + path);
    }
}

}  // namespace morphforge::imagekit
