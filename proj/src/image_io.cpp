#include "batchlens/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "batchlens/errors.hpp"

namespace batchlens::imaging {

namespace fs = std::filesystem;

namespace {

std::string read_all(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(const std::string& buf, size_t& pos) {
    for (;;) {
        while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
        if (pos < buf.size() && buf[pos] == '#') {
            while (pos < buf.size() && buf[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    const size_t start = pos;
    while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    return buf.substr(start, pos - start);
}

int pnm_int(const std::string& buf, size_t& pos, const fs::path& path) {
    const std::string tok = pnm_token(buf, pos);
    if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(c); }))
        throw InputError("malformed PGM header in " + path.string());
    return std::stoi(tok);
}

Image load_pgm(const fs::path& path) {
    const std::string buf = read_all(path);
    size_t pos = 0;
    if (pnm_token(buf, pos) != "P5") throw InputError("not a binary PGM (P5): " + path.string());
    const int w = pnm_int(buf, pos, path);
    const int h = pnm_int(buf, pos, path);
    const int maxval = pnm_int(buf, pos, path);
    if (w <= 0 || h <= 0) throw InputError("malformed PGM dimensions in " + path.string());
    if (maxval <= 0 || maxval > 65535)
        throw InputError("unsupported PGM bit depth (maxval " + std::to_string(maxval) + ") in " + path.string());
    ++pos;  // single whitespace before raster
    const size_t bytes_per = maxval < 256 ? 1 : 2;
    const size_t need = static_cast<size_t>(w) * h * bytes_per;
    if (buf.size() < pos + need) throw InputError("truncated PGM raster in " + path.string());

    Image img(h, w, 1);
    const auto* raster = reinterpret_cast<const unsigned char*>(buf.data() + pos);
    for (size_t i = 0; i < img.data.size(); ++i) {
        unsigned v = bytes_per == 1 ? raster[i] : (raster[2 * i] << 8u) | raster[2 * i + 1];
        img.data[i] = std::min(1.0, static_cast<double>(v) / maxval);
    }
    return img;
}

struct PngReadGuard {
    png_structp png = nullptr;
    png_infop info = nullptr;
    FILE* fp = nullptr;
    ~PngReadGuard() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) { throw InputError(std::string("PNG: ") + msg); }
void png_warning_fn(png_structp, png_const_charp) {}

Image load_png(const fs::path& path) {
    PngReadGuard g;
    g.fp = std::fopen(path.c_str(), "rb");
    if (!g.fp) throw InputError("cannot open file: " + path.string());
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, g.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw InputError("not a PNG file: " + path.string());

    g.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    if (!g.png) throw std::runtime_error("png_create_read_struct failed");
    g.info = png_create_info_struct(g.png);
    if (!g.info) throw std::runtime_error("png_create_info_struct failed");

    png_init_io(g.png, g.fp);
    png_set_sig_bytes(g.png, 8);
    png_read_info(g.png, g.info);

    const int color = png_get_color_type(g.png, g.info);
    const int depth = png_get_bit_depth(g.png, g.info);
    if (depth != 1 && depth != 2 && depth != 4 && depth != 8 && depth != 16)
        throw InputError("unsupported PNG bit depth " + std::to_string(depth) + " in " + path.string());
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(g.png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(g.png);
    if (png_get_valid(g.png, g.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(g.png);
    if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(g.png, g.info, PNG_INFO_tRNS)) png_set_strip_alpha(g.png);
    if (depth == 16) png_set_swap(g.png);  // host-order 16-bit samples
    png_read_update_info(g.png, g.info);

    const int w = static_cast<int>(png_get_image_width(g.png, g.info));
    const int h = static_cast<int>(png_get_image_height(g.png, g.info));
    const int ch = png_get_channels(g.png, g.info);
    const int out_depth = png_get_bit_depth(g.png, g.info);
    if (ch != 1 && ch != 3) throw InputError("unsupported PNG channel layout in " + path.string());

    const size_t rowbytes = png_get_rowbytes(g.png, g.info);
    std::vector<unsigned char> raw(rowbytes * h);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = raw.data() + rowbytes * y;
    png_read_image(g.png, rows.data());
    png_read_end(g.png, nullptr);

    Image img(h, w, ch);
    const double scale = out_depth == 16 ? 65535.0 : 255.0;
    for (int y = 0; y < h; ++y) {
        for (size_t i = 0; i < static_cast<size_t>(w) * ch; ++i) {
            unsigned v;
            if (out_depth == 16) {
                uint16_t s;
                std::copy_n(rows[y] + 2 * i, 2, reinterpret_cast<unsigned char*>(&s));
                v = s;
            } else {
                v = rows[y][i];
            }
            img.data[static_cast<size_t>(y) * w * ch + i] = v / scale;
        }
    }
    return img;
}

unsigned char to_byte(double v) { return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

}  // namespace

Image load_image(const fs::path& path, std::optional<int> square_size) {
    if (!fs::exists(path)) throw InputError("file not found: " + path.string());
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });

    Image img;
    if (ext == ".pgm") {
        img = load_pgm(path);
    } else if (ext == ".png") {
        img = load_png(path);
    } else {
        throw InputError("unsupported image format '" + ext + "': " + path.string());
    }
    if (square_size) img = resize_bilinear(img, *square_size, *square_size);
    img.validate();
    return img;
}

void save_pgm(const Image& img, const fs::path& path) {
    if (img.channels != 1) throw std::invalid_argument("PGM output needs a single-channel image");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write file: " + path.string());
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    for (double v : img.data) out.put(static_cast<char>(to_byte(v)));
}

void save_png(const Image& img, const fs::path& path) {
    if (img.channels != 1 && img.channels != 3) throw std::invalid_argument("PNG output needs 1 or 3 channels");
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw InputError("cannot write file: " + path.string());
    std::unique_ptr<FILE, int (*)(FILE*)> file(fp, std::fclose);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    png_infop info = png_create_info_struct(png);
    struct Cleanup {
        png_structp* p;
        png_infop* i;
        ~Cleanup() { png_destroy_write_struct(p, i); }
    } cleanup{&png, &info};

    png_init_io(png, fp);
    png_set_IHDR(png, info, img.width, img.height, 8, img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> row(static_cast<size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (size_t i = 0; i < row.size(); ++i) row[i] = to_byte(img.data[static_cast<size_t>(y) * row.size() + i]);
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
}

std::vector<ManifestEntry> read_manifest(const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw InputError("cannot open manifest: " + manifest.string());
    const fs::path base = manifest.parent_path();
    std::vector<ManifestEntry> out;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
        size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;
        line = line.substr(start);
        fs::path p(line);
        out.push_back({line, p.is_absolute() ? p : base / p});
    }
    return out;
}

}  // namespace batchlens::imaging
