#include "axmag/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace axmag {
namespace fs = std::filesystem;

namespace {

constexpr std::uint8_t kMagic[4] = {0x41, 0x58, 0x54, 0x46};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_png_signature(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    unsigned char sig[8] = {};
    in.read(reinterpret_cast<char*>(sig), 8);
    return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

Frame read_png(const fs::path& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("corrupt PNG: " + path.string());
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);
    if (bit_depth != 8 && bit_depth != 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported PNG bit depth in " + path.string());
    }
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
        png_set_strip_alpha(png);
    }
    if (bit_depth == 16) png_set_swap(png);  // little-endian 16-bit samples
    png_read_update_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    const int depth = png_get_bit_depth(png, info);
    const std::size_t rowbytes = png_get_rowbytes(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("unsupported PNG channel layout in " + path.string());
    }

    std::vector<std::uint8_t> buffer(rowbytes * height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = buffer.data() + rowbytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Frame frame(height, width, channels);
    auto out = frame.data();
    const std::size_t n = out.size();
    if (depth == 16) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint16_t v = static_cast<std::uint16_t>(buffer[2 * i] | (buffer[2 * i + 1] << 8));
            out[i] = static_cast<float>(v / 65535.0);
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<float>(buffer[i] / 255.0);
    }
    return frame;
}

}  // namespace

std::size_t Tensor::element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

std::vector<std::uint8_t> encode_axtf(const Tensor& tensor) {
    if (tensor.dims.size() > 255) throw ShapeError("AXTF rank exceeds 255");
    if (tensor.element_count() != tensor.values.size()) throw ShapeError("tensor payload does not match dims");
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    out.push_back(kAxtfVersion);
    out.push_back(kAxtfFloat32);
    out.push_back(static_cast<std::uint8_t>(tensor.dims.size()));
    for (auto d : tensor.dims) put_u32(out, d);
    out.reserve(out.size() + 4 * tensor.values.size());
    for (float v : tensor.values) put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

Tensor decode_axtf(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 7 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw IoError("not an AXTF file");
    if (bytes[4] != kAxtfVersion) throw IoError("unsupported AXTF version");
    if (bytes[5] != kAxtfFloat32) throw IoError("unsupported AXTF dtype");
    const std::size_t rank = bytes[6];
    std::size_t pos = 7;
    if (bytes.size() < pos + 4 * rank) throw IoError("truncated AXTF header");
    Tensor t;
    for (std::size_t i = 0; i < rank; ++i, pos += 4) t.dims.push_back(get_u32(&bytes[pos]));
    const std::size_t n = t.element_count();
    if (bytes.size() != pos + 4 * n) throw IoError("AXTF payload size mismatch");
    t.values.resize(n);
    for (std::size_t i = 0; i < n; ++i, pos += 4) t.values[i] = std::bit_cast<float>(get_u32(&bytes[pos]));
    return t;
}

void write_axtf(const fs::path& path, const Tensor& tensor) {
    const auto bytes = encode_axtf(tensor);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

Tensor read_axtf(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_axtf(bytes);
}

Tensor frame_to_tensor(const Frame& frame) {
    Tensor t;
    t.dims = {static_cast<std::uint32_t>(frame.height()), static_cast<std::uint32_t>(frame.width()),
              static_cast<std::uint32_t>(frame.channels())};
    t.values.assign(frame.data().begin(), frame.data().end());
    return t;
}

Frame tensor_to_frame(const Tensor& tensor) {
    if (tensor.dims.size() == 2) {
        return Frame(static_cast<int>(tensor.dims[0]), static_cast<int>(tensor.dims[1]), 1, tensor.values);
    }
    if (tensor.dims.size() == 3) {
        return Frame(static_cast<int>(tensor.dims[0]), static_cast<int>(tensor.dims[1]),
                     static_cast<int>(tensor.dims[2]), tensor.values);
    }
    throw ShapeError("frame tensors must have rank 2 or 3");
}

Frame load_frame(const fs::path& path) {
    if (!fs::exists(path)) throw IoError("missing file " + path.string());
    if (has_png_signature(path)) return read_png(path);
    return tensor_to_frame(read_axtf(path));
}

void save_png(const fs::path& path, const Frame& frame) {
    if (frame.channels() != 1 && frame.channels() != 3) throw ShapeError("PNG export needs 1 or 3 channels");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw IoError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG write failed for " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, frame.width(), frame.height(), 8,
                 frame.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);

    const std::size_t row = static_cast<std::size_t>(frame.width()) * frame.channels();
    std::vector<std::uint8_t> buffer(row);
    auto data = frame.data();
    for (int y = 0; y < frame.height(); ++y) {
        for (std::size_t i = 0; i < row; ++i) {
            const float v = std::clamp(data[y * row + i], 0.0f, 1.0f);
            buffer[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
        }
        png_write_row(png, buffer.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

std::vector<fs::path> list_frames(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".png") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<Frame> load_sequence(const fs::path& dir) {
    std::vector<Frame> frames;
    for (const auto& p : list_frames(dir)) frames.push_back(load_frame(p));
    return frames;
}

void save_sequence(const fs::path& dir, const std::vector<Frame>& frames) {
    fs::create_directories(dir);
    char name[32];
    for (std::size_t i = 0; i < frames.size(); ++i) {
        std::snprintf(name, sizeof(name), "%06zu.png", i);
        save_png(dir / name, frames[i]);
    }
}

}  // namespace axmag
