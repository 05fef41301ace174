#include "ptycho/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "ptycho/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "raw float container assumes a little-endian host");

namespace ptycho {
namespace {

constexpr char kMagic[4] = {'P', 'T', 'Y', 'F'};

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw IoError(path + ": " + what);
}

std::ifstream openIn(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open for reading");
    return in;
}

std::ofstream openOut(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(path, "cannot open for writing");
    return out;
}

// PGM token reader: skips whitespace and '#' comment lines.
int pgmInt(std::istream& in, const std::string& path) {
    int c = in.get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#')
            while (c != EOF && c != '\n') c = in.get();
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c)) fail(path, "malformed PGM header");
    int value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        c = in.get();
    }
    return value;
}

void writeU32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t readU32(std::istream& in, const std::string& path) {
    std::uint32_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) fail(path, "truncated header");
    return v;
}

struct RawHeader {
    int n = 0;
    int channels = 0;
};

void writeRawHeader(std::ostream& out, int n, int channels) {
    out.write(kMagic, 4);
    writeU32(out, static_cast<std::uint32_t>(n));
    writeU32(out, static_cast<std::uint32_t>(channels));
    writeU32(out, 0u);
}

RawHeader readRawHeader(std::istream& in, const std::string& path) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        fail(path, "not a PTYF file");
    RawHeader h;
    h.n = static_cast<int>(readU32(in, path));
    h.channels = static_cast<int>(readU32(in, path));
    readU32(in, path);  // reserved
    if (h.n < 1 || h.channels < 1) fail(path, "bad PTYF dimensions");
    return h;
}

void writePlane(std::ostream& out, const double* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
}

void readPlane(std::istream& in, double* data, std::size_t count,
               const std::string& path) {
    if (!in.read(reinterpret_cast<char*>(data),
                 static_cast<std::streamsize>(count * sizeof(double))))
        fail(path, "truncated payload");
}

}  // namespace

RealGrid loadPgm(const std::string& path) {
    std::ifstream in = openIn(path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') fail(path, "not a binary (P5) PGM");
    const int w = pgmInt(in, path);
    const int h = pgmInt(in, path);
    const int maxval = pgmInt(in, path);
    if (w != h) fail(path, "image must be square, got " + std::to_string(w) + "x" +
                               std::to_string(h));
    if (maxval != 255) fail(path, "only maxval 255 is supported");
    // pgmInt consumed the single whitespace byte after maxval, so the stream
    // now sits exactly at the first pixel
    std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h);
    if (!in.read(reinterpret_cast<char*>(bytes.data()),
                 static_cast<std::streamsize>(bytes.size())))
        fail(path, "truncated pixel data");
    RealGrid img(w);
    for (std::size_t i = 0; i < bytes.size(); ++i) img[i] = bytes[i] / 255.0;
    return img;
}

void savePgm(const RealGrid& image, const std::string& path) {
    if (image.n() < 1) throw DomainError("savePgm: empty image");
    if (!image.isFinite()) throw DomainError("savePgm: non-finite image");
    std::ofstream out = openOut(path);
    out << "P5\n" << image.n() << " " << image.n() << "\n255\n";
    const auto [loIt, hiIt] =
        std::minmax_element(image.data(), image.data() + image.size());
    const double lo = *loIt, hi = *hiIt;
    const double scale = hi > lo ? 255.0 / (hi - lo) : 0.0;
    std::vector<unsigned char> bytes(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) {
        const double v = (image[i] - lo) * scale;
        bytes[i] = static_cast<unsigned char>(std::clamp(v + 0.5, 0.0, 255.0));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(path, "write failed");
}

RealGrid loadRawGrid(const std::string& path) {
    std::ifstream in = openIn(path);
    const RawHeader h = readRawHeader(in, path);
    if (h.channels != 1) fail(path, "expected 1 channel");
    RealGrid g(h.n);
    readPlane(in, g.data(), g.size(), path);
    return g;
}

void saveRawGrid(const RealGrid& grid, const std::string& path) {
    std::ofstream out = openOut(path);
    writeRawHeader(out, grid.n(), 1);
    writePlane(out, grid.data(), grid.size());
    if (!out) fail(path, "write failed");
}

ComplexField loadRawField(const std::string& path) {
    std::ifstream in = openIn(path);
    const RawHeader h = readRawHeader(in, path);
    if (h.channels != 2) fail(path, "expected 2 channels (real, imaginary)");
    ComplexField f(h.n);
    std::vector<double> plane(f.size());
    readPlane(in, plane.data(), plane.size(), path);
    for (std::size_t i = 0; i < f.size(); ++i) f[i].real(plane[i]);
    readPlane(in, plane.data(), plane.size(), path);
    for (std::size_t i = 0; i < f.size(); ++i) f[i].imag(plane[i]);
    return f;
}

void saveRawField(const ComplexField& field, const std::string& path) {
    std::ofstream out = openOut(path);
    writeRawHeader(out, field.n(), 2);
    std::vector<double> plane(field.size());
    for (std::size_t i = 0; i < field.size(); ++i) plane[i] = field[i].real();
    writePlane(out, plane.data(), plane.size());
    for (std::size_t i = 0; i < field.size(); ++i) plane[i] = field[i].imag();
    writePlane(out, plane.data(), plane.size());
    if (!out) fail(path, "write failed");
}

DiffractionStack loadRawStack(const std::string& path) {
    std::ifstream in = openIn(path);
    const RawHeader h = readRawHeader(in, path);
    DiffractionStack stack;
    stack.n = h.n;
    stack.patterns.reserve(static_cast<std::size_t>(h.channels));
    for (int k = 0; k < h.channels; ++k) {
        RealGrid g(h.n);
        readPlane(in, g.data(), g.size(), path);
        stack.patterns.push_back(std::move(g));
    }
    return stack;
}

void saveRawStack(const DiffractionStack& stack, const std::string& path) {
    if (stack.count() < 1) throw DomainError("saveRawStack: empty stack");
    std::ofstream out = openOut(path);
    writeRawHeader(out, stack.n, stack.count());
    for (const RealGrid& g : stack.patterns) {
        if (g.n() != stack.n) throw DomainError("saveRawStack: ragged stack");
        writePlane(out, g.data(), g.size());
    }
    if (!out) fail(path, "write failed");
}

RealGrid loadImage(const std::string& path) {
    std::ifstream in = openIn(path);
    char magic[4] = {};
    in.read(magic, 4);
    in.close();
    if (magic[0] == 'P' && magic[1] == '5') return loadPgm(path);
    if (std::memcmp(magic, kMagic, 4) == 0) return loadRawGrid(path);
    fail(path, "unrecognized image format (expected P5 PGM or PTYF)");
}

}  // namespace ptycho
