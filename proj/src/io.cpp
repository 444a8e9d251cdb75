#include "seamgrid/io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace seamgrid {

namespace {

static_assert(std::endian::native == std::endian::little,
              "serialization assumes a little-endian host");

struct Writer {
    std::ofstream out;
    explicit Writer(const std::filesystem::path& path)
        : out(path, std::ios::binary | std::ios::trunc) {
        if (!out) throw IoError("cannot open " + path.string() + " for writing");
    }
    void bytes(const void* p, std::size_t n) { out.write(static_cast<const char*>(p), n); }
    void u32(uint32_t v) { bytes(&v, 4); }
    void f64(double v) { bytes(&v, 8); }
    void f32_array(std::span<const double> values) {
        std::vector<float> tmp(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) tmp[i] = float(values[i]);
        bytes(tmp.data(), tmp.size() * 4);
    }
    void close(const std::filesystem::path& path) {
        out.flush();
        if (!out) throw IoError("write failed: " + path.string());
    }
};

struct Reader {
    std::ifstream in;
    std::filesystem::path path;
    explicit Reader(const std::filesystem::path& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw IoError("cannot open " + p.string());
    }
    void bytes(void* p, std::size_t n) {
        in.read(static_cast<char*>(p), std::streamsize(n));
        if (std::size_t(in.gcount()) != n) throw IoError("truncated file: " + path.string());
    }
    uint32_t u32() {
        uint32_t v;
        bytes(&v, 4);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    void f32_array(std::vector<double>& out_values, std::size_t count) {
        std::vector<float> tmp(count);
        bytes(tmp.data(), count * 4);
        out_values.resize(count);
        for (std::size_t i = 0; i < count; ++i) out_values[i] = double(tmp[i]);
    }
    void expect_magic(const char expected[4]) {
        char magic[4];
        bytes(magic, 4);
        if (std::memcmp(magic, expected, 4) != 0)
            throw IoError("bad magic in " + path.string() + " (expected " +
                          std::string(expected, 4) + ")");
    }
    void expect_version(uint32_t v) {
        uint32_t got = u32();
        if (got != v)
            throw IoError("unsupported version " + std::to_string(got) + " in " + path.string());
    }
};

void write_field_payload(Writer& w, const char magic[4], const RadianceField& field,
                         std::span<const double> density, std::span<const double> coeffs) {
    w.bytes(magic, 4);
    w.u32(1);
    w.u32(uint32_t(field.color.degree));
    w.u32(uint32_t(field.density.dims.nx));
    w.u32(uint32_t(field.density.dims.ny));
    w.u32(uint32_t(field.density.dims.nz));
    w.u32(uint32_t(field.color.dims.nx));
    w.u32(uint32_t(field.color.dims.ny));
    w.u32(uint32_t(field.color.dims.nz));
    for (int a = 0; a < 3; ++a) w.f64(field.aabb.min[a]);
    for (int a = 0; a < 3; ++a) w.f64(field.aabb.max[a]);
    w.f32_array(density);
    w.f32_array(coeffs);
}

RadianceField read_field_payload(Reader& r, const char magic[4]) {
    r.expect_magic(magic);
    r.expect_version(1);
    RadianceField f;
    f.color.degree = int(r.u32());
    f.density.dims = {int(r.u32()), int(r.u32()), int(r.u32())};
    f.color.dims = {int(r.u32()), int(r.u32()), int(r.u32())};
    for (int a = 0; a < 3; ++a) f.aabb.min[a] = r.f64();
    for (int a = 0; a < 3; ++a) f.aabb.max[a] = r.f64();
    if (f.color.degree != 0 && f.color.degree != 1)
        throw IoError("invalid sh degree in " + r.path.string());
    if (f.density.dims.nx <= 0 || f.density.dims.ny <= 0 || f.density.dims.nz <= 0 ||
        f.color.dims.nx <= 0 || f.color.dims.ny <= 0 || f.color.dims.nz <= 0)
        throw IoError("invalid resolution in " + r.path.string());
    r.f32_array(f.density.values, f.density.dims.node_count());
    r.f32_array(f.color.coeffs, f.color.coeff_count());
    return f;
}

}  // namespace

void save_field(const RadianceField& field, const std::filesystem::path& path) {
    field.validate();
    Writer w(path);
    write_field_payload(w, "SNRF", field, field.density.values, field.color.coeffs);
    w.close(path);
}

RadianceField load_field(const std::filesystem::path& path) {
    Reader r(path);
    RadianceField f = read_field_payload(r, "SNRF");
    f.validate();
    return f;
}

void save_delta(std::span<const double> delta, const RadianceField& target,
                const std::filesystem::path& path) {
    if (delta.size() != target.color.coeff_count())
        throw IoError("delta size does not match the target color grid");
    std::vector<double> zeros(target.density.dims.node_count(), 0.0);
    Writer w(path);
    write_field_payload(w, "SNRD", target, zeros, delta);
    w.close(path);
}

std::vector<double> load_delta(const std::filesystem::path& path, const RadianceField& target) {
    Reader r(path);
    RadianceField f = read_field_payload(r, "SNRD");
    if (!(f.color.dims == target.color.dims) || f.color.degree != target.color.degree)
        throw IoError("delta in " + path.string() + " does not match the target color grid");
    return std::move(f.color.coeffs);
}

void save_ppm(const ImageBuffer& img, const std::filesystem::path& path) {
    Writer w(path);
    std::string header =
        "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    w.bytes(header.data(), header.size());
    std::vector<unsigned char> bytes(img.rgb.size());
    for (std::size_t i = 0; i < img.rgb.size(); ++i) {
        float c = img.rgb[i];
        c = c < 0.f ? 0.f : (c > 1.f ? 1.f : c);
        bytes[i] = static_cast<unsigned char>(std::lround(c * 255.0f));
    }
    w.bytes(bytes.data(), bytes.size());
    w.close(path);
}

void save_raw(const ImageBuffer& img, const std::filesystem::path& path) {
    Writer w(path);
    w.bytes("SNRI", 4);
    w.u32(1);
    w.u32(uint32_t(img.width));
    w.u32(uint32_t(img.height));
    w.bytes(img.rgb.data(), img.rgb.size() * 4);
    w.close(path);
}

ImageBuffer load_raw(const std::filesystem::path& path) {
    Reader r(path);
    r.expect_magic("SNRI");
    r.expect_version(1);
    ImageBuffer img;
    img.width = int(r.u32());
    img.height = int(r.u32());
    if (img.width <= 0 || img.height <= 0)
        throw IoError("invalid image size in " + path.string());
    img.rgb.resize(std::size_t(img.width) * img.height * 3);
    r.bytes(img.rgb.data(), img.rgb.size() * 4);
    return img;
}

}  // namespace seamgrid
