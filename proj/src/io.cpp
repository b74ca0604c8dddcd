#include "qsr/io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace qsr {

namespace {

struct PathPair {
    std::filesystem::path qmap;
    std::filesystem::path qhdr;
};

PathPair derive_paths(const std::filesystem::path& path) {
    std::filesystem::path base = path;
    if (base.extension() == ".qmap" || base.extension() == ".qhdr") {
        base.replace_extension();
    }
    PathPair p;
    p.qmap = base;
    p.qmap += ".qmap";
    p.qhdr = base;
    p.qhdr += ".qhdr";
    return p;
}

// Payload values are binary32; serialization goes through the byte level
// so the on-disk layout is fixed regardless of host endianness.
static_assert(sizeof(float) == 4);

float load_f32le(const unsigned char* bytes) {
    std::uint32_t u = static_cast<std::uint32_t>(bytes[0]) |
                      (static_cast<std::uint32_t>(bytes[1]) << 8) |
                      (static_cast<std::uint32_t>(bytes[2]) << 16) |
                      (static_cast<std::uint32_t>(bytes[3]) << 24);
    return std::bit_cast<float>(u);
}

void store_f32le(float v, unsigned char* bytes) {
    const std::uint32_t u = std::bit_cast<std::uint32_t>(v);
    bytes[0] = static_cast<unsigned char>(u & 0xff);
    bytes[1] = static_cast<unsigned char>((u >> 8) & 0xff);
    bytes[2] = static_cast<unsigned char>((u >> 16) & 0xff);
    bytes[3] = static_cast<unsigned char>((u >> 24) & 0xff);
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

[[noreturn]] void bad_header(const std::filesystem::path& p, const std::string& what) {
    throw std::runtime_error("read_map: malformed header " + p.string() + ": " + what);
}

}  // namespace

Image read_map(const std::filesystem::path& path) {
    const PathPair p = derive_paths(path);

    std::ifstream hdr(p.qhdr);
    if (!hdr) throw std::runtime_error("read_map: cannot open " + p.qhdr.string());

    int width = -1, height = -1;
    double spacing_x = 0, spacing_y = 0;
    std::string label, units;
    bool have_label = false, have_units = false, have_dtype = false, have_order = false;

    std::string line;
    while (std::getline(hdr, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) bad_header(p.qhdr, "missing '=' in '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        try {
            if (key == "width") {
                width = std::stoi(value);
            } else if (key == "height") {
                height = std::stoi(value);
            } else if (key == "spacing_x") {
                spacing_x = std::stod(value);
            } else if (key == "spacing_y") {
                spacing_y = std::stod(value);
            } else if (key == "label") {
                label = value;
                have_label = true;
            } else if (key == "units") {
                units = value;
                have_units = true;
            } else if (key == "dtype") {
                if (value != "f32le") bad_header(p.qhdr, "unsupported dtype '" + value + "'");
                have_dtype = true;
            } else if (key == "order") {
                if (value != "row-major") bad_header(p.qhdr, "unsupported order '" + value + "'");
                have_order = true;
            } else {
                bad_header(p.qhdr, "unknown key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            bad_header(p.qhdr, "bad value for '" + key + "'");
        } catch (const std::out_of_range&) {
            bad_header(p.qhdr, "out-of-range value for '" + key + "'");
        }
    }
    if (width < 0 || height < 0 || !(spacing_x > 0) || !(spacing_y > 0) || !have_label ||
        !have_units || !have_dtype || !have_order) {
        bad_header(p.qhdr, "missing required key");
    }

    ImageGrid grid{width, height, spacing_x, spacing_y};
    grid.validate();

    std::ifstream payload(p.qmap, std::ios::binary);
    if (!payload) throw std::runtime_error("read_map: cannot open " + p.qmap.string());
    payload.seekg(0, std::ios::end);
    const auto file_size = static_cast<std::size_t>(payload.tellg());
    payload.seekg(0);
    const std::size_t expected = grid.size() * 4;
    if (file_size != expected) {
        throw std::runtime_error("read_map: payload size mismatch in " + p.qmap.string() +
                                 ": header declares " + std::to_string(expected) +
                                 " bytes, file has " + std::to_string(file_size));
    }
    std::vector<unsigned char> bytes(expected);
    payload.read(reinterpret_cast<char*>(bytes.data()),
                 static_cast<std::streamsize>(expected));
    if (!payload) throw std::runtime_error("read_map: short read from " + p.qmap.string());

    Image img(grid, 0.0, label, units);
    std::size_t off = 0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x, off += 4) {
            const float v = load_f32le(&bytes[off]);
            if (!std::isfinite(v)) {
                throw std::runtime_error("read_map: non-finite payload value in " +
                                         p.qmap.string() + " at (" + std::to_string(x) + "," +
                                         std::to_string(y) + ")");
            }
            img.values(y, x) = static_cast<double>(v);
        }
    }
    return img;
}

void write_map(const Image& map, const std::filesystem::path& path) {
    map.grid.validate();
    if (static_cast<std::size_t>(map.values.size()) != map.grid.size()) {
        throw std::invalid_argument("write_map: values size does not match grid");
    }
    const PathPair p = derive_paths(path);

    std::vector<unsigned char> bytes(map.grid.size() * 4);
    std::size_t off = 0;
    for (int y = 0; y < map.grid.height; ++y) {
        for (int x = 0; x < map.grid.width; ++x, off += 4) {
            const auto v = static_cast<float>(map.values(y, x));
            if (!std::isfinite(v)) {
                throw std::invalid_argument(
                    "write_map: value not finite in binary32 at (" + std::to_string(x) + "," +
                    std::to_string(y) + ")");
            }
            store_f32le(v, &bytes[off]);
        }
    }

    std::ofstream hdr(p.qhdr, std::ios::trunc);
    if (!hdr) throw std::runtime_error("write_map: cannot open " + p.qhdr.string());
    hdr << "width=" << map.grid.width << "\n"
        << "height=" << map.grid.height << "\n"
        << "spacing_x=" << format_double(map.grid.spacing_x) << "\n"
        << "spacing_y=" << format_double(map.grid.spacing_y) << "\n"
        << "label=" << map.label << "\n"
        << "units=" << map.units << "\n"
        << "dtype=f32le\n"
        << "order=row-major\n";
    hdr.flush();
    if (!hdr) throw std::runtime_error("write_map: failed writing " + p.qhdr.string());

    std::ofstream payload(p.qmap, std::ios::binary | std::ios::trunc);
    if (!payload) throw std::runtime_error("write_map: cannot open " + p.qmap.string());
    payload.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
    payload.flush();
    if (!payload) throw std::runtime_error("write_map: failed writing " + p.qmap.string());
}

BinaryMask read_mask(const std::filesystem::path& path) {
    const Image img = read_map(path);
    BinaryMask mask(img.grid);
    for (int y = 0; y < img.grid.height; ++y) {
        for (int x = 0; x < img.grid.width; ++x) {
            const double v = img.values(y, x);
            if (v != 0.0 && v != 1.0) {
                throw std::runtime_error("read_mask: value " + std::to_string(v) +
                                         " is not 0 or 1 in " + path.string());
            }
            mask.set(y, x, v == 1.0);
        }
    }
    return mask;
}

void write_mask(const BinaryMask& mask, const std::filesystem::path& path) {
    Image img(mask.grid, 0.0, "mask", "binary");
    for (int y = 0; y < mask.grid.height; ++y)
        for (int x = 0; x < mask.grid.width; ++x)
            img.values(y, x) = mask.at(y, x) ? 1.0 : 0.0;
    write_map(img, path);
}

}  // namespace qsr
