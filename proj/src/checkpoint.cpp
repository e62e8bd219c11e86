#include "semharq/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace semharq {

namespace {

void write_f32_le(std::ostream& os, double v) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    unsigned char bytes[4] = {static_cast<unsigned char>(bits & 0xFF),
                              static_cast<unsigned char>((bits >> 8) & 0xFF),
                              static_cast<unsigned char>((bits >> 16) & 0xFF),
                              static_cast<unsigned char>((bits >> 24) & 0xFF)};
    os.write(reinterpret_cast<const char*>(bytes), 4);
}

double read_f32_le(std::istream& is) {
    unsigned char bytes[4];
    is.read(reinterpret_cast<char*>(bytes), 4);
    if (!is) throw std::runtime_error("checkpoint: truncated payload");
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                               (static_cast<std::uint32_t>(bytes[1]) << 8) |
                               (static_cast<std::uint32_t>(bytes[2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[3]) << 24);
    float f;
    std::memcpy(&f, &bits, 4);
    return static_cast<double>(f);
}

std::vector<ManifestEntry> read_manifest(std::istream& is, const std::string& path) {
    std::string line;
    if (!std::getline(is, line) || line != kCheckpointMagic) {
        throw std::runtime_error("checkpoint: bad header in " + path);
    }
    if (!std::getline(is, line)) throw std::runtime_error("checkpoint: missing count");
    const std::size_t count = std::stoull(line);
    std::vector<ManifestEntry> manifest(count);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::getline(is, line)) throw std::runtime_error("checkpoint: truncated manifest");
        std::istringstream ls(line);
        ManifestEntry& e = manifest[i];
        ls >> e.name;
        std::size_t d;
        while (ls >> d) e.shape.push_back(d);
        if (e.name.empty() || e.shape.empty()) {
            throw std::runtime_error("checkpoint: malformed manifest line: " + line);
        }
    }
    return manifest;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<Var>& params) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    os << kCheckpointMagic << "\n" << params.size() << "\n";
    for (const auto& p : params) {
        if (p->name.empty()) throw std::invalid_argument("save_checkpoint: unnamed parameter");
        os << p->name;
        for (std::size_t d : p->value.shape) os << " " << d;
        os << "\n";
    }
    for (const auto& p : params) {
        for (double v : p->value.data) write_f32_le(os, v);
    }
    if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

void load_checkpoint(const std::string& path, const std::vector<Var>& params) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
    const auto manifest = read_manifest(is, path);
    if (manifest.size() != params.size()) {
        throw std::runtime_error("checkpoint: parameter count mismatch in " + path);
    }
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        if (manifest[i].name != params[i]->name || manifest[i].shape != params[i]->value.shape) {
            throw std::runtime_error("checkpoint: manifest mismatch at " + manifest[i].name +
                                     " in " + path);
        }
    }
    for (const auto& p : params) {
        for (double& v : p->value.data) v = read_f32_le(is);
    }
}

std::vector<ManifestEntry> read_checkpoint_manifest(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
    return read_manifest(is, path);
}

}  // namespace semharq
