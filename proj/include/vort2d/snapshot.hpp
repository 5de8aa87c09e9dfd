#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "vort2d/field.hpp"

namespace vort2d {

// Layout: magic "VORT2D01" (8B), endianness flag (1B, 0x01 = little),
// grid n (u32), time in days (f64), then n*n f64 of physical vorticity,
// row-major. Total 21 + 8 n² bytes.
inline constexpr char kSnapshotMagic[8] = {'V', 'O', 'R', 'T', '2', 'D', '0', '1'};

inline void write_snapshot(const PhysicalField& w, double t_days,
                           const std::filesystem::path& path) {
    static_assert(std::endian::native == std::endian::little,
                  "snapshot writer assumes a little-endian host");
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(kSnapshotMagic, 8);
        const char endian = 0x01;
        out.write(&endian, 1);
        const std::uint32_t n = std::uint32_t(w.n());
        out.write(reinterpret_cast<const char*>(&n), 4);
        out.write(reinterpret_cast<const char*>(&t_days), 8);
        out.write(reinterpret_cast<const char*>(w.v.data()),
                  std::streamsize(w.v.size() * sizeof(double)));
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

struct Snapshot {
    PhysicalField w;
    double t_days = 0.0;
};

inline Snapshot read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kSnapshotMagic, 8) != 0)
        throw IoError("snapshot magic mismatch in " + path.string());
    char endian = 0;
    in.read(&endian, 1);
    if (!in || endian != 0x01)
        throw IoError("snapshot endianness flag unsupported in " + path.string());
    std::uint32_t n = 0;
    in.read(reinterpret_cast<char*>(&n), 4);
    Snapshot snap;
    in.read(reinterpret_cast<char*>(&snap.t_days), 8);
    if (!in) throw IoError("snapshot truncated: " + path.string());
    snap.w = PhysicalField(grid_of(int(n)));
    in.read(reinterpret_cast<char*>(snap.w.v.data()),
            std::streamsize(snap.w.v.size() * sizeof(double)));
    if (!in || in.gcount() != std::streamsize(snap.w.v.size() * sizeof(double)))
        throw IoError("snapshot truncated: " + path.string());
    char extra;
    if (in.read(&extra, 1))
        throw IoError("snapshot has trailing bytes: " + path.string());
    return snap;
}

}  // namespace vort2d
