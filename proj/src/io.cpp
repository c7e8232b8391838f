#include "mist/io.hpp"

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "mist/errors.hpp"

namespace mist::io {

std::uint64_t fnv1a(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a(const std::string& s) { return fnv1a(s.data(), s.size()); }

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string file_hash_hex(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("file_hash_hex: cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (f) {
        f.read(buf, sizeof(buf));
        const auto got = f.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    return hash_hex(h);
}

std::string canonical(const nlohmann::json& j) { return j.dump(); }

namespace {

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.parent_path().empty()
                         ? std::filesystem::path(path.string() + ".tmp." + std::to_string(::getpid()))
                         : path.parent_path() / (path.filename().string() + ".tmp." +
                                                 std::to_string(::getpid()));
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("write: cannot open " + tmp.string());
        f.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!f) throw Error("write: failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        os << (c ? "," : "") << table.header[c];
    }
    os << "\n";
    const std::size_t rows = table.columns.empty() ? 0 : table.columns.front().size();
    for (const auto& col : table.columns) {
        if (col.size() != rows) throw Error("write_csv: ragged columns");
    }
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            os << (c ? "," : "") << table.columns[c][r];
        }
        os << "\n";
    }
    atomic_write(path, os.str());
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    atomic_write(path, content);
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    atomic_write(path, j.dump(2) + "\n");
}

}  // namespace mist::io
