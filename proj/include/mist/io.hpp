// io.hpp — CSV/JSON output helpers, content hashing, atomic file writes.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mist::io {

// FNV-1a 64-bit; used for config keys and output-manifest content hashes.
std::uint64_t fnv1a(const void* data, std::size_t len);
std::uint64_t fnv1a(const std::string& s);
std::string hash_hex(std::uint64_t h);

// Hash of a file's contents (streaming).
std::string file_hash_hex(const std::filesystem::path& path);

// Canonical serialization for hashing: compact dump with sorted keys
// (nlohmann::json objects iterate in sorted key order already).
std::string canonical(const nlohmann::json& j);

// One CSV table; all columns the same length. Values are written with
// max_digits10 so round-trips are bit-exact.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);

// Writes text atomically (temp file + rename).
void write_text(const std::filesystem::path& path, const std::string& content);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace mist::io
