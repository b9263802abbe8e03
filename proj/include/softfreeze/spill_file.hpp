#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "softfreeze/cache_ledger.hpp"

namespace softfreeze {

// Frozen-tier spill file.
//
//   header:  "SFKV" | u32 version=1 | u32 head_dim | u32 layers | u32 heads
//   record:  u64 position | f64[layers*heads*head_dim] keys | f64[...] values
//
// All integers and doubles are little-endian; payloads are layer-major.
class SpillFile {
public:
    static constexpr std::uint32_t kVersion = 1;
    static constexpr std::size_t kHeaderBytes = 20;

    SpillFile(const std::filesystem::path& path, const KvShape& shape);

    // Appends a record and returns its byte offset.
    std::int64_t write(Position position, std::span<const double> keys,
                       std::span<const double> values);
    TokenKv read(std::int64_t offset, Position expected_position);

    std::size_t record_bytes() const;
    const std::filesystem::path& path() const { return path_; }

    // Reads the header of an existing spill file.
    static KvShape read_header(const std::filesystem::path& path);

private:
    std::filesystem::path path_;
    KvShape shape_;
    std::fstream file_;
    std::int64_t end_ = 0;
};

}  // namespace softfreeze
