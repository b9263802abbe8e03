#include "softfreeze/spill_file.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <string>

#include "softfreeze/errors.hpp"

namespace softfreeze {
namespace {

constexpr std::array<char, 4> kMagic = {'S', 'F', 'K', 'V'};

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
    static_assert(sizeof(T) == 4 || sizeof(T) == 8);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
            std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        }
    }
    out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get_le(const unsigned char* in) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, in, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
            std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
        }
    }
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

}  // namespace

SpillFile::SpillFile(const std::filesystem::path& path, const KvShape& shape)
    : path_(path), shape_(shape) {
    file_.open(path_, std::ios::binary | std::ios::in | std::ios::out | std::ios::trunc);
    if (!file_) {
        throw InputError("spill: cannot open '" + path_.string() + "' for writing");
    }
    std::vector<unsigned char> header(kMagic.begin(), kMagic.end());
    put_le<std::uint32_t>(header, kVersion);
    put_le<std::uint32_t>(header, static_cast<std::uint32_t>(shape_.head_dim));
    put_le<std::uint32_t>(header, static_cast<std::uint32_t>(shape_.layers));
    put_le<std::uint32_t>(header, static_cast<std::uint32_t>(shape_.heads));
    file_.write(reinterpret_cast<const char*>(header.data()),
                static_cast<std::streamsize>(header.size()));
    file_.flush();
    end_ = static_cast<std::int64_t>(header.size());
}

std::size_t SpillFile::record_bytes() const {
    return sizeof(std::uint64_t) + 2 * shape_.per_token() * sizeof(double);
}

std::int64_t SpillFile::write(Position position, std::span<const double> keys,
                              std::span<const double> values) {
    if (keys.size() != shape_.per_token() || values.size() != shape_.per_token()) {
        throw InvariantError("spill: payload size does not match header shape");
    }
    std::vector<unsigned char> record;
    record.reserve(record_bytes());
    put_le<std::uint64_t>(record, static_cast<std::uint64_t>(position));
    for (double k : keys) put_le<double>(record, k);
    for (double v : values) put_le<double>(record, v);

    const std::int64_t offset = end_;
    file_.seekp(offset);
    file_.write(reinterpret_cast<const char*>(record.data()),
                static_cast<std::streamsize>(record.size()));
    file_.flush();
    if (!file_) {
        throw InputError("spill: write failed on '" + path_.string() + "'");
    }
    end_ += static_cast<std::int64_t>(record.size());
    return offset;
}

TokenKv SpillFile::read(std::int64_t offset, Position expected_position) {
    std::vector<unsigned char> record(record_bytes());
    file_.seekg(offset);
    file_.read(reinterpret_cast<char*>(record.data()), static_cast<std::streamsize>(record.size()));
    if (!file_) {
        throw InvariantError("spill: short read at offset " + std::to_string(offset));
    }
    const auto position = static_cast<Position>(get_le<std::uint64_t>(record.data()));
    if (position != expected_position) {
        throw InvariantError("spill: record at offset " + std::to_string(offset) +
                             " holds position " + std::to_string(position));
    }
    const std::size_t n = shape_.per_token();
    TokenKv kv;
    kv.keys.resize(n);
    kv.values.resize(n);
    const unsigned char* p = record.data() + sizeof(std::uint64_t);
    for (std::size_t i = 0; i < n; ++i, p += sizeof(double)) kv.keys[i] = get_le<double>(p);
    for (std::size_t i = 0; i < n; ++i, p += sizeof(double)) kv.values[i] = get_le<double>(p);
    return kv;
}

KvShape SpillFile::read_header(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::array<unsigned char, kHeaderBytes> header{};
    in.read(reinterpret_cast<char*>(header.data()), header.size());
    if (!in || std::memcmp(header.data(), kMagic.data(), kMagic.size()) != 0) {
        throw InputError("spill: '" + path.string() + "' is not a spill file");
    }
    if (get_le<std::uint32_t>(header.data() + 4) != kVersion) {
        throw InputError("spill: unsupported version in '" + path.string() + "'");
    }
    KvShape shape;
    shape.head_dim = get_le<std::uint32_t>(header.data() + 8);
    shape.layers = get_le<std::uint32_t>(header.data() + 12);
    shape.heads = get_le<std::uint32_t>(header.data() + 16);
    return shape;
}

}  // namespace softfreeze
