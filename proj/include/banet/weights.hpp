#pragma once

// Named parameter container and its binary file format.
//
// Layout (all integers little-endian):
//   "BANW" | u32 version (1) | u32 count
//   count x { u32 name_len | name bytes | u8 dtype (0 = f32) | u8 rank |
//             rank x u32 dim | f32 payload }
//   u32 CRC-32 of every preceding byte

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <vector>

#include <zlib.h>

#include "banet/blocks.hpp"

namespace banet {

inline constexpr char kWeightMagic[4] = {'B', 'A', 'N', 'W'};
inline constexpr std::uint32_t kWeightVersion = 1;

/// Role implied by the last path component of a parameter name.
inline ParamRole role_from_name(const std::string& name) {
    const auto dot = name.rfind('.');
    const std::string leaf = dot == std::string::npos ? name : name.substr(dot + 1);
    if (leaf == "bias") return ParamRole::bias;
    if (leaf == "scale") return ParamRole::scale;
    if (leaf == "shift") return ParamRole::shift;
    return ParamRole::kernel;
}

class WeightStore {
public:
    struct Entry {
        std::string name;
        std::vector<int> dims;
        ParamRole role;
        Tensor tensor;
    };

    void insert(std::string name, std::vector<int> dims, Tensor tensor) {
        if (index_.count(name)) throw ParameterError(name, "duplicate parameter");
        if (dims.empty() || dims.size() > 4) throw ParameterError(name, "rank must be 1..4");
        if (dims_to_shape(dims) != tensor.shape()) {
            throw ParameterError(name, "tensor shape " + to_string(tensor.shape()) +
                                           " disagrees with declared dims");
        }
        const ParamRole role = role_from_name(name);
        index_.emplace(name, entries_.size());
        entries_.push_back(Entry{std::move(name), std::move(dims), role, std::move(tensor)});
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    const Entry& at(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ParameterError(name, "missing parameter");
        return entries_[it->second];
    }

    Tensor& tensor(const std::string& name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw ParameterError(name, "missing parameter");
        return entries_[it->second].tensor;
    }

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.tensor.size();
        return n;
    }

private:
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t crc32_of(const std::uint8_t* data, std::size_t len) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    while (len > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(len, 1u << 30));
        crc = ::crc32(crc, data, chunk);
        data += chunk;
        len -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& bytes, std::size_t limit)
        : bytes_(bytes), limit_(limit) {}

    void need(std::size_t n, const char* what) const {
        if (pos_ + n > limit_) {
            throw FormatError(FormatErrc::truncated, std::string("weight file ends inside ") + what);
        }
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return bytes_[pos_++];
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::size_t pos() const { return pos_; }
    const std::uint8_t* here() const { return bytes_.data() + pos_; }
    void skip(std::size_t n) { pos_ += n; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::size_t limit_;
    std::size_t pos_ = 0;
};

} // namespace detail

inline std::vector<std::uint8_t> serialize_weights(const WeightStore& store) {
    std::vector<std::uint8_t> out(kWeightMagic, kWeightMagic + 4);
    detail::put_u32(out, kWeightVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(store.size()));
    for (const auto& e : store.entries()) {
        detail::put_u32(out, static_cast<std::uint32_t>(e.name.size()));
        out.insert(out.end(), e.name.begin(), e.name.end());
        out.push_back(0);
        out.push_back(static_cast<std::uint8_t>(e.dims.size()));
        for (int d : e.dims) detail::put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : e.tensor.data()) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    detail::put_u32(out, detail::crc32_of(out.data(), out.size()));
    return out;
}

inline WeightStore deserialize_weights(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kWeightMagic, 4) != 0) {
        throw FormatError(FormatErrc::bad_magic, "weight file does not start with BANW");
    }
    if (bytes.size() < 16) throw FormatError(FormatErrc::truncated, "weight file header is incomplete");
    const std::size_t body = bytes.size() - 4;
    detail::ByteReader in(bytes, body);
    in.skip(4);
    const std::uint32_t version = in.u32("version");
    if (version != kWeightVersion) {
        throw FormatError(FormatErrc::bad_version,
                          "weight file version " + std::to_string(version) + ", expected " +
                              std::to_string(kWeightVersion));
    }
    const std::uint32_t count = in.u32("parameter count");
    WeightStore store;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t name_len = in.u32("name length");
        in.need(name_len, "parameter name");
        std::string name(reinterpret_cast<const char*>(in.here()), name_len);
        in.skip(name_len);
        if (store.contains(name)) throw FormatError(FormatErrc::bad_header, name + ": duplicate parameter name");
        const std::uint8_t dtype = in.u8("dtype tag");
        if (dtype != 0) {
            throw FormatError(FormatErrc::unsupported,
                              name + ": dtype tag " + std::to_string(dtype) + " is not f32");
        }
        const std::uint8_t rank = in.u8("rank");
        if (rank < 1 || rank > 4) {
            throw FormatError(FormatErrc::bad_header, name + ": rank " + std::to_string(rank));
        }
        std::vector<int> dims;
        std::uint64_t numel = 1;
        for (int r = 0; r < rank; ++r) {
            const std::uint32_t d = in.u32("dims");
            if (d == 0 || d > (1u << 30)) {
                throw FormatError(FormatErrc::bad_header, name + ": invalid dimension " + std::to_string(d));
            }
            dims.push_back(static_cast<int>(d));
            numel *= d;
        }
        if (numel > body) throw FormatError(FormatErrc::truncated, name + ": payload exceeds file size");
        in.need(static_cast<std::size_t>(numel) * 4, "payload");
        std::vector<float> data(static_cast<std::size_t>(numel));
        for (auto& v : data) v = std::bit_cast<float>(in.u32("payload"));
        const Shape shape = dims_to_shape(dims);
        store.insert(std::move(name), std::move(dims), Tensor(shape, std::move(data)));
    }
    if (in.pos() != body) {
        throw FormatError(FormatErrc::trailing_data, "weight file has " + std::to_string(body - in.pos()) +
                                                      " unexpected trailing bytes");
    }
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(bytes[body + i]) << (8 * i);
    const std::uint32_t actual = detail::crc32_of(bytes.data(), body);
    if (stored != actual) {
        throw FormatError(FormatErrc::checksum, "weight file CRC-32 mismatch");
    }
    return store;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot write " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("short write to " + path);
}

inline void save_weights(const WeightStore& store, const std::string& path) {
    write_file_bytes(path, serialize_weights(store));
}

inline WeightStore load_weights(const std::string& path) {
    return deserialize_weights(read_file_bytes(path));
}

} // namespace banet
