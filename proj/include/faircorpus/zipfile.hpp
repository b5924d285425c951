#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include <zlib.h>

#include "faircorpus/error.hpp"

// Minimal ZIP archive support: enough to extract one member (stored or
// deflated) from a downloaded archive, and to write stored-only archives
// for test fixtures. No ZIP64, no encryption, no multi-disk.

namespace faircorpus::zip {

namespace detail {

inline uint16_t read_u16(const std::string& buf, size_t off) {
    return static_cast<uint16_t>(static_cast<uint8_t>(buf[off])) |
           static_cast<uint16_t>(static_cast<uint8_t>(buf[off + 1])) << 8;
}

inline uint32_t read_u32(const std::string& buf, size_t off) {
    uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<uint8_t>(buf[off + i]);
    return v;
}

inline void append_u16(std::string& buf, uint16_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>(v >> 8));
}

inline void append_u32(std::string& buf, uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline std::string inflate_raw(const std::string& data, size_t expected_size) {
    std::string out(expected_size, '\0');
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    // Negative window bits: raw deflate stream, no zlib header.
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) throw RuntimeError("zlib inflateInit failed");
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
    zs.avail_in = static_cast<uInt>(data.size());
    zs.next_out = reinterpret_cast<Bytef*>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.total_out != expected_size)
        throw DataError("zip member is corrupt: deflate stream did not decode cleanly");
    return out;
}

} // namespace detail

struct MemberInfo {
    std::string name;
    uint16_t method = 0; // 0 = stored, 8 = deflated
    uint32_t crc32 = 0;
    uint32_t compressed_size = 0;
    uint32_t uncompressed_size = 0;
    uint32_t local_header_offset = 0;
};

// Parse the central directory of an in-memory archive.
inline std::vector<MemberInfo> list_members(const std::string& archive) {
    constexpr uint32_t kEocdSig = 0x06054b50;
    constexpr uint32_t kCentralSig = 0x02014b50;
    constexpr size_t kEocdMin = 22;
    if (archive.size() < kEocdMin) throw DataError("not a zip archive: too small");

    // EOCD sits at the end, possibly before a trailing comment.
    size_t eocd = std::string::npos;
    const size_t scan_floor =
        archive.size() > kEocdMin + 65535 ? archive.size() - kEocdMin - 65535 : 0;
    for (size_t pos = archive.size() - kEocdMin + 1; pos-- > scan_floor;) {
        if (detail::read_u32(archive, pos) == kEocdSig) {
            eocd = pos;
            break;
        }
    }
    if (eocd == std::string::npos)
        throw DataError("not a zip archive: end-of-central-directory record missing");

    const uint16_t entry_count = detail::read_u16(archive, eocd + 10);
    const uint32_t cdir_offset = detail::read_u32(archive, eocd + 16);
    if (cdir_offset >= archive.size()) throw DataError("zip central directory offset out of range");

    std::vector<MemberInfo> members;
    size_t pos = cdir_offset;
    for (uint16_t i = 0; i < entry_count; ++i) {
        if (pos + 46 > archive.size() || detail::read_u32(archive, pos) != kCentralSig)
            throw DataError("zip central directory is corrupt");
        MemberInfo m;
        m.method = detail::read_u16(archive, pos + 10);
        m.crc32 = detail::read_u32(archive, pos + 16);
        m.compressed_size = detail::read_u32(archive, pos + 20);
        m.uncompressed_size = detail::read_u32(archive, pos + 24);
        const uint16_t name_len = detail::read_u16(archive, pos + 28);
        const uint16_t extra_len = detail::read_u16(archive, pos + 30);
        const uint16_t comment_len = detail::read_u16(archive, pos + 32);
        m.local_header_offset = detail::read_u32(archive, pos + 42);
        if (pos + 46 + name_len > archive.size())
            throw DataError("zip central directory is corrupt");
        m.name = archive.substr(pos + 46, name_len);
        members.push_back(std::move(m));
        pos += 46 + name_len + extra_len + comment_len;
    }
    return members;
}

// Extract one member by exact name, verifying its checksum.
inline std::string extract_member(const std::string& archive, const std::string& member_name) {
    constexpr uint32_t kLocalSig = 0x04034b50;
    const auto members = list_members(archive);
    const MemberInfo* found = nullptr;
    for (const auto& m : members)
        if (m.name == member_name) found = &m;
    if (!found) {
        std::string known;
        for (const auto& m : members) known += (known.empty() ? "" : ", ") + m.name;
        throw DataError("zip archive has no member '" + member_name + "' (members: " + known + ")");
    }

    size_t pos = found->local_header_offset;
    if (pos + 30 > archive.size() || detail::read_u32(archive, pos) != kLocalSig)
        throw DataError("zip local header is corrupt for member '" + member_name + "'");
    const uint16_t name_len = detail::read_u16(archive, pos + 26);
    const uint16_t extra_len = detail::read_u16(archive, pos + 28);
    const size_t data_off = pos + 30 + name_len + extra_len;
    if (data_off + found->compressed_size > archive.size())
        throw DataError("zip member data out of range for '" + member_name + "'");
    const std::string raw = archive.substr(data_off, found->compressed_size);

    std::string out;
    if (found->method == 0) {
        out = raw;
    } else if (found->method == 8) {
        out = detail::inflate_raw(raw, found->uncompressed_size);
    } else {
        throw DataError("zip member '" + member_name + "' uses unsupported compression method " +
                        std::to_string(found->method));
    }
    const auto actual =
        ::crc32(0L, reinterpret_cast<const Bytef*>(out.data()), static_cast<uInt>(out.size()));
    if (static_cast<uint32_t>(actual) != found->crc32)
        throw DataError("zip member '" + member_name + "' failed its checksum");
    return out;
}

// Build a stored-only (no compression) archive from name/content pairs.
inline std::string write_archive(const std::vector<std::pair<std::string, std::string>>& members) {
    std::string out;
    std::vector<uint32_t> offsets;
    std::vector<uint32_t> crcs;
    for (const auto& [name, content] : members) {
        offsets.push_back(static_cast<uint32_t>(out.size()));
        const auto crc = static_cast<uint32_t>(
            ::crc32(0L, reinterpret_cast<const Bytef*>(content.data()),
                    static_cast<uInt>(content.size())));
        crcs.push_back(crc);
        detail::append_u32(out, 0x04034b50);
        detail::append_u16(out, 20);  // version needed
        detail::append_u16(out, 0);   // flags
        detail::append_u16(out, 0);   // method: stored
        detail::append_u16(out, 0);   // mod time
        detail::append_u16(out, 0);   // mod date
        detail::append_u32(out, crc);
        detail::append_u32(out, static_cast<uint32_t>(content.size()));
        detail::append_u32(out, static_cast<uint32_t>(content.size()));
        detail::append_u16(out, static_cast<uint16_t>(name.size()));
        detail::append_u16(out, 0); // extra length
        out += name;
        out += content;
    }
    const auto cdir_offset = static_cast<uint32_t>(out.size());
    for (size_t i = 0; i < members.size(); ++i) {
        const auto& [name, content] = members[i];
        detail::append_u32(out, 0x02014b50);
        detail::append_u16(out, 20); // version made by
        detail::append_u16(out, 20); // version needed
        detail::append_u16(out, 0);  // flags
        detail::append_u16(out, 0);  // method
        detail::append_u16(out, 0);  // mod time
        detail::append_u16(out, 0);  // mod date
        detail::append_u32(out, crcs[i]);
        detail::append_u32(out, static_cast<uint32_t>(content.size()));
        detail::append_u32(out, static_cast<uint32_t>(content.size()));
        detail::append_u16(out, static_cast<uint16_t>(name.size()));
        detail::append_u16(out, 0); // extra
        detail::append_u16(out, 0); // comment
        detail::append_u16(out, 0); // disk number
        detail::append_u16(out, 0); // internal attrs
        detail::append_u32(out, 0); // external attrs
        detail::append_u32(out, offsets[i]);
        out += name;
    }
    const auto cdir_size = static_cast<uint32_t>(out.size()) - cdir_offset;
    detail::append_u32(out, 0x06054b50);
    detail::append_u16(out, 0); // disk number
    detail::append_u16(out, 0); // central dir disk
    detail::append_u16(out, static_cast<uint16_t>(members.size()));
    detail::append_u16(out, static_cast<uint16_t>(members.size()));
    detail::append_u32(out, cdir_size);
    detail::append_u32(out, cdir_offset);
    detail::append_u16(out, 0); // comment length
    return out;
}

} // namespace faircorpus::zip
