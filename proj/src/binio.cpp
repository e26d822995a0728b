#include "lsfs/binio.hpp"

#include "lsfs/error.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <random>

namespace lsfs::binio {

namespace fs = std::filesystem;

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks for large bodies.
    std::size_t off = 0;
    while (off < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
        crc = ::crc32(crc, bytes.data() + off, chunk);
        off += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::uint32_t crc32(std::string_view bytes) {
    return crc32(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

void Writer::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void Writer::u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
}

void Writer::f32(float v) {
    std::uint32_t bits = 0;
    std::memcpy(&bits, &v, sizeof bits);
    u32(bits);
}

void Writer::str(std::string_view s) {
    u64(s.size());
    buf_.insert(buf_.end(), s.begin(), s.end());
}

void Reader::need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
        throw Error(ErrorCode::CorruptSnapshot, "record truncated");
    }
}

std::uint8_t Reader::u8() {
    need(1);
    return bytes_[pos_++];
}

std::uint32_t Reader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    }
    return v;
}

std::uint64_t Reader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    }
    return v;
}

float Reader::f32() {
    const std::uint32_t bits = u32();
    float v = 0;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

std::string Reader::str() {
    const std::uint64_t n = u64();
    if (n > remaining()) {
        throw Error(ErrorCode::CorruptSnapshot, "string length exceeds record");
    }
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), static_cast<std::size_t>(n));
    pos_ += static_cast<std::size_t>(n);
    return s;
}

std::span<const std::uint8_t> Reader::raw(std::size_t n) {
    need(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::PathUnreadable, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void atomic_write(const fs::path& path, std::string_view data) {
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    // Dot-prefixed so directory scanners can skip in-flight writes.
    const fs::path tmp =
        path.parent_path() / (".lsfs-tmp-" + path.filename().string() + "-" + std::to_string(rng() % 1'000'000'007ULL));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::Io, "cannot write " + tmp.string());
        }
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        out.flush();
        if (!out) {
            throw Error(ErrorCode::Io, "short write to " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::Io, "rename failed for " + path.string());
    }
}

void write_snapshot(const fs::path& path, const SnapshotHeader& header, std::span<const std::uint8_t> body) {
    Writer w;
    std::string magic = header.magic;
    magic.resize(8, '\0');
    w.raw(std::span(reinterpret_cast<const std::uint8_t*>(magic.data()), 8));
    w.u32(header.version);
    w.u32(header.aux);
    w.u64(body.size());
    w.u32(crc32(body));
    w.raw(body);
    const auto& bytes = w.bytes();
    atomic_write(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

std::vector<std::uint8_t> read_snapshot(const fs::path& path, std::string_view magic, SnapshotHeader& header) {
    const auto bytes = read_file_bytes(path);
    constexpr std::size_t kHeaderSize = 8 + 4 + 4 + 8 + 4;
    if (bytes.size() < kHeaderSize) {
        throw Error(ErrorCode::CorruptSnapshot, "snapshot header truncated: " + path.string());
    }
    std::string expected(magic);
    expected.resize(8, '\0');
    if (std::memcmp(bytes.data(), expected.data(), 8) != 0) {
        throw Error(ErrorCode::CorruptSnapshot, "bad snapshot magic: " + path.string());
    }
    Reader r{std::span<const std::uint8_t>(bytes).subspan(8)};
    header.magic = std::string(magic);
    header.version = r.u32();
    header.aux = r.u32();
    const std::uint64_t len = r.u64();
    const std::uint32_t crc = r.u32();
    if (len != r.remaining()) {
        throw Error(ErrorCode::CorruptSnapshot, "snapshot body length mismatch: " + path.string());
    }
    std::vector<std::uint8_t> body(bytes.begin() + kHeaderSize, bytes.end());
    if (crc32(body) != crc) {
        throw Error(ErrorCode::CorruptSnapshot, "snapshot checksum mismatch: " + path.string());
    }
    return body;
}

void append_journal(const fs::path& path, std::span<const std::uint8_t> payload) {
    Writer w;
    w.u32(static_cast<std::uint32_t>(payload.size()));
    w.u32(crc32(payload));
    w.raw(payload);
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) {
        throw Error(ErrorCode::Io, "cannot append journal " + path.string());
    }
    const auto& bytes = w.bytes();
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
}

std::vector<std::vector<std::uint8_t>> read_journal(const fs::path& path) {
    std::vector<std::vector<std::uint8_t>> records;
    if (!fs::exists(path)) {
        return records;
    }
    const auto bytes = read_file_bytes(path);
    std::size_t pos = 0;
    while (bytes.size() - pos >= 8) {
        Reader r{std::span<const std::uint8_t>(bytes).subspan(pos, 8)};
        const std::uint32_t len = r.u32();
        const std::uint32_t crc = r.u32();
        if (bytes.size() - pos - 8 < len) {
            break; // torn tail
        }
        std::vector<std::uint8_t> payload(bytes.begin() + static_cast<std::ptrdiff_t>(pos + 8),
                                          bytes.begin() + static_cast<std::ptrdiff_t>(pos + 8 + len));
        if (crc32(payload) != crc) {
            if (pos + 8 + len == bytes.size()) {
                break; // torn tail with partially flushed payload
            }
            throw Error(ErrorCode::CorruptSnapshot, "journal checksum mismatch: " + path.string());
        }
        records.push_back(std::move(payload));
        pos += 8 + len;
    }
    return records;
}

} // namespace lsfs::binio
