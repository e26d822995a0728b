#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lsfs::binio {

std::uint32_t crc32(std::span<const std::uint8_t> bytes);
std::uint32_t crc32(std::string_view bytes);

/// Little-endian record encoder shared by the index, journal and version files.
class Writer {
public:
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
    void f32(float v);
    void str(std::string_view s);
    void raw(std::span<const std::uint8_t> bytes) { buf_.insert(buf_.end(), bytes.begin(), bytes.end()); }

    const std::vector<std::uint8_t>& bytes() const { return buf_; }
    std::vector<std::uint8_t> take() { return std::move(buf_); }

private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked decoder; throws Error(CorruptSnapshot) on overrun.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
    float f32();
    std::string str();
    std::span<const std::uint8_t> raw(std::size_t n);

    std::size_t remaining() const { return bytes_.size() - pos_; }
    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const;

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

/// Framed snapshot: 8-byte magic, u32 format version, u32 dim/aux field,
/// u64 body length, u32 CRC32 of body, then the body.
struct SnapshotHeader {
    std::string magic; // exactly 8 bytes
    std::uint32_t version = 1;
    std::uint32_t aux = 0;
};

void write_snapshot(const std::filesystem::path& path, const SnapshotHeader& header,
                    std::span<const std::uint8_t> body);

/// Returns the verified body; `header` receives version and aux.
std::vector<std::uint8_t> read_snapshot(const std::filesystem::path& path, std::string_view magic,
                                        SnapshotHeader& header);

/// Journal frames are u32 length + u32 crc + payload. A torn trailing frame
/// is dropped; a CRC mismatch before the tail is corruption.
void append_journal(const std::filesystem::path& path, std::span<const std::uint8_t> payload);
std::vector<std::vector<std::uint8_t>> read_journal(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// Write-to-temp then rename.
void atomic_write(const std::filesystem::path& path, std::string_view data);

} // namespace lsfs::binio
