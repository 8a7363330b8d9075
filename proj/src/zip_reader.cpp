#include "zip_reader.hpp"

#include <cstdint>
#include <cstring>

#include <zlib.h>

#include "metamorph/error.hpp"
#include "metamorph/json_io.hpp"

namespace metamorph::detail {

namespace {

constexpr std::uint32_t kEndOfCentralDir = 0x06054b50;
constexpr std::uint32_t kCentralHeader = 0x02014b50;
constexpr std::uint32_t kLocalHeader = 0x04034b50;

[[noreturn]] void corrupt(const std::string &why) { throw IoError("BadArchive", why); }

std::uint32_t u16(const std::string &b, std::size_t at) {
    if (at + 2 > b.size()) {
        corrupt("truncated");
    }
    return static_cast<std::uint32_t>(static_cast<unsigned char>(b[at])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + 1])) << 8;
}

std::uint32_t u32(const std::string &b, std::size_t at) { return u16(b, at) | u16(b, at + 2) << 16; }

std::string inflate_raw(const std::string &src, std::size_t expected) {
    std::string out(expected, '\0');
    z_stream zs{};
    if (inflateInit2(&zs, -MAX_WBITS) != Z_OK) {
        corrupt("inflateInit failed");
    }
    zs.next_in = reinterpret_cast<Bytef *>(const_cast<char *>(src.data()));
    zs.avail_in = static_cast<uInt>(src.size());
    zs.next_out = reinterpret_cast<Bytef *>(out.data());
    zs.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&zs, Z_FINISH);
    inflateEnd(&zs);
    if (rc != Z_STREAM_END || zs.total_out != expected) {
        corrupt("deflate stream error");
    }
    return out;
}

} // namespace

std::optional<std::string> read_zip_member(const std::filesystem::path &archive, const std::string &member) {
    const std::string b = read_text(archive);
    if (b.size() < 22) {
        corrupt("too small for a zip archive");
    }
    // The end-of-central-directory record sits in the last 64 KiB + 22 bytes.
    std::size_t eocd = std::string::npos;
    const std::size_t lowest = b.size() > 65557 ? b.size() - 65557 : 0;
    for (std::size_t i = b.size() - 22 + 1; i-- > lowest;) {
        if (u32(b, i) == kEndOfCentralDir) {
            eocd = i;
            break;
        }
    }
    if (eocd == std::string::npos) {
        corrupt("no end of central directory");
    }
    const std::uint32_t entries = u16(b, eocd + 10);
    std::size_t at = u32(b, eocd + 16);
    for (std::uint32_t e = 0; e < entries; ++e) {
        if (u32(b, at) != kCentralHeader) {
            corrupt("bad central directory entry");
        }
        const std::uint32_t method = u16(b, at + 10);
        const std::uint32_t csize = u32(b, at + 20);
        const std::uint32_t usize = u32(b, at + 24);
        const std::uint32_t name_len = u16(b, at + 28);
        const std::uint32_t extra_len = u16(b, at + 30);
        const std::uint32_t comment_len = u16(b, at + 32);
        const std::uint32_t local = u32(b, at + 42);
        if (at + 46 + name_len > b.size()) {
            corrupt("truncated entry name");
        }
        const std::string name = b.substr(at + 46, name_len);
        at += 46 + name_len + extra_len + comment_len;
        if (name != member) {
            continue;
        }
        if (u32(b, local) != kLocalHeader) {
            corrupt("bad local header");
        }
        const std::size_t data = local + 30 + u16(b, local + 26) + u16(b, local + 28);
        if (data + csize > b.size()) {
            corrupt("member data out of range");
        }
        const std::string raw = b.substr(data, csize);
        if (method == 0) {
            return raw;
        }
        if (method == 8) {
            return inflate_raw(raw, usize);
        }
        corrupt("unsupported compression method " + std::to_string(method));
    }
    return std::nullopt;
}

} // namespace metamorph::detail
