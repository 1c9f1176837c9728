#include "foglet/record_log.hpp"

#include <array>
#include <cstring>

#include <zlib.h>

namespace foglet::storage {

namespace {

constexpr std::array<char, 8> kMagic = {'F', 'O', 'G', 'L', 'E', 'T', 'D', 'B'};
constexpr std::uint32_t kMaxPayload = 256u << 20;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint32_t checksum(RecordType type, const std::string& payload) {
  const auto t = static_cast<unsigned char>(type);
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, &t, 1);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(payload.data()),
              static_cast<uInt>(payload.size()));
  return static_cast<std::uint32_t>(crc);
}

std::string header() {
  std::string h(kMagic.begin(), kMagic.end());
  put_u32(h, kFormatVersion);
  return h;
}

std::string encode(const Record& r) {
  std::string out;
  put_u32(out, static_cast<std::uint32_t>(r.payload.size()));
  out.push_back(static_cast<char>(r.type));
  out += r.payload;
  put_u32(out, checksum(r.type, r.payload));
  return out;
}

}  // namespace

std::vector<Record> read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot open " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());

  if (data.size() < kMagic.size() + 4 || std::memcmp(data.data(), kMagic.data(), kMagic.size()) != 0)
    throw StorageError(path.string() + ": not a foglet state file");
  const std::uint32_t version = get_u32(bytes + kMagic.size());
  if (version != kFormatVersion)
    throw StorageError(path.string() + ": unsupported format version " + std::to_string(version));

  std::vector<Record> records;
  std::size_t pos = kMagic.size() + 4;
  while (pos < data.size()) {
    if (data.size() - pos < 5) throw StorageError(path.string() + ": truncated record header");
    const std::uint32_t len = get_u32(bytes + pos);
    if (len > kMaxPayload) throw StorageError(path.string() + ": oversized record");
    const auto type = static_cast<RecordType>(bytes[pos + 4]);
    if (data.size() - pos - 5 < static_cast<std::size_t>(len) + 4)
      throw StorageError(path.string() + ": truncated record");
    Record r{type, data.substr(pos + 5, len)};
    if (get_u32(bytes + pos + 5 + len) != checksum(r.type, r.payload))
      throw StorageError(path.string() + ": checksum mismatch");
    records.push_back(std::move(r));
    pos += 5 + len + 4;
  }
  return records;
}

void write_records(const std::filesystem::path& path, std::span<const Record> records) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + tmp.string());
    out << header();
    for (const auto& r : records) out << encode(r);
    out.flush();
    if (!out) throw StorageError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

RecordWriter::RecordWriter(const std::filesystem::path& path) {
  const bool fresh = !std::filesystem::exists(path) || std::filesystem::file_size(path) == 0;
  out_.open(path, std::ios::binary | std::ios::app);
  if (!out_) throw StorageError("cannot open " + path.string());
  if (fresh) out_ << header();
  out_.flush();
}

void RecordWriter::append(const Record& r) {
  out_ << encode(r);
  out_.flush();
  if (!out_) throw StorageError("append failed");
}

}  // namespace foglet::storage
