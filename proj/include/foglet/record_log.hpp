#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace foglet::storage {

// On-disk layout (little endian):
//   header  : "FOGLETDB" (8 bytes) | format version (u32)
//   record* : payload length (u32) | type (u8) | payload | crc32(type, payload) (u32)
inline constexpr std::uint32_t kFormatVersion = 1;

enum class RecordType : std::uint8_t {
  InventorySnapshot = 1,
  InventoryOp = 2,
  SimulationSnapshot = 3,
  EngineSnapshot = 4,
};

struct Record {
  RecordType type;
  std::string payload;
};

struct StorageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Reads every record; any truncation, checksum mismatch or version mismatch
// throws and nothing is returned.
std::vector<Record> read_records(const std::filesystem::path& path);

// Replaces `path` with a fresh file holding exactly `records` (write to a
// sibling temp file, then rename).
void write_records(const std::filesystem::path& path, std::span<const Record> records);

// Appends to an existing log, creating it with a header if absent.
class RecordWriter {
 public:
  explicit RecordWriter(const std::filesystem::path& path);
  void append(const Record& r);

 private:
  std::ofstream out_;
};

}  // namespace foglet::storage
