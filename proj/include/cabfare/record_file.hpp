#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cabfare/trip.hpp"

namespace cabfare {

// Framed binary container shared by the record file and the index file:
//
//   offset size
//   0      8    magic
//   8      4    format version (u32)
//   12     4    reserved, zero
//   16     8    payload length in bytes (u64)
//   24     4    CRC-32 of the payload (zlib polynomial)
//   28     4    reserved, zero
//   32     ...  payload
//
// All integers are little-endian. See docs/FORMATS.md.
inline constexpr std::size_t kFrameHeaderBytes = 32;

std::string frame(std::string_view magic, std::uint32_t version, std::string_view payload);
// Throws CorruptFile (bad magic, truncation, checksum) or VersionMismatch.
std::string unframe(std::string_view magic, std::uint32_t version, std::string_view file_bytes);

void write_file(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

// Columnar trip store block (8-byte aligned columns):
//   u64 count
//   u64 trip_id[count]
//   i64 pickup_time[count]    (INT64_MIN when absent)
//   i64 dropoff_time[count]   (INT64_MIN when absent)
//   i64 fare_cents[count]
//   i32 pickup_lat_e6[count]
//   i32 pickup_lon_e6[count]
//   i32 dropoff_lat_e6[count]
//   i32 dropoff_lon_e6[count]
//   i32 distance_milli_mi[count] (-1 when absent)
//   zero padding to a multiple of 8 bytes
void append_trip_store(std::string& out, std::span<const TripRecord> trips);
// Parses a trip store starting at `offset`; advances `offset` past it.
std::vector<TripRecord> parse_trip_store(std::string_view bytes, std::size_t& offset);

inline constexpr std::string_view kRecordFileMagic = "CABTRIPS";
inline constexpr std::uint32_t kRecordFileVersion = 1;

void write_records(const std::filesystem::path& path, std::span<const TripRecord> trips);
std::vector<TripRecord> read_records(const std::filesystem::path& path);

// Little-endian append/read helpers for the binary formats.
namespace bin {

template <typename T>
void put(std::string& out, T value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

// Throws CorruptFile when fewer than sizeof(T) bytes remain.
template <typename T>
T get(std::string_view bytes, std::size_t& offset);

void pad8(std::string& out);
void skip_pad8(std::string_view bytes, std::size_t& offset);

}  // namespace bin

}  // namespace cabfare
