#include "cabfare/record_file.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

#include "cabfare/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "binary formats are written in host order and require a little-endian host");

namespace cabfare {

namespace bin {

template <typename T>
T get(std::string_view bytes, std::size_t& offset) {
  if (offset > bytes.size() || bytes.size() - offset < sizeof(T))
    throw CorruptFile("unexpected end of data");
  T value;
  std::memcpy(&value, bytes.data() + offset, sizeof(T));
  offset += sizeof(T);
  return value;
}

template std::uint32_t get<std::uint32_t>(std::string_view, std::size_t&);
template std::int32_t get<std::int32_t>(std::string_view, std::size_t&);
template std::uint64_t get<std::uint64_t>(std::string_view, std::size_t&);
template std::int64_t get<std::int64_t>(std::string_view, std::size_t&);
template double get<double>(std::string_view, std::size_t&);

void pad8(std::string& out) {
  while (out.size() % 8 != 0) out.push_back('\0');
}

void skip_pad8(std::string_view bytes, std::size_t& offset) {
  while (offset % 8 != 0) {
    if (offset >= bytes.size()) throw CorruptFile("unexpected end of data");
    ++offset;
  }
}

}  // namespace bin

namespace {

std::uint32_t crc32_of(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large payloads in slices.
  constexpr std::size_t kSlice = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kSlice) {
    const auto len = static_cast<uInt>(std::min(kSlice, bytes.size() - off));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(bytes.data() + off), len);
  }
  return static_cast<std::uint32_t>(crc);
}

constexpr std::int64_t kAbsentTime = std::numeric_limits<std::int64_t>::min();

}  // namespace

std::string frame(std::string_view magic, std::uint32_t version, std::string_view payload) {
  std::string out;
  out.reserve(kFrameHeaderBytes + payload.size());
  out.append(magic.substr(0, 8));
  out.resize(8, '\0');
  bin::put<std::uint32_t>(out, version);
  bin::put<std::uint32_t>(out, 0);
  bin::put<std::uint64_t>(out, payload.size());
  bin::put<std::uint32_t>(out, crc32_of(payload));
  bin::put<std::uint32_t>(out, 0);
  out.append(payload);
  return out;
}

std::string unframe(std::string_view magic, std::uint32_t version, std::string_view file_bytes) {
  if (file_bytes.size() < kFrameHeaderBytes) throw CorruptFile("file shorter than header");
  if (file_bytes.substr(0, magic.size()) != magic) throw CorruptFile("bad magic");
  std::size_t off = 8;
  const auto found_version = bin::get<std::uint32_t>(file_bytes, off);
  if (found_version != version)
    throw VersionMismatch("format version " + std::to_string(found_version) + ", expected " +
                          std::to_string(version));
  off += 4;
  const auto length = bin::get<std::uint64_t>(file_bytes, off);
  const auto crc = bin::get<std::uint32_t>(file_bytes, off);
  if (file_bytes.size() - kFrameHeaderBytes != length)
    throw CorruptFile("payload length mismatch (truncated or padded file)");
  std::string_view payload = file_bytes.substr(kFrameHeaderBytes);
  if (crc32_of(payload) != crc) throw CorruptFile("checksum mismatch");
  return std::string(payload);
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  std::string bytes(size, '\0');
  in.seekg(0);
  in.read(bytes.data(), static_cast<std::streamsize>(size));
  if (!in) throw IoError("read failed: " + path.string());
  return bytes;
}

void append_trip_store(std::string& out, std::span<const TripRecord> trips) {
  bin::pad8(out);
  out.reserve(out.size() + 8 + trips.size() * 52 + 8);
  bin::put<std::uint64_t>(out, trips.size());
  for (const auto& t : trips) bin::put<std::uint64_t>(out, t.trip_id);
  for (const auto& t : trips) bin::put<std::int64_t>(out, t.pickup_time.value_or(kAbsentTime));
  for (const auto& t : trips) bin::put<std::int64_t>(out, t.dropoff_time.value_or(kAbsentTime));
  for (const auto& t : trips) bin::put<std::int64_t>(out, t.total_fare.cents());
  for (const auto& t : trips) bin::put<std::int32_t>(out, to_micro_degrees(t.pickup.lat));
  for (const auto& t : trips) bin::put<std::int32_t>(out, to_micro_degrees(t.pickup.lon));
  for (const auto& t : trips) bin::put<std::int32_t>(out, to_micro_degrees(t.dropoff.lat));
  for (const auto& t : trips) bin::put<std::int32_t>(out, to_micro_degrees(t.dropoff.lon));
  for (const auto& t : trips) {
    const std::int32_t d =
        t.trip_distance_mi ? static_cast<std::int32_t>(std::llround(*t.trip_distance_mi * kMilliMiles))
                           : -1;
    bin::put<std::int32_t>(out, d);
  }
  bin::pad8(out);
}

std::vector<TripRecord> parse_trip_store(std::string_view bytes, std::size_t& offset) {
  bin::skip_pad8(bytes, offset);
  const auto count = bin::get<std::uint64_t>(bytes, offset);
  constexpr std::size_t kBytesPerTrip = 4 * 8 + 5 * 4;
  if (count > (bytes.size() - offset) / kBytesPerTrip) throw CorruptFile("trip store truncated");
  std::vector<TripRecord> trips(count);
  for (auto& t : trips) t.trip_id = bin::get<std::uint64_t>(bytes, offset);
  auto time_column = [&](auto member) {
    for (auto& t : trips) {
      const auto v = bin::get<std::int64_t>(bytes, offset);
      if (v != kAbsentTime) t.*member = v;
    }
  };
  time_column(&TripRecord::pickup_time);
  time_column(&TripRecord::dropoff_time);
  for (auto& t : trips) t.total_fare = Money::from_cents(bin::get<std::int64_t>(bytes, offset));
  for (auto& t : trips) t.pickup.lat = from_micro_degrees(bin::get<std::int32_t>(bytes, offset));
  for (auto& t : trips) t.pickup.lon = from_micro_degrees(bin::get<std::int32_t>(bytes, offset));
  for (auto& t : trips) t.dropoff.lat = from_micro_degrees(bin::get<std::int32_t>(bytes, offset));
  for (auto& t : trips) t.dropoff.lon = from_micro_degrees(bin::get<std::int32_t>(bytes, offset));
  for (auto& t : trips) {
    const auto d = bin::get<std::int32_t>(bytes, offset);
    if (d >= 0) t.trip_distance_mi = d / kMilliMiles;
  }
  bin::skip_pad8(bytes, offset);
  return trips;
}

void write_records(const std::filesystem::path& path, std::span<const TripRecord> trips) {
  std::string payload;
  append_trip_store(payload, trips);
  write_file(path, frame(kRecordFileMagic, kRecordFileVersion, payload));
}

std::vector<TripRecord> read_records(const std::filesystem::path& path) {
  const std::string payload = unframe(kRecordFileMagic, kRecordFileVersion, read_file(path));
  std::size_t offset = 0;
  auto trips = parse_trip_store(payload, offset);
  if (offset != payload.size()) throw CorruptFile("trailing bytes after trip store");
  return trips;
}

}  // namespace cabfare
