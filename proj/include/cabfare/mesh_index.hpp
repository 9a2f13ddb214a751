#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cabfare/geo.hpp"
#include "cabfare/trip.hpp"

namespace cabfare {

// Trips whose pickup lies within Chebyshev distance `ring_used` of the
// origin cell.
struct NearbyTrips {
  std::int32_t ring_used = 0;
  std::vector<std::uint32_t> ordinals;  // ascending
};

inline constexpr std::int32_t kDefaultMaxRing = 10;

struct NearestDropoff {
  std::uint32_t ordinal = 0;
  std::int32_t ring_used = 0;
  double gap_m = 0.0;
};

// Immutable mesh index: every trip ordinal sits in the cell of its pickup
// point, and each cell's ordinals are ascending. Safe for concurrent readers.
class MeshIndex {
 public:
  MeshIndex() = default;

  // Throws OutOfBounds if any pickup escapes spec.bbox().
  static MeshIndex build(std::vector<TripRecord> trips, const MeshSpec& spec,
                         std::int64_t built_at = 0);

  const MeshSpec& spec() const noexcept { return spec_; }
  std::span<const TripRecord> trips() const noexcept { return trips_; }
  const TripRecord& trip(std::uint32_t ordinal) const { return trips_.at(ordinal); }
  std::size_t size() const noexcept { return trips_.size(); }
  std::int64_t built_at() const noexcept { return built_at_; }
  std::size_t non_empty_cells() const noexcept;

  // Empty for out-of-grid cells.
  std::span<const std::uint32_t> trips_in(CellId cell) const noexcept;

  // Grows the Chebyshev neighborhood of the origin's cell one whole ring at a
  // time, starting at ring 1, until it holds a trip. Throws NoTripsFound once
  // max_ring is exhausted and OutOfBounds for an origin outside the bbox.
  NearbyTrips trips_near(GeoPoint origin, std::int32_t max_ring = kDefaultMaxRing) const;

  // The trip in trips_near(origin, max_ring) whose dropoff is closest to
  // `dest` by haversine, lowest ordinal on equal gaps. Same answer as a scan
  // over trips_near, without materializing or sorting it.
  NearestDropoff nearest_dropoff(GeoPoint origin, GeoPoint dest,
                                 std::int32_t max_ring = kDefaultMaxRing) const;

  void save(const std::filesystem::path& path) const;
  static MeshIndex load(const std::filesystem::path& path);

  std::string serialize() const;
  static MeshIndex deserialize(std::string_view file_bytes);

  friend bool operator==(const MeshIndex&, const MeshIndex&) = default;

 private:
  std::int32_t occupied_ring(CellId center, std::int32_t max_ring) const;
  void index_dropoffs();

  MeshSpec spec_;
  std::vector<TripRecord> trips_;
  std::vector<std::uint32_t> cell_offsets_;  // dense, cell_count + 1
  std::vector<std::uint32_t> ordinals_;
  std::vector<HavPoint> dropoffs_;  // parallel to ordinals_, rebuilt on load
  std::int64_t built_at_ = 0;
};

inline constexpr std::string_view kIndexMagic = "CABINDEX";
inline constexpr std::uint32_t kIndexVersion = 1;

}  // namespace cabfare
