#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <numbers>
#include <vector>

namespace cabfare {

inline constexpr double kEarthRadiusM = 6'371'000.0;
inline constexpr double kMetersPerMile = 1609.344;
inline constexpr double kDegToRad = std::numbers::pi / 180.0;

struct GeoPoint {
  double lat = 0.0;  // degrees, [-90, 90]
  double lon = 0.0;  // degrees, [-180, 180]

  bool valid() const noexcept {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
           lon >= -180.0 && lon <= 180.0;
  }
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

struct BoundingBox {
  GeoPoint south_west;
  GeoPoint north_east;

  bool valid() const noexcept {
    return south_west.valid() && north_east.valid() && south_west.lat < north_east.lat &&
           south_west.lon < north_east.lon;
  }
  // Edges are inclusive.
  bool contains(GeoPoint p) const noexcept {
    return p.lat >= south_west.lat && p.lat <= north_east.lat && p.lon >= south_west.lon &&
           p.lon <= north_east.lon;
  }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

  // The five boroughs.
  static BoundingBox nyc() { return {{40.49, -74.27}, {40.92, -73.68}}; }
};

struct CellId {
  std::int32_t ix = 0;  // east
  std::int32_t iy = 0;  // north

  friend auto operator<=>(const CellId& a, const CellId& b) {
    if (auto c = a.iy <=> b.iy; c != 0) return c;
    return a.ix <=> b.ix;
  }
  friend bool operator==(const CellId&, const CellId&) = default;
};

struct PlanarPoint {
  double x = 0.0;  // meters east of the south-west corner
  double y = 0.0;  // meters north of the south-west corner
};

// Mesh geometry: a local equirectangular projection anchored at the bbox
// south-west corner, cut into half-open square cells [k*s, (k+1)*s).
class MeshSpec {
 public:
  MeshSpec() : MeshSpec(BoundingBox::nyc()) {}
  explicit MeshSpec(BoundingBox bbox, double cell_size_m = 100.0,
                    double earth_radius_m = kEarthRadiusM);
  // Reconstruct a spec with an explicit cosine factor (deserialization).
  MeshSpec(BoundingBox bbox, double cell_size_m, double ref_cos, double earth_radius_m);

  const BoundingBox& bbox() const noexcept { return bbox_; }
  double cell_size() const noexcept { return cell_size_; }
  double ref_cos() const noexcept { return ref_cos_; }
  double earth_radius() const noexcept { return earth_radius_; }

  // Grid extent. Points on the north/east bbox edge fall into the last cell.
  std::int32_t columns() const noexcept { return columns_; }
  std::int32_t rows() const noexcept { return rows_; }
  std::size_t cell_count() const noexcept {
    return static_cast<std::size_t>(columns_) * static_cast<std::size_t>(rows_);
  }

  bool in_grid(CellId c) const noexcept {
    return c.ix >= 0 && c.iy >= 0 && c.ix < columns_ && c.iy < rows_;
  }
  // Row-major linear key; only meaningful for in_grid cells.
  std::size_t linear(CellId c) const noexcept {
    return static_cast<std::size_t>(c.iy) * static_cast<std::size_t>(columns_) +
           static_cast<std::size_t>(c.ix);
  }
  CellId from_linear(std::size_t key) const noexcept {
    return {static_cast<std::int32_t>(key % static_cast<std::size_t>(columns_)),
            static_cast<std::int32_t>(key / static_cast<std::size_t>(columns_))};
  }

  friend bool operator==(const MeshSpec& a, const MeshSpec& b) {
    return a.bbox_ == b.bbox_ && a.cell_size_ == b.cell_size_ && a.ref_cos_ == b.ref_cos_ &&
           a.earth_radius_ == b.earth_radius_;
  }

 private:
  void init_extent();

  BoundingBox bbox_;
  double cell_size_;
  double ref_cos_;
  double earth_radius_;
  std::int32_t columns_ = 0;
  std::int32_t rows_ = 0;
};

// Great-circle distance in meters on a sphere of radius `radius_m`.
double haversine(GeoPoint a, GeoPoint b, double radius_m = kEarthRadiusM) noexcept;

// The haversine formula in two steps, for scans that precompute per-point
// terms and defer the arcsine. haversine(a, b, r) is exactly
// hav_distance(hav_term(hav_point(a), hav_point(b)), r), and hav_distance is
// non-decreasing in h.
struct HavPoint {
  double lat_rad = 0.0;
  double cos_lat = 1.0;
  double lon_deg = 0.0;
  friend bool operator==(const HavPoint&, const HavPoint&) = default;
};

inline HavPoint hav_point(GeoPoint p) noexcept {
  const double lat = p.lat * kDegToRad;
  return {lat, std::cos(lat), p.lon};
}

inline double hav_term(const HavPoint& a, const HavPoint& b) noexcept {
  const double s_lat = std::sin((b.lat_rad - a.lat_rad) / 2.0);
  const double s_lon = std::sin((b.lon_deg - a.lon_deg) * kDegToRad / 2.0);
  // Squares make the expression exactly symmetric in (a, b).
  return s_lat * s_lat + a.cos_lat * b.cos_lat * (s_lon * s_lon);
}

inline double hav_distance(double h, double radius_m = kEarthRadiusM) noexcept {
  return 2.0 * radius_m * std::asin(std::sqrt(std::min(1.0, h)));
}

inline double meters_to_miles(double m) noexcept { return m / kMetersPerMile; }

// Throws OutOfBounds when p is outside spec.bbox().
PlanarPoint project(GeoPoint p, const MeshSpec& spec);
GeoPoint unproject(PlanarPoint xy, const MeshSpec& spec) noexcept;

// Throws OutOfBounds when p is outside spec.bbox().
CellId cell_of(GeoPoint p, const MeshSpec& spec);
// Non-throwing variant for hot loops over pre-validated points.
CellId cell_of_unchecked(GeoPoint p, const MeshSpec& spec) noexcept;
// Floor of planar offsets, clamped to the grid.
CellId cell_of(PlanarPoint xy, const MeshSpec& spec) noexcept;

GeoPoint cell_center(CellId c, const MeshSpec& spec) noexcept;

inline std::int32_t chebyshev(CellId a, CellId b) noexcept {
  const auto dx = a.ix > b.ix ? a.ix - b.ix : b.ix - a.ix;
  const auto dy = a.iy > b.iy ? a.iy - b.iy : b.iy - a.iy;
  return dx > dy ? dx : dy;
}

// In-grid cells within Chebyshev distance `ring` of c, ordered by (iy, ix).
std::vector<CellId> neighbors(CellId c, std::int32_t ring, const MeshSpec& spec);

}  // namespace cabfare
