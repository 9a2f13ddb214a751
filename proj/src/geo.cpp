#include "cabfare/geo.hpp"

#include <algorithm>
#include <string>

#include "cabfare/errors.hpp"

namespace cabfare {

namespace {

[[noreturn]] void throw_out_of_bounds(GeoPoint p) {
  throw OutOfBounds("point (" + std::to_string(p.lat) + ", " + std::to_string(p.lon) +
                    ") outside mesh bounding box");
}

}  // namespace

MeshSpec::MeshSpec(BoundingBox bbox, double cell_size_m, double earth_radius_m)
    : MeshSpec(bbox, cell_size_m,
               std::cos((bbox.south_west.lat + bbox.north_east.lat) / 2.0 * kDegToRad),
               earth_radius_m) {}

MeshSpec::MeshSpec(BoundingBox bbox, double cell_size_m, double ref_cos, double earth_radius_m)
    : bbox_(bbox), cell_size_(cell_size_m), ref_cos_(ref_cos), earth_radius_(earth_radius_m) {
  if (!bbox_.valid()) throw ConfigError("invalid bounding box");
  if (!(cell_size_ > 0.0) || !std::isfinite(cell_size_)) throw ConfigError("cell_size must be > 0");
  if (!(ref_cos_ > 0.0 && ref_cos_ <= 1.0)) throw ConfigError("ref_cos must be in (0, 1]");
  if (!(earth_radius_ > 0.0)) throw ConfigError("earth_radius must be > 0");
  init_extent();
}

void MeshSpec::init_extent() {
  const PlanarPoint ne = {
      earth_radius_ * ref_cos_ * ((bbox_.north_east.lon - bbox_.south_west.lon) * kDegToRad),
      earth_radius_ * ((bbox_.north_east.lat - bbox_.south_west.lat) * kDegToRad)};
  const double cols = std::floor(ne.x / cell_size_) + 1.0;
  const double rows = std::floor(ne.y / cell_size_) + 1.0;
  if (cols * rows > 4.0e9) throw ConfigError("mesh too fine for bounding box");
  columns_ = static_cast<std::int32_t>(cols);
  rows_ = static_cast<std::int32_t>(rows);
}

double haversine(GeoPoint a, GeoPoint b, double radius_m) noexcept {
  return hav_distance(hav_term(hav_point(a), hav_point(b)), radius_m);
}

PlanarPoint project(GeoPoint p, const MeshSpec& spec) {
  if (!p.valid() || !spec.bbox().contains(p)) throw_out_of_bounds(p);
  const auto& sw = spec.bbox().south_west;
  return {spec.earth_radius() * spec.ref_cos() * ((p.lon - sw.lon) * kDegToRad),
          spec.earth_radius() * ((p.lat - sw.lat) * kDegToRad)};
}

GeoPoint unproject(PlanarPoint xy, const MeshSpec& spec) noexcept {
  const auto& sw = spec.bbox().south_west;
  return {sw.lat + xy.y / spec.earth_radius() / kDegToRad,
          sw.lon + xy.x / (spec.earth_radius() * spec.ref_cos()) / kDegToRad};
}

CellId cell_of(PlanarPoint xy, const MeshSpec& spec) noexcept {
  const double fx = std::floor(xy.x / spec.cell_size());
  const double fy = std::floor(xy.y / spec.cell_size());
  const auto ix = static_cast<std::int32_t>(std::clamp(fx, 0.0, spec.columns() - 1.0));
  const auto iy = static_cast<std::int32_t>(std::clamp(fy, 0.0, spec.rows() - 1.0));
  return {ix, iy};
}

CellId cell_of_unchecked(GeoPoint p, const MeshSpec& spec) noexcept {
  const auto& sw = spec.bbox().south_west;
  return cell_of(PlanarPoint{spec.earth_radius() * spec.ref_cos() * ((p.lon - sw.lon) * kDegToRad),
                             spec.earth_radius() * ((p.lat - sw.lat) * kDegToRad)},
                 spec);
}

CellId cell_of(GeoPoint p, const MeshSpec& spec) {
  if (!p.valid() || !spec.bbox().contains(p)) throw_out_of_bounds(p);
  return cell_of_unchecked(p, spec);
}

GeoPoint cell_center(CellId c, const MeshSpec& spec) noexcept {
  return unproject({(c.ix + 0.5) * spec.cell_size(), (c.iy + 0.5) * spec.cell_size()}, spec);
}

std::vector<CellId> neighbors(CellId c, std::int32_t ring, const MeshSpec& spec) {
  std::vector<CellId> out;
  if (ring < 0 || !spec.in_grid(c)) return out;
  const std::int32_t x0 = std::max(0, c.ix - ring);
  const std::int32_t x1 = std::min(spec.columns() - 1, c.ix + ring);
  const std::int32_t y0 = std::max(0, c.iy - ring);
  const std::int32_t y1 = std::min(spec.rows() - 1, c.iy + ring);
  out.reserve(static_cast<std::size_t>(x1 - x0 + 1) * static_cast<std::size_t>(y1 - y0 + 1));
  for (std::int32_t y = y0; y <= y1; ++y)
    for (std::int32_t x = x0; x <= x1; ++x) out.push_back({x, y});
  return out;
}

}  // namespace cabfare
