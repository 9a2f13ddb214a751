#include "cabfare/mesh_index.hpp"

#include <algorithm>
#include <limits>

#include "cabfare/errors.hpp"
#include "cabfare/kernels.hpp"
#include "cabfare/record_file.hpp"

namespace cabfare {

MeshIndex MeshIndex::build(std::vector<TripRecord> trips, const MeshSpec& spec,
                           std::int64_t built_at) {
  if (trips.size() >= std::numeric_limits<std::uint32_t>::max())
    throw DataError("too many trips for one index");
  if (spec.cell_count() >= std::numeric_limits<std::uint32_t>::max())
    throw ConfigError("mesh has too many cells");
  for (const auto& t : trips)
    if (!t.pickup.valid() || !spec.bbox().contains(t.pickup))
      throw OutOfBounds("trip " + std::to_string(t.trip_id) +
                        " has a pickup outside the mesh bounding box");

  MeshIndex index;
  index.spec_ = spec;
  index.built_at_ = built_at;
  const auto keys = kernels::pickup_cell_keys(trips, spec);
  auto buckets = kernels::bucket_by_cell(keys, spec.cell_count());
  index.cell_offsets_ = std::move(buckets.offsets);
  index.ordinals_ = std::move(buckets.ordinals);
  index.trips_ = std::move(trips);
  index.index_dropoffs();
  return index;
}

void MeshIndex::index_dropoffs() {
  dropoffs_.resize(ordinals_.size());
  for (std::size_t i = 0; i < ordinals_.size(); ++i) dropoffs_[i] = hav_point(trips_[ordinals_[i]].dropoff);
}

std::size_t MeshIndex::non_empty_cells() const noexcept {
  std::size_t n = 0;
  for (std::size_t k = 0; k + 1 < cell_offsets_.size(); ++k)
    n += cell_offsets_[k + 1] != cell_offsets_[k];
  return n;
}

std::span<const std::uint32_t> MeshIndex::trips_in(CellId cell) const noexcept {
  if (cell_offsets_.empty() || !spec_.in_grid(cell)) return {};
  const auto k = spec_.linear(cell);
  return std::span<const std::uint32_t>(ordinals_).subspan(
      cell_offsets_[k], cell_offsets_[k + 1] - cell_offsets_[k]);
}

std::int32_t MeshIndex::occupied_ring(CellId center, std::int32_t max_ring) const {
  if (trips_.empty()) throw NoTripsFound();

  // Past this radius every in-grid cell is covered.
  const std::int32_t grid_span = std::max(spec_.columns(), spec_.rows());
  const std::int32_t limit = std::min(max_ring, grid_span);

  auto occupied = [&](std::int32_t x, std::int32_t y) {
    return !trips_in({x, y}).empty();
  };

  std::int32_t found_ring = 0;
  if (!trips_in(center).empty()) found_ring = 1;
  for (std::int32_t r = 1; r <= limit && found_ring == 0; ++r) {
    // Only the perimeter of ring r is new.
    for (std::int32_t d = -r; d <= r && found_ring == 0; ++d) {
      if (occupied(center.ix + d, center.iy - r) || occupied(center.ix + d, center.iy + r) ||
          occupied(center.ix - r, center.iy + d) || occupied(center.ix + r, center.iy + d))
        found_ring = r;
    }
  }
  if (found_ring == 0) throw NoTripsFound();
  return found_ring;
}

NearbyTrips MeshIndex::trips_near(GeoPoint origin, std::int32_t max_ring) const {
  if (max_ring < 1) throw DataError("max_ring must be >= 1");
  const CellId center = cell_of(origin, spec_);
  NearbyTrips out;
  out.ring_used = occupied_ring(center, max_ring);
  for (const CellId c : neighbors(center, out.ring_used, spec_)) {
    const auto cell = trips_in(c);
    out.ordinals.insert(out.ordinals.end(), cell.begin(), cell.end());
  }
  std::sort(out.ordinals.begin(), out.ordinals.end());
  return out;
}

NearestDropoff MeshIndex::nearest_dropoff(GeoPoint origin, GeoPoint dest,
                                          std::int32_t max_ring) const {
  if (max_ring < 1) throw DataError("max_ring must be >= 1");
  const CellId center = cell_of(origin, spec_);
  const std::int32_t ring = occupied_ring(center, max_ring);
  const HavPoint d = hav_point(dest);

  NearestDropoff best{0, ring, std::numeric_limits<double>::infinity()};
  double best_h = std::numeric_limits<double>::infinity();
  const std::int32_t x0 = std::max(0, center.ix - ring);
  const std::int32_t x1 = std::min(spec_.columns() - 1, center.ix + ring);
  const std::int32_t y0 = std::max(0, center.iy - ring);
  const std::int32_t y1 = std::min(spec_.rows() - 1, center.iy + ring);
  for (std::int32_t y = y0; y <= y1; ++y) {
    // Cells of one grid row are adjacent in the offset table.
    const std::uint32_t begin = cell_offsets_[spec_.linear({x0, y})];
    const std::uint32_t end = cell_offsets_[spec_.linear({x1, y}) + 1];
    for (std::uint32_t i = begin; i < end; ++i) {
      const double h = hav_term(dropoffs_[i], d);
      // hav_distance is monotone and a relative step of 1e-9 in h moves the
      // distance by far more than one ulp, so h beyond this cannot tie.
      if (h > best_h * (1.0 + 1e-9)) continue;
      best_h = std::min(best_h, h);
      const double gap = hav_distance(h);
      const std::uint32_t o = ordinals_[i];
      if (gap < best.gap_m || (gap == best.gap_m && o < best.ordinal)) {
        best.ordinal = o;
        best.gap_m = gap;
      }
    }
  }
  return best;
}

std::string MeshIndex::serialize() const {
  std::string payload;
  const auto& bb = spec_.bbox();
  for (double v : {bb.south_west.lat, bb.south_west.lon, bb.north_east.lat, bb.north_east.lon,
                   spec_.cell_size(), spec_.ref_cos(), spec_.earth_radius()})
    bin::put<double>(payload, v);
  bin::put<std::int64_t>(payload, built_at_);
  bin::put<std::uint32_t>(payload, static_cast<std::uint32_t>(spec_.columns()));
  bin::put<std::uint32_t>(payload, static_cast<std::uint32_t>(spec_.rows()));

  // Cell directory: sorted (ix, iy, offset, length) for non-empty cells.
  bin::put<std::uint64_t>(payload, non_empty_cells());
  for (std::size_t k = 0; k + 1 < cell_offsets_.size(); ++k) {
    const auto len = cell_offsets_[k + 1] - cell_offsets_[k];
    if (len == 0) continue;
    const CellId c = spec_.from_linear(k);
    bin::put<std::int32_t>(payload, c.ix);
    bin::put<std::int32_t>(payload, c.iy);
    bin::put<std::uint32_t>(payload, cell_offsets_[k]);
    bin::put<std::uint32_t>(payload, len);
  }
  bin::put<std::uint64_t>(payload, ordinals_.size());
  for (auto o : ordinals_) bin::put<std::uint32_t>(payload, o);
  append_trip_store(payload, trips_);
  return frame(kIndexMagic, kIndexVersion, payload);
}

MeshIndex MeshIndex::deserialize(std::string_view file_bytes) {
  const std::string payload = unframe(kIndexMagic, kIndexVersion, file_bytes);
  std::size_t off = 0;
  double v[7];
  for (double& x : v) x = bin::get<double>(payload, off);
  MeshIndex index;
  try {
    index.spec_ = MeshSpec({{v[0], v[1]}, {v[2], v[3]}}, v[4], v[5], v[6]);
  } catch (const ConfigError& e) {
    throw CorruptFile(std::string("invalid mesh spec block: ") + e.what());
  }
  index.built_at_ = bin::get<std::int64_t>(payload, off);
  const auto columns = bin::get<std::uint32_t>(payload, off);
  const auto rows = bin::get<std::uint32_t>(payload, off);
  if (columns != static_cast<std::uint32_t>(index.spec_.columns()) ||
      rows != static_cast<std::uint32_t>(index.spec_.rows()))
    throw CorruptFile("grid extent disagrees with mesh spec");

  const auto cells = bin::get<std::uint64_t>(payload, off);
  if (cells > index.spec_.cell_count()) throw CorruptFile("cell directory too large");
  index.cell_offsets_.assign(index.spec_.cell_count() + 1, 0);
  std::uint32_t expected_offset = 0;
  std::size_t prev_key = 0;
  std::vector<std::pair<std::size_t, std::uint32_t>> lengths;
  lengths.reserve(cells);
  for (std::uint64_t i = 0; i < cells; ++i) {
    const CellId c{bin::get<std::int32_t>(payload, off), bin::get<std::int32_t>(payload, off)};
    const auto offset = bin::get<std::uint32_t>(payload, off);
    const auto len = bin::get<std::uint32_t>(payload, off);
    if (!index.spec_.in_grid(c)) throw CorruptFile("cell directory entry outside grid");
    const auto key = index.spec_.linear(c);
    if ((i > 0 && key <= prev_key) || offset != expected_offset || len == 0)
      throw CorruptFile("cell directory not sorted or not contiguous");
    prev_key = key;
    expected_offset += len;
    lengths.emplace_back(key, len);
  }
  for (const auto& [key, len] : lengths) index.cell_offsets_[key + 1] = len;
  for (std::size_t k = 1; k < index.cell_offsets_.size(); ++k)
    index.cell_offsets_[k] += index.cell_offsets_[k - 1];

  const auto n_ordinals = bin::get<std::uint64_t>(payload, off);
  if (n_ordinals != expected_offset) throw CorruptFile("ordinal count disagrees with directory");
  if (n_ordinals > (payload.size() - off) / 4) throw CorruptFile("ordinal table truncated");
  index.ordinals_.resize(n_ordinals);
  for (auto& o : index.ordinals_) o = bin::get<std::uint32_t>(payload, off);
  index.trips_ = parse_trip_store(payload, off);
  if (off != payload.size()) throw CorruptFile("trailing bytes after trip store");
  if (index.trips_.size() != n_ordinals) throw CorruptFile("trip count disagrees with ordinals");
  for (auto o : index.ordinals_)
    if (o >= index.trips_.size()) throw CorruptFile("ordinal out of range");
  index.index_dropoffs();
  return index;
}

void MeshIndex::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

MeshIndex MeshIndex::load(const std::filesystem::path& path) { return deserialize(read_file(path)); }

}  // namespace cabfare
