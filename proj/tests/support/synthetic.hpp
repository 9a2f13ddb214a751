#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "cabfare/geo.hpp"
#include "cabfare/trip.hpp"

namespace cabfare::testkit {

// Quantized the same way ingest quantizes, so records round-trip through the
// binary formats unchanged.
GeoPoint random_point(std::mt19937_64& rng, const BoundingBox& bbox);

// Mixture corpus: most pickups in a Midtown cluster, the rest uniform over
// the bbox. Dropoffs are scattered a few kilometers around the pickup.
std::vector<TripRecord> synthetic_corpus(std::size_t n, std::uint64_t seed,
                                         const BoundingBox& bbox = BoundingBox::nyc());

// Point `meters` due north of p (pure meridian displacement on the sphere).
GeoPoint north_of(GeoPoint p, double meters);
GeoPoint east_of(GeoPoint p, double meters);

}  // namespace cabfare::testkit
