#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "dbsa/geometry.hpp"
#include "dbsa/grid.hpp"

namespace dbsa {

// Uniform affine map from data coordinates into the unit-square domain:
// unit = (data - offset) * scale.
struct Normalization {
  Point2D offset{0.0, 0.0};
  double scale = 1.0;

  Point2D apply(Point2D p) const { return {(p.x - offset.x) * scale, (p.y - offset.y) * scale}; }
  Point2D invert(Point2D p) const { return {p.x / scale + offset.x, p.y / scale + offset.y}; }
  double to_unit(double distance) const { return distance * scale; }
  double to_data(double distance) const { return distance / scale; }

  std::string to_json() const;
  static Normalization from_json(std::string_view text);

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

// Fits the MBR of everything into [0, 1)^2 with 1% padding on each side.
// Degenerate data (a single location) gets a unit side.
Normalization normalization_for(const MBR& data_bounds);

struct Rejected {
  std::size_t line = 0;  // 1-based line (CSV, WKT) or feature index + 1 (GeoJSON)
  std::string source;
  std::string reason;
};

// Region rings as read from a file, before validation.
struct RawPolygon {
  Ring outer;
  std::vector<Ring> holes;
};
struct RawRegion {
  std::int64_t id = 0;
  std::size_t line = 0;
  std::vector<RawPolygon> parts;
};

// CSV with a header row. Location columns are x/y or lon/lat (also lng,
// longitude, latitude; case-insensitive) unless named explicitly; every
// other column is a numeric attribute. Bad rows are skipped and reported.
PointSet read_points_csv(std::istream& in, std::vector<Rejected>& rejects, const std::string& source = "points",
                         const std::string& x_column = {}, const std::string& y_column = {});

// GeoJSON FeatureCollection / Feature / geometry with Polygon or
// MultiPolygon members. Ids are assigned 0, 1, ... in file order.
std::vector<RawRegion> read_regions_geojson(std::string_view text, std::vector<Rejected>& rejects,
                                            const std::string& source = "regions");
// One POLYGON or MULTIPOLYGON per line; blank lines and '#' comments skipped.
std::vector<RawRegion> read_regions_wkt(std::istream& in, std::vector<Rejected>& rejects,
                                        const std::string& source = "regions");

// Validated regions in unit coordinates; invalid geometries are rejected.
std::vector<RegionRecord> build_regions(const std::vector<RawRegion>& raw, const Normalization& norm,
                                        std::vector<Rejected>& rejects, const std::string& source = "regions");

struct Workload {
  PointSet points;                   // unit coordinates
  std::vector<RegionRecord> regions; // unit coordinates
  GridConfig domain;                 // the unit square
  Normalization norm;
  std::vector<Rejected> rejects;
};

struct IngestOptions {
  std::string points_path;   // optional
  std::string regions_path;  // optional; .json/.geojson or WKT lines
  std::string x_column;
  std::string y_column;
  std::optional<Normalization> normalization;  // reuse instead of fitting
};

Workload ingest(const IngestOptions& opts);

// Summary of a workload as one JSON object (counts, rejects, normalization).
std::string summary_json(const Workload& w);

// Deterministic random source shared by the generators. Draws are defined
// here rather than by std distributions, so streams match across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n);  // [0, n)
  double normal();

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

// Star-shaped simple polygon around `center` with vertex radii in
// [0.4, 1] * radius; with a hole, a small convex hole around the center.
Polygon random_polygon(Rng& rng, Point2D center, double radius, std::size_t vertices, bool with_hole);

struct SyntheticConfig {
  std::uint64_t seed = 42;
  std::size_t points = 100000;
  std::size_t regions = 10;
  std::size_t clusters = 8;
  double clustered_fraction = 0.6;
  double cluster_sigma = 0.04;
  double radius_min = 0.04;
  double radius_max = 0.18;
  std::size_t vertices_min = 5;
  std::size_t vertices_max = 24;
  double hole_probability = 0.25;
  double multipart_probability = 0.1;
};

// Clustered points with attributes "value" (>= 0) and "score" (signed),
// random polygons, all inside the unit square; identity normalization.
Workload synthetic_workload(const SyntheticConfig& cfg);

}  // namespace dbsa
