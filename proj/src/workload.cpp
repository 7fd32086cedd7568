#include "dbsa/workload.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <sstream>

#include "dbsa/error.hpp"
#include "json.hpp"

namespace dbsa {

using json = nlohmann::ordered_json;

std::string Normalization::to_json() const {
  json j;
  j["offset_x"] = offset.x;
  j["offset_y"] = offset.y;
  j["scale"] = scale;
  return j.dump();
}

Normalization Normalization::from_json(std::string_view text) {
  try {
    const auto j = json::parse(text);
    Normalization n{{j.at("offset_x").get<double>(), j.at("offset_y").get<double>()}, j.at("scale").get<double>()};
    if (!(n.scale > 0.0) || !std::isfinite(n.scale)) fail(ErrorCode::Format, "normalization scale must be positive");
    return n;
  } catch (const json::exception& e) {
    fail(ErrorCode::Format, std::string("bad normalization record: ") + e.what());
  }
}

Normalization normalization_for(const MBR& b) {
  double side = std::max(b.width(), b.height());
  if (!(side > 0.0)) side = 1.0;
  const double pad = 0.01 * side;
  return {{b.min.x - pad, b.min.y - pad}, 1.0 / (side + 2.0 * pad)};
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  s = s.substr(b, e - b);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_number(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const char* begin = s.data();
  if (*begin == '+') ++begin;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& wanted,
                        std::initializer_list<const char*> fallbacks, const char* what) {
  if (!wanted.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (lower(header[i]) == lower(wanted)) return i;
    fail(ErrorCode::Parse, std::string("header has no ") + what + " column '" + wanted + "'");
  }
  for (const char* name : fallbacks)
    for (std::size_t i = 0; i < header.size(); ++i)
      if (lower(header[i]) == name) return i;
  fail(ErrorCode::Parse, std::string("header names no ") + what + " column (expected x/y or lon/lat)");
}

}  // namespace

PointSet read_points_csv(std::istream& in, std::vector<Rejected>& rejects, const std::string& source,
                         const std::string& x_column, const std::string& y_column) {
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (!trim(line).empty()) {
      header = split_csv(line);
      break;
    }
  }
  if (header.empty()) fail(ErrorCode::Parse, source + ": missing CSV header");
  const std::size_t xc = find_column(header, x_column, {"x", "lon", "lng", "long", "longitude"}, "x");
  const std::size_t yc = find_column(header, y_column, {"y", "lat", "latitude"}, "y");
  if (xc == yc) fail(ErrorCode::Parse, source + ": x and y name the same column");

  PointSet points;
  std::vector<std::size_t> attr_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i == xc || i == yc) continue;
    attr_cols.push_back(i);
    points.attr_names.push_back(header[i]);
  }
  PointRecord rec;
  rec.attrs.resize(attr_cols.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      rejects.push_back({line_no, source,
                         "expected " + std::to_string(header.size()) + " fields, found " + std::to_string(fields.size())});
      continue;
    }
    const auto x = parse_number(fields[xc]);
    const auto y = parse_number(fields[yc]);
    if (!x || !y || !std::isfinite(*x) || !std::isfinite(*y)) {
      rejects.push_back({line_no, source, "location is not a finite number"});
      continue;
    }
    bool ok = true;
    for (std::size_t a = 0; a < attr_cols.size() && ok; ++a) {
      const auto v = parse_number(fields[attr_cols[a]]);
      if (!v || !std::isfinite(*v)) {
        rejects.push_back({line_no, source, "attribute '" + points.attr_names[a] + "' is not a finite number"});
        ok = false;
      } else {
        rec.attrs[a] = *v;
      }
    }
    if (!ok) continue;
    rec.loc = {*x, *y};
    points.add(rec);
  }
  return points;
}

namespace {

Ring ring_from_json(const json& coords) {
  if (!coords.is_array()) fail(ErrorCode::Parse, "ring is not an array");
  Ring ring;
  for (const auto& pos : coords) {
    if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number())
      fail(ErrorCode::Parse, "position is not a coordinate pair");
    ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
  }
  if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
  return ring;
}

RawPolygon polygon_from_json(const json& rings) {
  if (!rings.is_array() || rings.empty()) fail(ErrorCode::Parse, "polygon has no rings");
  RawPolygon p;
  p.outer = ring_from_json(rings[0]);
  for (std::size_t i = 1; i < rings.size(); ++i) p.holes.push_back(ring_from_json(rings[i]));
  return p;
}

std::vector<RawPolygon> parts_from_geometry(const json& g) {
  if (!g.is_object()) fail(ErrorCode::Parse, "feature has no geometry");
  const auto type = g.value("type", std::string());
  const auto it = g.find("coordinates");
  if (it == g.end()) fail(ErrorCode::Parse, "geometry has no coordinates");
  if (type == "Polygon") return {polygon_from_json(*it)};
  if (type == "MultiPolygon") {
    if (!it->is_array() || it->empty()) fail(ErrorCode::Parse, "multipolygon has no polygons");
    std::vector<RawPolygon> parts;
    for (const auto& poly : *it) parts.push_back(polygon_from_json(poly));
    return parts;
  }
  fail(ErrorCode::Parse, "unsupported geometry type '" + type + "'");
}

}  // namespace

std::vector<RawRegion> read_regions_geojson(std::string_view text, std::vector<Rejected>& rejects,
                                            const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Parse, source + ": " + e.what());
  }
  std::vector<json> geometries;
  const auto type = doc.is_object() ? doc.value("type", std::string()) : std::string();
  if (type == "FeatureCollection") {
    const auto it = doc.find("features");
    if (it == doc.end() || !it->is_array()) fail(ErrorCode::Parse, source + ": FeatureCollection without features");
    for (const auto& f : *it) geometries.push_back(f.is_object() && f.contains("geometry") ? f["geometry"] : json());
  } else if (type == "Feature") {
    geometries.push_back(doc.contains("geometry") ? doc["geometry"] : json());
  } else if (type == "Polygon" || type == "MultiPolygon") {
    geometries.push_back(doc);
  } else {
    fail(ErrorCode::Parse, source + ": expected a GeoJSON FeatureCollection, Feature or polygon geometry");
  }
  std::vector<RawRegion> out;
  for (std::size_t i = 0; i < geometries.size(); ++i) {
    try {
      out.push_back({static_cast<std::int64_t>(i), i + 1, parts_from_geometry(geometries[i])});
    } catch (const Error& e) {
      rejects.push_back({i + 1, source, std::string("feature ") + std::to_string(i) + ": " + e.what()});
    }
  }
  return out;
}

namespace {

// Recursive descent over one WKT geometry.
class WktParser {
 public:
  explicit WktParser(std::string_view s) : s_(s) {}

  std::vector<RawPolygon> parse() {
    const auto kw = lower(word());
    std::vector<RawPolygon> parts;
    if (kw == "polygon") {
      if (!empty_marker()) parts.push_back(polygon());
    } else if (kw == "multipolygon") {
      if (!empty_marker()) {
        expect('(');
        do parts.push_back(polygon());
        while (accept(','));
        expect(')');
      }
    } else {
      fail(ErrorCode::Parse, "expected POLYGON or MULTIPOLYGON");
    }
    skip();
    if (pos_ != s_.size()) fail(ErrorCode::Parse, "trailing characters after geometry");
    if (parts.empty()) fail(ErrorCode::Parse, "empty geometry");
    return parts;
  }

 private:
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  std::string word() {
    skip();
    const auto b = pos_;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    return std::string(s_.substr(b, pos_ - b));
  }
  bool empty_marker() {
    const auto save = pos_;
    auto w = lower(word());
    if (w == "z" || w == "m" || w == "zm") {
      const auto after = pos_;
      w = lower(word());
      if (w != "empty") pos_ = after;
    }
    if (w == "empty") return true;
    if (!w.empty() && w != "z" && w != "m" && w != "zm") pos_ = save;
    return false;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) fail(ErrorCode::Parse, std::string("expected '") + c + "' at column " + std::to_string(pos_ + 1));
  }
  double number() {
    skip();
    const auto b = pos_;
    while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || std::strchr("+-.eE", s_[pos_]))) ++pos_;
    const auto v = parse_number(std::string(s_.substr(b, pos_ - b)));
    if (!v || !std::isfinite(*v)) fail(ErrorCode::Parse, "bad number at column " + std::to_string(b + 1));
    return *v;
  }
  Ring ring() {
    expect('(');
    Ring r;
    do {
      const double x = number();
      const double y = number();
      // Extra ordinates (z, m) are ignored.
      while (true) {
        skip();
        if (pos_ >= s_.size() || s_[pos_] == ',' || s_[pos_] == ')') break;
        number();
      }
      r.push_back({x, y});
    } while (accept(','));
    expect(')');
    if (r.size() > 1 && r.front() == r.back()) r.pop_back();
    return r;
  }
  RawPolygon polygon() {
    expect('(');
    RawPolygon p;
    p.outer = ring();
    while (accept(',')) p.holes.push_back(ring());
    expect(')');
    return p;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<RawRegion> read_regions_wkt(std::istream& in, std::vector<Rejected>& rejects, const std::string& source) {
  std::vector<RawRegion> out;
  std::string line;
  std::size_t line_no = 0;
  std::int64_t next_id = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::int64_t id = next_id++;
    try {
      out.push_back({id, line_no, WktParser(t).parse()});
    } catch (const Error& e) {
      rejects.push_back({line_no, source, e.what()});
    }
  }
  return out;
}

std::vector<RegionRecord> build_regions(const std::vector<RawRegion>& raw, const Normalization& norm,
                                        std::vector<Rejected>& rejects, const std::string& source) {
  auto map_ring = [&](const Ring& r) {
    Ring out;
    out.reserve(r.size());
    for (const auto& p : r) out.push_back(norm.apply(p));
    return out;
  };
  std::vector<RegionRecord> out;
  for (const auto& reg : raw) {
    try {
      RegionRecord rec{reg.id, {}};
      for (const auto& part : reg.parts) {
        std::vector<Ring> holes;
        for (const auto& h : part.holes) holes.push_back(map_ring(h));
        rec.parts.emplace_back(map_ring(part.outer), std::move(holes));
      }
      const MBR b = mbr_of(rec);
      if (b.min.x < 0.0 || b.min.y < 0.0 || b.max.x > 1.0 || b.max.y > 1.0)
        fail(ErrorCode::Domain, "region lies outside the normalized domain");
      out.push_back(std::move(rec));
    } catch (const Error& e) {
      rejects.push_back({reg.line, source, "region " + std::to_string(reg.id) + ": " + e.what()});
    }
  }
  return out;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool looks_like_geojson(const std::string& path, const std::string& text) {
  const auto ext = lower(path.substr(path.find_last_of('.') == std::string::npos ? path.size() : path.find_last_of('.')));
  if (ext == ".json" || ext == ".geojson") return true;
  const auto first = text.find_first_not_of(" \t\r\n");
  return first != std::string::npos && text[first] == '{';
}

}  // namespace

Workload ingest(const IngestOptions& opts) {
  if (opts.points_path.empty() && opts.regions_path.empty())
    fail(ErrorCode::InvalidArgument, "nothing to ingest: give a points file, a regions file or both");
  Workload w;
  PointSet raw_points;
  if (!opts.points_path.empty()) {
    std::ifstream in(opts.points_path);
    if (!in) fail(ErrorCode::Io, "cannot open '" + opts.points_path + "'");
    raw_points = read_points_csv(in, w.rejects, opts.points_path, opts.x_column, opts.y_column);
  }
  std::vector<RawRegion> raw_regions;
  if (!opts.regions_path.empty()) {
    const auto text = read_file(opts.regions_path);
    if (looks_like_geojson(opts.regions_path, text)) {
      raw_regions = read_regions_geojson(text, w.rejects, opts.regions_path);
    } else {
      std::istringstream in(text);
      raw_regions = read_regions_wkt(in, w.rejects, opts.regions_path);
    }
  }
  if (raw_points.empty() && raw_regions.empty()) fail(ErrorCode::Parse, "dataset is empty after parsing");

  if (opts.normalization) {
    w.norm = *opts.normalization;
  } else {
    bool first = true;
    MBR b{};
    auto grow = [&](Point2D p) {
      if (first) b = {p, p};
      else b.expand(p);
      first = false;
    };
    for (const auto& p : raw_points.locs) grow(p);
    for (const auto& r : raw_regions)
      for (const auto& part : r.parts) {
        for (const auto& p : part.outer) grow(p);
        for (const auto& h : part.holes)
          for (const auto& p : h) grow(p);
      }
    w.norm = normalization_for(b);
  }
  w.domain = GridConfig{{0.0, 0.0}, 1.0, 0};

  w.points.attr_names = raw_points.attr_names;
  for (std::size_t i = 0; i < raw_points.size(); ++i) {
    auto rec = raw_points.record(i);
    rec.loc = w.norm.apply(rec.loc);
    if (!w.domain.in_domain(rec.loc)) {
      w.rejects.push_back({0, opts.points_path, "point row " + std::to_string(i) + " lies outside the index domain"});
      continue;
    }
    w.points.add(rec);
  }
  w.regions = build_regions(raw_regions, w.norm, w.rejects, opts.regions_path);
  return w;
}

std::string summary_json(const Workload& w) {
  json j;
  j["points"] = w.points.size();
  j["regions"] = w.regions.size();
  j["attributes"] = w.points.attr_names;
  j["normalization"] = json::parse(w.norm.to_json());
  j["domain"] = {{"origin_x", w.domain.origin.x}, {"origin_y", w.domain.origin.y}, {"extent", w.domain.extent}};
  json rej = json::array();
  for (const auto& r : w.rejects) rej.push_back({{"source", r.source}, {"line", r.line}, {"reason", r.reason}});
  j["rejects"] = rej;
  return j.dump();
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
  return static_cast<std::uint64_t>((static_cast<unsigned __int128>(engine_()) * n) >> 64);
}

double Rng::normal() {
  if (spare_) {
    const double v = *spare_;
    spare_.reset();
    return v;
  }
  double u1 = 0.0;
  do u1 = uniform();
  while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

Polygon random_polygon(Rng& rng, Point2D center, double radius, std::size_t vertices, bool with_hole) {
  vertices = std::max<std::size_t>(vertices, 5);
  const double step = 2.0 * std::numbers::pi / static_cast<double>(vertices);
  Ring outer;
  for (std::size_t k = 0; k < vertices; ++k) {
    // Jitter stays below half a step, so angles remain ordered.
    const double a = step * (static_cast<double>(k) + rng.uniform(-0.3, 0.3));
    const double r = radius * rng.uniform(0.4, 1.0);
    outer.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
  }
  std::vector<Ring> holes;
  if (with_hole) {
    // Every outer edge stays beyond 0.4 * cos(0.8 * step) * radius >= 0.2 * radius.
    const std::size_t k = 4 + rng.below(3);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double r = 0.12 * radius;
    Ring h;
    for (std::size_t i = 0; i < k; ++i) {
      const double a = phase + 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
      h.push_back({center.x + r * std::cos(a), center.y + r * std::sin(a)});
    }
    holes.push_back(std::move(h));
  }
  return Polygon(std::move(outer), std::move(holes));
}

Workload synthetic_workload(const SyntheticConfig& cfg) {
  Rng rng(cfg.seed);
  Workload w;
  w.domain = GridConfig{{0.0, 0.0}, 1.0, 0};
  w.norm = Normalization{};

  auto random_part = [&]() {
    const double r = rng.uniform(cfg.radius_min, cfg.radius_max);
    const Point2D c{rng.uniform(r, 1.0 - r), rng.uniform(r, 1.0 - r)};
    const auto span = cfg.vertices_max > cfg.vertices_min ? cfg.vertices_max - cfg.vertices_min + 1 : 1;
    const std::size_t n = cfg.vertices_min + rng.below(span);
    const bool hole = rng.uniform() < cfg.hole_probability;
    return random_polygon(rng, c, r, n, hole);
  };
  for (std::size_t i = 0; i < cfg.regions; ++i) {
    RegionRecord rec{static_cast<std::int64_t>(i), {}};
    rec.parts.push_back(random_part());
    if (rng.uniform() < cfg.multipart_probability) rec.parts.push_back(random_part());
    w.regions.push_back(std::move(rec));
  }

  std::vector<Point2D> centers;
  for (std::size_t i = 0; i < std::max<std::size_t>(cfg.clusters, 1); ++i)
    centers.push_back({rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)});
  w.points.attr_names = {"value", "score"};
  w.points.locs.reserve(cfg.points);
  w.points.values.reserve(2 * cfg.points);
  for (std::size_t i = 0; i < cfg.points; ++i) {
    Point2D p;
    if (rng.uniform() < cfg.clustered_fraction) {
      const Point2D c = centers[rng.below(centers.size())];
      do p = {c.x + cfg.cluster_sigma * rng.normal(), c.y + cfg.cluster_sigma * rng.normal()};
      while (!w.domain.in_domain(p));
    } else {
      p = {rng.uniform(), rng.uniform()};
    }
    w.points.locs.push_back(p);
    w.points.values.push_back(std::floor(rng.uniform(0.0, 100.0) * 100.0) / 100.0);
    w.points.values.push_back(rng.normal());
  }
  return w;
}

}  // namespace dbsa
