#include "strata/mesh.hpp"

#include "strata/error.hpp"
#include "strata/io.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>

namespace strata {

namespace {

// Corners of pixel (r, c) counter-clockwise from south-west; corner (i, j) is the
// grid node at row line i, column line j.
constexpr std::array<std::pair<int, int>, 4> kCorners = {{{0, 0}, {0, 1}, {1, 1}, {1, 0}}};

class MeshBuilder {
 public:
  MeshBuilder(const LayerProduct& p, Layer layer) : l_(p[layer]), g_(p.geometry) {
    mesh_.layer = layer;
  }

  bool occ(int r, int c) const {
    return r >= 0 && c >= 0 && r < g_.rows && c < g_.cols && l_.occupied.at(r, c) != 0;
  }

  LayerMesh flat() {
    for (int r = 0; r < g_.rows; ++r) {
      for (int c = 0; c < g_.cols; ++c) {
        if (!occ(r, c)) continue;
        std::array<int, 4> top{}, bot{};
        for (std::size_t k = 0; k < 4; ++k) {
          const double x = g_.origin.x + (c + kCorners[k].second) * g_.pixel_size;
          const double y = g_.origin.y + (r + kCorners[k].first) * g_.pixel_size;
          top[k] = add({x, y, l_.hmax.at(r, c)});
          bot[k] = add({x, y, l_.hmin.at(r, c)});
        }
        cap(top, bot);
        for (std::size_t k = 0; k < 4; ++k) wall(top[k], top[(k + 1) % 4], bot[k], bot[(k + 1) % 4]);
      }
    }
    return std::move(mesh_);
  }

  LayerMesh averaged() {
    // Vertex pair (top, bottom) per (corner node, pixel group around it).
    std::map<std::pair<long long, int>, std::pair<int, int>> nodes;
    for (int r = 0; r < g_.rows; ++r) {
      for (int c = 0; c < g_.cols; ++c) {
        if (!occ(r, c)) continue;
        std::array<int, 4> top{}, bot{};
        for (std::size_t k = 0; k < 4; ++k) {
          const int nr = r + kCorners[k].first, nc = c + kCorners[k].second;
          const int group = corner_group(nr, nc, r, c);
          const long long key = static_cast<long long>(nr) * (g_.cols + 1) + nc;
          auto it = nodes.find({key, group});
          if (it == nodes.end()) {
            const auto [hi, lo] = corner_heights(nr, nc, group);
            const double x = g_.origin.x + nc * g_.pixel_size;
            const double y = g_.origin.y + nr * g_.pixel_size;
            it = nodes.emplace(std::make_pair(key, group), std::make_pair(add({x, y, hi}), add({x, y, lo}))).first;
          }
          top[k] = it->second.first;
          bot[k] = it->second.second;
        }
        cap(top, bot);
        // Boundary edges: south, east, north, west neighbours.
        const std::array<std::pair<int, int>, 4> nb = {{{r - 1, c}, {r, c + 1}, {r + 1, c}, {r, c - 1}}};
        for (std::size_t k = 0; k < 4; ++k)
          if (!occ(nb[k].first, nb[k].second)) wall(top[k], top[(k + 1) % 4], bot[k], bot[(k + 1) % 4]);
      }
    }
    return std::move(mesh_);
  }

 private:
  // The four pixels around node (nr, nc), indexed SW, SE, NE, NW (cyclic, each
  // edge-adjacent to the next).
  std::array<std::pair<int, int>, 4> around(int nr, int nc) const {
    return {{{nr - 1, nc - 1}, {nr - 1, nc}, {nr, nc}, {nr, nc - 1}}};
  }

  // Bitmask of the occupied pixels around the node that are edge-connected to (r, c).
  int corner_group(int nr, int nc, int r, int c) const {
    const auto px = around(nr, nc);
    int start = 0;
    for (int k = 0; k < 4; ++k)
      if (px[static_cast<std::size_t>(k)] == std::make_pair(r, c)) start = k;
    int mask = 1 << start;
    for (int dir : {1, 3}) {
      for (int step = 1; step < 4; ++step) {
        const int k = (start + dir * step) % 4;
        const auto& q = px[static_cast<std::size_t>(k)];
        if (!occ(q.first, q.second)) break;
        mask |= 1 << k;
      }
    }
    return mask;
  }

  std::pair<double, double> corner_heights(int nr, int nc, int mask) const {
    const auto px = around(nr, nc);
    double hi = 0.0, lo = 0.0;
    int n = 0;
    for (int k = 0; k < 4; ++k) {
      if (!(mask & (1 << k))) continue;
      const auto& q = px[static_cast<std::size_t>(k)];
      hi += l_.hmax.at(q.first, q.second);
      lo += l_.hmin.at(q.first, q.second);
      ++n;
    }
    return {hi / n, lo / n};
  }

  int add(Vec3 v) {
    mesh_.vertices.push_back(v);
    return static_cast<int>(mesh_.vertices.size()) - 1;
  }

  void cap(const std::array<int, 4>& t, const std::array<int, 4>& b) {
    mesh_.triangles.push_back({t[0], t[1], t[2]});
    mesh_.triangles.push_back({t[0], t[2], t[3]});
    mesh_.triangles.push_back({b[0], b[2], b[1]});
    mesh_.triangles.push_back({b[0], b[3], b[2]});
  }

  // Edge a -> b runs counter-clockwise around the pixel (interior on the left).
  void wall(int ta, int tb, int ba, int bb) {
    mesh_.triangles.push_back({ba, bb, tb});
    mesh_.triangles.push_back({ba, tb, ta});
  }

  const LayerRaster& l_;
  const RasterGeometry& g_;
  LayerMesh mesh_;
};

}  // namespace

LayerProduct empty_product(const RasterGeometry& geometry) {
  LayerProduct p;
  p.geometry = geometry;
  for (auto& l : p.layers) {
    l.occupied = Grid<std::uint8_t>(geometry, 0);
    l.hmin = Grid<double>(geometry, 0.0);
    l.hmax = Grid<double>(geometry, 0.0);
  }
  return p;
}

LayerMesh build_mesh(const LayerProduct& product, Layer layer, MeshMode mode) {
  const auto& l = product[layer];
  if (!(l.occupied.geometry() == product.geometry)) throw ConfigError("layer raster geometry mismatch");
  for (int r = 0; r < product.geometry.rows; ++r)
    for (int c = 0; c < product.geometry.cols; ++c)
      if (l.occupied.at(r, c) && !(l.hmin.at(r, c) >= 0.0 && l.hmin.at(r, c) <= l.hmax.at(r, c)))
        throw ConfigError("layer heights must satisfy 0 <= min <= max on occupied pixels");
  MeshBuilder b(product, layer);
  return mode == MeshMode::Flat ? b.flat() : b.averaged();
}

bool is_watertight(const LayerMesh& mesh) {
  std::map<std::pair<int, int>, int> edges;
  for (const auto& t : mesh.triangles) {
    for (int k = 0; k < 3; ++k) {
      const int a = t[static_cast<std::size_t>(k)], b = t[static_cast<std::size_t>((k + 1) % 3)];
      ++edges[{std::min(a, b), std::max(a, b)}];
    }
  }
  for (const auto& [e, n] : edges)
    if (n != 2) return false;
  return true;
}

double signed_volume(const LayerMesh& mesh) {
  if (mesh.vertices.empty()) return 0.0;
  const Vec3 o = mesh.vertices.front();
  double six = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3& p = mesh.vertices[static_cast<std::size_t>(t[0])];
    const Vec3& q = mesh.vertices[static_cast<std::size_t>(t[1])];
    const Vec3& s = mesh.vertices[static_cast<std::size_t>(t[2])];
    const double ax = p.x - o.x, ay = p.y - o.y, az = p.z - o.z;
    const double bx = q.x - o.x, by = q.y - o.y, bz = q.z - o.z;
    const double cx = s.x - o.x, cy = s.y - o.y, cz = s.z - o.z;
    six += ax * (by * cz - bz * cy) - ay * (bx * cz - bz * cx) + az * (bx * cy - by * cx);
  }
  return six / 6.0;
}

void write_obj(const LayerMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "# layer " << layer_name(mesh.layer) << '\n';
  for (const auto& v : mesh.vertices)
    out << "v " << format_double(v.x) << ' ' << format_double(v.y) << ' ' << format_double(v.z) << '\n';
  for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  if (!out) throw FormatError("failed writing " + path.string());
}

LayerMesh read_obj(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  LayerMesh mesh;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag) || tag[0] == '#') continue;
    const std::string ctx = path.string() + ":" + std::to_string(n);
    std::string a, b, c;
    if (!(ss >> a >> b >> c)) throw FormatError(ctx + ": expected three values");
    if (tag == "v") {
      mesh.vertices.push_back({parse_double(a, ctx), parse_double(b, ctx), parse_double(c, ctx)});
    } else if (tag == "f") {
      std::array<int, 3> t{};
      const std::string* s[3] = {&a, &b, &c};
      for (std::size_t k = 0; k < 3; ++k) {
        const auto idx = parse_int(s[k]->substr(0, s[k]->find('/')), ctx);
        if (idx < 1 || static_cast<std::size_t>(idx) > mesh.vertices.size())
          throw FormatError(ctx + ": face index out of range");
        t[k] = static_cast<int>(idx - 1);
      }
      mesh.triangles.push_back(t);
    } else {
      throw FormatError(ctx + ": unsupported record '" + tag + "'");
    }
  }
  return mesh;
}

}  // namespace strata
