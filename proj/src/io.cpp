#include "strata/io.hpp"

#include "strata/error.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace strata {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, std::string_view context) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != end)
    throw FormatError(std::string(context) + ": expected a number, got '" + std::string(text) + "'");
  return v;
}

long long parse_int(std::string_view text, std::string_view context) {
  long long v = 0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (text.empty() || res.ec != std::errc() || res.ptr != end)
    throw FormatError(std::string(context) + ": expected an integer, got '" + std::string(text) + "'");
  return v;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueList parse_key_values(std::istream& in, std::string_view source) {
  KeyValueList out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string_view::npos)
      throw FormatError(std::string(source) + ":" + std::to_string(line_no) + ": expected key=value");
    const auto key = trim(t.substr(0, eq));
    if (key.empty())
      throw FormatError(std::string(source) + ":" + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::string(key), std::string(trim(t.substr(eq + 1))));
  }
  return out;
}

KeyValueList read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  return parse_key_values(in, path.string());
}

void write_key_values(const KeyValueList& kv, const std::filesystem::path& path,
                      const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& c : comments) out << "# " << c << '\n';
  for (const auto& [k, v] : kv) out << k << " = " << v << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------

PlotCloud read_ascii_points(std::istream& in, std::string plot_id, std::string_view source) {
  std::vector<PointRecord> pts;
  std::optional<std::array<double, 4>> extent;
  std::string line;
  int line_no = 0;
  auto where = [&] { return std::string(source) + ":" + std::to_string(line_no); };
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      std::istringstream ss{std::string(t.substr(1))};
      std::string word;
      if (ss >> word && word == "extent") {
        std::array<double, 4> e{};
        std::string tok;
        for (auto& v : e) {
          if (!(ss >> tok)) throw FormatError(where() + ": extent comment needs 4 numbers");
          v = parse_double(tok, where());
        }
        extent = e;
      }
      continue;
    }
    std::istringstream ss{std::string(t)};
    std::array<std::string, 6> cols;
    std::size_t n = 0;
    std::string tok;
    while (ss >> tok) {
      if (n == cols.size()) throw FormatError(where() + ": expected 6 columns, got more");
      cols[n++] = tok;
    }
    if (n != cols.size()) throw FormatError(where() + ": expected 6 columns, got " + std::to_string(n));
    PointRecord p;
    p.x = parse_double(cols[0], where());
    p.y = parse_double(cols[1], where());
    p.z = parse_double(cols[2], where());
    if (p.z < 0.0) throw FormatError(where() + ": negative elevation");
    const auto intensity = parse_int(cols[3], where());
    const auto ret = parse_int(cols[4], where());
    const auto label = parse_int(cols[5], where());
    if (intensity < 0 || intensity > 0xffffffffLL) throw FormatError(where() + ": intensity out of range");
    if (ret < 1 || ret > 255) throw FormatError(where() + ": return number must be in [1, 255]");
    if (label < kUnlabeledId || label >= kNumClasses) throw FormatError(where() + ": label out of range");
    p.intensity = static_cast<std::uint32_t>(intensity);
    p.return_number = static_cast<std::uint8_t>(ret);
    p.label = label_from_id(static_cast<int>(label));
    pts.push_back(p);
  }
  try {
    if (extent)
      return PlotCloud(std::move(plot_id), {(*extent)[0], (*extent)[1]}, {(*extent)[2], (*extent)[3]},
                       std::move(pts));
    return PlotCloud::from_points(std::move(plot_id), std::move(pts));
  } catch (const ConfigError& e) {
    throw FormatError(std::string(source) + ": " + e.what());
  }
}

PlotCloud read_points(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".las") return read_las(path);
  if (ext == ".txt" || ext == ".xyz" || ext == ".pts") {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open " + path.string());
    return read_ascii_points(in, path.stem().string(), path.string());
  }
  throw FormatError("unsupported point file extension '" + ext + "': " + path.string());
}

void write_points(const PlotCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "# x y z intensity return_number label\n";
  out << "# extent " << format_double(cloud.origin().x) << ' ' << format_double(cloud.origin().y) << ' '
      << format_double(cloud.extent().x) << ' ' << format_double(cloud.extent().y) << '\n';
  for (const auto& p : cloud.points()) {
    out << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z) << ' '
        << p.intensity << ' ' << static_cast<int>(p.return_number) << ' ' << label_to_id(p.label) << '\n';
  }
  if (!out) throw Error("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// LAS 1.2
// ---------------------------------------------------------------------------

namespace {

static_assert(std::endian::native == std::endian::little, "LAS I/O assumes a little-endian host");

template <typename T>
T read_le(const std::vector<char>& buf, std::size_t offset) {
  T v;
  std::memcpy(&v, buf.data() + offset, sizeof(T));
  return v;
}

template <typename T>
void put_le(std::vector<char>& buf, std::size_t offset, T v) {
  std::memcpy(buf.data() + offset, &v, sizeof(T));
}

constexpr std::size_t kLasHeaderSize = 227;

}  // namespace

PlotCloud read_las(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string where = path.string();
  if (buf.size() < kLasHeaderSize || std::memcmp(buf.data(), "LASF", 4) != 0)
    throw FormatError(where + ": not a LAS file");
  const auto major = read_le<std::uint8_t>(buf, 24);
  const auto minor = read_le<std::uint8_t>(buf, 25);
  if (major != 1 || minor > 2)
    throw FormatError(where + ": unsupported LAS version " + std::to_string(major) + "." + std::to_string(minor));
  const auto offset = read_le<std::uint32_t>(buf, 96);
  const auto format = read_le<std::uint8_t>(buf, 104);
  const auto record_len = read_le<std::uint16_t>(buf, 105);
  const auto count = read_le<std::uint32_t>(buf, 107);
  if (format & 0x80) throw FormatError(where + ": compressed LAS (LAZ) is not supported");
  if (format > 1) throw FormatError(where + ": unsupported point data format " + std::to_string(format));
  const std::size_t min_len = format == 0 ? 20 : 28;
  if (record_len < min_len) throw FormatError(where + ": point record too short");
  if (static_cast<std::size_t>(offset) + static_cast<std::size_t>(count) * record_len > buf.size())
    throw FormatError(where + ": truncated point data");
  const double sx = read_le<double>(buf, 131), sy = read_le<double>(buf, 139), sz = read_le<double>(buf, 147);
  const double ox = read_le<double>(buf, 155), oy = read_le<double>(buf, 163), oz = read_le<double>(buf, 171);

  std::vector<PointRecord> pts;
  pts.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t base = offset + static_cast<std::size_t>(i) * record_len;
    PointRecord p;
    p.x = read_le<std::int32_t>(buf, base) * sx + ox;
    p.y = read_le<std::int32_t>(buf, base + 4) * sy + oy;
    p.z = read_le<std::int32_t>(buf, base + 8) * sz + oz;
    if (p.z < 0.0) throw FormatError(where + ": point " + std::to_string(i) + " has negative elevation");
    p.intensity = read_le<std::uint16_t>(buf, base + 12);
    const auto bits = read_le<std::uint8_t>(buf, base + 14);
    p.return_number = static_cast<std::uint8_t>(std::max(1, bits & 0x07));
    pts.push_back(p);
  }
  return PlotCloud::from_points(path.stem().string(), std::move(pts));
}

void write_las(const PlotCloud& cloud, const std::filesystem::path& path, double scale) {
  const std::size_t n = cloud.size();
  std::vector<char> buf(kLasHeaderSize + n * 20, 0);
  std::memcpy(buf.data(), "LASF", 4);
  put_le<std::uint8_t>(buf, 24, 1);
  put_le<std::uint8_t>(buf, 25, 2);
  put_le<std::uint16_t>(buf, 94, static_cast<std::uint16_t>(kLasHeaderSize));
  put_le<std::uint32_t>(buf, 96, static_cast<std::uint32_t>(kLasHeaderSize));
  put_le<std::uint8_t>(buf, 104, 0);
  put_le<std::uint16_t>(buf, 105, 20);
  put_le<std::uint32_t>(buf, 107, static_cast<std::uint32_t>(n));
  const double ox = cloud.origin().x, oy = cloud.origin().y, oz = 0.0;
  for (std::size_t off : {131u, 139u, 147u}) put_le<double>(buf, off, scale);
  put_le<double>(buf, 155, ox);
  put_le<double>(buf, 163, oy);
  put_le<double>(buf, 171, oz);
  double maxx = ox, minx = ox, maxy = oy, miny = oy, maxz = 0.0, minz = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = cloud[i];
    const std::size_t base = kLasHeaderSize + i * 20;
    put_le<std::int32_t>(buf, base, static_cast<std::int32_t>(std::llround((p.x - ox) / scale)));
    put_le<std::int32_t>(buf, base + 4, static_cast<std::int32_t>(std::llround((p.y - oy) / scale)));
    put_le<std::int32_t>(buf, base + 8, static_cast<std::int32_t>(std::llround((p.z - oz) / scale)));
    put_le<std::uint16_t>(buf, base + 12, static_cast<std::uint16_t>(std::min<std::uint32_t>(p.intensity, 0xffff)));
    const int rn = std::min<int>(p.return_number, 7);
    put_le<std::uint8_t>(buf, base + 14, static_cast<std::uint8_t>(rn | (rn << 3)));
    maxx = std::max(maxx, p.x); minx = std::min(minx, p.x);
    maxy = std::max(maxy, p.y); miny = std::min(miny, p.y);
    maxz = std::max(maxz, p.z); minz = std::min(minz, p.z);
  }
  put_le<double>(buf, 179, maxx); put_le<double>(buf, 187, minx);
  put_le<double>(buf, 195, maxy); put_le<double>(buf, 203, miny);
  put_le<double>(buf, 211, maxz); put_le<double>(buf, 219, minz);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("write failed: " + path.string());
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char chunk[1 << 16];
  while (in) {
    in.read(chunk, sizeof(chunk));
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(chunk[i]);
      h *= 0x100000001b3ULL;
    }
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

}  // namespace strata
