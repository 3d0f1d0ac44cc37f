#include "amv/field_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace amv {
namespace {

constexpr char kMagic[4] = {'A', 'M', 'V', 'F'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint8_t kDtypeF64 = 0;
constexpr std::uint8_t kDtypeU8 = 1;

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& data;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > data.size()) throw IoError("truncated field file");
  }
  std::uint16_t u16() {
    need(2);
    const auto b0 = static_cast<std::uint8_t>(data[pos]);
    const auto b1 = static_cast<std::uint8_t>(data[pos + 1]);
    pos += 2;
    return static_cast<std::uint16_t>(b0 | (b1 << 8));
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(data[pos + i])) << (8 * i);
    }
    pos += 4;
    return v;
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(data[pos++]);
  }
  double f64() {
    need(8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) {
      bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(data[pos + i])) << (8 * i);
    }
    pos += 8;
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
};

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return std::move(buf).str();
}

void dump(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::string header(std::uint32_t rows, std::uint32_t cols, std::uint32_t channels,
                   std::uint8_t dtype) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u16(buf, kVersion);
  put_u32(buf, rows);
  put_u32(buf, cols);
  put_u32(buf, channels);
  buf.push_back(static_cast<char>(dtype));
  return buf;
}

struct Header {
  PixelGrid grid;
  int channels;
  std::uint8_t dtype;
};

Header parse_header(Reader& r) {
  r.need(4);
  if (std::memcmp(r.data.data(), kMagic, 4) != 0) throw IoError("bad magic in field file");
  r.pos = 4;
  const std::uint16_t version = r.u16();
  if (version != kVersion) throw IoError("unsupported field file version");
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  const std::uint32_t channels = r.u32();
  const std::uint8_t dtype = r.u8();
  if (rows == 0 || cols == 0 || channels == 0) throw IoError("empty field file");
  Header h;
  h.grid = make_grid(static_cast<int>(rows), static_cast<int>(cols));
  h.channels = static_cast<int>(channels);
  h.dtype = dtype;
  return h;
}

}  // namespace

void write_field(const std::filesystem::path& path, const ImageStack& field) {
  std::string buf = header(field.grid.rows, field.grid.cols, field.channels, kDtypeF64);
  buf.reserve(buf.size() + 8 * field.values.size());
  for (Eigen::Index i = 0; i < field.values.size(); ++i) put_f64(buf, field.values[i]);
  dump(path, buf);
}

ImageStack read_field(const std::filesystem::path& path) {
  const std::string data = slurp(path);
  Reader r{data};
  const Header h = parse_header(r);
  if (h.dtype != kDtypeF64) throw IoError("expected f64 payload in " + path.string());
  ImageStack field = make_image(h.grid, h.channels);
  r.need(static_cast<std::size_t>(field.values.size()) * 8);
  for (Eigen::Index i = 0; i < field.values.size(); ++i) field.values[i] = r.f64();
  if (r.pos != data.size()) throw IoError("trailing bytes in " + path.string());
  return field;
}

void write_displacement(const std::filesystem::path& path, const DisplacementField& d) {
  ImageStack two = make_image(d.grid, 2);
  two.values = d.values;
  write_field(path, two);
}

DisplacementField read_displacement(const std::filesystem::path& path) {
  const ImageStack two = read_field(path);
  if (two.channels != 2) throw IoError("displacement file must have two channels");
  DisplacementField d = make_displacement(two.grid);
  d.values = two.values;
  return d;
}

void write_mask(const std::filesystem::path& path, const ObservationMask& mask) {
  std::string buf = header(mask.grid.rows, mask.grid.cols, 2, kDtypeU8);
  buf.reserve(buf.size() + 2 * mask.t0.size());
  for (auto v : mask.t0) buf.push_back(static_cast<char>(v ? 1 : 0));
  for (auto v : mask.t1) buf.push_back(static_cast<char>(v ? 1 : 0));
  dump(path, buf);
}

ObservationMask read_mask(const std::filesystem::path& path) {
  const std::string data = slurp(path);
  Reader r{data};
  const Header h = parse_header(r);
  if (h.dtype != kDtypeU8 || h.channels != 2) {
    throw IoError("mask file must be a two-channel u8 field");
  }
  const int m = h.grid.pixels();
  r.need(static_cast<std::size_t>(2 * m));
  ObservationMask mask;
  mask.grid = h.grid;
  mask.t0.resize(m);
  mask.t1.resize(m);
  for (int s = 0; s < m; ++s) mask.t0[s] = r.u8();
  for (int s = 0; s < m; ++s) mask.t1[s] = r.u8();
  if (r.pos != data.size()) throw IoError("trailing bytes in " + path.string());
  return mask;
}

ImageStack masked_for_file(const ImageStack& field,
                           const std::vector<std::uint8_t>& observed) {
  ImageStack out = field;
  const int m = field.grid.pixels();
  for (int c = 0; c < field.channels; ++c) {
    for (int s = 0; s < m; ++s) {
      if (!observed[s]) out.at(c, s) = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

std::string epe_csv_text(const std::vector<EpeCsvRow>& rows) {
  std::ostringstream out;
  out.precision(12);
  out << "method,standard,weighted1,weighted2,masked,sparse,sparse_masked\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.standard << ',' << r.weighted1 << ',' << r.weighted2 << ','
        << r.masked << ',' << r.sparse << ',' << r.sparse_masked << '\n';
  }
  return std::move(out).str();
}

void write_epe_csv(const std::filesystem::path& path, const std::vector<EpeCsvRow>& rows) {
  dump(path, epe_csv_text(rows));
}

void write_summary(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ostringstream out;
  for (const auto& [key, value] : entries) out << key << '=' << value << '\n';
  dump(path, std::move(out).str());
}

std::vector<std::pair<std::string, std::string>> read_key_values(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!key.empty()) entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

}  // namespace amv
