#include "spikecam/stream_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

namespace spikecam {

namespace {

constexpr std::uint16_t kFormatVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}
void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

class Reader {
 public:
  Reader(const std::string& path, const char* what)
      : path_(path), what_(what), in_(path, std::ios::binary) {
    if (!in_) throw IoError(IoError::Kind::open_failed, std::string(what) + ": cannot open " + path);
  }

  void read_exact(void* dst, std::size_t n, const char* section) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n)
      throw IoError(IoError::Kind::truncated,
                    std::string(what_) + ": truncated " + section + " in " + path_);
  }

  std::uint16_t u16(const char* s) {
    std::uint8_t b[2];
    read_exact(b, 2, s);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
  }
  std::uint32_t u32(const char* s) {
    std::uint8_t b[4];
    read_exact(b, 4, s);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::uint64_t u64(const char* s) {
    const std::uint64_t lo = u32(s);
    const std::uint64_t hi = u32(s);
    return lo | (hi << 32);
  }
  float f32(const char* s) { return std::bit_cast<float>(u32(s)); }
  std::uint8_t u8(const char* s) {
    std::uint8_t b;
    read_exact(&b, 1, s);
    return b;
  }

  void expect_magic(const char (&magic)[5]) {
    char buf[4];
    read_exact(buf, 4, "magic");
    if (std::memcmp(buf, magic, 4) != 0)
      throw IoError(IoError::Kind::bad_magic,
                    std::string(what_) + ": bad magic in " + path_ + ", expected " + magic);
  }

  void expect_version() {
    const std::uint16_t v = u16("version");
    if (v != kFormatVersion)
      throw IoError(IoError::Kind::bad_version, std::string(what_) + ": unsupported version " +
                                                    std::to_string(v) + " in " + path_);
  }

  bool at_eof() {
    in_.peek();
    return in_.eof();
  }

  void expect_eof() {
    if (!at_eof())
      throw IoError(IoError::Kind::malformed,
                    std::string(what_) + ": trailing bytes after body in " + path_);
  }

  // Optional 4-byte section tag; false at clean EOF.
  bool try_magic(const char (&magic)[5]) {
    char buf[4];
    in_.read(buf, 4);
    const auto got = static_cast<std::size_t>(in_.gcount());
    if (got == 0 && in_.eof()) return false;
    if (got != 4)
      throw IoError(IoError::Kind::truncated, std::string(what_) + ": truncated section tag in " + path_);
    if (std::memcmp(buf, magic, 4) != 0)
      throw IoError(IoError::Kind::malformed,
                    std::string(what_) + ": unexpected section tag in " + path_);
    return true;
  }

 private:
  std::string path_;
  const char* what_;
  std::ifstream in_;
};

void write_file(const std::string& path, const std::string& header,
                const std::vector<std::pair<const void*, std::size_t>>& blocks,
                const char* what) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::open_failed, std::string(what) + ": cannot open " + path);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& [ptr, n] : blocks)
    out.write(static_cast<const char*>(ptr), static_cast<std::streamsize>(n));
  out.flush();
  if (!out) throw IoError(IoError::Kind::open_failed, std::string(what) + ": write failed for " + path);
}

std::uint8_t reverse_bits(std::uint8_t b) {
  b = static_cast<std::uint8_t>((b & 0xF0u) >> 4 | (b & 0x0Fu) << 4);
  b = static_cast<std::uint8_t>((b & 0xCCu) >> 2 | (b & 0x33u) << 2);
  b = static_cast<std::uint8_t>((b & 0xAAu) >> 1 | (b & 0x55u) << 1);
  return b;
}

void check_geometry_limits(std::int64_t height, std::int64_t width, std::int64_t frames,
                           const char* what) {
  if (height < 1 || height > 0xFFFF || width < 1 || width > 0xFFFF)
    throw IoError(IoError::Kind::invalid_value,
                  std::string(what) + ": geometry outside the u16 format range");
  if (frames < 0 || frames > 0xFFFFFFFFll)
    throw IoError(IoError::Kind::invalid_value,
                  std::string(what) + ": frame count outside the u32 format range");
}

}  // namespace

void write_spikes(const SpikeStream& stream, const std::string& path) {
  check_geometry_limits(stream.height(), stream.width(), stream.n_frames(), "write_spikes");
  if (!(stream.dt_us() > 0.0))
    throw IoError(IoError::Kind::invalid_value, "write_spikes: dt_us must be > 0");

  std::string header;
  header += "SCSM";
  put_u16(header, kFormatVersion);
  put_u16(header, static_cast<std::uint16_t>(stream.height()));
  put_u16(header, static_cast<std::uint16_t>(stream.width()));
  put_u32(header, static_cast<std::uint32_t>(stream.n_frames()));
  put_f32(header, static_cast<float>(stream.dt_us()));
  header.push_back(static_cast<char>(stream.origin()));

  write_file(path, header, {{stream.raw().data(), stream.raw().size()}}, "write_spikes");
}

SpikeStream read_spikes(const std::string& path, BitOrder order) {
  Reader r(path, "read_spikes");
  r.expect_magic("SCSM");
  r.expect_version();
  const std::uint16_t h = r.u16("header");
  const std::uint16_t w = r.u16("header");
  const std::uint32_t n = r.u32("header");
  const float dt = r.f32("header");
  const std::uint8_t origin = r.u8("header");
  if (h < 1 || w < 1)
    throw IoError(IoError::Kind::invalid_value, "read_spikes: zero geometry in " + path);
  if (!(dt > 0.0f) || std::isnan(dt))
    throw IoError(IoError::Kind::invalid_value, "read_spikes: dt_us must be > 0 in " + path);
  if (origin > 2)
    throw IoError(IoError::Kind::invalid_value, "read_spikes: unknown origin tag in " + path);

  SpikeStream stream(h, w, n, dt, static_cast<StreamOrigin>(origin));
  r.read_exact(stream.raw().data(), stream.raw().size(), "body");
  r.expect_eof();

  if (order == BitOrder::msb_first)
    for (auto& b : stream.raw()) b = reverse_bits(b);

  const int pad_bits = static_cast<int>(stream.frame_bytes() * 8 - stream.pixel_count());
  if (pad_bits > 0) {
    const auto mask = static_cast<std::uint8_t>(0xFFu << (8 - pad_bits));
    for (std::int64_t f = 0; f < stream.n_frames(); ++f) {
      std::uint8_t& last = stream.frame_data(f)[stream.frame_bytes() - 1];
      if (last & mask) {
        // External MSB-first dumps may carry junk padding; the native layout
        // requires it zeroed.
        if (order == BitOrder::msb_first)
          last = static_cast<std::uint8_t>(last & ~mask);
        else
          throw IoError(IoError::Kind::invalid_value,
                        "read_spikes: nonzero padding bits in frame " + std::to_string(f) +
                            " of " + path);
      }
    }
  }
  return stream;
}

void write_luminance(const LuminanceSequence& lum, const std::string& path) {
  try {
    lum.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(IoError::Kind::invalid_value, std::string("write_luminance: ") + e.what());
  }
  check_geometry_limits(lum.height, lum.width, lum.n_frames, "write_luminance");

  std::string header;
  header += "SCLM";
  put_u16(header, kFormatVersion);
  put_u16(header, static_cast<std::uint16_t>(lum.height));
  put_u16(header, static_cast<std::uint16_t>(lum.width));
  put_u32(header, static_cast<std::uint32_t>(lum.n_frames));
  put_f32(header, static_cast<float>(lum.dt_us));

  std::vector<std::pair<const void*, std::size_t>> blocks;
  blocks.emplace_back(lum.values.data(), lum.values.size() * sizeof(float));
  std::string flow_tag = "SCFL";
  if (lum.has_flow()) {
    blocks.emplace_back(flow_tag.data(), flow_tag.size());
    blocks.emplace_back(lum.flow.data(), lum.flow.size() * sizeof(float));
  }
  static_assert(std::endian::native == std::endian::little,
                "bulk f32 block writes assume a little-endian host");
  write_file(path, header, blocks, "write_luminance");
}

LuminanceSequence read_luminance(const std::string& path) {
  Reader r(path, "read_luminance");
  r.expect_magic("SCLM");
  r.expect_version();
  LuminanceSequence lum;
  lum.height = r.u16("header");
  lum.width = r.u16("header");
  lum.n_frames = r.u32("header");
  const float dt = r.f32("header");
  if (lum.height < 1 || lum.width < 1)
    throw IoError(IoError::Kind::invalid_value, "read_luminance: zero geometry in " + path);
  if (!(dt > 0.0f) || std::isnan(dt))
    throw IoError(IoError::Kind::invalid_value, "read_luminance: dt_us must be > 0 in " + path);
  lum.dt_us = dt;

  const std::int64_t n_values = lum.n_frames * lum.pixel_count();
  lum.values.resize(static_cast<std::size_t>(n_values));
  static_assert(std::endian::native == std::endian::little,
                "bulk f32 block reads assume a little-endian host");
  r.read_exact(lum.values.data(), lum.values.size() * sizeof(float), "body");
  for (std::int64_t i = 0; i < n_values; ++i) {
    const float v = lum.values[static_cast<std::size_t>(i)];
    if (std::isnan(v) || v < 0.0f)
      throw IoError(IoError::Kind::invalid_value,
                    "read_luminance: invalid value at frame " +
                        std::to_string(i / lum.pixel_count()) + ", pixel " +
                        std::to_string(i % lum.pixel_count()) + " in " + path);
  }

  if (r.try_magic("SCFL")) {
    lum.flow.resize(static_cast<std::size_t>(n_values) * 2);
    r.read_exact(lum.flow.data(), lum.flow.size() * sizeof(float), "flow section");
    for (float v : lum.flow)
      if (std::isinf(v))
        throw IoError(IoError::Kind::invalid_value,
                      "read_luminance: non-finite flow value in " + path);
    r.expect_eof();
  }
  return lum;
}

void write_maps(const SpatialNoiseMaps& maps, const std::string& path) {
  const int h = maps.c_s.height(), w = maps.c_s.width();
  if (!maps.c_s.same_shape(maps.v_s) || !maps.c_s.same_shape(maps.alpha) ||
      !maps.c_s.same_shape(maps.i_dark))
    throw IoError(IoError::Kind::invalid_value, "write_maps: maps must share one shape");
  check_geometry_limits(h, w, 0, "write_maps");

  std::string header;
  header += "SCMP";
  put_u16(header, kFormatVersion);
  put_u16(header, static_cast<std::uint16_t>(h));
  put_u16(header, static_cast<std::uint16_t>(w));
  put_u64(header, maps.seed);

  const std::size_t plane = static_cast<std::size_t>(maps.c_s.size()) * sizeof(double);
  static_assert(std::endian::native == std::endian::little,
                "bulk f64 block writes assume a little-endian host");
  write_file(path, header,
             {{maps.c_s.data(), plane},
              {maps.v_s.data(), plane},
              {maps.alpha.data(), plane},
              {maps.i_dark.data(), plane}},
             "write_maps");
}

SpatialNoiseMaps read_maps(const std::string& path) {
  Reader r(path, "read_maps");
  r.expect_magic("SCMP");
  r.expect_version();
  const std::uint16_t h = r.u16("header");
  const std::uint16_t w = r.u16("header");
  const std::uint64_t seed = r.u64("header");
  if (h < 1 || w < 1)
    throw IoError(IoError::Kind::invalid_value, "read_maps: zero geometry in " + path);

  SpatialNoiseMaps maps;
  maps.seed = seed;
  maps.c_s = Grid<double>(h, w);
  maps.v_s = Grid<double>(h, w);
  maps.alpha = Grid<double>(h, w);
  maps.i_dark = Grid<double>(h, w);
  const std::size_t plane = static_cast<std::size_t>(maps.c_s.size()) * sizeof(double);
  r.read_exact(maps.c_s.data(), plane, "c_s plane");
  r.read_exact(maps.v_s.data(), plane, "v_s plane");
  r.read_exact(maps.alpha.data(), plane, "alpha plane");
  r.read_exact(maps.i_dark.data(), plane, "i_dark plane");
  r.expect_eof();
  for (std::int64_t i = 0; i < maps.c_s.size(); ++i)
    if (std::isnan(maps.c_s[i]) || std::isnan(maps.v_s[i]) || std::isnan(maps.alpha[i]) ||
        std::isnan(maps.i_dark[i]))
      throw IoError(IoError::Kind::invalid_value, "read_maps: NaN map value in " + path);
  return maps;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& value, const std::string& key, int line) {
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    throw IoError(IoError::Kind::malformed, "parse_params: line " + std::to_string(line) +
                                                ": bad numeric value for " + key);
  }
  if (used != value.size())
    throw IoError(IoError::Kind::malformed, "parse_params: line " + std::to_string(line) +
                                                ": bad numeric value for " + key);
  return v;
}

int parse_int(const std::string& value, const std::string& key, int line) {
  const double v = parse_number(value, key, line);
  if (v != std::floor(v) || std::fabs(v) > 1e9)
    throw IoError(IoError::Kind::malformed, "parse_params: line " + std::to_string(line) +
                                                ": " + key + " must be an integer");
  return static_cast<int>(v);
}

}  // namespace

ParamsFile parse_params_text(const std::string& text, const std::string& origin) {
  ParamsFile out;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (const auto hash = s.find('#'); hash != std::string::npos) s.erase(hash);
    s = trim(s);
    if (s.empty()) continue;

    const auto eq = s.find('=');
    if (eq == std::string::npos || s.find('=', eq + 1) != std::string::npos)
      throw IoError(IoError::Kind::malformed, "parse_params: line " + std::to_string(line) +
                                                  ": expected 'key = value' in " + origin);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty())
      throw IoError(IoError::Kind::malformed, "parse_params: line " + std::to_string(line) +
                                                  ": expected 'key = value' in " + origin);
    if (seen.count(key))
      throw IoError(IoError::Kind::malformed, "parse_params: line " + std::to_string(line) +
                                                  ": duplicate key " + key + " (first at line " +
                                                  std::to_string(seen[key]) + ")");
    seen[key] = line;

    if (key == "height") out.cfg.height = parse_int(value, key, line);
    else if (key == "width") out.cfg.width = parse_int(value, key, line);
    else if (key == "dt_us") out.cfg.dt_us = parse_number(value, key, line);
    else if (key == "capacitance") out.cfg.capacitance = parse_number(value, key, line);
    else if (key == "reset_voltage") out.cfg.reset_voltage = parse_number(value, key, line);
    else if (key == "reference_voltage") out.cfg.reference_voltage = parse_number(value, key, line);
    else if (key == "photons_per_unit") out.cfg.photons_per_unit = parse_number(value, key, line);
    else if (key == "shot_noise") {
      if (value == "on") out.cfg.shot_noise = true;
      else if (value == "off") out.cfg.shot_noise = false;
      else
        throw IoError(IoError::Kind::malformed, "parse_params: line " + std::to_string(line) +
                                                    ": shot_noise must be on or off");
    } else if (key == "reset_mode") {
      if (value == "subtract") out.cfg.reset_mode = ResetMode::subtract;
      else if (value == "zero") out.cfg.reset_mode = ResetMode::zero;
      else
        throw IoError(IoError::Kind::malformed, "parse_params: line " + std::to_string(line) +
                                                    ": reset_mode must be subtract or zero");
    } else if (key == "sigma_c_s") out.noise.sigma_c_s = parse_number(value, key, line);
    else if (key == "sigma_v_s") out.noise.sigma_v_s = parse_number(value, key, line);
    else if (key == "mu_dark") out.noise.mu_dark = parse_number(value, key, line);
    else if (key == "sigma_dark_s") out.noise.sigma_dark_s = parse_number(value, key, line);
    else if (key == "mu_alpha") out.noise.mu_alpha = parse_number(value, key, line);
    else if (key == "sigma_alpha_s") out.noise.sigma_alpha_s = parse_number(value, key, line);
    else if (key == "sigma_t0") out.noise.sigma_t0 = parse_number(value, key, line);
    else
      throw IoError(IoError::Kind::malformed,
                    "parse_params: line " + std::to_string(line) + ": unknown key " + key);
  }

  try {
    out.cfg.validate();
    out.noise.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(IoError::Kind::invalid_value, std::string("parse_params: ") + e.what());
  }
  return out;
}

ParamsFile parse_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoError::Kind::open_failed, "parse_params: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_params_text(buf.str(), path);
}

std::string serialize_params_text(const ParamsFile& p) {
  std::ostringstream out;
  out.precision(17);
  out << "# sensor geometry and circuit constants\n";
  out << "height = " << p.cfg.height << "\n";
  out << "width = " << p.cfg.width << "\n";
  out << "dt_us = " << p.cfg.dt_us << "\n";
  out << "capacitance = " << p.cfg.capacitance << "\n";
  out << "reset_voltage = " << p.cfg.reset_voltage << "\n";
  out << "reference_voltage = " << p.cfg.reference_voltage << "\n";
  out << "photons_per_unit = " << p.cfg.photons_per_unit << "\n";
  out << "shot_noise = " << (p.cfg.shot_noise ? "on" : "off") << "\n";
  out << "reset_mode = " << (p.cfg.reset_mode == ResetMode::subtract ? "subtract" : "zero")
      << "\n";
  out << "# noise statistics\n";
  out << "sigma_c_s = " << p.noise.sigma_c_s << "\n";
  out << "sigma_v_s = " << p.noise.sigma_v_s << "\n";
  out << "mu_dark = " << p.noise.mu_dark << "\n";
  out << "sigma_dark_s = " << p.noise.sigma_dark_s << "\n";
  out << "mu_alpha = " << p.noise.mu_alpha << "\n";
  out << "sigma_alpha_s = " << p.noise.sigma_alpha_s << "\n";
  out << "sigma_t0 = " << p.noise.sigma_t0 << "\n";
  return out.str();
}

void serialize_params(const ParamsFile& p, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError(IoError::Kind::open_failed, "serialize_params: cannot open " + path);
  out << serialize_params_text(p);
  out.flush();
  if (!out)
    throw IoError(IoError::Kind::open_failed, "serialize_params: write failed for " + path);
}

}  // namespace spikecam
