#ifndef SPIKECAM_STREAM_IO_HPP
#define SPIKECAM_STREAM_IO_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

#include "spikecam/types.hpp"

namespace spikecam {

/// File-format failure with a machine-checkable kind. Readers never crash on
/// malformed input; every corruption mode maps onto one of these.
class IoError : public std::runtime_error {
 public:
  enum class Kind {
    open_failed,
    bad_magic,
    bad_version,
    truncated,
    malformed,      // structural problem (line syntax, unknown key, size mismatch)
    invalid_value,  // well-formed but violates an invariant
  };

  IoError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class BitOrder : std::uint8_t {
  lsb_first,  // native layout: pixel index 0 in bit 0
  msb_first,  // conversion hook for external dumps packed from the high bit
};

// Spike stream container: magic "SCSM", version u16, H u16, W u16, N u32,
// dt_us f32, origin u8, all little-endian; N frames of ceil(H*W/8) bytes,
// row-major, LSB-first, zero-padded final byte.
void write_spikes(const SpikeStream& stream, const std::string& path);
SpikeStream read_spikes(const std::string& path, BitOrder order = BitOrder::lsb_first);

// Luminance container: magic "SCLM", version u16, H u16, W u16, T u32,
// dt_us f32; T frames of H*W little-endian f32. An optional flow section
// follows: magic "SCFL" then T frames of H*W*2 f32 (vx, vy per pixel).
void write_luminance(const LuminanceSequence& lum, const std::string& path);
LuminanceSequence read_luminance(const std::string& path);

// Parameter file: "key = value" lines with '#' comments. Unknown keys are
// rejected; missing keys take the documented defaults.
struct ParamsFile {
  SensorConfig cfg;
  NoiseParams noise;
};
ParamsFile parse_params(const std::string& path);
ParamsFile parse_params_text(const std::string& text, const std::string& origin = "<string>");
std::string serialize_params_text(const ParamsFile& p);
void serialize_params(const ParamsFile& p, const std::string& path);

// Fixed-pattern map container: magic "SCMP", version u16, H u16, W u16,
// seed u64; four planes of H*W f64 (c_s, v_s, alpha, i_dark).
void write_maps(const SpatialNoiseMaps& maps, const std::string& path);
SpatialNoiseMaps read_maps(const std::string& path);

}  // namespace spikecam

#endif  // SPIKECAM_STREAM_IO_HPP
