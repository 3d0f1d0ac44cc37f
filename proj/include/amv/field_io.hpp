#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "amv/state.hpp"

namespace amv {

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Binary field container: magic "AMVF", version u16, rows/cols/channels u32,
/// one dtype byte (0 = f64, 1 = u8), little-endian row-major payload
/// (channel-major). Round trips are byte-exact for f64 payloads.
void write_field(const std::filesystem::path& path, const ImageStack& field);
ImageStack read_field(const std::filesystem::path& path);

/// Displacement fields are stored as two-channel f64 files (d1 then d2).
void write_displacement(const std::filesystem::path& path, const DisplacementField& d);
DisplacementField read_displacement(const std::filesystem::path& path);

/// Masks are stored as two-channel u8 files (t0 then t1).
void write_mask(const std::filesystem::path& path, const ObservationMask& mask);
ObservationMask read_mask(const std::filesystem::path& path);

/// Copy of a field with unobserved pixels replaced by NaN (file representation
/// of partial observations; the mask stays authoritative in memory).
ImageStack masked_for_file(const ImageStack& field, const std::vector<std::uint8_t>& observed);

/// EPE table: one header row naming the six criteria, one row per method.
struct EpeCsvRow {
  std::string method;
  double standard, weighted1, weighted2, masked, sparse, sparse_masked;
};
std::string epe_csv_text(const std::vector<EpeCsvRow>& rows);
void write_epe_csv(const std::filesystem::path& path, const std::vector<EpeCsvRow>& rows);

/// key=value summary file (UTF-8, one pair per line, '#' comments).
void write_summary(const std::filesystem::path& path,
                   const std::vector<std::pair<std::string, std::string>>& entries);
std::vector<std::pair<std::string, std::string>> read_key_values(
    const std::filesystem::path& path);

}  // namespace amv
