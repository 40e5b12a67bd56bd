#pragma once

#include <optional>
#include <string>

#include "koopman/covariance.hpp"
#include "koopman/edmd.hpp"

namespace koopman {

struct ModelFileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Formats a double with 17 significant digits (bit-exact binary64 round trip).
std::string format_double(double v);
double parse_double(const std::string& s);

/// FNV-1a 64-bit, hex-encoded.
std::string fnv1a_hex(const std::string& payload);

/// Writes path atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& content);

struct LoadedModel {
  KoopmanModel model;
  std::optional<CovarianceSurrogate> covariance;
  std::string param_sampling;  // "uniform" or "grid", informational
};

/// Model file: JSON with format_version, dictionary, t, m, domains, blocks
/// (row-major, 17-significant-digit decimal strings), optional covariance
/// blocks, and an FNV-1a checksum over the payload.
void save_model(const KoopmanModel& model, const CovarianceSurrogate* Q, const std::string& path,
                const std::string& param_sampling = "uniform");
LoadedModel load_model(const std::string& path);

}  // namespace koopman
