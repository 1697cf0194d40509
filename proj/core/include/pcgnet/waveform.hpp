#pragma once

#include <string>
#include <vector>

namespace pcgnet {

/// A mono sampled audio signal plus the identifiers that follow it through
/// the pipeline (raw recording, denoised recording, or a fixed-length clip).
struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = 2000;
  std::string source_id;
  std::string patient_id;

  std::size_t size() const { return samples.size(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

/// Throws ValidationError unless the waveform is non-empty, has a positive
/// rate, and holds only finite samples.
void validate_waveform(const Waveform& w, const char* context);

}  // namespace pcgnet
