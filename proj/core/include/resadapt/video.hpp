#pragma once

// Luminance frame containers and spatial/temporal information indices.

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace resadapt::video {

/// One 8-bit luminance plane, row-major.
class LumaFrame {
 public:
  /// Throws ValidationError unless samples.size() == width * height and both
  /// dimensions are positive.
  LumaFrame(int width, int height, std::vector<std::uint8_t> samples);

  /// Constant frame.
  static LumaFrame filled(int width, int height, std::uint8_t value);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const std::uint8_t> samples() const noexcept { return samples_; }
  std::uint8_t at(int row, int col) const noexcept {
    return samples_[static_cast<std::size_t>(row) * width_ + col];
  }

  friend bool operator==(const LumaFrame&, const LumaFrame&) = default;

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> samples_;
};

class VideoSequence {
 public:
  /// Throws ValidationError on an empty frame list, mismatched frame
  /// geometry, or a non-positive frame rate.
  VideoSequence(std::vector<LumaFrame> frames, double frame_rate);

  const std::vector<LumaFrame>& frames() const noexcept { return frames_; }
  std::size_t size() const noexcept { return frames_.size(); }
  double frame_rate() const noexcept { return frame_rate_; }
  int width() const noexcept { return frames_.front().width(); }
  int height() const noexcept { return frames_.front().height(); }

 private:
  std::vector<LumaFrame> frames_;
  double frame_rate_;
};

enum class ChromaFormat { k420, k422, k444 };

/// Bytes per chroma plane for a frame of the given geometry.
std::size_t chroma_plane_size(ChromaFormat format, int width, int height);

/// Decodes a YUV4MPEG2 stream, keeping only the Y plane of each frame.
/// Errors are ParseError carrying the byte offset of the problem.
VideoSequence parse_y4m(std::istream& in);
VideoSequence parse_y4m(std::string_view bytes);
VideoSequence read_y4m_file(const std::string& path);

/// Headerless planar YUV: frames are back-to-back Y, U, V planes.
VideoSequence parse_raw_planar(std::istream& in, int width, int height,
                               ChromaFormat format, double frame_rate);

/// Parses "420", "422", "444" (the y4m C-tag spellings, including the 4:2:0
/// siting variants such as "420jpeg").
std::optional<ChromaFormat> chroma_format_from_tag(std::string_view tag);

/// Valid-region Sobel gradient magnitude field, (w-2) x (h-2), row-major.
struct GradientField {
  int width = 0;
  int height = 0;
  std::vector<double> magnitude;
};

GradientField sobel_magnitude(const LumaFrame& frame);

/// Population standard deviation of the Sobel magnitudes.
double frame_si(const LumaFrame& frame);

/// Population standard deviation of curr - prev over all pixels.
double frame_ti(const LumaFrame& prev, const LumaFrame& curr);

enum class Aggregate { kMean, kMax };

struct SiTiProfile {
  std::vector<double> si_series;
  /// ti_series[n] belongs to the frame pair (n, n+1).
  std::vector<double> ti_series;
  double si_max = 0.0;
  double si_mean = 0.0;
  /// Empty for single-frame input: TI needs a frame pair.
  std::optional<double> ti_max;
  std::optional<double> ti_mean;

  bool ti_defined() const noexcept { return ti_max.has_value(); }
  double si(Aggregate agg) const { return agg == Aggregate::kMax ? si_max : si_mean; }
  std::optional<double> ti(Aggregate agg) const {
    return agg == Aggregate::kMax ? ti_max : ti_mean;
  }
};

struct ComputeOptions {
  /// Upper bound on worker threads; 0 means hardware concurrency.
  unsigned threads = 1;
};

SiTiProfile compute_siti(const VideoSequence& seq, const ComputeOptions& opts = {});

enum class SiTiLabel { kLowSiLowTi, kLowSiHighTi, kHighSiLowTi, kHighSiHighTi, kMid };

std::string_view to_string(SiTiLabel label);

struct SiTiThresholds {
  double si_low = 40.0;
  double si_high = 110.0;
  double ti_low = 10.0;
  double ti_high = 25.0;

  /// Throws ValidationError unless si_low < si_high and ti_low < ti_high.
  void validate() const;
};

struct SiTiCategory {
  SiTiLabel label;
  SiTiThresholds thresholds;
};

/// Low means <= low threshold, high means >= high threshold; anything strictly
/// in between on either axis is Mid.
SiTiCategory classify_siti(double si, double ti, const SiTiThresholds& thresholds = {});

/// Classifies with the chosen aggregate. Returns nullopt when TI is undefined.
std::optional<SiTiCategory> classify_siti(const SiTiProfile& profile,
                                          const SiTiThresholds& thresholds = {},
                                          Aggregate agg = Aggregate::kMean);

}  // namespace resadapt::video
