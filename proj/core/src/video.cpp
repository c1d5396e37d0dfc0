#include "resadapt/video.hpp"

#include <algorithm>
#include <cmath>

#include "resadapt/error.hpp"
#include "resadapt/numeric.hpp"
#include "resadapt/parallel.hpp"

namespace resadapt::video {

LumaFrame::LumaFrame(int width, int height, std::vector<std::uint8_t> samples)
    : width_(width), height_(height), samples_(std::move(samples)) {
  if (width <= 0 || height <= 0) {
    throw ValidationError("frame dimensions must be positive, got " +
                          std::to_string(width) + "x" + std::to_string(height));
  }
  const auto expected = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (samples_.size() != expected) {
    throw ValidationError("frame has " + std::to_string(samples_.size()) +
                          " samples, expected " + std::to_string(expected));
  }
}

LumaFrame LumaFrame::filled(int width, int height, std::uint8_t value) {
  const auto n = static_cast<std::size_t>(std::max(width, 0)) *
                 static_cast<std::size_t>(std::max(height, 0));
  return LumaFrame(width, height, std::vector<std::uint8_t>(n, value));
}

VideoSequence::VideoSequence(std::vector<LumaFrame> frames, double frame_rate)
    : frames_(std::move(frames)), frame_rate_(frame_rate) {
  if (frames_.empty()) throw ValidationError("video sequence has no frames");
  if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) {
    throw ValidationError("frame rate must be positive");
  }
  const int w = frames_.front().width();
  const int h = frames_.front().height();
  for (std::size_t i = 1; i < frames_.size(); ++i) {
    if (frames_[i].width() != w || frames_[i].height() != h) {
      throw ValidationError("frame " + std::to_string(i) + " is " +
                            std::to_string(frames_[i].width()) + "x" +
                            std::to_string(frames_[i].height()) + ", expected " +
                            std::to_string(w) + "x" + std::to_string(h));
    }
  }
}

GradientField sobel_magnitude(const LumaFrame& frame) {
  if (frame.width() < 3 || frame.height() < 3) {
    throw ValidationError("Sobel filter needs at least a 3x3 frame, got " +
                          std::to_string(frame.width()) + "x" +
                          std::to_string(frame.height()));
  }
  GradientField out;
  out.width = frame.width() - 2;
  out.height = frame.height() - 2;
  out.magnitude.resize(static_cast<std::size_t>(out.width) * out.height);

  const auto px = [&](int r, int c) -> int { return frame.at(r, c); };
  for (int r = 1; r < frame.height() - 1; ++r) {
    for (int c = 1; c < frame.width() - 1; ++c) {
      const int gx = (px(r - 1, c + 1) + 2 * px(r, c + 1) + px(r + 1, c + 1)) -
                     (px(r - 1, c - 1) + 2 * px(r, c - 1) + px(r + 1, c - 1));
      const int gy = (px(r + 1, c - 1) + 2 * px(r + 1, c) + px(r + 1, c + 1)) -
                     (px(r - 1, c - 1) + 2 * px(r - 1, c) + px(r - 1, c + 1));
      out.magnitude[static_cast<std::size_t>(r - 1) * out.width + (c - 1)] =
          std::sqrt(static_cast<double>(gx * gx + gy * gy));
    }
  }
  return out;
}

double frame_si(const LumaFrame& frame) {
  return population_stddev(sobel_magnitude(frame).magnitude);
}

double frame_ti(const LumaFrame& prev, const LumaFrame& curr) {
  if (prev.width() != curr.width() || prev.height() != curr.height()) {
    throw ValidationError("TI frames differ in size: " + std::to_string(prev.width()) +
                          "x" + std::to_string(prev.height()) + " vs " +
                          std::to_string(curr.width()) + "x" +
                          std::to_string(curr.height()));
  }
  const auto a = prev.samples();
  const auto b = curr.samples();
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff[i] = static_cast<double>(static_cast<int>(b[i]) - static_cast<int>(a[i]));
  }
  return population_stddev(diff);
}

SiTiProfile compute_siti(const VideoSequence& seq, const ComputeOptions& opts) {
  const auto& frames = seq.frames();
  SiTiProfile p;
  p.si_series.resize(frames.size());
  p.ti_series.resize(frames.size() - 1);

  // Index space: [0, n) for SI, [n, 2n-1) for TI pairs.
  const std::size_t n = frames.size();
  parallel_for(2 * n - 1, opts.threads, [&](std::size_t i) {
    if (i < n) {
      p.si_series[i] = frame_si(frames[i]);
    } else {
      const std::size_t k = i - n;
      p.ti_series[k] = frame_ti(frames[k], frames[k + 1]);
    }
  });

  p.si_max = *std::max_element(p.si_series.begin(), p.si_series.end());
  p.si_mean = std::min(mean(p.si_series), p.si_max);
  if (!p.ti_series.empty()) {
    p.ti_max = *std::max_element(p.ti_series.begin(), p.ti_series.end());
    p.ti_mean = std::min(mean(p.ti_series), *p.ti_max);
  }
  return p;
}

std::string_view to_string(SiTiLabel label) {
  switch (label) {
    case SiTiLabel::kLowSiLowTi: return "LowSiLowTi";
    case SiTiLabel::kLowSiHighTi: return "LowSiHighTi";
    case SiTiLabel::kHighSiLowTi: return "HighSiLowTi";
    case SiTiLabel::kHighSiHighTi: return "HighSiHighTi";
    case SiTiLabel::kMid: return "Mid";
  }
  return "Mid";
}

void SiTiThresholds::validate() const {
  if (!(si_low < si_high)) {
    throw ValidationError("SI thresholds must satisfy low < high");
  }
  if (!(ti_low < ti_high)) {
    throw ValidationError("TI thresholds must satisfy low < high");
  }
}

SiTiCategory classify_siti(double si, double ti, const SiTiThresholds& t) {
  t.validate();
  const bool si_low = si <= t.si_low;
  const bool si_high = si >= t.si_high;
  const bool ti_low = ti <= t.ti_low;
  const bool ti_high = ti >= t.ti_high;
  SiTiLabel label = SiTiLabel::kMid;
  if ((si_low || si_high) && (ti_low || ti_high)) {
    if (si_low) {
      label = ti_low ? SiTiLabel::kLowSiLowTi : SiTiLabel::kLowSiHighTi;
    } else {
      label = ti_low ? SiTiLabel::kHighSiLowTi : SiTiLabel::kHighSiHighTi;
    }
  }
  return {label, t};
}

std::optional<SiTiCategory> classify_siti(const SiTiProfile& profile,
                                          const SiTiThresholds& thresholds,
                                          Aggregate agg) {
  thresholds.validate();
  const auto ti = profile.ti(agg);
  if (!ti) return std::nullopt;
  return classify_siti(profile.si(agg), *ti, thresholds);
}

}  // namespace resadapt::video
