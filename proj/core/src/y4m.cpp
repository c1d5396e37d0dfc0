#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "resadapt/error.hpp"
#include "resadapt/video.hpp"

namespace resadapt::video {
namespace {

constexpr std::string_view kSignature = "YUV4MPEG2";
constexpr std::string_view kFrameMarker = "FRAME";
constexpr std::size_t kMaxHeaderLine = 4096;

class ByteReader {
 public:
  explicit ByteReader(std::istream& in) : in_(in) {}

  std::uint64_t offset() const noexcept { return offset_; }

  /// Reads up to and including '\n'. Returns false at clean EOF (no bytes).
  bool read_line(std::string& line) {
    line.clear();
    const std::uint64_t start = offset_;
    for (;;) {
      const int ch = in_.get();
      if (ch == std::char_traits<char>::eof()) {
        if (line.empty()) return false;
        throw ParseError("unterminated header line", start);
      }
      ++offset_;
      if (ch == '\n') return true;
      line.push_back(static_cast<char>(ch));
      if (line.size() > kMaxHeaderLine) {
        throw ParseError("header line exceeds " + std::to_string(kMaxHeaderLine) + " bytes",
                         start);
      }
    }
  }

  /// Reads exactly n bytes into dst; reports truncation at the point the
  /// stream ran out.
  void read_exact(char* dst, std::size_t n, std::string_view what) {
    in_.read(dst, static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    offset_ += got;
    if (got != n) {
      throw ParseError("truncated " + std::string(what) + ": expected " +
                           std::to_string(n) + " bytes, got " + std::to_string(got),
                       offset_);
    }
  }

  void skip_exact(std::size_t n, std::string_view what) {
    in_.ignore(static_cast<std::streamsize>(n));
    const auto got = static_cast<std::size_t>(in_.gcount());
    offset_ += got;
    if (got != n) {
      throw ParseError("truncated " + std::string(what) + ": expected " +
                           std::to_string(n) + " bytes, got " + std::to_string(got),
                       offset_);
    }
  }

  bool at_eof() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
  std::uint64_t offset_ = 0;
};

bool parse_int(std::string_view s, long long& out) {
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

struct Header {
  int width = 0;
  int height = 0;
  double frame_rate = 0.0;
  ChromaFormat chroma = ChromaFormat::k420;
};

Header parse_header(const std::string& line) {
  if (line.compare(0, kSignature.size(), kSignature) != 0 ||
      (line.size() > kSignature.size() && line[kSignature.size()] != ' ')) {
    throw ParseError("missing YUV4MPEG2 signature", 0);
  }
  Header h;
  bool have_w = false, have_h = false, have_f = false;
  std::size_t pos = kSignature.size();
  while (pos < line.size()) {
    if (line[pos] == ' ') {
      ++pos;
      continue;
    }
    std::size_t end = line.find(' ', pos);
    if (end == std::string::npos) end = line.size();
    const std::string_view tok(line.data() + pos, end - pos);
    const std::string_view value = tok.substr(1);
    long long v = 0;
    switch (tok[0]) {
      case 'W':
        if (!parse_int(value, v) || v < 0 || v > std::numeric_limits<int>::max()) {
          throw ParseError("bad width token '" + std::string(tok) + "'", pos);
        }
        h.width = static_cast<int>(v);
        have_w = true;
        break;
      case 'H':
        if (!parse_int(value, v) || v < 0 || v > std::numeric_limits<int>::max()) {
          throw ParseError("bad height token '" + std::string(tok) + "'", pos);
        }
        h.height = static_cast<int>(v);
        have_h = true;
        break;
      case 'F': {
        const auto colon = value.find(':');
        long long num = 0, den = 0;
        if (colon == std::string_view::npos || !parse_int(value.substr(0, colon), num) ||
            !parse_int(value.substr(colon + 1), den) || num <= 0 || den <= 0) {
          throw ParseError("bad frame-rate token '" + std::string(tok) + "'", pos);
        }
        h.frame_rate = static_cast<double>(num) / static_cast<double>(den);
        have_f = true;
        break;
      }
      case 'C': {
        const auto fmt = chroma_format_from_tag(value);
        if (!fmt) {
          throw ParseError("unsupported colorspace tag '" + std::string(value) + "'", pos);
        }
        h.chroma = *fmt;
        break;
      }
      default:
        // I (interlacing), A (aspect), X (comment) do not affect the Y plane.
        break;
    }
    pos = end;
  }
  if (!have_w || !have_h || !have_f) {
    throw ParseError("signature line lacks W, H or F parameter", 0);
  }
  if (h.width == 0 || h.height == 0) {
    throw ParseError("zero frame dimension " + std::to_string(h.width) + "x" +
                         std::to_string(h.height),
                     0);
  }
  return h;
}

}  // namespace

std::size_t chroma_plane_size(ChromaFormat format, int width, int height) {
  const auto w = static_cast<std::size_t>(width);
  const auto h = static_cast<std::size_t>(height);
  switch (format) {
    case ChromaFormat::k420: return ((w + 1) / 2) * ((h + 1) / 2);
    case ChromaFormat::k422: return ((w + 1) / 2) * h;
    case ChromaFormat::k444: return w * h;
  }
  return 0;
}

std::optional<ChromaFormat> chroma_format_from_tag(std::string_view tag) {
  if (tag == "420" || tag == "420jpeg" || tag == "420paldv" || tag == "420mpeg2") {
    return ChromaFormat::k420;
  }
  if (tag == "422") return ChromaFormat::k422;
  if (tag == "444") return ChromaFormat::k444;
  return std::nullopt;
}

VideoSequence parse_y4m(std::istream& in) {
  ByteReader reader(in);
  std::string line;
  if (!reader.read_line(line)) throw ParseError("empty stream", 0);
  const Header h = parse_header(line);

  const std::size_t luma = static_cast<std::size_t>(h.width) * h.height;
  const std::size_t chroma = 2 * chroma_plane_size(h.chroma, h.width, h.height);
  std::vector<LumaFrame> frames;
  while (!reader.at_eof()) {
    const std::uint64_t marker_at = reader.offset();
    reader.read_line(line);
    if (line.compare(0, kFrameMarker.size(), kFrameMarker) != 0 ||
        (line.size() > kFrameMarker.size() && line[kFrameMarker.size()] != ' ')) {
      throw ParseError("expected FRAME marker", marker_at);
    }
    std::vector<std::uint8_t> y(luma);
    reader.read_exact(reinterpret_cast<char*>(y.data()), luma, "luma plane");
    reader.skip_exact(chroma, "chroma planes");
    frames.emplace_back(h.width, h.height, std::move(y));
  }
  if (frames.empty()) throw ParseError("stream contains no frames", reader.offset());
  return VideoSequence(std::move(frames), h.frame_rate);
}

VideoSequence parse_y4m(std::string_view bytes) {
  std::istringstream in{std::string(bytes)};
  return parse_y4m(in);
}

VideoSequence read_y4m_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse_y4m(in);
}

VideoSequence parse_raw_planar(std::istream& in, int width, int height,
                               ChromaFormat format, double frame_rate) {
  if (width <= 0 || height <= 0) {
    throw ParseError("raw planar input needs positive --width and --height", 0);
  }
  ByteReader reader(in);
  const std::size_t luma = static_cast<std::size_t>(width) * height;
  const std::size_t chroma = 2 * chroma_plane_size(format, width, height);
  std::vector<LumaFrame> frames;
  while (!reader.at_eof()) {
    std::vector<std::uint8_t> y(luma);
    reader.read_exact(reinterpret_cast<char*>(y.data()), luma, "luma plane");
    reader.skip_exact(chroma, "chroma planes");
    frames.emplace_back(width, height, std::move(y));
  }
  if (frames.empty()) throw ParseError("stream contains no frames", 0);
  return VideoSequence(std::move(frames), frame_rate);
}

}  // namespace resadapt::video
