#include "pssr/image_io.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pssr::img {

namespace {

std::string read_file(const std::string& path, const char* what) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(std::string(what) + ": cannot open '" + path + "'");
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& path, const std::string& data, const char* what) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error(std::string(what) + ": cannot open '" + path + "' for writing");
  os.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!os) throw std::runtime_error(std::string(what) + ": write failed for '" + path + "'");
}

[[noreturn]] void bad(const char* what, const std::string& path, size_t at, const std::string& msg) {
  throw std::runtime_error(std::string(what) + ": " + msg + " in '" + path + "' at byte " +
                           std::to_string(at));
}

// Whitespace/comment-tolerant ASCII token scanner for netpbm headers.
struct TokenScanner {
  const std::string& data;
  size_t pos = 0;

  void skip_space() {
    while (pos < data.size()) {
      const char c = data[pos];
      if (c == '#') {
        while (pos < data.size() && data[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
  }

  std::string token() {
    skip_space();
    size_t start = pos;
    while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
    return data.substr(start, pos - start);
  }
};

int parse_int(TokenScanner& sc, const char* what, const std::string& path, const char* field) {
  size_t at = sc.pos;
  std::string t = sc.token();
  try {
    size_t used = 0;
    int v = std::stoi(t, &used);
    if (used != t.size() || v < 0) throw std::invalid_argument(t);
    return v;
  } catch (const std::exception&) {
    bad(what, path, at, std::string("malformed ") + field + " '" + t + "'");
  }
}

}  // namespace

Image load_ppm(const std::string& path) {
  const std::string data = read_file(path, "ppm");
  TokenScanner sc{data};
  if (sc.token() != "P6") bad("ppm", path, 0, "missing P6 magic");
  const int w = parse_int(sc, "ppm", path, "width");
  const int h = parse_int(sc, "ppm", path, "height");
  const size_t maxval_at = sc.pos;
  const int maxval = parse_int(sc, "ppm", path, "maxval");
  if (maxval != 255) bad("ppm", path, maxval_at, "unsupported maxval " + std::to_string(maxval));
  if (sc.pos >= data.size()) bad("ppm", path, sc.pos, "missing payload");
  ++sc.pos;  // single whitespace after maxval

  const size_t need = static_cast<size_t>(w) * h * 3;
  if (data.size() - sc.pos < need)
    bad("ppm", path, sc.pos,
        "truncated payload (need " + std::to_string(need) + " bytes, have " +
            std::to_string(data.size() - sc.pos) + ")");

  Image im = Image::create(w, h, 3);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(data.data()) + sc.pos;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      for (int ch = 0; ch < 3; ++ch)
        im.at(ch, r, c) = static_cast<double>(p[(static_cast<size_t>(r) * w + c) * 3 + ch]) / 255.0;
  return im;
}

void save_ppm(const std::string& path, const Image& im) {
  if (im.channels != 3)
    throw std::invalid_argument("ppm: P6 wants 3 channels, image has " +
                                std::to_string(im.channels));
  std::string buf = "P6\n" + std::to_string(im.width) + " " + std::to_string(im.height) + "\n255\n";
  buf.reserve(buf.size() + static_cast<size_t>(im.width) * im.height * 3);
  for (int r = 0; r < im.height; ++r) {
    for (int c = 0; c < im.width; ++c) {
      for (int ch = 0; ch < 3; ++ch) {
        double v = im.at(ch, r, c);
        v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        buf.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0))));
      }
    }
  }
  write_file(path, buf, "ppm");
}

Image load_pfm(const std::string& path) {
  const std::string data = read_file(path, "pfm");
  TokenScanner sc{data};
  const std::string magic = sc.token();
  if (magic != "Pf") bad("pfm", path, 0, "expected single-channel 'Pf' magic, got '" + magic + "'");
  const int w = parse_int(sc, "pfm", path, "width");
  const int h = parse_int(sc, "pfm", path, "height");
  const size_t scale_at = sc.pos;
  const std::string scale_tok = sc.token();
  double scale = 0.0;
  try {
    scale = std::stod(scale_tok);
  } catch (const std::exception&) {
    bad("pfm", path, scale_at, "malformed scale '" + scale_tok + "'");
  }
  if (scale >= 0.0) bad("pfm", path, scale_at, "big-endian PFM not supported (scale >= 0)");
  if (sc.pos >= data.size()) bad("pfm", path, sc.pos, "missing payload");
  ++sc.pos;

  const size_t need = static_cast<size_t>(w) * h * 4;
  if (data.size() - sc.pos < need)
    bad("pfm", path, sc.pos,
        "truncated payload (need " + std::to_string(need) + " bytes, have " +
            std::to_string(data.size() - sc.pos) + ")");

  Image im = Image::create(w, h, 1);
  const char* p = data.data() + sc.pos;
  // PFM rows run bottom-up.
  for (int r = 0; r < h; ++r) {
    const int src_row = h - 1 - r;
    for (int c = 0; c < w; ++c) {
      float f;
      std::memcpy(&f, p + (static_cast<size_t>(src_row) * w + c) * 4, 4);
      im.at(0, r, c) = static_cast<double>(f);
    }
  }
  return im;
}

void save_pfm(const std::string& path, const Image& im) {
  if (im.channels != 1)
    throw std::invalid_argument("pfm: single-channel only, image has " +
                                std::to_string(im.channels));
  std::string buf = "Pf\n" + std::to_string(im.width) + " " + std::to_string(im.height) + "\n-1.0\n";
  buf.reserve(buf.size() + static_cast<size_t>(im.width) * im.height * 4);
  for (int r = im.height - 1; r >= 0; --r) {
    for (int c = 0; c < im.width; ++c) {
      const float f = static_cast<float>(im.at(0, r, c));
      char bytes[4];
      std::memcpy(bytes, &f, 4);
      buf.append(bytes, 4);
    }
  }
  write_file(path, buf, "pfm");
}

}  // namespace pssr::img
