#include "pssr/weights_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace pssr::ad {

namespace {

constexpr char kMagic[5] = {'P', 'S', 'S', 'R', 'W'};

void put_u32(std::string& buf, uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double d) {
  uint64_t bits;
  std::memcpy(&bits, &d, 8);
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const std::string& data, const std::string& path) : data_(data), path_(path) {}

  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }

  std::string bytes(size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  size_t pos() const { return pos_; }

  void need(size_t n) {
    if (pos_ + n > data_.size())
      throw std::runtime_error("weights: truncated file '" + path_ + "' at byte " +
                               std::to_string(pos_) + " (need " + std::to_string(n) + ", have " +
                               std::to_string(data_.size() - pos_) + ")");
  }

 private:
  const std::string& data_;
  std::string path_;
  size_t pos_ = 0;
};

}  // namespace

void save_weights(const std::string& path, const NamedTensors& tensors, uint32_t version) {
  std::string buf;
  buf.append(kMagic, 5);
  put_u32(buf, version);
  put_u32(buf, static_cast<uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    put_u32(buf, static_cast<uint32_t>(name.size()));
    buf.append(name);
    put_u32(buf, static_cast<uint32_t>(t.shape().size()));
    for (int e : t.shape()) put_u32(buf, static_cast<uint32_t>(e));
    for (double v : t.values()) put_f64(buf, v);
  }
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("weights: cannot open '" + path + "' for writing");
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw std::runtime_error("weights: write failed for '" + path + "'");
}

NamedTensors load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("weights: cannot open '" + path + "'");
  std::string data((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());

  Reader r(data, path);
  if (r.bytes(5) != std::string(kMagic, 5))
    throw std::runtime_error("weights: bad magic in '" + path + "' at byte 0");
  const uint32_t version = r.u32();
  if (version != kWeightsFormatVersion)
    throw std::runtime_error("weights: unsupported format version " + std::to_string(version) +
                             " in '" + path + "'");
  const uint32_t count = r.u32();

  NamedTensors out;
  out.reserve(count);
  for (uint32_t ti = 0; ti < count; ++ti) {
    const uint32_t name_len = r.u32();
    std::string name = r.bytes(name_len);
    const uint32_t rank = r.u32();
    std::vector<int> shape(rank);
    int64_t n = 1;
    for (uint32_t d = 0; d < rank; ++d) {
      shape[d] = static_cast<int>(r.u32());
      n *= shape[d];
    }
    std::vector<double> vals(static_cast<size_t>(n));
    for (int64_t i = 0; i < n; ++i) vals[static_cast<size_t>(i)] = r.f64();
    out.emplace_back(std::move(name), Tensor::from(std::move(shape), std::move(vals)));
  }
  return out;
}

}  // namespace pssr::ad
