#include "topicflow/tensor/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "topicflow/error.hpp"

namespace topicflow::tensor {

namespace {

constexpr char kMagic[4] = {'T', 'F', 'W', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  Reader(const std::string& bytes, std::string source) : b_(bytes), source_(std::move(source)) {}

  std::uint64_t u(int width) {
    need(width);
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b_[pos_ + i])) << (8 * i);
    }
    pos_ += width;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  double f64() { return std::bit_cast<double>(u(8)); }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > b_.size()) throw ParseError(source_, 0, "truncated snapshot");
  }
  const std::string& b_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_snapshot(const std::vector<const Param*>& params) {
  std::string body;
  put_u32(body, static_cast<std::uint32_t>(params.size()));
  for (const Param* p : params) {
    put_u32(body, static_cast<std::uint32_t>(p->name.size()));
    body += p->name;
    put_u32(body, static_cast<std::uint32_t>(p->value.rank()));
    for (auto d : p->value.shape()) put_u64(body, d);
    for (double v : p->value.values()) put_u64(body, std::bit_cast<std::uint64_t>(v));
  }
  std::string out(kMagic, 4);
  put_u64(out, body.size());
  return out + body;
}

TensorMap decode_snapshot(const std::string& bytes, const std::string& source) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw ParseError(source, 0, "not a TFW1 snapshot");
  }
  Reader r(bytes, source);
  r.str(4);
  const std::uint64_t payload = r.u(8);
  if (payload != r.remaining()) throw ParseError(source, 0, "snapshot size field mismatch");
  const std::uint32_t count = static_cast<std::uint32_t>(r.u(4));
  TensorMap out;
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str(r.u(4));
    const std::uint32_t rank = static_cast<std::uint32_t>(r.u(4));
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = r.u(8);
    std::vector<double> data(shape_volume(shape));
    for (auto& v : data) v = r.f64();
    out.emplace(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return out;
}

void save_snapshot(const std::filesystem::path& path, const std::vector<Param*>& params) {
  std::vector<const Param*> cp(params.begin(), params.end());
  const std::string bytes = encode_snapshot(cp);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write snapshot " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

TensorMap load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read snapshot " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_snapshot(bytes, path.string());
}

void restore_params(const TensorMap& tensors, const std::vector<Param*>& params,
                    const std::string& source) {
  for (Param* p : params) {
    auto it = tensors.find(p->name);
    if (it == tensors.end()) throw ConfigError(source + ": missing tensor " + p->name);
    if (!it->second.same_shape(p->value)) {
      throw ConfigError(source + ": tensor " + p->name + " has shape " +
                        shape_string(it->second.shape()) + ", expected " +
                        shape_string(p->value.shape()));
    }
    p->value = it->second;
    p->grad = Tensor(p->value.shape(), 0.0);
  }
}

}  // namespace topicflow::tensor
