#include "amortss/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "amortss/nn/network.hpp"

namespace amortss::nn {

namespace {

constexpr char kMagic[8] = {'A', 'M', 'S', 'S', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  template <typename U>
  void pod(U v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(U));
  }
  void str(const std::string& s) {
    pod<std::uint64_t>(s.size());
    buf_.append(s);
  }
  void block(const std::string& name, const double* data, std::uint64_t rows, std::uint64_t cols) {
    pod<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    buf_.append(name);
    pod(rows);
    pod(cols);
    buf_.append(reinterpret_cast<const char*>(data), rows * cols * sizeof(double));
  }
  std::string& bytes() { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(const std::string& b, std::size_t end) : b_(b), end_(end) {}
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw CheckpointFormatError("checkpoint: truncated");
  }
  template <typename U>
  U pod() {
    need(sizeof(U));
    U v;
    std::memcpy(&v, b_.data() + pos_, sizeof(U));
    pos_ += sizeof(U);
    return v;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return raw(pod<std::uint64_t>()); }
  void doubles(double* out, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(out, b_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& b_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a64(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string serialize_checkpoint(const Checkpoint& ck) {
  const Network net(ck.config);
  if (ck.params.size() != net.num_params()) {
    throw std::invalid_argument("checkpoint: parameter count does not match config");
  }
  const bool has_adam = ck.adam.m.size() > 0;
  Writer w;
  w.bytes().append(kMagic, sizeof(kMagic));
  w.pod(kVersion);
  w.str(nlohmann::json(ck.config).dump());
  w.str(ck.metadata.dump());
  w.pod<std::int64_t>(ck.schedule_position);
  w.pod<std::int64_t>(ck.adam.step);
  w.pod<std::uint32_t>(static_cast<std::uint32_t>(net.tensors().size() + (has_adam ? 2 : 0)));
  for (const auto& t : net.tensors()) {
    w.block(t.name, ck.params.data() + t.slot.offset, t.slot.rows, t.slot.cols);
  }
  if (has_adam) {
    w.block("adam.m", ck.adam.m.data(), ck.adam.m.size(), 1);
    w.block("adam.v", ck.adam.v.data(), ck.adam.v.size(), 1);
  }
  const std::uint64_t h = fnv1a64(w.bytes().data(), w.bytes().size());
  w.pod(h);
  return std::move(w.bytes());
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) + sizeof(std::uint64_t) ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointFormatError("checkpoint: bad magic");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));
  if (stored != fnv1a64(bytes.data(), body)) throw CheckpointFormatError("checkpoint: checksum mismatch");

  Reader r(bytes, body);
  r.raw(sizeof(kMagic));
  const auto version = r.pod<std::uint32_t>();
  if (version != kVersion) {
    throw CheckpointFormatError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ck;
  ck.config = nlohmann::json::parse(r.str()).get<NetworkConfig>();
  ck.metadata = nlohmann::json::parse(r.str());
  ck.schedule_position = r.pod<std::int64_t>();
  ck.adam.step = r.pod<std::int64_t>();
  const Network net(ck.config);
  ck.params = Eigen::VectorXd::Zero(net.num_params());
  const auto n_blocks = r.pod<std::uint32_t>();
  std::size_t seen = 0;
  for (std::uint32_t i = 0; i < n_blocks; ++i) {
    const std::string name = r.raw(r.pod<std::uint32_t>());
    const auto rows = r.pod<std::uint64_t>();
    const auto cols = r.pod<std::uint64_t>();
    if (name == "adam.m" || name == "adam.v") {
      Eigen::VectorXd& dst = name == "adam.m" ? ck.adam.m : ck.adam.v;
      if (rows != static_cast<std::uint64_t>(net.num_params()) || cols != 1) {
        throw CheckpointFormatError("checkpoint: optimizer state has the wrong size");
      }
      dst.resize(static_cast<Eigen::Index>(rows));
      r.doubles(dst.data(), rows);
      continue;
    }
    const TensorInfo* match = nullptr;
    for (const auto& t : net.tensors()) {
      if (t.name == name) match = &t;
    }
    if (!match || static_cast<std::uint64_t>(match->slot.rows) != rows ||
        static_cast<std::uint64_t>(match->slot.cols) != cols) {
      throw CheckpointFormatError("checkpoint: unexpected tensor '" + name + "'");
    }
    r.doubles(ck.params.data() + match->slot.offset, rows * cols);
    ++seen;
  }
  if (seen != net.tensors().size()) throw CheckpointFormatError("checkpoint: missing tensors");
  if (r.pos() != body) throw CheckpointFormatError("checkpoint: trailing bytes");
  return ck;
}

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  const std::string bytes = serialize_checkpoint(ck);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace amortss::nn
