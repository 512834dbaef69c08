#include "scopeloc/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace scopeloc {

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'C', 'O', 'P', 'E', 'L', 'O', 'C'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
 public:
  Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > data_.size()) throw std::runtime_error(path_ + ": checkpoint is truncated");
  }
  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << v;
  return os.str();
}

}  // namespace

template <typename Real>
void save_checkpoint(const std::string& path, const SpanNetwork<Real>& network,
                     std::uint64_t seed) {
  const auto params = network.parameters();
  const nlohmann::json header = {{"format", "scopeloc-checkpoint"},
                                 {"version", kCheckpointVersion},
                                 {"config", network.config().to_json()},
                                 {"config_hash", hex64(config_hash(network.config()))},
                                 {"seed", seed},
                                 {"parameter_count", params.size()}};
  const std::string header_text = header.dump();

  std::string out(kMagic.begin(), kMagic.end());
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(header_text.size()));
  out += header_text;
  for (const auto* p : params) {
    put_u32(out, static_cast<std::uint32_t>(p->name.size()));
    out += p->name;
    put_u32(out, static_cast<std::uint32_t>(p->value.rank()));
    for (std::size_t d : p->value.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (Real v : p->value.values()) put_f32(out, static_cast<float>(v));
  }

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write checkpoint " + path);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw std::runtime_error("failed writing checkpoint " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open checkpoint " + path);
  std::ostringstream buffer;
  buffer << file.rdbuf();
  Reader in(buffer.str(), path);

  const std::string magic = in.bytes(kMagic.size());
  if (std::memcmp(magic.data(), kMagic.data(), kMagic.size()) != 0) {
    throw std::runtime_error(path + ": not a scopeloc checkpoint");
  }
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) {
    throw std::runtime_error(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  const nlohmann::json header = nlohmann::json::parse(in.bytes(in.u32()));

  Checkpoint ckpt;
  ckpt.config = ModelConfig::from_json(header.at("config"));
  ckpt.seed = header.at("seed").get<std::uint64_t>();
  if (header.at("config_hash").get<std::string>() != hex64(config_hash(ckpt.config))) {
    throw std::runtime_error(path + ": config hash does not match the stored config");
  }
  const auto count = header.at("parameter_count").get<std::size_t>();
  for (std::size_t k = 0; k < count; ++k) {
    std::string name = in.bytes(in.u32());
    std::vector<std::size_t> shape(in.u32());
    for (auto& d : shape) d = in.u32();
    Tensor<float> t(shape);
    for (auto& v : t.values()) v = in.f32();
    ckpt.parameters.emplace(std::move(name), std::move(t));
  }
  if (!in.done()) throw std::runtime_error(path + ": trailing bytes after parameters");
  return ckpt;
}

template <typename Real>
void load_parameters(const Checkpoint& checkpoint, SpanNetwork<Real>& network) {
  if (!(checkpoint.config == network.config())) {
    throw std::invalid_argument("checkpoint config does not match network config");
  }
  auto params = network.parameters();
  if (params.size() != checkpoint.parameters.size()) {
    throw std::invalid_argument("checkpoint parameter count does not match network");
  }
  for (auto* p : params) {
    const auto it = checkpoint.parameters.find(p->name);
    if (it == checkpoint.parameters.end()) {
      throw std::invalid_argument("checkpoint is missing parameter " + p->name);
    }
    if (it->second.shape() != p->value.shape()) {
      throw std::invalid_argument("checkpoint shape mismatch for " + p->name);
    }
    for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = static_cast<Real>(it->second[i]);
    p->zero_grad();
  }
}

SpanNetwork<float> load_network(const std::string& path, std::uint64_t* seed) {
  const Checkpoint ckpt = read_checkpoint(path);
  SpanNetwork<float> network(ckpt.config);
  load_parameters(ckpt, network);
  if (seed != nullptr) *seed = ckpt.seed;
  return network;
}

template void save_checkpoint<float>(const std::string&, const SpanNetwork<float>&, std::uint64_t);
template void save_checkpoint<double>(const std::string&, const SpanNetwork<double>&, std::uint64_t);
template void load_parameters<float>(const Checkpoint&, SpanNetwork<float>&);
template void load_parameters<double>(const Checkpoint&, SpanNetwork<double>&);

}  // namespace scopeloc
