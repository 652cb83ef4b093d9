// SPDX-License-Identifier: Apache-2.0
#include "flowcond/velocity_model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "flowcond/rng.hpp"

namespace flowcond {

namespace {
constexpr char kMagic[4] = {'F', 'C', 'V', '1'};
constexpr std::uint32_t kFormatVersion = 1;
}  // namespace

std::string ModelArchitecture::describe() const {
  return "mlp(in=" + std::to_string(input_dim) + ", hidden=" + std::to_string(hidden_dim) + "x" +
         std::to_string(hidden_layers) + ", freqs=" + std::to_string(time_frequencies) + ")";
}

VelocityModel VelocityModel::create(const ModelArchitecture& arch, std::uint64_t seed) {
  if (arch.input_dim == 0 || arch.hidden_dim == 0 || arch.hidden_layers == 0) {
    throw std::invalid_argument("velocity model: architecture extents must be positive");
  }
  VelocityModel m;
  m.arch_ = arch;
  Rng rng = make_rng(seed, 0x6d6f64656cULL);

  const std::size_t in_features = arch.input_dim + 2 * arch.time_frequencies;
  std::size_t fan_in = in_features;
  for (std::size_t layer = 0; layer < arch.hidden_layers; ++layer) {
    std::vector<double> w(fan_in * arch.hidden_dim);
    fill_standard_normal(w, rng);
    const double scale = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : w) v *= scale;
    m.params_.emplace_back(fan_in, arch.hidden_dim, std::move(w));
    m.params_.emplace_back(ad::Tensor::zeros(1, arch.hidden_dim));
    fan_in = arch.hidden_dim;
  }
  m.params_.emplace_back(ad::Tensor::zeros(fan_in, arch.input_dim));
  m.params_.emplace_back(ad::Tensor::zeros(1, arch.input_dim));
  return m;
}

ad::Tensor VelocityModel::evaluate(const ad::Tensor& tau, const ad::Tensor& x) const {
  if (params_.empty()) throw std::logic_error("velocity model: not initialized");
  if (x.cols() != arch_.input_dim) {
    throw std::invalid_argument("velocity model: expected " + std::to_string(arch_.input_dim) +
                                " state columns, got " + ad::shape_str(x));
  }
  if (tau.cols() != 1 || (tau.rows() != 1 && tau.rows() != x.rows())) {
    throw std::invalid_argument("velocity model: tau must be [1,1] or [B,1], got " +
                                ad::shape_str(tau));
  }

  // Sinusoidal time features sin/cos(pi (k+1) tau), k = 0..F-1. A linear
  // frequency ladder keeps the field smooth in tau, which the reverse
  // transport relies on.
  std::vector<ad::Tensor> features;
  features.reserve(2 * arch_.time_frequencies);
  for (std::size_t k = 0; k < arch_.time_frequencies; ++k) {
    const double omega = std::numbers::pi * static_cast<double>(k + 1);
    ad::Tensor angle = ad::scalar_mul(tau, omega);
    features.push_back(ad::sin(angle));
    features.push_back(ad::cos(angle));
  }
  ad::Tensor embedding = ad::concat(features, 1);
  if (embedding.rows() == 1 && x.rows() > 1) {
    embedding = ad::broadcast(embedding, x.rows());
  }

  ad::Tensor h = ad::concat(embedding, x, 1);
  for (std::size_t layer = 0; layer < arch_.hidden_layers; ++layer) {
    h = ad::silu(ad::add(ad::matmul(h, params_[2 * layer]), params_[2 * layer + 1]));
  }
  const std::size_t out = 2 * arch_.hidden_layers;
  return ad::add(ad::matmul(h, params_[out]), params_[out + 1]);
}

ad::Tensor VelocityModel::evaluate(double tau, const ad::Tensor& x) const {
  return evaluate(ad::Tensor(tau), x);
}

std::size_t VelocityModel::weight_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

VelocityModel VelocityModel::watched(ad::Tape& tape) const {
  VelocityModel m;
  m.arch_ = arch_;
  m.params_.reserve(params_.size());
  for (const auto& p : params_) m.params_.push_back(tape.watch(p.detached()));
  return m;
}

std::vector<double> VelocityModel::flat_weights() const {
  std::vector<double> out;
  out.reserve(weight_count());
  for (const auto& p : params_) {
    const auto v = p.values();
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

void VelocityModel::set_flat_weights(std::span<const double> w) {
  if (w.size() != weight_count()) {
    throw std::invalid_argument("velocity model: weight vector has " + std::to_string(w.size()) +
                                " entries, architecture needs " + std::to_string(weight_count()));
  }
  std::size_t offset = 0;
  for (auto& p : params_) {
    auto dst = p.mutable_values();
    std::copy(w.begin() + static_cast<std::ptrdiff_t>(offset),
              w.begin() + static_cast<std::ptrdiff_t>(offset + dst.size()), dst.begin());
    offset += dst.size();
  }
}

// ---- checkpoint io ---------------------------------------------------------

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size()) {
      throw std::runtime_error("checkpoint: file truncated or corrupt");
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const VelocityModel& model,
                     const TrainingMeta& meta) {
  const auto& arch = model.architecture();
  std::string blob;
  blob.append(kMagic, 4);
  put_u32(blob, kFormatVersion);
  put_u32(blob, static_cast<std::uint32_t>(arch.input_dim));
  put_u32(blob, static_cast<std::uint32_t>(arch.hidden_dim));
  put_u32(blob, static_cast<std::uint32_t>(arch.hidden_layers));
  put_u32(blob, static_cast<std::uint32_t>(arch.time_frequencies));

  const std::vector<double> weights = model.flat_weights();
  put_u64(blob, weights.size());
  for (double w : weights) put_u64(blob, std::bit_cast<std::uint64_t>(w));

  nlohmann::json j;
  j["dataset"] = meta.dataset_tag;
  j["steps"] = meta.steps;
  j["final_loss"] = meta.final_loss;
  j["architecture"] = arch.describe();
  const std::string meta_str = j.dump();
  put_u64(blob, meta_str.size());
  blob += meta_str;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open " + path.string() + " for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Reader r{buf};
  r.need(4);
  if (std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic, " + path.string() +
                             " is not a flowcond checkpoint");
  }
  r.pos = 4;

  Checkpoint ckpt;
  ckpt.format_version = r.u32();
  if (ckpt.format_version != kFormatVersion) {
    throw std::runtime_error("checkpoint: unsupported format version " +
                             std::to_string(ckpt.format_version));
  }
  ckpt.arch.input_dim = r.u32();
  ckpt.arch.hidden_dim = r.u32();
  ckpt.arch.hidden_layers = r.u32();
  ckpt.arch.time_frequencies = r.u32();

  const std::uint64_t n = r.u64();
  r.need(8 * n);
  ckpt.weights.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) ckpt.weights[i] = std::bit_cast<double>(r.u64());

  const std::uint64_t meta_len = r.u64();
  r.need(meta_len);
  const std::string meta_str = buf.substr(r.pos, meta_len);
  try {
    const auto j = nlohmann::json::parse(meta_str);
    ckpt.meta.dataset_tag = j.value("dataset", std::string{});
    ckpt.meta.steps = j.value("steps", std::uint64_t{0});
    ckpt.meta.final_loss = j.value("final_loss", 0.0);
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error("checkpoint: corrupt metadata trailer in " + path.string());
  }
  return ckpt;
}

VelocityModel model_from_checkpoint(const Checkpoint& ckpt) {
  VelocityModel model = VelocityModel::create(ckpt.arch, 0);
  model.set_flat_weights(ckpt.weights);
  return model;
}

VelocityModel load_model(const std::filesystem::path& path,
                         std::optional<ModelArchitecture> expected) {
  Checkpoint ckpt = load_checkpoint(path);
  if (expected && !(ckpt.arch == *expected)) {
    throw std::runtime_error("checkpoint: architecture mismatch, file has " +
                             ckpt.arch.describe() + " but " + expected->describe() +
                             " was requested");
  }
  return model_from_checkpoint(ckpt);
}

}  // namespace flowcond
