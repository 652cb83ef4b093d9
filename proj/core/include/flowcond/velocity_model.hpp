// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flowcond/ops.hpp"
#include "flowcond/tape.hpp"
#include "flowcond/tensor.hpp"

namespace flowcond {

struct ModelArchitecture {
  std::size_t input_dim = 2;
  std::size_t hidden_dim = 128;
  std::size_t hidden_layers = 4;
  std::size_t time_frequencies = 8;  // sinusoidal features: 2 * frequencies

  bool operator==(const ModelArchitecture&) const = default;
  std::string describe() const;
};

struct TrainingMeta {
  std::string dataset_tag;
  std::uint64_t steps = 0;
  double final_loss = 0.0;
};

/// MLP velocity field over 2D states: transport time tau enters through a
/// sinusoidal embedding concatenated to the state, SiLU between hidden
/// layers. The output layer is zero-initialized, so a freshly created
/// model is the zero field and its transport map is the identity.
class VelocityModel {
 public:
  VelocityModel() = default;
  static VelocityModel create(const ModelArchitecture& arch, std::uint64_t seed);

  const ModelArchitecture& architecture() const { return arch_; }

  /// Velocity batch for states x [B, input_dim] at time tau ([1,1] shared
  /// or [B,1] per row). Differentiable w.r.t. tau, x and weights through
  /// whatever tape those tensors live on.
  ad::Tensor evaluate(const ad::Tensor& tau, const ad::Tensor& x) const;
  ad::Tensor evaluate(double tau, const ad::Tensor& x) const;

  /// Weight tensors in serialization order: (W, b) per affine layer.
  std::vector<ad::Tensor>& parameters() { return params_; }
  const std::vector<ad::Tensor>& parameters() const { return params_; }
  std::size_t weight_count() const;

  /// Copy whose parameters are watched leaves of `tape`. Buffers are
  /// shared, so optimizer updates through either copy are visible to both.
  VelocityModel watched(ad::Tape& tape) const;

  std::vector<double> flat_weights() const;
  void set_flat_weights(std::span<const double> w);

 private:
  ModelArchitecture arch_;
  std::vector<ad::Tensor> params_;
};

struct Checkpoint {
  std::uint32_t format_version = 1;
  ModelArchitecture arch;
  std::vector<double> weights;
  TrainingMeta meta;
};

/// Binary checkpoint: magic "FCV1", little-endian header (version and
/// architecture), float64 weight blob, JSON metadata trailer.
void save_checkpoint(const std::filesystem::path& path, const VelocityModel& model,
                     const TrainingMeta& meta);
Checkpoint load_checkpoint(const std::filesystem::path& path);
VelocityModel model_from_checkpoint(const Checkpoint& ckpt);
VelocityModel load_model(const std::filesystem::path& path,
                         std::optional<ModelArchitecture> expected = std::nullopt);

}  // namespace flowcond
