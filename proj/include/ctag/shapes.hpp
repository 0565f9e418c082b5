#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ctag/conv.hpp"

namespace ctag {

enum class LayerKind { fc, conv };

struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::fc;
  MatmulShape fc;   // used when kind == fc
  ConvParams conv;  // used when kind == conv
  /// Number of independent instances of this product (for example attention heads).
  std::size_t batch = 1;

  MatmulShape matmul() const;
  void validate() const;
};

struct ModelSpec {
  std::string name;
  bool training = false;
  std::vector<LayerSpec> layers;
};

std::vector<std::string> builtin_model_names();
/// seq_len overrides the transformer sequence length when nonzero.
ModelSpec builtin_model(std::string_view name, std::size_t seq_len = 0);
/// Model file format: {"schema_version": 1, "name": ..., "layers": [...]} or a
/// "generator" object (see data/models/transformer.json).
ModelSpec parse_model_json(std::string_view text, std::size_t seq_len = 0);
ModelSpec load_model_file(const std::string& path, std::size_t seq_len = 0);

/// Appends the two backward products of every layer: gradient w.r.t. the
/// input (T1, T3, T2) and w.r.t. the weights (T2, T1, T3).
ModelSpec training_expansion(const ModelSpec& m);

}  // namespace ctag
