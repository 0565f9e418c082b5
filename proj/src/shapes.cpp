#include "ctag/shapes.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace ctag {

namespace detail {
extern const std::pair<std::string_view, std::string_view> kEmbeddedModels[];
extern const std::size_t kEmbeddedModelCount;
}  // namespace detail

MatmulShape LayerSpec::matmul() const {
  return kind == LayerKind::fc ? fc : conv_dims(conv);
}

void LayerSpec::validate() const {
  if (batch == 0) throw std::invalid_argument("layer " + name + ": batch must be positive");
  const MatmulShape s = matmul();
  if (s.t1 == 0 || s.t2 == 0 || s.t3 == 0) throw std::invalid_argument("layer " + name + ": dimensions must be positive");
}

namespace {

using nlohmann::json;

LayerSpec fc_layer(std::string name, std::size_t t1, std::size_t t2, std::size_t t3, std::size_t batch = 1) {
  LayerSpec l;
  l.name = std::move(name);
  l.kind = LayerKind::fc;
  l.fc = {t1, t2, t3};
  l.batch = batch;
  return l;
}

std::vector<LayerSpec> transformer_layers(const json& g, std::size_t seq_override) {
  const std::size_t seq = seq_override != 0 ? seq_override : g.at("seq_len").get<std::size_t>();
  const auto hidden = g.at("hidden").get<std::size_t>();
  const auto heads = g.at("heads").get<std::size_t>();
  const auto ffn = g.value("ffn_multiplier", std::size_t{4});
  const auto blocks = g.value("blocks", std::size_t{1});
  if (heads == 0 || hidden % heads != 0) throw std::invalid_argument("transformer: hidden must be divisible by heads");
  const std::size_t head_dim = hidden / heads;
  std::vector<LayerSpec> out;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::string p = blocks == 1 ? "" : "block" + std::to_string(b) + ".";
    out.push_back(fc_layer(p + "q_proj", seq, hidden, hidden));
    out.push_back(fc_layer(p + "k_proj", seq, hidden, hidden));
    out.push_back(fc_layer(p + "v_proj", seq, hidden, hidden));
    out.push_back(fc_layer(p + "attn_scores", seq, head_dim, seq, heads));
    out.push_back(fc_layer(p + "attn_context", seq, seq, head_dim, heads));
    out.push_back(fc_layer(p + "out_proj", seq, hidden, hidden));
    out.push_back(fc_layer(p + "ffn_up", seq, hidden, ffn * hidden));
    out.push_back(fc_layer(p + "ffn_down", seq, ffn * hidden, hidden));
  }
  return out;
}

LayerSpec parse_layer(const json& j) {
  LayerSpec l;
  l.name = j.at("name").get<std::string>();
  const auto kind = j.at("kind").get<std::string>();
  l.batch = j.value("batch", std::size_t{1});
  if (kind == "fc") {
    l.kind = LayerKind::fc;
    l.fc = {j.at("t1").get<std::size_t>(), j.at("t2").get<std::size_t>(), j.at("t3").get<std::size_t>()};
  } else if (kind == "conv") {
    l.kind = LayerKind::conv;
    l.conv.w = j.at("w").get<std::size_t>();
    l.conv.h = j.at("h").get<std::size_t>();
    l.conv.in = j.at("in").get<std::size_t>();
    l.conv.out = j.at("out").get<std::size_t>();
    l.conv.kernel = j.at("kernel").get<std::size_t>();
    l.conv.pad = j.value("pad", std::size_t{0});
    l.conv.stride = j.value("stride", std::size_t{1});
  } else {
    throw std::invalid_argument("layer " + l.name + ": unknown kind '" + kind + "'");
  }
  l.validate();
  return l;
}

}  // namespace

std::vector<std::string> builtin_model_names() {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < detail::kEmbeddedModelCount; ++i) out.emplace_back(detail::kEmbeddedModels[i].first);
  return out;
}

ModelSpec parse_model_json(std::string_view text, std::size_t seq_len) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("model file: ") + e.what());
  }
  try {
    if (doc.value("schema_version", 1) != 1) throw std::invalid_argument("model file: unsupported schema_version");
    ModelSpec m;
    m.name = doc.value("name", std::string("custom"));
    if (doc.contains("generator")) {
      const auto& g = doc.at("generator");
      if (g.at("type").get<std::string>() != "transformer_encoder") {
        throw std::invalid_argument("model file: unknown generator type");
      }
      m.layers = transformer_layers(g, seq_len);
    }
    if (doc.contains("layers")) {
      for (const auto& l : doc.at("layers")) m.layers.push_back(parse_layer(l));
    }
    if (m.layers.empty()) throw std::invalid_argument("model file: no layers");
    return m;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("model file: ") + e.what());
  }
}

ModelSpec builtin_model(std::string_view name, std::size_t seq_len) {
  for (std::size_t i = 0; i < detail::kEmbeddedModelCount; ++i) {
    if (detail::kEmbeddedModels[i].first == name) return parse_model_json(detail::kEmbeddedModels[i].second, seq_len);
  }
  throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

ModelSpec load_model_file(const std::string& path, std::size_t seq_len) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open model file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_model_json(ss.str(), seq_len);
}

ModelSpec training_expansion(const ModelSpec& m) {
  ModelSpec out = m;
  out.training = true;
  for (const auto& l : m.layers) {
    const MatmulShape s = l.matmul();
    out.layers.push_back(fc_layer(l.name + "/grad_input", s.t1, s.t3, s.t2, l.batch));
    out.layers.push_back(fc_layer(l.name + "/grad_weight", s.t2, s.t1, s.t3, l.batch));
  }
  return out;
}

}  // namespace ctag
