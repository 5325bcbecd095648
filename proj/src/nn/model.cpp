#include "episim/nn/model.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "episim/core/rng.hpp"

namespace episim::nn {

namespace {

using nlohmann::json;

void init_layer(ConvLayer& l, Rng& rng, double std) {
  for (auto& w : l.weights) w = rng.normal() * std;
  // biases stay zero
}

uint64_t fnv1a64(const void* p, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* b = static_cast<const unsigned char*>(p);
  for (size_t i = 0; i < n; ++i) {
    h ^= b[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

void append_f32(std::vector<float>& out, const std::vector<double>& v) {
  for (double x : v) out.push_back(float(x));
}

json layer_shape(const ConvLayer& l) {
  return json{{"c_out", l.c_out}, {"c_in", l.c_in}, {"k", l.k}};
}

ConvLayer layer_from(const json& j) {
  return ConvLayer(j.at("c_out"), j.at("c_in"), j.at("k"));
}

size_t take_f32(const std::vector<float>& buf, size_t& pos, std::vector<double>& dst) {
  if (pos + dst.size() > buf.size()) throw DataError("model weight file is truncated");
  for (auto& d : dst) d = double(buf[pos++]);
  return pos;
}

}  // namespace

SrcnnModel SrcnnModel::init(const Arch& arch, uint64_t seed, double init_std) {
  SrcnnModel m;
  m.l1 = ConvLayer(arch.c1, 1, arch.k1);
  m.l2 = ConvLayer(arch.c2, arch.c1, arch.k2);
  m.l3 = ConvLayer(1, arch.c2, arch.k3);
  m.seed = seed;
  Rng rng(derive_seed(seed, 0x77));
  init_layer(m.l1, rng, init_std);
  init_layer(m.l2, rng, init_std);
  init_layer(m.l3, rng, init_std);
  return m;
}

Tensor4 SrcnnModel::forward(const Tensor4& x) const {
  auto a1 = relu_forward(conv2d_forward(x, l1));
  auto a2 = relu_forward(conv2d_forward(a1, l2));
  return conv2d_forward(a2, l3);
}

size_t SrcnnModel::parameter_count() const {
  return l1.weights.size() + l1.bias.size() + l2.weights.size() + l2.bias.size() +
         l3.weights.size() + l3.bias.size();
}

double standardize_value(const SrcnnModel& m, double v) {
  return (v - m.input_mean) / m.input_std;
}

std::pair<RealSlice, RealSlice> denoise(const SrcnnModel& m, const RealSlice& input) {
  Tensor4 x(1, 1, input.height, input.width);
  const double inv = 1.0 / m.input_std;
  for (size_t i = 0; i < input.data.size(); ++i)
    x.data[i] = (input.data[i] - m.input_mean) * inv;

  Tensor4 est = m.forward(x);

  RealSlice noise(input.width, input.height, input.dx_mm, input.dy_mm);
  RealSlice denoised(input.width, input.height, input.dx_mm, input.dy_mm);
  for (size_t i = 0; i < noise.data.size(); ++i) {
    // the estimate lives in standardized units; only the scale maps back
    noise.data[i] = est.data[i] * m.input_std;
    denoised.data[i] = input.data[i] - noise.data[i];
  }
  return {std::move(denoised), std::move(noise)};
}

void save_model(const SrcnnModel& m, const std::string& stem) {
  std::vector<float> w32;
  append_f32(w32, m.l1.weights);
  append_f32(w32, m.l1.bias);
  append_f32(w32, m.l2.weights);
  append_f32(w32, m.l2.bias);
  append_f32(w32, m.l3.weights);
  append_f32(w32, m.l3.bias);
  const uint64_t hash = fnv1a64(w32.data(), w32.size() * sizeof(float));

  json j;
  j["format"] = "srcnn-v1";
  j["layers"] = {layer_shape(m.l1), layer_shape(m.l2), layer_shape(m.l3)};
  j["input_mean"] = m.input_mean;
  j["input_std"] = m.input_std;
  j["training_snr"] = m.training_snr;
  j["seed"] = m.seed;
  j["weight_count"] = w32.size();
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  j["weights_fnv1a64"] = hex;

  std::ofstream jf(stem + ".srcnn.json");
  if (!jf) throw DataError("cannot write " + stem + ".srcnn.json");
  jf << j.dump(2) << "\n";

  std::ofstream bf(stem + ".srcnn.bin", std::ios::binary);
  if (!bf) throw DataError("cannot write " + stem + ".srcnn.bin");
  bf.write(reinterpret_cast<const char*>(w32.data()),
           std::streamsize(w32.size() * sizeof(float)));
}

SrcnnModel load_model(const std::string& stem) {
  std::ifstream jf(stem + ".srcnn.json");
  if (!jf) throw DataError("cannot open " + stem + ".srcnn.json");
  json j;
  try {
    jf >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed model header: " + std::string(e.what()));
  }
  if (j.value("format", "") != std::string("srcnn-v1"))
    throw DataError("unknown model format in " + stem + ".srcnn.json");

  SrcnnModel m;
  const auto& layers = j.at("layers");
  if (layers.size() != 3) throw DataError("model must have exactly 3 layers");
  m.l1 = layer_from(layers[0]);
  m.l2 = layer_from(layers[1]);
  m.l3 = layer_from(layers[2]);
  if (m.l1.c_in != 1 || m.l2.c_in != m.l1.c_out || m.l3.c_in != m.l2.c_out || m.l3.c_out != 1)
    throw DataError("model header has an inconsistent channel chain");
  m.input_mean = j.at("input_mean");
  m.input_std = j.at("input_std");
  m.training_snr = j.value("training_snr", 0.0);
  m.seed = j.value("seed", uint64_t(0));

  std::ifstream bf(stem + ".srcnn.bin", std::ios::binary | std::ios::ate);
  if (!bf) throw DataError("cannot open " + stem + ".srcnn.bin");
  const size_t bytes = size_t(bf.tellg());
  std::vector<float> w32(bytes / sizeof(float));
  bf.seekg(0);
  bf.read(reinterpret_cast<char*>(w32.data()), std::streamsize(bytes));

  const size_t expected = j.at("weight_count");
  if (w32.size() != expected || bytes % sizeof(float) != 0)
    throw DataError("model weight file is truncated or oversized");

  const uint64_t hash = fnv1a64(w32.data(), w32.size() * sizeof(float));
  char hex[32];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(hash));
  if (j.at("weights_fnv1a64") != std::string(hex))
    throw DataError("model weight file failed its content hash");

  size_t pos = 0;
  take_f32(w32, pos, m.l1.weights);
  take_f32(w32, pos, m.l1.bias);
  take_f32(w32, pos, m.l2.weights);
  take_f32(w32, pos, m.l2.bias);
  take_f32(w32, pos, m.l3.weights);
  take_f32(w32, pos, m.l3.bias);
  if (pos != w32.size()) throw DataError("model weight file has trailing data");
  return m;
}

}  // namespace episim::nn
