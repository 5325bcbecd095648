#include "episim/core/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

namespace episim {

static_assert(std::endian::native == std::endian::little,
              "field format I/O assumes a little-endian host");

namespace {

using nlohmann::json;

std::string domain_name(Domain d) {
  switch (d) {
    case Domain::Image: return "image";
    case Domain::KSpace: return "kspace";
    case Domain::HybridXKy: return "hybrid";
  }
  return "image";
}

Domain domain_from(const std::string& s) {
  if (s == "kspace") return Domain::KSpace;
  if (s == "hybrid") return Domain::HybridXKy;
  if (s == "image") return Domain::Image;
  throw DataError("unknown domain tag '" + s + "' in field sidecar");
}

void write_sidecar(const std::string& stem, int w, int h, size_t slices,
                   const std::string& dtype, double dx, double dy, double thick,
                   Domain domain) {
  json j;
  j["width"] = w;
  j["height"] = h;
  j["slices"] = slices;
  j["dtype"] = dtype;
  j["spacing_mm"] = {dx, dy};
  j["slice_thickness_mm"] = thick;
  j["domain"] = domain_name(domain);
  std::ofstream f(stem + ".json");
  if (!f) throw DataError("cannot write " + stem + ".json");
  f << j.dump(2) << "\n";
}

json read_sidecar(const std::string& stem) {
  std::ifstream f(stem + ".json");
  if (!f) throw DataError("cannot open " + stem + ".json");
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw DataError("malformed sidecar " + stem + ".json: " + e.what());
  }
  return j;
}

void write_raw(const std::string& stem, const void* p, size_t bytes) {
  std::ofstream f(stem + ".raw", std::ios::binary);
  if (!f) throw DataError("cannot write " + stem + ".raw");
  f.write(static_cast<const char*>(p), std::streamsize(bytes));
}

std::vector<char> read_raw(const std::string& stem, size_t expected_bytes) {
  std::ifstream f(stem + ".raw", std::ios::binary | std::ios::ate);
  if (!f) throw DataError("cannot open " + stem + ".raw");
  const size_t n = size_t(f.tellg());
  if (n != expected_bytes)
    throw DataError(stem + ".raw has " + std::to_string(n) + " bytes, sidecar implies " +
                    std::to_string(expected_bytes));
  std::vector<char> buf(n);
  f.seekg(0);
  f.read(buf.data(), std::streamsize(n));
  return buf;
}

template <class T>
void append_samples(std::vector<char>& out, const T* p, size_t n) {
  const size_t off = out.size();
  out.resize(off + n * sizeof(T));
  std::memcpy(out.data() + off, p, n * sizeof(T));
}

}  // namespace

void save_field(const std::string& stem, const Volume& v, bool f32) {
  v.check_uniform();
  const auto& s0 = v.slices.front();
  write_sidecar(stem, s0.width, s0.height, v.size(), f32 ? "f32" : "f64",
                s0.dx_mm, s0.dy_mm, v.slice_thickness_mm, Domain::Image);
  std::vector<char> bytes;
  for (const auto& s : v.slices) {
    if (f32) {
      std::vector<float> tmp(s.data.begin(), s.data.end());
      append_samples(bytes, tmp.data(), tmp.size());
    } else {
      append_samples(bytes, s.data.data(), s.data.size());
    }
  }
  write_raw(stem, bytes.data(), bytes.size());
}

void save_field(const std::string& stem, const ComplexVolume& v, bool f32) {
  v.check_uniform();
  const auto& s0 = v.slices.front();
  write_sidecar(stem, s0.width, s0.height, v.size(), f32 ? "c64" : "c128",
                s0.dx_mm, s0.dy_mm, v.slice_thickness_mm, s0.domain);
  std::vector<char> bytes;
  for (const auto& s : v.slices) {
    if (f32) {
      std::vector<float> tmp;
      tmp.reserve(s.data.size() * 2);
      for (const cplx& z : s.data) {
        tmp.push_back(float(z.real()));
        tmp.push_back(float(z.imag()));
      }
      append_samples(bytes, tmp.data(), tmp.size());
    } else {
      append_samples(bytes, reinterpret_cast<const double*>(s.data.data()),
                     s.data.size() * 2);
    }
  }
  write_raw(stem, bytes.data(), bytes.size());
}

void save_field(const std::string& stem, const RealSlice& s, bool f32) {
  Volume v;
  v.slices.push_back(s);
  save_field(stem, v, f32);
}

void save_field(const std::string& stem, const ComplexSlice& s, bool f32) {
  ComplexVolume v;
  v.slices.push_back(s);
  save_field(stem, v, f32);
}

bool field_is_complex(const std::string& stem) {
  const auto j = read_sidecar(stem);
  const std::string dtype = j.at("dtype");
  return dtype == "c64" || dtype == "c128";
}

Volume load_field_real(const std::string& stem) {
  const auto j = read_sidecar(stem);
  const int w = j.at("width"), h = j.at("height");
  const size_t ns = j.at("slices");
  const std::string dtype = j.at("dtype");
  if (dtype != "f32" && dtype != "f64")
    throw DataError(stem + ": dtype " + dtype + " is not a real field");
  const size_t per = size_t(w) * size_t(h);
  const size_t sample = dtype == "f32" ? 4 : 8;
  auto bytes = read_raw(stem, ns * per * sample);

  Volume v;
  v.slice_thickness_mm = j.at("slice_thickness_mm");
  const auto spacing = j.at("spacing_mm");
  for (size_t k = 0; k < ns; ++k) {
    RealSlice s(w, h, spacing[0], spacing[1]);
    const char* p = bytes.data() + k * per * sample;
    if (dtype == "f32") {
      const float* fp = reinterpret_cast<const float*>(p);
      for (size_t i = 0; i < per; ++i) s.data[i] = double(fp[i]);
    } else {
      std::memcpy(s.data.data(), p, per * 8);
    }
    v.slices.push_back(std::move(s));
  }
  return v;
}

ComplexVolume load_field_complex(const std::string& stem) {
  const auto j = read_sidecar(stem);
  const int w = j.at("width"), h = j.at("height");
  const size_t ns = j.at("slices");
  const std::string dtype = j.at("dtype");
  if (dtype != "c64" && dtype != "c128")
    throw DataError(stem + ": dtype " + dtype + " is not a complex field");
  const size_t per = size_t(w) * size_t(h);
  const size_t sample = dtype == "c64" ? 8 : 16;
  auto bytes = read_raw(stem, ns * per * sample);

  ComplexVolume v;
  v.slice_thickness_mm = j.at("slice_thickness_mm");
  const auto spacing = j.at("spacing_mm");
  const Domain dom = domain_from(j.at("domain"));
  for (size_t k = 0; k < ns; ++k) {
    ComplexSlice s(w, h, dom, spacing[0], spacing[1]);
    const char* p = bytes.data() + k * per * sample;
    if (dtype == "c64") {
      const float* fp = reinterpret_cast<const float*>(p);
      for (size_t i = 0; i < per; ++i)
        s.data[i] = cplx(double(fp[2 * i]), double(fp[2 * i + 1]));
    } else {
      std::memcpy(reinterpret_cast<double*>(s.data.data()), p, per * 16);
    }
    v.slices.push_back(std::move(s));
  }
  return v;
}

}  // namespace episim
