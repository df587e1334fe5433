#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "strl/errors.hpp"
#include "strl/tensor.hpp"

namespace strl {

namespace detail {

// Doubles are stored as little-endian IEEE-754 hex so round-trips are exact.
inline std::string doubles_to_hex(const std::vector<double>& values) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(values.size() * 16);
  for (double d : values) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      const unsigned byte = (bits >> (8 * b)) & 0xff;
      out.push_back(digits[byte >> 4]);
      out.push_back(digits[byte & 0xf]);
    }
  }
  return out;
}

inline std::vector<double> hex_to_doubles(const std::string& hex) {
  if (hex.size() % 16 != 0) throw ParseError("checkpoint blob has a truncated double");
  auto nibble = [](char c) -> std::uint64_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint64_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint64_t>(c - 'a' + 10);
    throw ParseError("checkpoint blob has a non-hex character");
  };
  std::vector<double> out(hex.size() / 16);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      const std::uint64_t hi = nibble(hex[i * 16 + 2 * b]);
      const std::uint64_t lo = nibble(hex[i * 16 + 2 * b + 1]);
      bits |= ((hi << 4) | lo) << (8 * b);
    }
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    out[i] = d;
  }
  return out;
}

}  // namespace detail

// Named shape+data blobs plus a free-form manifest.
struct Checkpoint {
  nlohmann::json manifest;
  std::map<std::string, Tensor> tensors;

  void put(const std::string& name, const Tensor& t) { tensors.emplace(name, t); }

  const Tensor& get(const std::string& name) const {
    const auto it = tensors.find(name);
    if (it == tensors.end()) throw CompatibilityError("checkpoint is missing tensor '" + name + "'");
    return it->second;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "strl-checkpoint-v1";
    j["manifest"] = manifest;
    nlohmann::json blobs = nlohmann::json::object();
    for (const auto& [name, t] : tensors) {
      nlohmann::json entry;
      entry["shape"] = t.shape();
      entry["data"] = detail::doubles_to_hex(t.data());
      blobs[name] = std::move(entry);
    }
    j["tensors"] = std::move(blobs);
    return j;
  }

  static Checkpoint from_json(const nlohmann::json& j) {
    if (!j.contains("format") || j["format"] != "strl-checkpoint-v1")
      throw ParseError("not a strl checkpoint");
    Checkpoint ck;
    ck.manifest = j.value("manifest", nlohmann::json::object());
    for (const auto& [name, entry] : j.at("tensors").items()) {
      Shape shape = entry.at("shape").get<Shape>();
      std::vector<double> data = detail::hex_to_doubles(entry.at("data").get<std::string>());
      ck.tensors.emplace(name, Tensor::from(std::move(shape), std::move(data)));
    }
    return ck;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint: " + path);
    out << to_json().dump(1);
    out << '\n';
    if (!out) throw IoError("failed while writing checkpoint: " + path);
  }

  static Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    return from_json(j);
  }
};

}  // namespace strl
