#pragma once

// Checkpoint file:
//
//   MEDER1\n
//   kind <single|ensemble>\n
//   order <text-first|entity-first|both>\n
//   config key=value ...\n
//   label <name>\n                      (one per class, optional)
//   tensor <name> <d0>x<d1>... <byte offset> <count>\n   (one per parameter)
//   end\n
//   <little-endian IEEE-754 float32 data; offsets are relative to here>

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "meder/errors.hpp"
#include "meder/model.hpp"

namespace meder {

inline constexpr std::string_view kCheckpointMagic = "MEDER1\n";

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& what) {
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError(what + ": not a number: '" + s + "'");
  return v;
}

inline std::uint64_t parse_uint(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError(what + ": not a non-negative integer: '" + s + "'");
  return v;
}

inline std::string model_config_to_kv(const ModelConfig& c) {
  std::ostringstream os;
  os << "vocab_size=" << c.vocab_size << " max_len=" << c.max_len << " d_model=" << c.d_model
     << " n_heads=" << c.n_heads << " n_layers=" << c.n_layers << " d_ff=" << c.d_ff << " n_classes=" << c.n_classes
     << " d_hidden=" << c.d_hidden << " dropout=" << format_double(c.dropout)
     << " init_std=" << format_double(c.init_std) << " seed=" << c.seed;
  return os.str();
}

inline ModelConfig model_config_from_kv(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream ss(line);
  std::string item;
  while (ss >> item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw DataError("checkpoint config: malformed item '" + item + "'");
    kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  auto need = [&](const char* k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw DataError(std::string("checkpoint config: missing ") + k);
    return it->second;
  };
  ModelConfig c;
  c.vocab_size = parse_uint(need("vocab_size"), "vocab_size");
  c.max_len = parse_uint(need("max_len"), "max_len");
  c.d_model = parse_uint(need("d_model"), "d_model");
  c.n_heads = parse_uint(need("n_heads"), "n_heads");
  c.n_layers = parse_uint(need("n_layers"), "n_layers");
  c.d_ff = parse_uint(need("d_ff"), "d_ff");
  c.n_classes = parse_uint(need("n_classes"), "n_classes");
  c.d_hidden = parse_uint(need("d_hidden"), "d_hidden");
  c.dropout = parse_double(need("dropout"), "dropout");
  c.init_std = parse_double(need("init_std"), "init_std");
  c.seed = parse_uint(need("seed"), "seed");
  return c;
}

struct CheckpointHeader {
  std::string kind;   // "single" or "ensemble"
  std::string order;  // "text-first", "entity-first" or "both"
  ModelConfig config;
  std::vector<std::string> labels;

  struct Entry {
    std::string name;
    Shape shape;
    std::uint64_t offset = 0;
    std::uint64_t count = 0;
  };
  std::vector<Entry> tensors;
};

namespace detail {

inline void write_f32_le(std::ostream& out, float v) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  unsigned char b[4] = {static_cast<unsigned char>(bits), static_cast<unsigned char>(bits >> 8),
                        static_cast<unsigned char>(bits >> 16), static_cast<unsigned char>(bits >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline float read_f32_le(const unsigned char* b) {
  const std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                             (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return std::bit_cast<float>(bits);
}

inline std::string shape_token(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(s[i]);
  }
  return out.empty() ? "scalar" : out;
}

inline Shape parse_shape_token(const std::string& t) {
  Shape s;
  if (t == "scalar") return s;
  std::size_t i = 0;
  while (i <= t.size()) {
    const auto x = t.find('x', i);
    const std::string part = t.substr(i, x == std::string::npos ? std::string::npos : x - i);
    s.push_back(parse_uint(part, "tensor shape"));
    if (x == std::string::npos) break;
    i = x + 1;
  }
  return s;
}

}  // namespace detail

template <typename T>
std::string model_order(const SingleModel<T>& m) {
  return to_string(m.order());
}

template <typename T>
std::string model_order(const EnsembleModel<T>&) {
  return "both";
}

template <typename Model>
void save_checkpoint(std::ostream& out, Model& m, const std::vector<std::string>& labels = {}) {
  auto params = m.parameters();
  std::ostringstream head;
  head << kCheckpointMagic;
  head << "kind " << Model::kKind << '\n';
  head << "order " << model_order(m) << '\n';
  head << "config " << model_config_to_kv(m.config()) << '\n';
  for (const auto& l : labels) {
    if (l.find('\n') != std::string::npos) throw DataError("checkpoint: label contains a newline");
    head << "label " << l << '\n';
  }
  std::uint64_t offset = 0;
  for (auto* p : params) {
    head << "tensor " << p->name << ' ' << detail::shape_token(p->value.shape()) << ' ' << offset << ' '
         << p->value.size() << '\n';
    offset += 4 * p->value.size();
  }
  head << "end\n";
  const std::string h = head.str();
  out.write(h.data(), static_cast<std::streamsize>(h.size()));
  for (auto* p : params)
    for (auto v : p->value.data()) detail::write_f32_le(out, static_cast<float>(v));
  if (!out) throw DataError("checkpoint: write failed");
}

template <typename Model>
void save_checkpoint(const std::string& path, Model& m, const std::vector<std::string>& labels = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot create checkpoint: " + path);
  save_checkpoint(out, m, labels);
}

/// Parses everything up to and including the "end" line.
inline CheckpointHeader read_checkpoint_header(std::istream& in) {
  std::string magic(kCheckpointMagic.size(), '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || magic != kCheckpointMagic) throw DataError("checkpoint: bad magic bytes");
  CheckpointHeader h;
  bool has_config = false;
  std::string line;
  while (true) {
    if (!std::getline(in, line)) throw DataError("checkpoint: truncated header");
    if (line == "end") break;
    const auto sp = line.find(' ');
    const std::string key = line.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (key == "kind") {
      h.kind = rest;
    } else if (key == "order") {
      h.order = rest;
    } else if (key == "config") {
      h.config = model_config_from_kv(rest);
      has_config = true;
    } else if (key == "label") {
      h.labels.push_back(rest);
    } else if (key == "tensor") {
      std::istringstream ss(rest);
      CheckpointHeader::Entry e;
      std::string shape, off, cnt;
      if (!(ss >> e.name >> shape >> off >> cnt)) throw DataError("checkpoint: malformed tensor line");
      e.shape = detail::parse_shape_token(shape);
      e.offset = parse_uint(off, "tensor offset");
      e.count = parse_uint(cnt, "tensor count");
      if (num::numel(e.shape) != e.count) throw DataError("checkpoint: count disagrees with shape for " + e.name);
      h.tensors.push_back(std::move(e));
    } else {
      throw DataError("checkpoint: unknown header line '" + key + "'");
    }
  }
  if (h.kind != "single" && h.kind != "ensemble") throw DataError("checkpoint: unknown kind '" + h.kind + "'");
  if (!has_config) throw DataError("checkpoint: missing config line");
  return h;
}

inline CheckpointHeader read_checkpoint_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  return read_checkpoint_header(in);
}

/// Reads tensor data into a model whose parameter names and shapes match.
template <typename Model>
void load_parameters(std::istream& in, const CheckpointHeader& h, Model& m) {
  auto params = m.parameters();
  if (params.size() != h.tensors.size())
    throw DataError("checkpoint: " + std::to_string(h.tensors.size()) + " tensors, model expects " +
                    std::to_string(params.size()));
  std::vector<unsigned char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& e = h.tensors[i];
    auto* p = params[i];
    if (e.name != p->name || e.shape != p->value.shape())
      throw DataError("checkpoint: tensor '" + e.name + "' " + num::shape_str(e.shape) + " does not match model '" +
                      p->name + "' " + num::shape_str(p->value.shape()));
    if (e.offset + 4 * e.count > data.size()) throw DataError("checkpoint: tensor data truncated for " + e.name);
    for (std::size_t k = 0; k < e.count; ++k)
      p->value[k] = static_cast<typename Model::value_type>(
          detail::read_f32_le(data.data() + e.offset + 4 * k));
    p->zero_grad();
  }
}

inline Order parse_order(const std::string& s) {
  if (s == "text-first") return Order::TextFirst;
  if (s == "entity-first") return Order::EntityFirst;
  throw DataError("unknown order '" + s + "'");
}

template <typename T>
SingleModel<T> load_single(const std::string& path, CheckpointHeader* header_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  CheckpointHeader h = read_checkpoint_header(in);
  if (h.kind != "single") throw DataError("checkpoint holds a " + h.kind + " model, expected single");
  SingleModel<T> m(h.config, parse_order(h.order));
  load_parameters(in, h, m);
  if (header_out) *header_out = h;
  return m;
}

template <typename T>
EnsembleModel<T> load_ensemble(const std::string& path, CheckpointHeader* header_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  CheckpointHeader h = read_checkpoint_header(in);
  if (h.kind != "ensemble") throw DataError("checkpoint holds a " + h.kind + " model, expected ensemble");
  EnsembleModel<T> m(h.config);
  load_parameters(in, h, m);
  if (header_out) *header_out = h;
  return m;
}

}  // namespace meder
