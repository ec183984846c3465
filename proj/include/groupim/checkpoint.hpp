#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "groupim/model.hpp"

namespace groupim {

// Binary tensor container. Layout (little-endian):
//   magic "GIMCKPT1", u32 format_version,
//   u32 kind, i32 num_items, i32 embed_dim,
//   f64 lambda, f64 eta, i32 negatives_per_member,
//   u32 tensor_count, then per tensor:
//     u32 name_len, name bytes, u64 rows, u64 cols, rows*cols f64 row-major.
// Doubles are written raw, so save -> load -> save is byte-identical.

namespace ckpt_detail {

constexpr char kMagic[8] = {'G', 'I', 'M', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

inline void write_tensor(std::ostream& out, const std::string& name, const Eigen::MatrixXd& m) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
  write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_pod<double>(out, m(r, c));
}

inline std::pair<std::string, Eigen::MatrixXd> read_tensor(std::istream& in) {
  auto name_len = read_pod<std::uint32_t>(in);
  std::string name(name_len, '\0');
  in.read(name.data(), name_len);
  if (!in) throw std::runtime_error("checkpoint: truncated tensor name");
  auto rows = read_pod<std::uint64_t>(in);
  auto cols = read_pod<std::uint64_t>(in);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = read_pod<double>(in);
  return {name, m};
}

struct Header {
  std::uint32_t kind = 0;
  std::int32_t num_items = 0;
  std::int32_t embed_dim = 0;
  Hyperparams hyper;
};

inline void write_header(std::ostream& out, const Header& h) {
  out.write(kMagic, sizeof(kMagic));
  write_pod<std::uint32_t>(out, kFormatVersion);
  write_pod<std::uint32_t>(out, h.kind);
  write_pod<std::int32_t>(out, h.num_items);
  write_pod<std::int32_t>(out, h.embed_dim);
  write_pod<double>(out, h.hyper.lambda);
  write_pod<double>(out, h.hyper.eta);
  write_pod<std::int32_t>(out, h.hyper.negatives_per_member);
}

inline Header read_header(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  auto version = read_pod<std::uint32_t>(in);
  if (version != kFormatVersion)
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
  Header h;
  h.kind = read_pod<std::uint32_t>(in);
  h.num_items = read_pod<std::int32_t>(in);
  h.embed_dim = read_pod<std::int32_t>(in);
  h.hyper.lambda = read_pod<double>(in);
  h.hyper.eta = read_pod<double>(in);
  h.hyper.negatives_per_member = read_pod<std::int32_t>(in);
  h.hyper.embed_dim = h.embed_dim;
  return h;
}

}  // namespace ckpt_detail

inline void save_checkpoint(const std::string& path, const ModelState& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  ckpt_detail::Header h;
  h.kind = static_cast<std::uint32_t>(s.aggregator.kind);
  h.num_items = s.num_items();
  h.embed_dim = s.embed_dim();
  h.hyper = s.hyper;
  ckpt_detail::write_header(out, h);

  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> mats = {
      {"encoder.w1", &s.encoder.w1},
      {"encoder.w2", &s.encoder.w2},
      {"aggregator.w", &s.aggregator.w},
      {"predictor.w_items", &s.predictor.w_items},
      {"discriminator.w", &s.discriminator.w},
  };
  std::vector<std::pair<std::string, const Eigen::VectorXd*>> vecs = {
      {"encoder.b1", &s.encoder.b1},
      {"encoder.b2", &s.encoder.b2},
      {"aggregator.b", &s.aggregator.b},
      {"aggregator.h", &s.aggregator.h},
  };
  ckpt_detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(mats.size() + vecs.size()));
  for (auto& [name, m] : mats) ckpt_detail::write_tensor(out, name, *m);
  for (auto& [name, v] : vecs) ckpt_detail::write_tensor(out, name, *v);
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

inline ModelState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  auto h = ckpt_detail::read_header(in);
  auto count = ckpt_detail::read_pod<std::uint32_t>(in);
  std::map<std::string, Eigen::MatrixXd> tensors;
  for (std::uint32_t k = 0; k < count; ++k) {
    auto [name, m] = ckpt_detail::read_tensor(in);
    tensors.emplace(std::move(name), std::move(m));
  }
  auto mat = [&](const std::string& name) -> Eigen::MatrixXd {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw std::runtime_error("checkpoint: missing tensor " + name);
    return it->second;
  };
  auto vec = [&](const std::string& name) -> Eigen::VectorXd {
    Eigen::MatrixXd m = mat(name);
    if (m.cols() > 1) throw std::runtime_error("checkpoint: tensor is not a vector: " + name);
    return m.cols() == 1 ? Eigen::VectorXd(m.col(0)) : Eigen::VectorXd(0);
  };

  ModelState s;
  s.hyper = h.hyper;
  s.encoder.w1 = mat("encoder.w1");
  s.encoder.b1 = vec("encoder.b1");
  s.encoder.w2 = mat("encoder.w2");
  s.encoder.b2 = vec("encoder.b2");
  s.aggregator.kind = static_cast<AggregatorKind>(h.kind);
  s.aggregator.w = mat("aggregator.w");
  s.aggregator.b = vec("aggregator.b");
  s.aggregator.h = vec("aggregator.h");
  s.predictor.w_items = mat("predictor.w_items");
  s.discriminator.w = mat("discriminator.w");
  return s;
}

/// Pretrained first layer plus its multinomial head.
struct PretrainResult {
  Eigen::MatrixXd w1;    // |I| x D
  Eigen::VectorXd b1;    // D
  Eigen::MatrixXd head;  // |I| x D
};

inline void save_pretrain(const std::string& path, const PretrainResult& p) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  ckpt_detail::Header h;
  h.kind = 0;
  h.num_items = static_cast<std::int32_t>(p.w1.rows());
  h.embed_dim = static_cast<std::int32_t>(p.w1.cols());
  ckpt_detail::write_header(out, h);
  ckpt_detail::write_pod<std::uint32_t>(out, 3);
  ckpt_detail::write_tensor(out, "pretrain.w1", p.w1);
  ckpt_detail::write_tensor(out, "pretrain.b1", p.b1);
  ckpt_detail::write_tensor(out, "pretrain.head", p.head);
}

inline PretrainResult load_pretrain(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  (void)ckpt_detail::read_header(in);
  auto count = ckpt_detail::read_pod<std::uint32_t>(in);
  std::map<std::string, Eigen::MatrixXd> tensors;
  for (std::uint32_t k = 0; k < count; ++k) {
    auto [name, m] = ckpt_detail::read_tensor(in);
    tensors.emplace(std::move(name), std::move(m));
  }
  PretrainResult p;
  p.w1 = tensors.at("pretrain.w1");
  p.b1 = tensors.at("pretrain.b1").col(0);
  p.head = tensors.at("pretrain.head");
  return p;
}

}  // namespace groupim
