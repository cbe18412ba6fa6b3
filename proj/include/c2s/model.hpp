// The supervised autoencoder: encoder (DPS -> CSI) and decoder (CSI -> DPS)
// Transformer stacks sharing one config, the joint training loss, the
// decoder-only baseline loss, and checkpoint persistence.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "c2s/nn.hpp"
#include "c2s/sounding.hpp"
#include "c2s/tensor.hpp"

namespace c2s {

enum class Precision { kF32, kF64 };

Precision precision_from_string(const std::string& s);
std::string to_string(Precision p);

struct ModelConfig {
  int n_layers = 2;      // per stack
  int d_model = 64;
  int n_heads = 4;
  int ffn_mult = 4;
  int n_bins = 1023;
  int csi_dim = 2;
  Precision precision = Precision::kF32;
  uint64_t seed = 1;
  double lambda_latent = 1.0;
  double ln_eps = 1e-5;

  int ffn_width() const { return ffn_mult * d_model; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// ---------------------------------------------------------------------------
// One Transformer stack: input projection, pre-norm blocks, final norm, head.

template <class T>
struct Stack {
  Tensor<T> w_in, b_in;
  std::vector<BlockParams<T>> blocks;
  Tensor<T> lnf_g, lnf_b;
  Tensor<T> w_head, b_head;

  static Stack init(int64_t in_dim, int64_t out_dim, const ModelConfig& cfg,
                    std::mt19937_64& rng) {
    Stack s;
    s.w_in = init_uniform<T>({in_dim, cfg.d_model}, in_dim, cfg.d_model, rng);
    s.b_in = init_const<T>({cfg.d_model}, T(0));
    s.blocks.reserve(cfg.n_layers);
    for (int i = 0; i < cfg.n_layers; ++i)
      s.blocks.push_back(BlockParams<T>::init(cfg.d_model, cfg.ffn_width(), rng));
    s.lnf_g = init_const<T>({cfg.d_model}, T(1));
    s.lnf_b = init_const<T>({cfg.d_model}, T(0));
    s.w_head = init_uniform<T>({cfg.d_model, out_dim}, cfg.d_model, out_dim, rng);
    s.b_head = init_const<T>({out_dim}, T(0));
    return s;
  }

  Tensor<T> forward(const Tensor<T>& x, const ModelConfig& cfg) const {
    Tensor<T> h = linear(x, w_in, b_in);
    for (const auto& b : blocks) h = transformer_block(h, b, cfg.n_heads, T(cfg.ln_eps));
    h = layer_norm(h, lnf_g, lnf_b, T(cfg.ln_eps));
    return linear(h, w_head, b_head);
  }

  template <class F>
  void visit(F&& f) {
    f("in.w", w_in);
    f("in.b", b_in);
    for (size_t i = 0; i < blocks.size(); ++i) {
      const std::string p = "blocks." + std::to_string(i) + ".";
      blocks[i].visit([&](const char* n, Tensor<T>& t) { f((p + n).c_str(), t); });
    }
    f("lnf.g", lnf_g);
    f("lnf.b", lnf_b);
    f("head.w", w_head);
    f("head.b", b_head);
  }
};

// ---------------------------------------------------------------------------

template <class T>
struct C2sModel {
  ModelConfig config;
  Stack<T> encoder;  // [N_p, n_bins] -> [N_p, csi_dim]
  Stack<T> decoder;  // [N_p, csi_dim] -> [N_p, n_bins]

  static C2sModel init(const ModelConfig& cfg) {
    cfg.validate();
    C2sModel m;
    m.config = cfg;
    std::mt19937_64 enc_rng(mix_seed(cfg.seed, 0x0E11C));
    std::mt19937_64 dec_rng(mix_seed(cfg.seed, 0xDE10C));
    m.encoder = Stack<T>::init(cfg.n_bins, cfg.csi_dim, cfg, enc_rng);
    m.decoder = Stack<T>::init(cfg.csi_dim, cfg.n_bins, cfg, dec_rng);
    return m;
  }

  Tensor<T> encode(const Tensor<T>& p_norm) const {
    check_tokens(p_norm, config.n_bins, "encode");
    return encoder.forward(p_norm, config);
  }

  Tensor<T> decode(const Tensor<T>& z) const {
    check_tokens(z, config.csi_dim, "decode");
    return decoder.forward(z, config);
  }

  template <class F>
  void visit(F&& f) {
    encoder.visit([&](const char* n, Tensor<T>& t) { f((std::string("enc.") + n).c_str(), t); });
    decoder.visit([&](const char* n, Tensor<T>& t) { f((std::string("dec.") + n).c_str(), t); });
  }

  std::vector<Tensor<T>> parameters() {
    std::vector<Tensor<T>> out;
    visit([&](const char*, Tensor<T>& t) { out.push_back(t); });
    return out;
  }

  std::vector<Tensor<T>> decoder_parameters() {
    std::vector<Tensor<T>> out;
    decoder.visit([&](const char*, Tensor<T>& t) { out.push_back(t); });
    return out;
  }

  std::vector<std::pair<std::string, Tensor<T>>> named_parameters() {
    std::vector<std::pair<std::string, Tensor<T>>> out;
    visit([&](const char* n, Tensor<T>& t) { out.emplace_back(n, t); });
    return out;
  }

 private:
  static void check_tokens(const Tensor<T>& x, int64_t want_dim, const char* who) {
    if (x.rank() != 2)
      throw ShapeError(std::string(who) + ": expected [N_p, " + std::to_string(want_dim) +
                       "], got " + shape_str(x.shape()));
    if (x.dim(1) != want_dim)
      throw ShapeError(std::string(who) + ": token width " + std::to_string(x.dim(1)) +
                       " does not match config width " + std::to_string(want_dim));
    if (x.dim(0) < 1) throw ShapeError(std::string(who) + ": empty token sequence");
    for (T v : x.value())
      if (!std::isfinite(double(v))) throw ConfigError(std::string(who) + ": non-finite input");
  }
};

// ---------------------------------------------------------------------------
// Losses (inputs in normalized units)

template <class T>
struct JointLoss {
  Tensor<T> total, recon, latent;
};

// total = mse(P, decode(encode(P))) + lambda * mse(C, encode(P))
template <class T>
JointLoss<T> joint_loss(const C2sModel<T>& m, const Tensor<T>& p_norm, const Tensor<T>& c_norm,
                        Reduction red = Reduction::kMean) {
  Tensor<T> z = m.encode(p_norm);
  JointLoss<T> out;
  out.recon = mse(p_norm, m.decode(z), red);
  out.latent = mse(c_norm, z, red);
  out.total = add(out.recon, scale(out.latent, T(m.config.lambda_latent)));
  return out;
}

// mse(P, decode(C)): no encoder, true CSI drives the decoder.
template <class T>
Tensor<T> baseline_loss(const C2sModel<T>& m, const Tensor<T>& p_norm, const Tensor<T>& c_norm,
                        Reduction red = Reduction::kMean) {
  return mse(p_norm, m.decode(c_norm), red);
}

// ---------------------------------------------------------------------------
// Checkpoints: magic "C2SCKPT1", JSON header (config, stats, metadata, blob
// table), float32 parameter payload in declared order.

struct Checkpoint {
  ModelConfig config;
  NormStats stats;
  std::map<std::string, std::string> metadata;  // kind, steps, losses, seed, ...
  std::vector<std::pair<std::string, std::vector<float>>> blobs;
};

void write_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

template <class T>
Checkpoint to_checkpoint(C2sModel<T>& m, const NormStats& stats,
                         std::map<std::string, std::string> metadata) {
  Checkpoint c;
  c.config = m.config;
  c.stats = stats;
  c.metadata = std::move(metadata);
  m.visit([&](const char* n, Tensor<T>& t) {
    std::vector<float> blob(t.value().size());
    for (size_t i = 0; i < blob.size(); ++i) blob[i] = float(t.value()[i]);
    c.blobs.emplace_back(n, std::move(blob));
  });
  return c;
}

template <class T>
C2sModel<T> model_from_checkpoint(const Checkpoint& c) {
  C2sModel<T> m = C2sModel<T>::init(c.config);
  size_t k = 0;
  m.visit([&](const char* n, Tensor<T>& t) {
    if (k >= c.blobs.size()) throw IoError(IoError::Kind::kOther, "checkpoint has too few blobs");
    const auto& [name, blob] = c.blobs[k++];
    if (name != n)
      throw IoError(IoError::Kind::kOther,
                    "checkpoint blob order mismatch: expected " + std::string(n) + ", got " + name);
    if (blob.size() != t.value().size())
      throw IoError(IoError::Kind::kOther, "checkpoint blob " + name + " has wrong size");
    for (size_t i = 0; i < blob.size(); ++i) t.value()[i] = T(blob[i]);
  });
  if (k != c.blobs.size()) throw IoError(IoError::Kind::kOther, "checkpoint has extra blobs");
  return m;
}

// Deployment path: normalize raw CSI with the checkpoint's stats, decode,
// denormalize back to linear power. One spectrum per input position.
std::vector<DelayPowerSpectrum> predict_dps(const Checkpoint& ckpt,
                                            const std::vector<CsiSample>& csi_raw,
                                            double delta_tau_s = 0.0);

}  // namespace c2s
