#include "c2s/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace c2s {

using nlohmann::json;

Precision precision_from_string(const std::string& s) {
  if (s == "f32") return Precision::kF32;
  if (s == "f64") return Precision::kF64;
  throw ConfigError("unknown precision '" + s + "' (expected f32 or f64)");
}

std::string to_string(Precision p) { return p == Precision::kF32 ? "f32" : "f64"; }

void ModelConfig::validate() const {
  if (n_layers < 1) throw ConfigError("n_layers must be >= 1");
  if (d_model < 1 || n_heads < 1) throw ConfigError("d_model and n_heads must be >= 1");
  if (d_model % n_heads != 0)
    throw ConfigError("d_model " + std::to_string(d_model) + " not divisible by n_heads " +
                      std::to_string(n_heads));
  if (ffn_mult < 1) throw ConfigError("ffn_mult must be >= 1");
  if (n_bins < 1 || csi_dim < 1) throw ConfigError("n_bins and csi_dim must be >= 1");
  if (!(lambda_latent >= 0.0)) throw ConfigError("lambda_latent must be >= 0");
  if (!(ln_eps > 0.0)) throw ConfigError("ln_eps must be > 0");
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kCkptMagic[8] = {'C', '2', 'S', 'C', 'K', 'P', 'T', '1'};
constexpr int kCkptVersion = 1;

json config_to_json(const ModelConfig& c) {
  return json{{"n_layers", c.n_layers},  {"d_model", c.d_model},
              {"n_heads", c.n_heads},    {"ffn_mult", c.ffn_mult},
              {"n_bins", c.n_bins},      {"csi_dim", c.csi_dim},
              {"precision", to_string(c.precision)},
              {"seed", c.seed},          {"lambda_latent", c.lambda_latent},
              {"ln_eps", c.ln_eps}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.n_layers = j.at("n_layers").get<int>();
  c.d_model = j.at("d_model").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.ffn_mult = j.at("ffn_mult").get<int>();
  c.n_bins = j.at("n_bins").get<int>();
  c.csi_dim = j.at("csi_dim").get<int>();
  c.precision = precision_from_string(j.at("precision").get<std::string>());
  c.seed = j.at("seed").get<uint64_t>();
  c.lambda_latent = j.at("lambda_latent").get<double>();
  c.ln_eps = j.at("ln_eps").get<double>();
  return c;
}

}  // namespace

void write_checkpoint(const Checkpoint& c, const std::string& path) {
  c.config.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(IoError::Kind::kOther, "cannot open " + path + " for writing");

  json header;
  header["version"] = kCkptVersion;
  header["config"] = config_to_json(c.config);
  header["stats"] = {{"dps_floor_db", c.stats.dps_floor_db}, {"dps_mean_db", c.stats.dps_mean_db},
                     {"dps_std_db", c.stats.dps_std_db},     {"csi_mag_mean", c.stats.csi_mag_mean},
                     {"csi_mag_std", c.stats.csi_mag_std},   {"version", c.stats.version}};
  header["metadata"] = c.metadata;
  json blobs = json::array();
  for (const auto& [name, blob] : c.blobs) blobs.push_back({{"name", name}, {"numel", blob.size()}});
  header["blobs"] = blobs;

  const std::string hs = header.dump();
  const uint64_t hlen = hs.size();
  os.write(kCkptMagic, 8);
  os.write(reinterpret_cast<const char*>(&hlen), 8);
  os.write(hs.data(), std::streamsize(hs.size()));
  for (const auto& [name, blob] : c.blobs)
    os.write(reinterpret_cast<const char*>(blob.data()), std::streamsize(blob.size() * 4));
  if (!os) throw IoError(IoError::Kind::kOther, "write failed for " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(IoError::Kind::kOther, "cannot open " + path);

  char magic[8];
  is.read(magic, 8);
  if (is.gcount() != 8 || std::memcmp(magic, kCkptMagic, 8) != 0)
    throw IoError(IoError::Kind::kBadMagic, "bad magic in " + path);

  uint64_t hlen = 0;
  is.read(reinterpret_cast<char*>(&hlen), 8);
  if (is.gcount() != 8) throw IoError(IoError::Kind::kTruncated, "truncated header length");
  std::string hs(hlen, '\0');
  is.read(hs.data(), std::streamsize(hlen));
  if (uint64_t(is.gcount()) != hlen)
    throw IoError(IoError::Kind::kTruncated, "truncated header payload");

  json header;
  try {
    header = json::parse(hs);
  } catch (const json::exception& e) {
    throw IoError(IoError::Kind::kOther, std::string("unparseable header: ") + e.what());
  }
  if (header.at("version").get<int>() != kCkptVersion)
    throw IoError(IoError::Kind::kBadVersion,
                  "unsupported checkpoint version " + header.at("version").dump());

  Checkpoint c;
  c.config = config_from_json(header.at("config"));
  const json& sj = header.at("stats");
  c.stats.dps_floor_db = sj.at("dps_floor_db").get<double>();
  c.stats.dps_mean_db = sj.at("dps_mean_db").get<double>();
  c.stats.dps_std_db = sj.at("dps_std_db").get<double>();
  c.stats.csi_mag_mean = sj.at("csi_mag_mean").get<double>();
  c.stats.csi_mag_std = sj.at("csi_mag_std").get<double>();
  c.stats.version = sj.at("version").get<std::string>();
  c.metadata = header.at("metadata").get<std::map<std::string, std::string>>();

  uint64_t total = 0;
  for (const auto& bj : header.at("blobs")) total += bj.at("numel").get<uint64_t>();
  const auto payload_start = is.tellg();
  is.seekg(0, std::ios::end);
  const uint64_t available = uint64_t(is.tellg() - payload_start);
  if (available != total * 4)
    throw IoError(IoError::Kind::kTruncated,
                  "truncated payload: header declares " + std::to_string(total * 4) +
                      " bytes, file holds " + std::to_string(available));
  is.seekg(payload_start);

  for (const auto& bj : header.at("blobs")) {
    std::vector<float> blob(bj.at("numel").get<size_t>());
    is.read(reinterpret_cast<char*>(blob.data()), std::streamsize(blob.size() * 4));
    c.blobs.emplace_back(bj.at("name").get<std::string>(), std::move(blob));
  }
  if (!is) throw IoError(IoError::Kind::kTruncated, "payload read failed");
  return c;
}

// ---------------------------------------------------------------------------

namespace {

template <class T>
std::vector<DelayPowerSpectrum> predict_dps_typed(const Checkpoint& ckpt,
                                                  const std::vector<CsiSample>& csi_raw,
                                                  double delta_tau_s) {
  C2sModel<T> m = model_from_checkpoint<T>(ckpt);
  const int64_t n_p = int64_t(csi_raw.size());
  std::vector<T> z(size_t(n_p) * 2);
  for (int64_t i = 0; i < n_p; ++i) {
    if (!std::isfinite(csi_raw[i].magnitude) || !std::isfinite(csi_raw[i].phase))
      throw ConfigError("predict_dps: non-finite input");
    CsiSample norm = csi_normalize(csi_raw[i], ckpt.stats);
    z[size_t(i) * 2] = T(norm.magnitude);
    z[size_t(i) * 2 + 1] = T(norm.phase);
  }
  Tensor<T> out = m.decode(Tensor<T>::input({n_p, 2}, std::move(z)));
  std::vector<DelayPowerSpectrum> spectra(n_p);
  for (int64_t i = 0; i < n_p; ++i) {
    spectra[i].delta_tau_s = delta_tau_s;
    spectra[i].power.resize(m.config.n_bins);
    for (int k = 0; k < m.config.n_bins; ++k)
      spectra[i].power[k] =
          dps_denormalize_value(double(out.value()[size_t(i) * m.config.n_bins + k]), ckpt.stats);
  }
  return spectra;
}

}  // namespace

std::vector<DelayPowerSpectrum> predict_dps(const Checkpoint& ckpt,
                                            const std::vector<CsiSample>& csi_raw,
                                            double delta_tau_s) {
  if (csi_raw.empty()) throw ConfigError("predict_dps: empty CSI input");
  if (ckpt.config.csi_dim != 2)
    throw ConfigError("predict_dps: checkpoint expects csi_dim " +
                      std::to_string(ckpt.config.csi_dim));
  if (delta_tau_s <= 0.0) {
    auto it = ckpt.metadata.find("delta_tau_s");
    delta_tau_s = it != ckpt.metadata.end() ? std::stod(it->second) : 5e-9;
  }
  return ckpt.config.precision == Precision::kF32
             ? predict_dps_typed<float>(ckpt, csi_raw, delta_tau_s)
             : predict_dps_typed<double>(ckpt, csi_raw, delta_tau_s);
}

}  // namespace c2s
