#include "spicer/train.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "spicer/io_util.hpp"

namespace spicer {

using nlohmann::json;

double TrainConfig::lr_for_epoch(int epoch) const {
  for (const auto& [threshold, lr] : lr_schedule)
    if (epoch < threshold) return lr;
  return lr_schedule.back().second;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ValidationError("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("TrainConfig: batch_size must be >= 1");
  if (lambda_smooth < 0.0)
    throw ValidationError("TrainConfig: lambda_smooth must be >= 0");
  if (lr_schedule.empty()) throw ValidationError("TrainConfig: empty lr schedule");
  if (precision != "f64" && precision != "f32")
    throw ValidationError("TrainConfig: precision must be f32 or f64");
}

Checkpoint train(const std::vector<TrainingPair>& dataset, const TrainConfig& config,
                 const Checkpoint* resume_from, bool verbose) {
  config.validate();
  if (dataset.empty()) throw ValidationError("train: empty dataset");
  const int nc = dataset[0].y.n_coils();

  Checkpoint ckpt;
  if (resume_from) {
    ckpt = *resume_from;
  } else {
    ckpt.params = make_default_model(nc, config.unroll_steps, config.net_width,
                                     config.seed, config.shared_denoiser);
    ckpt.params.csm_mode = config.csm_mode;
    ckpt.adam = AdamState(ckpt.params.scalar_count());
    ckpt.config = config;
    ckpt.epoch = 0;
  }

  auto ptrs = param_ptrs(ckpt.params);
  if (ptrs.size() != ckpt.adam.m.size())
    throw ValidationError("train: optimizer state does not match model size");

  // One stream drives everything random in the run; per-epoch shuffles are
  // Fisher-Yates draws in a fixed order.
  RandomStream rng(config.seed ^ 0x5eed5eedULL);
  std::vector<size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), size_t(0));

  for (int epoch = ckpt.epoch; epoch < config.epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_int(i)]);

    const double lr = config.lr_for_epoch(epoch);
    double epoch_loss = 0.0;
    size_t batch_start = 0;
    int step = 0;
    while (batch_start < order.size()) {
      const size_t batch_n =
          std::min(size_t(config.batch_size), order.size() - batch_start);
      ModelGrads grads(ckpt.params);
      double batch_loss = 0.0;
      // Fixed accumulation order: position within the shuffled batch.
      for (size_t b = 0; b < batch_n; ++b) {
        const size_t idx = order[batch_start + b];
        const double loss =
            total_loss_with_grad(dataset[idx], ckpt.params, config.lambda_smooth,
                                 config.squared_rec_norm, grads);
        if (!std::isfinite(loss))
          throw NumericError("train: non-finite loss at epoch " +
                             std::to_string(epoch) + ", step " + std::to_string(step) +
                             ", sample " + std::to_string(idx));
        batch_loss += loss;
      }
      auto gvals = grad_values(grads);
      const double scale = 1.0 / double(batch_n);
      for (auto& g : gvals) g *= scale;
      adam_step(ptrs, gvals, ckpt.adam, lr);
      epoch_loss += batch_loss;
      batch_start += batch_n;
      ++step;
    }
    ckpt.loss_history.push_back(epoch_loss / double(dataset.size()));
    ckpt.epoch = epoch + 1;
    if (verbose)
      std::fprintf(stderr, "epoch %d/%d  lr %.1e  mean loss %.6f\n", epoch + 1,
                   config.epochs, lr, ckpt.loss_history.back());
  }
  return ckpt;
}

namespace {

constexpr char kMagic[4] = {'S', 'P', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

json cnn_arch_to_json(const CnnParams& net) {
  json j;
  j["kind"] = net.kind == CnnKind::unet2 ? "unet2" : "plain";
  j["in"] = net.in_channels;
  j["out"] = net.out_channels;
  j["width"] = net.width;
  j["residual"] = net.residual;
  j["layers"] = json::array();
  for (const auto& l : net.layers)
    j["layers"].push_back(json{{"in", l.in_ch}, {"out", l.out_ch}});
  return j;
}

CnnParams cnn_from_arch_json(const json& j) {
  RandomStream dummy(0);
  CnnParams net;
  const std::string kind = j.at("kind").get<std::string>();
  const int in = j.at("in").get<int>();
  const int out = j.at("out").get<int>();
  const int width = j.at("width").get<int>();
  const bool residual = j.at("residual").get<bool>();
  if (kind == "unet2") {
    net = make_unet2(in, out, width, residual, dummy);
  } else if (kind == "plain") {
    const int n_layers = int(j.at("layers").size());
    net = make_plain_cnn(in, out, width, n_layers, residual, dummy);
  } else {
    throw VersionError("checkpoint: unknown network kind " + kind);
  }
  const auto& layers = j.at("layers");
  if (layers.size() != net.layers.size())
    throw VersionError("checkpoint: layer count mismatch");
  for (size_t i = 0; i < net.layers.size(); ++i)
    if (layers[i].at("in").get<int>() != net.layers[i].in_ch ||
        layers[i].at("out").get<int>() != net.layers[i].out_ch)
      throw VersionError("checkpoint: layer shape mismatch");
  return net;
}

json config_to_json(const TrainConfig& c) {
  json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["lr_schedule"] = json::array();
  for (const auto& [t, lr] : c.lr_schedule)
    j["lr_schedule"].push_back(json{{"until_epoch", t}, {"lr", lr}});
  j["lambda_smooth"] = c.lambda_smooth;
  j["unroll_steps"] = c.unroll_steps;
  j["net_width"] = c.net_width;
  j["shared_denoiser"] = c.shared_denoiser;
  j["squared_rec_norm"] = c.squared_rec_norm;
  j["csm_mode"] = c.csm_mode == CsmMode::learned ? "learned" : "classical";
  j["seed"] = c.seed;
  j["precision"] = c.precision;
  return j;
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.lr_schedule.clear();
  for (const auto& e : j.at("lr_schedule"))
    c.lr_schedule.emplace_back(e.at("until_epoch").get<int>(), e.at("lr").get<double>());
  c.lambda_smooth = j.at("lambda_smooth").get<double>();
  c.unroll_steps = j.at("unroll_steps").get<int>();
  c.net_width = j.at("net_width").get<int>();
  c.shared_denoiser = j.at("shared_denoiser").get<bool>();
  c.squared_rec_norm = j.at("squared_rec_norm").get<bool>();
  c.csm_mode = j.at("csm_mode").get<std::string>() == "classical"
                   ? CsmMode::classical
                   : CsmMode::learned;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.precision = j.at("precision").get<std::string>();
  return c;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json header;
  header["unroll_steps"] = ckpt.params.unroll_steps;
  header["shared_denoiser"] = ckpt.params.shared_denoiser;
  header["denoisers"] = json::array();
  for (const auto& d : ckpt.params.denoisers)
    header["denoisers"].push_back(cnn_arch_to_json(d));
  header["csm_net"] = cnn_arch_to_json(ckpt.params.csm_net);
  header["csm_mode"] =
      ckpt.params.csm_mode == CsmMode::learned ? "learned" : "classical";
  header["fov_threshold"] = ckpt.params.fov_threshold;
  header["epoch"] = ckpt.epoch;
  header["loss_history"] = ckpt.loss_history;
  header["adam"] = json{{"beta1", ckpt.adam.beta1},
                        {"beta2", ckpt.adam.beta2},
                        {"eps", ckpt.adam.eps},
                        {"step_count", ckpt.adam.step_count}};
  header["config"] = config_to_json(ckpt.config);

  ByteWriter payload;
  ModelParams& params = const_cast<ModelParams&>(ckpt.params);
  for (const double* p : param_ptrs(params)) payload.put_f64(*p);
  for (double v : ckpt.adam.m) payload.put_f64(v);
  for (double v : ckpt.adam.v) payload.put_f64(v);

  const std::string header_str = header.dump();
  ByteWriter out;
  out.put_raw(kMagic, 4);
  out.put_u32(kVersion);
  out.put_u64(header_str.size());
  out.put_raw(header_str.data(), header_str.size());
  out.put_raw(payload.bytes.data(), payload.bytes.size());
  out.put_u64(crc64(payload.bytes.data(), payload.bytes.size()));
  write_file_atomic(path, out.bytes);
}

Checkpoint load_checkpoint(const std::string& path) {
  const auto bytes = read_file(path);
  ByteReader r{bytes.data(), bytes.size(), 0};

  char magic[4];
  r.take_raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw IoError(path + ": not a .spck checkpoint (bad magic)");
  const std::uint32_t version = r.take_u32();
  if (version != kVersion)
    throw VersionError(path + ": unsupported checkpoint version " +
                       std::to_string(version));
  const std::uint64_t header_len = r.take_u64();
  if (r.remaining() < header_len + 8) throw ChecksumError(path + ": truncated header");
  const std::string header_str(reinterpret_cast<const char*>(bytes.data() + r.pos),
                               header_len);
  r.pos += header_len;

  const size_t payload_len = r.remaining() - 8;
  const std::uint64_t actual = crc64(bytes.data() + r.pos, payload_len);
  ByteReader tail{bytes.data(), bytes.size(), r.pos + payload_len};
  if (actual != tail.take_u64())
    throw ChecksumError(path + ": payload checksum mismatch");

  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw IoError(path + ": bad JSON header: " + e.what());
  }

  Checkpoint ckpt;
  ckpt.params.unroll_steps = header.at("unroll_steps").get<int>();
  ckpt.params.shared_denoiser = header.at("shared_denoiser").get<bool>();
  for (const auto& dj : header.at("denoisers"))
    ckpt.params.denoisers.push_back(cnn_from_arch_json(dj));
  ckpt.params.csm_net = cnn_from_arch_json(header.at("csm_net"));
  ckpt.params.csm_mode = header.at("csm_mode").get<std::string>() == "classical"
                             ? CsmMode::classical
                             : CsmMode::learned;
  ckpt.params.fov_threshold = header.at("fov_threshold").get<double>();
  ckpt.params.step_sizes.assign(ckpt.params.unroll_steps, 0.0);
  ckpt.params.reg_weights.assign(ckpt.params.unroll_steps, 0.0);
  ckpt.epoch = header.at("epoch").get<int>();
  ckpt.loss_history = header.at("loss_history").get<std::vector<double>>();
  ckpt.config = config_from_json(header.at("config"));

  const size_t n = ckpt.params.scalar_count();
  ckpt.adam = AdamState(n);
  ckpt.adam.beta1 = header.at("adam").at("beta1").get<double>();
  ckpt.adam.beta2 = header.at("adam").at("beta2").get<double>();
  ckpt.adam.eps = header.at("adam").at("eps").get<double>();
  ckpt.adam.step_count = header.at("adam").at("step_count").get<std::int64_t>();

  if (payload_len != 8 * (n + 2 * n))
    throw ChecksumError(path + ": payload size does not match architecture");
  for (double* p : param_ptrs(ckpt.params)) *p = r.take_f64();
  for (auto& v : ckpt.adam.m) v = r.take_f64();
  for (auto& v : ckpt.adam.v) v = r.take_f64();
  ckpt.params.validate();
  return ckpt;
}

}  // namespace spicer
