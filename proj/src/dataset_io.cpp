#include "spicer/dataset_io.hpp"

#include <json.hpp>

#include "spicer/io_util.hpp"

namespace spicer {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'S', 'P', 'C', 'R'};
constexpr std::uint32_t kVersion = 1;

json mask_to_json(const SamplingMask& m) {
  return json{{"lines", m.selected_lines}, {"acs", m.acs_lines}};
}

SamplingMask mask_from_json(const json& j, int h, int w) {
  SamplingMask m;
  m.height = h;
  m.width = w;
  m.selected_lines = j.at("lines").get<std::vector<int>>();
  m.acs_lines = j.at("acs").get<std::vector<int>>();
  m.validate();
  return m;
}

void put_complex_array(ByteWriter& w, const std::vector<cxd>& data, bool f32) {
  if (f32) {
    for (const auto& v : data) {
      const float re = float(v.real()), im = float(v.imag());
      w.put_raw(&re, 4);
      w.put_raw(&im, 4);
    }
  } else {
    for (const auto& v : data) {
      w.put_f64(v.real());
      w.put_f64(v.imag());
    }
  }
}

void take_complex_array(ByteReader& r, std::vector<cxd>& data, bool f32) {
  if (f32) {
    for (auto& v : data) {
      float re, im;
      r.take_raw(&re, 4);
      r.take_raw(&im, 4);
      v = cxd(re, im);
    }
  } else {
    for (auto& v : data) {
      const double re = r.take_f64();
      const double im = r.take_f64();
      v = cxd(re, im);
    }
  }
}

}  // namespace

void save_dataset(const std::vector<TrainingPair>& pairs, const std::string& path,
                  const DatasetMeta& meta) {
  if (pairs.empty()) throw ValidationError("save_dataset: empty pair list");
  const bool f32 = meta.dtype == "c64";
  if (!f32 && meta.dtype != "c128")
    throw ValidationError("save_dataset: dtype must be c128 or c64");

  const int nc = pairs[0].y.n_coils();
  const int h = pairs[0].y.height();
  const int w = pairs[0].y.width();

  json header;
  header["n_pairs"] = pairs.size();
  header["n_c"] = nc;
  header["H"] = h;
  header["W"] = w;
  header["dtype"] = meta.dtype;
  header["seed"] = meta.seed;
  header["noise_sigma"] = meta.noise_sigma;
  header["pairs"] = json::array();

  ByteWriter payload;
  for (const auto& pair : pairs) {
    if (pair.y.n_coils() != nc || pair.y.height() != h || pair.y.width() != w ||
        !pair.y.data.same_shape(pair.y_prime.data))
      throw ValidationError("save_dataset: pairs must share n_c, H, W");
    json pj;
    pj["mask"] = mask_to_json(pair.y.mask);
    pj["mask_prime"] = mask_to_json(pair.y_prime.mask);
    pj["sigma"] = pair.y.noise_sigma;
    pj["sigma_prime"] = pair.y_prime.noise_sigma;
    pj["has_truth"] = pair.has_ground_truth();
    pj["has_csm"] = pair.has_true_csm();
    header["pairs"].push_back(pj);

    put_complex_array(payload, pair.y.data.data, f32);
    put_complex_array(payload, pair.y_prime.data.data, f32);
    if (pair.has_ground_truth())
      put_complex_array(payload, pair.ground_truth().data, f32);
    if (pair.has_true_csm()) {
      const auto& csm = pair.true_csm();
      put_complex_array(payload, csm.maps.data, f32);
      payload.put_raw(csm.fov.data.data(), csm.fov.data.size());
    }
  }

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

std::vector<TrainingPair> load_dataset(const std::string& path, DatasetMeta* meta_out) {
  const auto bytes = read_file(path);
  ByteReader r{bytes.data(), bytes.size(), 0};

  char magic[4];
  r.take_raw(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw IoError(path + ": not a .spcr dataset (bad magic)");
  const std::uint32_t version = r.take_u32();
  if (version != kVersion)
    throw VersionError(path + ": unsupported dataset version " + std::to_string(version));
  const std::uint64_t header_len = r.take_u64();
  if (r.remaining() < header_len + 8)
    throw ChecksumError(path + ": truncated header");
  const std::string header_str(reinterpret_cast<const char*>(bytes.data() + r.pos),
                               header_len);
  r.pos += header_len;

  // Payload is everything up to the trailing 8-byte CRC.
  const size_t payload_len = r.remaining() - 8;
  const std::uint64_t actual = crc64(bytes.data() + r.pos, payload_len);
  ByteReader tail{bytes.data(), bytes.size(), r.pos + payload_len};
  const std::uint64_t expected = tail.take_u64();
  if (actual != expected)
    throw ChecksumError(path + ": payload checksum mismatch");

  json header;
  try {
    header = json::parse(header_str);
  } catch (const json::exception& e) {
    throw IoError(path + ": bad JSON header: " + e.what());
  }

  const int nc = header.at("n_c").get<int>();
  const int h = header.at("H").get<int>();
  const int w = header.at("W").get<int>();
  const std::string dtype = header.at("dtype").get<std::string>();
  const bool f32 = dtype == "c64";
  if (!f32 && dtype != "c128") throw VersionError(path + ": unknown dtype " + dtype);
  if (meta_out) {
    meta_out->dtype = dtype;
    meta_out->seed = header.at("seed").get<std::uint64_t>();
    meta_out->noise_sigma = header.at("noise_sigma").get<double>();
  }

  std::vector<TrainingPair> pairs;
  for (const auto& pj : header.at("pairs")) {
    TrainingPair pair;
    pair.y.data = MultiCoilImage(nc, h, w);
    pair.y.mask = mask_from_json(pj.at("mask"), h, w);
    pair.y.noise_sigma = pj.at("sigma").get<double>();
    pair.y_prime.data = MultiCoilImage(nc, h, w);
    pair.y_prime.mask = mask_from_json(pj.at("mask_prime"), h, w);
    pair.y_prime.noise_sigma = pj.at("sigma_prime").get<double>();

    take_complex_array(r, pair.y.data.data, f32);
    take_complex_array(r, pair.y_prime.data.data, f32);
    if (pj.at("has_truth").get<bool>()) {
      ComplexImage truth(h, w);
      take_complex_array(r, truth.data, f32);
      pair.set_ground_truth(std::move(truth));
    }
    if (pj.at("has_csm").get<bool>()) {
      CoilSensitivities csm;
      csm.maps = MultiCoilImage(nc, h, w);
      csm.fov = BinaryMask(h, w);
      take_complex_array(r, csm.maps.data, f32);
      r.take_raw(csm.fov.data.data(), csm.fov.data.size());
      pair.set_true_csm(std::move(csm));
    }
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace spicer
