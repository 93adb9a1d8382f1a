#include "rlvr/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "rlvr/errors.hpp"

namespace rlvr::checkpoint {

namespace {

std::uint64_t fnv1a(const unsigned char* data, std::size_t size) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
void put(std::vector<unsigned char>& buf, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  buf.insert(buf.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T get(const std::vector<unsigned char>& buf, std::size_t& offset) {
  if (offset + sizeof(T) > buf.size()) {
    throw IoError("checkpoint file truncated");
  }
  T value;
  std::memcpy(&value, buf.data() + offset, sizeof(T));
  offset += sizeof(T);
  return value;
}

void put_doubles(std::vector<unsigned char>& buf,
                 const std::vector<double>& values) {
  for (double v : values) put(buf, v);
}

void get_doubles(const std::vector<unsigned char>& buf, std::size_t& offset,
                 std::vector<double>& out) {
  for (double& v : out) v = get<double>(buf, offset);
}

}  // namespace

void save(const policy::PolicyParams& params, const std::string& path) {
  std::vector<unsigned char> buf;
  put<std::uint32_t>(buf, kFormatVersion);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(params.dims.vocab));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(params.dims.ctx_window));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(params.dims.feature_dim));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(params.dims.t_max));
  put<std::uint64_t>(buf, params.version);
  put_doubles(buf, params.weights.ctx);
  put_doubles(buf, params.weights.feat);
  put_doubles(buf, params.weights.bias);
  put<std::uint64_t>(buf, fnv1a(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed for checkpoint: " + path);
}

policy::PolicyParams load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::vector<unsigned char> buf(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(std::uint64_t)) {
    throw IoError("checkpoint file truncated: " + path);
  }
  std::size_t payload = buf.size() - sizeof(std::uint64_t);
  std::size_t offset = payload;
  std::uint64_t stored = get<std::uint64_t>(buf, offset);
  if (stored != fnv1a(buf.data(), payload)) {
    throw IoError("checkpoint checksum mismatch: " + path);
  }

  offset = 0;
  auto version = get<std::uint32_t>(buf, offset);
  if (version != kFormatVersion) {
    throw IoError("unsupported checkpoint format version " +
                  std::to_string(version));
  }
  policy::PolicyDims dims;
  dims.vocab = static_cast<int>(get<std::uint32_t>(buf, offset));
  dims.ctx_window = static_cast<int>(get<std::uint32_t>(buf, offset));
  dims.feature_dim = static_cast<int>(get<std::uint32_t>(buf, offset));
  dims.t_max = static_cast<int>(get<std::uint32_t>(buf, offset));

  policy::PolicyParams params = policy::PolicyParams::zero_init(dims);
  params.version = get<std::uint64_t>(buf, offset);
  get_doubles(buf, offset, params.weights.ctx);
  get_doubles(buf, offset, params.weights.feat);
  get_doubles(buf, offset, params.weights.bias);
  if (offset != payload) {
    throw IoError("checkpoint size does not match header dimensions: " + path);
  }
  return params;
}

void save_manifest(const Manifest& manifest, const std::string& ckpt_path) {
  nlohmann::ordered_json j{
      {"schema", "manifest-v1"},
      {"stage", manifest.stage},
      {"step", manifest.step},
      {"config_hash", manifest.config_hash},
      {"metrics", manifest.metrics},
  };
  std::string path = ckpt_path + ".manifest.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot open manifest for writing: " + path);
  out << j.dump(2) << '\n';
}

Manifest load_manifest(const std::string& ckpt_path) {
  std::string path = ckpt_path + ".manifest.json";
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  nlohmann::ordered_json j = nlohmann::ordered_json::parse(in);
  Manifest m;
  m.stage = j.at("stage");
  m.step = j.at("step");
  m.config_hash = j.at("config_hash");
  for (auto& [key, value] : j.at("metrics").items()) {
    m.metrics[key] = value;
  }
  return m;
}

}  // namespace rlvr::checkpoint
