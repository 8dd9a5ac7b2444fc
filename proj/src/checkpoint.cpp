#include "smat/checkpoint.hpp"

#include "smat/dynamics.hpp"
#include "smat/error.hpp"
#include "smat/walker_env.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace smat {

namespace {

constexpr std::string_view kMagic = "SMATCKPT";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

void put_u64(std::string& out, std::uint64_t bits) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(std::string_view in, std::size_t pos) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return bits;
}

void put_f64(std::string& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }

double get_f64(std::string_view in, std::size_t pos) { return std::bit_cast<double>(get_u64(in, pos)); }

const char* squash_name(Squash s) {
  switch (s) {
    case Squash::kUnit: return "unit";
    case Squash::kSymmetric: return "symmetric";
    default: return "none";
  }
}

Squash squash_from(const std::string& s) {
  if (s == "unit") return Squash::kUnit;
  if (s == "symmetric") return Squash::kSymmetric;
  if (s == "none") return Squash::kNone;
  throw CorruptCheckpoint("unknown squash tag '" + s + "'");
}

nlohmann::json describe(const PolicyNet& net) {
  return {{"layers", net.layer_sizes()},
          {"activation", net.hidden == Activation::kTanh ? "tanh" : "identity"},
          {"squash", squash_name(net.squash)},
          {"log_std", net.log_std.size()},
          {"params", net.num_params()}};
}

PolicyNet skeleton(const nlohmann::json& j) {
  PolicyNet net;
  const auto layers = j.at("layers").get<std::vector<int>>();
  if (layers.size() < 2) throw CorruptCheckpoint("network needs at least one layer");
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    if (layers[l] <= 0 || layers[l + 1] <= 0) throw CorruptCheckpoint("non-positive layer size");
    net.weights.push_back(Mat::Zero(layers[l + 1], layers[l]));
    net.biases.push_back(Vec::Zero(layers[l + 1]));
  }
  const std::string act = j.at("activation").get<std::string>();
  if (act != "tanh" && act != "identity") throw CorruptCheckpoint("unknown activation '" + act + "'");
  net.hidden = act == "tanh" ? Activation::kTanh : Activation::kIdentity;
  net.squash = squash_from(j.at("squash").get<std::string>());
  const int n_std = j.at("log_std").get<int>();
  if (n_std != 0 && n_std != layers.back()) throw CorruptCheckpoint("log-std size does not match output");
  net.log_std = Vec::Zero(n_std);
  if (j.at("params").get<long long>() != net.num_params()) {
    throw CorruptCheckpoint("declared parameter count does not match layer sizes");
  }
  return net;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t parse_hex64(const std::string& s) {
  if (s.size() != 16) throw CorruptCheckpoint("bad hex field");
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else throw CorruptCheckpoint("bad hex field");
  }
  return v;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string rng_to_string(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_string(const std::string& state) {
  Rng rng;
  std::istringstream is(state);
  is >> rng;
  if (is.fail()) throw CorruptCheckpoint("unreadable rng state");
  return rng;
}

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string payload;
  for (const PolicyNet* net : {&ckpt.human, &ckpt.exo, &ckpt.critic}) {
    const Vec p = flatten_params(*net);
    for (double x : p) put_f64(payload, x);
  }
  const nlohmann::json manifest = {
      {"stage", ckpt.stage},
      {"steps", ckpt.steps},
      {"config_hash", hex64(ckpt.config_hash)},
      {"rng_state", ckpt.rng_state},
      {"blocks", {"human", "exo", "critic"}},
      {"human", describe(ckpt.human)},
      {"exo", describe(ckpt.exo)},
      {"critic", describe(ckpt.critic)},
      {"payload_bytes", payload.size()},
      {"payload_fnv1a64", hex64(fnv1a64(payload))},
  };
  const std::string text = manifest.dump();
  std::string out(kMagic);
  put_u32(out, Checkpoint::kVersion);
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  put_u64(out, fnv1a64(text));
  out += text;
  out += payload;
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagic.size() + 16 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw CorruptCheckpoint("not a checkpoint (bad magic)");
  }
  const std::uint32_t version = get_u32(bytes, kMagic.size());
  if (version != Checkpoint::kVersion) {
    throw CorruptCheckpoint("unsupported checkpoint version " + std::to_string(version));
  }
  const std::size_t text_len = get_u32(bytes, kMagic.size() + 4);
  const std::size_t text_pos = kMagic.size() + 16;
  if (bytes.size() < text_pos + text_len) throw CorruptCheckpoint("truncated manifest");
  if (get_u64(bytes, kMagic.size() + 8) != fnv1a64(bytes.substr(text_pos, text_len))) {
    throw CorruptCheckpoint("manifest checksum mismatch");
  }

  Checkpoint ckpt;
  std::size_t pos = text_pos + text_len;
  try {
    const auto manifest = nlohmann::json::parse(bytes.substr(text_pos, text_len));
    const std::size_t payload_bytes = manifest.at("payload_bytes").get<std::size_t>();
    if (bytes.size() != pos + payload_bytes) throw CorruptCheckpoint("payload size mismatch (truncated or padded file)");
    const std::string_view payload = bytes.substr(pos);
    if (hex64(fnv1a64(payload)) != manifest.at("payload_fnv1a64").get<std::string>()) {
      throw CorruptCheckpoint("payload checksum mismatch");
    }
    ckpt.stage = manifest.at("stage").get<int>();
    ckpt.steps = manifest.at("steps").get<long long>();
    ckpt.config_hash = parse_hex64(manifest.at("config_hash").get<std::string>());
    ckpt.rng_state = manifest.at("rng_state").get<std::string>();
    if (ckpt.stage < 0 || ckpt.stage > 4 || ckpt.steps < 0) throw CorruptCheckpoint("stage or step count out of range");
    rng_from_string(ckpt.rng_state);

    std::size_t declared = 0;
    PolicyNet* nets[] = {&ckpt.human, &ckpt.exo, &ckpt.critic};
    const char* names[] = {"human", "exo", "critic"};
    for (int k = 0; k < 3; ++k) {
      *nets[k] = skeleton(manifest.at(names[k]));
      declared += static_cast<std::size_t>(nets[k]->num_params()) * 8;
    }
    if (declared != payload_bytes) throw CorruptCheckpoint("declared dimensions do not match payload size");
    for (PolicyNet* net : nets) {
      Vec p(net->num_params());
      for (Eigen::Index i = 0; i < p.size(); ++i, pos += 8) p[i] = get_f64(bytes, pos);
      assign_params(*net, p);
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptCheckpoint(std::string("bad manifest: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw DataError("cannot write checkpoint " + path);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw DataError("failed writing checkpoint " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open checkpoint " + path);
  const std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  try {
    return parse_checkpoint(bytes);
  } catch (const CorruptCheckpoint& e) {
    throw CorruptCheckpoint(path + ": " + e.what());
  }
}

void check_dimensions(const Checkpoint& ckpt, int num_muscles) {
  const int base = human_obs_dim(num_muscles, false);
  const int hin = ckpt.human.input_dim();
  if ((hin != base && hin != base + 2) || ckpt.human.output_dim() != num_muscles) {
    throw DimensionMismatch("checkpoint human actor is " + std::to_string(hin) + " -> " +
                            std::to_string(ckpt.human.output_dim()) + ", walker expects " + std::to_string(base) +
                            "[+2] -> " + std::to_string(num_muscles));
  }
  if (ckpt.exo.input_dim() != ObsHistory::kExoObsDim || ckpt.exo.output_dim() != 2) {
    throw DimensionMismatch("checkpoint exo actor has wrong dimensions");
  }
  if (ckpt.critic.input_dim() != WalkerEnv::critic_obs_dim(num_muscles) || ckpt.critic.output_dim() != 1) {
    throw DimensionMismatch("checkpoint critic has wrong dimensions");
  }
}

}  // namespace smat
