#include "sdyn/neuralnet/checkpoint.hpp"

#include "../util/binary_io.hpp"
#include "sdyn/error.hpp"

namespace sdyn {

namespace {

std::uint64_t fnv1a(const char* data, std::size_t n) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001b3ull;
  }
  return h;
}

void write_vector(detail::BinaryWriter& w, const Eigen::VectorXd& v) {
  w.array(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

Eigen::VectorXd read_vector(detail::BinaryReader& r, std::size_t n) {
  const auto values = r.array<double>(n);
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(n));
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  detail::BinaryWriter w;
  w.magic("PDNN");
  w.pod(kCheckpointVersion);
  w.pod(static_cast<std::uint32_t>(ck.networks.size()));
  for (const Mlp& net : ck.networks) {
    w.pod(static_cast<std::uint32_t>(net.layer_dims().size()));
    for (std::size_t d : net.layer_dims()) w.pod(static_cast<std::uint64_t>(d));
    write_vector(w, net.parameters());
  }
  w.pod(static_cast<std::uint8_t>(ck.optimizer ? 1 : 0));
  if (ck.optimizer) {
    const AdamState& s = *ck.optimizer;
    w.pod(s.step);
    w.pod(s.epoch);
    for (double x : {s.lr, s.beta1, s.beta2, s.epsilon, s.lr_decay}) w.pod(x);
    w.pod(static_cast<std::uint64_t>(s.m.size()));
    write_vector(w, s.m);
    write_vector(w, s.v);
  }
  const std::string meta = ck.metadata.dump();
  w.pod(static_cast<std::uint64_t>(meta.size()));
  w.bytes(meta.data(), meta.size());
  w.pod(fnv1a(w.buffer().data(), w.buffer().size()));
  w.save(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  detail::BinaryReader r(path, Errc::CorruptCheckpoint);
  if (!r.magic("PDNN")) throw Error(Errc::CorruptCheckpoint, "not a PDNN checkpoint: " + path.string());
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw Error(Errc::VersionMismatch, "checkpoint version " + std::to_string(version) +
                                           ", expected " + std::to_string(kCheckpointVersion));
  }
  Checkpoint ck;
  const auto count = r.pod<std::uint32_t>();
  if (count > 1024) throw Error(Errc::CorruptCheckpoint, "implausible network count");
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto ndims = r.pod<std::uint32_t>();
    if (ndims < 2 || ndims > 1024) throw Error(Errc::CorruptCheckpoint, "implausible layer count");
    std::vector<std::size_t> dims;
    for (std::uint64_t d : r.array<std::uint64_t>(ndims)) {
      if (d == 0 || d > (1u << 24)) throw Error(Errc::CorruptCheckpoint, "implausible layer width");
      dims.push_back(static_cast<std::size_t>(d));
    }
    Mlp net(dims);
    net.parameters() = read_vector(r, net.parameter_count());
    ck.networks.push_back(std::move(net));
  }
  if (r.pod<std::uint8_t>()) {
    AdamState s;
    s.step = r.pod<std::uint64_t>();
    s.epoch = r.pod<std::uint64_t>();
    s.lr = r.pod<double>();
    s.beta1 = r.pod<double>();
    s.beta2 = r.pod<double>();
    s.epsilon = r.pod<double>();
    s.lr_decay = r.pod<double>();
    const auto n = r.pod<std::uint64_t>();
    if (n > r.remaining()) throw Error(Errc::CorruptCheckpoint, "truncated optimizer state");
    s.m = read_vector(r, n);
    s.v = read_vector(r, n);
    ck.optimizer = std::move(s);
  }
  const auto meta_len = r.pod<std::uint64_t>();
  const std::string meta = r.string(meta_len);
  const std::size_t hashed = r.position();
  const auto stored = r.pod<std::uint64_t>();
  if (r.remaining() != 0) throw Error(Errc::CorruptCheckpoint, "trailing bytes in " + path.string());
  if (stored != fnv1a(r.data(), hashed)) {
    throw Error(Errc::CorruptCheckpoint, "checksum mismatch in " + path.string());
  }
  try {
    ck.metadata = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptCheckpoint, std::string("metadata: ") + e.what());
  }
  return ck;
}

void require_architecture(const Checkpoint& ck,
                          const std::vector<std::vector<std::size_t>>& layer_dims) {
  bool ok = ck.networks.size() == layer_dims.size();
  for (std::size_t k = 0; ok && k < layer_dims.size(); ++k) {
    ok = ck.networks[k].layer_dims() == layer_dims[k];
  }
  if (!ok) throw Error(Errc::ShapeMismatch, "checkpoint architecture does not match the model");
}

}  // namespace sdyn
