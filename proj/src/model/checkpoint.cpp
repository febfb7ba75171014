#include "atcor/model/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "atcor/common/error.hpp"
#include "atcor/model/atcor_net.hpp"
#include "atcor/model/baselines.hpp"

namespace atcor::model {

namespace {

constexpr char kMagic[8] = {'A', 'T', 'C', 'O', 'R', 'C', 'K', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

struct Reader {
  std::ifstream in;
  std::string name;

  explicit Reader(const std::filesystem::path& p) : in(p, std::ios::binary), name(p.string()) {
    if (!in) throw Error("cannot read checkpoint " + name);
  }
  template <typename T>
  T get() {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error(name + ": truncated checkpoint");
    return v;
  }
  std::string str() {
    const auto n = get<std::uint32_t>();
    if (n > (1u << 24)) throw Error(name + ": implausible string length");
    std::string s(n, '\0');
    if (n && !in.read(s.data(), n)) throw Error(name + ": truncated checkpoint");
    return s;
  }
};

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

CheckpointHeader read_header(Reader& r) {
  char magic[8];
  if (!r.in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw Error(r.name + ": not a checkpoint file");
  const auto version = r.get<std::uint32_t>();
  if (version != kVersion) throw Error(r.name + ": unsupported checkpoint version " + std::to_string(version));
  CheckpointHeader h;
  h.fingerprint = r.str();
  if (r.get<std::uint64_t>() != fnv1a64(h.fingerprint)) throw Error(r.name + ": fingerprint hash mismatch");
  h.metadata = parse_kv(r.str());
  return h;
}

}  // namespace

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void save_checkpoint(const std::filesystem::path& path, const Forecaster& model,
                     const std::map<std::string, std::string>& metadata) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    out.write(kMagic, 8);
    put(out, kVersion);
    const std::string fp = model.fingerprint();
    put_string(out, fp);
    put(out, fnv1a64(fp));
    std::string meta;
    for (const auto& [k, v] : metadata) meta += k + "=" + v + "\n";
    put_string(out, meta);
    const auto& ps = model.params();
    put<std::uint32_t>(out, static_cast<std::uint32_t>(ps.blocks().size()));
    for (std::size_t i = 0; i < ps.blocks().size(); ++i) {
      const auto& b = ps.block(i);
      put_string(out, b.name);
      put<std::uint8_t>(out, b.trainable ? 1 : 0);
      put<std::uint32_t>(out, static_cast<std::uint32_t>(b.shape.size()));
      for (auto dim : b.shape) put<std::uint64_t>(out, dim);
      out.write(reinterpret_cast<const char*>(ps.data(i)), static_cast<std::streamsize>(b.size * sizeof(double)));
    }
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  Reader r(path);
  return read_header(r);
}

CheckpointHeader load_checkpoint(const std::filesystem::path& path, Forecaster& model) {
  Reader r(path);
  auto h = read_header(r);
  const std::string expected = model.fingerprint();
  if (h.fingerprint != expected) {
    // name the first differing line to make the rejection actionable
    const auto a = parse_kv(h.fingerprint);
    const auto b = parse_kv(expected);
    std::string diff;
    for (const auto& [k, v] : b) {
      auto it = a.find(k);
      if (it == a.end()) {
        diff = k + " missing from checkpoint";
        break;
      }
      if (it->second != v) {
        diff = k + ": checkpoint has '" + it->second + "', model expects '" + v + "'";
        break;
      }
    }
    if (diff.empty()) diff = "extra keys in checkpoint";
    throw FingerprintError(path.string() + ": fingerprint mismatch (" + diff + ")");
  }
  auto& ps = model.params();
  const auto count = r.get<std::uint32_t>();
  if (count != ps.blocks().size())
    throw FingerprintError(path.string() + ": " + std::to_string(count) + " tensor blocks, model has " +
                           std::to_string(ps.blocks().size()));
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    r.get<std::uint8_t>();
    const auto rank = r.get<std::uint32_t>();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(r.get<std::uint64_t>());
    const auto idx = ps.find(name);
    if (!idx || ps.block(*idx).shape != shape)
      throw FingerprintError(path.string() + ": tensor block '" + name + "' does not match the model layout");
    const auto& b = ps.block(*idx);
    if (!r.in.read(reinterpret_cast<char*>(ps.data(*idx)), static_cast<std::streamsize>(b.size * sizeof(double))))
      throw Error(path.string() + ": truncated checkpoint");
  }
  return h;
}

std::unique_ptr<Forecaster> make_forecaster(const std::string& fingerprint) {
  const auto kv = parse_fingerprint(fingerprint);
  const auto it = kv.find("scheme");
  if (it == kv.end()) throw ConfigError("fingerprint lacks scheme");
  if (it->second == "atcor") return std::make_unique<AtcorNet>(ModelConfig::from_fingerprint(fingerprint));
  if (it->second == "persistence") return std::make_unique<Persistence>(std::stoi(kv.at("lookback")));
  return std::make_unique<RecurrentBaseline>(BaselineConfig::from_fingerprint(fingerprint));
}

std::unique_ptr<Forecaster> open_checkpoint(const std::filesystem::path& path, CheckpointHeader* header) {
  auto h = read_checkpoint_header(path);
  auto model = make_forecaster(h.fingerprint);
  auto loaded = load_checkpoint(path, *model);
  if (header) *header = std::move(loaded);
  return model;
}

}  // namespace atcor::model
