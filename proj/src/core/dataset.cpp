#include "core/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "json.hpp"

#include "core/error.hpp"
#include "core/hash.hpp"

namespace gsr {

static_assert(std::endian::native == std::endian::little,
              "GSRD I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'G', 'S', 'R', 'D'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 * 4;
constexpr std::size_t kTrajHeaderBytes = 4 + 1;

std::string where(std::size_t traj, std::size_t step) {
  return "trajectory " + std::to_string(traj) + ", step " + std::to_string(step);
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

  bool read_u32(std::uint32_t& out) { return read_raw(&out, sizeof out); }
  bool read_u8(std::uint8_t& out) { return read_raw(&out, sizeof out); }
  bool read_floats(float* out, std::size_t count) {
    return read_raw(out, count * sizeof(float));
  }
  bool skip(std::size_t n) {
    if (remaining() < n) return false;
    pos_ += n;
    return true;
  }

 private:
  bool read_raw(void* out, std::size_t n) {
    if (remaining() < n) return false;
    std::memcpy(out, bytes_.data() + pos_, n);
    pos_ += n;
    return true;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

// Structural scan of the trajectory section with a hypothetical per-step
// float count. Returns true when the file is exactly consumed.
bool layout_consistent(std::span<const std::uint8_t> bytes, std::uint32_t n_traj,
                       std::size_t floats_per_step) {
  ByteReader reader(bytes);
  if (!reader.skip(kHeaderBytes)) return false;
  for (std::uint32_t t = 0; t < n_traj; ++t) {
    std::uint32_t n_steps = 0;
    std::uint8_t success = 0;
    if (!reader.read_u32(n_steps) || !reader.read_u8(success)) return false;
    if (success > 1) return false;
    const std::size_t payload =
        static_cast<std::size_t>(n_steps) * floats_per_step * sizeof(float);
    if (!reader.skip(payload)) return false;
  }
  return reader.remaining() == 0;
}

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
  out.insert(out.end(), p, p + sizeof v);
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > 0xffffffffu) fail(ErrorCode::InvalidConfig, std::string(what) + " exceeds u32 range");
  return static_cast<std::uint32_t>(v);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::IoFailure, "read error on " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, const void* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  out.flush();
  if (!out) fail(ErrorCode::IoFailure, "write error on " + path.string());
}

}  // namespace

DemoDataset::DemoDataset(std::size_t embedding_dim, std::size_t action_dim,
                         std::vector<Trajectory> trajectories)
    : embedding_dim_(embedding_dim),
      action_dim_(action_dim),
      trajectories_(std::move(trajectories)) {}

std::size_t DemoDataset::total_steps() const {
  std::size_t n = 0;
  for (const auto& t : trajectories_) n += t.num_steps(embedding_dim_);
  return n;
}

StepView DemoDataset::step(std::size_t traj, std::size_t raw_index) const {
  const auto& t = trajectories_.at(traj);
  return StepView{
      std::span<const float>(t.embeddings).subspan(raw_index * embedding_dim_, embedding_dim_),
      std::span<const float>(t.actions).subspan(raw_index * action_dim_, action_dim_),
      raw_index};
}

std::span<const float> DemoDataset::embedding(std::size_t traj, std::size_t raw_index) const {
  return std::span<const float>(trajectories_[traj].embeddings)
      .subspan(raw_index * embedding_dim_, embedding_dim_);
}

void DemoDataset::validate(const DatasetOptions& options) const {
  if (trajectories_.empty()) fail(ErrorCode::EmptyDataset, "dataset has no trajectories");
  if (embedding_dim_ == 0) fail(ErrorCode::DimensionMismatch, "embedding dimension is zero");
  for (std::size_t ti = 0; ti < trajectories_.size(); ++ti) {
    const auto& t = trajectories_[ti];
    if (t.embeddings.size() % embedding_dim_ != 0) {
      fail(ErrorCode::DimensionMismatch,
           "trajectory " + std::to_string(ti) + ": embedding buffer not a multiple of D=" +
               std::to_string(embedding_dim_));
    }
    const std::size_t n = t.num_steps(embedding_dim_);
    if (t.actions.size() != n * action_dim_) {
      fail(ErrorCode::DimensionMismatch,
           "trajectory " + std::to_string(ti) + ": action buffer does not match " +
               std::to_string(n) + " steps of A=" + std::to_string(action_dim_));
    }
    if (n < 2) {
      fail(ErrorCode::MalformedFile,
           "trajectory " + std::to_string(ti) + " has " + std::to_string(n) +
               " steps; at least 2 required");
    }
    if (!t.success && !options.allow_failures) {
      fail(ErrorCode::FailureTrajectory,
           "trajectory " + std::to_string(ti) + " is not a success (allow_failures not set)");
    }
    for (std::size_t i = 0; i < t.embeddings.size(); ++i) {
      if (!std::isfinite(t.embeddings[i])) {
        fail(ErrorCode::NonFinite,
             "non-finite embedding component at " + where(ti, i / embedding_dim_));
      }
    }
    for (std::size_t i = 0; i < t.actions.size(); ++i) {
      if (!std::isfinite(t.actions[i])) {
        fail(ErrorCode::NonFinite, "non-finite action component at " + where(ti, i / action_dim_));
      }
    }
  }
}

std::uint64_t DemoDataset::fingerprint() const {
  Fnv1a64 h;
  h.update_value(static_cast<std::uint64_t>(embedding_dim_));
  h.update_value(static_cast<std::uint64_t>(action_dim_));
  h.update_value(static_cast<std::uint64_t>(trajectories_.size()));
  for (const auto& t : trajectories_) {
    h.update_value(static_cast<std::uint64_t>(t.embeddings.size()));
    h.update_value(static_cast<std::uint8_t>(t.success ? 1 : 0));
    h.update(t.embeddings.data(), t.embeddings.size() * sizeof(float));
    h.update(t.actions.data(), t.actions.size() * sizeof(float));
  }
  return h.digest();
}

bool DemoDataset::operator==(const DemoDataset& other) const {
  if (embedding_dim_ != other.embedding_dim_ || action_dim_ != other.action_dim_ ||
      trajectories_.size() != other.trajectories_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < trajectories_.size(); ++i) {
    const auto& a = trajectories_[i];
    const auto& b = other.trajectories_[i];
    if (a.success != b.success || a.embeddings.size() != b.embeddings.size() ||
        a.actions.size() != b.actions.size()) {
      return false;
    }
    // Bitwise so that -0.0f and 0.0f stay distinguishable.
    if (std::memcmp(a.embeddings.data(), b.embeddings.data(), a.embeddings.size() * sizeof(float)) ||
        std::memcmp(a.actions.data(), b.actions.data(), a.actions.size() * sizeof(float))) {
      return false;
    }
  }
  return true;
}

std::size_t gsrd_encoded_size(const DemoDataset& ds) {
  std::size_t n = kHeaderBytes;
  for (std::size_t t = 0; t < ds.num_trajectories(); ++t) {
    n += kTrajHeaderBytes +
         ds.num_steps(t) * (ds.embedding_dim() + ds.action_dim()) * sizeof(float);
  }
  return n;
}

std::vector<std::uint8_t> encode_gsrd(const DemoDataset& ds) {
  std::vector<std::uint8_t> out;
  out.reserve(gsrd_encoded_size(ds));
  out.insert(out.end(), kMagic, kMagic + 4);
  append_u32(out, kVersion);
  append_u32(out, checked_u32(ds.embedding_dim(), "D"));
  append_u32(out, checked_u32(ds.action_dim(), "A"));
  append_u32(out, checked_u32(ds.num_trajectories(), "trajectory count"));
  const std::size_t d = ds.embedding_dim();
  const std::size_t a = ds.action_dim();
  for (const auto& t : ds.trajectories()) {
    const std::size_t n = t.num_steps(d);
    append_u32(out, checked_u32(n, "step count"));
    out.push_back(t.success ? 1 : 0);
    // Interleaved per step: D embedding floats then A action floats.
    for (std::size_t s = 0; s < n; ++s) {
      const auto* e = reinterpret_cast<const std::uint8_t*>(t.embeddings.data() + s * d);
      out.insert(out.end(), e, e + d * sizeof(float));
      const auto* act = reinterpret_cast<const std::uint8_t*>(t.actions.data() + s * a);
      out.insert(out.end(), act, act + a * sizeof(float));
    }
  }
  return out;
}

DemoDataset parse_gsrd(std::span<const std::uint8_t> bytes, const DatasetOptions& options) {
  ByteReader reader(bytes);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    fail(ErrorCode::MalformedFile, "bad magic (expected \"GSRD\")");
  }
  reader.skip(4);
  std::uint32_t version = 0, d = 0, a = 0, n_traj = 0;
  if (!reader.read_u32(version) || !reader.read_u32(d) || !reader.read_u32(a) ||
      !reader.read_u32(n_traj)) {
    fail(ErrorCode::MalformedFile, "truncated header");
  }
  if (version != kVersion) {
    fail(ErrorCode::MalformedFile, "unsupported version " + std::to_string(version));
  }
  if (n_traj == 0) fail(ErrorCode::EmptyDataset, "dataset has no trajectories");
  if (d == 0) fail(ErrorCode::DimensionMismatch, "header declares D=0");

  const std::size_t per_step = static_cast<std::size_t>(d) + a;
  if (!layout_consistent(bytes, n_traj, per_step)) {
    // Distinguish a wrong per-step width from plain corruption.
    for (std::size_t w = 1; w <= 4 * per_step + 4; ++w) {
      if (w != per_step && layout_consistent(bytes, n_traj, w)) {
        fail(ErrorCode::DimensionMismatch,
             "steps carry " + std::to_string(w) + " floats but header declares D+A=" +
                 std::to_string(per_step));
      }
    }
    fail(ErrorCode::MalformedFile, "trajectory section lengths inconsistent with file size");
  }

  std::vector<Trajectory> trajectories(n_traj);
  for (std::uint32_t ti = 0; ti < n_traj; ++ti) {
    std::uint32_t n_steps = 0;
    std::uint8_t success = 0;
    reader.read_u32(n_steps);
    reader.read_u8(success);
    auto& t = trajectories[ti];
    t.success = success != 0;
    t.embeddings.resize(static_cast<std::size_t>(n_steps) * d);
    t.actions.resize(static_cast<std::size_t>(n_steps) * a);
    for (std::uint32_t s = 0; s < n_steps; ++s) {
      reader.read_floats(t.embeddings.data() + static_cast<std::size_t>(s) * d, d);
      reader.read_floats(t.actions.data() + static_cast<std::size_t>(s) * a, a);
    }
  }
  DemoDataset ds(d, a, std::move(trajectories));
  ds.validate(options);
  return ds;
}

std::string encode_jsonl(const DemoDataset& ds) {
  std::string out;
  const std::size_t d = ds.embedding_dim();
  const std::size_t a = ds.action_dim();
  for (const auto& t : ds.trajectories()) {
    nlohmann::json line;
    line["success"] = t.success;
    auto& emb = line["embeddings"] = nlohmann::json::array();
    auto& act = line["actions"] = nlohmann::json::array();
    const std::size_t n = t.num_steps(d);
    for (std::size_t s = 0; s < n; ++s) {
      emb.push_back(std::vector<float>(t.embeddings.begin() + s * d,
                                       t.embeddings.begin() + (s + 1) * d));
      act.push_back(std::vector<float>(t.actions.begin() + s * a,
                                       t.actions.begin() + (s + 1) * a));
    }
    out += line.dump();
    out += '\n';
  }
  return out;
}

DemoDataset parse_jsonl(const std::string& text, const DatasetOptions& options) {
  std::istringstream in(text);
  std::string line;
  std::vector<Trajectory> trajectories;
  std::size_t d = 0, a = 0;
  bool dims_known = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::size_t ti = trajectories.size();
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::MalformedFile, "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("embeddings") || !j.contains("actions") ||
        !j["embeddings"].is_array() || !j["actions"].is_array()) {
      fail(ErrorCode::MalformedFile,
           "line " + std::to_string(line_no) + ": expected {success, embeddings, actions}");
    }
    Trajectory t;
    if (j.contains("success")) {
      if (!j["success"].is_boolean()) {
        fail(ErrorCode::MalformedFile, "line " + std::to_string(line_no) + ": success must be bool");
      }
      t.success = j["success"].get<bool>();
    }
    const auto& emb = j["embeddings"];
    const auto& act = j["actions"];
    if (emb.size() != act.size()) {
      fail(ErrorCode::MalformedFile, "line " + std::to_string(line_no) +
                                         ": embeddings and actions differ in step count");
    }
    for (std::size_t s = 0; s < emb.size(); ++s) {
      if (!emb[s].is_array() || !act[s].is_array()) {
        fail(ErrorCode::MalformedFile, "line " + std::to_string(line_no) + ": step not an array");
      }
      if (!dims_known) {
        d = emb[s].size();
        a = act[s].size();
        dims_known = true;
      }
      if (emb[s].size() != d || act[s].size() != a) {
        fail(ErrorCode::DimensionMismatch,
             where(ti, s) + ": expected D=" + std::to_string(d) + " A=" + std::to_string(a) +
                 ", got D=" + std::to_string(emb[s].size()) +
                 " A=" + std::to_string(act[s].size()));
      }
      for (const auto& x : emb[s]) {
        if (!x.is_number()) fail(ErrorCode::MalformedFile, "non-numeric embedding at " + where(ti, s));
        t.embeddings.push_back(static_cast<float>(x.get<double>()));
      }
      for (const auto& x : act[s]) {
        if (!x.is_number()) fail(ErrorCode::MalformedFile, "non-numeric action at " + where(ti, s));
        t.actions.push_back(static_cast<float>(x.get<double>()));
      }
    }
    trajectories.push_back(std::move(t));
  }
  if (trajectories.empty()) fail(ErrorCode::EmptyDataset, "dataset has no trajectories");
  DemoDataset ds(d, a, std::move(trajectories));
  ds.validate(options);
  return ds;
}

DemoDataset load_dataset(const std::filesystem::path& path, const DatasetOptions& options) {
  const auto ext = path.extension().string();
  if (ext != ".gsrd" && ext != ".jsonl") {
    fail(ErrorCode::MalformedFile, "unknown dataset extension '" + ext + "' (want .gsrd or .jsonl)");
  }
  const auto bytes = read_file(path);
  DemoDataset ds = ext == ".gsrd"
                       ? parse_gsrd(bytes, options)
                       : parse_jsonl(std::string(bytes.begin(), bytes.end()), options);
  ds.metadata()["source"] = path.string();
  return ds;
}

void save_dataset(const DemoDataset& ds, const std::filesystem::path& path) {
  if (path.extension() == ".jsonl") {
    const auto text = encode_jsonl(ds);
    write_file(path, text.data(), text.size());
  } else {
    const auto bytes = encode_gsrd(ds);
    write_file(path, bytes.data(), bytes.size());
  }
}

DemoDataset concat_embeddings(std::span<const DemoDataset> parts) {
  if (parts.empty()) fail(ErrorCode::EmptyDataset, "concat_embeddings needs at least one part");
  const DemoDataset& first = parts.front();
  std::size_t d_out = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& part = parts[p];
    if (part.num_trajectories() != first.num_trajectories()) {
      fail(ErrorCode::StructureMismatch, "part " + std::to_string(p) + " has " +
                                             std::to_string(part.num_trajectories()) +
                                             " trajectories, part 0 has " +
                                             std::to_string(first.num_trajectories()));
    }
    for (std::size_t t = 0; t < first.num_trajectories(); ++t) {
      if (part.num_steps(t) != first.num_steps(t)) {
        fail(ErrorCode::StructureMismatch,
             "part " + std::to_string(p) + ", trajectory " + std::to_string(t) + ": " +
                 std::to_string(part.num_steps(t)) + " steps vs " +
                 std::to_string(first.num_steps(t)));
      }
      if (part.action_dim() != 0 &&
          (part.action_dim() != first.action_dim() ||
           part.trajectory(t).actions != first.trajectory(t).actions)) {
        fail(ErrorCode::StructureMismatch, "part " + std::to_string(p) + ", trajectory " +
                                               std::to_string(t) + ": actions differ from part 0");
      }
    }
    d_out += part.embedding_dim();
  }

  std::vector<Trajectory> out(first.num_trajectories());
  for (std::size_t t = 0; t < out.size(); ++t) {
    const std::size_t n = first.num_steps(t);
    out[t].actions = first.trajectory(t).actions;
    out[t].success = first.trajectory(t).success;
    out[t].embeddings.reserve(n * d_out);
    for (std::size_t s = 0; s < n; ++s) {
      for (const auto& part : parts) {
        const auto e = part.embedding(t, s);
        out[t].embeddings.insert(out[t].embeddings.end(), e.begin(), e.end());
      }
    }
  }
  return DemoDataset(d_out, first.action_dim(), std::move(out));
}

}  // namespace gsr
