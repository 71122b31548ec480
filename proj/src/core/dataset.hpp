#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace gsr {

// One (embedding, action) pair. Views into the owning trajectory.
struct StepView {
  std::span<const float> embedding;
  std::span<const float> action;
  std::size_t raw_index = 0;
};

// Steps are stored row-major: step t occupies embeddings[t*D, (t+1)*D) and
// actions[t*A, (t+1)*A). The last step is the terminal observation.
struct Trajectory {
  std::vector<float> embeddings;
  std::vector<float> actions;
  bool success = true;

  std::size_t num_steps(std::size_t embedding_dim) const {
    return embedding_dim == 0 ? 0 : embeddings.size() / embedding_dim;
  }

  bool operator==(const Trajectory&) const = default;
};

struct DatasetOptions {
  bool allow_failures = false;
};

class DemoDataset {
 public:
  DemoDataset() = default;
  DemoDataset(std::size_t embedding_dim, std::size_t action_dim,
              std::vector<Trajectory> trajectories);

  std::size_t embedding_dim() const { return embedding_dim_; }
  std::size_t action_dim() const { return action_dim_; }
  std::size_t num_trajectories() const { return trajectories_.size(); }
  std::size_t num_steps(std::size_t traj) const {
    return trajectories_[traj].num_steps(embedding_dim_);
  }
  std::size_t total_steps() const;

  const std::vector<Trajectory>& trajectories() const { return trajectories_; }
  const Trajectory& trajectory(std::size_t i) const { return trajectories_[i]; }

  StepView step(std::size_t traj, std::size_t raw_index) const;
  std::span<const float> embedding(std::size_t traj, std::size_t raw_index) const;

  // Free-form provenance (source path, generator config). Not persisted by
  // the binary format.
  std::map<std::string, std::string>& metadata() { return metadata_; }
  const std::map<std::string, std::string>& metadata() const { return metadata_; }

  // Throws gsr::Error on the first violated invariant.
  void validate(const DatasetOptions& options = {}) const;

  // 64-bit FNV-1a over dims, flags and raw float bytes.
  std::uint64_t fingerprint() const;

  // Compares dimensions and trajectory payloads bit-exactly; metadata ignored.
  bool operator==(const DemoDataset& other) const;

 private:
  std::size_t embedding_dim_ = 0;
  std::size_t action_dim_ = 0;
  std::vector<Trajectory> trajectories_;
  std::map<std::string, std::string> metadata_;
};

// GSRD v1 binary (".gsrd") or JSON lines (".jsonl"), chosen by extension.
DemoDataset load_dataset(const std::filesystem::path& path,
                         const DatasetOptions& options = {});
void save_dataset(const DemoDataset& ds, const std::filesystem::path& path);

DemoDataset parse_gsrd(std::span<const std::uint8_t> bytes,
                       const DatasetOptions& options = {});
std::vector<std::uint8_t> encode_gsrd(const DemoDataset& ds);
DemoDataset parse_jsonl(const std::string& text,
                        const DatasetOptions& options = {});
std::string encode_jsonl(const DemoDataset& ds);

// Exact byte count of the GSRD encoding of `ds`.
std::size_t gsrd_encoded_size(const DemoDataset& ds);

// Per-step embedding concatenation of structurally identical datasets, in
// part order. Actions and success flags come from the first part; later parts
// must carry identical actions or none (A=0).
DemoDataset concat_embeddings(std::span<const DemoDataset> parts);

}  // namespace gsr
