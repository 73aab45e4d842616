#pragma once

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mabs/common.hpp"
#include "mabs/pool.hpp"

namespace mabs {

struct PartitionSpec {
  std::string column;
  int bins = 7;  // only used for numeric columns
};

struct ClusterLabel {
  std::string column;
  int index = 0;       // bin/category index within its partition
  std::string text;    // e.g. "sex=female" or "age=[20,28.57)"
};

class ClusterSet;

class Cluster {
 public:
  const ClusterLabel& label() const { return label_; }
  std::size_t size() const { return members_.size(); }
  bool exhausted() const { return members_.empty(); }
  std::span<const SampleId> members() const { return members_; }
  // Uniform draw without removal; throws std::logic_error when exhausted.
  SampleId draw_uniform(Rng& rng) const;

 private:
  friend class ClusterSet;
  friend std::vector<Cluster> build_partition(const SourcePool&, std::string_view, int);

  void erase(SampleId id);

  ClusterLabel label_;
  std::vector<SampleId> members_;
  std::unordered_map<SampleId, std::size_t> pos_;  // id -> index in members_
};

// Clusters of one metadata column. Categorical: one cluster per dictionary
// value, in dictionary order. Numeric: `bins` equal-width intervals over
// [min, max] with the top edge folded into the last bin; empty bins are
// dropped. Unknown columns throw std::invalid_argument.
std::vector<Cluster> build_partition(const SourcePool& pool, std::string_view column,
                                     int bins);

// Union of several partitions over the same pool. A sample typically sits in
// one cluster per partition; remove_sample takes it out of all of them so a
// consumed sample can never be drawn again through a sibling cluster.
class ClusterSet {
 public:
  static ClusterSet build(const SourcePool& pool, std::span<const PartitionSpec> specs);
  static ClusterSet build(const SourcePool& pool, std::initializer_list<PartitionSpec> specs) {
    return build(pool, std::span<const PartitionSpec>(specs.begin(), specs.size()));
  }

  std::size_t size() const { return clusters_.size(); }
  const Cluster& cluster(std::size_t i) const { return clusters_[i]; }
  bool contains(SampleId id) const { return membership_.count(id) != 0; }
  std::size_t membership_count(SampleId id) const;
  // Distinct samples still available through at least one cluster.
  std::size_t remaining() const { return membership_.size(); }

  // Throws std::invalid_argument if the id is not (or no longer) present.
  void remove_sample(SampleId id);

 private:
  std::vector<Cluster> clusters_;
  std::unordered_map<SampleId, std::vector<std::uint32_t>> membership_;
};

}  // namespace mabs
