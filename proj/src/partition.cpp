#include "mabs/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mabs {

namespace {

std::string fmt_edge(double v) {
  char buf[48];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 6);
  (void)ec;
  return std::string(buf, end);
}

}  // namespace

SampleId Cluster::draw_uniform(Rng& rng) const {
  if (members_.empty())
    throw std::logic_error("draw from exhausted cluster '" + label_.text + "'");
  std::uniform_int_distribution<std::size_t> pick(0, members_.size() - 1);
  return members_[pick(rng)];
}

void Cluster::erase(SampleId id) {
  auto it = pos_.find(id);
  if (it == pos_.end())
    throw std::invalid_argument("sample " + std::to_string(id) + " not in cluster '" +
                                label_.text + "'");
  const std::size_t idx = it->second;
  const std::size_t last = members_.size() - 1;
  if (idx != last) {
    members_[idx] = members_[last];
    pos_[members_[idx]] = idx;
  }
  members_.pop_back();
  pos_.erase(it);
}

std::vector<Cluster> build_partition(const SourcePool& pool, std::string_view column,
                                     int bins) {
  const std::size_t col = pool.column_index(column);
  if (pool.size() == 0) throw std::invalid_argument("cannot partition an empty pool");

  std::vector<Cluster> clusters;
  const std::string name(column);

  if (pool.schema()[col].kind == MetaKind::categorical) {
    const std::size_t n_cat = pool.categories(col).size();
    std::vector<std::vector<SampleId>> buckets(n_cat);
    for (SampleId id : pool.ids()) {
      if (pool.is_revealed(id)) continue;
      buckets[static_cast<std::size_t>(pool.meta_value(id, col))].push_back(id);
    }
    for (std::size_t k = 0; k < n_cat; ++k) {
      if (buckets[k].empty()) continue;
      Cluster c;
      c.label_ = {name, static_cast<int>(k), name + "=" + pool.categories(col)[k]};
      c.members_ = std::move(buckets[k]);
      clusters.push_back(std::move(c));
    }
  } else {
    if (bins < 1) throw std::invalid_argument("bin count must be >= 1 for numeric column '" +
                                              name + "'");
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    // Edges come from the full pool's metadata (visible regardless of reveal
    // state); only unrevealed samples become members.
    for (SampleId id : pool.ids()) {
      const double v = pool.meta_value(id, col);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double width = (hi - lo) / bins;
    const int effective_bins = width > 0 ? bins : 1;
    std::vector<std::vector<SampleId>> buckets(effective_bins);
    for (SampleId id : pool.ids()) {
      if (pool.is_revealed(id)) continue;
      int b = 0;
      if (width > 0) {
        b = static_cast<int>((pool.meta_value(id, col) - lo) / width);
        b = std::clamp(b, 0, bins - 1);  // top edge folds into the last bin
      }
      buckets[b].push_back(id);
    }
    for (int k = 0; k < effective_bins; ++k) {
      if (buckets[k].empty()) continue;
      const double a = lo + k * width;
      const double b = k + 1 == effective_bins ? hi : lo + (k + 1) * width;
      const bool closed = k + 1 == effective_bins;
      Cluster c;
      c.label_ = {name, k,
                  name + "=[" + fmt_edge(a) + "," + fmt_edge(b) + (closed ? "]" : ")")};
      c.members_ = std::move(buckets[k]);
      clusters.push_back(std::move(c));
    }
  }

  for (auto& c : clusters)
    for (std::size_t i = 0; i < c.members_.size(); ++i) c.pos_.emplace(c.members_[i], i);
  return clusters;
}

ClusterSet ClusterSet::build(const SourcePool& pool, std::span<const PartitionSpec> specs) {
  if (specs.empty()) throw std::invalid_argument("at least one partition is required");
  ClusterSet set;
  for (const auto& spec : specs) {
    auto part = build_partition(pool, spec.column, spec.bins);
    for (auto& c : part) set.clusters_.push_back(std::move(c));
  }
  for (std::size_t ci = 0; ci < set.clusters_.size(); ++ci)
    for (SampleId id : set.clusters_[ci].members_)
      set.membership_[id].push_back(static_cast<std::uint32_t>(ci));
  return set;
}

std::size_t ClusterSet::membership_count(SampleId id) const {
  auto it = membership_.find(id);
  return it == membership_.end() ? 0 : it->second.size();
}

void ClusterSet::remove_sample(SampleId id) {
  auto it = membership_.find(id);
  if (it == membership_.end())
    throw std::invalid_argument("sample " + std::to_string(id) + " not in any cluster");
  for (std::uint32_t ci : it->second) clusters_[ci].erase(id);
  membership_.erase(it);
}

}  // namespace mabs
