#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "asgd/rng.hpp"
#include "asgd/schedules.hpp"

namespace asgd {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A sample owning its dense features; labels are 0 or 1.
struct LabeledSample {
  std::vector<double> features;
  int label = 0;
};

/// Non-owning view of one row of a DataSet.
struct SampleRef {
  std::span<const double> x;
  int label = 0;
};

/// Dense row-major data set.
class DataSet {
 public:
  DataSet() = default;
  DataSet(std::string name, std::size_t dim) : name_(std::move(name)), dim_(dim) {}

  void add(std::span<const double> features, int label);
  void add(const LabeledSample& s) { add(s.features, s.label); }

  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }
  bool empty() const { return labels_.empty(); }
  const std::string& name() const { return name_; }
  void set_name(std::string name) { name_ = std::move(name); }

  SampleRef operator[](std::size_t i) const {
    return {std::span<const double>(values_.data() + i * dim_, dim_), labels_[i]};
  }
  const std::vector<int>& labels() const { return labels_; }

  /// Pads (or rejects truncating) every row to the new dimension.
  void resize_dim(std::size_t dim);

 private:
  std::string name_;
  std::size_t dim_ = 0;
  std::vector<double> values_;
  std::vector<int> labels_;
};

/// Parses LIBSVM text. Labels -1/+1 map to 0/1, 0/1 stay as is.
DataSet parse_libsvm(std::istream& in, std::string name = "");
DataSet load_libsvm(const std::string& path);

enum class PartitionMode { Unbiased, BiasedByLabel };

/// Per-node index sets into a parent DataSet plus the node probabilities p.
struct Partition {
  std::vector<std::vector<std::size_t>> locals;
  PartitionMode mode = PartitionMode::Unbiased;
  std::vector<double> p;

  int nodes() const { return static_cast<int>(locals.size()); }
};

/// Splits ds across n nodes.
///
/// Unbiased: seeded shuffle, then contiguous blocks with sizes proportional to p
/// (n = 1 keeps the original order). BiasedByLabel: label groups assigned
/// round-robin to nodes; when n exceeds the number of labels, each label group is
/// shuffled and split evenly among the nodes that share it.
/// An empty p means uniform for Unbiased and proportional to local sizes for
/// BiasedByLabel.
Partition partition(const DataSet& ds, int n, PartitionMode mode, std::vector<double> p,
                    std::uint64_t seed);

/// Node assignment a(i, t) for rounds [0, rows.size()); node ids are 1-based.
struct AssignmentTable {
  std::vector<std::vector<int>> rows;
  std::uint64_t seed = 0;
  int n = 1;

  std::int64_t rounds() const { return static_cast<std::int64_t>(rows.size()); }
  std::int64_t row_size(std::int64_t i) const {
    return static_cast<std::int64_t>(rows[static_cast<std::size_t>(i)].size());
  }
  /// Sum of row sizes before round i.
  std::int64_t offset(std::int64_t i) const;
  std::int64_t total() const;

  void rebuild_index();

 private:
  std::vector<std::int64_t> prefix_;
};

/// Row i holds s_i categorical draws over p. With deterministic_split each row
/// holds round(p_c s_i) entries of node c (largest remainder), in shuffled order.
AssignmentTable build_assignment(const SampleSchedule& sched, std::span<const double> p, int n,
                                 std::int64_t rounds, std::uint64_t seed,
                                 bool deterministic_split = false);

/// Cuts the table after `budget` entries, dropping later rounds and shortening the
/// round that crosses the budget.
void truncate_to_budget(AssignmentTable& table, std::int64_t budget);

/// s_{i,c}: number of entries of round i assigned to node c.
std::int64_t per_node_sizes(const AssignmentTable& table, std::int64_t i, int c);
std::int64_t per_node_sizes(const SampleSchedule& sched, const AssignmentTable& table,
                            std::int64_t i, int c);

/// Uniform draw from a node's local index set; returns the parent index.
std::size_t draw_sample_index(std::span<const std::size_t> local, CounterRng& rng);
SampleRef draw_sample(const DataSet& ds, std::span<const std::size_t> local, CounterRng& rng);

}  // namespace asgd
