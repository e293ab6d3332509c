#include "asgd/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

namespace asgd {

void DataSet::add(std::span<const double> features, int label) {
  if (features.size() != dim_)
    throw DataError("sample dimension " + std::to_string(features.size()) +
                    " does not match data set dimension " + std::to_string(dim_));
  for (double v : features)
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  values_.insert(values_.end(), features.begin(), features.end());
  labels_.push_back(label);
}

void DataSet::resize_dim(std::size_t dim) {
  if (dim < dim_) throw DataError("cannot shrink data set dimension");
  if (dim == dim_) return;
  std::vector<double> out(labels_.size() * dim, 0.0);
  for (std::size_t r = 0; r < labels_.size(); ++r)
    std::copy_n(values_.begin() + static_cast<std::ptrdiff_t>(r * dim_), dim_,
                out.begin() + static_cast<std::ptrdiff_t>(r * dim));
  values_ = std::move(out);
  dim_ = dim;
}

namespace {

struct SparseRow {
  std::vector<std::pair<std::size_t, double>> entries;
  int label = 0;
};

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw DataError("libsvm line " + std::to_string(line) + ": " + what);
}

double parse_double(std::string_view tok, std::size_t line) {
  double v = 0;
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  if (!tok.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) parse_fail(line, "bad number '" + std::string(tok) + "'");
  return v;
}

}  // namespace

DataSet parse_libsvm(std::istream& in, std::string name) {
  std::vector<SparseRow> rows;
  std::size_t max_index = 0;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
    std::istringstream ls(text);
    std::string tok;
    if (!(ls >> tok)) continue;
    SparseRow row;
    const double y = parse_double(tok, line_no);
    if (y == 1.0)
      row.label = 1;
    else if (y == -1.0 || y == 0.0)
      row.label = 0;
    else
      parse_fail(line_no, "label must be -1, 0 or +1");
    std::size_t prev = 0;
    while (ls >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0) parse_fail(line_no, "expected idx:value");
      std::size_t idx = 0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + colon, idx);
      if (ec != std::errc() || ptr != tok.data() + colon || idx == 0)
        parse_fail(line_no, "bad feature index '" + tok.substr(0, colon) + "'");
      if (idx <= prev) parse_fail(line_no, "feature indices must be ascending");
      prev = idx;
      row.entries.emplace_back(idx, parse_double(std::string_view(tok).substr(colon + 1), line_no));
    }
    max_index = std::max(max_index, prev);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("libsvm input is empty");
  DataSet ds(std::move(name), max_index);
  std::vector<double> dense(max_index);
  for (const auto& row : rows) {
    std::fill(dense.begin(), dense.end(), 0.0);
    for (auto [idx, v] : row.entries) dense[idx - 1] = v;
    ds.add(dense, row.label);
  }
  return ds;
}

DataSet load_libsvm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  auto slash = path.find_last_of('/');
  return parse_libsvm(in, slash == std::string::npos ? path : path.substr(slash + 1));
}

// ---------------------------------------------------------------------------

namespace {

void shuffle(std::vector<std::size_t>& v, CounterRng& rng) {
  for (std::size_t k = v.size(); k > 1; --k) {
    const auto j = static_cast<std::size_t>(rng.next_below(k));
    std::swap(v[k - 1], v[j]);
  }
}

std::vector<double> normalized(std::vector<double> p, int n) {
  if (p.empty()) return std::vector<double>(static_cast<std::size_t>(n), 1.0 / n);
  if (static_cast<int>(p.size()) != n)
    throw std::invalid_argument("probability vector length " + std::to_string(p.size()) +
                                " does not match n = " + std::to_string(n));
  double total = 0;
  for (double v : p) {
    if (!(v >= 0) || !std::isfinite(v)) throw std::invalid_argument("probabilities must be >= 0");
    total += v;
  }
  if (!(total > 0)) throw std::invalid_argument("probabilities must not all be zero");
  for (double& v : p) v /= total;
  return p;
}

// Splits `total` into parts proportional to w, largest remainder first.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& w) {
  std::vector<std::size_t> out(w.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t c = 0; c < w.size(); ++c) {
    const double exact = w[c] * static_cast<double>(total);
    out[c] = static_cast<std::size_t>(std::floor(exact));
    used += out[c];
    rem.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(rem.begin(), rem.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < total; ++k, ++used) out[rem[k % rem.size()].second]++;
  return out;
}

}  // namespace

Partition partition(const DataSet& ds, int n, PartitionMode mode, std::vector<double> p,
                    std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("partition: n must be >= 1");
  if (ds.empty()) throw DataError("partition: data set is empty");
  Partition part;
  part.mode = mode;
  part.locals.resize(static_cast<std::size_t>(n));
  CounterRng rng(seed, Stream::Partition);

  if (n == 1) {
    part.locals[0].resize(ds.size());
    std::iota(part.locals[0].begin(), part.locals[0].end(), std::size_t{0});
    part.p = {1.0};
    return part;
  }

  if (mode == PartitionMode::Unbiased) {
    part.p = normalized(std::move(p), n);
    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
    const auto sizes = apportion(ds.size(), part.p);
    std::size_t pos = 0;
    for (int c = 0; c < n; ++c) {
      auto& local = part.locals[static_cast<std::size_t>(c)];
      if (sizes[static_cast<std::size_t>(c)] == 0)
        throw DataError("partition: node " + std::to_string(c + 1) + " would be empty");
      local.assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                   order.begin() + static_cast<std::ptrdiff_t>(pos + sizes[static_cast<std::size_t>(c)]));
      pos += sizes[static_cast<std::size_t>(c)];
    }
    return part;
  }

  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < ds.size(); ++r) groups[ds.labels()[r]].push_back(r);
  const int g = static_cast<int>(groups.size());
  std::vector<std::vector<std::size_t>> by_label;
  for (auto& [label, idx] : groups) by_label.push_back(std::move(idx));

  if (n <= g) {
    for (int l = 0; l < g; ++l) {
      auto& local = part.locals[static_cast<std::size_t>(l % n)];
      const auto& idx = by_label[static_cast<std::size_t>(l)];
      local.insert(local.end(), idx.begin(), idx.end());
    }
  } else {
    for (int l = 0; l < g; ++l) {
      std::vector<int> owners;
      for (int c = l; c < n; c += g) owners.push_back(c);
      auto idx = by_label[static_cast<std::size_t>(l)];
      if (idx.size() < owners.size())
        throw DataError("partition: label group too small for " + std::to_string(owners.size()) +
                        " nodes");
      shuffle(idx, rng);
      const auto sizes = apportion(idx.size(), std::vector<double>(owners.size(), 1.0 / static_cast<double>(owners.size())));
      std::size_t pos = 0;
      for (std::size_t o = 0; o < owners.size(); ++o) {
        auto& local = part.locals[static_cast<std::size_t>(owners[o])];
        local.assign(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                     idx.begin() + static_cast<std::ptrdiff_t>(pos + sizes[o]));
        pos += sizes[o];
      }
    }
  }
  for (int c = 0; c < n; ++c)
    if (part.locals[static_cast<std::size_t>(c)].empty())
      throw DataError("partition: node " + std::to_string(c + 1) + " has no data");
  if (p.empty()) {
    for (const auto& local : part.locals)
      part.p.push_back(static_cast<double>(local.size()) / static_cast<double>(ds.size()));
  } else {
    part.p = normalized(std::move(p), n);
  }
  return part;
}

// ---------------------------------------------------------------------------

std::int64_t AssignmentTable::offset(std::int64_t i) const {
  if (prefix_.size() != rows.size() + 1) {
    std::int64_t total = 0;
    for (std::int64_t j = 0; j < i; ++j) total += row_size(j);
    return total;
  }
  return prefix_[static_cast<std::size_t>(i)];
}

std::int64_t AssignmentTable::total() const { return offset(rounds()); }

void AssignmentTable::rebuild_index() {
  prefix_.assign(rows.size() + 1, 0);
  for (std::size_t i = 0; i < rows.size(); ++i)
    prefix_[i + 1] = prefix_[i] + static_cast<std::int64_t>(rows[i].size());
}

AssignmentTable build_assignment(const SampleSchedule& sched, std::span<const double> p, int n,
                                 std::int64_t rounds, std::uint64_t seed,
                                 bool deterministic_split) {
  if (rounds < 1) throw std::invalid_argument("build_assignment: rounds must be >= 1");
  const auto probs = normalized(std::vector<double>(p.begin(), p.end()), n);
  std::vector<double> cumulative(probs.size());
  std::partial_sum(probs.begin(), probs.end(), cumulative.begin());

  AssignmentTable table;
  table.seed = seed;
  table.n = n;
  table.rows.resize(static_cast<std::size_t>(rounds));
  CounterRng rng(seed, Stream::Assignment);
  for (std::int64_t i = 0; i < rounds; ++i) {
    const auto s = static_cast<std::size_t>(sched.size(i));
    auto& row = table.rows[static_cast<std::size_t>(i)];
    row.reserve(s);
    if (n == 1) {
      row.assign(s, 1);
    } else if (deterministic_split) {
      const auto counts = apportion(s, probs);
      for (int c = 0; c < n; ++c) row.insert(row.end(), counts[static_cast<std::size_t>(c)], c + 1);
      for (std::size_t k = row.size(); k > 1; --k)
        std::swap(row[k - 1], row[static_cast<std::size_t>(rng.next_below(k))]);
    } else {
      for (std::size_t t = 0; t < s; ++t)
        row.push_back(static_cast<int>(rng.next_categorical(cumulative)) + 1);
    }
  }
  table.rebuild_index();
  return table;
}

void truncate_to_budget(AssignmentTable& table, std::int64_t budget) {
  if (budget < 0) throw std::invalid_argument("budget must be >= 0");
  std::int64_t used = 0;
  std::size_t keep = 0;
  for (; keep < table.rows.size() && used < budget; ++keep) {
    auto& row = table.rows[keep];
    const auto room = budget - used;
    if (static_cast<std::int64_t>(row.size()) > room) row.resize(static_cast<std::size_t>(room));
    used += static_cast<std::int64_t>(row.size());
  }
  table.rows.resize(keep);
  table.rebuild_index();
}

std::int64_t per_node_sizes(const AssignmentTable& table, std::int64_t i, int c) {
  if (i < 0 || i >= table.rounds()) return 0;
  const auto& row = table.rows[static_cast<std::size_t>(i)];
  return std::count(row.begin(), row.end(), c);
}

std::int64_t per_node_sizes(const SampleSchedule&, const AssignmentTable& table, std::int64_t i,
                            int c) {
  return per_node_sizes(table, i, c);
}

std::size_t draw_sample_index(std::span<const std::size_t> local, CounterRng& rng) {
  if (local.empty()) throw DataError("cannot draw from an empty local data set");
  return local[static_cast<std::size_t>(rng.next_below(local.size()))];
}

SampleRef draw_sample(const DataSet& ds, std::span<const std::size_t> local, CounterRng& rng) {
  return ds[draw_sample_index(local, rng)];
}

}  // namespace asgd
