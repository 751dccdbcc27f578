#pragma once

// Plain-text corpus formats.
//
//   edges.tsv   one edge per line, `t u v` or `t u v window` (tab or space
//               separated), t non-decreasing; '#' starts a comment
//   meta.txt    key=value lines (n, t, seed, alpha, model, schedule, ...)
//   truth.txt   one change snapshot index per line
//
// A snapshot directory without edges.tsv holds one snapshot per file, each
// line `u v`, taken in file-name order (numeric when every stem is a number).

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "edgemon/types.hpp"

namespace edgemon {

namespace fs = std::filesystem;

using Meta = std::map<std::string, std::string>;

inline constexpr const char* kEdgesFile = "edges.tsv";
inline constexpr const char* kMetaFile = "meta.txt";
inline constexpr const char* kTruthFile = "truth.txt";

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i == line.size()) break;
    const std::size_t j = line.find_first_of(" \t\r", i);
    const std::size_t end = j == std::string_view::npos ? line.size() : j;
    out.push_back(line.substr(i, end - i));
    i = end;
  }
  return out;
}

inline std::string_view strip_comment(std::string_view line) {
  const auto h = line.find('#');
  return h == std::string_view::npos ? line : line.substr(0, h);
}

template <class Int>
Int parse_int(std::string_view field, const std::string& where) {
  Int x{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw DataError(where + ": expected an integer, got '" + std::string(field) + "'");
  return x;
}

inline std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  return in;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Writers

inline void write_meta(const fs::path& path, const Meta& meta) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& [k, v] : meta) out << k << '=' << v << '\n';
}

inline Meta read_meta(const fs::path& path) {
  auto in = detail::open_input(path);
  Meta meta;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const auto body = detail::strip_comment(line);
    if (detail::split_fields(body).empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos)
      throw DataError(path.string() + ":" + std::to_string(no) + ": expected key=value");
    auto trim = [](std::string_view s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string_view::npos ? std::string() : std::string(s.substr(a, b - a + 1));
    };
    meta[trim(body.substr(0, eq))] = trim(body.substr(eq + 1));
  }
  return meta;
}

inline void write_index_list(const fs::path& path, const std::vector<std::int64_t>& values) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (auto v : values) out << v << '\n';
}

inline std::vector<std::int64_t> read_index_list(const fs::path& path) {
  auto in = detail::open_input(path);
  std::vector<std::int64_t> out;
  std::string line;
  for (std::size_t no = 1; std::getline(in, line); ++no) {
    const auto f = detail::split_fields(detail::strip_comment(line));
    if (f.empty()) continue;
    if (f.size() != 1) throw DataError(path.string() + ":" + std::to_string(no) + ": expected one index per line");
    out.push_back(detail::parse_int<std::int64_t>(f[0], path.string() + ":" + std::to_string(no)));
  }
  return out;
}

/// Appends snapshots to an edge-list stream as `t<TAB>u<TAB>v`.
class EdgeListWriter {
 public:
  explicit EdgeListWriter(const fs::path& path) : out_(path), path_(path) {
    if (!out_) throw DataError("cannot write " + path.string());
  }

  void write(const Snapshot& s) {
    for (const auto& e : s.edges) out_ << s.t << '\t' << e.u << '\t' << e.v << '\n';
    if (!out_) throw DataError("write failed on " + path_.string());
  }

 private:
  std::ofstream out_;
  fs::path path_;
};

// ---------------------------------------------------------------------------
// Node labels

/// Dense re-indexing of integer node labels in increasing label order.
class NodeMap {
 public:
  NodeMap() = default;

  static NodeMap from_labels(std::vector<std::int64_t> labels) {
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    NodeMap m;
    for (std::size_t i = 0; i < labels.size(); ++i) m.index_.emplace(labels[i], static_cast<NodeIndex>(i));
    m.labels_ = std::move(labels);
    return m;
  }

  /// Node-map file: one label per line, or `label index` pairs; indices
  /// default to line order and must form 0..N-1.
  static NodeMap read(const fs::path& path) {
    auto in = detail::open_input(path);
    std::vector<std::pair<std::int64_t, std::int64_t>> rows;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
      const auto f = detail::split_fields(detail::strip_comment(line));
      if (f.empty()) continue;
      const std::string where = path.string() + ":" + std::to_string(no);
      if (f.size() > 2) throw DataError(where + ": expected `label` or `label index`");
      const auto label = detail::parse_int<std::int64_t>(f[0], where);
      const auto idx = f.size() == 2 ? detail::parse_int<std::int64_t>(f[1], where) : static_cast<std::int64_t>(rows.size());
      rows.emplace_back(label, idx);
    }
    if (rows.empty()) throw DataError(path.string() + ": empty node map");
    NodeMap m;
    m.labels_.assign(rows.size(), 0);
    std::vector<bool> seen(rows.size(), false);
    for (const auto& [label, idx] : rows) {
      if (idx < 0 || static_cast<std::size_t>(idx) >= rows.size() || seen[static_cast<std::size_t>(idx)])
        throw DataError(path.string() + ": node indices must be a permutation of 0..N-1");
      if (!m.index_.emplace(label, static_cast<NodeIndex>(idx)).second)
        throw DataError(path.string() + ": duplicate label " + std::to_string(label));
      seen[static_cast<std::size_t>(idx)] = true;
      m.labels_[static_cast<std::size_t>(idx)] = label;
    }
    return m;
  }

  std::uint32_t size() const { return static_cast<std::uint32_t>(labels_.size()); }
  std::int64_t label(NodeIndex i) const { return labels_.at(i); }

  std::optional<NodeIndex> find(std::int64_t label) const {
    auto it = index_.find(label);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::int64_t> labels_;
  std::unordered_map<std::int64_t, NodeIndex> index_;
};

// ---------------------------------------------------------------------------
// Ingestion

enum class Grouping { kFixed, kWindowColumn };

struct IngestOptions {
  Grouping grouping = Grouping::kFixed;
  std::optional<fs::path> node_map;  ///< single-pass streaming with known labels
  /// Identity labels 0..n-1 (a generated corpus); 0 means derive from the data.
  std::uint32_t identity_nodes = 0;
  /// When set, snapshots are the integer times 1..length and times without
  /// records become empty snapshots.
  std::optional<std::int64_t> length;
};

/// One parsed snapshot together with its explicit window key, if any.
struct KeyedSnapshot {
  Snapshot snapshot;
  std::optional<std::int64_t> window;
};

/// Streams snapshots from an edge-list file. Records of one time key form
/// one snapshot; duplicate edges collapse, self-loops and decreasing keys
/// are errors reported with their line number.
class SnapshotReader {
 public:
  SnapshotReader(fs::path path, const IngestOptions& opt) : path_(std::move(path)), opt_(opt) {
    if (!fs::exists(path_)) throw DataError("input not found: " + path_.string());
    detail::require(!(opt_.length && opt_.grouping == Grouping::kWindowColumn),
                    "a declared length cannot be combined with a window column");
    if (opt_.node_map) {
      nodes_ = NodeMap::read(*opt_.node_map);
    } else if (opt_.identity_nodes == 0) {
      nodes_ = NodeMap::from_labels(scan_labels());
      if (nodes_.size() == 0) throw DataError(path_.string() + ": no edge records");
    }
    in_ = detail::open_input(path_);
  }

  std::uint32_t nodes() const { return opt_.identity_nodes ? opt_.identity_nodes : nodes_.size(); }
  const NodeMap& node_map() const { return nodes_; }

  std::optional<KeyedSnapshot> next() {
    if (opt_.length) return next_dense();
    if (!pending_ && !read_record()) {
      if (produced_ == 0) throw DataError(path_.string() + ": no edge records");
      return std::nullopt;
    }
    KeyedSnapshot out;
    out.snapshot.t = pending_->t;
    out.window = pending_->window;
    while (pending_ && pending_->t == out.snapshot.t) {
      if (pending_->window != out.window)
        throw DataError(where(pending_->line) + ": records of one snapshot carry different window keys");
      out.snapshot.edges.push_back(pending_->edge);
      pending_.reset();
      read_record();
    }
    finish(out);
    return out;
  }

 private:
  struct Record {
    std::int64_t t;
    DyadId edge;
    std::optional<std::int64_t> window;
    std::size_t line;
  };

  std::string where(std::size_t line) const { return path_.string() + ":" + std::to_string(line); }

  std::vector<std::int64_t> scan_labels() {
    auto in = detail::open_input(path_);
    std::vector<std::int64_t> labels;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
      const auto f = detail::split_fields(detail::strip_comment(line));
      if (f.empty()) continue;
      check_arity(f, no);
      labels.push_back(detail::parse_int<std::int64_t>(f[1], where(no)));
      labels.push_back(detail::parse_int<std::int64_t>(f[2], where(no)));
      if (labels.size() > (std::size_t{1} << 16)) {
        std::sort(labels.begin(), labels.end());
        labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
      }
    }
    return labels;
  }

  void check_arity(const std::vector<std::string_view>& f, std::size_t no) const {
    const std::size_t want = opt_.grouping == Grouping::kWindowColumn ? 4 : 3;
    if (f.size() != want)
      throw DataError(where(no) + ": expected " + std::to_string(want) + " fields (" +
                      (want == 4 ? "t u v window" : "t u v") + "), got " + std::to_string(f.size()));
  }

  NodeIndex resolve(std::int64_t label, std::size_t no) const {
    if (opt_.identity_nodes) {
      if (label < 0 || label >= opt_.identity_nodes)
        throw DataError(where(no) + ": node " + std::to_string(label) + " outside 0.." +
                        std::to_string(opt_.identity_nodes - 1));
      return static_cast<NodeIndex>(label);
    }
    auto i = nodes_.find(label);
    if (!i) throw DataError(where(no) + ": node label " + std::to_string(label) + " is not in the node map");
    return *i;
  }

  bool read_record() {
    std::string line;
    while (std::getline(in_, line)) {
      const std::size_t no = ++line_no_;
      const auto f = detail::split_fields(detail::strip_comment(line));
      if (f.empty()) continue;
      check_arity(f, no);
      Record r;
      r.line = no;
      r.t = detail::parse_int<std::int64_t>(f[0], where(no));
      const auto a = detail::parse_int<std::int64_t>(f[1], where(no));
      const auto b = detail::parse_int<std::int64_t>(f[2], where(no));
      if (a == b) throw DataError(where(no) + ": self-loop on node " + std::to_string(a));
      r.edge = DyadId(resolve(a, no), resolve(b, no));
      if (opt_.grouping == Grouping::kWindowColumn) r.window = detail::parse_int<std::int64_t>(f[3], where(no));
      if (last_t_ && r.t < *last_t_) throw DataError(where(no) + ": time keys must be non-decreasing");
      if (last_window_ && r.window && *r.window < *last_window_)
        throw DataError(where(no) + ": window keys must be non-decreasing");
      last_t_ = r.t;
      if (r.window) last_window_ = r.window;
      pending_ = r;
      return true;
    }
    return false;
  }

  void finish(KeyedSnapshot& s) {
    normalize_edges(s.snapshot.edges, nodes());
    ++produced_;
  }

  // Times 1..length, with empty snapshots where the file has no records.
  std::optional<KeyedSnapshot> next_dense() {
    if (next_t_ > *opt_.length) {
      if (pending_ || read_record())
        throw DataError(where(pending_->line) + ": time " + std::to_string(pending_->t) + " exceeds the declared length " +
                        std::to_string(*opt_.length));
      return std::nullopt;
    }
    if (!pending_) read_record();
    if (pending_ && pending_->t < next_t_)
      throw DataError(where(pending_->line) + ": time " + std::to_string(pending_->t) + " outside 1.." +
                      std::to_string(*opt_.length));
    KeyedSnapshot out;
    out.snapshot.t = next_t_;
    while (pending_ && pending_->t == next_t_) {
      out.snapshot.edges.push_back(pending_->edge);
      pending_.reset();
      read_record();
    }
    ++next_t_;
    finish(out);
    return out;
  }

  fs::path path_;
  IngestOptions opt_;
  NodeMap nodes_;
  std::ifstream in_;
  std::optional<Record> pending_;
  std::optional<std::int64_t> last_t_, last_window_;
  std::size_t line_no_ = 0;
  std::size_t produced_ = 0;
  std::int64_t next_t_ = 1;
};

/// A directory with one snapshot per file (`u v` lines). Labels are unioned
/// across all files unless a node map is given.
class SnapshotDirectoryReader {
 public:
  SnapshotDirectoryReader(const fs::path& dir, const IngestOptions& opt) : opt_(opt) {
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename().string().front() != '.') files_.push_back(e.path());
    if (files_.empty()) throw DataError(dir.string() + ": no snapshot files");
    sort_files();
    if (opt_.node_map) {
      nodes_ = NodeMap::read(*opt_.node_map);
    } else {
      std::vector<std::int64_t> labels;
      for (const auto& f : files_) for_each_pair(f, [&](std::int64_t a, std::int64_t b, std::size_t) {
          labels.push_back(a);
          labels.push_back(b);
        });
      nodes_ = NodeMap::from_labels(std::move(labels));
      if (nodes_.size() == 0) throw DataError(dir.string() + ": no edge records");
    }
  }

  std::uint32_t nodes() const { return nodes_.size(); }
  const NodeMap& node_map() const { return nodes_; }
  const std::vector<fs::path>& files() const { return files_; }

  std::optional<KeyedSnapshot> next() {
    if (pos_ == files_.size()) return std::nullopt;
    const auto& f = files_[pos_++];
    KeyedSnapshot out;
    out.snapshot.t = static_cast<std::int64_t>(pos_);
    for_each_pair(f, [&](std::int64_t a, std::int64_t b, std::size_t no) {
      const std::string where = f.string() + ":" + std::to_string(no);
      if (a == b) throw DataError(where + ": self-loop on node " + std::to_string(a));
      auto i = nodes_.find(a), j = nodes_.find(b);
      if (!i || !j) throw DataError(where + ": node label not in the node map");
      out.snapshot.edges.emplace_back(*i, *j);
    });
    normalize_edges(out.snapshot.edges, nodes());
    return out;
  }

 private:
  template <class F>
  static void for_each_pair(const fs::path& p, F&& f) {
    auto in = detail::open_input(p);
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
      const auto fields = detail::split_fields(detail::strip_comment(line));
      if (fields.empty()) continue;
      const std::string where = p.string() + ":" + std::to_string(no);
      if (fields.size() != 2) throw DataError(where + ": expected two fields (u v)");
      f(detail::parse_int<std::int64_t>(fields[0], where), detail::parse_int<std::int64_t>(fields[1], where), no);
    }
  }

  void sort_files() {
    auto numeric = [](const fs::path& p) -> std::optional<std::int64_t> {
      const auto stem = p.stem().string();
      std::int64_t x{};
      const auto [ptr, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), x);
      if (ec != std::errc() || ptr != stem.data() + stem.size()) return std::nullopt;
      return x;
    };
    const bool all_numeric = std::all_of(files_.begin(), files_.end(), [&](const auto& p) { return numeric(p).has_value(); });
    std::sort(files_.begin(), files_.end(), [&](const fs::path& a, const fs::path& b) {
      if (all_numeric) return *numeric(a) < *numeric(b);
      return a.filename() < b.filename();
    });
  }

  IngestOptions opt_;
  NodeMap nodes_;
  std::vector<fs::path> files_;
  std::size_t pos_ = 0;
};

/// Loads every snapshot of an edge-list file into memory (small inputs, tests).
inline std::vector<Snapshot> read_snapshots(const fs::path& path, const IngestOptions& opt = {}) {
  SnapshotReader r(path, opt);
  std::vector<Snapshot> out;
  while (auto s = r.next()) out.push_back(std::move(s->snapshot));
  return out;
}

}  // namespace edgemon
