#include "tagrisk/genrecluster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "tagrisk/error.hpp"
#include "tagrisk/log.hpp"
#include "tagrisk/tagfilter.hpp"

namespace tagrisk::genrecluster {

std::vector<std::string> parse_genre_list(std::istream& in) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto pos = line.find_first_not_of(" \t");
    if (pos != std::string::npos && line[pos] == '#') continue;
    auto tag = tagfilter::normalize(line);
    if (!tag.empty() && seen.insert(tag).second) out.push_back(std::move(tag));
  }
  return out;
}

std::vector<std::string> load_genre_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open genre list " + path.string());
  return parse_genre_list(in);
}

TermDocMatrix build_term_doc(std::span<const TrackRecord> tracks,
                             std::span<const std::string> genre_list) {
  std::set<std::string> genres;
  for (const auto& g : genre_list) genres.insert(tagfilter::normalize(g));

  std::vector<std::set<std::string>> present(tracks.size());
  std::set<std::string> used;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    for (const auto& t : tracks[i].tags) {
      if (t.weight <= 0) continue;
      auto tag = tagfilter::normalize(t.tag);
      if (genres.contains(tag)) {
        used.insert(tag);
        present[i].insert(std::move(tag));
      }
    }
  }
  if (used.empty()) throw DataError("no genre tag from the genre list occurs on any track");

  TermDocMatrix m;
  m.tags.assign(used.begin(), used.end());
  for (const auto& g : genres) {
    if (!used.contains(g)) m.dropped.push_back(g);
  }
  if (!m.dropped.empty()) {
    log::warn(std::to_string(m.dropped.size()) + " genre tags occur on no track and were dropped");
  }
  std::map<std::string, std::size_t> col;
  for (std::size_t j = 0; j < m.tags.size(); ++j) col[m.tags[j]] = j;
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    m.tracks.push_back(tracks[i].track_id);
    std::vector<std::uint8_t> row(m.tags.size(), 0);
    for (const auto& tag : present[i]) row[col.at(tag)] = 1;
    m.cells.push_back(std::move(row));
  }
  return m;
}

PairCounts pair_counts(const TermDocMatrix& m, std::size_t i, std::size_t j) {
  PairCounts k;
  for (const auto& row : m.cells) {
    const bool x = row.at(i) != 0, y = row.at(j) != 0;
    if (x && y) ++k.a;
    else if (x) ++k.b;
    else if (y) ++k.c;
    else ++k.d;
  }
  return k;
}

double similarity_coefficient(const PairCounts& k) {
  const double a = static_cast<double>(k.a), b = static_cast<double>(k.b);
  const double c = static_cast<double>(k.c), d = static_cast<double>(k.d);
  const double denom = (a + b) * (a + c) * (b + d) * (c + d);
  if (denom <= 0.0) return 0.0;
  return std::min(1.0, a * d / std::sqrt(denom));
}

SimilarityMatrix similarity(const TermDocMatrix& m) {
  const std::size_t p = m.cols();
  if (p < 2) throw ValidationError("similarity needs at least two genre tags");
  const auto n = static_cast<long>(m.rows());

  std::vector<long> count(p, 0);
  std::vector<std::vector<long>> co(p, std::vector<long>(p, 0));
  std::vector<std::size_t> on;
  for (const auto& row : m.cells) {
    on.clear();
    for (std::size_t j = 0; j < p; ++j) {
      if (row[j]) on.push_back(j);
    }
    for (std::size_t x = 0; x < on.size(); ++x) {
      ++count[on[x]];
      for (std::size_t y = x + 1; y < on.size(); ++y) ++co[on[x]][on[y]];
    }
  }

  SimilarityMatrix s;
  s.tags = m.tags;
  s.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < p; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    s.values(ii, ii) = count[i] > 0 ? 1.0 : 0.0;
    for (std::size_t j = i + 1; j < p; ++j) {
      PairCounts k;
      k.a = co[i][j];
      k.b = count[i] - k.a;
      k.c = count[j] - k.a;
      k.d = n - k.a - k.b - k.c;
      const double v = similarity_coefficient(k);
      const auto jj = static_cast<Eigen::Index>(j);
      s.values(ii, jj) = v;
      s.values(jj, ii) = v;
    }
  }
  return s;
}

std::string_view to_string(Dissimilarity d) {
  return d == Dissimilarity::OneMinus ? "one_minus" : "sqrt_one_minus";
}

Dissimilarity dissimilarity_from_string(std::string_view text) {
  if (text == "one_minus") return Dissimilarity::OneMinus;
  if (text == "sqrt_one_minus") return Dissimilarity::SqrtOneMinus;
  throw ConfigError("unknown dissimilarity '" + std::string(text) + "'");
}

Eigen::MatrixXd dissimilarity(const SimilarityMatrix& s, Dissimilarity kind) {
  Eigen::MatrixXd d = (1.0 - s.values.array()).max(0.0).matrix();
  if (kind == Dissimilarity::SqrtOneMinus) d = d.array().sqrt().matrix();
  d.diagonal().setZero();
  return d;
}

Dendrogram ward_linkage(const Eigen::MatrixXd& dissim) {
  const auto n = static_cast<std::size_t>(dissim.rows());
  if (dissim.rows() != dissim.cols()) throw ValidationError("dissimilarity matrix is not square");
  if (n < 2) throw ValidationError("Ward linkage needs at least two leaves");

  // Slot k holds the active cluster with node id ids[k].
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  std::vector<std::size_t> sizes(n, 1);
  std::vector<bool> active(n, true);
  Eigen::MatrixXd d2 = dissim.array().square().matrix();

  Dendrogram tree;
  tree.leaves = n;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    std::pair<int, int> best_key{std::numeric_limits<int>::max(), 0};
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[j]) continue;
        const double v = d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const std::pair<int, int> key{std::min(ids[i], ids[j]), std::max(ids[i], ids[j])};
        if (v < best || (v == best && key < best_key)) {
          best = v;
          best_key = key;
          bi = i;
          bj = j;
        }
      }
    }
    const double ni = static_cast<double>(sizes[bi]), nj = static_cast<double>(sizes[bj]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const auto kk = static_cast<Eigen::Index>(k);
      const auto ii = static_cast<Eigen::Index>(bi), jj = static_cast<Eigen::Index>(bj);
      const double nk = static_cast<double>(sizes[k]);
      const double v =
          ((ni + nk) * d2(kk, ii) + (nj + nk) * d2(kk, jj) - nk * best) / (ni + nj + nk);
      d2(kk, ii) = v;
      d2(ii, kk) = v;
    }
    tree.merges.push_back(
        {best_key.first, best_key.second, std::sqrt(std::max(0.0, best)), sizes[bi] + sizes[bj]});
    ids[bi] = static_cast<int>(n + step);
    sizes[bi] += sizes[bj];
    active[bj] = false;
  }
  return tree;
}

namespace {

struct Tree {
  std::size_t n;
  std::vector<int> left, right;  // by node id; -1 for leaves
  std::vector<double> height;
  std::vector<int> parent;

  explicit Tree(const Dendrogram& d) : n(d.leaves) {
    const std::size_t total = n + d.merges.size();
    left.assign(total, -1);
    right.assign(total, -1);
    height.assign(total, 0.0);
    parent.assign(total, -1);
    for (std::size_t k = 0; k < d.merges.size(); ++k) {
      const auto& m = d.merges[k];
      const auto id = n + k;
      if (m.left < 0 || m.right < 0 || static_cast<std::size_t>(m.left) >= id ||
          static_cast<std::size_t>(m.right) >= id || parent[m.left] != -1 ||
          parent[m.right] != -1) {
        throw ValidationError("malformed dendrogram at merge " + std::to_string(k));
      }
      left[id] = m.left;
      right[id] = m.right;
      height[id] = m.height;
      parent[m.left] = static_cast<int>(id);
      parent[m.right] = static_cast<int>(id);
    }
  }

  bool is_leaf(int v) const { return static_cast<std::size_t>(v) < n; }

  void leaves_of(int v, std::vector<int>& out) const {
    if (is_leaf(v)) {
      out.push_back(v);
      return;
    }
    leaves_of(left[v], out);
    leaves_of(right[v], out);
  }

  void internal_heights(int v, std::vector<double>& out) const {
    if (is_leaf(v)) return;
    out.push_back(height[v]);
    internal_heights(left[v], out);
    internal_heights(right[v], out);
  }

  /// Maximal subtrees under v whose root height is at most h.
  void branches(int v, double h, std::vector<int>& out) const {
    if (is_leaf(v) || height[v] <= h) {
      out.push_back(v);
      return;
    }
    branches(left[v], h, out);
    branches(right[v], h, out);
  }

  double lca_height(int a, int b) const {
    std::set<int> up;
    for (int v = a; v != -1; v = parent[v]) up.insert(v);
    for (int v = b; v != -1; v = parent[v]) {
      if (up.contains(v)) return height[v];
    }
    return std::numeric_limits<double>::infinity();
  }
};

class Cutter {
 public:
  Cutter(const Tree& t, const CutConfig& c) : t_(t), c_(c) {}

  /// Appends the clusters (as leaf lists) found under v. The whole subtree is
  /// returned as one cluster when it does not split.
  void cut(int v, std::vector<std::vector<int>>& clusters) const {
    std::vector<double> hs;
    t_.internal_heights(v, hs);
    if (hs.empty()) {
      clusters.push_back({v});
      return;
    }
    const double mean = std::accumulate(hs.begin(), hs.end(), 0.0) / static_cast<double>(hs.size());
    const double top = *std::max_element(hs.begin(), hs.end());
    const double h = c_.deep_split ? mean : 0.5 * (mean + top);

    std::vector<int> parts;
    t_.branches(v, h, parts);
    std::vector<std::vector<int>> valid, small;
    double tallest = 0.0;
    for (int b : parts) {
      std::vector<int> leaves;
      t_.leaves_of(b, leaves);
      if (leaves.size() >= c_.min_cluster_size) {
        tallest = std::max(tallest, t_.height[b]);
        valid.push_back(std::move(leaves));
      } else {
        small.push_back(std::move(leaves));
      }
    }
    bool split = valid.size() >= 2;
    if (split) {
      double lowest_join = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < valid.size(); ++i) {
        for (std::size_t j = i + 1; j < valid.size(); ++j) {
          lowest_join = std::min(lowest_join, t_.lca_height(valid[i][0], valid[j][0]));
        }
      }
      split = lowest_join >= c_.split_ratio * tallest;
    }
    if (!split) {
      std::vector<int> all;
      t_.leaves_of(v, all);
      clusters.push_back(std::move(all));
      return;
    }

    std::vector<std::vector<int>> found;
    for (int b : parts) {
      std::vector<int> leaves;
      t_.leaves_of(b, leaves);
      if (leaves.size() >= c_.min_cluster_size) cut(b, found);
    }
    for (const auto& s : small) {
      if (s.size() < 2) continue;  // singletons stay unassigned
      std::size_t best = 0;
      double best_h = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < found.size(); ++k) {
        double hk = std::numeric_limits<double>::infinity();
        for (int leaf : found[k]) hk = std::min(hk, t_.lca_height(s[0], leaf));
        if (hk < best_h) {
          best_h = hk;
          best = k;
        }
      }
      found[best].insert(found[best].end(), s.begin(), s.end());
    }
    for (auto& f : found) clusters.push_back(std::move(f));
  }

 private:
  const Tree& t_;
  const CutConfig& c_;
};

}  // namespace

std::vector<int> dynamic_cut(const Dendrogram& tree, const CutConfig& config) {
  if (config.min_cluster_size < 1) throw ConfigError("min_cluster_size must be at least 1");
  if (tree.leaves == 0) throw ValidationError("empty dendrogram");
  if (tree.merges.size() + 1 != tree.leaves) {
    throw ValidationError("dendrogram needs n - 1 merges for n leaves");
  }
  const Tree t(tree);
  const int root = static_cast<int>(tree.leaves + tree.merges.size() - 1);

  std::vector<std::vector<int>> clusters;
  Cutter(t, config).cut(root, clusters);
  for (auto& c : clusters) std::sort(c.begin(), c.end());
  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  std::vector<int> ids(tree.leaves, 0);
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    for (int leaf : clusters[k]) ids[leaf] = static_cast<int>(k + 1);
  }
  return ids;
}

GenreClusterSet make_cluster_set(std::span<const std::string> tags, std::span<const int> ids) {
  if (tags.size() != ids.size()) throw ValidationError("cluster ids do not match the tag count");
  GenreClusterSet set;
  std::map<int, std::vector<std::string>> members;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (ids[i] <= 0) {
      set.unassigned.push_back(tags[i]);
      continue;
    }
    members[ids[i]].push_back(tags[i]);
    set.assignment[tags[i]] = ids[i];
  }
  for (auto& [id, m] : members) set.clusters.push_back({id, std::move(m), {}, {}});
  return set;
}

void label_clusters(GenreClusterSet& clusters, const SimilarityMatrix& s, std::size_t k) {
  std::map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < s.tags.size(); ++i) index[s.tags[i]] = static_cast<Eigen::Index>(i);

  for (auto& c : clusters.clusters) {
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& t : c.members) {
      const auto it = index.find(t);
      if (it == index.end()) throw ValidationError("cluster member '" + t + "' has no similarity row");
      double sum = 0.0;
      for (const auto& o : c.members) {
        if (o != t) sum += s.values(it->second, index.at(o));
      }
      const double mean = c.members.size() > 1 ? sum / static_cast<double>(c.members.size() - 1)
                                               : 1.0;
      scored.emplace_back(mean, t);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    c.core.clear();
    c.label.clear();
    for (std::size_t i = 0; i < scored.size() && i < k; ++i) {
      c.core.push_back(scored[i].second);
      c.label += (i ? "/" : "") + scored[i].second;
    }
  }
}

std::map<std::string, std::string> cluster_classes(const GenreClusterSet& clusters) {
  std::map<std::string, std::string> out;
  for (const auto& c : clusters.clusters) {
    for (const auto& m : c.members) out[m] = c.label;
  }
  return out;
}

}  // namespace tagrisk::genrecluster
