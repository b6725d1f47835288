#include "riskagg/cluster.hpp"

#include <limits>
#include <numeric>

#include "riskagg/error.hpp"

namespace riskagg {

std::vector<Eigen::Index> ClusterAssignment::members(int cluster) const {
  std::vector<Eigen::Index> out;
  for (std::size_t j = 0; j < cluster_of.size(); ++j) {
    if (cluster_of[j] == cluster) out.push_back(static_cast<Eigen::Index>(j));
  }
  return out;
}

void ClusterAssignment::validate() const {
  if (labels.size() != cluster_of.size()) throw Error(Errc::ShapeMismatch, "assignment labels/cluster ids differ in length");
  std::vector<int> sizes(names.size(), 0);
  for (const int c : cluster_of) {
    if (c < 0 || c >= clusters()) throw Error(Errc::OutOfRange, "cluster id out of range");
    ++sizes[static_cast<std::size_t>(c)];
  }
  for (std::size_t c = 0; c < sizes.size(); ++c) {
    if (sizes[c] == 0) throw Error(Errc::InsufficientData, "cluster '" + names[c] + "' is empty");
  }
}

Dendrogram ward_cluster(const StandardizedPanel& panel) { return ward_cluster(panel.values, panel.labels()); }

Dendrogram ward_cluster(const Eigen::MatrixXd& x, std::vector<std::string> labels) {
  const int d = static_cast<int>(x.cols());
  if (d < 2) throw Error(Errc::InsufficientData, "clustering needs at least two columns");
  if (!x.allFinite()) throw Error(Errc::NonFinite, "clustering input contains non-finite values");
  if (labels.empty()) {
    for (int j = 0; j < d; ++j) labels.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<int>(labels.size()) != d) throw Error(Errc::ShapeMismatch, "label count != columns");

  // Slot i holds the cluster whose smallest leaf is i. Dissimilarities are
  // Ward's 2 * n_a n_b / (n_a + n_b) * |c_a - c_b|^2, which starts at the
  // squared distance between singletons and obeys the Lance-Williams update.
  Eigen::MatrixXd dist(d, d);
  for (int i = 0; i < d; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < d; ++j) dist(i, j) = dist(j, i) = (x.col(i) - x.col(j)).squaredNorm();
  }
  std::vector<bool> active(static_cast<std::size_t>(d), true);
  std::vector<int> size(static_cast<std::size_t>(d), 1);
  std::vector<int> node(static_cast<std::size_t>(d));
  std::iota(node.begin(), node.end(), 0);

  Dendrogram out;
  out.labels = std::move(labels);
  out.merges.reserve(static_cast<std::size_t>(d - 1));
  for (int step = 0; step < d - 1; ++step) {
    int bi = -1;
    int bj = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      for (int j = i + 1; j < d; ++j) {
        if (active[static_cast<std::size_t>(j)] && dist(i, j) < best) {
          best = dist(i, j);
          bi = i;
          bj = j;
        }
      }
    }
    const auto ui = static_cast<std::size_t>(bi);
    const auto uj = static_cast<std::size_t>(bj);
    const int ni = size[ui];
    const int nj = size[uj];
    out.merges.push_back({node[ui], node[uj], best / 2.0, ni + nj});

    for (int k = 0; k < d; ++k) {
      const auto uk = static_cast<std::size_t>(k);
      if (!active[uk] || k == bi || k == bj) continue;
      const double nk = size[uk];
      const double updated = ((ni + nk) * dist(bi, k) + (nj + nk) * dist(bj, k) - nk * dist(bi, bj)) / (ni + nj + nk);
      dist(bi, k) = dist(k, bi) = updated;
    }
    active[uj] = false;
    size[ui] = ni + nj;
    node[ui] = d + step;
  }
  return out;
}

ClusterAssignment cut(const Dendrogram& dendrogram, int k) {
  const int d = dendrogram.leaves();
  if (k < 1 || k > d) throw Error(Errc::OutOfRange, "K = " + std::to_string(k) + " outside [1, " + std::to_string(d) + "]");
  if (static_cast<int>(dendrogram.merges.size()) != d - 1) throw Error(Errc::ShapeMismatch, "dendrogram must have d - 1 merges");

  // Union-find over all node ids; only the first d - K merges are applied.
  std::vector<int> parent(static_cast<std::size_t>(2 * d - 1));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int a) {
    while (parent[static_cast<std::size_t>(a)] != a) {
      parent[static_cast<std::size_t>(a)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(a)])];
      a = parent[static_cast<std::size_t>(a)];
    }
    return a;
  };
  for (int m = 0; m < d - k; ++m) {
    const auto& merge = dendrogram.merges[static_cast<std::size_t>(m)];
    parent[static_cast<std::size_t>(find(merge.left))] = d + m;
    parent[static_cast<std::size_t>(find(merge.right))] = d + m;
  }

  ClusterAssignment out;
  out.labels = dendrogram.labels;
  out.cluster_of.assign(static_cast<std::size_t>(d), -1);
  std::vector<int> id_of_root(static_cast<std::size_t>(2 * d - 1), -1);
  for (int leaf = 0; leaf < d; ++leaf) {
    const int root = find(leaf);
    auto& id = id_of_root[static_cast<std::size_t>(root)];
    if (id < 0) {
      id = static_cast<int>(out.names.size());
      out.names.push_back("cluster_" + std::to_string(id + 1));
    }
    out.cluster_of[static_cast<std::size_t>(leaf)] = id;
  }
  return out;
}

ClusterAssignment assignment_from_categories(const std::vector<std::string>& labels,
                                             const std::map<std::string, std::string>& categories) {
  ClusterAssignment out;
  out.labels = labels;
  std::map<std::string, int> ids;
  for (const auto& label : labels) {
    const auto it = categories.find(label);
    if (it == categories.end()) throw Error(Errc::Config, "label '" + label + "' has no category");
    auto [pos, inserted] = ids.emplace(it->second, static_cast<int>(out.names.size()));
    if (inserted) out.names.push_back(it->second);
    out.cluster_of.push_back(pos->second);
  }
  return out;
}

ClusterAssignment singleton_assignment(const std::vector<std::string>& labels) {
  ClusterAssignment out;
  out.labels = labels;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    out.cluster_of.push_back(static_cast<int>(j));
    out.names.push_back(labels[j]);
  }
  return out;
}

}  // namespace riskagg
