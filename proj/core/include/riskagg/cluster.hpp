#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "riskagg/panel.hpp"

namespace riskagg {

/// One agglomeration step. Node ids follow the usual linkage-matrix layout:
/// leaves are 0..d-1 and the cluster created by merge m has id d + m.
struct Merge {
  int left = 0;
  int right = 0;
  /// Increase in total within-cluster sum of squares caused by the merge.
  double height = 0.0;
  int size = 0;
};

struct Dendrogram {
  std::vector<std::string> labels;
  std::vector<Merge> merges;

  int leaves() const noexcept { return static_cast<int>(labels.size()); }
};

/// Partition of labels into K clusters. `cluster_of[j]` is zero-based; the
/// exported `label,cluster` CSV uses 1-based ids.
struct ClusterAssignment {
  std::vector<std::string> labels;
  std::vector<int> cluster_of;
  /// Display name per cluster (category name or `cluster_<id>`).
  std::vector<std::string> names;

  int clusters() const noexcept { return static_cast<int>(names.size()); }
  std::vector<Eigen::Index> members(int cluster) const;
  void validate() const;
};

/// Ward's minimum-variance agglomeration of the panel's columns, treated as
/// points in R^n under squared Euclidean distance. Equal heights resolve to
/// the pair whose smallest leaf indices are lexicographically first.
Dendrogram ward_cluster(const StandardizedPanel& panel);
Dendrogram ward_cluster(const Eigen::MatrixXd& points_as_columns, std::vector<std::string> labels);

/// Undoes the last K - 1 merges. Clusters are numbered by their smallest leaf.
ClusterAssignment cut(const Dendrogram& dendrogram, int k);

/// Assignment built from a label -> category map; clusters are ordered by
/// the first column that belongs to them.
ClusterAssignment assignment_from_categories(const std::vector<std::string>& labels,
                                             const std::map<std::string, std::string>& categories);

/// Singleton clusters, one per label.
ClusterAssignment singleton_assignment(const std::vector<std::string>& labels);

}  // namespace riskagg
