#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "graphrec/sparse.hpp"

namespace graphrec {

/// Per-user walk counts in the bipartite graph: hop 1 = R 1, hop 2 = R (R^T 1),
/// hop 3 = (R R^T)(R 1).
Vector info_flow(const SparseMatrix& interactions, int hop);

struct QuartilePartition {
  double q25 = 0.0;
  double q50 = 0.0;
  double q75 = 0.0;
  std::vector<int> group;  // 1..4 per input position
  bool degenerate = false;  // all values equal; everyone lands in group 4
};

/// Type-7 (linear interpolation) empirical quantiles; groups [min, q25),
/// [q25, q50), [q50, q75), [q75, max].
QuartilePartition quartile_partition(std::span<const double> values);

struct QuartileRow {
  int group = 0;
  std::size_t members = 0;
  std::optional<double> mean;       // absent for an empty group
  std::optional<double> variation;  // (mean / global - 1) * 100
};

QuartileRow quartile_row(int group, std::span<const double> metric, std::span<const int> groups, double global_mean);
std::vector<QuartileRow> quartile_report(std::span<const double> metric, std::span<const int> groups, double global_mean);

/// Plot-ready layout: a Quartiles column (i..iv) then one variation column per model.
struct FlowTable {
  int hop = 1;
  std::vector<std::string> models;
  std::vector<std::vector<QuartileRow>> rows;  // per model, four rows
};

void write_flow_tsv(const std::vector<FlowTable>& tables, const std::filesystem::path& path);

}  // namespace graphrec
