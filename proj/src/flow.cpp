#include "graphrec/flow.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "graphrec/error.hpp"

namespace graphrec {

Vector info_flow(const SparseMatrix& interactions, int hop) {
  const Vector user_deg = interactions.row_sums();
  switch (hop) {
    case 1:
      return user_deg;
    case 2:
      return interactions.multiply(Vector(interactions.col_sums()));
    case 3:
      return interactions.multiply(Vector(interactions.transpose_multiply(user_deg)));
    default:
      throw UsageError("information flow is defined for hops 1, 2 and 3, got " + std::to_string(hop));
  }
}

namespace {

double quantile7(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

QuartilePartition quartile_partition(std::span<const double> values) {
  if (values.size() < 4) throw DataError("quartile partition needs at least 4 users");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  QuartilePartition q;
  q.q25 = quantile7(sorted, 0.25);
  q.q50 = quantile7(sorted, 0.50);
  q.q75 = quantile7(sorted, 0.75);
  q.degenerate = sorted.front() == sorted.back();
  q.group.reserve(values.size());
  for (double v : values) {
    if (q.degenerate || v >= q.q75) {
      q.group.push_back(4);
    } else if (v >= q.q50) {
      q.group.push_back(3);
    } else if (v >= q.q25) {
      q.group.push_back(2);
    } else {
      q.group.push_back(1);
    }
  }
  return q;
}

QuartileRow quartile_row(int group, std::span<const double> metric, std::span<const int> groups, double global_mean) {
  if (metric.size() != groups.size()) throw DataError("metric and group vectors differ in length");
  QuartileRow row;
  row.group = group;
  double sum = 0.0;
  for (std::size_t k = 0; k < metric.size(); ++k) {
    if (groups[k] != group) continue;
    sum += metric[k];
    ++row.members;
  }
  if (row.members > 0) {
    row.mean = sum / static_cast<double>(row.members);
    if (global_mean != 0.0) row.variation = (*row.mean / global_mean - 1.0) * 100.0;
  }
  return row;
}

std::vector<QuartileRow> quartile_report(std::span<const double> metric, std::span<const int> groups, double global_mean) {
  std::vector<QuartileRow> rows;
  for (int g = 1; g <= 4; ++g) rows.push_back(quartile_row(g, metric, groups, global_mean));
  return rows;
}

void write_flow_tsv(const std::vector<FlowTable>& tables, const std::filesystem::path& path) {
  static const char* kNames[] = {"i", "ii", "iii", "iv"};
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(6);
  out << std::fixed;
  for (const auto& t : tables) {
    out << "# hop " << t.hop << '\n' << "Quartiles";
    for (const auto& m : t.models) out << '\t' << m;
    out << '\n';
    for (int g = 0; g < 4; ++g) {
      out << kNames[g];
      for (const auto& rows : t.rows) {
        const auto& r = rows.at(static_cast<std::size_t>(g));
        out << '\t';
        if (r.variation) {
          out << *r.variation;
        } else {
          out << "null";
        }
      }
      out << '\n';
    }
  }
}

}  // namespace graphrec
