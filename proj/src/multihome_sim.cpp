#include "bbrel/multihome_sim.hpp"

#include <algorithm>
#include <set>

namespace bbrel {

LossSeries combine(std::span<const LossSample> a, std::span<const LossSample> b) {
  LossSeries out;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].hour < b[j].hour) {
      ++i;
    } else if (b[j].hour < a[i].hour) {
      ++j;
    } else {
      out.push_back({a[i].hour, std::min(a[i].loss_rate, b[j].loss_rate)});
      ++i;
      ++j;
    }
  }
  return out;
}

std::vector<SimPair> build_pairs(const std::map<std::string, LossSeries>& series, std::span<const UnitMeta> units,
                                 std::size_t min_overlap) {
  std::map<std::string, std::vector<const UnitMeta*>> blocks;
  for (const auto& u : units) {
    if (u.block_group.empty() || !series.contains(u.unit_id)) continue;
    blocks[u.block_group].push_back(&u);
  }
  std::vector<SimPair> out;
  for (auto& [_, members] : blocks) {
    std::sort(members.begin(), members.end(), [](const UnitMeta* a, const UnitMeta* b) { return a->unit_id < b->unit_id; });
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        auto combined = combine(series.at(members[i]->unit_id), series.at(members[j]->unit_id));
        if (combined.size() < min_overlap || combined.empty()) continue;
        SimPair p;
        p.unit_a = members[i]->unit_id;
        p.unit_b = members[j]->unit_id;
        p.same_isp = members[i]->isp == members[j]->isp;
        p.overlap_hours = combined.size();
        p.combined = std::move(combined);
        out.push_back(std::move(p));
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const SimPair& a, const SimPair& b) {
    return std::tie(a.unit_a, a.unit_b) < std::tie(b.unit_a, b.unit_b);
  });
  return out;
}

std::string_view to_string(MultihomeCohort c) {
  switch (c) {
    case MultihomeCohort::NotMultihomed: return "not-multihomed";
    case MultihomeCohort::SameIsp: return "same-isp";
    case MultihomeCohort::DifferentIsp: return "different-isp";
  }
  return "not-multihomed";
}

MultihomeReport sim_report(std::span<const SimPair> pairs, const std::map<std::string, LossSeries>& series,
                           std::span<const double> thresholds) {
  MultihomeReport report;
  std::set<std::string> singles;
  std::vector<const SimPair*> same, diff;
  for (const auto& p : pairs) {
    singles.insert(p.unit_a);
    singles.insert(p.unit_b);
    (p.same_isp ? same : diff).push_back(&p);
  }

  auto emit = [&](MultihomeCohort cohort, const std::vector<const LossSeries*>& members) {
    if (members.empty()) {
      report.notes.push_back("cohort " + std::string(to_string(cohort)) + " has no members; omitted");
      return;
    }
    for (double t : thresholds) {
      std::vector<ReliabilityStats> stats;
      for (const auto* s : members) {
        if (!s->empty()) stats.push_back(compute_stats(*s, t));
      }
      if (stats.empty()) continue;
      report.rows.push_back({cohort, members.size(), aggregate_stats(std::string(to_string(cohort)), stats)});
    }
  };

  std::vector<const LossSeries*> base;
  for (const auto& id : singles) {
    if (auto it = series.find(id); it != series.end()) base.push_back(&it->second);
  }
  std::vector<const LossSeries*> same_s, diff_s;
  for (const auto* p : same) same_s.push_back(&p->combined);
  for (const auto* p : diff) diff_s.push_back(&p->combined);
  emit(MultihomeCohort::NotMultihomed, base);
  emit(MultihomeCohort::SameIsp, same_s);
  emit(MultihomeCohort::DifferentIsp, diff_s);
  return report;
}

}  // namespace bbrel
