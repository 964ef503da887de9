#include "pssr/rankmos.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace pssr::rankmos {

Voter make_spatial_voter() {
  return {"spatial_ssim", Polarity::higher_better,
          [](const img::StereoPair& v, const img::StereoPair& ref) {
            return quality::pair_ssim(v, ref);
          }};
}

Voter make_stereo_voter() {
  return {"stereo_diff", Polarity::higher_better,
          [](const img::StereoPair& v, const img::StereoPair& ref) {
            const img::Image dv = quality::diff_map(v);
            const img::Image dr = quality::diff_map(ref);
            double acc = 0.0;
            for (size_t i = 0; i < dv.pix.size(); ++i) acc += std::abs(dv.pix[i] - dr.pix[i]);
            return -acc / static_cast<double>(dv.pix.size());
          }};
}

Voter make_practicality_voter(int window, int max_search) {
  return {"practicality_epe", Polarity::higher_better,
          [window, max_search](const img::StereoPair& v, const img::StereoPair& ref) {
            const auto est = quality::block_match_disparity(v, window, max_search);
            const auto base = quality::block_match_disparity(ref, window, max_search);
            return -quality::epe(est, base).value;
          }};
}

std::vector<Voter> default_voters() {
  return {make_spatial_voter(), make_stereo_voter(), make_practicality_voter()};
}

VoteTable vote(const std::vector<img::StereoPair>& refs,
               const std::vector<std::vector<img::StereoPair>>& versions,
               const std::vector<Voter>& voters) {
  if (refs.empty()) throw std::invalid_argument("vote: no references");
  if (versions.size() != refs.size())
    throw std::invalid_argument("vote: version lists (" + std::to_string(versions.size()) +
                                ") do not match references (" + std::to_string(refs.size()) + ")");
  if (voters.empty()) throw std::invalid_argument("vote: no voters");
  const size_t j_count = versions[0].size();
  if (j_count < 2) throw std::invalid_argument("vote: need at least 2 versions per reference");
  for (const auto& vl : versions)
    if (vl.size() != j_count)
      throw std::invalid_argument("vote: uneven version counts across references");

  VoteTable t;
  t.n_refs = static_cast<int>(refs.size());
  t.n_versions = static_cast<int>(j_count);
  t.n_voters = static_cast<int>(voters.size());
  for (const Voter& v : voters) {
    t.voter_names.push_back(v.name);
    t.polarities.push_back(v.polarity);
  }
  t.raw.assign(static_cast<size_t>(t.n_refs) * t.n_versions * t.n_voters, 0.0);

  for (int i = 0; i < t.n_refs; ++i)
    for (int j = 0; j < t.n_versions; ++j)
      for (int k = 0; k < t.n_voters; ++k) {
        double s = 0.0;
        try {
          s = voters[static_cast<size_t>(k)].score(versions[static_cast<size_t>(i)][static_cast<size_t>(j)],
                                                   refs[static_cast<size_t>(i)]);
        } catch (const std::exception& e) {
          throw std::runtime_error("vote: voter '" + voters[static_cast<size_t>(k)].name +
                                   "' failed at (ref " + std::to_string(i) + ", version " +
                                   std::to_string(j) + ", voter " + std::to_string(k) +
                                   "): " + e.what());
        }
        if (!std::isfinite(s))
          throw std::runtime_error("vote: non-finite score from voter '" +
                                   voters[static_cast<size_t>(k)].name + "' at (ref " +
                                   std::to_string(i) + ", version " + std::to_string(j) + ")");
        t.raw[t.index(i, j, k)] = s;
      }
  return t;
}

std::vector<double> average_ranks(std::span<const double> scores) {
  const size_t n = scores.size();
  std::vector<size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t pos = 0;
  while (pos < n) {
    size_t end = pos;
    while (end + 1 < n && scores[idx[end + 1]] == scores[idx[pos]]) ++end;
    // positional ranks pos+1 .. end+1 share their mean
    const double r = 0.5 * static_cast<double>(pos + 1 + end + 1);
    for (size_t q = pos; q <= end; ++q) ranks[idx[q]] = r;
    pos = end + 1;
  }
  return ranks;
}

void order(VoteTable& table) {
  if (table.raw.empty()) throw std::invalid_argument("order: raw scores not filled");
  table.rank.assign(table.raw.size(), 0.0);
  std::vector<double> keyed(static_cast<size_t>(table.n_versions));
  for (int i = 0; i < table.n_refs; ++i) {
    for (int k = 0; k < table.n_voters; ++k) {
      const bool higher = table.polarities[static_cast<size_t>(k)] == Polarity::higher_better;
      for (int j = 0; j < table.n_versions; ++j) {
        const double v = table.raw_at(i, j, k);
        if (std::isnan(v))
          throw std::invalid_argument("order: NaN score at (ref " + std::to_string(i) +
                                      ", version " + std::to_string(j) + ", voter " +
                                      std::to_string(k) + ")");
        // Ascending key = worst first; flip sign for lower-better voters.
        keyed[static_cast<size_t>(j)] = higher ? v : -v;
      }
      const std::vector<double> r = average_ranks(keyed);
      for (int j = 0; j < table.n_versions; ++j)
        table.rank[table.index(i, j, k)] = r[static_cast<size_t>(j)];
    }
  }
  table.ranked = true;
}

RankMosTable merge(const VoteTable& table, NormScope scope) {
  if (!table.ranked) throw std::invalid_argument("merge: order() has not filled ranks");
  RankMosTable out;
  out.n_refs = table.n_refs;
  out.n_versions = table.n_versions;
  out.rs.assign(static_cast<size_t>(table.n_refs) * table.n_versions, 0.0);
  out.rank_mos.assign(out.rs.size(), 0.0);

  // Normalize on rank sums rather than means: same affine map, but integer
  // and half-integer sums keep the arithmetic exact.
  std::vector<double> sums(out.rs.size(), 0.0);
  for (int i = 0; i < table.n_refs; ++i)
    for (int j = 0; j < table.n_versions; ++j) {
      double s = 0.0;
      for (int k = 0; k < table.n_voters; ++k) s += table.rank_at(i, j, k);
      sums[out.index(i, j)] = s;
      out.rs[out.index(i, j)] = s / static_cast<double>(table.n_voters);
    }

  auto map_range = [&](size_t begin, size_t end) {
    double lo = sums[begin], hi = sums[begin];
    for (size_t q = begin; q < end; ++q) {
      lo = std::min(lo, sums[q]);
      hi = std::max(hi, sums[q]);
    }
    for (size_t q = begin; q < end; ++q)
      out.rank_mos[q] = (hi > lo) ? 1.0 + 9.0 * (sums[q] - lo) / (hi - lo) : 5.5;
  };

  if (scope == NormScope::per_reference) {
    for (int i = 0; i < table.n_refs; ++i)
      map_range(out.index(i, 0), out.index(i, 0) + static_cast<size_t>(table.n_versions));
  } else {
    map_range(0, sums.size());
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void write_votes_csv(const std::string& path, const VoteTable& table) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("votes csv: cannot open '" + path + "'");
  os << "ref,version,voter,raw,rank\n";
  for (int i = 0; i < table.n_refs; ++i)
    for (int j = 0; j < table.n_versions; ++j)
      for (int k = 0; k < table.n_voters; ++k)
        os << i << "," << j << "," << table.voter_names[static_cast<size_t>(k)] << ","
           << fmt(table.raw_at(i, j, k)) << ","
           << (table.ranked ? fmt(table.rank_at(i, j, k)) : std::string("")) << "\n";
  if (!os) throw std::runtime_error("votes csv: write failed for '" + path + "'");
}

void write_rankmos_csv(const std::string& path, const RankMosTable& table) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("rankmos csv: cannot open '" + path + "'");
  os << "ref,version,RS,rankMOS\n";
  for (int i = 0; i < table.n_refs; ++i)
    for (int j = 0; j < table.n_versions; ++j)
      os << i << "," << j << "," << fmt(table.rs_at(i, j)) << "," << fmt(table.rank_mos_at(i, j))
         << "\n";
  if (!os) throw std::runtime_error("rankmos csv: write failed for '" + path + "'");
}

RankMosTable read_rankmos_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("rankmos csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line) || line != "ref,version,RS,rankMOS")
    throw std::runtime_error("rankmos csv: bad header in '" + path + "'");

  struct Row {
    int i, j;
    double rs, mos;
  };
  std::vector<Row> rows;
  int max_i = -1, max_j = -1;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    Row r{};
    char c1, c2, c3;
    if (!(ss >> r.i >> c1 >> r.j >> c2 >> r.rs >> c3 >> r.mos) || c1 != ',' || c2 != ',' ||
        c3 != ',')
      throw std::runtime_error("rankmos csv: malformed line " + std::to_string(lineno) + " in '" +
                               path + "'");
    rows.push_back(r);
    max_i = std::max(max_i, r.i);
    max_j = std::max(max_j, r.j);
  }
  RankMosTable t;
  t.n_refs = max_i + 1;
  t.n_versions = max_j + 1;
  t.rs.assign(static_cast<size_t>(t.n_refs) * t.n_versions, 0.0);
  t.rank_mos.assign(t.rs.size(), 0.0);
  for (const Row& r : rows) {
    t.rs[t.index(r.i, r.j)] = r.rs;
    t.rank_mos[t.index(r.i, r.j)] = r.mos;
  }
  return t;
}

}  // namespace pssr::rankmos
