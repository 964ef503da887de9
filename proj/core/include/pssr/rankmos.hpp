#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pssr/image.hpp"
#include "pssr/quality.hpp"

namespace pssr::rankmos {

using quality::Polarity;

// A deterministic quality scorer with declared polarity.
struct Voter {
  std::string name;
  Polarity polarity = Polarity::higher_better;
  std::function<double(const img::StereoPair& version, const img::StereoPair& reference)> score;
};

// Mean SSIM of left and right views against the reference.
Voter make_spatial_voter();

// Negative mean absolute difference between the version's and the
// reference's left-right difference maps.
Voter make_stereo_voter();

// Negative endpoint error between block-matching disparity of the version
// and block-matching disparity of the reference pair.
Voter make_practicality_voter(int window = 7, int max_search = 16);

std::vector<Voter> default_voters();

struct VoteTable {
  int n_refs = 0, n_versions = 0, n_voters = 0;
  std::vector<std::string> voter_names;
  std::vector<double> raw;    // v[i][j][k]
  std::vector<Polarity> polarities;
  std::vector<double> rank;   // S[i][j][k]; empty until order() fills it
  bool ranked = false;

  size_t index(int i, int j, int k) const {
    return (static_cast<size_t>(i) * n_versions + j) * n_voters + k;
  }
  double raw_at(int i, int j, int k) const { return raw[index(i, j, k)]; }
  double rank_at(int i, int j, int k) const { return rank[index(i, j, k)]; }
};

struct RankMosTable {
  int n_refs = 0, n_versions = 0;
  std::vector<double> rs;        // mean rank per (i,j)
  std::vector<double> rank_mos;  // in [1,10]

  size_t index(int i, int j) const { return static_cast<size_t>(i) * n_versions + j; }
  double rs_at(int i, int j) const { return rs[index(i, j)]; }
  double rank_mos_at(int i, int j) const { return rank_mos[index(i, j)]; }
};

// Fill the raw score table: every reference needs the same version count
// (>= 2) and at least one voter. Throws naming (i,j,k) if a voter fails.
VoteTable vote(const std::vector<img::StereoPair>& refs,
               const std::vector<std::vector<img::StereoPair>>& versions,
               const std::vector<Voter>& voters);

// Worst-to-best ranks per (reference, voter) honoring polarity: rank 1 is
// worst, rank J best; equal scores share the mean of their positional ranks.
void order(VoteTable& table);

enum class NormScope { per_reference, global };

// RS = mean rank over voters; rankMOS maps RS onto [1,10] affinely within
// the chosen scope. An all-tied scope collapses to 5.5.
RankMosTable merge(const VoteTable& table, NormScope scope = NormScope::per_reference);

// Averaged ranks of `scores` (ascending value -> ascending rank, ties share
// the mean). Building block for order() and srocc().
std::vector<double> average_ranks(std::span<const double> scores);

// Correlation criteria. All reject n < 2; the correlations additionally
// reject constant inputs.
double srocc(std::span<const double> x, std::span<const double> y);
double plcc(std::span<const double> x, std::span<const double> y);
double krocc(std::span<const double> x, std::span<const double> y);  // Kendall tau-b
double rmse(std::span<const double> x, std::span<const double> y);

// CSV: "ref,version,voter,raw,rank" / "ref,version,RS,rankMOS"
void write_votes_csv(const std::string& path, const VoteTable& table);
void write_rankmos_csv(const std::string& path, const RankMosTable& table);
RankMosTable read_rankmos_csv(const std::string& path);

}  // namespace pssr::rankmos
