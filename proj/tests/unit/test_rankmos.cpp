#include <doctest.h>

#include <cmath>

#include "pssr/degradation.hpp"
#include "pssr/rankmos.hpp"
#include "pssr/scene.hpp"
#include "test_helpers.hpp"

namespace rm = pssr::rankmos;
namespace img = pssr::img;
namespace deg = pssr::deg;

namespace {

// Independent oracles.
double spearman_no_ties(const std::vector<double>& x, const std::vector<double>& y) {
  // closed form 1 - 6*sum(d^2)/(n(n^2-1)) over ranks, valid without ties
  const auto rx = rm::average_ranks(x);
  const auto ry = rm::average_ranks(y);
  double d2 = 0.0;
  for (size_t i = 0; i < rx.size(); ++i) d2 += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double n = static_cast<double>(x.size());
  return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

double kendall_brute(const std::vector<double>& x, const std::vector<double>& y) {
  int c = 0, d = 0;
  for (size_t i = 0; i < x.size(); ++i)
    for (size_t j = i + 1; j < x.size(); ++j) {
      const double s = (x[i] - x[j]) * (y[i] - y[j]);
      if (s > 0) ++c;
      if (s < 0) ++d;
    }
  const double n0 = 0.5 * static_cast<double>(x.size()) * static_cast<double>(x.size() - 1);
  return (c - d) / n0;  // no ties in the cases below
}

rm::VoteTable table_from_ranks(int n_versions, const std::vector<std::vector<double>>& per_voter) {
  rm::VoteTable t;
  t.n_refs = 1;
  t.n_versions = n_versions;
  t.n_voters = static_cast<int>(per_voter.size());
  t.raw.assign(static_cast<size_t>(n_versions) * per_voter.size(), 0.0);
  t.rank.assign(t.raw.size(), 0.0);
  for (int k = 0; k < t.n_voters; ++k) {
    t.voter_names.push_back("v" + std::to_string(k));
    t.polarities.push_back(rm::Polarity::higher_better);
    for (int j = 0; j < n_versions; ++j)
      t.rank[t.index(0, j, k)] = per_voter[static_cast<size_t>(k)][static_cast<size_t>(j)];
  }
  t.ranked = true;
  return t;
}

}  // namespace

TEST_CASE("average_ranks handles ties with positional means") {
  CHECK(rm::average_ranks(std::vector<double>{0.2, 0.9, 0.5}) ==
        std::vector<double>{1.0, 3.0, 2.0});
  CHECK(rm::average_ranks(std::vector<double>{0.5, 0.5, 0.1}) ==
        std::vector<double>{2.5, 2.5, 1.0});
}

TEST_CASE("order: polarity and ties") {
  rm::VoteTable t;
  t.n_refs = 1;
  t.n_versions = 3;
  t.n_voters = 2;
  t.voter_names = {"hb", "lb"};
  t.polarities = {rm::Polarity::higher_better, rm::Polarity::lower_better};
  t.raw = {
      // (j, k) layout: j0(k0,k1), j1(k0,k1), j2(k0,k1)
      0.2, 0.2,
      0.9, 0.9,
      0.5, 0.5,
  };
  rm::order(t);
  CHECK(t.rank_at(0, 0, 0) == 1.0);  // higher-better: 0.2 is worst
  CHECK(t.rank_at(0, 1, 0) == 3.0);
  CHECK(t.rank_at(0, 2, 0) == 2.0);
  CHECK(t.rank_at(0, 0, 1) == 3.0);  // lower-better: 0.2 is best
  CHECK(t.rank_at(0, 1, 1) == 1.0);
  CHECK(t.rank_at(0, 2, 1) == 2.0);

  t.raw[t.index(0, 0, 0)] = std::nan("");
  CHECK_THROWS_AS(rm::order(t), std::invalid_argument);
}

TEST_CASE("order: tied scores share averaged positional ranks") {
  rm::VoteTable t;
  t.n_refs = 1;
  t.n_versions = 3;
  t.n_voters = 1;
  t.voter_names = {"v"};
  t.polarities = {rm::Polarity::higher_better};
  t.raw = {0.5, 0.5, 0.1};
  rm::order(t);
  CHECK(t.rank_at(0, 0, 0) == 2.5);
  CHECK(t.rank_at(0, 1, 0) == 2.5);
  CHECK(t.rank_at(0, 2, 0) == 1.0);
}

TEST_CASE("merge: hand-worked 3-version/3-voter case is exact") {
  // ranks A:(3,2,3) B:(2,3,1) C:(1,1,2) -> RS (8/3, 2, 4/3) -> (10, 5.5, 1)
  const rm::VoteTable t = table_from_ranks(3, {{3, 2, 1}, {2, 3, 1}, {3, 1, 2}});
  const rm::RankMosTable m = rm::merge(t);
  CHECK(m.rank_mos_at(0, 0) == 10.0);
  CHECK(m.rank_mos_at(0, 1) == 5.5);
  CHECK(m.rank_mos_at(0, 2) == 1.0);
  CHECK(m.rs_at(0, 0) == doctest::Approx(8.0 / 3.0).epsilon(1e-15));
  CHECK(m.rs_at(0, 1) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(m.rs_at(0, 2) == doctest::Approx(4.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("merge: unanimous strict order spans [1,10]; all-tied collapses to 5.5") {
  rm::VoteTable t;
  t.n_refs = 1;
  t.n_versions = 5;
  t.n_voters = 3;
  for (int k = 0; k < 3; ++k) {
    t.voter_names.push_back("v");
    t.polarities.push_back(rm::Polarity::higher_better);
  }
  t.raw.assign(15, 0.0);
  for (int j = 0; j < 5; ++j)
    for (int k = 0; k < 3; ++k) t.raw[t.index(0, j, k)] = 10.0 * j + k;  // same order all voters
  rm::order(t);
  const rm::RankMosTable m = rm::merge(t);
  CHECK(m.rank_mos_at(0, 0) == 1.0);
  CHECK(m.rank_mos_at(0, 4) == 10.0);
  for (int j = 0; j < 5; ++j) {
    CHECK(m.rank_mos_at(0, j) >= 1.0);
    CHECK(m.rank_mos_at(0, j) <= 10.0);
  }

  rm::VoteTable tied = table_from_ranks(4, {{2.5, 2.5, 2.5, 2.5}});
  const rm::RankMosTable mt = rm::merge(tied);
  for (int j = 0; j < 4; ++j) CHECK(mt.rank_mos_at(0, j) == 5.5);
}

TEST_CASE("merge: global scope attains extremes once across the whole table") {
  rm::VoteTable t;
  t.n_refs = 2;
  t.n_versions = 3;
  t.n_voters = 1;
  t.voter_names = {"v"};
  t.polarities = {rm::Polarity::higher_better};
  // ref 0 spreads 1..3, ref 1 ties everything at 2
  t.raw = {0.1, 0.5, 0.9, 0.4, 0.4, 0.4};
  rm::order(t);
  const rm::RankMosTable per_ref = rm::merge(t, rm::NormScope::per_reference);
  CHECK(per_ref.rank_mos_at(0, 0) == 1.0);
  CHECK(per_ref.rank_mos_at(0, 2) == 10.0);
  CHECK(per_ref.rank_mos_at(1, 0) == 5.5);  // all tied within the reference

  const rm::RankMosTable global = rm::merge(t, rm::NormScope::global);
  CHECK(global.rank_mos_at(0, 0) == 1.0);
  CHECK(global.rank_mos_at(0, 2) == 10.0);
  // ref 1's tied rank 2 sits strictly inside (1,10) on the global map
  CHECK(global.rank_mos_at(1, 0) > 1.0);
  CHECK(global.rank_mos_at(1, 0) < 10.0);
}

TEST_CASE("rank invariance under strictly increasing transforms") {
  pssr::SplitMix64 rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    rm::VoteTable t;
    t.n_refs = 2;
    t.n_versions = 7;
    t.n_voters = 3;
    t.voter_names = {"a", "b", "c"};
    t.polarities = {rm::Polarity::higher_better, rm::Polarity::lower_better,
                    rm::Polarity::higher_better};
    t.raw.assign(2 * 7 * 3, 0.0);
    for (double& v : t.raw) v = rng.uniform(-2.0, 2.0);
    rm::order(t);
    const rm::RankMosTable base = rm::merge(t);

    rm::VoteTable t2 = t;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 7; ++j) {
        // exp to voter 0, affine to voter 1, cube to voter 2
        t2.raw[t2.index(i, j, 0)] = std::exp(t.raw_at(i, j, 0));
        t2.raw[t2.index(i, j, 1)] = 3.0 * t.raw_at(i, j, 1) + 2.0;
        const double v = t.raw_at(i, j, 2);
        t2.raw[t2.index(i, j, 2)] = v * v * v;
      }
    rm::order(t2);
    const rm::RankMosTable after = rm::merge(t2);
    CHECK(after.rank_mos == base.rank_mos);
  }
}

TEST_CASE("rank sums per (i,k) equal J(J+1)/2 with ties") {
  pssr::SplitMix64 rng(72);
  for (int trial = 0; trial < 20; ++trial) {
    const int j_count = 3 + static_cast<int>(rng.next() % 20);
    rm::VoteTable t;
    t.n_refs = 1;
    t.n_versions = j_count;
    t.n_voters = 2;
    t.voter_names = {"a", "b"};
    t.polarities = {rm::Polarity::higher_better, rm::Polarity::lower_better};
    t.raw.assign(static_cast<size_t>(j_count) * 2, 0.0);
    for (double& v : t.raw) v = rng.uniform_int(5);  // force plenty of ties
    rm::order(t);
    for (int k = 0; k < 2; ++k) {
      double sum = 0.0;
      for (int j = 0; j < j_count; ++j) sum += t.rank_at(0, j, k);
      CHECK(sum == doctest::Approx(j_count * (j_count + 1) / 2.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("srocc/plcc/krocc/rmse: closed-form cases against oracles") {
  std::vector<double> x{1, 2, 3}, y{10, 20, 30};
  CHECK(rm::srocc(x, y) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rm::plcc(x, y) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rm::krocc(x, y) == doctest::Approx(1.0).epsilon(1e-12));

  std::vector<double> a{1, 2, 3, 4}, b{1, 3, 2, 4};
  CHECK(rm::srocc(a, b) == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(rm::srocc(a, b) == doctest::Approx(spearman_no_ties(a, b)).epsilon(1e-12));

  std::vector<double> p{1, 2, 3}, q{1, 3, 2};
  CHECK(rm::krocc(p, q) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(rm::krocc(p, q) == doctest::Approx(kendall_brute(p, q)).epsilon(1e-12));

  CHECK(rm::rmse(a, a) == 0.0);
  std::vector<double> r{0, 0}, s{1, 1};
  CHECK(rm::rmse(r, s) == doctest::Approx(1.0).epsilon(1e-15));

  std::vector<double> cst{2, 2, 2};
  CHECK_THROWS_AS(rm::srocc(cst, p), std::invalid_argument);
  CHECK_THROWS_AS(rm::plcc(p, cst), std::invalid_argument);
  CHECK_THROWS_AS(rm::krocc(cst, cst), std::invalid_argument);
  std::vector<double> one{1};
  CHECK_THROWS_AS(rm::rmse(one, one), std::invalid_argument);
}

TEST_CASE("built-in voters are maximal on an identical version") {
  const img::StereoPair ref = img::gen_scene(81, 64, 48, 2, 6);
  const auto voters = rm::default_voters();
  CHECK(voters[0].score(ref, ref) == doctest::Approx(1.0).epsilon(1e-9));  // ssim
  CHECK(voters[1].score(ref, ref) == 0.0);                                 // -mad of diff maps
  CHECK(voters[2].score(ref, ref) == 0.0);                                 // -epe vs own estimate
  for (const auto& v : voters) CHECK(v.polarity == rm::Polarity::higher_better);
}

TEST_CASE("vote: dims, determinism, and reference permutation") {
  std::vector<img::StereoPair> refs{img::gen_scene(91, 48, 48, 1, 5),
                                    img::gen_scene(92, 48, 48, 2, 5)};
  deg::DegradationSpec s1;
  s1.scale = 2;
  deg::DegradationSpec s2;
  s2.scale = 2;
  s2.noise_level = 20.0;
  std::vector<std::vector<img::StereoPair>> versions;
  for (size_t i = 0; i < refs.size(); ++i) {
    std::vector<img::StereoPair> v;
    v.push_back(deg::make_version(refs[i], s1, 7, static_cast<int>(i), 0));
    v.push_back(deg::make_version(refs[i], s2, 7, static_cast<int>(i), 1));
    versions.push_back(v);
  }
  const auto voters = rm::default_voters();
  const rm::VoteTable t = rm::vote(refs, versions, voters);
  CHECK(t.n_refs == 2);
  CHECK(t.n_versions == 2);
  CHECK(t.n_voters == 3);

  // permuting references permutes rows only
  std::vector<img::StereoPair> refs_p{refs[1], refs[0]};
  std::vector<std::vector<img::StereoPair>> versions_p{versions[1], versions[0]};
  const rm::VoteTable tp = rm::vote(refs_p, versions_p, voters);
  for (int j = 0; j < 2; ++j)
    for (int k = 0; k < 3; ++k) {
      CHECK(tp.raw_at(0, j, k) == t.raw_at(1, j, k));
      CHECK(tp.raw_at(1, j, k) == t.raw_at(0, j, k));
    }

  // cleaner version must outrank the noisier one after order()
  rm::VoteTable ranked = t;
  rm::order(ranked);
  CHECK(ranked.rank_at(0, 0, 0) > ranked.rank_at(0, 1, 0));
}

TEST_CASE("vote: precondition failures") {
  std::vector<img::StereoPair> refs{img::gen_scene(93, 32, 32, 1, 4)};
  std::vector<std::vector<img::StereoPair>> versions{{refs[0]}};  // J = 1
  CHECK_THROWS_AS(rm::vote(refs, versions, rm::default_voters()), std::invalid_argument);
  versions[0].push_back(refs[0]);
  CHECK_THROWS_AS(rm::vote(refs, versions, {}), std::invalid_argument);
}

TEST_CASE("csv round trip for vote and rankmos tables") {
  testutil::TempDir tmp("rmcsv");
  rm::VoteTable t = table_from_ranks(3, {{3, 2, 1}, {2, 3, 1}});
  for (size_t i = 0; i < t.raw.size(); ++i) t.raw[i] = 0.125 * static_cast<double>(i);
  rm::write_votes_csv(tmp.file("votes.csv"), t);
  const std::string votes = testutil::read_binary(tmp.file("votes.csv"));
  CHECK(votes.find("ref,version,voter,raw,rank") == 0);

  const rm::RankMosTable m = rm::merge(t);
  rm::write_rankmos_csv(tmp.file("rankmos.csv"), m);
  const rm::RankMosTable back = rm::read_rankmos_csv(tmp.file("rankmos.csv"));
  CHECK(back.n_refs == m.n_refs);
  CHECK(back.n_versions == m.n_versions);
  CHECK(back.rs == m.rs);
  CHECK(back.rank_mos == m.rank_mos);
}

TEST_CASE("unanimous voters: srocc of rankMOS against voter ranks is 1") {
  pssr::SplitMix64 rng(101);
  for (int trial = 0; trial < 5; ++trial) {
    const int j_count = 4 + static_cast<int>(rng.next() % 10);
    // one strict order shared by 3 voters through different increasing maps
    std::vector<double> base(static_cast<size_t>(j_count));
    for (double& v : base) v = rng.uniform(0.0, 1.0);
    rm::VoteTable t;
    t.n_refs = 1;
    t.n_versions = j_count;
    t.n_voters = 3;
    t.voter_names = {"a", "b", "c"};
    t.polarities = {rm::Polarity::higher_better, rm::Polarity::higher_better,
                    rm::Polarity::lower_better};
    t.raw.assign(static_cast<size_t>(j_count) * 3, 0.0);
    for (int j = 0; j < j_count; ++j) {
      const double v = base[static_cast<size_t>(j)];
      t.raw[t.index(0, j, 0)] = v;
      t.raw[t.index(0, j, 1)] = std::exp(2.0 * v);
      t.raw[t.index(0, j, 2)] = -v;  // lower-better sees the same order
    }
    rm::order(t);
    const rm::RankMosTable m = rm::merge(t);
    std::vector<double> mos(m.rank_mos.begin(), m.rank_mos.end());
    std::vector<double> ranks(static_cast<size_t>(j_count));
    for (int j = 0; j < j_count; ++j) ranks[static_cast<size_t>(j)] = t.rank_at(0, j, 0);
    CHECK(rm::srocc(mos, ranks) == doctest::Approx(1.0).epsilon(1e-12));
  }
}
