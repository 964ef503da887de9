#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "cli.hpp"
#include "pssr/rankmos.hpp"
#include "test_helpers.hpp"

namespace fs = std::filesystem;
using pssr::cli::run;

namespace {

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    out[fs::relative(e.path(), dir).string()] = testutil::read_binary(e.path().string());
  }
  return out;
}

}  // namespace

TEST_CASE("cli: bad usage yields nonzero exit codes") {
  CHECK(run({"no-such-command"}) != 0);
  CHECK(run({}) != 0);
  // missing required seed
  testutil::TempDir tmp("cli_usage");
  CHECK(run({"gen-scenes", "--out", tmp.file("x")}) == 1);
  // missing input file
  CHECK(run({"score", "--weights", tmp.file("absent.pssrw"), "--left", "a.ppm", "--right", "b.ppm",
             "--out", tmp.file("y")}) == 2);
}

TEST_CASE("cli: gen-scenes twice gives identical directory trees") {
  testutil::TempDir tmp("cli_gen");
  const std::vector<std::string> args = {"gen-scenes", "--seed", "5",       "--count",
                                         "2",          "--width", "48",     "--height",
                                         "48",         "--shapes", "2",     "--max-disparity",
                                         "6"};
  auto a = args;
  a.push_back("--out");
  a.push_back(tmp.file("a"));
  auto b = args;
  b.push_back("--out");
  b.push_back(tmp.file("b"));
  REQUIRE(run(a) == 0);
  REQUIRE(run(b) == 0);
  CHECK(snapshot(tmp.file("a")) == snapshot(tmp.file("b")));
  CHECK(fs::exists(fs::path(tmp.file("a")) / "scene000_L.ppm"));
  CHECK(fs::exists(fs::path(tmp.file("a")) / "scene001_disp.pfm"));
  CHECK(fs::exists(fs::path(tmp.file("a")) / "manifest.json"));
}

TEST_CASE("cli: pipeline smoke and eval-qa cross-check") {
  testutil::TempDir tmp("cli_pipe");
  // small scenes, tiny catalog, tiny QA
  {
    std::ofstream os(tmp.file("catalog.json"));
    os << R"({"scales":[2],"blur_sigmas":[0.0,1.0],"noise_levels":[0.0,12.0],"upsamplers":["bicubic"]})";
  }
  {
    std::ofstream os(tmp.file("qa.json"));
    os << R"({"widths":[4,8],"head_width":8,"patch_size":16})";
  }
  REQUIRE(run({"gen-scenes", "--seed", "11", "--count", "3", "--width", "48", "--height", "48",
               "--shapes", "2", "--max-disparity", "6", "--out", tmp.file("scenes")}) == 0);
  REQUIRE(run({"degrade", "--seed", "12", "--refs", tmp.file("scenes"), "--catalog",
               tmp.file("catalog.json"), "--out", tmp.file("versions")}) == 0);
  CHECK(fs::exists(fs::path(tmp.file("versions")) / "ref002_v003_R.ppm"));
  REQUIRE(run({"rankmos", "--refs", tmp.file("scenes"), "--versions", tmp.file("versions"),
               "--out", tmp.file("versions")}) == 0);
  REQUIRE(run({"train-qa", "--seed", "13", "--data", tmp.file("versions"), "--epochs", "2",
               "--batch", "8", "--qa-config", tmp.file("qa.json"), "--patch-size", "16", "--out",
               tmp.file("qa_run")}) == 0);
  REQUIRE(run({"score", "--weights", tmp.file("qa_run") + "/qa_weights.pssrw", "--left",
               tmp.file("versions") + "/ref000_v000_L.ppm", "--right",
               tmp.file("versions") + "/ref000_v000_R.ppm", "--out", tmp.file("score_run")}) == 0);
  CHECK(testutil::read_binary(tmp.file("score_run") + "/score.csv").starts_with(
      "image,score,n_patches\nref000_v000_L.ppm,"));

  REQUIRE(run({"eval-qa", "--weights", tmp.file("qa_run") + "/qa_weights.pssrw", "--data",
               tmp.file("versions"), "--out", tmp.file("eval_qa")}) == 0);

  // the emitted correlations must match the rankmos-module functions applied
  // to the emitted predictions
  std::vector<double> pred, label;
  {
    std::ifstream is(tmp.file("eval_qa") + "/predictions.csv");
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::istringstream ss(line);
      int i, j;
      double y, z;
      char c;
      ss >> i >> c >> j >> c >> y >> c >> z;
      pred.push_back(y);
      label.push_back(z);
    }
  }
  REQUIRE(pred.size() == 12);
  std::string overall;
  {
    std::ifstream is(tmp.file("eval_qa") + "/correlations.csv");
    std::string line;
    std::getline(is, line);
    std::getline(is, overall);
  }
  std::istringstream ss(overall);
  std::string scope;
  std::getline(ss, scope, ',');
  double srocc, plcc, krocc, rmse;
  char c;
  ss >> srocc >> c >> plcc >> c >> krocc >> c >> rmse;
  CHECK(scope == "overall");
  CHECK(srocc == doctest::Approx(pssr::rankmos::srocc(pred, label)).epsilon(1e-12));
  CHECK(plcc == doctest::Approx(pssr::rankmos::plcc(pred, label)).epsilon(1e-12));
  CHECK(krocc == doctest::Approx(pssr::rankmos::krocc(pred, label)).epsilon(1e-12));
  CHECK(rmse == doctest::Approx(pssr::rankmos::rmse(pred, label)).epsilon(1e-12));
}

TEST_CASE("cli: rerun from manifest reproduces outputs") {
  testutil::TempDir tmp("cli_manifest");
  REQUIRE(run({"gen-scenes", "--seed", "21", "--count", "2", "--width", "40", "--height", "40",
               "--shapes", "1", "--max-disparity", "5", "--out", tmp.file("a")}) == 0);
  REQUIRE(run({"gen-scenes", "--config", tmp.file("a") + "/manifest.json", "--out",
               tmp.file("b")}) == 0);
  CHECK(snapshot(tmp.file("a")) == snapshot(tmp.file("b")));

  // a manifest for another command is rejected
  CHECK(run({"degrade", "--config", tmp.file("a") + "/manifest.json", "--out", tmp.file("c")}) ==
        1);
}

TEST_CASE("cli: gradcheck subcommand reports per-op errors and exits zero") {
  testutil::TempDir tmp("cli_gc");
  CHECK(run({"gradcheck", "--out", tmp.file("g")}) == 0);
  const std::string report = testutil::read_binary(tmp.file("g") + "/gradcheck_report.csv");
  CHECK(report.starts_with("op,max_rel_err,coords,pass"));
  CHECK(report.find("conv2d_s1p1") != std::string::npos);
  CHECK(report.find("iqp_combined_loss") != std::string::npos);
  CHECK(report.find(",0\n") == std::string::npos);  // no failing rows
}
