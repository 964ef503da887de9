#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "pssr/checks.hpp"
#include "pssr/degradation.hpp"
#include "pssr/image_io.hpp"
#include "pssr/iqp.hpp"
#include "pssr/qa_net.hpp"
#include "pssr/rankmos.hpp"
#include "pssr/rng.hpp"
#include "pssr/scene.hpp"

namespace pssr::cli {

namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_text(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
  return std::string((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc | std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path.string() + "'");
  os << text;
}

// Resolved parameter set: defaults, overridden by --config (a manifest or a
// bare parameter object), overridden by explicitly passed flags.
class Params {
 public:
  explicit Params(std::string command) : command_(std::move(command)) {}

  template <typename T>
  void def(const std::string& key, const T& v) {
    p_[key] = v;
  }

  void load_config(const std::string& path) {
    json j = json::parse(read_text(path));
    if (j.contains("command")) {
      if (j.at("command").get<std::string>() != command_)
        throw UsageError("config '" + path + "' is a manifest for '" +
                         j.at("command").get<std::string>() + "', not '" + command_ + "'");
      j = j.at("params");
    }
    for (auto& [k, v] : j.items()) {
      if (!p_.contains(k)) throw UsageError("config '" + path + "': unknown parameter '" + k + "'");
      p_[k] = v;
    }
  }

  template <typename T>
  void override_if(const std::string& key, const CLI::Option* opt, const T& v) {
    if (opt != nullptr && opt->count() > 0) p_[key] = v;
  }

  template <typename T>
  T get(const std::string& key) const {
    return p_.at(key).get<T>();
  }

  bool is_null(const std::string& key) const { return p_.at(key).is_null(); }

  void require(const std::string& key) const {
    if (!p_.contains(key) || p_.at(key).is_null())
      throw UsageError("missing required parameter '--" + key + "' for " + command_);
  }

  const json& raw() const { return p_; }
  const std::string& command() const { return command_; }

 private:
  std::string command_;
  json p_ = json::object();
};

fs::path prepare_out_dir(const Params& p) {
  const fs::path out = p.get<std::string>("out");
  fs::create_directories(out);
  return out;
}

void write_manifest(const Params& p, const fs::path& out_dir) {
  json m;
  m["command"] = p.command();
  // the output location is not part of the experiment identity
  json params = p.raw();
  params.erase("out");
  m["params"] = params;
  write_text(out_dir / "manifest.json", m.dump(2) + "\n");
}

std::string index_name(const char* prefix, int i) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s%03d", prefix, i);
  return buf;
}

// --- input discovery ------------------------------------------------------

struct ScenePaths {
  std::string stem;
  fs::path left, right, disp;
};

std::vector<ScenePaths> find_scenes(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: '" + dir.string() + "'");
  std::vector<ScenePaths> out;
  std::vector<fs::path> lefts;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() > 6 && name.ends_with("_L.ppm")) lefts.push_back(e.path());
  }
  std::sort(lefts.begin(), lefts.end());
  for (const fs::path& l : lefts) {
    ScenePaths sp;
    sp.stem = l.filename().string();
    sp.stem = sp.stem.substr(0, sp.stem.size() - 6);
    sp.left = l;
    sp.right = l.parent_path() / (sp.stem + "_R.ppm");
    sp.disp = l.parent_path() / (sp.stem + "_disp.pfm");
    if (!fs::exists(sp.right))
      throw std::runtime_error("missing right view for '" + l.string() + "'");
    out.push_back(sp);
  }
  if (out.empty()) throw std::runtime_error("no *_L.ppm scenes in '" + dir.string() + "'");
  return out;
}

img::StereoPair load_scene(const ScenePaths& sp) {
  img::StereoPair pair;
  pair.left = img::load_ppm(sp.left.string());
  pair.right = img::load_ppm(sp.right.string());
  if (fs::exists(sp.disp)) pair.disparity_gt = img::load_pfm(sp.disp.string());
  img::check_pair(pair);
  return pair;
}

// ref###_v###_{L,R}.ppm grouped by reference index.
std::vector<std::vector<img::StereoPair>> load_versions(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: '" + dir.string() + "'");
  std::map<int, std::map<int, fs::path>> lefts;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    int i = -1, j = -1;
    char side = 0;
    if (std::sscanf(name.c_str(), "ref%d_v%d_%c.ppm", &i, &j, &side) == 3 && side == 'L')
      lefts[i][j] = e.path();
  }
  if (lefts.empty()) throw std::runtime_error("no ref*_v*_L.ppm versions in '" + dir.string() + "'");
  std::vector<std::vector<img::StereoPair>> out;
  int expect_i = 0;
  for (const auto& [i, vmap] : lefts) {
    if (i != expect_i++)
      throw std::runtime_error("version files skip reference index " + std::to_string(expect_i - 1));
    std::vector<img::StereoPair> versions;
    int expect_j = 0;
    for (const auto& [j, lpath] : vmap) {
      if (j != expect_j++)
        throw std::runtime_error("version files skip version index " + std::to_string(expect_j - 1) +
                                 " for reference " + std::to_string(i));
      img::StereoPair pair;
      pair.left = img::load_ppm(lpath.string());
      fs::path rpath = lpath;
      std::string rname = lpath.filename().string();
      rname[rname.size() - 5] = 'R';
      rpath.replace_filename(rname);
      pair.right = img::load_ppm(rpath.string());
      img::check_pair(pair);
      versions.push_back(std::move(pair));
    }
    out.push_back(std::move(versions));
  }
  return out;
}

img::StereoPair center_crop_to(const img::StereoPair& pair, int w, int h) {
  if (pair.left.width == w && pair.left.height == h) return pair;
  if (pair.left.width < w || pair.left.height < h)
    throw std::runtime_error("reference smaller than its versions");
  return img::crop_pair(pair, (pair.left.height - h) / 2, (pair.left.width - w) / 2, h, w);
}

deg::CatalogConfig catalog_from_params(const Params& p) {
  if (!p.is_null("catalog")) return deg::catalog_config_from_json(read_text(p.get<std::string>("catalog")));
  return deg::default_catalog_config();
}

std::string fmtd(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// --- subcommands ----------------------------------------------------------

int cmd_gen_scenes(const Params& p) {
  p.require("seed");
  const fs::path out = prepare_out_dir(p);
  const auto seed = p.get<uint64_t>("seed");
  const int count = p.get<int>("count");
  const int width = p.get<int>("width");
  const int height = p.get<int>("height");
  const int shapes = p.get<int>("shapes");
  const int max_disparity = p.get<int>("max_disparity");

  for (int i = 0; i < count; ++i) {
    const img::StereoPair scene =
        img::gen_scene(derive_seed(seed, static_cast<uint64_t>(i)), width, height, shapes,
                       max_disparity);
    const std::string stem = index_name("scene", i);
    img::save_ppm((out / (stem + "_L.ppm")).string(), scene.left);
    img::save_ppm((out / (stem + "_R.ppm")).string(), scene.right);
    img::save_pfm((out / (stem + "_disp.pfm")).string(), *scene.disparity_gt);
  }
  write_manifest(p, out);
  std::cout << "gen-scenes: wrote " << count << " scenes to " << out.string() << "\n";
  return 0;
}

int cmd_degrade(const Params& p) {
  p.require("seed");
  p.require("refs");
  const fs::path out = prepare_out_dir(p);
  const auto seed = p.get<uint64_t>("seed");
  const deg::CatalogConfig config = catalog_from_params(p);
  const deg::Catalog catalog = deg::build_catalog(config);

  // references are cropped once to a common multiple of every scale so all
  // versions share the reference dimensions
  const int common = std::accumulate(config.scales.begin(), config.scales.end(), 1,
                                     [](int a, int b) { return std::lcm(a, b); });

  const auto scenes = find_scenes(p.get<std::string>("refs"));
  for (size_t i = 0; i < scenes.size(); ++i) {
    const img::StereoPair ref = img::crop_to_multiple(load_scene(scenes[i]), common);
    for (size_t j = 0; j < catalog.specs.size(); ++j) {
      const img::StereoPair version =
          deg::make_version(ref, catalog.specs[j], seed, static_cast<int>(i), static_cast<int>(j));
      img::save_ppm((out / deg::version_filename(static_cast<int>(i), static_cast<int>(j), true)).string(),
                    version.left);
      img::save_ppm((out / deg::version_filename(static_cast<int>(i), static_cast<int>(j), false)).string(),
                    version.right);
    }
  }
  write_text(out / "catalog.json", deg::catalog_config_to_json(config) + "\n");
  write_manifest(p, out);
  std::cout << "degrade: " << scenes.size() << " refs x " << catalog.specs.size()
            << " versions -> " << out.string() << "\n";
  return 0;
}

int cmd_rankmos(const Params& p) {
  p.require("refs");
  p.require("versions");
  const fs::path out = prepare_out_dir(p);

  const auto version_groups = load_versions(p.get<std::string>("versions"));
  const auto scene_paths = find_scenes(p.get<std::string>("refs"));
  if (scene_paths.size() != version_groups.size())
    throw std::runtime_error("rankmos: " + std::to_string(scene_paths.size()) + " references vs " +
                             std::to_string(version_groups.size()) + " version groups");

  std::vector<img::StereoPair> refs;
  for (size_t i = 0; i < scene_paths.size(); ++i)
    refs.push_back(center_crop_to(load_scene(scene_paths[i]), version_groups[i][0].left.width,
                                  version_groups[i][0].left.height));

  std::vector<rankmos::Voter> voters = rankmos::default_voters();
  std::optional<qa::QAModel> qa_model;
  if (!p.is_null("qa_weights")) {
    qa_model = qa::QAModel::load(p.get<std::string>("qa_weights"));
    voters.push_back(qa::qa_as_voter(*qa_model));
  }

  rankmos::VoteTable table = rankmos::vote(refs, version_groups, voters);
  rankmos::order(table);
  const auto scope = p.get<std::string>("norm_scope") == "global" ? rankmos::NormScope::global
                                                                  : rankmos::NormScope::per_reference;
  const rankmos::RankMosTable mos = rankmos::merge(table, scope);

  rankmos::write_votes_csv((out / "votes.csv").string(), table);
  rankmos::write_rankmos_csv((out / "rankmos.csv").string(), mos);
  write_manifest(p, out);
  std::cout << "rankmos: " << table.n_refs << " refs x " << table.n_versions << " versions x "
            << table.n_voters << " voters -> " << out.string() << "\n";
  return 0;
}

qa::QAConfig qa_config_from_params(const Params& p) {
  qa::QAConfig cfg;
  if (!p.is_null("qa_config")) cfg = qa::QAConfig::from_json(read_text(p.get<std::string>("qa_config")));
  if (!p.is_null("patch_size")) cfg.patch_size = p.get<int>("patch_size");
  return cfg;
}

int cmd_train_qa(const Params& p) {
  p.require("seed");
  p.require("data");
  const fs::path out = prepare_out_dir(p);
  const auto seed = p.get<uint64_t>("seed");
  const fs::path data = p.get<std::string>("data");

  const auto versions = load_versions(data);
  const std::string labels_path =
      p.is_null("labels") ? (data / "rankmos.csv").string() : p.get<std::string>("labels");
  const rankmos::RankMosTable labels = rankmos::read_rankmos_csv(labels_path);
  if (labels.n_refs != static_cast<int>(versions.size()))
    throw std::runtime_error("train-qa: label table covers " + std::to_string(labels.n_refs) +
                             " refs, data has " + std::to_string(versions.size()));

  qa::QAConfig cfg = qa_config_from_params(p);
  const int holdout = p.get<int>("holdout");

  std::vector<qa::TrainSample> dataset;
  for (int i = 0; i < labels.n_refs; ++i) {
    if (i == holdout) continue;
    for (int j = 0; j < labels.n_versions; ++j) {
      const auto patches =
          img::extract_patches(versions[static_cast<size_t>(i)][static_cast<size_t>(j)],
                               cfg.patch_size, cfg.patch_size);
      for (const auto& patch : patches) dataset.push_back({patch, labels.rank_mos_at(i, j)});
    }
  }
  if (dataset.empty()) throw std::runtime_error("train-qa: empty training set");

  qa::QAModel model = qa::QAModel::init(cfg, derive_seed(seed, 0x9A));
  const qa::QATrainResult result = qa::qa_train(model, dataset, p.get<int>("epochs"),
                                                p.get<int>("batch"), seed, p.get<double>("lr"));

  model.save((out / "qa_weights.pssrw").string());
  std::string curve = "epoch,loss\n";
  for (size_t e = 0; e < result.epoch_loss.size(); ++e)
    curve += std::to_string(e) + "," + fmtd(result.epoch_loss[e]) + "\n";
  write_text(out / "loss_curve.csv", curve);
  write_manifest(p, out);
  std::cout << "train-qa: " << dataset.size() << " samples, " << p.get<int>("epochs")
            << " epochs, final loss " << result.epoch_loss.back() << " -> " << out.string() << "\n";
  return 0;
}

int cmd_score(const Params& p) {
  p.require("weights");
  p.require("left");
  p.require("right");
  const fs::path out = prepare_out_dir(p);

  const qa::QAModel model = qa::QAModel::load(p.get<std::string>("weights"));
  img::StereoPair pair;
  pair.left = img::load_ppm(p.get<std::string>("left"));
  pair.right = img::load_ppm(p.get<std::string>("right"));

  const int patch = p.is_null("patch_size") ? model.cfg.patch_size : p.get<int>("patch_size");
  const int stride = p.is_null("stride") ? patch : p.get<int>("stride");
  const qa::ScorePrediction pred = qa::qa_predict(model, pair, patch, stride);

  const std::string image = fs::path(p.get<std::string>("left")).filename().string();
  write_text(out / "score.csv",
             "image,score,n_patches\n" + image + "," + fmtd(pred.score) + "," +
                 std::to_string(pred.n_patches) + "\n");
  write_manifest(p, out);
  std::cout << image << "," << fmtd(pred.score) << "," << pred.n_patches << "\n";
  return 0;
}

int cmd_eval_qa(const Params& p) {
  p.require("weights");
  p.require("data");
  const fs::path out = prepare_out_dir(p);
  const fs::path data = p.get<std::string>("data");

  const qa::QAModel model = qa::QAModel::load(p.get<std::string>("weights"));
  const auto versions = load_versions(data);
  const std::string labels_path =
      p.is_null("labels") ? (data / "rankmos.csv").string() : p.get<std::string>("labels");
  const rankmos::RankMosTable labels = rankmos::read_rankmos_csv(labels_path);
  if (labels.n_refs != static_cast<int>(versions.size()) ||
      labels.n_versions != static_cast<int>(versions[0].size()))
    throw std::runtime_error("eval-qa: label table does not match the version files");

  const int only_ref = p.get<int>("ref");
  std::string pred_csv = "ref,version,predicted,label\n";
  std::vector<double> all_pred, all_label;
  std::vector<std::vector<double>> per_ref_pred(versions.size()), per_ref_label(versions.size());
  for (int i = 0; i < labels.n_refs; ++i) {
    if (only_ref >= 0 && i != only_ref) continue;
    for (int j = 0; j < labels.n_versions; ++j) {
      const auto& pair = versions[static_cast<size_t>(i)][static_cast<size_t>(j)];
      const int patch = std::min({model.cfg.patch_size, pair.left.width, pair.left.height});
      const double y = qa::qa_predict(model, pair, patch, patch).score;
      const double z = labels.rank_mos_at(i, j);
      pred_csv += std::to_string(i) + "," + std::to_string(j) + "," + fmtd(y) + "," + fmtd(z) + "\n";
      all_pred.push_back(y);
      all_label.push_back(z);
      per_ref_pred[static_cast<size_t>(i)].push_back(y);
      per_ref_label[static_cast<size_t>(i)].push_back(z);
    }
  }

  auto corr_row = [](const std::string& scope, const std::vector<double>& y,
                     const std::vector<double>& z) {
    return scope + "," + fmtd(rankmos::srocc(y, z)) + "," + fmtd(rankmos::plcc(y, z)) + "," +
           fmtd(rankmos::krocc(y, z)) + "," + fmtd(rankmos::rmse(y, z)) + "\n";
  };
  std::string corr_csv = "scope,srocc,plcc,krocc,rmse\n";
  corr_csv += corr_row("overall", all_pred, all_label);
  for (size_t i = 0; i < per_ref_pred.size(); ++i)
    if (per_ref_pred[i].size() >= 2)
      corr_csv += corr_row(index_name("ref", static_cast<int>(i)), per_ref_pred[i], per_ref_label[i]);

  write_text(out / "predictions.csv", pred_csv);
  write_text(out / "correlations.csv", corr_csv);
  write_manifest(p, out);
  std::cout << "eval-qa: SROCC(overall) = " << fmtd(rankmos::srocc(all_pred, all_label)) << "\n";
  return 0;
}

deg::DegradationSpec spec_from_params(const Params& p) {
  deg::DegradationSpec spec;
  spec.scale = p.get<int>("scale");
  spec.blur_sigma = p.get<double>("blur_sigma");
  spec.noise_level = p.get<double>("noise");
  spec.upsampler = deg::upsampler_from_string(p.get<std::string>("upsampler"));
  deg::validate_spec(spec);
  return spec;
}

int cmd_train_sr(const Params& p) {
  p.require("seed");
  p.require("scenes");
  const fs::path out = prepare_out_dir(p);
  const auto seed = p.get<uint64_t>("seed");

  std::vector<img::StereoPair> scenes;
  for (const auto& sp : find_scenes(p.get<std::string>("scenes"))) scenes.push_back(load_scene(sp));

  iqp::SRTrainOptions opt;
  opt.epochs = p.get<int>("epochs");
  opt.batch = p.get<int>("batch");
  opt.patch = p.get<int>("patch_size");
  opt.lr = p.get<double>("lr");
  opt.lambda0 = p.get<double>("lambda0");
  opt.lambda1 = p.get<double>("lambda1");
  opt.lambda2 = p.get<double>("lambda2");
  opt.seed = seed;
  opt.spec = spec_from_params(p);
  opt.spec.seed = derive_seed(seed, 0xDE6);

  std::optional<qa::QAModel> qa_model;
  if (!p.is_null("qa_weights")) qa_model = qa::QAModel::load(p.get<std::string>("qa_weights"));
  if (!qa_model && (opt.lambda1 != 0.0 || opt.lambda2 != 0.0))
    throw UsageError("train-sr: --qa-weights required when lambda1 or lambda2 is nonzero");

  iqp::SRConfig scfg;
  if (!p.is_null("sr_config")) scfg = iqp::SRConfig::from_json(read_text(p.get<std::string>("sr_config")));
  iqp::SRModel model = iqp::SRModel::init(scfg, derive_seed(seed, 0x5151));

  const iqp::SRTrainResult result =
      iqp::train_sr(model, qa_model ? &*qa_model : nullptr, scenes, opt);

  model.save((out / "sr_weights.pssrw").string());
  iqp::write_loss_curve_csv((out / "loss_curve.csv").string(), result.curve);
  write_manifest(p, out);
  std::cout << "train-sr: " << scenes.size() << " scenes, " << opt.epochs << " epochs, final total "
            << result.curve.back().total << " -> " << out.string() << "\n";
  return 0;
}

int cmd_super_resolve(const Params& p) {
  p.require("weights");
  p.require("left");
  p.require("right");
  p.require("scale");
  const fs::path out = prepare_out_dir(p);

  const iqp::SRModel model = iqp::SRModel::load(p.get<std::string>("weights"));
  img::StereoPair lr;
  lr.left = img::load_ppm(p.get<std::string>("left"));
  lr.right = img::load_ppm(p.get<std::string>("right"));
  const img::StereoPair sr = iqp::super_resolve(model, lr, p.get<int>("scale"));
  img::save_ppm((out / "sr_L.ppm").string(), sr.left);
  img::save_ppm((out / "sr_R.ppm").string(), sr.right);
  write_manifest(p, out);
  std::cout << "super-resolve: " << lr.left.width << "x" << lr.left.height << " -> "
            << sr.left.width << "x" << sr.left.height << "\n";
  return 0;
}

int cmd_eval_sr(const Params& p) {
  p.require("seed");
  p.require("scenes");
  p.require("models");
  const fs::path out = prepare_out_dir(p);

  std::vector<img::StereoPair> scenes;
  for (const auto& sp : find_scenes(p.get<std::string>("scenes"))) scenes.push_back(load_scene(sp));

  std::vector<iqp::SRModel> models;
  std::vector<std::pair<std::string, const iqp::SRModel*>> model_refs;
  {
    std::stringstream ss(p.get<std::string>("models"));
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) models.push_back(iqp::SRModel::load(item));
    std::stringstream ss2(p.get<std::string>("models"));
    size_t idx = 0;
    while (std::getline(ss2, item, ','))
      if (!item.empty()) model_refs.emplace_back(fs::path(item).filename().string(), &models[idx++]);
  }

  std::vector<deg::DegradationSpec> specs;
  if (!p.is_null("catalog")) {
    specs = deg::build_catalog(deg::catalog_config_from_json(read_text(p.get<std::string>("catalog")))).specs;
  } else {
    specs.push_back(spec_from_params(p));
  }

  std::optional<qa::QAModel> qa_model;
  if (!p.is_null("qa_weights")) qa_model = qa::QAModel::load(p.get<std::string>("qa_weights"));

  const auto rows = iqp::eval_sr(model_refs, scenes, specs, qa_model ? &*qa_model : nullptr,
                                 p.get<uint64_t>("seed"), p.get<int>("window"),
                                 p.get<int>("max_search"));
  iqp::write_eval_csv((out / "eval.csv").string(), rows);
  write_text(out / "report.txt", iqp::format_eval_table(rows));
  write_manifest(p, out);
  std::cout << iqp::format_eval_table(rows);
  return 0;
}

int cmd_gradcheck(const Params& p) {
  const fs::path out = prepare_out_dir(p);
  const auto entries = checks::run_gradcheck_suite(p.get<uint64_t>("seed"));
  std::string csv = "op,max_rel_err,coords,pass\n";
  for (const auto& e : entries) {
    csv += e.name + "," + fmtd(e.max_rel_err) + "," + std::to_string(e.coords) + "," +
           (e.pass ? "1" : "0") + "\n";
    std::printf("%-20s max_rel_err=%.3e coords=%lld %s\n", e.name.c_str(), e.max_rel_err,
                static_cast<long long>(e.coords), e.pass ? "PASS" : "FAIL");
  }
  write_text(out / "gradcheck_report.csv", csv);
  write_manifest(p, out);
  if (!checks::all_pass(entries)) {
    std::cerr << "error: gradcheck tolerance " << checks::kGradTolerance << " exceeded\n";
    return 1;
  }
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"pssr: perception-oriented stereo super-resolution lab"};
  app.require_subcommand(1);

  // Per-subcommand option storage. Values only count when the flag was
  // passed explicitly; resolution order is defaults < --config < flags.
  std::string config_path, out_dir, refs, versions_dir, data_dir, scenes_dir, weights, left, right,
      models, catalog, qa_config, sr_config, qa_weights, norm_scope, upsampler, labels_path_opt;
  uint64_t seed = 0;
  int count = 0, width = 0, height = 0, shapes = 0, max_disparity = 0, epochs = 0, batch = 0,
      patch_size = 0, stride = 0, holdout = 0, ref_filter = 0, scale = 0, window = 0,
      max_search = 0;
  double lr = 0, lambda0 = 0, lambda1 = 0, lambda2 = 0, blur_sigma = 0, noise = 0;

  struct Sub {
    CLI::App* app = nullptr;
    std::map<std::string, CLI::Option*> opts;
    Params params{""};
    std::function<int(const Params&)> fn;
  };
  std::vector<Sub> subs;

  auto add_sub = [&](const std::string& name, const std::string& desc,
                     std::function<int(const Params&)> fn) -> Sub& {
    subs.push_back(Sub{});
    Sub& s = subs.back();
    s.app = app.add_subcommand(name, desc);
    s.params = Params(name);
    s.fn = std::move(fn);
    s.opts["config"] = s.app->add_option("--config", config_path, "JSON config or manifest to rerun");
    s.opts["out"] = s.app->add_option("--out", out_dir, "output directory");
    s.params.def("out", nullptr);
    return s;
  };

  {
    Sub& s = add_sub("gen-scenes", "generate synthetic stereo scenes", cmd_gen_scenes);
    s.opts["seed"] = s.app->add_option("--seed", seed, "master seed (required)");
    s.opts["count"] = s.app->add_option("--count", count, "number of scenes");
    s.opts["width"] = s.app->add_option("--width", width, "scene width");
    s.opts["height"] = s.app->add_option("--height", height, "scene height");
    s.opts["shapes"] = s.app->add_option("--shapes", shapes, "rectangles per scene");
    s.opts["max_disparity"] = s.app->add_option("--max-disparity", max_disparity, "largest shape disparity");
    s.params.def("seed", nullptr);
    s.params.def("count", 8);
    s.params.def("width", 120);
    s.params.def("height", 120);
    s.params.def("shapes", 3);
    s.params.def("max_disparity", 10);
  }
  {
    Sub& s = add_sub("degrade", "apply the distortion catalog to reference scenes", cmd_degrade);
    s.opts["seed"] = s.app->add_option("--seed", seed, "master seed (required)");
    s.opts["refs"] = s.app->add_option("--refs", refs, "directory of reference scenes");
    s.opts["catalog"] = s.app->add_option("--catalog", catalog, "catalog config JSON (default desk catalog)");
    s.params.def("seed", nullptr);
    s.params.def("refs", nullptr);
    s.params.def("catalog", nullptr);
  }
  {
    Sub& s = add_sub("rankmos", "synthesize rankMOS labels from references and versions", cmd_rankmos);
    s.opts["refs"] = s.app->add_option("--refs", refs, "directory of reference scenes");
    s.opts["versions"] = s.app->add_option("--versions", versions_dir, "directory of distorted versions");
    s.opts["qa_weights"] = s.app->add_option("--qa-weights", qa_weights, "optional trained QA voter");
    s.opts["norm_scope"] = s.app->add_option("--norm-scope", norm_scope, "per_reference | global");
    s.params.def("refs", nullptr);
    s.params.def("versions", nullptr);
    s.params.def("qa_weights", nullptr);
    s.params.def("norm_scope", "per_reference");
  }
  {
    Sub& s = add_sub("train-qa", "train the quality network on rankMOS labels", cmd_train_qa);
    s.opts["seed"] = s.app->add_option("--seed", seed, "master seed (required)");
    s.opts["data"] = s.app->add_option("--data", data_dir, "directory of distorted versions");
    s.opts["labels"] = s.app->add_option("--labels", labels_path_opt, "rankMOS csv (default <data>/rankmos.csv)");
    s.opts["epochs"] = s.app->add_option("--epochs", epochs, "training epochs");
    s.opts["batch"] = s.app->add_option("--batch", batch, "mini-batch size");
    s.opts["lr"] = s.app->add_option("--lr", lr, "Adam learning rate");
    s.opts["patch_size"] = s.app->add_option("--patch-size", patch_size, "training patch size");
    s.opts["holdout"] = s.app->add_option("--holdout", holdout, "reference index to exclude");
    s.opts["qa_config"] = s.app->add_option("--qa-config", qa_config, "QA config JSON");
    s.params.def("seed", nullptr);
    s.params.def("data", nullptr);
    s.params.def("labels", nullptr);
    s.params.def("epochs", 30);
    s.params.def("batch", 8);
    s.params.def("lr", 1e-4);
    s.params.def("patch_size", nullptr);
    s.params.def("holdout", -1);
    s.params.def("qa_config", nullptr);
  }
  {
    Sub& s = add_sub("score", "score one stereo pair with a trained QA model", cmd_score);
    s.opts["weights"] = s.app->add_option("--weights", weights, "QA checkpoint");
    s.opts["left"] = s.app->add_option("--left", left, "left view PPM");
    s.opts["right"] = s.app->add_option("--right", right, "right view PPM");
    s.opts["patch_size"] = s.app->add_option("--patch-size", patch_size, "patch size (default: model)");
    s.opts["stride"] = s.app->add_option("--stride", stride, "patch stride (default: patch size)");
    s.params.def("weights", nullptr);
    s.params.def("left", nullptr);
    s.params.def("right", nullptr);
    s.params.def("patch_size", nullptr);
    s.params.def("stride", nullptr);
  }
  {
    Sub& s = add_sub("eval-qa", "correlation report of QA predictions vs rankMOS", cmd_eval_qa);
    s.opts["weights"] = s.app->add_option("--weights", weights, "QA checkpoint");
    s.opts["data"] = s.app->add_option("--data", data_dir, "directory of distorted versions");
    s.opts["labels"] = s.app->add_option("--labels", labels_path_opt, "rankMOS csv (default <data>/rankmos.csv)");
    s.opts["ref"] = s.app->add_option("--ref", ref_filter, "evaluate one reference only");
    s.params.def("weights", nullptr);
    s.params.def("data", nullptr);
    s.params.def("labels", nullptr);
    s.params.def("ref", -1);
  }
  {
    Sub& s = add_sub("train-sr", "train the stereo SR network (MSE or IQP)", cmd_train_sr);
    s.opts["seed"] = s.app->add_option("--seed", seed, "master seed (required)");
    s.opts["scenes"] = s.app->add_option("--scenes", scenes_dir, "directory of HR scenes");
    s.opts["qa_weights"] = s.app->add_option("--qa-weights", qa_weights, "frozen QA checkpoint");
    s.opts["epochs"] = s.app->add_option("--epochs", epochs, "training epochs");
    s.opts["batch"] = s.app->add_option("--batch", batch, "mini-batch size");
    s.opts["patch_size"] = s.app->add_option("--patch-size", patch_size, "HR patch size");
    s.opts["lr"] = s.app->add_option("--lr", lr, "Adam learning rate");
    s.opts["lambda0"] = s.app->add_option("--lambda0", lambda0, "pixel MSE weight");
    s.opts["lambda1"] = s.app->add_option("--lambda1", lambda1, "image-level IQP weight");
    s.opts["lambda2"] = s.app->add_option("--lambda2", lambda2, "feature-level IQP weight");
    s.opts["scale"] = s.app->add_option("--scale", scale, "SR scale");
    s.opts["blur_sigma"] = s.app->add_option("--blur-sigma", blur_sigma, "BD blur sigma (0 = BI)");
    s.opts["noise"] = s.app->add_option("--noise", noise, "noise level [0,30]");
    s.opts["upsampler"] = s.app->add_option("--upsampler", upsampler, "nearest|bilinear|bicubic");
    s.opts["sr_config"] = s.app->add_option("--sr-config", sr_config, "SR config JSON");
    s.params.def("seed", nullptr);
    s.params.def("scenes", nullptr);
    s.params.def("qa_weights", nullptr);
    s.params.def("epochs", 50);
    s.params.def("batch", 4);
    s.params.def("patch_size", 120);
    s.params.def("lr", 1e-4);
    s.params.def("lambda0", 1.0);
    s.params.def("lambda1", 0.1);
    s.params.def("lambda2", 0.1);
    s.params.def("scale", 4);
    s.params.def("blur_sigma", 0.0);
    s.params.def("noise", 0.0);
    s.params.def("upsampler", "bicubic");
    s.params.def("sr_config", nullptr);
  }
  {
    Sub& s = add_sub("super-resolve", "super-resolve one LR stereo pair", cmd_super_resolve);
    s.opts["weights"] = s.app->add_option("--weights", weights, "SR checkpoint");
    s.opts["left"] = s.app->add_option("--left", left, "left LR view PPM");
    s.opts["right"] = s.app->add_option("--right", right, "right LR view PPM");
    s.opts["scale"] = s.app->add_option("--scale", scale, "SR scale");
    s.params.def("weights", nullptr);
    s.params.def("left", nullptr);
    s.params.def("right", nullptr);
    s.params.def("scale", nullptr);
  }
  {
    Sub& s = add_sub("eval-sr", "PSNR/SSIM/QA/EPE sweep of SR models", cmd_eval_sr);
    s.opts["seed"] = s.app->add_option("--seed", seed, "master seed (required)");
    s.opts["models"] = s.app->add_option("--models", models, "comma-separated SR checkpoints");
    s.opts["scenes"] = s.app->add_option("--scenes", scenes_dir, "directory of HR scenes");
    s.opts["qa_weights"] = s.app->add_option("--qa-weights", qa_weights, "QA checkpoint for scoring");
    s.opts["catalog"] = s.app->add_option("--catalog", catalog, "catalog config JSON of specs");
    s.opts["scale"] = s.app->add_option("--scale", scale, "single-spec scale");
    s.opts["blur_sigma"] = s.app->add_option("--blur-sigma", blur_sigma, "single-spec blur sigma");
    s.opts["noise"] = s.app->add_option("--noise", noise, "single-spec noise level");
    s.opts["upsampler"] = s.app->add_option("--upsampler", upsampler, "single-spec upsampler");
    s.opts["window"] = s.app->add_option("--window", window, "block-matching window");
    s.opts["max_search"] = s.app->add_option("--max-search", max_search, "disparity search range");
    s.params.def("seed", nullptr);
    s.params.def("models", nullptr);
    s.params.def("scenes", nullptr);
    s.params.def("qa_weights", nullptr);
    s.params.def("catalog", nullptr);
    s.params.def("scale", 4);
    s.params.def("blur_sigma", 0.0);
    s.params.def("noise", 0.0);
    s.params.def("upsampler", "bicubic");
    s.params.def("window", 7);
    s.params.def("max_search", 16);
  }
  {
    Sub& s = add_sub("gradcheck", "finite-difference validation of every graph op", cmd_gradcheck);
    s.opts["seed"] = s.app->add_option("--seed", seed, "suite seed");
    s.params.def("seed", 17);
  }

  std::vector<const char*> argv;
  argv.push_back("pssr");
  for (const auto& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  for (Sub& s : subs) {
    if (!s.app->parsed()) continue;
    try {
      if (s.opts["config"]->count() > 0) s.params.load_config(config_path);
      // flag overrides
      s.params.override_if("out", s.opts["out"], out_dir);
      auto ov_str = [&](const char* key, const std::string& v) {
        if (s.opts.count(key)) s.params.override_if(key, s.opts[key], v);
      };
      auto ov_int = [&](const char* key, int v) {
        if (s.opts.count(key)) s.params.override_if(key, s.opts[key], v);
      };
      auto ov_dbl = [&](const char* key, double v) {
        if (s.opts.count(key)) s.params.override_if(key, s.opts[key], v);
      };
      if (s.opts.count("seed")) s.params.override_if("seed", s.opts["seed"], seed);
      ov_int("count", count);
      ov_int("width", width);
      ov_int("height", height);
      ov_int("shapes", shapes);
      ov_int("max_disparity", max_disparity);
      ov_int("epochs", epochs);
      ov_int("batch", batch);
      ov_int("patch_size", patch_size);
      ov_int("stride", stride);
      ov_int("holdout", holdout);
      ov_int("ref", ref_filter);
      ov_int("scale", scale);
      ov_int("window", window);
      ov_int("max_search", max_search);
      ov_dbl("lr", lr);
      ov_dbl("lambda0", lambda0);
      ov_dbl("lambda1", lambda1);
      ov_dbl("lambda2", lambda2);
      ov_dbl("blur_sigma", blur_sigma);
      ov_dbl("noise", noise);
      ov_str("refs", refs);
      ov_str("versions", versions_dir);
      ov_str("data", data_dir);
      ov_str("labels", labels_path_opt);
      ov_str("scenes", scenes_dir);
      ov_str("weights", weights);
      ov_str("left", left);
      ov_str("right", right);
      ov_str("models", models);
      ov_str("catalog", catalog);
      ov_str("qa_config", qa_config);
      ov_str("sr_config", sr_config);
      ov_str("qa_weights", qa_weights);
      ov_str("norm_scope", norm_scope);
      ov_str("upsampler", upsampler);

      s.params.require("out");
      return s.fn(s.params);
    } catch (const UsageError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    }
  }
  std::cerr << "error: no subcommand\n";
  return 1;
}

}  // namespace pssr::cli
