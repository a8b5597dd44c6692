#include "thz/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "thz/experiments.hpp"

namespace thz {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  std::cout << "wrote " << path.string() << "\n";
}

KeyValueFile load_config(const std::string& path) {
  if (path.empty()) return {};
  try {
    return KeyValueFile::load(path);
  } catch (const std::exception& e) {
    throw std::invalid_argument(e.what());
  }
}

struct CommonArgs {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> frames;
};

void add_common(CLI::App* sub, CommonArgs& c) {
  sub->add_option("--config", c.config, "key = value configuration file");
  sub->add_option("--out", c.out, "output directory");
  sub->add_option("--seed", c.seed, "seed override");
  sub->add_option("--frames", c.frames, "frame count override");
}

void run_scene(const CommonArgs& args) {
  KeyValueFile kv = load_config(args.config);
  SceneConfig sc = SceneConfig::from_kv(kv);
  if (args.seed) sc.seed = *args.seed;
  Scene scene = build_scene(sc);
  std::filesystem::create_directories(args.out);
  write_file(std::filesystem::path(args.out) / "scene.json", scene.to_json());
}

void run_track(const CommonArgs& args) {
  KeyValueFile kv = load_config(args.config);
  TrackingConfig tc = TrackingConfig::from_kv(kv);
  if (args.seed) tc.scene.seed = *args.seed;
  if (args.frames) {
    if (*args.frames <= 0) throw std::invalid_argument("frames must be positive");
    tc.frames = *args.frames;
  }
  SessionLog log = run_tracking_session(tc);
  std::filesystem::create_directories(args.out);
  std::filesystem::path out(args.out);
  write_file(out / "session.jsonl", log.records_jsonl());
  write_file(out / "map.csv", log.map.to_csv());
  write_file(out / "map_header.json", log.map.header_json());
}

void run_sweep(const CommonArgs& args) {
  KeyValueFile kv = load_config(args.config);

  ReliabilityConfig rc;
  rc.scene = SceneConfig::from_kv(kv);
  rc.max_users = static_cast<int>(kv.get_int("sweep_max_users", 8));
  rc.runs = static_cast<int>(kv.get_int("sweep_runs", 20));
  rc.frames = static_cast<int>(kv.get_int("sweep_frames", 200));
  rc.seed = rc.scene.seed;
  if (args.seed) rc.seed = *args.seed;
  if (args.frames) rc.frames = *args.frames;

  BandwidthConfig bc;
  bc.placements = static_cast<int>(kv.get_int("bw_placements", 10));
  bc.subcarriers = static_cast<int>(kv.get_int("bw_subcarriers", 2048));
  bc.M = static_cast<int>(kv.get_int("bw_antennas", 128));
  bc.snr_db = kv.get_double("bw_snr_db", bc.snr_db);
  bc.seed = rc.seed;

  std::vector<ReliabilityCell> cells = reliability_sweep(rc);
  std::vector<BandwidthCell> bw = bandwidth_sweep(bc);
  std::filesystem::create_directories(args.out);
  write_file(std::filesystem::path(args.out) / "metrics.csv",
             metrics_csv(cells, bw, rc.model.link_bandwidth_hz, rc.seed));
}

void run_decompose(const CommonArgs& args) {
  KeyValueFile kv = load_config(args.config);
  int rank = static_cast<int>(kv.get_int("rank", 1));
  if (rank < 1) throw std::invalid_argument("rank must be positive");

  MeasurementTensor mt;
  if (kv.has("tensor_bin")) {
    mt = load_tensor(kv.get_string("tensor_bin", ""), kv.get_string("tensor_json", ""));
  } else {
    TrackingConfig tc = TrackingConfig::from_kv(kv);
    if (args.seed) tc.scene.seed = *args.seed;
    Scene scene = build_scene(tc.scene);
    if (scene.association.empty()) throw std::invalid_argument("no associated link");
    auto [sub_idx, user_idx] = *scene.association.begin();
    SoundingConfig snd = tc.sounding;
    snd.K = tc.subcarriers;
    CarrierConfig carrier =
        make_carrier(tc.f_hz, tc.bandwidth_hz, tc.subcarriers, tc.water_vapor, 0.0);
    mt = generate_snapshots(scene, scene.subarrays[sub_idx], scene.users[user_idx], snd,
                            carrier);
    if (mt.blocked) throw std::runtime_error("the sampled link is blocked");
  }

  CpdOptions opts;
  opts.seed = args.seed ? *args.seed : 0;
  FactorTriple ft = cpd_als(mt.chi, rank, opts);

  nlohmann::ordered_json j;
  j["rank"] = rank;
  j["fit"] = ft.fit;
  j["iterations"] = ft.iterations;
  j["diagonal_loading_used"] = ft.diagonal_loading_used;
  j["unique_by_kruskal"] =
      kruskal_uniqueness_check(mt.chi.n1, mt.chi.n2, mt.chi.n3, rank);
  SearchGrid grid;
  for (int p = 0; p < rank; ++p) {
    SensingEstimate est =
        estimate_path(ft.A.col(p), ft.B.col(p), ft.C.col(p), mt, grid, 1e-30);
    j["paths"].push_back({{"aoa", est.aoa},
                          {"aod", est.aod},
                          {"toa", est.toa},
                          {"gain_mag", std::abs(est.gain)}});
  }
  std::filesystem::create_directories(args.out);
  write_file(std::filesystem::path(args.out) / "factors.json", j.dump(2) + "\n");
}

}  // namespace

int run_cli(std::vector<std::string> args) {
  CLI::App app{"Indoor THz joint sensing and communication simulator"};
  app.require_subcommand(1);

  CommonArgs scene_args, track_args, sweep_args, dec_args;
  CLI::App* scene = app.add_subcommand("scene", "generate a scene and dump its geometry");
  add_common(scene, scene_args);
  CLI::App* track = app.add_subcommand("track", "run a tracking session and build the map");
  add_common(track, track_args);
  CLI::App* sweep = app.add_subcommand("sweep", "reliability and bandwidth sweeps");
  add_common(sweep, sweep_args);
  CLI::App* dec = app.add_subcommand("decompose", "decompose one measurement tensor");
  add_common(dec, dec_args);

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
    if (scene->parsed()) run_scene(scene_args);
    if (track->parsed()) run_track(track_args);
    if (sweep->parsed()) run_sweep(sweep_args);
    if (dec->parsed()) run_decompose(dec_args);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace thz
