// softhgr: exact oracle, training, and experiment harnesses.
//
// Exit codes: 0 success, 1 usage, 2 data/validation, 3 numerical failure.

#include "softhgr/error.hpp"
#include "softhgr/experiments.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

int exit_code_for(softhgr::ErrorKind kind) {
  switch (kind) {
    case softhgr::ErrorKind::singular_covariance:
    case softhgr::ErrorKind::insufficient_overlap:
    case softhgr::ErrorKind::no_supervision:
      return kExitNumerical;
    default:
      return kExitData;
  }
}

template <typename T>
std::vector<T> parse_list(const std::string& csv) {
  std::vector<T> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::stringstream conv(item);
    T value{};
    conv >> value;
    if (conv.fail() || !conv.eof()) throw CLI::ValidationError("list", "cannot parse \"" + item + "\"");
    out.push_back(value);
  }
  if (out.empty()) throw CLI::ValidationError("list", "empty list");
  return out;
}

void emit(const softhgr::ExperimentReport& report, const std::string& out_dir) {
  if (out_dir.empty()) {
    std::cout << report.to_json().dump(2) << '\n';
  } else {
    report.write(out_dir);
    std::cout << "wrote " << (std::filesystem::path(out_dir) / (report.experiment + ".json")).string()
              << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Soft-HGR feature learning: exact oracle, training and experiments"};
  app.require_subcommand(1);
  std::string out_dir;
  app.add_option("--out", out_dir, "Directory for JSON and CSV outputs");

  // oracle
  auto* oracle = app.add_subcommand("oracle", "Exact HGR features of a discrete joint distribution");
  std::string dist_file;
  long long oracle_k = 1;
  std::string tables_file = "oracle_tables.json";
  oracle->add_option("--dist", dist_file, "DiscreteJoint JSON file")->required();
  oracle->add_option("--k", oracle_k, "Feature count")->required();
  oracle->add_option("--tables", tables_file, "Where to write f*/g* tables when --out is not given");

  // linearity
  auto* lin = app.add_subcommand("linearity", "Soft vs exact feature-space agreement check");
  softhgr::experiments::LinearityParams lp;
  lin->add_option("--card", lp.card, "Alphabet size of X and Y")->required();
  lin->add_option("--n", lp.n, "Sample count")->required();
  lin->add_option("--k", lp.k, "Feature count")->required();
  lin->add_option("--seed", lp.seed, "Seed")->required();
  lin->add_option("--epochs", lp.epochs, "Training epochs");
  lin->add_option("--lr", lp.learning_rate, "Learning rate (0 = 2/3 * card)");
  lin->add_option("--batch", lp.batch_size, "Batch size (0 = full batch)");
  lin->add_option("--concentration", lp.concentration, "Dirichlet concentration of the joint");

  // bench
  auto* bench = app.add_subcommand("bench", "Step time and stability: soft objective vs whitened baseline");
  softhgr::experiments::BenchParams bp;
  std::string k_list = "50,100,200,400";
  bench->add_option("--m", bp.m, "Batch size")->required();
  bench->add_option("--k-list", k_list, "Comma-separated feature dimensions")->required();
  bench->add_option("--ridge", bp.ridge, "Ridge for the whitened baseline");
  bench->add_option("--reps", bp.repetitions, "Timed repetitions per configuration");
  bench->add_option("--dim", bp.dim, "Split-vector width (each view gets half)");
  bench->add_option("--seed", bp.seed, "Seed");

  // semi
  auto* semi = app.add_subcommand("semi", "Semi-supervised accuracy versus lambda");
  softhgr::experiments::SemiParams sp;
  std::string lambda_list = "0,0.1,0.3,0.5";
  std::string fraction_list = "0.1";
  std::string seed_list = "0,1,2,3,4";
  semi->add_option("--lambda-list", lambda_list, "Comma-separated lambdas");
  semi->add_option("--label-fractions", fraction_list, "Comma-separated labeled fractions");
  semi->add_option("--seeds", seed_list, "Comma-separated seeds");
  semi->add_option("--classes", sp.classes, "Latent class count");
  semi->add_option("--dim", sp.dim, "Width of each view");
  semi->add_option("--noise", sp.noise, "Noise standard deviation");
  semi->add_option("--centroid-scale", sp.centroid_scale, "Standard deviation of centroid entries");
  semi->add_option("--n", sp.n, "Samples per seed (train + test)");
  semi->add_option("--k", sp.k, "Feature count");
  semi->add_option("--hidden", sp.hidden, "Hidden width of each branch");
  semi->add_option("--epochs", sp.epochs, "Training epochs");
  semi->add_option("--batch", sp.batch_size, "Batch size");
  semi->add_option("--lr", sp.learning_rate, "Learning rate");

  // train
  auto* trn = app.add_subcommand("train", "Train from a JSON config (TrainConfig fields + \"data\")");
  std::string config_file;
  trn->add_option("--config", config_file, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (*oracle) {
      const auto report = softhgr::experiments::oracle(dist_file, oracle_k);
      if (out_dir.empty()) {
        nlohmann::json tables{{"f_table", report.series[0].rows}, {"g_table", report.series[1].rows}};
        std::ofstream out(tables_file);
        if (!out) throw softhgr::Error(softhgr::ErrorKind::io, "cannot write " + tables_file);
        out << tables.dump(2) << '\n';
      }
      emit(report, out_dir);
    } else if (*lin) {
      emit(softhgr::experiments::linearity(lp), out_dir);
    } else if (*bench) {
      try {
        bp.k_list = parse_list<Eigen::Index>(k_list);
      } catch (const CLI::Error& e) {
        std::cerr << "--k-list: " << e.what() << '\n';
        return kExitUsage;
      }
      emit(softhgr::experiments::bench(bp), out_dir);
    } else if (*semi) {
      try {
        sp.lambdas = parse_list<double>(lambda_list);
        sp.label_fractions = parse_list<double>(fraction_list);
        sp.seeds = parse_list<std::uint64_t>(seed_list);
      } catch (const CLI::Error& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
      }
      emit(softhgr::experiments::semi(sp), out_dir);
    } else if (*trn) {
      std::ifstream in(config_file);
      if (!in) throw softhgr::Error(softhgr::ErrorKind::io, "cannot open " + config_file);
      nlohmann::json config;
      try {
        in >> config;
      } catch (const nlohmann::json::exception& e) {
        throw softhgr::Error(softhgr::ErrorKind::parse, config_file + ": " + e.what());
      }
      const std::filesystem::path base = std::filesystem::path(config_file).parent_path();
      const auto run = softhgr::experiments::train_from_config(
          config, base, out_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(out_dir));
      emit(run.report, out_dir);
      if (!run.result.trace.failures.empty()) {
        std::cerr << "training stopped: " << run.result.trace.failures.front().message << '\n';
        return kExitNumerical;
      }
    }
  } catch (const softhgr::Error& e) {
    std::cerr << "error (" << softhgr::to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  }
  return 0;
}
