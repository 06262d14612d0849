// mad_synth: writes a synthetic competition (taxonomy, oracle, one prediction
// file per classifier) for demos and end-to-end tests.

#include <cstdio>
#include <fstream>

#include <CLI11.hpp>

#include "mad/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic MAD competition"};
  std::string out;
  mad::synthetic::WorldSpec world_spec;
  std::vector<double> error_rates{0.05, 0.10, 0.20, 0.40};
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--images", world_spec.images, "Corpus size")->capture_default_str();
  app.add_option("--branching", world_spec.branching, "Children per taxonomy node")->capture_default_str();
  app.add_option("--levels", world_spec.levels, "Taxonomy levels below the root")->capture_default_str();
  app.add_option("--second-label-rate", world_spec.second_label_rate)->capture_default_str();
  app.add_option("--nonnatural-rate", world_spec.nonnatural_rate)->capture_default_str();
  app.add_option("--seed", world_spec.seed)->capture_default_str();
  app.add_option("--error-rates", error_rates, "One classifier per rate")->delimiter(',')->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    namespace fs = std::filesystem;
    fs::create_directories(out);
    const auto world = mad::synthetic::make_world(world_spec);
    std::ofstream taxonomy(fs::path(out) / "taxonomy.txt");
    mad::synthetic::write_taxonomy(taxonomy, world.graph);
    std::ofstream oracle(fs::path(out) / "oracle.txt");
    mad::synthetic::write_oracle(oracle, world);
    for (std::size_t i = 0; i < error_rates.size(); ++i) {
      const std::string name = "clf" + std::to_string(i + 1);
      const auto model = mad::synthetic::make_model(
          world, {.name = name, .error_rate = error_rates[i], .seed = world_spec.seed * 1000 + i + 1});
      std::ofstream file(fs::path(out) / (name + ".csv"));
      mad::synthetic::write_predictions(file, model, world.graph);
    }
    std::printf("wrote %zu images, %zu labels, %zu classifiers to %s\n", world.images.size(), world.graph.label_count(),
                error_rates.size(), out.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mad_synth: error: %s\n", e.what());
    return 1;
  }
  return 0;
}
