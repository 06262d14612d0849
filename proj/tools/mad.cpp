// mad: command-line driver for MAD competitions.
//
//   mad select  --taxonomy T --predictions a.csv b.csv ... --out DIR
//   mad label   --out DIR --oracle truth.txt
//   mad rank    --out DIR
//   mad run     (select + label + rank)
//   mad serve   --out DIR --listen 127.0.0.1:8080 --images DIR
//   mad add-model --out DIR --new-predictions new.csv --oracle truth.txt
//   mad stability --out DIR

#include <csignal>
#include <cstdio>
#include <iostream>
#include <string>

#include <httplib.h>
#include <CLI11.hpp>

#include "mad/http_api.hpp"
#include "mad/kernels.hpp"
#include "mad/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using mad::pipeline::RankOverrides;

struct SelectFlags {
  std::string taxonomy;
  std::vector<std::string> predictions;
  mad::CompetitionConfig config;
};

void add_select_flags(CLI::App* cmd, SelectFlags& f) {
  cmd->add_option("--taxonomy", f.taxonomy, "Taxonomy file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--predictions", f.predictions, "One prediction file per model")
      ->required()
      ->expected(2, -1)
      ->check(CLI::ExistingFile);
  cmd->add_option("--k", f.config.selection.k, "Images per pair")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--confidence-threshold", f.config.selection.confidence_threshold,
                  "Minimum confidence of both models")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--label-cap", f.config.selection.label_cap, "Images per predicted label and model")
      ->capture_default_str();
  cmd->add_option("--threads", f.config.selection.threads, "Selection workers (0: all cores)");
  cmd->add_option("--quorum", f.config.voting.quorum, "Votes per query")->capture_default_str();
  cmd->add_option("--difficulty-limit", f.config.voting.difficulty_limit,
                  "Discard when more annotators than this flag difficulty")
      ->capture_default_str();
  cmd->add_option("--smoothing", f.config.ranking.smoothing.pseudo_count, "Additive smoothing pseudo-count")
      ->capture_default_str();
  cmd->add_option("--tolerance", f.config.ranking.perron.tolerance, "Power iteration tolerance")->capture_default_str();
}

mad::store::Settings to_settings(const SelectFlags& f) {
  mad::store::Settings s;
  s.taxonomy = f.taxonomy;
  for (const auto& p : f.predictions) s.predictions.emplace_back(p);
  s.config = f.config;
  return s;
}

void add_rank_flags(CLI::App* cmd, std::optional<double>& smoothing, std::optional<double>& tolerance) {
  cmd->add_option("--smoothing", smoothing, "Override the additive smoothing pseudo-count");
  cmd->add_option("--tolerance", tolerance, "Override the power iteration tolerance");
}

void print_ranking(const mad::CompetitionState& state) {
  const auto ordinal = mad::ordinal_ranks(state.perron.ranking);
  std::printf("%-4s  %-24s  %s\n", "rank", "model", "score");
  for (std::size_t r = 1; r <= state.models.size(); ++r) {
    for (std::size_t i = 0; i < state.models.size(); ++i) {
      if (ordinal.rank[i] == r)
        std::printf("%-4zu  %-24s  %.10g\n", r, state.models[i].c_str(), state.perron.ranking[i]);
    }
  }
  if (ordinal.ties) std::printf("note: tied scores, ordered by model position\n");
}

std::pair<std::string, int> parse_listen(const std::string& listen) {
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) throw mad::Error("--listen expects host:port");
  const int port = std::stoi(listen.substr(colon + 1));
  if (port < 0 || port > 65535) throw mad::Error("--listen: port out of range");
  return {listen.substr(0, colon), port};
}

httplib::Server* g_server = nullptr;

extern "C" void handle_stop(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MAD competition: select discrepant images, label them, rank classifiers"};
  app.set_config("--config", "", "TOML/INI file with flag defaults; command-line flags win");
  app.require_subcommand(1);

  std::string out;
  std::string oracle;
  std::optional<double> smoothing;
  std::optional<double> tolerance;

  SelectFlags select_flags;
  auto* select = app.add_subcommand("select", "Select top-k discrepant images for every model pair");
  add_select_flags(select, select_flags);
  select->add_option("--out", out, "Output directory")->required();

  auto* label = app.add_subcommand("label", "Label the selected images with an oracle file");
  label->add_option("--out", out, "Output directory")->required();
  label->add_option("--oracle", oracle, "Ground-truth label file")->required()->check(CLI::ExistingFile);

  auto* rank = app.add_subcommand("rank", "Compute the global ranking from the verdicts");
  rank->add_option("--out", out, "Output directory")->required();
  add_rank_flags(rank, smoothing, tolerance);

  auto* stability = app.add_subcommand("stability", "SRCC of top-k' rankings against the full ranking");
  stability->add_option("--out", out, "Output directory")->required();
  add_rank_flags(stability, smoothing, tolerance);

  std::string new_predictions;
  auto* add = app.add_subcommand("add-model", "Add one classifier to a finished competition");
  add->add_option("--out", out, "Output directory")->required();
  add->add_option("--new-predictions", new_predictions, "Prediction file of the new model")
      ->required()
      ->check(CLI::ExistingFile);
  add->add_option("--oracle", oracle, "Ground-truth label file")->required()->check(CLI::ExistingFile);
  add_rank_flags(add, smoothing, tolerance);

  SelectFlags run_flags;
  auto* run = app.add_subcommand("run", "select, label and rank in one go");
  add_select_flags(run, run_flags);
  run->add_option("--out", out, "Output directory")->required();
  run->add_option("--oracle", oracle, "Ground-truth label file")->required()->check(CLI::ExistingFile);

  std::string listen = "127.0.0.1:8080";
  std::string images;
  std::string static_dir;
  std::vector<std::string> annotators;
  double lease_seconds = 600;
  std::string durability = "fsync";
  auto* serve = app.add_subcommand("serve", "Run the annotation service over the selected images");
  serve->add_option("--out", out, "Output directory")->required();
  serve->add_option("--listen", listen, "host:port")->capture_default_str();
  serve->add_option("--images", images, "Directory of image files")->check(CLI::ExistingDirectory);
  serve->add_option("--static-dir", static_dir, "Browser UI assets")->check(CLI::ExistingDirectory);
  serve->add_option("--annotators", annotators, "Allowed annotator ids (default: any)")->delimiter(',');
  serve->add_option("--lease-seconds", lease_seconds, "Idle time before an assignment returns to the pool")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  serve->add_option("--durability", durability, "fsync or flush")
      ->capture_default_str()
      ->check(CLI::IsMember({"fsync", "flush"}));

  CLI11_PARSE(app, argc, argv);

  const std::string stage = app.get_subcommands().front()->get_name();
  const RankOverrides overrides{smoothing, tolerance};
  try {
    if (*select) {
      mad::pipeline::select(to_settings(select_flags), out);
      std::printf("selection written to %s (kernel: %s)\n", out.c_str(),
                  std::string(mad::kernels::isa_name(mad::kernels::active_isa())).c_str());
    } else if (*label) {
      mad::pipeline::label(out, oracle);
      std::printf("verdicts written to %s\n", mad::store::Layout(out).verdicts().c_str());
    } else if (*rank) {
      print_ranking(mad::pipeline::rank(out, overrides));
    } else if (*stability) {
      for (const auto& p : mad::pipeline::stability(out, overrides)) std::printf("%zu,%.10g\n", p.k, p.srcc);
    } else if (*add) {
      const std::size_t queried = mad::pipeline::add_model(out, new_predictions, oracle, overrides);
      std::printf("labeled %zu new images\n", queried);
      print_ranking(mad::pipeline::rank(out, overrides));
    } else if (*run) {
      print_ranking(mad::pipeline::run(to_settings(run_flags), out, oracle));
    } else if (*serve) {
      mad::service::ServiceConfig config;
      config.lease = std::chrono::milliseconds(static_cast<std::int64_t>(lease_seconds * 1000));
      config.durability = durability == "flush" ? mad::service::Durability::kFlush : mad::service::Durability::kFsync;
      config.annotators = annotators;
      auto session = mad::pipeline::open_session(out, config);

      mad::http::HttpOptions options;
      if (!images.empty()) options.images_dir = images;
      if (!static_dir.empty()) options.static_dir = static_dir;
      options.on_finalized = [&session, &out] { mad::pipeline::save_session_verdicts(session, out); };

      httplib::Server server;
      mad::http::install_routes(server, *session.service, options);
      const auto [host, port] = parse_listen(listen);
      if (!server.bind_to_port(host, port)) throw mad::Error("cannot listen on " + listen);
      g_server = &server;
      std::signal(SIGINT, handle_stop);
      std::signal(SIGTERM, handle_stop);
      std::printf("serving %zu votes replayed, listening on %s\n", session.service->vote_count(), listen.c_str());
      std::fflush(stdout);
      server.listen_after_bind();
      g_server = nullptr;
      mad::pipeline::save_session_verdicts(session, out);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mad %s: error: %s\n", stage.c_str(), e.what());
    return 1;
  }
  return 0;
}
