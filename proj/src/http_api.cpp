#include "mad/http_api.hpp"

#include <fstream>
#include <sstream>

#include <httplib.h>

#include "mad/store.hpp"

namespace mad::http {

namespace {

using nlohmann::json;
using service::ServiceError;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

int status_for(ServiceError::Kind kind) {
  switch (kind) {
    case ServiceError::Kind::kUnknownAnnotator:
      return 403;
    case ServiceError::Kind::kNoLease:
    case ServiceError::Kind::kDuplicate:
      return 409;
    case ServiceError::Kind::kBadRequest:
      return 400;
  }
  return 500;
}

std::string_view kind_token(ServiceError::Kind kind) {
  switch (kind) {
    case ServiceError::Kind::kUnknownAnnotator:
      return "unknown_annotator";
    case ServiceError::Kind::kNoLease:
      return "no_lease";
    case ServiceError::Kind::kDuplicate:
      return "duplicate";
    case ServiceError::Kind::kBadRequest:
      return "bad_request";
  }
  return "error";
}

bool safe_image_id(const std::string& id) {
  return !id.empty() && id.front() != '.' && id.find('/') == std::string::npos && id.find('\\') == std::string::npos &&
         id.find('\0') == std::string::npos;
}

const char* content_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".jpg" || ext == ".jpeg" || ext == ".JPEG" || ext == ".JPG") return "image/jpeg";
  if (ext == ".png") return "image/png";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

std::optional<std::filesystem::path> find_image(const std::filesystem::path& dir, const std::string& id) {
  namespace fs = std::filesystem;
  if (fs::is_regular_file(dir / id)) return dir / id;
  for (const char* ext : {".jpg", ".jpeg", ".JPEG", ".png", ".webp", ".gif"}) {
    fs::path p = dir / (id + ext);
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

template <typename T>
T field(const json& body, const char* name) {
  if (!body.contains(name)) throw ServiceError(ServiceError::Kind::kBadRequest, std::string("missing field ") + name);
  try {
    return body.at(name).get<T>();
  } catch (const json::exception&) {
    throw ServiceError(ServiceError::Kind::kBadRequest, std::string("bad type for field ") + name);
  }
}

LabelId label_field(const TaxonomyGraph& graph, const json& body, const char* name) {
  auto id = graph.find_label(field<std::string>(body, name));
  if (!id) throw ServiceError(ServiceError::Kind::kBadRequest, std::string("unknown label in ") + name);
  return *id;
}

}  // namespace

json progress_json(const service::AnnotationService& svc) {
  json pairs = json::array();
  std::size_t pending = 0, finalized = 0, discarded = 0;
  for (const auto& p : svc.progress()) {
    pairs.push_back({{"pair", {svc.models()[p.pair.first], svc.models()[p.pair.second]}},
                     {"pending", p.pending},
                     {"finalized", p.finalized},
                     {"discarded", p.discarded},
                     {"exhausted", p.exhausted}});
    pending += p.pending;
    finalized += p.finalized;
    discarded += p.discarded;
  }
  return {{"pairs", pairs},         {"pending", pending},        {"finalized", finalized},
          {"discarded", discarded}, {"votes", svc.vote_count()}, {"complete", svc.complete()}};
}

json ranking_json(const service::AnnotationService& svc) {
  const CompetitionState state = svc.ranking_snapshot();
  json ranking = json::array();
  for (double r : state.perron.ranking) ranking.push_back(store::round_sig10(r));
  const auto ordinal = ordinal_ranks(state.perron.ranking);
  return {{"models", state.models},
          {"partial", state.partial},
          {"ranking", ranking},
          {"ordinal_ranks", ordinal.rank},
          {"ordinal_ties", ordinal.ties}};
}

void install_routes(httplib::Server& server, service::AnnotationService& svc, const HttpOptions& options) {
  const auto guarded = [](auto handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const ServiceError& e) {
        send_json(res, status_for(e.kind()), {{"error", kind_token(e.kind())}, {"message", e.what()}});
      } catch (const std::exception& e) {
        send_json(res, 500, {{"error", "internal"}, {"message", e.what()}});
      }
    };
  };

  server.Get("/api/next", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               if (!req.has_param("annotator"))
                 throw ServiceError(ServiceError::Kind::kBadRequest, "missing annotator parameter");
               const auto next = svc.next_query(req.get_param_value("annotator"));
               if (!next) {
                 res.status = 204;
                 return;
               }
               const auto& g = svc.graph();
               send_json(res, 200,
                         {{"image_id", next->image},
                          {"image_url", "/images/" + httplib::detail::encode_url(next->image)},
                          {"question_a", g.label_key(next->question_a)},
                          {"question_b", g.label_key(next->question_b)},
                          {"question_a_name", g.label_name(next->question_a)},
                          {"question_b_name", g.label_name(next->question_b)}});
             }));

  server.Post(
      "/api/vote", guarded([&svc, notify = options.on_finalized](const httplib::Request& req, httplib::Response& res) {
        const json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object())
          throw ServiceError(ServiceError::Kind::kBadRequest, "body is not a JSON object");
        service::VoteRequest vote;
        vote.annotator = field<std::string>(body, "annotator");
        vote.image = field<std::string>(body, "image_id");
        vote.difficulty = body.contains("difficulty") ? field<bool>(body, "difficulty") : false;
        if (!vote.difficulty) {
          vote.answer_a = field<bool>(body, "answer_a");
          vote.answer_b = field<bool>(body, "answer_b");
        }
        if (body.contains("question_a") || body.contains("question_b")) {
          vote.questions =
              std::pair{label_field(svc.graph(), body, "question_a"), label_field(svc.graph(), body, "question_b")};
        }
        const auto ack = svc.submit_vote(vote);
        json finalized = json::array();
        for (const auto& v : ack.finalized) {
          finalized.push_back({{"pair", {svc.models()[v.pair.first], svc.models()[v.pair.second]}},
                               {"image_id", v.image},
                               {"case", outcome_token(v.outcome)}});
        }
        send_json(res, 200, {{"ok", true}, {"finalized", finalized}});
        if (!ack.finalized.empty() && notify) notify();
      }));

  server.Get("/api/progress", guarded([&svc](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200, progress_json(svc));
             }));

  server.Get("/api/ranking", guarded([&svc](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200, ranking_json(svc));
             }));

  server.Get(R"(/images/([^/]+))", [images = options.images_dir](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    if (!images || !safe_image_id(id)) {
      res.status = 404;
      return;
    }
    const auto path = find_image(*images, id);
    if (!path) {
      res.status = 404;
      return;
    }
    std::ifstream in(*path, std::ios::binary);
    std::ostringstream bytes;
    bytes << in.rdbuf();
    res.set_content(bytes.str(), content_type(*path));
  });

  if (options.static_dir) server.set_mount_point("/", options.static_dir->string());
}

}  // namespace mad::http
