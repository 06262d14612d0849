#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include <json.hpp>

#include "mad/service.hpp"

namespace httplib {
class Server;
}

namespace mad::http {

struct HttpOptions {
  // Directory holding image files named <image_id> or <image_id>.<ext>.
  std::optional<std::filesystem::path> images_dir;
  // Browser UI assets, mounted at "/".
  std::optional<std::filesystem::path> static_dir;
  // Called after a vote that finalized at least one verdict.
  std::function<void()> on_finalized;
};

// JSON renderings shared by the endpoints.
nlohmann::json progress_json(const service::AnnotationService& svc);
nlohmann::json ranking_json(const service::AnnotationService& svc);

// Registers the annotation endpoints on `server`. The service must outlive it.
void install_routes(httplib::Server& server, service::AnnotationService& svc, const HttpOptions& options);

}  // namespace mad::http
