#include "cbvc/service.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>

#include "httplib.h"
#include "json.hpp"

namespace cbvc {

using nlohmann::json;

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool valid_observer(const std::string& id) {
  return !id.empty() && id.size() <= 128 &&
         std::none_of(id.begin(), id.end(), [](unsigned char c) { return c < 0x20 || c == 0x7f; });
}

std::string content_type_for(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".mp4") return "video/mp4";
  if (ext == ".webm") return "video/webm";
  if (ext == ".hevc" || ext == ".265") return "video/H265";
  return "application/octet-stream";
}

}  // namespace

SessionService::SessionService(SessionPlan plan, std::filesystem::path media_root,
                               std::filesystem::path ratings_csv)
    : plan_(std::move(plan)),
      media_root_(std::move(media_root)),
      ratings_csv_(std::move(ratings_csv)) {
  if (const auto v = validate_session(plan_); !v.empty())
    throw PlanError("session plan invalid: " + v.front().message);
  auto add_media = [&](const StimulusRecord& r) {
    if (r.media.empty()) throw PlanError("stimulus '" + r.id + "' has no media");
    std::filesystem::path p(r.media);
    if (p.is_relative()) p = media_root_ / p;
    std::error_code ec;
    if (!std::filesystem::is_regular_file(p, ec))
      throw IoError("media for '" + r.id + "' missing: " + p.string());
    const auto [it, fresh] = media_.emplace(r.id, p);
    if (!fresh && it->second != p)
      throw PlanError("stimulus '" + r.id + "' maps to two media files");
  };
  for (const auto& r : plan_.training) add_media(r);
  for (const auto& r : plan_.items) add_media(r);
  restore();
}

int SessionService::total_items() const {
  return static_cast<int>(plan_.training.size() + plan_.items.size());
}

IssuedItem SessionService::item_at(int position) const {
  IssuedItem it;
  it.position = position;
  const int nt = static_cast<int>(plan_.training.size());
  if (position < nt) {
    it.training = true;
    it.presentation_index = position;
    it.record = &plan_.training[static_cast<std::size_t>(position)];
  } else {
    it.presentation_index = position - nt;
    it.record = &plan_.items[static_cast<std::size_t>(position - nt)];
  }
  return it;
}

// Rebuilds observer progress from an existing ratings file. Observers
// present in the file have finished training; their main ratings must form
// a prefix of the plan.
void SessionService::restore() {
  std::error_code ec;
  if (!std::filesystem::exists(ratings_csv_, ec)) return;
  const RatingSet set = ingest_ratings(ratings_csv_);
  std::map<std::string, std::vector<const Rating*>> by_observer;
  for (const auto& r : set.records) by_observer[r.observer].push_back(&r);
  for (auto& [obs, rows] : by_observer) {
    std::sort(rows.begin(), rows.end(), [](const Rating* a, const Rating* b) {
      return a->presentation_index < b->presentation_index;
    });
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const Rating& r = *rows[i];
      if (r.presentation_index != static_cast<int>(i) || i >= plan_.items.size() ||
          plan_.items[i].id != r.stimulus)
        throw IngestError("ratings file does not match the session plan for observer '" + obs +
                              "' at presentation " + std::to_string(r.presentation_index),
                          0);
    }
    observers_[obs].cursor = static_cast<int>(plan_.training.size() + rows.size());
  }
}

std::string SessionService::session_json() const {
  json j;
  j["api_version"] = kApiVersion;
  j["seed"] = plan_.seed;
  j["scale_labels"] = plan_.scale_labels;
  j["policy"] = {{"single_playback", plan_.policy.single_playback},
                 {"unlimited_rating_time", plan_.policy.unlimited_rating_time}};
  j["training_items"] = plan_.training.size();
  j["main_items"] = plan_.items.size();
  return j.dump();
}

std::optional<IssuedItem> SessionService::next(const std::string& observer) {
  if (!valid_observer(observer)) throw ConfigError("invalid observer id");
  std::lock_guard lock(mutex_);
  ObserverState& st = observers_[observer];
  if (st.cursor >= total_items()) return std::nullopt;
  st.pending = true;
  return item_at(st.cursor);
}

std::string SessionService::next_json(const std::string& observer) {
  const auto item = next(observer);
  json j;
  j["api_version"] = kApiVersion;
  j["observer"] = observer;
  j["total"] = total_items();
  if (!item) {
    j["done"] = true;
    j["position"] = total_items();
    return j.dump();
  }
  j["done"] = false;
  j["position"] = item->position;
  j["phase"] = item->training ? "training" : "main";
  j["presentation_index"] = item->presentation_index;
  j["stimulus"] = {{"id", item->record->id},
                   {"role", to_string(item->record->role)},
                   {"media_url", "/media/" + item->record->id}};
  return j.dump();
}

RatingOutcome SessionService::rate(const std::string& observer, const std::string& stimulus,
                                   int score, int presentation_index) {
  if (!valid_observer(observer)) return {400, "invalid observer id"};
  if (score < 1 || score > 5) return {400, "score must be an integer in 1..5"};
  std::lock_guard lock(mutex_);
  const auto it = observers_.find(observer);
  if (it == observers_.end()) return {409, "nothing issued to this observer"};
  ObserverState& st = it->second;
  if (!st.pending || st.cursor >= total_items()) {
    return {409, "no outstanding item for this observer"};
  }
  const IssuedItem cur = item_at(st.cursor);
  if (cur.record->id != stimulus || cur.presentation_index != presentation_index) {
    return {409, "stimulus '" + stimulus + "' at presentation " +
                     std::to_string(presentation_index) + " is not the outstanding item"};
  }
  if (!cur.training) {
    const bool fresh = !std::filesystem::exists(ratings_csv_);
    std::ofstream out(ratings_csv_, std::ios::binary | std::ios::app);
    if (!out) return {500, "cannot open ratings file"};
    std::string text;
    if (fresh) text += std::string(kRatingsHeader) + "\n";
    text += format_rating_row({observer, stimulus, score, utc_timestamp(), presentation_index});
    text += "\n";
    out << text;
    out.flush();
    if (!out) return {500, "write to ratings file failed"};
  }
  ++st.cursor;
  st.pending = false;
  return {200, cur.training ? "training rating acknowledged" : "recorded"};
}

RatingOutcome SessionService::rate_json(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    return {400, "body is not JSON"};
  }
  if (!j.is_object() || !j.contains("observer") || !j["observer"].is_string() ||
      !j.contains("stimulus") || !j["stimulus"].is_string() ||
      !j.contains("presentation_index") || !j["presentation_index"].is_number_integer())
    return {400, "expected observer, stimulus, score, presentation_index"};
  if (!j.contains("score") || !j["score"].is_number_integer())
    return {400, "score must be an integer in 1..5"};
  const auto score = j["score"].get<long long>();
  if (score < 1 || score > 5) return {400, "score must be an integer in 1..5"};
  return rate(j["observer"].get<std::string>(), j["stimulus"].get<std::string>(),
              static_cast<int>(score), j["presentation_index"].get<int>());
}

std::optional<std::filesystem::path> SessionService::media_path(const std::string& id) const {
  const auto it = media_.find(id);
  if (it == media_.end()) return std::nullopt;
  return it->second;
}

int SessionService::completed(const std::string& observer) const {
  std::lock_guard lock(mutex_);
  const auto it = observers_.find(observer);
  return it == observers_.end() ? 0 : it->second.cursor;
}

SessionServer::SessionServer(SessionService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& srv = *server_;
  auto reply = [](httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, "application/json");
  };
  auto error = [reply](httplib::Response& res, int status, const std::string& msg) {
    reply(res, status, json{{"api_version", kApiVersion}, {"error", msg}}.dump());
  };

  srv.Get("/api/session", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, service_.session_json());
  });

  srv.Get("/api/session/next", [this, reply, error](const httplib::Request& req,
                                                    httplib::Response& res) {
    if (!req.has_param("observer")) return error(res, 400, "missing observer parameter");
    try {
      reply(res, 200, service_.next_json(req.get_param_value("observer")));
    } catch (const ConfigError& e) {
      error(res, 400, e.what());
    }
  });

  srv.Post("/api/rating", [this, reply](const httplib::Request& req, httplib::Response& res) {
    const RatingOutcome r = service_.rate_json(req.body);
    reply(res, r.status,
          json{{"api_version", kApiVersion}, {"ok", r.status == 200}, {"message", r.message}}
              .dump());
  });

  srv.Get(R"(/media/([^/]+))", [this, error](const httplib::Request& req,
                                             httplib::Response& res) {
    const auto path = service_.media_path(req.matches[1].str());
    if (!path) return error(res, 404, "unknown stimulus");
    std::error_code ec;
    const auto size = std::filesystem::file_size(*path, ec);
    if (ec) return error(res, 500, "media unreadable");
    auto file = std::make_shared<std::ifstream>(*path, std::ios::binary);
    res.set_header("Accept-Ranges", "bytes");
    res.set_content_provider(
        static_cast<std::size_t>(size), content_type_for(*path),
        [file](std::size_t offset, std::size_t length, httplib::DataSink& sink) {
          char buf[64 * 1024];
          file->clear();
          file->seekg(static_cast<std::streamoff>(offset));
          while (length > 0) {
            const auto n = std::min(length, sizeof buf);
            file->read(buf, static_cast<std::streamsize>(n));
            const auto got = static_cast<std::size_t>(file->gcount());
            if (got == 0 || !sink.write(buf, got)) return false;
            length -= got;
          }
          return true;
        });
  });
}

SessionServer::~SessionServer() { stop(); }

void SessionServer::listen(const std::string& host, int port) {
  if (!server_->listen(host, port))
    throw IoError("cannot listen on " + host + ":" + std::to_string(port));
}

int SessionServer::start(const std::string& host, int port) {
  const int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void SessionServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace cbvc
