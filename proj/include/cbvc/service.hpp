#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "cbvc/study.hpp"

namespace httplib {
class Server;
}

namespace cbvc {

inline constexpr int kApiVersion = 1;

struct IssuedItem {
  bool training = false;
  int presentation_index = 0;  // training position for training items
  int position = 0;            // 0-based over training + main
  const StimulusRecord* record = nullptr;
};

struct RatingOutcome {
  int status = 200;  // HTTP status to report
  std::string message;
};

// Session state independent of the HTTP layer. Each observer walks the same
// sequence: the training pair, then the plan items in presentation order.
// Only one item is outstanding per observer; asking again returns it
// unchanged. Main-phase ratings are appended to the ratings CSV, training
// ratings are acknowledged but not stored.
class SessionService {
 public:
  SessionService(SessionPlan plan, std::filesystem::path media_root,
                 std::filesystem::path ratings_csv);

  const SessionPlan& plan() const { return plan_; }
  int total_items() const;

  std::string session_json() const;
  std::optional<IssuedItem> next(const std::string& observer);
  std::string next_json(const std::string& observer);

  RatingOutcome rate(const std::string& observer, const std::string& stimulus, int score,
                     int presentation_index);
  // Parses the POST body, then calls rate().
  RatingOutcome rate_json(const std::string& body);

  std::optional<std::filesystem::path> media_path(const std::string& id) const;
  int completed(const std::string& observer) const;

 private:
  struct ObserverState {
    int cursor = 0;  // next position to issue
    bool pending = false;
  };

  IssuedItem item_at(int position) const;
  void restore();

  SessionPlan plan_;
  std::filesystem::path media_root_;
  std::filesystem::path ratings_csv_;
  std::map<std::string, std::filesystem::path> media_;
  std::map<std::string, ObserverState> observers_;
  mutable std::mutex mutex_;
};

// Binds SessionService to HTTP. listen() blocks; start() runs the server on a
// background thread and returns the bound port.
class SessionServer {
 public:
  explicit SessionServer(SessionService& service);
  ~SessionServer();

  void listen(const std::string& host, int port);
  int start(const std::string& host, int port = 0);
  void stop();

 private:
  SessionService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace cbvc
