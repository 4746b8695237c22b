#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "deltaclass/classify.hpp"
#include "deltaclass/session.hpp"

namespace deltaclass {

// Transport-free core of the labeling service. Every method is thread-safe:
// reads share a lock, label writes are serialized.
class LabelService {
 public:
  // Enters the labeling stage if needed. Throws StageError before clustering.
  explicit LabelService(Session& session, std::function<void(const std::string&)> notify = {});

  nlohmann::json session_info() const;
  nlohmann::json progress(const std::string& expert = {}) const;

  // The next representative for this expert, or nullopt when done.
  std::optional<nlohmann::json> next_task(const std::string& expert) const;
  nlohmann::json task(const std::string& change_id, const std::string& expert) const;

  // Appends to the label log. A repeated label_id is acknowledged without a
  // second write. Throws UnknownClassName, LabelForUnknownChange.
  nlohmann::json post_label(const std::string& change_id, const std::string& class_name,
                            const std::string& expert, const std::optional<std::string>& label_id = std::nullopt);

  // Moves the change to the end of its cluster's queue for this expert.
  void skip(const std::string& change_id, const std::string& expert);

  nlohmann::json clusters() const;

  struct FinalizeResult {
    bool resolved = false;
    nlohmann::json body;
  };
  // Maps clusters to classes. When some stay unresolved, extra representatives
  // are queued for them and `resolved` is false.
  FinalizeResult finalize(std::size_t extra_per_cluster = 2);

  // Every cluster has at least its requested number of labelled changes.
  bool complete() const;

 private:
  struct Task {
    std::string change_id;
    std::size_t cluster = 0;
    std::size_t rank = 0;
  };
  using Queues = std::vector<std::deque<std::string>>;

  Queues& queues_for(const std::string& expert);
  const std::set<std::string>& labelled_by(const std::string& expert) const;
  nlohmann::json progress_unlocked(const std::string& expert) const;
  bool complete_unlocked() const;

  Session& session_;
  std::function<void(const std::string&)> notify_;
  Clustering clustering_;
  VectorSet vectors_;
  std::map<std::string, const ChangeRecord*> records_;
  std::vector<ChangeRecord> corpus_;
  std::vector<std::vector<std::string>> ranked_;  // all members per cluster, best first
  std::vector<std::vector<std::string>> queued_;  // requested representatives per cluster
  std::map<std::string, Task> task_of_;
  std::map<std::string, Queues> expert_queues_;  // lazily copied from queued_
  std::map<std::string, std::set<std::string>> labelled_;  // expert -> change ids
  std::set<std::string> labelled_any_;
  std::set<std::string> seen_label_ids_;
  bool announced_ = false;
  mutable std::shared_mutex mutex_;
};

struct LabelServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::optional<std::filesystem::path> ui_dir;
  bool take_lock = true;
};

// HTTP front end for LabelService, all endpoints under /api.
class LabelServer {
 public:
  // Throws SessionLocked, AddressInUse, StageError.
  LabelServer(Session& session, LabelServerOptions options = {},
              std::function<void(const std::string&)> notify = {});
  ~LabelServer();
  LabelServer(const LabelServer&) = delete;
  LabelServer& operator=(const LabelServer&) = delete;

  int port() const { return port_; }
  const std::string& host() const { return options_.host; }
  LabelService& service() { return *service_; }

  void start();  // serves on a background thread
  void wait();   // blocks until stop()
  void stop();

 private:
  struct Impl;
  LabelServerOptions options_;
  std::unique_ptr<SessionLock> lock_;
  std::unique_ptr<LabelService> service_;
  std::unique_ptr<Impl> impl_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace deltaclass
