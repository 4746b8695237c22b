#include "deltaclass/label_server.hpp"

#include <ctime>
#include <mutex>

#include <httplib.h>

#include "deltaclass/errors.hpp"
#include "deltaclass/pipeline.hpp"

namespace deltaclass {

using nlohmann::json;

namespace {

const char* tag_name(LineTag t) {
  switch (t) {
    case LineTag::Added: return "+";
    case LineTag::Deleted: return "-";
    case LineTag::Modified: return "*";
    case LineTag::Common: break;
  }
  return "=";
}

json file_payload(const FileDiff& f) {
  json hunks = json::array();
  for (const auto& h : f.hunks) {
    auto al = align_hunk(h);
    json old_lines = json::array(), new_lines = json::array();
    for (std::size_t i = 0; i < h.old_lines.size(); ++i)
      old_lines.push_back({{"text", h.old_lines[i]}, {"tag", tag_name(al.old_tags[i])}});
    for (std::size_t j = 0; j < h.new_lines.size(); ++j)
      new_lines.push_back({{"text", h.new_lines[j]}, {"tag", tag_name(al.new_tags[j])}});
    hunks.push_back({{"old_start", h.old_start}, {"new_start", h.new_start}, {"old", old_lines}, {"new", new_lines}});
  }
  return {{"path", f.path()},
          {"path_before", f.path_before ? json(*f.path_before) : json(nullptr)},
          {"path_after", f.path_after ? json(*f.path_after) : json(nullptr)},
          {"is_add", f.is_add},
          {"is_delete", f.is_delete},
          {"hunks", hunks}};
}

json tally_json(const ClusterClassMap& m) {
  json out = json::array();
  for (std::size_t j = 0; j < m.k(); ++j) {
    auto it = m.mapping.find(j);
    out.push_back({{"cluster", j},
                   {"tally", m.tally[j]},
                   {"mapped", it == m.mapping.end() ? json(nullptr) : json(it->second)}});
  }
  return out;
}

}  // namespace

LabelService::LabelService(Session& session, std::function<void(const std::string&)> notify)
    : session_(session), notify_(std::move(notify)) {
  begin_labeling(session_);
  clustering_ = load_clustering(session_);
  vectors_ = load_vectors(session_);
  corpus_ = load_corpus(session_);
  for (const auto& r : corpus_) records_[r.change_id] = &r;
  for (std::size_t j = 0; j < clustering_.k; ++j) ranked_.push_back(rank_cluster_members(clustering_, vectors_, j));
  queued_ = select_representatives(clustering_, vectors_, session_.config().representatives);
  for (std::size_t j = 0; j < queued_.size(); ++j)
    for (std::size_t r = 0; r < queued_[j].size(); ++r) task_of_[queued_[j][r]] = {queued_[j][r], j, r};
  for (const auto& l : session_.read_labels()) {
    labelled_[l.expert_id].insert(l.change_id);
    labelled_any_.insert(l.change_id);
  }
  announced_ = complete_unlocked();
}

LabelService::Queues& LabelService::queues_for(const std::string& expert) {
  auto it = expert_queues_.find(expert);
  if (it != expert_queues_.end()) return it->second;
  Queues q;
  for (const auto& reps : queued_) q.emplace_back(reps.begin(), reps.end());
  return expert_queues_.emplace(expert, std::move(q)).first->second;
}

const std::set<std::string>& LabelService::labelled_by(const std::string& expert) const {
  static const std::set<std::string> none;
  if (expert.empty()) return labelled_any_;
  auto it = labelled_.find(expert);
  return it == labelled_.end() ? none : it->second;
}

json LabelService::progress_unlocked(const std::string& expert) const {
  const auto& done_set = labelled_by(expert);
  json rows = json::array();
  std::size_t done = 0, total = 0;
  for (std::size_t j = 0; j < queued_.size(); ++j) {
    std::size_t d = 0;
    for (const auto& id : queued_[j]) d += done_set.count(id);
    rows.push_back({{"cluster", j}, {"done", d}, {"total", queued_[j].size()}});
    done += d;
    total += queued_[j].size();
  }
  return {{"expert", expert}, {"clusters", rows}, {"done", done}, {"total", total}, {"complete", complete_unlocked()}};
}

bool LabelService::complete_unlocked() const {
  for (const auto& reps : queued_)
    for (const auto& id : reps)
      if (!labelled_any_.count(id)) return false;
  return true;
}

bool LabelService::complete() const {
  std::shared_lock lock(mutex_);
  return complete_unlocked();
}

json LabelService::progress(const std::string& expert) const {
  std::shared_lock lock(mutex_);
  return progress_unlocked(expert);
}

json LabelService::session_info() const {
  std::shared_lock lock(mutex_);
  const auto& cfg = session_.config();
  return {{"session", session_.dir().string()},
          {"stage", stage_name(session_.stage())},
          {"classes", cfg.classes.names()},
          {"metrics", cfg.metrics.to_string()},
          {"k", clustering_.k},
          {"representatives", cfg.representatives},
          {"seed", cfg.seed},
          {"experts", labelled_.size()},
          {"progress", progress_unlocked({})}};
}

json LabelService::task(const std::string& change_id, const std::string& expert) const {
  auto t = task_of_.find(change_id);
  auto rec = records_.find(change_id);
  if (t == task_of_.end() || rec == records_.end()) throw LabelForUnknownChange(change_id);
  const auto& r = *rec->second;
  json files = json::array(), paths = json::array();
  for (const auto& f : r.file_diffs) {
    files.push_back(file_payload(f));
    paths.push_back(f.path());
  }
  json metrics = json::array();
  const auto& sel = session_.config().metrics.metrics();
  if (auto i = vectors_.index_of(change_id))
    for (std::size_t d = 0; d < sel.size(); ++d)
      metrics.push_back({{"name", metric_name(sel[d])}, {"value", vectors_.vector(*i)[d]}});
  return {{"change_id", change_id},
          {"cluster", t->second.cluster},
          {"rank", t->second.rank},
          {"classes", session_.config().classes.names()},
          {"metadata", {{"author", r.author}, {"message", r.message}, {"timestamp", r.timestamp}, {"files", paths}}},
          {"metrics", metrics},
          {"files", files},
          {"progress", progress_unlocked(expert)}};
}

std::optional<json> LabelService::next_task(const std::string& expert) const {
  std::shared_lock lock(mutex_);
  const auto& done = labelled_by(expert);
  auto pick = [&](const auto& queues) -> std::optional<json> {
    for (const auto& q : queues)
      for (const auto& id : q)
        if (!done.count(id)) return task(id, expert);
    return std::nullopt;
  };
  auto it = expert_queues_.find(expert);
  if (it != expert_queues_.end()) return pick(it->second);
  return pick(queued_);
}

json LabelService::post_label(const std::string& change_id, const std::string& class_name,
                              const std::string& expert, const std::optional<std::string>& label_id) {
  std::unique_lock lock(mutex_);
  if (label_id && seen_label_ids_.count(*label_id))
    return {{"status", "saved"}, {"duplicate", true}, {"progress", progress_unlocked(expert)}};
  if (!session_.config().classes.contains(class_name)) throw UnknownClassName(class_name);
  if (!clustering_.cluster_of(change_id)) throw LabelForUnknownChange(change_id);
  if (expert.empty()) throw Error("label needs an expert id");

  session_.append_label({change_id, class_name, expert, static_cast<std::int64_t>(std::time(nullptr))});
  if (label_id) seen_label_ids_.insert(*label_id);
  labelled_[expert].insert(change_id);
  labelled_any_.insert(change_id);
  if (!announced_ && complete_unlocked()) {
    announced_ = true;
    if (notify_) notify_("labeling complete");
  }
  return {{"status", "saved"}, {"duplicate", false}, {"progress", progress_unlocked(expert)}};
}

void LabelService::skip(const std::string& change_id, const std::string& expert) {
  std::unique_lock lock(mutex_);
  auto t = task_of_.find(change_id);
  if (t == task_of_.end()) throw LabelForUnknownChange(change_id);
  auto& q = queues_for(expert)[t->second.cluster];
  auto it = std::find(q.begin(), q.end(), change_id);
  if (it == q.end()) return;
  q.erase(it);
  q.push_back(change_id);
}

json LabelService::clusters() const {
  std::shared_lock lock(mutex_);
  auto m = map_clusters_to_classes(clustering_, latest_labels(session_.read_labels()), session_.config().classes);
  json rows = tally_json(m);
  auto sizes = clustering_.sizes();
  for (std::size_t j = 0; j < rows.size(); ++j) {
    rows[j]["size"] = sizes[j];
    rows[j]["representatives"] = queued_[j];
    rows[j]["resolved"] = m.mapping.count(j) > 0;
  }
  return {{"clusters", rows}, {"unresolved", m.unresolved}};
}

LabelService::FinalizeResult LabelService::finalize(std::size_t extra_per_cluster) {
  std::unique_lock lock(mutex_);
  auto out = run_map(session_);
  FinalizeResult r;
  r.resolved = out.map.resolved();
  json body = {{"tally", tally_json(out.map)}, {"labels_used", out.labels_used}, {"experts", out.experts}};
  if (out.dual) {
    body["verification"] = {{"agreed", out.dual->changes.size()},
                            {"disagreements", out.dual->disagreements},
                            {"only_first", out.dual->only_first},
                            {"only_second", out.dual->only_second}};
  }
  if (r.resolved) {
    json mapping = json::object();
    for (const auto& [j, cls] : out.map.mapping) mapping[std::to_string(j)] = cls;
    body["mapping"] = mapping;
  } else {
    json queued = json::object();
    for (auto j : out.map.unresolved) {
      json added = json::array();
      for (const auto& id : ranked_[j]) {
        if (added.size() == extra_per_cluster) break;
        if (task_of_.count(id)) continue;
        task_of_[id] = {id, j, queued_[j].size()};
        queued_[j].push_back(id);
        for (auto& [expert, qs] : expert_queues_) qs[j].push_back(id);
        added.push_back(id);
      }
      queued[std::to_string(j)] = added;
    }
    body["error"] = UnresolvedClusters(out.map.unresolved).what();
    body["unresolved"] = out.map.unresolved;
    body["queued"] = queued;
    announced_ = complete_unlocked();
  }
  r.body = std::move(body);
  return r;
}

struct LabelServer::Impl {
  httplib::Server server;
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

std::string required_field(const json& body, const char* name) {
  if (!body.contains(name) || !body[name].is_string()) throw std::invalid_argument(std::string("missing field: ") + name);
  return body[name].get<std::string>();
}

const char* kPlaceholder =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>deltaclass labeling</title></head>"
    "<body><h1>deltaclass labeling</h1><p>No UI bundle configured. Start the server with "
    "<code>--ui-dir</code> or use the JSON API under <code>/api</code>.</p></body></html>";

}  // namespace

LabelServer::LabelServer(Session& session, LabelServerOptions options, std::function<void(const std::string&)> notify)
    : options_(std::move(options)), impl_(std::make_unique<Impl>()) {
  if (options_.take_lock) lock_ = std::make_unique<SessionLock>(session.dir());
  service_ = std::make_unique<LabelService>(session, std::move(notify));
  auto& svr = impl_->server;
  auto& svc = *service_;

  // Maps library errors to HTTP statuses; anything else is a 500.
  auto guarded = [](auto fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const UnknownClassName& e) {
        send_error(res, 422, e.what());
      } catch (const LabelForUnknownChange& e) {
        send_error(res, 422, e.what());
      } catch (const StageError& e) {
        send_error(res, 409, e.what());
      } catch (const json::exception& e) {
        send_error(res, 400, std::string("bad request body: ") + e.what());
      } catch (const std::invalid_argument& e) {
        send_error(res, 400, e.what());
      } catch (const Error& e) {
        send_error(res, 400, e.what());
      } catch (const std::exception& e) {
        send_error(res, 500, e.what());
      }
    };
  };

  svr.Get("/api/session", guarded([&svc](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, svc.session_info());
          }));
  svr.Get("/api/progress", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            send_json(res, 200, svc.progress(req.get_param_value("expert")));
          }));
  svr.Get("/api/task/next", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
            auto expert = req.get_param_value("expert");
            if (expert.empty()) throw std::invalid_argument("missing query parameter: expert");
            auto t = svc.next_task(expert);
            if (!t) {
              res.status = 204;
              return;
            }
            send_json(res, 200, *t);
          }));
  svr.Post("/api/label", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             auto body = json::parse(req.body);
             std::optional<std::string> label_id;
             if (body.contains("label_id") && body["label_id"].is_string()) label_id = body["label_id"].get<std::string>();
             auto out = svc.post_label(required_field(body, "change_id"), required_field(body, "class"),
                                       required_field(body, "expert"), label_id);
             send_json(res, 201, out);
           }));
  svr.Post("/api/skip", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
             auto body = json::parse(req.body);
             auto expert = required_field(body, "expert");
             svc.skip(required_field(body, "change_id"), expert);
             send_json(res, 200, {{"status", "requeued"}, {"progress", svc.progress(expert)}});
           }));
  svr.Get("/api/clusters", guarded([&svc](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, svc.clusters());
          }));
  svr.Post("/api/finalize", guarded([&svc](const httplib::Request&, httplib::Response& res) {
             auto r = svc.finalize();
             send_json(res, r.resolved ? 200 : 409, r.body);
           }));
  svr.Get("/api/.*", [](const httplib::Request&, httplib::Response& res) { send_error(res, 404, "no such endpoint"); });

  if (options_.ui_dir) {
    if (!svr.set_mount_point("/", options_.ui_dir->string()))
      throw Error("UI directory not found: " + options_.ui_dir->string());
  } else {
    svr.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kPlaceholder, "text/html"); });
  }

  // httplib's default sets SO_REUSEPORT, which lets a second server share a busy port.
  svr.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  if (options_.port == 0) {
    port_ = svr.bind_to_any_port(options_.host);
    if (port_ < 0) throw AddressInUse("cannot bind " + options_.host);
  } else {
    if (!svr.bind_to_port(options_.host, options_.port))
      throw AddressInUse("address in use: " + options_.host + ":" + std::to_string(options_.port));
    port_ = options_.port;
  }
}

LabelServer::~LabelServer() { stop(); }

void LabelServer::start() {
  if (thread_.joinable()) return;
  thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void LabelServer::wait() {
  if (thread_.joinable()) thread_.join();
}

void LabelServer::stop() {
  impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace deltaclass
