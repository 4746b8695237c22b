// deltaclass command-line driver: one verb per pipeline step.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "deltaclass/errors.hpp"
#include "deltaclass/label_server.hpp"
#include "deltaclass/pipeline.hpp"
#include "deltaclass/session.hpp"

namespace fs = std::filesystem;
using namespace deltaclass;

namespace {

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

// Config flags; any that are set are written into the session config.
struct ConfigFlags {
  std::optional<std::string> classes;
  std::optional<std::string> metrics;
  std::optional<std::string> profile_dir;
  std::optional<std::string> default_profile;
  std::optional<std::size_t> k_min;
  std::optional<std::size_t> k_max;
  std::optional<double> i_min;
  std::optional<std::size_t> max_iterations;
  std::optional<std::size_t> restarts;
  std::optional<std::string> zero_vectors;
  std::optional<std::size_t> reps;
  std::optional<std::size_t> resample_m;
  std::optional<double> alpha;
  std::optional<bool> recompute_mapping;
  std::optional<double> p_min;
  std::optional<double> e_max;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App& app) {
    auto* g = app.add_option_group("config", "Session configuration (persisted)");
    g->add_option("--classes", classes, "Comma-separated class names, e.g. B,F,N,D,R");
    g->add_option("--metrics", metrics, "Comma-separated metric names (default: all eleven)");
    g->add_option("--profile-dir", profile_dir, "Directory of extra *.profile lexer profiles");
    g->add_option("--default-profile", default_profile, "Profile for unmapped file extensions");
    g->add_option("--k-min", k_min, "First k tried (default: number of classes)");
    g->add_option("--k-max", k_max, "Largest k tried (default: k-min)");
    g->add_option("--i-min", i_min, "Stop increasing k once I exceeds this");
    g->add_option("--max-iterations", max_iterations, "k-means iteration cap");
    g->add_option("--restarts", restarts, "First seeds tried per k (1: first change only, 0: every change)");
    g->add_option("--zero-vectors", zero_vectors, "exclude | own-cluster")->check(CLI::IsMember({"exclude", "own-cluster"}));
    g->add_option("--reps", reps, "Representatives per cluster for labeling");
    g->add_option("--resample-m", resample_m, "Number of parts for resampling");
    g->add_option("--alpha", alpha, "Significance level of the interval");
    g->add_option("--recompute-mapping", recompute_mapping, "Re-map clusters inside each resample (true/false)");
    g->add_option("--p-min", p_min, "Purity target for the hypothesis check");
    g->add_option("--e-max", e_max, "Entropy target for the hypothesis check");
    g->add_option("--seed", seed, "Seed for every random choice");
  }

  SessionConfig apply(SessionConfig c) const {
    if (classes) c.classes = ClassSet::parse(*classes);
    if (metrics) c.metrics = MetricSelection::parse(*metrics);
    if (profile_dir) c.profile_dir = fs::absolute(*profile_dir).string();
    if (default_profile) c.default_profile = *default_profile;
    if (k_min) c.k_min = *k_min;
    if (k_max) c.k_max = *k_max;
    if (i_min) c.i_min = *i_min;
    if (max_iterations) c.max_iterations = *max_iterations;
    if (restarts) c.restarts = *restarts;
    if (zero_vectors)
      c.zero_vector_policy = *zero_vectors == "own-cluster" ? ZeroVectorPolicy::OwnCluster : ZeroVectorPolicy::Exclude;
    if (reps) c.representatives = *reps;
    if (resample_m) c.resample_parts = *resample_m;
    if (alpha) c.alpha = *alpha;
    if (recompute_mapping) c.recompute_mapping = *recompute_mapping;
    if (p_min) c.p_min = *p_min;
    if (e_max) c.e_max = *e_max;
    if (seed) c.seed = *seed;
    c.profile_set();  // validates profile names and files
    return c;
  }
};

Session open_session(const fs::path& dir, const ConfigFlags& flags) {
  if (!fs::exists(dir / "manifest.json"))
    throw StageError("no session at " + dir.string() + ": run `init` first");
  auto s = Session::open(dir);
  auto cfg = flags.apply(s.config());
  if (!(cfg == s.config())) s.update_config(cfg);
  return s;
}

std::string report_csv(const std::string& report_json) {
  auto j = nlohmann::json::parse(report_json);
  std::ostringstream out;
  out << "cluster,mapped";
  for (const auto& c : j["classes"]) out << "," << csv_field(c.get<std::string>());
  out << ",n_e,purity,entropy\n";
  for (const auto& row : j["clusters"]) {
    out << row["cluster"].get<std::size_t>() << ","
        << (row["mapped"].is_null() ? "" : csv_field(row["mapped"].get<std::string>()));
    for (const auto& n : row["counts"]) out << "," << n.get<std::size_t>();
    out << "," << row["n_e"].get<std::size_t>() << "," << format_double(row["purity"].get<double>()) << ","
        << format_double(row["entropy"].get<double>()) << "\n";
  }
  return out.str();
}

int run(int argc, char** argv) {
  CLI::App app{"deltaclass: cluster code changes by their metric vectors and map clusters to change classes"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string session_dir;
  if (const char* env = std::getenv("DELTACLASS_SESSION")) session_dir = env;
  if (session_dir.empty()) session_dir = "deltaclass-session";
  app.add_option("-s,--session", session_dir, "Session directory (env DELTACLASS_SESSION)")->capture_default_str();

  ConfigFlags flags;
  flags.add_to(app);

  auto* init = app.add_subcommand("init", "Create a session (or update the config of an existing one)");
  auto* ingest = app.add_subcommand("ingest", "Read a change history into the session");
  std::string source;
  ingest->add_option("source", source, "Batch history file or directory of <id>.diff files")->required();
  auto* measure = app.add_subcommand("measure", "Compute one metric vector per change");
  auto* cluster = app.add_subcommand("cluster", "Cluster the metric vectors");
  auto* label = app.add_subcommand("label", "Serve the labeling UI, or import labels with --import");
  std::optional<std::string> import_file, expert, ui_dir;
  int port = 8765;
  std::string host = "127.0.0.1";
  label->add_option("--import", import_file, "Label log file (change_id<TAB>class<TAB>expert<TAB>time)");
  label->add_option("--expert", expert, "Expert id to record for imported labels");
  label->add_option("--ui-dir", ui_dir, "Directory with the built labeling UI");
  label->add_option("--port", port, "Port to listen on (0 picks a free one)")->capture_default_str();
  label->add_option("--host", host, "Address to bind")->capture_default_str();
  auto* map = app.add_subcommand("map", "Map clusters to classes from the expert labels");
  auto* classify = app.add_subcommand("classify", "Assign a class to every change");
  std::optional<std::size_t> sample_per_class;
  classify->add_option("--sample-per-class", sample_per_class, "Also draw this many changes per class for verification");
  auto* evaluate = app.add_subcommand("evaluate", "Score the clustering against a verification set");
  std::optional<std::string> verification;
  evaluate->add_option("--verification", verification, "CSV of change_id,class verified by experts");
  auto* report = app.add_subcommand("report", "Show the session state and latest report");
  std::optional<std::string> export_format;
  report->add_option("--export", export_format, "csv | text")->check(CLI::IsMember({"csv", "text"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const fs::path dir = session_dir;

  if (init->parsed()) {
    fs::create_directories(dir);
    SessionLock lock(dir);
    SessionConfig base;
    if (fs::exists(dir / "manifest.json")) base = Session::open(dir).config();
    else if (!flags.classes) throw Error("init needs --classes");
    auto s = Session::create(dir, flags.apply(base));
    std::cout << "session " << dir.string() << " at stage '" << stage_name(s.stage()) << "'\n"
              << "classes: " << s.config().classes.to_string() << "\n";
    return 0;
  }

  if (!fs::exists(dir / "manifest.json"))
    throw StageError("no session at " + dir.string() + ": run `init` first");

  if (label->parsed() && !import_file) {
    auto s = [&] {
      SessionLock lock(dir);
      return open_session(dir, flags);
    }();
    LabelServerOptions opts;
    opts.host = host;
    opts.port = port;
    if (ui_dir) opts.ui_dir = fs::path(*ui_dir);
    LabelServer server(s, opts, [](const std::string& msg) { std::cout << msg << std::endl; });
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    server.start();
    std::cout << "labeling service at http://" << server.host() << ":" << server.port() << "/ (Ctrl-C to stop)"
              << std::endl;
    while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    server.stop();
    std::cout << "stopped; " << server.service().progress()["done"].get<std::size_t>() << " representatives labelled\n";
    return 0;
  }

  SessionLock lock(dir);
  auto s = open_session(dir, flags);

  if (ingest->parsed()) {
    auto r = run_ingest(s, source);
    std::cout << "ingested " << r.records << " changes\n";
    for (const auto& issue : r.report) std::cout << "  " << issue.change_id << ": " << issue.message << "\n";
  } else if (measure->parsed()) {
    auto r = run_measure(s);
    std::cout << "measured " << r.changes << " changes (" << r.zero_vectors << " zero vectors)\n";
  } else if (cluster->parsed()) {
    auto r = run_cluster(s);
    std::cout << s.read_artifact("cluster_trace.txt");
    std::cout << "k = " << r.clustering.k << ", I = " << format_double(r.clustering.functional_I) << "\n";
  } else if (label->parsed()) {
    auto n = run_label_import(s, *import_file, expert);
    std::cout << "imported " << n << " labels\n";
  } else if (map->parsed()) {
    auto r = run_map(s);
    for (std::size_t j = 0; j < r.map.k(); ++j) {
      auto it = r.map.mapping.find(j);
      std::cout << "cluster " << j << " -> " << (it == r.map.mapping.end() ? "(unresolved)" : it->second) << "\n";
    }
    if (r.dual)
      std::cout << "two experts: " << r.dual->changes.size() << " agreed, " << r.dual->disagreements
                << " disagreements excluded\n";
    if (!r.map.resolved()) throw UnresolvedClusters(r.map.unresolved);
  } else if (classify->parsed()) {
    ClassifyOptions opts;
    opts.sample_per_class = sample_per_class;
    auto r = run_classify(s, opts);
    for (const auto& [cls, n] : r.class_counts()) std::cout << cls << "\t" << n << "\n";
  } else if (evaluate->parsed()) {
    std::optional<fs::path> v;
    if (verification) v = fs::path(*verification);
    auto r = run_evaluate(s, v);
    std::cout << r.text;
  } else if (report->parsed()) {
    if (!export_format) {
      std::cout << describe_session(s);
    } else {
      s.require(Stage::Evaluated);
      std::cout << (*export_format == "csv" ? report_csv(s.read_artifact("report.json")) : s.read_artifact("report.txt"));
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const deltaclass::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 2;
  }
}
