#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rdfviews/executor.hpp"
#include "rdfviews/serialize.hpp"

namespace rdfviews::service {

namespace fs = std::filesystem;

enum class QueryMode : std::uint8_t { views, baseline, both };

inline QueryMode parse_query_mode(std::string_view s) {
  if (s == "views") return QueryMode::views;
  if (s == "baseline") return QueryMode::baseline;
  if (s == "both") return QueryMode::both;
  throw Error(ErrorCode::invalid_config, "unknown query mode '" + std::string(s) + "'");
}

namespace detail {

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary file so readers never see a partial document.
inline void write_file(const fs::path& path, const std::string& text) {
  std::error_code ec;
  fs::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorCode::io, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot rename " + tmp.string() + ": " + ec.message());
}

inline std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

inline double elapsed_ms(std::chrono::nanoseconds ns) { return static_cast<double>(ns.count()) / 1e6; }

inline Json rows_to_json(const QueryAnswer& a) {
  Json rows = Json::array();
  for (const auto& row : a.rows) {
    Json r = Json::array();
    for (const auto& t : row) r.push_back(to_ntriples(t));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace detail

/// One search run. Events are only ever appended; readers copy a window
/// under the lock.
class Job {
 public:
  Job(std::string id, SearchConfig config) : id_(std::move(id)), config_(std::move(config)) {}

  [[nodiscard]] const std::string& id() const { return id_; }
  [[nodiscard]] const SearchConfig& config() const { return config_; }

  void append(Json event) {
    std::lock_guard lock(mu_);
    events_.push_back(std::move(event));
  }

  void finish(Json summary, std::optional<State> best) {
    std::lock_guard lock(mu_);
    summary_ = std::move(summary);
    best_ = std::move(best);
    done_ = true;
  }

  [[nodiscard]] bool done() const {
    std::lock_guard lock(mu_);
    return done_;
  }

  [[nodiscard]] Json progress(std::size_t cursor) const {
    std::lock_guard lock(mu_);
    Json events = Json::array();
    for (std::size_t i = cursor; i < events_.size(); ++i) events.push_back(events_[i]);
    Json j{{"job", id_}, {"cursor", cursor}, {"next_cursor", std::max(cursor, events_.size())},
           {"events", std::move(events)}, {"done", done_}};
    if (done_) j["summary"] = summary_;
    return j;
  }

  [[nodiscard]] Json summary() const {
    std::lock_guard lock(mu_);
    return summary_;
  }

  [[nodiscard]] std::optional<State> best() const {
    std::lock_guard lock(mu_);
    return best_;
  }

  [[nodiscard]] std::vector<Json> events() const {
    std::lock_guard lock(mu_);
    return events_;
  }

 private:
  std::string id_;
  SearchConfig config_;
  mutable std::mutex mu_;
  std::vector<Json> events_;
  bool done_ = false;
  Json summary_;
  std::optional<State> best_;
};

/// A session lives in its own directory:
///   session.json        id, creation time, job counter, materialized job
///   dataset.nt schema.nt workload.json   the raw uploads
///   jobs/<job>/config.json events.jsonl result.json
/// Derived structures are rebuilt from the uploads in the order
/// dataset, schema, workload, so term ids do not depend on upload order.
class Session {
 public:
  static std::shared_ptr<Session> create(const fs::path& dir, std::string id) {
    if (fs::exists(dir / "session.json")) throw Error(ErrorCode::io, "session already exists at " + dir.string());
    auto s = std::shared_ptr<Session>(new Session(dir));
    s->id_ = std::move(id);
    s->created_at_ms_ = detail::now_ms();
    s->save_meta();
    return s;
  }

  static std::shared_ptr<Session> open(const fs::path& dir) {
    if (!fs::exists(dir / "session.json")) throw Error(ErrorCode::unknown_session, "no session at " + dir.string());
    auto s = std::shared_ptr<Session>(new Session(dir));
    s->load();
    return s;
  }

  /// Opens the session in `dir`, creating it when absent.
  static std::shared_ptr<Session> open_or_create(const fs::path& dir) {
    if (fs::exists(dir / "session.json")) return open(dir);
    return create(dir, dir.filename().string());
  }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  ~Session() {
    for (auto& t : threads_)
      if (t.joinable()) t.join();
  }

  [[nodiscard]] const std::string& id() const { return id_; }
  [[nodiscard]] const fs::path& dir() const { return dir_; }

  Json upload_dataset(const std::string& text) {
    std::lock_guard lock(mu_);
    require_idle();
    auto inputs = inputs_;
    inputs.dataset = text;
    auto derived = rebuild(inputs);
    commit(std::move(inputs), std::move(derived), "dataset.nt", text);
    return describe_locked();
  }

  Json upload_schema(const std::string& text) {
    std::lock_guard lock(mu_);
    require_idle();
    auto inputs = inputs_;
    inputs.schema = text;
    auto derived = rebuild(inputs);
    commit(std::move(inputs), std::move(derived), "schema.nt", text);
    return describe_locked();
  }

  Json upload_workload(const std::string& text) {
    std::lock_guard lock(mu_);
    require_idle();
    if (!inputs_.dataset) throw Error(ErrorCode::missing_dataset, "upload a dataset before the workload");
    auto inputs = inputs_;
    inputs.workload = text;
    auto derived = rebuild(inputs);
    commit(std::move(inputs), std::move(derived), "workload.json", text);
    return describe_locked();
  }

  /// Validates and starts a search. With `background` false the call returns
  /// after the run has finished.
  std::string start_search(const SearchConfig& config, bool background = true) {
    std::unique_lock lock(mu_);
    require_idle();
    config.validate();
    if (!inputs_.dataset) throw Error(ErrorCode::missing_dataset, "no dataset loaded");
    if (derived_.queries.empty()) throw Error(ErrorCode::empty_workload, "the workload has no queries");
    std::vector<UnionQuery> workload;
    for (const auto& q : derived_.queries)
      workload.push_back(reformulate_query(q, derived_.closure, derived_.schema, config.branch_cap));
    auto initial = initial_state(workload);
    auto weights = workload_weights(workload);

    auto job = std::make_shared<Job>("job-" + std::to_string(++next_job_), config);
    jobs_[job->id()] = job;
    order_.push_back(job->id());
    save_meta();
    detail::write_file(job_dir(job->id()) / "config.json", to_json(config).dump(2) + "\n");

    auto stats = derived_.data.stats;
    auto dict = std::make_shared<const Dictionary>(derived_.data.dictionary);
    auto jdir = job_dir(job->id());
    auto run = [job, initial = std::move(initial), weights = std::move(weights), stats = std::move(stats), dict,
                jdir, config, generation = generation_] {
      std::vector<std::string> signatures;
      std::optional<Rational> best_total;
      Json summary;
      std::optional<State> best;
      try {
        auto result = run_search(initial, stats, weights, config,
                                 [&](const TraceNode& n, const std::optional<Rational>& best_so_far) {
                                   signatures.push_back(n.signature);
                                   Json e{{"order", n.order},
                                          {"sig", n.signature},
                                          {"parent", n.parent ? Json(signatures[*n.parent]) : Json(nullptr)},
                                          {"transition", n.transition ? to_json(*n.transition) : Json(nullptr)},
                                          {"cost", to_json(n.cost, false)},
                                          {"pruned", n.pruned_by_budget},
                                          {"terminal", n.terminal},
                                          {"best_total", best_so_far ? to_json(*best_so_far) : Json(nullptr)}};
                                   job->append(std::move(e));
                                 });
        summary = result_summary(result, dict.get());
        best = result.best;
      } catch (const std::exception& e) {
        summary = {{"terminated_by", "error"}, {"feasible", false}, {"outcome", "error"}, {"error", e.what()}};
      }
      summary["job"] = job->id();
      summary["generation"] = generation;
      std::string events;
      for (const auto& e : job->events()) events += e.dump() + "\n";
      try {
        detail::write_file(jdir / "events.jsonl", events);
        detail::write_file(jdir / "result.json", summary.dump(2) + "\n");
      } catch (const Error& e) {
        summary["persist_error"] = e.what();
      }
      job->finish(std::move(summary), std::move(best));
    };
    if (background) {
      threads_.emplace_back(std::move(run));
    } else {
      lock.unlock();
      run();
    }
    return order_.back();
  }

  [[nodiscard]] std::shared_ptr<Job> job(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw Error(ErrorCode::unknown_job, "no job '" + id + "' in session " + id_);
    return it->second;
  }

  [[nodiscard]] Json search_progress(const std::string& job_id, std::size_t cursor) const {
    return job(job_id)->progress(cursor);
  }

  /// Blocks until the job has finished.
  void wait(const std::string& job_id) const {
    auto j = job(job_id);
    while (!j->done()) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }

  /// Materializes the best state of `job_id`, or of the latest finished job.
  Json materialize(const std::optional<std::string>& job_id = std::nullopt) {
    std::lock_guard lock(mu_);
    auto j = resolve_job(job_id);
    auto best = j->best();
    if (!best) throw Error(ErrorCode::not_applicable, "job " + j->id() + " found no feasible state");
    if (j->summary().value("generation", std::size_t{0}) != generation_)
      throw Error(ErrorCode::not_applicable, "job " + j->id() + " ran before the last upload; search again");
    materialized_ = Materialization{j->id(), *best, materialize_state(*best, derived_.data.table)};
    save_meta();
    return describe_materialization();
  }

  Json query(const std::string& name, QueryMode mode) const {
    std::lock_guard lock(mu_);
    auto uq = workload_query(name);
    Json out{{"name", name}, {"mode", mode == QueryMode::views ? "views" : mode == QueryMode::baseline ? "baseline" : "both"}};
    std::optional<QueryAnswer> from_views, baseline;
    if (mode != QueryMode::baseline) {
      if (!materialized_) throw Error(ErrorCode::not_materialized, "materialize a search result first");
      from_views = answer_query(name, materialized_->state, materialized_->relations, derived_.data.dictionary);
      out["timings_ms"]["views"] = detail::elapsed_ms(from_views->elapsed);
    }
    if (mode != QueryMode::views) {
      auto start = std::chrono::steady_clock::now();
      auto rel = evaluate_union(uq, derived_.data.table);
      auto elapsed = std::chrono::steady_clock::now() - start;
      baseline = decode_relation(rel, derived_.data.dictionary);
      baseline->elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed);
      out["timings_ms"]["baseline"] = detail::elapsed_ms(baseline->elapsed);
    }
    const auto& shown = from_views ? *from_views : *baseline;
    out["columns"] = shown.columns;
    out["rows"] = detail::rows_to_json(shown);
    out["row_count"] = shown.rows.size();
    if (from_views && baseline) out["rows_equal"] = detail::rows_to_json(*from_views) == detail::rows_to_json(*baseline);
    return out;
  }

  /// SQL for the materialized state, or for the best state of the given or
  /// latest finished job.
  [[nodiscard]] std::string export_sql(const std::optional<std::string>& job_id = std::nullopt) const {
    std::lock_guard lock(mu_);
    if (!job_id && materialized_) return export_views_sql(materialized_->state);
    auto best = resolve_job(job_id)->best();
    if (!best) throw Error(ErrorCode::not_applicable, "no feasible state to export");
    return export_views_sql(*best);
  }

  [[nodiscard]] std::string export_dictionary() const {
    std::lock_guard lock(mu_);
    return derived_.data.dictionary.dump_tsv();
  }

  [[nodiscard]] Json result(const std::string& job_id) const {
    auto j = job(job_id);
    if (!j->done()) throw Error(ErrorCode::job_in_progress, "job " + job_id + " is still running");
    return j->summary();
  }

  [[nodiscard]] Json describe() const {
    std::lock_guard lock(mu_);
    return describe_locked();
  }

 private:
  struct Inputs {
    std::optional<std::string> dataset, schema, workload;
  };

  struct Derived {
    Dataset data;
    RDFSchema schema;
    SchemaClosure closure;
    std::vector<ConjunctiveQuery> queries;
  };

  struct Materialization {
    std::string job;
    State state;
    MaterializedSet relations;
  };

  explicit Session(fs::path dir) : dir_(std::move(dir)) {}

  static Derived rebuild(const Inputs& in) {
    Derived d;
    if (in.dataset) {
      auto terms = parse_ntriples(*in.dataset);
      d.data = load_dataset(terms);
    }
    if (in.schema) {
      auto terms = parse_ntriples(*in.schema);
      d.schema = parse_schema(terms, d.data.dictionary);
    } else {
      d.schema = empty_schema(d.data.dictionary);
    }
    d.closure = compute_closure(d.schema);
    if (in.workload) d.queries = parse_workload(*in.workload, d.data.dictionary);
    return d;
  }

  void commit(Inputs inputs, Derived derived, const char* file, const std::string& text) {
    detail::write_file(dir_ / file, text);
    inputs_ = std::move(inputs);
    derived_ = std::move(derived);
    materialized_.reset();
    ++generation_;
    save_meta();
  }

  void require_idle() const {
    for (const auto& [id, j] : jobs_)
      if (!j->done()) throw Error(ErrorCode::job_in_progress, "job " + id + " is running in session " + id_);
  }

  std::shared_ptr<Job> resolve_job(const std::optional<std::string>& job_id) const {
    if (job_id) {
      auto it = jobs_.find(*job_id);
      if (it == jobs_.end()) throw Error(ErrorCode::unknown_job, "no job '" + *job_id + "' in session " + id_);
      if (!it->second->done()) throw Error(ErrorCode::job_in_progress, "job " + *job_id + " is still running");
      return it->second;
    }
    for (auto it = order_.rbegin(); it != order_.rend(); ++it)
      if (jobs_.at(*it)->done()) return jobs_.at(*it);
    throw Error(ErrorCode::unknown_job, "session " + id_ + " has no finished search");
  }

  UnionQuery workload_query(const std::string& name) const {
    for (const auto& q : derived_.queries)
      if (q.name == name) {
        auto cap = materialized_ ? jobs_.at(materialized_->job)->config().branch_cap : kDefaultBranchCap;
        return reformulate_query(q, derived_.closure, derived_.schema, cap);
      }
    throw Error(ErrorCode::unknown_query, "no query named '" + name + "'");
  }

  fs::path job_dir(const std::string& job) const { return dir_ / "jobs" / job; }

  Json describe_materialization() const {
    Json views = Json::array();
    for (const auto& [id, rel] : materialized_->relations)
      views.push_back({{"name", view_name(id)}, {"columns", rel.columns}, {"rows", rel.rows.size()}});
    return {{"job", materialized_->job}, {"views", views}};
  }

  Json describe_locked() const {
    Json j{{"id", id_},
           {"created_at_ms", created_at_ms_},
           {"dataset", Json(nullptr)},
           {"schema", Json(nullptr)},
           {"workload", Json::array()},
           {"jobs", order_},
           {"materialized", materialized_ ? Json(materialized_->job) : Json(nullptr)}};
    if (inputs_.dataset)
      j["dataset"] = {{"triples", derived_.data.table.size()},
                      {"terms", derived_.data.dictionary.size()},
                      {"properties", derived_.data.stats.distinct_properties}};
    if (inputs_.schema)
      j["schema"] = {{"subclass", derived_.schema.subclass.size()},
                     {"subproperty", derived_.schema.subproperty.size()},
                     {"domain", derived_.schema.domain.size()},
                     {"range", derived_.schema.range.size()},
                     {"ignored", derived_.schema.ignored}};
    for (const auto& q : derived_.queries)
      j["workload"].push_back({{"name", q.name}, {"weight", to_json(q.weight)}, {"head", q.head}});
    return j;
  }

  void save_meta() const {
    Json meta{{"id", id_},
              {"created_at_ms", created_at_ms_},
              {"next_job", next_job_},
              {"generation", generation_},
              {"jobs", order_},
              {"materialized", materialized_ ? Json(materialized_->job) : Json(nullptr)}};
    detail::write_file(dir_ / "session.json", meta.dump(2) + "\n");
  }

  void load() {
    Json meta;
    try {
      meta = Json::parse(detail::read_file(dir_ / "session.json"));
      id_ = meta.at("id").get<std::string>();
      created_at_ms_ = meta.at("created_at_ms").get<std::int64_t>();
      next_job_ = meta.at("next_job").get<std::size_t>();
      generation_ = meta.value("generation", std::size_t{0});
      order_ = meta.at("jobs").get<std::vector<std::string>>();
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::io, "corrupt session.json in " + dir_.string() + ": " + e.what());
    }
    if (fs::exists(dir_ / "dataset.nt")) inputs_.dataset = detail::read_file(dir_ / "dataset.nt");
    if (fs::exists(dir_ / "schema.nt")) inputs_.schema = detail::read_file(dir_ / "schema.nt");
    if (fs::exists(dir_ / "workload.json")) inputs_.workload = detail::read_file(dir_ / "workload.json");
    derived_ = rebuild(inputs_);

    for (const auto& id : order_) {
      auto jdir = job_dir(id);
      SearchConfig config;
      if (fs::exists(jdir / "config.json"))
        config = search_config_from_json(Json::parse(detail::read_file(jdir / "config.json")));
      auto job = std::make_shared<Job>(id, config);
      if (fs::exists(jdir / "events.jsonl")) {
        std::istringstream lines(detail::read_file(jdir / "events.jsonl"));
        for (std::string line; std::getline(lines, line);)
          if (!line.empty()) job->append(Json::parse(line));
      }
      Json summary{{"job", id}, {"terminated_by", "interrupted"}, {"feasible", false}, {"outcome", "interrupted"}};
      std::optional<State> best;
      if (fs::exists(jdir / "result.json")) {
        summary = Json::parse(detail::read_file(jdir / "result.json"));
        if (summary.contains("best_state")) best = state_from_json(summary.at("best_state"));
      }
      job->finish(std::move(summary), std::move(best));
      jobs_[id] = std::move(job);
    }
    if (meta.contains("materialized") && meta.at("materialized").is_string()) {
      auto j = jobs_.find(meta.at("materialized").get<std::string>());
      if (j != jobs_.end() && j->second->best())
        materialized_ = Materialization{j->first, *j->second->best(),
                                        materialize_state(*j->second->best(), derived_.data.table)};
    }
  }

  fs::path dir_;
  std::string id_;
  std::int64_t created_at_ms_ = 0;
  std::size_t next_job_ = 0;
  /// Bumped by every upload; jobs from older generations cannot be materialized.
  std::size_t generation_ = 0;

  mutable std::mutex mu_;
  Inputs inputs_;
  Derived derived_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::vector<std::string> order_;
  std::optional<Materialization> materialized_;
  std::vector<std::thread> threads_;
};

/// All sessions under one data directory, one subdirectory each.
class SessionManager {
 public:
  explicit SessionManager(fs::path data_dir) : data_dir_(std::move(data_dir)) {
    std::error_code ec;
    fs::create_directories(data_dir_, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create " + data_dir_.string() + ": " + ec.message());
    for (const auto& entry : fs::directory_iterator(data_dir_)) {
      if (!entry.is_directory() || !fs::exists(entry.path() / "session.json")) continue;
      auto s = Session::open(entry.path());
      sessions_[s->id()] = std::move(s);
    }
  }

  std::shared_ptr<Session> create() {
    std::lock_guard lock(mu_);
    std::string id;
    do {
      std::ostringstream ss;
      ss << std::hex << rng_();
      id = "s" + ss.str();
    } while (sessions_.contains(id));
    auto s = Session::create(data_dir_ / id, id);
    sessions_[id] = s;
    return s;
  }

  [[nodiscard]] std::shared_ptr<Session> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorCode::unknown_session, "no session '" + id + "'");
    return it->second;
  }

  [[nodiscard]] std::vector<std::string> list() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, s] : sessions_) out.push_back(id);
    return out;
  }

  [[nodiscard]] const fs::path& data_dir() const { return data_dir_; }

 private:
  fs::path data_dir_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::mt19937_64 rng_{std::random_device{}()};
};

}  // namespace rdfviews::service
