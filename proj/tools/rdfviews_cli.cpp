// rdfviews: command-line front end over a session directory.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rdfviews/http_api.hpp"

namespace {

using rdfviews::Error;
using rdfviews::Json;
namespace svc = rdfviews::service;

int exit_code(const Error& e) { return e.is_validation() ? 2 : 1; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Materialized view selection for RDF query workloads"};
  app.require_subcommand(1);

  std::string session_dir;
  app.add_option("--session", session_dir, "Session directory (created on first use)");

  std::string file;
  auto* load = app.add_subcommand("load", "Load an N-Triples dataset");
  load->add_option("file", file, "N-Triples file")->required()->check(CLI::ExistingFile);
  auto* schema = app.add_subcommand("schema", "Load an RDFS schema (N-Triples)");
  schema->add_option("file", file, "N-Triples file")->required()->check(CLI::ExistingFile);
  auto* workload = app.add_subcommand("workload", "Load a workload document (JSON)");
  workload->add_option("file", file, "Workload file")->required()->check(CLI::ExistingFile);

  auto* search = app.add_subcommand("search", "Search for a view set");
  std::string strategy = "stratified-greedy";
  double w_eval = 1, w_maint = 1, w_space = 1;
  std::optional<double> budget;
  std::size_t max_states = 10000, timeout_ms = 60000, branch_cap = rdfviews::kDefaultBranchCap;
  bool property_cuts = false, show_progress = false;
  search->add_option("--strategy", strategy, "exhaustive-bfs, exhaustive-dfs, greedy or stratified-greedy")
      ->capture_default_str();
  search->add_option("--w-eval", w_eval)->capture_default_str();
  search->add_option("--w-maint", w_maint)->capture_default_str();
  search->add_option("--w-space", w_space)->capture_default_str();
  search->add_option("--budget", budget, "Space budget");
  search->add_option("--max-states", max_states)->capture_default_str();
  search->add_option("--timeout", timeout_ms, "Milliseconds")->capture_default_str();
  search->add_option("--branch-cap", branch_cap)->capture_default_str();
  search->add_flag("--property-cuts", property_cuts, "Allow selection cuts on property positions");
  search->add_flag("--progress", show_progress, "Print explored states to stderr");

  auto* materialize = app.add_subcommand("materialize", "Materialize the best state of a search");
  std::optional<std::string> job;
  materialize->add_option("--job", job, "Job id (default: latest)");

  auto* query = app.add_subcommand("query", "Answer a workload query");
  std::string query_name, mode = "views";
  query->add_option("--name", query_name)->required();
  query->add_option("--mode", mode, "views, baseline or both")->capture_default_str();

  auto* export_sql = app.add_subcommand("export-sql", "Print CREATE TABLE statements for the views");
  export_sql->add_option("--job", job, "Job id (default: materialized or latest)");

  auto* dictionary = app.add_subcommand("dictionary", "Print the term dictionary as TSV");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  std::string listen, data_dir;
  serve->add_option("--listen", listen, "host:port (default $RDFVIEWS_LISTEN or 127.0.0.1:8080)");
  serve->add_option("--data-dir", data_dir, "Session store (default $RDFVIEWS_DATA_DIR or ./rdfviews-data)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) {
      svc::serve(listen, data_dir);
      return 0;
    }
    if (session_dir.empty()) throw Error(rdfviews::ErrorCode::invalid_config, "--session is required");
    auto session = svc::Session::open_or_create(session_dir);

    if (*load) {
      std::cout << session->upload_dataset(svc::detail::read_file(file)).dump(2) << "\n";
    } else if (*schema) {
      std::cout << session->upload_schema(svc::detail::read_file(file)).dump(2) << "\n";
    } else if (*workload) {
      std::cout << session->upload_workload(svc::detail::read_file(file)).dump(2) << "\n";
    } else if (*search) {
      Json config{{"strategy", strategy},     {"w_eval", w_eval},         {"w_maint", w_maint},
                  {"w_space", w_space},       {"max_states", max_states}, {"timeout_ms", timeout_ms},
                  {"branch_cap", branch_cap}, {"allow_property_cuts", property_cuts}};
      if (budget) config["budget"] = *budget;
      auto id = session->start_search(rdfviews::search_config_from_json(config), false);
      if (show_progress)
        for (const auto& e : session->search_progress(id, 0).at("events")) std::cerr << e.dump() << "\n";
      auto summary = session->result(id);
      std::cout << summary.dump(2) << "\n";
      if (summary.value("outcome", "") == "error") return 1;
    } else if (*materialize) {
      std::cout << session->materialize(job).dump(2) << "\n";
    } else if (*query) {
      std::cout << session->query(query_name, svc::parse_query_mode(mode)).dump(2) << "\n";
    } else if (*export_sql) {
      std::cout << session->export_sql(job);
    } else if (*dictionary) {
      std::cout << session->export_dictionary();
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
