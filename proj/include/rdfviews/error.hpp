#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rdfviews {

enum class ErrorCode {
  syntax,
  blank_node,
  unsupported_feature,
  empty_head,
  unsafe_head,
  disconnected_body,
  empty_body,
  duplicate_query,
  unknown_id,
  multi_valued_schema,
  reserved_vocabulary,
  branch_cap_exceeded,
  empty_workload,
  invalid_site,
  property_cut_disabled,
  not_applicable,
  not_isomorphic,
  unknown_view,
  missing_view,
  unknown_query,
  missing_dataset,
  not_materialized,
  job_in_progress,
  unknown_job,
  unknown_session,
  invalid_config,
  io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::syntax: return "syntax-error";
    case ErrorCode::blank_node: return "blank-node-unsupported";
    case ErrorCode::unsupported_feature: return "unsupported-feature";
    case ErrorCode::empty_head: return "empty-head";
    case ErrorCode::unsafe_head: return "unsafe-head";
    case ErrorCode::disconnected_body: return "disconnected-body";
    case ErrorCode::empty_body: return "empty-body";
    case ErrorCode::duplicate_query: return "duplicate-query";
    case ErrorCode::unknown_id: return "unknown-id";
    case ErrorCode::multi_valued_schema: return "multi-valued-schema";
    case ErrorCode::reserved_vocabulary: return "reserved-vocabulary";
    case ErrorCode::branch_cap_exceeded: return "branch-cap-exceeded";
    case ErrorCode::empty_workload: return "empty-workload";
    case ErrorCode::invalid_site: return "invalid-site";
    case ErrorCode::property_cut_disabled: return "property-cut-disabled";
    case ErrorCode::not_applicable: return "not-applicable";
    case ErrorCode::not_isomorphic: return "not-isomorphic";
    case ErrorCode::unknown_view: return "unknown-view";
    case ErrorCode::missing_view: return "missing-view";
    case ErrorCode::unknown_query: return "unknown-query";
    case ErrorCode::missing_dataset: return "missing-dataset";
    case ErrorCode::not_materialized: return "not-materialized";
    case ErrorCode::job_in_progress: return "job-in-progress";
    case ErrorCode::unknown_job: return "unknown-job";
    case ErrorCode::unknown_session: return "unknown-session";
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::io: return "io-error";
  }
  return "error";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI and HTTP layers can map it to an exit status or response code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

  /// Validation errors are the caller's fault (bad input); everything else is
  /// a lookup or state conflict.
  [[nodiscard]] bool is_validation() const noexcept {
    switch (code_) {
      case ErrorCode::syntax:
      case ErrorCode::blank_node:
      case ErrorCode::unsupported_feature:
      case ErrorCode::empty_head:
      case ErrorCode::unsafe_head:
      case ErrorCode::disconnected_body:
      case ErrorCode::empty_body:
      case ErrorCode::duplicate_query:
      case ErrorCode::multi_valued_schema:
      case ErrorCode::reserved_vocabulary:
      case ErrorCode::branch_cap_exceeded:
      case ErrorCode::empty_workload:
      case ErrorCode::missing_dataset:
      case ErrorCode::invalid_config:
      case ErrorCode::invalid_site:
      case ErrorCode::property_cut_disabled:
      case ErrorCode::not_applicable:
      case ErrorCode::not_isomorphic:
        return true;
      default:
        return false;
    }
  }

 private:
  ErrorCode code_;
};

}  // namespace rdfviews
