#pragma once

// Core library: storage, queries, reasoning, states, costs, search, execution.
// The session service and HTTP front end live in service.hpp and http_api.hpp.

#include "rdfviews/canonical.hpp"
#include "rdfviews/cost_model.hpp"
#include "rdfviews/error.hpp"
#include "rdfviews/executor.hpp"
#include "rdfviews/query.hpp"
#include "rdfviews/rational.hpp"
#include "rdfviews/rdf_store.hpp"
#include "rdfviews/rdfs.hpp"
#include "rdfviews/search.hpp"
#include "rdfviews/serialize.hpp"
#include "rdfviews/view_state.hpp"
