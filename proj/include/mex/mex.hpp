#pragma once
// Everything except the HTTP binding (mex/service_http.hpp).

#include "mex/comprehension.hpp"
#include "mex/derivation.hpp"
#include "mex/document.hpp"
#include "mex/eval.hpp"
#include "mex/json.hpp"
#include "mex/parser.hpp"
#include "mex/paths.hpp"
#include "mex/render.hpp"
#include "mex/rules.hpp"
#include "mex/service.hpp"
#include "mex/simplify.hpp"
#include "mex/subst.hpp"
