#pragma once

// The vendored single-header lives flat on the include path; this keeps the
// conventional include spelling working.
#include <json.hpp>
