#pragma once

#include "jpo/problems/problem_set.hpp"

namespace jpo::prob {

/// Grants read access to hidden ground truth. Only metric and test code
/// include this header.
TruthAccess evaluation_access();

}  // namespace jpo::prob
