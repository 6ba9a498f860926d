#ifndef GAM_GAM_HPP
#define GAM_GAM_HPP

#include "gam/core.hpp"
#include "gam/problem.hpp"
#include "gam/lower_solver.hpp"
#include "gam/sensitivity.hpp"
#include "gam/clarke.hpp"
#include "gam/driver.hpp"
#include "gam/oracle.hpp"
#include "gam/problems.hpp"
#include "gam/dataset.hpp"
#include "gam/problem_json.hpp"
#include "gam/trace_io.hpp"

#endif  // GAM_GAM_HPP
