#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "votenet/autodiff/grad_check.hpp"

namespace votenet::cli {

struct GradCheckCase {
  std::string name;
  std::function<ad::GradCheckReport()> run;
};

/// Every differentiable op, every loss term, the voting and fusion blocks,
/// the backbone and the end-to-end graph image -> F -> total loss on an
/// 8 x 8 input with K = 3. With `inject_bug` an extra case whose adjoint is
/// deliberately wrong is appended; it must fail.
std::vector<GradCheckCase> gradcheck_cases(bool inject_bug = false);

struct GradCheckRow {
  std::string name;
  ad::GradCheckReport report;
};

std::vector<GradCheckRow> run_gradcheck_suite(const std::vector<GradCheckCase>& cases);
bool all_passed(const std::vector<GradCheckRow>& rows);

/// Header: check,max_relative_error,elements,status
void write_gradcheck_csv(std::ostream& out, const std::vector<GradCheckRow>& rows);

}  // namespace votenet::cli
