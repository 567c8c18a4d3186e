/**
 * @file acceptance.hpp
 * @brief End-to-end acceptance checks with pinned fixtures and tolerances.
 *
 * Each criterion runs on fixed desk-scale fixtures and reports pass/fail
 * with a short detail string. The `check` CLI subcommand and the acceptance
 * test binary both run this suite.
 */
#pragma once

#include <string>
#include <vector>

namespace qsf {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

/// Run all acceptance criteria. Never throws; failures are reported inline.
std::vector<CriterionResult> run_acceptance_suite(int workers = 1);

/// Machine-readable summary (schema qsfrac.check.v1).
std::string check_summary_to_text(const std::vector<CriterionResult>& results);

}  // namespace qsf
