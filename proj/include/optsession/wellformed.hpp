#pragma once

#include "optsession/syntax.hpp"

#include <map>
#include <string>
#include <vector>

namespace optsession {

using KindEnv = std::map<std::string, Kind>;

struct Violation {
  std::string rule;      // e.g. "kind.role-slot", "proj.par-shared-role", "linearity"
  std::string location;  // constructor path from the root
  std::string message;
};

struct WfReport {
  bool ok = true;
  std::vector<Violation> violations;
  void add(Violation v) {
    ok = false;
    violations.push_back(std::move(v));
  }
  void merge(const WfReport& o) {
    for (auto& v : o.violations) add(v);
  }
};

WfReport check_kinding(const Global& g, const KindEnv& env);
WfReport check_projectable(const Global& g);
WfReport check_linearity(const Global& g);
WfReport check_wellformed(const Global& g, const KindEnv& env);

}  // namespace optsession
