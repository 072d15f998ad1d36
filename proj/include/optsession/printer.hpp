#pragma once

#include "optsession/syntax.hpp"

#include <string>

namespace optsession {

struct PrintOptions {
  bool eraseValues = false;  // print every value name as "_" (types only)
  bool sortPar = false;      // flatten and sort Par components
};

std::string print(const Global& g, PrintOptions opts = {});
std::string print(const Local& t, PrintOptions opts = {});
std::string print(const Proc& q, PrintOptions opts = {});
std::string print(const Param& prm);

std::string join_roles(const std::vector<Role>& rs, const char* sep = ",");
std::string join_names(const std::vector<Name>& ns, const char* sep = ",");

}  // namespace optsession
