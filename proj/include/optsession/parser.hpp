#pragma once

#include "optsession/syntax.hpp"

#include <string>
#include <variant>
#include <vector>

namespace optsession {

// One assignment of an endpoint environment as written in a source file.
struct DeltaEntryDecl {
  enum class Mode { Plain, External, Internal, ReturnKinds };
  Mode mode = Mode::Plain;
  Name session;
  Role role;
  Local type;                   // unused for ReturnKinds
  std::vector<Kind> kinds;      // ReturnKinds only
};

struct GammaEntryDecl {
  enum class Form { Value, Invite };
  Form form = Form::Value;
  Kind kind;  // Value form
  Role role;  // Invite form: shared channel inviting this role
};

struct Declaration {
  enum class Sort { GlobalType, LocalType, Process, GammaEntry, DeltaEntry };
  Sort sort;
  std::string name;
  std::variant<Global, Local, Proc, GammaEntryDecl, std::vector<DeltaEntryDecl>> body;
  int line = 0;
};

struct SourceFile {
  std::vector<Declaration> decls;

  const Declaration* find(Declaration::Sort s, const std::string& name) const;
  Global global(const std::string& name) const;
  Proc process(const std::string& name) const;
  std::vector<DeltaEntryDecl> delta(const std::string& name) const;
};

SourceFile parse_source(const std::string& text);
Global parse_global(const std::string& text);
Local parse_local(const std::string& text);
Proc parse_process(const std::string& text);
Kind parse_kind(const std::string& text);

std::string print(const SourceFile& f);

}  // namespace optsession
