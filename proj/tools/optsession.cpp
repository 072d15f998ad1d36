#include "optsession/envreduction.hpp"
#include "optsession/examples.hpp"
#include "optsession/explorer.hpp"
#include "optsession/parser.hpp"
#include "optsession/printer.hpp"
#include "optsession/projection.hpp"
#include "optsession/reduction.hpp"
#include "optsession/typecheck.hpp"
#include "optsession/wellformed.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

using namespace optsession;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 negative verdict, 2 usage or input error, 3 inconclusive.
constexpr int kInputError = 2;
constexpr int kInconclusive = 3;

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

KindEnv kinds_of(const SourceFile& src) {
  KindEnv env;
  for (auto& d : src.decls)
    if (d.sort == Declaration::Sort::GammaEntry) {
      auto& ge = std::get<GammaEntryDecl>(d.body);
      if (ge.form == GammaEntryDecl::Form::Value) env[d.name] = ge.kind;
    }
  return env;
}

// "-- schedule: X" lines win; otherwise every non-blank, non-comment line is a selector.
std::vector<std::string> read_script(const std::string& path) {
  std::istringstream in(slurp(path));
  std::vector<std::string> tagged, plain;
  const std::string tag = "-- schedule: ";
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(tag, 0) == 0) tagged.push_back(line.substr(tag.size()));
    else if (!line.empty() && line.rfind("--", 0) != 0) plain.push_back(line);
  }
  return tagged.empty() ? plain : tagged;
}

json error_json(const TypeError& e) {
  return {{"rule", e.rule}, {"location", e.location}, {"expected", e.expected}, {"found", e.found}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optional-block session types: projection, typing, reduction and exploration"};
  app.require_subcommand(1);

  std::string file, type, role, process, global, delta, policy = "never", jsonTrace, report;
  bool asJson = false, allRoles = false, subsessions = false, noFail = false, reliance = false;
  std::uint64_t seed = 0;
  size_t budget = 1000, maxStates = 2'000'000, unfold = 0;
  std::optional<size_t> bound;

  auto* wf = app.add_subcommand("wf", "check well-formedness of a global type");
  wf->add_option("file", file)->required();
  wf->add_option("--type", type, "global type name")->required();
  wf->add_flag("--json", asJson);

  auto* proj = app.add_subcommand("project", "project a global type onto roles");
  proj->add_option("file", file)->required();
  proj->add_option("--type", type)->required();
  auto* roleOpt = proj->add_option("--role", role);
  auto* allOpt = proj->add_flag("--all-roles", allRoles);
  roleOpt->excludes(allOpt);

  auto* check = app.add_subcommand("check", "typecheck a process");
  check->add_option("file", file)->required();
  check->add_option("--process", process)->required();
  check->add_option("--global", global)->required();
  check->add_option("--delta", delta, "explicit environment; default: one invitation per role");
  check->add_flag("--subsessions", subsessions, "enable the sub-session rules");

  auto* step = app.add_subcommand("step", "list enabled reduction steps");
  step->add_option("file", file)->required();
  step->add_option("--process", process)->required();
  step->add_flag("--json", asJson);

  auto* run = app.add_subcommand("run", "run one scheduled execution");
  run->add_option("file", file)->required();
  run->add_option("--process", process)->required();
  run->add_option("--policy", policy, "never | always | prob:P[:SEED] | script:FILE");
  run->add_option("--seed", seed);
  run->add_option("--budget", budget, "maximum number of steps");
  run->add_option("--json-trace", jsonTrace);
  run->add_option("--global", global, "with a global type the environment trace is recorded");
  run->add_option("--delta", delta);

  auto* explore_cmd = app.add_subcommand("explore", "explore the reduction graph");
  explore_cmd->add_option("file", file)->required();
  explore_cmd->add_option("--process", process)->required();
  explore_cmd->add_flag("--no-fail", noFail);
  explore_cmd->add_flag("--reliance", reliance, "only search for a fail-free run to End");
  explore_cmd->add_option("--max-states", maxStates);
  explore_cmd->add_option("--unfold", unfold, "recursion unfolding budget");
  explore_cmd->add_option("--report", report);

  auto* coh = app.add_subcommand("coherence", "classify an environment");
  coh->add_option("file", file)->required();
  coh->add_option("--delta", delta)->required();
  coh->add_option("--global", global, "provenance of session s and source of protocols");
  coh->add_option("--bound", bound);

  std::string family = "rc", out;
  int n = 3;
  bool sub = false, nested = false;
  auto* gen = app.add_subcommand("gen", "write a generated fixture");
  gen->add_option("family", family, "rc | link")->check(CLI::IsMember({"rc", "link"}));
  gen->add_option("--n", n);
  auto* subFlag = gen->add_flag("--subsessions", sub);
  auto* nestFlag = gen->add_flag("--nested-opt", nested);
  subFlag->excludes(nestFlag);
  gen->add_option("-o,--output", out);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      Fixture f = family == "link" ? fixture_by_name("link", 2)
                  : sub            ? gen_rc_subsessions(n)
                  : nested         ? gen_rc_nested_opt(n)
                                   : gen_rc(n);
      auto text = fixture_text(f);
      if (out.empty()) std::cout << text;
      else spill(out, text);
      return 0;
    }

    SourceFile src = parse_source(slurp(file));

    if (wf->parsed()) {
      auto rep = check_wellformed(src.global(type), kinds_of(src));
      if (asJson) {
        json vs = json::array();
        for (auto& v : rep.violations)
          vs.push_back({{"rule", v.rule}, {"location", v.location}, {"message", v.message}});
        std::cout << json{{"ok", rep.ok}, {"violations", vs}}.dump(2) << "\n";
      } else {
        std::cout << (rep.ok ? "well-formed" : "ill-formed") << "\n";
        for (auto& v : rep.violations)
          std::cout << "  " << v.rule << " at " << v.location << ": " << v.message << "\n";
      }
      return rep.ok ? 0 : 1;
    }

    if (proj->parsed()) {
      Global g = src.global(type);
      ProtocolEnv env = declared_protocols(g);
      if (!allRoles) {
        if (role.empty()) throw std::invalid_argument("--role or --all-roles is required");
        std::cout << print(project(g, env, Role{role})) << "\n";
      } else {
        json m = json::object();
        for (auto& r : roles_of(g)) m[r.id] = print(project(g, env, r));
        std::cout << m.dump(2) << "\n";
      }
      return 0;
    }

    if (check->parsed()) {
      auto ctx = load_context(src, global, delta.empty() ? std::nullopt : std::optional{delta});
      CheckOptions opts;
      opts.subsessions = subsessions;
      if (auto err = typecheck(ctx.gamma, src.process(process), ctx.delta, opts)) {
        std::cout << error_json(*err).dump(2) << "\n";
        return 1;
      }
      std::cout << "ok\n";
      return 0;
    }

    if (step->parsed()) {
      Proc p = canonicalize(src.process(process));
      auto steps = enabled_steps(p);
      json arr = json::array();
      for (size_t i = 0; i < steps.size(); ++i) {
        auto& s = steps[i];
        std::vector<std::string> pos;
        for (auto& path : s.position) pos.push_back(to_string(path));
        if (asJson) {
          arr.push_back({{"index", i}, {"rule", s.rule}, {"label", s.label}, {"position", pos},
                         {"result", print(s.result)}});
        } else {
          std::cout << i << "  " << s.label;
          for (auto& q : pos) std::cout << "  @" << q;
          std::cout << "\n";
        }
      }
      if (asJson) std::cout << arr.dump(2) << "\n";
      return 0;
    }

    if (run->parsed()) {
      std::vector<std::string> script;
      if (policy.rfind("script:", 0) == 0) script = read_script(policy.substr(7));
      FailurePolicy pol = parse_policy(policy, script);
      std::optional<TypedContext> typed;
      if (!global.empty()) {
        auto ctx = load_context(src, global, delta.empty() ? std::nullopt : std::optional{delta});
        typed = TypedContext{ctx.gamma, ctx.delta};
      }
      Trace t = optsession::run(src.process(process), pol, seed, budget, typed);
      for (size_t i = 0; i < t.steps.size(); ++i) {
        std::cout << i + 1 << "  " << t.steps[i].label;
        if (t.envTrace) std::cout << "    [" << (*t.envTrace)[i].rule << "]";
        std::cout << "\n";
      }
      std::cout << to_string(t.verdict) << " after " << t.steps.size() << " steps";
      if (!t.note.empty()) std::cout << " (" << t.note << ")";
      std::cout << "\n";
      for (auto& [r, vs] : t.finalValues) std::cout << "  " << r.id << " = " << join_names(vs) << "\n";
      if (!jsonTrace.empty()) spill(jsonTrace, trace_json(t) + "\n");
      return t.verdict == Verdict::Terminated ? 0 : 1;
    }

    if (explore_cmd->parsed()) {
      if (reliance) {
        auto path = fail_free_path(src.process(process), maxStates);
        if (!path) {
          std::cout << "no fail-free run to End found\n";
          return 1;
        }
        for (size_t i = 0; i < path->size(); ++i) std::cout << i + 1 << "  " << (*path)[i].label << "\n";
        std::cout << "fail-free run to End in " << path->size() << " steps\n";
        return 0;
      }
      try {
        auto g = optsession::explore(src.process(process), !noFail, unfold, maxStates);
        auto js = graph_report_json(g);
        std::cout << js << "\n";
        if (!report.empty()) spill(report, js + "\n");
        if (!g.complete) return kInconclusive;
        return g.allTerminalsEnd() ? 0 : 1;
      } catch (const BudgetExceeded& e) {
        json j{{"verdict", "inconclusive"}, {"reason", e.what()}};
        std::cout << j.dump(2) << "\n";
        if (!report.empty()) spill(report, j.dump(2) + "\n");
        return kInconclusive;
      }
    }

    if (coh->parsed()) {
      // Protocols and provenance come from the global type when one is named.
      ProtocolEnv protocols;
      std::optional<std::map<Name, Global>> prov;
      SessionEnv d;
      if (!global.empty()) {
        auto ctx = load_context(src, global, delta);
        d = ctx.delta;
        protocols = ctx.gamma.protocols;
        prov = ctx.gamma.sessions;
      } else {
        for (auto& e : src.delta(delta)) {
          if (e.mode == DeltaEntryDecl::Mode::ReturnKinds) {
            d.returnKinds = ReturnKinds{e.role, e.kinds};
            continue;
          }
          Mode m = e.mode == DeltaEntryDecl::Mode::External   ? Mode::External
                   : e.mode == DeltaEntryDecl::Mode::Internal ? Mode::Internal
                                                              : Mode::Plain;
          d.put(EndpointKey{e.session, e.role}, m, e.type);
        }
      }
      try {
        auto v = classify_coherence(d, prov, bound, protocols);
        std::cout << to_string(v.level) << "\n";
        for (auto& w : v.witnesses) std::cout << "  " << w << "\n";
        return v.level == CoherenceLevel::Incoherent ? 1 : 0;
      } catch (const SearchBudgetExceeded& e) {
        std::cout << "inconclusive: " << e.what() << "\n";
        return kInconclusive;
      }
    }
  } catch (const SyntaxError& e) {
    std::cerr << file << ":" << e.line << ":" << e.column << ": " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return 0;
}
