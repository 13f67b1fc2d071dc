//===-- engine.cpp - Whole-program exploration ------------------*- C++ -*-===//

#include "qsm/engine.h"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>

namespace qsm {

std::string toString(Mode m) {
  switch (m) {
  case Mode::Base:
    return "base";
  case Mode::MergeStandard:
    return "merge-standard";
  case Mode::MergePattern:
    return "merge-pattern";
  }
  return "base";
}

Mode parseMode(const std::string &s) {
  if (s == "base")
    return Mode::Base;
  if (s == "merge-standard")
    return Mode::MergeStandard;
  if (s == "merge-pattern")
    return Mode::MergePattern;
  throw Error("unknown mode '" + s + "'");
}

Engine::Engine(const Program &program, RunConfig config, Backend &backend)
    : program_(program), config_(config),
      cfg_(lowerToCfg(program, config.mergeAllLoops)),
      solver_(backend, config.solveProcedure) {
  if (config_.mode != Mode::Base && !config_.mergeAllLoops &&
      cfg_.regions.empty())
    throw ConfigError("merge modes need at least one @merge loop or "
                      "--merge-all-loops");
}

namespace {

struct WorkItem {
  SymbolicState state;
  std::vector<KBinding> ks;
};

const Region *regionAt(const Cfg &cfg, std::size_t ic, std::size_t *index) {
  for (std::size_t r = 0; r < cfg.regions.size(); ++r)
    if (cfg.regions[r].head == ic) {
      *index = r;
      return &cfg.regions[r];
    }
  return nullptr;
}

} // namespace

RunReport Engine::run() {
  RunReport rep;
  rep.program = program_.name;
  rep.config = config_;
  Executor ex(program_, cfg_,
              [this](const Formula &f) { return solver_.check(f); },
              config_.stepBudget);

  std::vector<WorkItem> stack;
  stack.push_back({ex.initialState(), {}});

  auto complete = [&](SymbolicState s, const std::vector<KBinding> &ks) {
    CompletedPath p;
    const Instr &in = cfg_.instrs.at(s.ic);
    if (in.kind == InstrKind::Return && !in.exprs.empty())
      p.returnValue = evalTerm(in.exprs[0], s);
    p.state = std::move(s);
    p.ks = ks;
    rep.paths.push_back(std::move(p));
  };

  try {
    while (!stack.empty()) {
      WorkItem item = std::move(stack.back());
      stack.pop_back();
      std::size_t regionIndex = 0;
      const Region *region = regionAt(cfg_, item.state.ic, &regionIndex);
      if (!region) {
        RunOutcome o = ex.run(std::move(item.state), nullptr);
        switch (o.reason) {
        case StopReason::Branched:
          for (auto it = o.successors.rbegin(); it != o.successors.rend(); ++it)
            stack.push_back({std::move(it->state), item.ks});
          break;
        case StopReason::AtRegion:
        case StopReason::Exited:
          stack.push_back({std::move(*o.state), item.ks});
          break;
        case StopReason::Returned:
          complete(std::move(*o.state), item.ks);
          break;
        case StopReason::Terminated:
          break;
        }
        continue;
      }

      ExploreOptions opts;
      opts.incremental = config_.incremental;
      ExploreStats stats;
      RegionReport rr;
      rr.region = regionIndex;
      rr.head = region->head;
      rr.tree = ex.exploreRegion(item.state, *region, opts, &stats);
      const ExecTree &t = rr.tree;
      rr.treeNodes = t.liveCount();
      rr.nodesCreated = t.size();
      rr.leaves = t.leaves().size();
      rr.incrementalMerges = stats.merges;
      rr.hashValid = checkHashValidity(t);
      rr.hashCollisions = countHashCollisions(t);
      rr.prefixViolations = countPrefixViolations(t);

      for (NodeId l : t.leaves()) {
        const ExecNode &n = t.node(l);
        if (n.status == NodeStatus::Terminated && n.final)
          complete(*n.final, item.ks);
      }

      std::vector<NodeId> exited = t.exitedLeaves();
      rr.exitedLeaves = exited.size();
      std::map<std::size_t, std::vector<NodeId>> groups;
      for (NodeId l : exited)
        groups[t.node(l).final->ic].push_back(l);

      std::vector<MergedState> out;
      auto standard = [&](const std::vector<NodeId> &leaves) {
        MergedState m = mergeLeavesStandard(t, leaves);
        if (m.kind == MergeKind::Standard)
          ++rr.standardMerges;
        out.push_back(std::move(m));
      };
      for (const auto &[ic, leaves] : groups) {
        switch (config_.mode) {
        case Mode::Base:
          for (NodeId l : leaves)
            out.push_back(mergeLeavesStandard(t, {l}));
          break;
        case Mode::MergeStandard:
          standard(leaves);
          break;
        case Mode::MergePattern: {
          if (!rr.hashValid) {
            ++rr.fallbacks;
            standard(leaves);
            break;
          }
          Partitioning part =
              findRegularPartitioning(t, leaves, config_.patternThreshold);
          if (part.exceeded) {
            rr.thresholdExceeded = true;
            ++rr.fallbacks;
            standard(leaves);
            break;
          }
          rr.partitions += part.partitions.size();
          for (const RegularPartition &p : part.partitions) {
            if (auto fp = synthesizeFormulaPattern(t, p)) {
              ++rr.patterns;
              out.push_back(mergePatternBased(t, p, *fp, names_));
            } else {
              ++rr.fallbacks;
              std::vector<NodeId> ls;
              for (const PartitionMember &m : p.members)
                ls.push_back(m.leaf);
              standard(ls);
            }
          }
          if (!part.residual.empty())
            standard(part.residual);
          break;
        }
        }
      }

      for (auto it = out.rbegin(); it != out.rend(); ++it) {
        std::vector<KBinding> ks = item.ks;
        if (it->kind == MergeKind::Pattern)
          ks.push_back({it->k, it->kDomain});
        stack.push_back({it->state, std::move(ks)});
      }
      rr.merged = std::move(out);
      rep.regions.push_back(std::move(rr));
    }
  } catch (const BudgetExceeded &e) {
    rep.budgetExceeded = true;
    rep.budgetMessage = e.what();
    rep.partialTree = e.partial;
  }

  for (std::size_t i = 0; i < rep.paths.size() && !rep.budgetExceeded; ++i) {
    const CompletedPath &p = rep.paths[i];
    auto emit = [&](std::vector<Formula> pins) {
      TestCase tc;
      tc.path = i;
      for (const Formula &f : pins)
        tc.pins.push_back(toString(f));
      pins.insert(pins.begin(), p.state.pc);
      SatResult r = solver_.check(conj(pins));
      tc.outcome = r.outcome;
      tc.model = r.model;
      rep.tests.push_back(std::move(tc));
    };
    if (!config_.testPerK || p.ks.empty()) {
      emit({});
      continue;
    }
    for (const KBinding &kb : p.ks)
      for (Int v : kb.domain)
        emit({eq(var(kb.k), lit(v))});
  }

  rep.findings = ex.findings();
  rep.warnings = ex.warnings();
  rep.steps = ex.steps();
  rep.feasibilityQueries = ex.queries();
  rep.counters = solver_.counters();
  return rep;
}

//===----------------------------------------------------------------------===//
// Reports
//===----------------------------------------------------------------------===//

std::size_t RunReport::assertionFindings() const {
  return static_cast<std::size_t>(
      std::count_if(findings.begin(), findings.end(), [](const Finding &f) {
        return f.kind == FindingKind::AssertionFailure;
      }));
}

nlohmann::json toJson(const Model &m) {
  nlohmann::json scalars = nlohmann::json::object();
  for (const auto &[s, v] : m.scalars)
    scalars[s] = v;
  nlohmann::json arrays = nlohmann::json::object();
  for (const auto &[a, am] : m.arrays) {
    nlohmann::json cells = nlohmann::json::object();
    for (const auto &[o, v] : am.cells)
      cells[std::to_string(o)] = v;
    arrays[a] = {{"default", am.fallback}, {"cells", cells}};
  }
  return {{"scalars", scalars}, {"arrays", arrays}};
}

nlohmann::json toJson(const Finding &f) {
  nlohmann::json j = {{"kind", toString(f.kind)},
                      {"ic", f.ic},
                      {"line", f.pos.line},
                      {"column", f.pos.column},
                      {"message", f.message}};
  if (f.model)
    j["model"] = toJson(*f.model);
  return j;
}

nlohmann::json RunReport::toJson() const {
  using nlohmann::json;
  json regs = json::array();
  for (const RegionReport &r : regions)
    regs.push_back({{"region", r.region},
                    {"head", r.head},
                    {"tree_nodes", r.treeNodes},
                    {"nodes_created", r.nodesCreated},
                    {"leaves", r.leaves},
                    {"exited_leaves", r.exitedLeaves},
                    {"incremental_merges", r.incrementalMerges},
                    {"hash_valid", r.hashValid},
                    {"hash_collisions", r.hashCollisions},
                    {"prefix_violations", r.prefixViolations},
                    {"partitions", r.partitions},
                    {"patterns", r.patterns},
                    {"fallbacks", r.fallbacks},
                    {"standard_merges", r.standardMerges},
                    {"threshold_exceeded", r.thresholdExceeded},
                    {"merged_states", r.merged.size()}});
  json fs = json::array();
  for (const Finding &f : findings)
    fs.push_back(qsm::toJson(f));
  json ps = json::array();
  for (const CompletedPath &p : paths) {
    json ks = json::array();
    for (const KBinding &kb : p.ks)
      ks.push_back({{"k", kb.k}, {"domain", kb.domain}});
    ps.push_back({{"pc", toString(p.state.pc)},
                  {"return", p.returnValue ? toString(*p.returnValue) : ""},
                  {"k", ks}});
  }
  json ts = json::array();
  for (const TestCase &t : tests) {
    json j = {{"path", t.path}, {"pins", t.pins},
              {"outcome", toString(t.outcome)}};
    if (t.model)
      j["model"] = qsm::toJson(*t.model);
    ts.push_back(std::move(j));
  }
  return {{"program", program},
          {"config",
           {{"mode", toString(config.mode)},
            {"incremental", config.incremental},
            {"solve_procedure", config.solveProcedure},
            {"merge_all_loops", config.mergeAllLoops},
            {"pattern_threshold", config.patternThreshold},
            {"step_budget", config.stepBudget},
            {"test_per_k", config.testPerK}}},
          {"regions", regs},
          {"findings", fs},
          {"warnings", warnings},
          {"paths_completed", paths.size()},
          {"paths", ps},
          {"tests", ts},
          {"solver", stageTable(counters)},
          {"steps", steps},
          {"feasibility_queries", feasibilityQueries},
          {"budget_exceeded", budgetExceeded}};
}

} // namespace qsm
