//===-- procedure.cpp - Strip, duplicate, repair and compute-model --------===//

#include "qsm/solve.h"

#include "qsm/generalize.h"

#include <nlohmann/json.hpp>

#include <algorithm>

namespace qsm {

namespace {

constexpr Int MaxRange = 1 << 16;

bool holds(const Model &m, const Formula &f) {
  try {
    return evaluate(m, f);
  } catch (const EvalError &) {
    return false;
  }
}

void pushUnique(std::vector<AccessPair> &out, AccessPair p) {
  for (const AccessPair &q : out)
    if (q.first == p.first && q.second == p.second)
      return;
  out.push_back(std::move(p));
}

} // namespace

ClauseSet ClauseSet::fromFormula(const Formula &f) {
  ClauseSet q;
  for (const Formula &c : conjuncts(f)) {
    if (isQuantifierFree(c))
      q.qfree.push_back(c);
    else if (c.kind() == FormulaKind::Forall && isQuantifierFree(c.body()))
      q.quantified.push_back(c);
    else {
      q.canonical = false;
      q.qfree.push_back(c);
    }
  }
  return q;
}

Formula ClauseSet::toFormula() const {
  std::vector<Formula> all = qfree;
  all.insert(all.end(), quantified.begin(), quantified.end());
  return conj(all);
}

std::vector<AccessPair> reads(const Formula &f) {
  std::vector<Term> sels;
  collectSelects(f, sels);
  std::vector<AccessPair> out;
  for (const Term &t : sels)
    pushUnique(out, {t.name(), t.args()[0]});
  return out;
}

std::vector<AccessPair> qReads(const Formula &forall) {
  std::vector<AccessPair> out;
  for (AccessPair &p : reads(forall.body()))
    if (mentions(p.second, forall.boundVar()))
      pushUnique(out, std::move(p));
  return out;
}

std::set<std::string> qArrays(const ClauseSet &q) {
  std::set<std::string> out;
  for (const Formula &c : q.quantified)
    for (const AccessPair &p : qReads(c))
      out.insert(p.first);
  return out;
}

Formula strip(const ClauseSet &q) {
  std::vector<Formula> out = q.qfree;
  std::vector<Formula> qfreeNnf;
  for (const Formula &c : q.qfree)
    qfreeNnf.push_back(negationNormalForm(c));
  for (const Formula &c : q.quantified) {
    const std::string &i = c.boundVar();
    out.push_back(implies(ge(c.upper(), c.lower()),
                          substitute(c.body(), i, c.lower())));
    Formula negBody = negationNormalForm(negate(c.body()));
    for (const Formula &theta : qfreeNnf)
      if (auto t = matchInstance(negBody, i, theta))
        out.push_back(negate(inRange(c.lower(), *t, c.upper())));
  }
  return conj(out);
}

Model duplicate(const ClauseSet &q, Model m,
                const std::set<SemanticAccessPair> &conflicts) {
  m.complete(q.toFormula());
  for (const Formula &c : q.quantified) {
    const std::string &i = c.boundVar();
    std::vector<AccessPair> qr = qReads(c);
    std::vector<std::string> arrays;
    for (const AccessPair &p : qr)
      if (std::find(arrays.begin(), arrays.end(), p.first) == arrays.end())
        arrays.push_back(p.first);
    for (const std::string &a : arrays) {
      const AccessPair *chosen = nullptr;
      for (const AccessPair &p : qr)
        if (p.first == a &&
            (!chosen || compare(p.second, chosen->second) < 0))
          chosen = &p;
      Term access = select(a, chosen->second);
      Int lo, hi;
      try {
        lo = evaluate(m, c.lower());
        hi = evaluate(m, c.upper());
      } catch (const EvalError &) {
        continue;
      }
      if (hi < lo)
        continue;
      if (hi - lo > MaxRange)
        throw EvalError("quantifier range too large to duplicate over");
      const Int v = evaluate(m.with(i, lo), access);
      for (Int n = lo + 1; n <= hi; ++n) {
        const Int o = evaluate(m.with(i, n), chosen->second);
        if (!conflicts.count({a, o}))
          m.arrays[a].set(o, v);
      }
    }
  }
  return m;
}

std::optional<Model> repair(const ClauseSet &q, const Model &mdIn,
                            Backend &backend, RepairTrace *trace) {
  Model md = mdIn;
  const Formula whole = q.toFormula();
  md.complete(whole);
  std::set<SemanticAccessPair> conflicts;

  auto range = [&](const Formula &c) -> std::optional<std::pair<Int, Int>> {
    try {
      Int lo = evaluate(md, c.lower()), hi = evaluate(md, c.upper());
      if (hi - lo > MaxRange)
        return std::nullopt;
      return std::make_pair(lo, hi);
    } catch (const EvalError &) {
      return std::nullopt;
    }
  };

  for (const Formula &c : q.quantified) {
    auto r = range(c);
    if (!r)
      return std::nullopt;
    std::vector<AccessPair> qr = qReads(c);
    for (Int n = r->first; n <= r->second; ++n) {
      Model mi = md.with(c.boundVar(), n);
      if (holds(mi, c.body()))
        continue;
      for (const AccessPair &p : qr)
        conflicts.insert({p.first, evaluate(mi, p.second)});
    }
  }
  for (const Formula &theta : q.qfree) {
    if (holds(md, theta))
      continue;
    for (const AccessPair &p : reads(theta)) {
      try {
        conflicts.insert({p.first, evaluate(md, p.second)});
      } catch (const EvalError &) {
      }
    }
  }

  std::map<SemanticAccessPair, std::vector<Formula>> instances;
  for (const Formula &c : q.quantified) {
    auto r = range(c);
    std::vector<AccessPair> qr = qReads(c);
    for (Int n = r->first; n <= r->second; ++n) {
      Model mi = md.with(c.boundVar(), n);
      for (const AccessPair &p : qr) {
        SemanticAccessPair sp{p.first, evaluate(mi, p.second)};
        if (!conflicts.count(sp))
          continue;
        Formula inst = substitute(c.body(), c.boundVar(), lit(n));
        auto &v = instances[sp];
        if (std::find(v.begin(), v.end(), inst) == v.end())
          v.push_back(inst);
      }
    }
  }

  std::vector<Formula> parts{strip(q)};
  for (const SemanticAccessPair &sp : conflicts)
    for (const Formula &f : instances[sp])
      parts.push_back(f);

  const std::set<std::string> qa = qArrays(q);
  std::vector<Term> sels;
  collectSelects(whole, sels);
  std::vector<Term> pinned;
  for (const Term &t : sels) {
    if (qa.count(t.name()))
      continue;
    bool closed = true;
    for (const Formula &c : q.quantified)
      if (mentions(t, c.boundVar()))
        closed = false;
    if (!closed)
      continue;
    if (std::find(pinned.begin(), pinned.end(), t) == pinned.end())
      pinned.push_back(t);
  }
  for (const Term &t : pinned)
    parts.push_back(eq(t, lit(evaluate(md, t))));
  for (const std::string &s : freeSymbols(whole).scalars)
    parts.push_back(eq(var(s), lit(md.scalars.at(s))));

  Formula strengthened = conj(parts);
  if (trace) {
    trace->conflicts = conflicts;
    trace->strengthened = strengthened;
  }
  SatResult r = backend.solve(strengthened);
  if (r.outcome != Outcome::Sat || !r.model)
    return std::nullopt;
  Model solved = *r.model;
  solved.complete(whole);
  if (trace)
    trace->solved = solved;
  return duplicate(q, std::move(solved), conflicts);
}

//===----------------------------------------------------------------------===//
// Solver
//===----------------------------------------------------------------------===//

std::string toString(Stage s) {
  switch (s) {
  case Stage::Strip:
    return "strip";
  case Stage::Duplicate:
    return "duplicate";
  case Stage::Repair:
    return "repair";
  case Stage::Fallback:
    return "fallback";
  }
  return "fallback";
}

void StageCounters::record(const SolveResult &r) {
  ++total;
  switch (r.stage) {
  case Stage::Strip:
    ++strip;
    break;
  case Stage::Duplicate:
    ++duplicate;
    break;
  case Stage::Repair:
    ++repair;
    break;
  case Stage::Fallback:
    ++fallback;
    break;
  }
  switch (r.outcome) {
  case Outcome::Sat:
    ++sat;
    break;
  case Outcome::Unsat:
    ++unsat;
    break;
  case Outcome::Unknown:
    ++unknown;
    break;
  }
}

nlohmann::json StageCounters::toJson() const {
  return {{"total", total},         {"strip", strip}, {"duplicate", duplicate},
          {"repair", repair},       {"fallback", fallback}, {"sat", sat},
          {"unsat", unsat},         {"unknown", unknown}};
}

nlohmann::json stageTable(const StageCounters &c) {
  const std::uint64_t solved = c.sat + c.unsat;
  auto pct = [&](std::uint64_t x) {
    return c.total == 0 ? 0.0
                        : static_cast<double>(x) * 100.0 /
                              static_cast<double>(c.total);
  };
  return {{"Total", c.total},
          {"Solved", solved},
          {"Solved %", pct(solved)},
          {"S", c.strip},
          {"S+D", c.strip + c.duplicate},
          {"S+D+R", c.strip + c.duplicate + c.repair},
          {"Fallback", c.fallback},
          {"Unknown", c.unknown},
          {"counters", c.toJson()}};
}

SatResult Solver::backendVerified(const Formula &f) {
  SatResult r = backend_.solve(f);
  if (r.outcome != Outcome::Sat)
    return r;
  Model m = r.model ? *r.model : Model{};
  m.complete(f);
  if (!holds(m, f))
    return {Outcome::Unknown, std::nullopt,
            "backend model does not satisfy the query"};
  r.model = std::move(m);
  return r;
}

SolveResult Solver::computeModel(const Formula &query) {
  SolveResult res;
  auto finish = [&](SolveResult r) {
    counters_.record(r);
    log_.push_back({query, true, r});
    return r;
  };
  ClauseSet q = ClauseSet::fromFormula(query);
  if (q.canonical) {
    Formula qf = strip(q);
    SatResult s = backend_.solve(qf);
    if (s.outcome == Outcome::Unsat)
      return finish({Outcome::Unsat, std::nullopt, Stage::Strip, s.diagnostic});
    if (s.outcome == Outcome::Sat && s.model) {
      Model m = *s.model;
      m.complete(query);
      if (holds(m, query))
        return finish({Outcome::Sat, m, Stage::Strip, {}});
      try {
        Model md = duplicate(q, m, {});
        if (holds(md, query))
          return finish({Outcome::Sat, md, Stage::Duplicate, {}});
        if (auto mr = repair(q, md, backend_); mr && holds(*mr, query))
          return finish({Outcome::Sat, *mr, Stage::Repair, {}});
      } catch (const EvalError &) {
      }
    }
  }
  SatResult fb = backendVerified(query);
  return finish({fb.outcome, fb.model, Stage::Fallback, fb.diagnostic});
}

SatResult Solver::check(const Formula &f) {
  if (isQuantifierFree(f)) {
    SatResult r = backendVerified(f);
    log_.push_back({f, false, {r.outcome, r.model, Stage::Strip, r.diagnostic}});
    return r;
  }
  if (!procedure_) {
    SatResult r = backendVerified(f);
    SolveResult s{r.outcome, r.model, Stage::Fallback, r.diagnostic};
    counters_.record(s);
    log_.push_back({f, true, s});
    return r;
  }
  SolveResult s = computeModel(f);
  return {s.outcome, s.model, s.diagnostic};
}

} // namespace qsm
