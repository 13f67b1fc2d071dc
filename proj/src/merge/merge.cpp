//===-- merge.cpp - Standard and pattern-based state merging ----*- C++ -*-===//

#include "qsm/merge.h"

#include "qsm/generalize.h"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <map>

namespace qsm {

//===----------------------------------------------------------------------===//
// Path hashes
//===----------------------------------------------------------------------===//

HashWord hashPath(const ExecTree &t, NodeId n) {
  HashWord w;
  for (NodeId id : t.path(n))
    w.push_back(structuralHash(t.node(id).cond));
  return w;
}

bool checkHashValidity(const ExecTree &t) {
  for (NodeId id : t.liveNodes()) {
    std::vector<HashValue> hs;
    for (NodeId c : t.node(id).children)
      hs.push_back(structuralHash(t.node(c).cond));
    std::sort(hs.begin(), hs.end());
    if (std::adjacent_find(hs.begin(), hs.end()) != hs.end())
      return false;
  }
  return true;
}

NodeId nodeByHash(const ExecTree &t, const HashWord &w) {
  if (w.empty() || w[0] != structuralHash(t.node(t.root()).cond))
    throw Error("no tree node with the requested path hash");
  NodeId n = t.root();
  for (std::size_t i = 1; i < w.size(); ++i) {
    NodeId next = NoNode;
    for (NodeId c : t.node(n).children)
      if (structuralHash(t.node(c).cond) == w[i]) {
        next = c;
        break;
      }
    if (next == NoNode)
      throw Error("no tree node with the requested path hash");
    n = next;
  }
  return n;
}

Formula extract(const ExecTree &t, const HashWord &w1) {
  return t.tpcTail(t.root(), nodeByHash(t, w1));
}

Formula extract(const ExecTree &t, const HashWord &w1, const HashWord &w2) {
  return t.tpcTail(nodeByHash(t, w1), nodeByHash(t, w2));
}

std::size_t countHashCollisions(const ExecTree &t) {
  std::map<HashWord, std::size_t> seen;
  std::size_t collisions = 0;
  for (NodeId l : t.leaves())
    collisions += seen[hashPath(t, l)]++;
  return collisions;
}

std::size_t countPrefixViolations(const ExecTree &t) {
  std::vector<NodeId> live = t.liveNodes();
  std::vector<HashWord> words;
  for (NodeId n : live)
    words.push_back(hashPath(t, n));
  std::size_t bad = 0;
  for (std::size_t a = 0; a < live.size(); ++a)
    for (std::size_t b = 0; b < live.size(); ++b) {
      if (a == b || words[a].size() > words[b].size())
        continue;
      if (std::equal(words[a].begin(), words[a].end(), words[b].begin()) &&
          !t.isAncestor(live[a], live[b]))
        ++bad;
    }
  return bad;
}

//===----------------------------------------------------------------------===//
// Regular partitioning
//===----------------------------------------------------------------------===//

HashWord RegularPattern::word(std::size_t k) const {
  HashWord w = w1;
  for (std::size_t i = 0; i < k; ++i)
    w.insert(w.end(), w2.begin(), w2.end());
  w.insert(w.end(), w3.begin(), w3.end());
  return w;
}

std::optional<std::size_t> RegularPattern::match(const HashWord &w) const {
  const std::size_t fixed = w1.size() + w3.size();
  if (w2.empty() || w.size() < fixed || (w.size() - fixed) % w2.size() != 0)
    return std::nullopt;
  const std::size_t k = (w.size() - fixed) / w2.size();
  if (word(k) != w)
    return std::nullopt;
  return k;
}

namespace {

/// w1 w3 = shorter and w1 w2 w3 = longer with the shortest non-empty w1.
std::optional<RegularPattern> seed(const HashWord &shorter,
                                   const HashWord &longer) {
  if (shorter.size() >= longer.size())
    return std::nullopt;
  const std::size_t gap = longer.size() - shorter.size();
  for (std::size_t l = 1; l <= shorter.size(); ++l) {
    if (!std::equal(shorter.begin(), shorter.begin() + l, longer.begin()))
      break;
    if (!std::equal(shorter.begin() + l, shorter.end(),
                    longer.begin() + l + gap))
      continue;
    RegularPattern p;
    p.w1.assign(shorter.begin(), shorter.begin() + l);
    p.w2.assign(longer.begin() + l, longer.begin() + l + gap);
    p.w3.assign(shorter.begin() + l, shorter.end());
    return p;
  }
  return std::nullopt;
}

} // namespace

Partitioning findRegularPartitioning(const ExecTree &t,
                                     const std::vector<NodeId> &group,
                                     std::size_t threshold) {
  struct Item {
    NodeId leaf;
    HashWord word;
  };
  std::vector<Item> rest;
  for (NodeId l : group)
    rest.push_back({l, hashPath(t, l)});
  std::stable_sort(rest.begin(), rest.end(), [](const Item &a, const Item &b) {
    return a.word.size() < b.word.size();
  });

  Partitioning out;
  for (;;) {
    std::optional<RegularPattern> pat;
    for (std::size_t i = 0; i < rest.size() && !pat; ++i)
      for (std::size_t j = i + 1; j < rest.size() && !pat; ++j)
        pat = seed(rest[i].word, rest[j].word);
    if (!pat)
      break;
    RegularPartition part;
    part.pattern = *pat;
    std::vector<Item> remaining;
    for (Item &it : rest) {
      if (auto k = pat->match(it.word))
        part.members.push_back({it.leaf, static_cast<Int>(*k)});
      else
        remaining.push_back(std::move(it));
    }
    std::sort(part.members.begin(), part.members.end(),
              [](const PartitionMember &a, const PartitionMember &b) {
                return a.k < b.k;
              });
    out.partitions.push_back(std::move(part));
    rest = std::move(remaining);
  }
  for (const Item &it : rest)
    out.residual.push_back(it.leaf);
  std::sort(out.residual.begin(), out.residual.end());

  if (out.partitions.size() > threshold) {
    out.exceeded = true;
    out.partitions.clear();
    out.residual = group;
  }
  return out;
}

//===----------------------------------------------------------------------===//
// Formula patterns
//===----------------------------------------------------------------------===//

std::optional<FormulaPattern>
synthesizeFormulaPattern(const ExecTree &t, const RegularPartition &p) {
  const RegularPattern &pat = p.pattern;
  if (p.members.empty())
    return std::nullopt;
  try {
    FormulaPattern fp;
    fp.phi1 = extract(t, pat.w1);
    const Int kmax = p.members.back().k;
    std::vector<std::pair<Int, Formula>> body;
    for (Int i = 1; i <= kmax; ++i) {
      HashWord from = pat.w1, to = pat.w1;
      for (Int j = 0; j < i; ++j) {
        if (j + 1 < i)
          from.insert(from.end(), pat.w2.begin(), pat.w2.end());
        to.insert(to.end(), pat.w2.begin(), pat.w2.end());
      }
      body.emplace_back(i, extract(t, from, to));
    }
    if (body.empty()) {
      fp.phi2 = truth(true);
    } else {
      auto phi2 = synthesizeFormula(body, PatternVar);
      if (!phi2)
        return std::nullopt;
      fp.phi2 = *phi2;
    }
    std::vector<std::pair<Int, Formula>> tail;
    for (const PartitionMember &m : p.members) {
      HashWord from = pat.w1;
      for (Int j = 0; j < m.k; ++j)
        from.insert(from.end(), pat.w2.begin(), pat.w2.end());
      tail.emplace_back(m.k, t.tpcTail(nodeByHash(t, from), m.leaf));
    }
    auto phi3 = synthesizeFormula(tail, PatternVar);
    if (!phi3)
      return std::nullopt;
    fp.phi3 = *phi3;
    if (!patternMatches(t, p, fp))
      return std::nullopt;
    return fp;
  } catch (const Error &) {
    return std::nullopt;
  }
}

bool patternMatches(const ExecTree &t, const RegularPartition &p,
                    const FormulaPattern &fp) {
  for (const PartitionMember &m : p.members) {
    std::vector<Formula> parts{fp.phi1};
    for (Int i = 1; i <= m.k; ++i)
      parts.push_back(substitute(fp.phi2, PatternVar, lit(i)));
    parts.push_back(substitute(fp.phi3, PatternVar, lit(m.k)));
    if (conj(parts) != t.tpcTail(t.root(), m.leaf))
      return false;
  }
  return true;
}

//===----------------------------------------------------------------------===//
// Merging
//===----------------------------------------------------------------------===//

SymbolicState mergeStandard(const std::vector<SymbolicState> &states) {
  if (states.empty())
    throw Error("mergeStandard: no states");
  if (states.size() == 1)
    return states.front();
  std::vector<Formula> guards;
  std::vector<const SymbolicState *> ptrs;
  for (const SymbolicState &s : states) {
    if (!mergeCompatible(states.front(), s))
      throw Error("mergeStandard: states are not merge-compatible");
    guards.push_back(s.pc);
    ptrs.push_back(&s);
  }
  SymbolicState out;
  out.pc = disj(guards);
  out.mem = mergeStores(guards, ptrs);
  out.ic = states.front().ic;
  for (const SymbolicState &s : states)
    if (s.witness) {
      out.witness = s.witness;
      break;
    }
  return out;
}

namespace {

const SymbolicState &exitState(const ExecTree &t, NodeId leaf) {
  const ExecNode &n = t.node(leaf);
  return n.final ? *n.final : n.state;
}

} // namespace

MergedState mergeLeavesStandard(const ExecTree &t,
                                const std::vector<NodeId> &leaves) {
  if (leaves.empty())
    throw Error("mergeLeavesStandard: no leaves");
  MergedState m;
  m.leaves = leaves;
  if (leaves.size() == 1) {
    m.state = exitState(t, leaves.front());
    return m;
  }
  m.kind = MergeKind::Standard;
  std::vector<Formula> pcs, guards;
  std::vector<const SymbolicState *> ptrs;
  for (NodeId l : leaves) {
    const SymbolicState &s = exitState(t, l);
    if (!mergeCompatible(exitState(t, leaves.front()), s))
      throw Error("mergeLeavesStandard: leaves are not merge-compatible");
    pcs.push_back(s.pc);
    guards.push_back(t.tpc(l));
    ptrs.push_back(&s);
  }
  m.state.pc = disj(pcs);
  m.state.mem = mergeStores(guards, ptrs);
  m.state.ic = ptrs.front()->ic;
  for (const SymbolicState *s : ptrs)
    if (s->witness) {
      m.state.witness = s->witness;
      break;
    }
  return m;
}

std::optional<Term>
synthesizeValue(const std::vector<std::pair<Int, Term>> &points) {
  return synthesizeTerm(points, PatternVar);
}

namespace {

/// ite(k = k1, v1, ite(k = k2, v2, ... vn)).
Term selectByK(const Term &k, const std::vector<std::pair<Int, Term>> &pts) {
  Term acc = pts.back().second;
  for (std::size_t i = pts.size() - 1; i-- > 0;)
    if (pts[i].second != acc)
      acc = ite(eq(k, lit(pts[i].first)), pts[i].second, acc);
  return acc;
}

Term scalarByK(const Term &k, const std::vector<std::pair<Int, Term>> &pts) {
  if (auto t = synthesizeValue(pts))
    return substitute(*t, PatternVar, k);
  return selectByK(k, pts);
}

bool sameShape(const ArrayValue &a, const ArrayValue &b) {
  if (a.base != b.base || a.length != b.length || a.choice || b.choice ||
      a.writes.size() != b.writes.size() || !a.concreteWrites())
    return false;
  for (std::size_t i = 0; i < a.writes.size(); ++i)
    if (a.writes[i].first != b.writes[i].first)
      return false;
  return true;
}

Value arrayByK(const Term &k, const std::vector<Int> &ks,
               const std::vector<const ArrayValue *> &vals) {
  bool uniform = true;
  for (const ArrayValue *v : vals)
    uniform = uniform && sameShape(*vals.front(), *v);
  if (uniform) {
    ArrayValue out = *vals.front();
    for (std::size_t w = 0; w < out.writes.size(); ++w) {
      std::vector<std::pair<Int, Term>> pts;
      for (std::size_t j = 0; j < vals.size(); ++j)
        pts.emplace_back(ks[j], vals[j]->writes[w].second);
      out.writes[w].second = scalarByK(k, pts);
    }
    return out;
  }
  std::vector<Formula> guards;
  std::vector<Value> copies;
  for (std::size_t j = 0; j < vals.size(); ++j) {
    guards.push_back(eq(k, lit(ks[j])));
    copies.emplace_back(*vals[j]);
  }
  std::vector<const Value *> ptrs;
  for (const Value &v : copies)
    ptrs.push_back(&v);
  return mergeValues(guards, ptrs);
}

} // namespace

MergedState mergePatternBased(const ExecTree &t, const RegularPartition &p,
                              const FormulaPattern &fp, FreshNames &names) {
  MergedState m;
  m.kind = MergeKind::Pattern;
  m.pattern = p.pattern;
  m.formulas = fp;
  m.k = names.next("k");
  const Term k = var(m.k);
  for (const PartitionMember &mem : p.members) {
    m.leaves.push_back(mem.leaf);
    m.kDomain.push_back(mem.k);
  }

  Formula kRange;
  const Int lo = m.kDomain.front(), hi = m.kDomain.back();
  if (hi - lo + 1 == static_cast<Int>(m.kDomain.size())) {
    kRange = inRange(lit(lo), k, lit(hi));
  } else {
    std::vector<Formula> alts;
    for (Int v : m.kDomain)
      alts.push_back(eq(k, lit(v)));
    kRange = disj(alts);
  }
  const std::string i = names.next("i");
  Formula loop = forallRange(i, lit(1), k, substitute(fp.phi2, PatternVar, var(i)));
  m.state.pc = conj({t.node(t.root()).state.pc, kRange, fp.phi1, loop,
                     substitute(fp.phi3, PatternVar, k)});

  std::vector<const SymbolicState *> states;
  for (const PartitionMember &mem : p.members)
    states.push_back(&exitState(t, mem.leaf));
  const SymbolicState &first = *states.front();
  m.state.ic = first.ic;
  for (const auto &[name, v0] : first.mem) {
    if (std::holds_alternative<Term>(v0)) {
      std::vector<std::pair<Int, Term>> pts;
      for (std::size_t j = 0; j < states.size(); ++j)
        pts.emplace_back(m.kDomain[j], states[j]->scalar(name));
      m.state.mem.emplace(name, scalarByK(k, pts));
    } else {
      std::vector<const ArrayValue *> vals;
      for (const SymbolicState *s : states)
        vals.push_back(&s->array(name));
      m.state.mem.emplace(name, arrayByK(k, m.kDomain, vals));
    }
  }

  for (std::size_t j = 0; j < states.size(); ++j) {
    if (!states[j]->witness)
      continue;
    Model w = states[j]->witness->with(m.k, m.kDomain[j]);
    w.complete(m.state.pc);
    try {
      if (evaluate(w, m.state.pc)) {
        m.state.witness = std::move(w);
        break;
      }
    } catch (const EvalError &) {
    }
  }
  return m;
}

//===----------------------------------------------------------------------===//
// JSON
//===----------------------------------------------------------------------===//

namespace {

nlohmann::json wordJson(const HashWord &w) {
  nlohmann::json a = nlohmann::json::array();
  for (HashValue h : w)
    a.push_back(hashHex(h));
  return a;
}

} // namespace

nlohmann::json toJson(const RegularPattern &p) {
  return {{"w1", wordJson(p.w1)}, {"w2", wordJson(p.w2)}, {"w3", wordJson(p.w3)}};
}

nlohmann::json toJson(const FormulaPattern &fp) {
  return {{"phi1", toString(fp.phi1)},
          {"phi2", toString(fp.phi2)},
          {"phi3", toString(fp.phi3)},
          {"x", PatternVar}};
}

nlohmann::json toJson(const MergedState &m) {
  nlohmann::json j;
  j["kind"] = m.kind == MergeKind::Pattern    ? "pattern"
              : m.kind == MergeKind::Standard ? "standard"
                                              : "none";
  j["leaves"] = m.leaves;
  j["state"] = toJson(m.state);
  if (m.kind == MergeKind::Pattern) {
    j["k"] = m.k;
    j["k_domain"] = m.kDomain;
    if (m.pattern)
      j["pattern"] = toJson(*m.pattern);
    if (m.formulas)
      j["formulas"] = toJson(*m.formulas);
  }
  return j;
}

} // namespace qsm
