//===-- support.cpp - Shared helpers for the test binaries ------*- C++ -*-===//

#include "support.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace qsm::testing {

std::string fixtureDir() { return QSM_FIXTURE_DIR; }
std::string corpusDir() { return QSM_CORPUS_DIR; }

std::string readFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> fixtureNames() {
  std::vector<std::string> out;
  for (const auto &e : fs::directory_iterator(fixtureDir()))
    if (e.path().extension() == ".mini")
      out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

Program loadFixture(const std::string &name) {
  return parseProgram(readFile(fixtureDir() + "/" + name + ".mini"));
}

std::string memspnSource(Int m, const std::string &chars) {
  std::ostringstream os;
  os << "program memspn_m" << m << " {\n"
     << "  sym int n;\n"
     << "  sym byte s[" << m << "];\n"
     << "  byte chars[" << chars.size() + 1 << "] = \"" << chars << "\";\n"
     << "  int count = 0;\n"
     << "  int p = 0;\n"
     << "  assume(n <= " << m << ");\n"
     << "  @merge while (count < n && chars[p] != 0) {\n"
     << "    if (s[count] == chars[p]) {\n"
     << "      count = count + 1;\n"
     << "      p = 0;\n"
     << "    } else {\n"
     << "      p = p + 1;\n"
     << "    }\n"
     << "  }\n"
     << "  return count;\n"
     << "}\n";
  return os.str();
}

bool haveSmtSolver() { return SmtProcessBackend::available(); }

std::unique_ptr<Backend> defaultBackend() {
  if (haveSmtSolver())
    return std::make_unique<SmtProcessBackend>();
  return std::make_unique<BruteForceBackend>();
}

ExecTree exploreFirstRegion(const Program &p, bool incremental,
                            Backend &backend, ExploreStats *stats) {
  Cfg cfg = lowerToCfg(p);
  if (cfg.regions.empty())
    throw Error("program has no merge region");
  Solver solver(backend);
  Executor ex(p, cfg, [&](const Formula &f) { return solver.check(f); },
              10'000'000);
  SymbolicState s = ex.initialState();
  while (s.ic != cfg.regions.front().head) {
    RunOutcome o = ex.run(std::move(s), nullptr);
    if (o.reason == StopReason::Branched)
      s = std::move(o.successors.front().state);
    else if (o.reason == StopReason::AtRegion)
      s = std::move(*o.state);
    else
      throw Error("no path reaches the first merge region");
  }
  ExploreOptions opts;
  opts.incremental = incremental;
  return ex.exploreRegion(s, cfg.regions.front(), opts, stats);
}

RunReport runFixture(const Program &p, Mode mode, Backend &backend,
                     bool incremental) {
  RunConfig c;
  c.mode = mode;
  c.incremental = incremental;
  Engine e(p, c, backend);
  return e.run();
}

std::set<FindingKey> assertionKeys(const RunReport &r) {
  std::set<FindingKey> out;
  for (const Finding &f : r.findings)
    if (f.kind == FindingKind::AssertionFailure)
      out.insert({static_cast<int>(f.kind), f.pos.line, f.pos.column});
  return out;
}

namespace {

/// Per-symbol domains. Symbols are grouped into classes by the atoms that
/// relate them. A class whose atoms compare its members only with constants,
/// or only with each other, ranges over those constants, their neighbours,
/// 0, and enough distinct values to order every term of the class. Classes
/// that meet a bound variable, an index, or constants inside a relation keep
/// the whole-formula domain.
class DomainRefiner {
public:
  Domain refine(const Formula &f) {
    visit(f);
    Domain d = domainFor(f);
    std::map<std::string, std::vector<Int>> byRoot;
    for (auto &[key, info] : info_) {
      const std::string root = find(key);
      if (info_.at(root).global)
        continue;
      auto it = byRoot.find(root);
      if (it == byRoot.end()) {
        std::vector<Int> vals = classDomain(root);
        if (vals.size() >= d.defaults.size())
          vals = d.defaults;
        it = byRoot.emplace(root, std::move(vals)).first;
      }
      (key[0] == 'v' ? d.scalars : d.cells)[key.substr(2)] = it->second;
    }
    return d;
  }

private:
  struct Info {
    std::string parent;
    std::vector<Int> consts;
    std::set<std::string> slots;
    bool global = false;
    bool relational = false;
  };
  struct Atom {
    std::set<std::string> keys, slots;
    std::vector<Int> consts;
    bool bound = false;
  };
  std::vector<std::string> bound_;
  std::map<std::string, Info> info_;

  Info &info(const std::string &key) {
    auto [it, fresh] = info_.try_emplace(key);
    if (fresh)
      it->second.parent = key;
    return it->second;
  }

  std::string find(const std::string &key) {
    std::string &p = info(key).parent;
    if (p != key)
      p = find(p);
    return p;
  }

  void unite(const std::string &x, const std::string &y) {
    std::string a = find(x), b = find(y);
    if (a == b)
      return;
    Info &ia = info(a), &ib = info(b);
    ib.parent = a;
    ia.consts.insert(ia.consts.end(), ib.consts.begin(), ib.consts.end());
    ia.slots.insert(ib.slots.begin(), ib.slots.end());
    ia.global = ia.global || ib.global;
    ia.relational = ia.relational || ib.relational;
  }

  std::vector<Int> classDomain(const std::string &root) {
    const Info &in = info_.at(root);
    std::vector<Int> vals{0};
    for (Int c : in.consts)
      vals.insert(vals.end(), {c - 1, c, c + 1});
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    while (in.relational && vals.size() < in.slots.size() + 1)
      vals.push_back(vals.back() + 1);
    return vals;
  }

  void term(const Term &t, Atom &a, bool inIndex) {
    switch (t.kind()) {
    case TermKind::Const:
      if (!inIndex)
        a.consts.push_back(t.value());
      return;
    case TermKind::Var:
      if (std::find(bound_.begin(), bound_.end(), t.name()) != bound_.end())
        a.bound = a.bound || !inIndex;
      else if (inIndex)
        info(find("v:" + t.name())).global = true;
      else {
        a.keys.insert("v:" + t.name());
        a.slots.insert(t.name());
      }
      return;
    case TermKind::Select:
      if (!inIndex) {
        a.keys.insert("a:" + t.name());
        a.slots.insert(toString(t));
      }
      term(t.args()[0], a, true);
      return;
    case TermKind::Ite:
      visit(t.guard());
      break;
    default:
      break;
    }
    for (const Term &x : t.args())
      term(x, a, inIndex);
  }

  void atom(std::initializer_list<const Term *> sides) {
    Atom a;
    for (const Term *t : sides)
      term(*t, a, false);
    if (a.keys.empty())
      return;
    const std::string first = *a.keys.begin();
    for (const std::string &k : a.keys)
      unite(first, k);
    Info &root = info(find(first));
    root.consts.insert(root.consts.end(), a.consts.begin(), a.consts.end());
    root.slots.insert(a.slots.begin(), a.slots.end());
    const bool relational = a.keys.size() > 1 || a.slots.size() > 1;
    root.relational = root.relational || relational;
    if (a.bound || (relational && !a.consts.empty()))
      root.global = true;
  }

  void visit(const Formula &f) {
    switch (f.kind()) {
    case FormulaKind::True:
    case FormulaKind::False:
      return;
    case FormulaKind::Cmp:
      atom({&f.lhs(), &f.rhs()});
      return;
    case FormulaKind::Forall: {
      Atom range;
      term(f.lower(), range, true);
      term(f.upper(), range, true);
      bound_.push_back(f.boundVar());
      visit(f.body());
      bound_.pop_back();
      return;
    }
    default:
      for (const Formula &g : f.operands())
        visit(g);
      return;
    }
  }
};

} // namespace

Domain refinedDomain(const Formula &f) { return DomainRefiner().refine(f); }

namespace {

/// Whether `f` has no model in its bounded domain.
bool noModel(const Formula &f, std::string &why) {
  Domain d = refinedDomain(f);
  d.limit = 20'000'000;
  try {
    if (auto m = bruteForceModel(f, d)) {
      why = toString(*m);
      return false;
    }
    return true;
  } catch (const SearchLimit &e) {
    why = e.what();
    return false;
  }
}

Formula differs(const Value &a, const Value &b) {
  auto ne2 = [](const Term &x, const Term &y) {
    return x == y ? truth(false) : ne(x, y);
  };
  if (std::holds_alternative<Term>(a))
    return ne2(std::get<Term>(a), std::get<Term>(b));
  const ArrayValue &x = std::get<ArrayValue>(a), &y = std::get<ArrayValue>(b);
  std::vector<Formula> cells;
  for (Int c = 0; c < x.length; ++c)
    cells.push_back(ne2(x.read(lit(c)), y.read(lit(c))));
  return disj(cells);
}

} // namespace

CorrespondenceResult checkCorrespondence(const ExecTree &t,
                                         const MergedState &pat) {
  // Each check is split along the disjuncts of the standard pc and the
  // values of k; the pieces are jointly equivalent to the whole query.
  CorrespondenceResult res;
  MergedState plain = mergeLeavesStandard(t, pat.leaves);
  std::vector<Formula> leafPcs;
  for (NodeId l : pat.leaves)
    leafPcs.push_back(t.node(l).final->pc);
  std::vector<Formula> inst;
  for (Int v : pat.kDomain)
    inst.push_back(substitute(pat.state.pc, pat.k, lit(v)));
  const Formula noPattern = negate(disj(inst));
  const Formula noStandard = negate(plain.state.pc);
  std::string why;
  auto failWith = [&](std::string what) {
    res.ok = false;
    res.detail = std::move(what) + ": " + why;
    return res;
  };

  for (const Formula &leaf : leafPcs)
    if (!noModel(conj({leaf, noPattern}), why))
      return failWith("standard model without pattern counterpart");
  for (const Formula &p : inst)
    if (!noModel(conj({p, noStandard}), why))
      return failWith("pattern model without standard counterpart");
  for (const auto &[name, v] : pat.state.mem) {
    Formula diff = differs(v, plain.state.mem.at(name));
    for (std::size_t j = 0; j < inst.size(); ++j) {
      Formula differsAtK = substitute(diff, pat.k, lit(pat.kDomain[j]));
      for (const Formula &leaf : leafPcs)
        if (!noModel(conj({inst[j], leaf, differsAtK}), why))
          return failWith("values of '" + name + "' disagree");
    }
  }
  return res;
}

Int FormulaGen::range(Int lo, Int hi) {
  return std::uniform_int_distribution<Int>(lo, hi)(rng_);
}

Term FormulaGen::term(int depth) {
  const Int pick = range(0, depth > 0 ? 6 : 2);
  switch (pick) {
  case 0:
    return lit(range(-3, 9));
  case 1:
    if (!scope_.empty() && range(0, 1))
      return var(scope_[static_cast<std::size_t>(
          range(0, static_cast<Int>(scope_.size()) - 1))]);
    return var(std::vector<std::string>{"n", "k", "x"}[static_cast<std::size_t>(
        range(0, 2))]);
  case 2:
  case 3:
    return select(range(0, 1) ? "s" : "t", depth > 0 ? term(depth - 1)
                                                      : lit(range(0, 5)));
  case 4:
    return add(term(depth - 1), term(depth - 1));
  case 5:
    return mul(range(-2, 3), term(depth - 1));
  default:
    return ite(formula(depth - 1), term(depth - 1), term(depth - 1));
  }
}

Formula FormulaGen::formula(int depth, bool quantifiers) {
  const Int pick = range(0, depth > 0 ? (quantifiers ? 6 : 5) : 0);
  auto op = [&] { return static_cast<CmpOp>(range(0, 5)); };
  switch (pick) {
  case 0:
  case 1:
    return cmp(op(), term(depth > 0 ? depth - 1 : 0), term(depth > 0 ? depth - 1 : 0));
  case 2:
    return negate(formula(depth - 1, quantifiers));
  case 3:
    return conj({formula(depth - 1, quantifiers), formula(depth - 1, quantifiers)});
  case 4:
    return disj({formula(depth - 1, quantifiers), formula(depth - 1, quantifiers)});
  case 5:
    return implies(formula(depth - 1, quantifiers),
                   formula(depth - 1, quantifiers));
  default: {
    const std::string i = "i" + std::to_string(bound_++);
    Term lo = term(0);
    Term hi = term(0);
    scope_.push_back(i);
    Formula body = formula(depth - 1, false);
    scope_.pop_back();
    return forallRange(i, lo, hi, body);
  }
  }
}

Formula FormulaGen::query() {
  std::vector<Formula> parts;
  const Term k = var("k"), n = var("n");
  parts.push_back(inRange(lit(range(0, 1)), k, lit(range(1, 6))));
  const Int nq = range(1, 2);
  for (Int q = 0; q < nq; ++q) {
    const std::string i = "i";
    Term idx = var(i) + range(-1, 0);
    Formula body = cmp(static_cast<CmpOp>(range(0, 5)),
                       select(range(0, 1) ? "s" : "t", idx), lit(range(0, 4)));
    if (range(0, 1))
      body = conj({gt(n, var(i) - 1), body});
    parts.push_back(forallRange(i, lit(1), k, body));
  }
  const Int nf = range(1, 3);
  for (Int f = 0; f < nf; ++f) {
    const CmpOp op = static_cast<CmpOp>(range(0, 5));
    switch (range(0, 3)) {
    case 0:
      parts.push_back(cmp(op, select(range(0, 1) ? "s" : "t", k - 1),
                          lit(range(0, 4))));
      break;
    case 1:
      parts.push_back(cmp(op, select("s", n), lit(range(0, 4))));
      break;
    case 2:
      parts.push_back(cmp(op, n, k + range(-1, 1)));
      break;
    default:
      parts.push_back(cmp(op, n, lit(range(0, 6))));
      break;
    }
  }
  return conj(parts);
}

Model FormulaGen::model(const Formula &f) {
  Model m;
  const Symbols syms = freeSymbols(f);
  for (const std::string &s : syms.scalars)
    m.scalars[s] = range(-3, 12);
  for (const std::string &a : syms.arrays) {
    ArrayModel am;
    am.fallback = range(-3, 12);
    for (Int c = 0; c < 12; ++c)
      am.set(c, range(-3, 12));
    m.arrays[a] = am;
  }
  return m;
}

} // namespace qsm::testing
