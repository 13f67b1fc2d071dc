//===-- generalize.cpp - Anti-unification and linear templates --*- C++ -*-===//

#include "qsm/generalize.h"

#include <algorithm>

namespace qsm {

namespace {

class Unifier {
public:
  explicit Unifier(std::size_t n) : n_(n) {}

  std::optional<Term> term(const std::vector<Term> &ts);
  std::optional<Formula> formula(const std::vector<Formula> &fs);

  std::vector<Int> gammas;

private:
  std::size_t n_;

  std::optional<Term> hole(const std::vector<Int> &values);
};

std::pair<Term, Int> splitConstant(const Term &t) {
  if (t.isConst())
    return {Term(), t.value()};
  if (t.kind() == TermKind::Add && t.args()[1].isConst())
    return {t.args()[0], t.args()[1].value()};
  return {t, 0};
}

template <typename T> bool allEqual(const std::vector<T> &xs) {
  return std::all_of(xs.begin(), xs.end(),
                     [&](const T &x) { return x == xs.front(); });
}

std::optional<Term> Unifier::hole(const std::vector<Int> &values) {
  if (gammas.empty()) {
    gammas = values;
    return var(HoleName);
  }
  Int delta = values[0] - gammas[0];
  for (std::size_t l = 0; l < n_; ++l)
    if (values[l] - gammas[l] != delta)
      return std::nullopt;
  return add(var(HoleName), lit(delta));
}

std::optional<Term> Unifier::term(const std::vector<Term> &ts) {
  if (allEqual(ts))
    return ts.front();

  std::vector<Term> bases;
  std::vector<Int> consts;
  for (const Term &t : ts) {
    auto [b, c] = splitConstant(t);
    bases.push_back(b);
    consts.push_back(c);
  }
  if (allEqual(bases)) {
    auto h = hole(consts);
    if (!h)
      return std::nullopt;
    return add(bases.front(), *h);
  }
  if (!allEqual(consts))
    return std::nullopt;

  const Term &head = bases.front();
  for (const Term &b : bases) {
    if (b.kind() != head.kind() || b.args().size() != head.args().size())
      return std::nullopt;
    if ((b.kind() == TermKind::Var || b.kind() == TermKind::Select) &&
        b.name() != head.name())
      return std::nullopt;
    if (b.kind() == TermKind::Mul && b.value() != head.value())
      return std::nullopt;
    if (b.kind() == TermKind::Const)
      return std::nullopt;
  }

  std::vector<Term> children;
  for (std::size_t a = 0; a < head.args().size(); ++a) {
    std::vector<Term> column;
    for (const Term &b : bases)
      column.push_back(b.args()[a]);
    auto c = term(column);
    if (!c)
      return std::nullopt;
    children.push_back(*c);
  }

  Term rebuilt;
  switch (head.kind()) {
  case TermKind::Var:
    rebuilt = head;
    break;
  case TermKind::Select:
    rebuilt = select(head.name(), children[0]);
    break;
  case TermKind::Add:
    rebuilt = add(children[0], children[1]);
    break;
  case TermKind::Mul:
    rebuilt = mul(head.value(), children[0]);
    break;
  case TermKind::Ite: {
    std::vector<Formula> guards;
    for (const Term &b : bases)
      guards.push_back(b.guard());
    auto g = formula(guards);
    if (!g)
      return std::nullopt;
    rebuilt = ite(*g, children[0], children[1]);
    break;
  }
  case TermKind::Const:
    return std::nullopt;
  }
  return add(rebuilt, lit(consts.front()));
}

std::optional<Formula> Unifier::formula(const std::vector<Formula> &fs) {
  if (allEqual(fs))
    return fs.front();
  const Formula &head = fs.front();
  for (const Formula &f : fs) {
    if (f.kind() != head.kind() ||
        f.operands().size() != head.operands().size())
      return std::nullopt;
    if (f.kind() == FormulaKind::Cmp && f.op() != head.op())
      return std::nullopt;
    if (f.kind() == FormulaKind::Forall && f.boundVar() != head.boundVar())
      return std::nullopt;
  }

  auto termColumn = [&](auto get) -> std::optional<Term> {
    std::vector<Term> column;
    for (const Formula &f : fs)
      column.push_back(get(f));
    return term(column);
  };
  std::vector<Formula> ops;
  for (std::size_t o = 0; o < head.operands().size(); ++o) {
    std::vector<Formula> column;
    for (const Formula &f : fs)
      column.push_back(f.operands()[o]);
    auto g = formula(column);
    if (!g)
      return std::nullopt;
    ops.push_back(*g);
  }

  switch (head.kind()) {
  case FormulaKind::Cmp: {
    auto l = termColumn([](const Formula &f) { return f.lhs(); });
    if (!l)
      return std::nullopt;
    auto r = termColumn([](const Formula &f) { return f.rhs(); });
    if (!r)
      return std::nullopt;
    return cmp(head.op(), *l, *r);
  }
  case FormulaKind::Not:
    return negate(ops[0]);
  case FormulaKind::And:
    return conj(ops);
  case FormulaKind::Or:
    return disj(ops);
  case FormulaKind::Implies:
    return implies(ops[0], ops[1]);
  case FormulaKind::Forall: {
    auto lo = termColumn([](const Formula &f) { return f.lower(); });
    if (!lo)
      return std::nullopt;
    auto hi = termColumn([](const Formula &f) { return f.upper(); });
    if (!hi)
      return std::nullopt;
    return forallRange(head.boundVar(), *lo, *hi, ops[0]);
  }
  default:
    return std::nullopt;
  }
}

template <typename E>
std::optional<Generalization<E>> verified(const std::optional<E> &skeleton,
                                          const Unifier &u,
                                          const std::vector<E> &instances) {
  if (!skeleton)
    return std::nullopt;
  for (std::size_t l = 0; l < instances.size(); ++l) {
    E inst = u.gammas.empty()
                 ? *skeleton
                 : substitute(*skeleton, HoleName, lit(u.gammas[l]));
    if (!(inst == instances[l]))
      return std::nullopt;
  }
  return Generalization<E>{*skeleton, u.gammas};
}

template <typename E>
std::optional<E> synthesize(const std::vector<std::pair<Int, E>> &points,
                            const std::string &x) {
  if (points.empty())
    return std::nullopt;
  std::vector<E> instances;
  for (const auto &p : points)
    instances.push_back(p.second);
  auto gen = antiUnify(instances);
  if (!gen)
    return std::nullopt;
  if (gen->gammas.empty())
    return gen->skeleton;
  std::vector<std::pair<Int, Int>> samples;
  for (std::size_t l = 0; l < points.size(); ++l)
    samples.emplace_back(points[l].first, gen->gammas[l]);
  auto ab = synthesizeLinearTerm(samples);
  if (!ab)
    return std::nullopt;
  E result = substitute(gen->skeleton, HoleName,
                        add(mul(ab->first, var(x)), lit(ab->second)));
  for (const auto &[d, inst] : points)
    if (!(substitute(result, x, lit(d)) == inst))
      return std::nullopt;
  return result;
}

} // namespace

std::optional<Generalization<Formula>>
antiUnify(const std::vector<Formula> &instances) {
  if (instances.empty())
    return std::nullopt;
  Unifier u(instances.size());
  return verified(u.formula(instances), u, instances);
}

std::optional<Generalization<Term>>
antiUnify(const std::vector<Term> &instances) {
  if (instances.empty())
    return std::nullopt;
  Unifier u(instances.size());
  return verified(u.term(instances), u, instances);
}

std::optional<std::pair<Int, Int>>
synthesizeLinearTerm(const std::vector<std::pair<Int, Int>> &points) {
  if (points.empty())
    return std::nullopt;
  if (points.size() == 1)
    return std::pair<Int, Int>{0, points[0].second};
  auto [d0, g0] = points[0];
  auto [d1, g1] = points[1];
  if (d0 == d1)
    return std::nullopt;
  if ((g1 - g0) % (d1 - d0) != 0)
    return std::nullopt;
  Int a = (g1 - g0) / (d1 - d0);
  Int b = g0 - a * d0;
  for (const auto &[d, g] : points)
    if (a * d + b != g)
      return std::nullopt;
  return std::pair<Int, Int>{a, b};
}

std::optional<Formula>
synthesizeFormula(const std::vector<std::pair<Int, Formula>> &points,
                  const std::string &x) {
  return synthesize(points, x);
}

std::optional<Term>
synthesizeTerm(const std::vector<std::pair<Int, Term>> &points,
               const std::string &x) {
  return synthesize(points, x);
}

//===----------------------------------------------------------------------===//
// Instance matching
//===----------------------------------------------------------------------===//

namespace {

/// Solves p[t/v] = q for t when p = c*v + r with c = +-1.
std::optional<Term> solveLinear(const Term &p, const std::string &v,
                                const Term &q) {
  Term r = substitute(p, v, lit(0));
  Term c = sub(substitute(p, v, lit(1)), r);
  if (!c.isConst() || (c.value() != 1 && c.value() != -1))
    return std::nullopt;
  if (!(add(mul(c.value(), var(v)), r) == p))
    return std::nullopt;
  return mul(c.value(), sub(q, r));
}

void candidates(const Term &p, const std::string &v, const Term &q,
                std::vector<Term> &out) {
  if (!mentions(p, v))
    return;
  if (auto t = solveLinear(p, v, q))
    out.push_back(*t);
  if (p.kind() != q.kind() || p.args().size() != q.args().size())
    return;
  if (p.kind() == TermKind::Select && p.name() != q.name())
    return;
  for (std::size_t a = 0; a < p.args().size(); ++a)
    candidates(p.args()[a], v, q.args()[a], out);
}

void candidates(const Formula &p, const std::string &v, const Formula &q,
                std::vector<Term> &out) {
  if (p.kind() != q.kind() || p.operands().size() != q.operands().size())
    return;
  if (p.kind() == FormulaKind::Cmp || p.kind() == FormulaKind::Forall) {
    candidates(p.lhs(), v, q.lhs(), out);
    candidates(p.rhs(), v, q.rhs(), out);
  }
  for (std::size_t o = 0; o < p.operands().size(); ++o)
    candidates(p.operands()[o], v, q.operands()[o], out);
}

} // namespace

std::optional<Term> matchInstance(const Formula &pattern, const std::string &v,
                                  const Formula &target) {
  if (!mentions(pattern, v))
    return std::nullopt;
  std::vector<Term> found;
  candidates(pattern, v, target, found);
  for (const Term &t : found)
    if (substitute(pattern, v, t) == target)
      return t;
  return std::nullopt;
}

} // namespace qsm
