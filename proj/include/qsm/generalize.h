//===-- generalize.h - Anti-unification and linear templates ----*- C++ -*-===//
//
// Finds a common skeleton for a family of expressions that differ only in one
// integer constant (up to fixed per-position offsets), and fits a linear term
// a*x + b through the observed constants.
//
//===----------------------------------------------------------------------===//
#pragma once

#include "qsm/expr.h"

#include <optional>
#include <utility>
#include <vector>

namespace qsm {

/// Name of the hole symbol used in generalized skeletons.
inline constexpr const char *HoleName = "?y";

template <typename E> struct Generalization {
  /// Skeleton mentioning HoleName (or not at all when every instance is
  /// identical).
  E skeleton;
  /// Value of the hole for each instance, empty when there is no hole.
  std::vector<Int> gammas;
};

std::optional<Generalization<Formula>>
antiUnify(const std::vector<Formula> &instances);
std::optional<Generalization<Term>> antiUnify(const std::vector<Term> &instances);

/// Integers a, b with a*d + b = gamma at every point. One point yields (0, gamma).
std::optional<std::pair<Int, Int>>
synthesizeLinearTerm(const std::vector<std::pair<Int, Int>> &points);

/// phi(x) with phi[d/x] syntactically equal to the given instance at every
/// point, built as skeleton[a*x + b / hole].
std::optional<Formula>
synthesizeFormula(const std::vector<std::pair<Int, Formula>> &points,
                  const std::string &x);
std::optional<Term>
synthesizeTerm(const std::vector<std::pair<Int, Term>> &points,
               const std::string &x);

/// A term t with pattern[t/v] syntactically equal to target, provided the
/// pattern mentions v only through sub-terms of the form +-v + r.
std::optional<Term> matchInstance(const Formula &pattern, const std::string &v,
                                  const Formula &target);

} // namespace qsm
