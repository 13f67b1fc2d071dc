//===-- model.h - Concrete assignments and evaluation -----------*- C++ -*-===//
#pragma once

#include "qsm/expr.h"

#include <map>
#include <optional>
#include <string>

namespace qsm {

/// An integer array as a default value plus explicit exceptions.
struct ArrayModel {
  Int fallback = 0;
  std::map<Int, Int> cells;

  Int at(Int offset) const;
  void set(Int offset, Int value);
  /// Drops exceptions that equal the default.
  void normalize();
  friend bool operator==(const ArrayModel &a, const ArrayModel &b);
};

struct Model {
  std::map<std::string, Int> scalars;
  std::map<std::string, ArrayModel> arrays;

  bool hasScalar(const std::string &s) const { return scalars.count(s) != 0; }
  bool hasArray(const std::string &a) const { return arrays.count(a) != 0; }

  /// A copy with `a[offset] = value`.
  Model updateSelect(const std::string &a, Int offset, Int value) const;
  /// A copy with scalar `s` bound to `value`.
  Model with(const std::string &s, Int value) const;
  /// Assigns 0 (resp. the all-zero array) to every free symbol of `f` that is
  /// not yet assigned.
  void complete(const Formula &f);

  friend bool operator==(const Model &a, const Model &b);
};

std::string toString(const Model &m);

enum class Outcome { Sat, Unsat, Unknown };
std::string toString(Outcome o);

/// Answer of a satisfiability check; `model` is present for Sat answers that
/// come with a model.
struct SatResult {
  Outcome outcome = Outcome::Unknown;
  std::optional<Model> model;
  std::string diagnostic;
};

Int evaluate(const Model &m, const Term &t);
bool evaluate(const Model &m, const Formula &f);

} // namespace qsm
