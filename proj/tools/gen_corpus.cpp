//===-- gen_corpus.cpp - Synthetic quantified query corpus ------*- C++ -*-===//
//
// Writes SMT-LIB scripts of conjunctions of quantifier-free clauses and
// bounded universal clauses over integer arrays. The output depends only on
// the seed.
//
//===----------------------------------------------------------------------===//

#include "qsm/expr.h"
#include "qsm/smtlib.h"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace fs = std::filesystem;
using namespace qsm;

namespace {

class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  /// Uniform in [lo, hi].
  Int range(Int lo, Int hi) {
    return lo + static_cast<Int>(gen_() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  bool coin() { return range(0, 1) == 1; }
  template <typename T> const T &pick(const std::vector<T> &xs) {
    return xs[static_cast<std::size_t>(range(0, static_cast<Int>(xs.size()) - 1))];
  }

private:
  std::mt19937_64 gen_;
};

const Term K = var("k");
const Term N = var("n");

Formula quantified(const std::string &a, Int off, CmpOp op, Int c,
                   bool withBound) {
  Term i = var("i");
  Formula body = cmp(op, select(a, i + off), lit(c));
  if (withBound)
    body = conj({gt(N, i - 1), body});
  return forallRange("i", lit(1), K, body);
}

/// Example-5.1-like: a terminator at n, a marker at k-1 and a quantified
/// non-zero prefix.
Formula exampleShape(Int kHi, Int marker) {
  return conj({eq(select("s", N), lit(0)), inRange(lit(1), K, lit(kHi)),
               eq(select("s", K - 1), lit(marker)),
               quantified("s", -1, CmpOp::Ne, 0, false)});
}

Formula stripFamily(Rng &r) {
  // The quantifier range is empty.
  return conj({eq(K, lit(0)), le(N, lit(r.range(1, 9))),
               quantified(r.coin() ? "s" : "t", -1,
                          r.pick(std::vector<CmpOp>{CmpOp::Ne, CmpOp::Eq,
                                                    CmpOp::Gt}),
                          r.range(0, 9), false),
               eq(select("s", N), lit(r.range(0, 3)))});
}

Formula duplicateFamily(Rng &r) {
  // Constraining the first cell is enough once it is copied across.
  Int k = r.range(2, 6);
  return conj({eq(K, lit(k)),
               quantified("s", -1,
                          r.pick(std::vector<CmpOp>{CmpOp::Ne, CmpOp::Gt}),
                          r.range(0, 4), false),
               ge(N, lit(0))});
}

Formula repairFamily(Rng &r) {
  // The marker cell conflicts with the duplicated value.
  Int k = r.range(3, 9);
  return conj({exampleShape(10, r.range(5, 9)), eq(K, lit(k)), eq(N, lit(k))});
}

Formula randomQuery(Rng &r) {
  std::vector<Formula> parts;
  const Int hi = r.range(1, 10);
  parts.push_back(inRange(lit(r.range(0, 1)), K, lit(hi)));
  const std::vector<CmpOp> ops{CmpOp::Eq, CmpOp::Ne, CmpOp::Lt,
                               CmpOp::Le, CmpOp::Gt, CmpOp::Ge};
  const std::vector<std::string> arrays{"s", "t"};
  const Int nq = r.range(1, 2);
  for (Int q = 0; q < nq; ++q)
    parts.push_back(quantified(r.pick(arrays), r.range(-1, 0), r.pick(ops),
                               r.range(0, 9), r.coin()));
  const Int nf = r.range(1, 3);
  for (Int f = 0; f < nf; ++f) {
    switch (r.range(0, 4)) {
    case 0:
      parts.push_back(cmp(r.pick(ops), select(r.pick(arrays), K - 1),
                          lit(r.range(0, 9))));
      break;
    case 1:
      parts.push_back(
          cmp(r.pick(ops), select(r.pick(arrays), N), lit(r.range(0, 9))));
      break;
    case 2:
      parts.push_back(cmp(r.pick(ops), N, K + r.range(-1, 1)));
      break;
    case 3:
      parts.push_back(cmp(r.pick(ops), N, lit(r.range(0, 10))));
      break;
    default:
      parts.push_back(cmp(r.pick(ops), select(r.pick(arrays), lit(r.range(0, 5))),
                          lit(r.range(0, 9))));
      break;
    }
  }
  return conj(parts);
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Generate a synthetic quantified query corpus"};
  std::uint64_t seed = 20240501;
  int count = 200;
  int perFamily = 10;
  std::string out = "corpus";
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--random", count, "Number of random queries");
  app.add_option("--per-family", perFamily,
                 "Number of queries per structured family");
  app.add_option("--out", out, "Output directory");
  CLI11_PARSE(app, argc, argv);

  Rng rng(seed);
  fs::create_directories(out);
  int written = 0;
  auto emit = [&](const std::string &family, const Formula &f) {
    char name[64];
    std::snprintf(name, sizeof name, "q%04d-%s.smt2", written++, family.c_str());
    std::ofstream os(fs::path(out) / name, std::ios::binary);
    os << "; family: " << family << "\n" << toSmtScript(f);
  };
  for (int i = 0; i < perFamily; ++i)
    emit("strip", stripFamily(rng));
  for (int i = 0; i < perFamily; ++i)
    emit("duplicate", duplicateFamily(rng));
  for (int i = 0; i < perFamily; ++i)
    emit("repair", repairFamily(rng));
  emit("example", exampleShape(10, 8));
  for (int i = 0; i < count; ++i)
    emit("random", randomQuery(rng));
  std::cout << "wrote " << written << " queries to " << out << "\n";
  return 0;
}
