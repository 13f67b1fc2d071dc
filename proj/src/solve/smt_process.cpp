//===-- smt_process.cpp - SMT-LIB solver subprocess -------------*- C++ -*-===//

#include "qsm/solve.h"

#include "qsm/smtlib.h"

#include <cctype>
#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <sstream>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace qsm {

namespace {

constexpr Int MaxFetchRange = 4096;
constexpr int MaxFetchRounds = 8;

using Clock = std::chrono::steady_clock;

} // namespace

struct SmtProcessBackend::Process {
  pid_t pid = -1;
  int in = -1;
  int out = -1;
  std::string buf;

  ~Process() {
    if (in >= 0)
      ::close(in);
    if (out >= 0)
      ::close(out);
    if (pid > 0) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, nullptr, 0);
    }
  }

  bool send(const std::string &text) {
    std::size_t done = 0;
    while (done < text.size()) {
      ssize_t n = ::write(in, text.data() + done, text.size() - done);
      if (n < 0) {
        if (errno == EINTR)
          continue;
        return false;
      }
      done += static_cast<std::size_t>(n);
    }
    return true;
  }

  /// Length of the first complete response in `buf`, or 0.
  std::size_t complete() const {
    std::size_t i = 0;
    while (i < buf.size() && std::isspace(static_cast<unsigned char>(buf[i])))
      ++i;
    if (i == buf.size())
      return 0;
    if (buf[i] != '(') {
      std::size_t nl = buf.find('\n', i);
      return nl == std::string::npos ? 0 : nl + 1;
    }
    int depth = 0;
    for (; i < buf.size(); ++i) {
      char c = buf[i];
      if (c == '"') {
        for (++i; i < buf.size(); ++i)
          if (buf[i] == '"' && !(i + 1 < buf.size() && buf[i + 1] == '"'))
            break;
          else if (buf[i] == '"')
            ++i;
      } else if (c == '|') {
        std::size_t close = buf.find('|', i + 1);
        if (close == std::string::npos)
          return 0;
        i = close;
      } else if (c == '(') {
        ++depth;
      } else if (c == ')' && --depth == 0) {
        return i + 1;
      }
    }
    return 0;
  }

  std::optional<std::string> read(Clock::time_point deadline) {
    for (;;) {
      if (std::size_t n = complete()) {
        std::string r = buf.substr(0, n);
        buf.erase(0, n);
        std::size_t a = r.find_first_not_of(" \t\r\n");
        std::size_t b = r.find_last_not_of(" \t\r\n");
        return r.substr(a, b - a + 1);
      }
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - Clock::now());
      if (left.count() <= 0)
        return std::nullopt;
      pollfd p{out, POLLIN, 0};
      int rc = ::poll(&p, 1, static_cast<int>(left.count()));
      if (rc < 0 && errno == EINTR)
        continue;
      if (rc <= 0)
        return std::nullopt;
      char chunk[4096];
      ssize_t n = ::read(out, chunk, sizeof chunk);
      if (n <= 0)
        return std::nullopt;
      buf.append(chunk, static_cast<std::size_t>(n));
    }
  }
};

std::string SmtProcessBackend::resolvePath(const std::string &path) {
  if (!path.empty())
    return path;
  if (const char *env = std::getenv("QM_BACKEND"); env && *env)
    return env;
  return "z3";
}

SmtProcessBackend::SmtProcessBackend(std::string path,
                                     std::chrono::milliseconds timeout)
    : path_(resolvePath(path)), timeout_(timeout) {}

SmtProcessBackend::~SmtProcessBackend() = default;

bool SmtProcessBackend::available(const std::string &path) {
  SmtProcessBackend b(path, std::chrono::seconds(5));
  return b.solve(truth(true)).outcome == Outcome::Sat;
}

void SmtProcessBackend::restart() { proc_.reset(); }

bool SmtProcessBackend::ensureStarted(std::string &diag) {
  if (proc_)
    return true;
  static const bool ignored = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)ignored;

  int toChild[2], fromChild[2];
  if (::pipe(toChild) != 0)
    return diag = "pipe failed", false;
  if (::pipe(fromChild) != 0) {
    ::close(toChild[0]);
    ::close(toChild[1]);
    return diag = "pipe failed", false;
  }
  std::vector<std::string> args{path_};
  const bool isZ3 = path_.find("z3") != std::string::npos;
  const bool isCvc = path_.find("cvc") != std::string::npos;
  if (isZ3) {
    args.push_back("-in");
    args.push_back("-smt2");
    args.push_back("-t:" + std::to_string(timeout_.count()));
  } else if (isCvc) {
    args.push_back("--lang=smt2");
    args.push_back("--incremental");
    args.push_back("--tlimit-per=" + std::to_string(timeout_.count()));
  }
  std::vector<char *> argv;
  for (std::string &a : args)
    argv.push_back(a.data());
  argv.push_back(nullptr);

  pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {toChild[0], toChild[1], fromChild[0], fromChild[1]})
      ::close(fd);
    return diag = "fork failed", false;
  }
  if (pid == 0) {
    ::dup2(toChild[0], STDIN_FILENO);
    ::dup2(fromChild[1], STDOUT_FILENO);
    int devnull = ::open("/dev/null", O_WRONLY);
    if (devnull >= 0)
      ::dup2(devnull, STDERR_FILENO);
    for (int fd : {toChild[0], toChild[1], fromChild[0], fromChild[1]})
      ::close(fd);
    ::execvp(argv[0], argv.data());
    ::_exit(127);
  }
  ::close(toChild[0]);
  ::close(fromChild[1]);
  proc_ = std::make_unique<Process>();
  proc_->pid = pid;
  proc_->in = toChild[1];
  proc_->out = fromChild[0];
  ::fcntl(proc_->in, F_SETFD, FD_CLOEXEC);
  ::fcntl(proc_->out, F_SETFD, FD_CLOEXEC);
  return true;
}

namespace {

/// Array value forms: ((as const (Array Int Int)) v), (store a i v), and
/// (lambda ((x Int)) (ite (= x c) v ...)).
std::optional<ArrayModel> arrayFromValue(const SExpr &e) {
  if (!e.isList || e.list.empty())
    return std::nullopt;
  const SExpr &head = e.list[0];
  if (head.isList && head.list.size() == 3 && head.list[0].isAtom("as") &&
      head.list[1].isAtom("const") && e.list.size() == 2) {
    ArrayModel a;
    a.fallback = parseSmtInt(e.list[1]);
    return a;
  }
  if (head.isAtom("store") && e.list.size() == 4) {
    auto inner = arrayFromValue(e.list[1]);
    if (!inner)
      return std::nullopt;
    inner->set(parseSmtInt(e.list[2]), parseSmtInt(e.list[3]));
    return inner;
  }
  if (head.isAtom("lambda") && e.list.size() == 3 && e.list[1].isList &&
      e.list[1].list.size() == 1 && e.list[1].list[0].isList) {
    const std::string x = e.list[1].list[0].list.at(0).atom;
    ArrayModel a;
    std::vector<std::pair<Int, Int>> cells;
    const SExpr *body = &e.list[2];
    while (body->isList && body->list.size() == 4 &&
           body->list[0].isAtom("ite")) {
      const SExpr &g = body->list[1];
      if (!g.isList || g.list.size() != 3 || !g.list[0].isAtom("="))
        return std::nullopt;
      const SExpr *other = g.list[1].isAtom(x)   ? &g.list[2]
                           : g.list[2].isAtom(x) ? &g.list[1]
                                                 : nullptr;
      if (!other)
        return std::nullopt;
      cells.emplace_back(parseSmtInt(*other), parseSmtInt(body->list[2]));
      body = &body->list[3];
    }
    a.fallback = parseSmtInt(*body);
    for (auto it = cells.rbegin(); it != cells.rend(); ++it)
      a.set(it->first, it->second);
    return a;
  }
  return std::nullopt;
}

void selectsUnder(const Formula &f, const Model &m,
                  std::vector<std::pair<std::string, Int>> &out);

void selectsUnder(const Term &t, const Model &m,
                  std::vector<std::pair<std::string, Int>> &out) {
  if (t.kind() == TermKind::Select) {
    try {
      out.emplace_back(t.name(), evaluate(m, t.args()[0]));
    } catch (const EvalError &) {
    }
  }
  if (t.kind() == TermKind::Ite)
    selectsUnder(t.guard(), m, out);
  for (const Term &a : t.args())
    selectsUnder(a, m, out);
}

void selectsUnder(const Formula &f, const Model &m,
                  std::vector<std::pair<std::string, Int>> &out) {
  switch (f.kind()) {
  case FormulaKind::True:
  case FormulaKind::False:
    return;
  case FormulaKind::Cmp:
    selectsUnder(f.lhs(), m, out);
    selectsUnder(f.rhs(), m, out);
    return;
  case FormulaKind::Forall: {
    selectsUnder(f.lower(), m, out);
    selectsUnder(f.upper(), m, out);
    Int lo, hi;
    try {
      lo = evaluate(m, f.lower());
      hi = evaluate(m, f.upper());
    } catch (const EvalError &) {
      return;
    }
    if (hi - lo > MaxFetchRange)
      return;
    for (Int v = lo; v <= hi; ++v)
      selectsUnder(f.body(), m.with(f.boundVar(), v), out);
    return;
  }
  default:
    for (const Formula &g : f.operands())
      selectsUnder(g, m, out);
  }
}

} // namespace

SatResult SmtProcessBackend::solve(const Formula &f) {
  std::string diag;
  if (!ensureStarted(diag))
    return {Outcome::Unknown, std::nullopt, diag};
  const auto deadline = Clock::now() + timeout_ + std::chrono::seconds(5);
  auto fail = [&](std::string why) -> SatResult {
    restart();
    return {Outcome::Unknown, std::nullopt, std::move(why)};
  };

  std::string script =
      "(reset)\n(set-option :produce-models true)\n" + toSmtScript(f);
  if (!proc_->send(script))
    return fail("cannot write to solver process '" + path_ + "'");

  std::string errors;
  std::optional<std::string> answer;
  for (;;) {
    answer = proc_->read(deadline);
    if (!answer)
      return fail(errors.empty() ? "solver timed out or exited" : errors);
    if (answer->rfind("(error", 0) == 0) {
      errors += *answer;
      continue;
    }
    break;
  }
  if (!errors.empty())
    return {Outcome::Unknown, std::nullopt, errors};
  if (*answer == "unsat")
    return {Outcome::Unsat, std::nullopt, {}};
  if (*answer != "sat")
    return {Outcome::Unknown, std::nullopt, "solver answered " + *answer};

  auto getValues = [&](const std::vector<std::string> &terms)
      -> std::optional<std::vector<SExpr>> {
    std::string cmd = "(get-value (";
    for (const std::string &t : terms)
      cmd += t + " ";
    cmd += "))\n";
    if (!proc_->send(cmd))
      return std::nullopt;
    auto resp = proc_->read(deadline);
    if (!resp || resp->rfind("(error", 0) == 0)
      return std::nullopt;
    std::vector<SExpr> parsed = parseSExprs(*resp);
    if (parsed.size() != 1 || !parsed[0].isList ||
        parsed[0].list.size() != terms.size())
      return std::nullopt;
    std::vector<SExpr> values;
    for (const SExpr &pair : parsed[0].list) {
      if (!pair.isList || pair.list.size() != 2)
        return std::nullopt;
      values.push_back(pair.list[1]);
    }
    return values;
  };

  Model m;
  try {
    Symbols syms = freeSymbols(f);
    if (!syms.scalars.empty()) {
      std::vector<std::string> names;
      for (const std::string &s : syms.scalars)
        names.push_back(toSmtLib(var(s)));
      auto vals = getValues(names);
      if (!vals)
        return fail("malformed get-value response");
      for (std::size_t i = 0; i < names.size(); ++i)
        m.scalars[syms.scalars[i]] = parseSmtInt((*vals)[i]);
    }
    for (const std::string &a : syms.arrays) {
      auto vals = getValues({smtSymbol(a)});
      if (!vals)
        return fail("malformed get-value response");
      if (auto arr = arrayFromValue((*vals)[0]))
        m.arrays[a] = *arr;
      else
        m.arrays[a];
    }
    std::set<std::pair<std::string, Int>> fetched;
    for (int round = 0; round < MaxFetchRounds; ++round) {
      std::vector<std::pair<std::string, Int>> cells;
      selectsUnder(f, m, cells);
      std::vector<std::pair<std::string, Int>> pending;
      for (auto &c : cells)
        if (fetched.insert(c).second)
          pending.push_back(c);
      if (pending.empty())
        break;
      std::vector<std::string> terms;
      for (auto &[a, o] : pending)
        terms.push_back(toSmtLib(select(a, lit(o))));
      auto vals = getValues(terms);
      if (!vals)
        return fail("malformed get-value response");
      for (std::size_t i = 0; i < pending.size(); ++i)
        m.arrays[pending[i].first].set(pending[i].second,
                                       parseSmtInt((*vals)[i]));
    }
  } catch (const Error &e) {
    return fail(std::string("cannot read model: ") + e.what());
  }
  return {Outcome::Sat, std::move(m), {}};
}

} // namespace qsm
