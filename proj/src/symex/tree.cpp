//===-- tree.cpp - Execution trees ------------------------------*- C++ -*-===//

#include "qsm/symex.h"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>

namespace qsm {

ExecTree::ExecTree(SymbolicState rootState) {
  ExecNode root;
  root.id = 0;
  root.cond = truth(true);
  root.state = std::move(rootState);
  nodes_.push_back(std::move(root));
}

NodeId ExecTree::addChild(NodeId parent, Formula cond, SymbolicState state) {
  ExecNode n;
  n.id = nodes_.size();
  n.parent = parent;
  n.cond = std::move(cond);
  n.state = std::move(state);
  nodes_.push_back(std::move(n));
  nodes_.at(parent).children.push_back(nodes_.back().id);
  if (nodes_[parent].status == NodeStatus::Active)
    nodes_[parent].status = NodeStatus::Internal;
  return nodes_.back().id;
}

std::vector<NodeId> ExecTree::liveNodes() const {
  std::vector<NodeId> out;
  for (const ExecNode &n : nodes_)
    if (n.status != NodeStatus::Removed)
      out.push_back(n.id);
  return out;
}

std::vector<NodeId> ExecTree::leaves() const {
  std::vector<NodeId> out;
  for (const ExecNode &n : nodes_)
    if (n.status != NodeStatus::Removed && n.children.empty())
      out.push_back(n.id);
  return out;
}

std::vector<NodeId> ExecTree::exitedLeaves() const {
  std::vector<NodeId> out;
  for (const ExecNode &n : nodes_)
    if (n.status == NodeStatus::Exited)
      out.push_back(n.id);
  return out;
}

std::vector<NodeId> ExecTree::path(NodeId from, NodeId to) const {
  std::vector<NodeId> out;
  for (NodeId n = to;; n = nodes_.at(n).parent) {
    if (n == NoNode)
      throw Error("no tree path from node " + std::to_string(from) +
                  " to node " + std::to_string(to));
    out.push_back(n);
    if (n == from)
      break;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

Formula ExecTree::tpc(NodeId from, NodeId to) const {
  std::vector<Formula> cs;
  for (NodeId n : path(from, to))
    cs.push_back(nodes_[n].cond);
  return conj(cs);
}

Formula ExecTree::tpcTail(NodeId from, NodeId to) const {
  std::vector<NodeId> p = path(from, to);
  std::vector<Formula> cs;
  for (std::size_t i = 1; i < p.size(); ++i)
    cs.push_back(nodes_[p[i]].cond);
  return conj(cs);
}

bool ExecTree::isAncestor(NodeId anc, NodeId n) const {
  for (; n != NoNode; n = nodes_.at(n).parent)
    if (n == anc)
      return true;
  return false;
}

std::size_t ExecTree::depth(NodeId n) const {
  std::size_t d = 0;
  for (n = nodes_.at(n).parent; n != NoNode; n = nodes_[n].parent)
    ++d;
  return d;
}

NodeId ExecTree::lca(NodeId a, NodeId b) const {
  std::size_t da = depth(a), db = depth(b);
  for (; da > db; --da)
    a = nodes_[a].parent;
  for (; db > da; --db)
    b = nodes_[b].parent;
  while (a != b) {
    a = nodes_[a].parent;
    b = nodes_[b].parent;
  }
  return a;
}

void ExecTree::removeSubtree(NodeId n) {
  ExecNode &node = nodes_.at(n);
  if (node.parent != NoNode) {
    auto &siblings = nodes_[node.parent].children;
    siblings.erase(std::remove(siblings.begin(), siblings.end(), n),
                   siblings.end());
  }
  std::vector<NodeId> work{n};
  while (!work.empty()) {
    NodeId m = work.back();
    work.pop_back();
    ExecNode &x = nodes_[m];
    x.status = NodeStatus::Removed;
    work.insert(work.end(), x.children.begin(), x.children.end());
  }
}

NodeId ExecTree::collapse(NodeId p) {
  ExecNode &pn = nodes_.at(p);
  if (pn.children.size() != 1 || pn.parent == NoNode)
    throw Error("collapse needs a non-root node with one child");
  NodeId c = pn.children.front();
  ExecNode &cn = nodes_[c];
  cn.cond = conj({pn.cond, cn.cond});
  cn.parent = pn.parent;
  auto &siblings = nodes_[pn.parent].children;
  std::replace(siblings.begin(), siblings.end(), p, c);
  pn.children.clear();
  pn.status = NodeStatus::Removed;
  return c;
}

namespace {

const char *statusName(NodeStatus s) {
  switch (s) {
  case NodeStatus::Active:
    return "active";
  case NodeStatus::Internal:
    return "internal";
  case NodeStatus::Exited:
    return "exited";
  case NodeStatus::Terminated:
    return "terminated";
  case NodeStatus::Removed:
    return "removed";
  }
  return "?";
}

} // namespace

std::string hashHex(HashValue h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json ExecTree::toJson() const {
  nlohmann::json nodes = nlohmann::json::array();
  for (const ExecNode &n : nodes_) {
    if (n.status == NodeStatus::Removed)
      continue;
    nlohmann::json j = {{"id", n.id},
                        {"parent", n.parent == NoNode
                                       ? nlohmann::json(nullptr)
                                       : nlohmann::json(n.parent)},
                        {"children", n.children},
                        {"cond", toString(n.cond)},
                        {"hash", hashHex(structuralHash(n.cond))},
                        {"status", statusName(n.status)},
                        {"state", qsm::toJson(n.state)}};
    if (n.final)
      j["final"] = qsm::toJson(*n.final);
    nodes.push_back(std::move(j));
  }
  return {{"root", root()}, {"nodes", std::move(nodes)}};
}

} // namespace qsm
